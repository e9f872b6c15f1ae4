#pragma once

#include <functional>
#include <vector>

namespace ahx {

struct QuadRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

/// n-point Gauss–Legendre rule on [-1, 1]; cached per n, thread-safe.
const QuadRule& gauss_legendre(int n);

/// Rule mapped to [a, b].
QuadRule gauss_legendre(int n, double a, double b);

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = true;
};

/// Adaptive Gauss–Kronrod (7-15) with global error control.
AdaptiveResult integrate_gk(const std::function<double(double)>& f, double a, double b, double abs_tol = 1e-10,
                            double rel_tol = 1e-10, int max_intervals = 2000);

/// Adaptive GK over consecutive breakpoints (sorted, at least two).
AdaptiveResult integrate_gk(const std::function<double(double)>& f, const std::vector<double>& breaks,
                            double abs_tol = 1e-10, double rel_tol = 1e-10, int max_intervals = 4000);

}  // namespace ahx
