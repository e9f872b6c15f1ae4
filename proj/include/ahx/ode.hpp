#pragma once

// Dormand–Prince 5(4) with PI step control and the pair's 4th-order dense output.

#include "ahx/types.hpp"

#include <functional>
#include <vector>

namespace ahx {

using State = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxDim, 1>;

/// Returns false when y lies outside the right-hand side's domain.
using OdeRhs = std::function<bool(double t, const State& y, State& dy)>;

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 0.0;  // 0: automatic
  double h_max = 0.0;   // 0: unbounded
  int max_steps = 200000;
};

struct OdeStats {
  int steps = 0;
  int rejected = 0;
  int rhs_evals = 0;
  double max_err = 0.0;  // largest accepted scaled error estimate
};

/// Interpolant over one accepted step [t0, t0 + h].
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  std::array<State, 5> rc;

  double t1() const { return t0 + h; }
  State eval(double t) const;
  /// d/dt of the interpolant.
  State deriv(double t) const;
};

enum class OdeStatus { kCompleted, kStopped, kDomain, kStepUnderflow, kMaxSteps };

struct OdeResult {
  OdeStatus status = OdeStatus::kCompleted;
  double t_end = 0.0;
  State y_end;
  OdeStats stats;
  std::vector<DenseStep> dense;   // filled when requested
  std::vector<double> step_sizes;  // accepted steps, for replay
};

/// Called after every accepted step; returning false stops the integration.
using StepObserver = std::function<bool(const DenseStep&)>;

OdeResult dopri5(const OdeRhs& rhs, double t0, const State& y0, double t1, const OdeOptions& opts,
                 bool keep_dense = false, const StepObserver& observer = nullptr);

/// Fixed step sequence (no error control). Used for noise-free finite differences
/// of a flow around a reference trajectory.
OdeResult dopri5_replay(const OdeRhs& rhs, double t0, const State& y0, const std::vector<double>& steps);

}  // namespace ahx
