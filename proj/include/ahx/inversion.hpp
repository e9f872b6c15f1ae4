#pragma once

// Injectivity certificates, regularized reconstruction and empirical stability ratios
// for an assembled operator matrix.

#include "ahx/normalop.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace ahx {

struct CertificateOptions {
  /// All Gram eigenvalues up to this many columns.
  int exact_limit = 2500;
  /// Up to here: LU/QR of Ã and Lanczos on (ÃᵀÃ)⁻¹. Beyond: Lanczos on ÃᵀÃ.
  int dense_limit = 12000;
  int lanczos_max_iter = 400;
  double lanczos_tol = 1e-8;
  std::uint64_t seed = 1;
};

struct Certificate {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  /// "zero", "wide", "gram-eig", "lu-inverse-lanczos", "qr-inverse-lanczos" or "lanczos"
  std::string method;
  int iterations = 0;
  /// Lanczos: residual of the Ritz pair that determines σ_min, relative to its Ritz value.
  double residual = 0.0;
};

/// Extreme singular values of W_out^{1/2} A W_in^{-1/2} with the trapezoid node weights,
/// i.e. of A as a map L²(input nodes) → L²(output nodes).
Certificate injectivity_certificate(const OperatorMatrix& m, const CertificateOptions& opts = {});
/// Same for a bare matrix with unit weights.
Certificate injectivity_certificate(const Eigen::MatrixXd& A, const CertificateOptions& opts = {});

struct ReconstructOptions {
  /// Ridge parameter; negative selects 1e-6 · ‖AᵀA‖ (power-iteration estimate).
  double reg = -1.0;
  double tol = 1e-8;
  int max_iter = 500;
  /// Landweber iteration f ← f + c Aᵀ(d − A f), c = 1/‖AᵀA‖ (Neumann series of (cAᵀA)⁻¹).
  bool neumann = false;
};

struct Reconstruction {
  Eigen::VectorXd f;
  int iterations = 0;
  bool converged = false;
  double reg = 0.0;
  std::vector<double> residual_history;  // relative normal-equation residuals
};

/// Conjugate gradients on (AᵀWA + reg·W_in)f = AᵀW d in the weighted inner products.
Reconstruction reconstruct(const OperatorMatrix& m, const Eigen::VectorXd& data, const ReconstructOptions& opts = {});

/// ‖A‖² estimate (largest eigenvalue of the weighted Gram matrix) by power iteration.
double gram_norm_estimate(const OperatorMatrix& m, int iterations = 30);

/// Weighted relative L² error ‖a − b‖/‖b‖ with node weights w.
double relative_l2_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& w);

struct StabilityResult {
  double ratio = 0.0;  // max ‖u‖_{L²} / ‖Au‖_{H^{1,0}}
  bool injectivity_failure = false;
  int worst_probe = -1;
};

/// Probes live on the input nodes; Au is placed on the output grid (zero off the rows)
/// and measured with discrete_sc_norm(k = 1, β = 0).
StabilityResult stability_ratio(const OperatorMatrix& m, const SpatialGrid& grid,
                                const std::vector<Eigen::VectorXd>& probes);

/// 20 random smooth bumps plus the monomials 1, x, y_α restricted to the input nodes.
std::vector<Eigen::VectorXd> make_probes(const OperatorMatrix& m, const SpatialGrid& grid, std::uint64_t seed,
                                         int random_bumps = 20);

/// Samples f at the matrix's input nodes.
Eigen::VectorXd sample_on_columns(const OperatorMatrix& m, const SpatialGrid& grid, const ScalarField& f);

}  // namespace ahx
