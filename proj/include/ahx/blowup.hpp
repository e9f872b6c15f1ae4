#pragma once

// The blown-up double space near the front face: the left polar chart
// (x, y, R, θ) with x̃ = x + x²R X̂, ỹ = y + xR Ŷ, its right-factor mirror, the
// defining functions and density factor, the lifted kernel K and its diagonal limit,
// exponential decay along rays, and kernel-difference diagnostics.
//
// Lifted kernels are densities in dR dθ multiplied by (R + 1)/(2 + xRX̂)ⁿ; magnitudes
// depend on that coordinate-induced reference density.

#include "ahx/normalop.hpp"

#include <vector>

namespace ahx {

struct BlowupPoint {
  double x = 0.0;
  Vec y;
  double R = 0.0;
  Vec theta;  // (X̂, Ŷ), |θ| = 1

  int n() const { return static_cast<int>(y.size()); }
  double X_hat() const { return theta[0]; }
  Vec Y_hat() const { return theta.tail(theta.size() - 1); }
  /// Left point z = (x, y).
  Vec left() const;
  /// Right point z̃ = (x + x²RX̂, y + xRŶ).
  Vec right() const;
};

/// Normalizes θ and checks x ≥ 0, R ≥ 0.
BlowupPoint make_blowup_point(double x, const Vec& y, double R, const Vec& theta);

struct BlowupCoords {
  BlowupPoint pt;
  bool diagonal = false;  // R = 0; θ unset
};

/// Left chart: X = (x̃/x − 1)/x, Y = (ỹ − y)/x.
BlowupCoords to_blowup(const Vec& z, const Vec& zt);
/// Right chart: X̃ = (x − x̃)/x̃², Ỹ = (y − ỹ)/x̃, based at z̃.
BlowupCoords to_blowup_right(const Vec& z, const Vec& zt);

struct DefiningFunctions {
  double x01, x10, x11;
};

/// x₀₁ = (1 + u)/(2 + u), x₁₀ = 1/(2 + u), x₁₁ = (2 + u)²/(1 + R) with u = xRX̂.
DefiningFunctions defining_functions(double x, double R, double X_hat);

/// (R + 1)⁻¹ (2 + xRX̂)ⁿ.
double density_factor(int n, double x, double R, double X_hat);

/// 2^{1−n} χ(X̂/|Ŷ|) |Ẑ|^{−n}, Ẑ = (xX̂, Ŷ); 0 when |Ŷ| = 0.
double diagonal_limit(double x, const Vec& theta, const CutoffProfile& chi);

struct LiftedKernel {
  double value = 0.0;
  double G_ZZ = 0.0;     // G_{ij} Ẑ^i Ẑ^j = |exp⁻¹|² / (xR)²
  double P = 0.0;
  double inv_jacobian = 1.0;
  double downstairs = 0.0;  // κ(z, z̃) against dz̃
  /// κ · x^{n+2} Rⁿ / density_factor; equals value up to rounding.
  double from_downstairs = 0.0;
  bool on_diagonal = false;
};

/// K at a blow-up point for the operator's field, σ and η. R = 0 returns the diagonal limit.
LiftedKernel lifted_kernel(const NormalOperator& op, const BlowupPoint& pt);

struct DecayScan {
  std::vector<double> R, K;
  double slope = 0.0;  // least-squares slope of log|K| vs R over K ≠ 0
  int fitted = 0;
  bool vanishes_identically = false;
};

/// Fits log|K| along the ray (x, y, θ) over the R grid. Requires X̂ ≥ ½.
DecayScan decay_scan(const NormalOperator& op, double x, const Vec& y, const Vec& theta,
                     const std::vector<double>& R_grid);

struct DiagonalFit {
  std::vector<double> R, remainder;
  double loglog_slope = 0.0;  // of log|K − limit| vs log R over R ≤ R_max/4
  double max_ratio = 0.0;     // max |K − limit| / R
  double limit = 0.0;
};

/// Remainder |K(R) − diagonal_limit| on a geometric grid in (0, R_max].
DiagonalFit fit_diagonal_remainder(const NormalOperator& op, double x, const Vec& y, const Vec& theta,
                                   double R_max = 0.1, int points = 8);

struct KernelDifferenceReport {
  double sup_abs = 0.0;  // sup |K_E|
  double sup_R = 0.0;    // sup |K_E| / min(R, 1)
  double sup_dx = 0.0;   // sup |x ∂_x K_E| / min(R, 1) at fixed (y, R, θ)
  double sup_dy = 0.0;   // sup |x ∂_y K_E| / min(R, 1), max over y-axes
  int samples = 0;
};

/// K_E = K_hat − K_bar over samples; finite differences with relative step fd_rel.
KernelDifferenceReport kernel_difference_diag(const NormalOperator& hat, const NormalOperator& bar,
                                              const std::vector<BlowupPoint>& samples, double fd_rel = 1e-3);

}  // namespace ahx
