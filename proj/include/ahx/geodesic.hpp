#pragma once

// Geodesics of a ChristoffelField: integration (optionally in regularized variables
// across r = 0), exit times, exponential map and its inverse by shooting, convexity
// diagnostics, and the reparametrization of AH geodesics to projective time.

#include "ahx/connection.hpp"
#include "ahx/ode.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace ahx {

struct GeodesicOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  /// Integrate in the regularized variables (z, v⁰, b) when the field carries a nontrivial split.
  bool regularize = true;
  /// Stop each direction at the first crossing out of {r ≥ 0}.
  bool stop_at_boundary = false;
  bool keep_dense = true;
  /// Locate τ± when the start point lies in {r ≥ 0}.
  bool find_exit_times = true;
};

/// First-order form of the geodesic equation around a base point z0. The state holds
/// z − z0 so that short geodesics are integrated with relative accuracy.
class GeodesicSystem {
 public:
  GeodesicSystem(const ChristoffelField& field, const Vec& base, bool regularize);

  int dim() const { return dim_; }
  bool regularized() const { return split_ != nullptr; }
  const Vec& base() const { return base_; }
  const ChristoffelField& field() const { return field_; }

  State to_state(const Vec& z, const Vec& v) const;
  void from_state(const State& w, Vec& z, Vec& v) const;
  Vec point(const State& w) const { return base_ + w.head(dim_); }
  bool rhs(const State& w, State& dw) const;
  OdeRhs as_rhs() const;

 private:
  /// B^γ_{0β} at z, as an n×n matrix (row γ, column β).
  Mat mixed_block(const Vec& z) const;

  const ChristoffelField& field_;
  const ConnectionSplit* split_ = nullptr;
  Vec base_;
  int dim_;
  double coupling_ = 0.0;  // 4/N
};

struct PathSample {
  double tau;
  Vec z, v;
};

inline constexpr double kOpenEnd = std::numeric_limits<double>::infinity();

class GeodesicPath {
 public:
  GeodesicPath() = default;

  Vec z(double tau) const;
  Vec v(double tau) const;
  /// dv/dτ from the interpolant (used for residual diagnostics).
  Vec a(double tau) const;
  double tau_lo() const { return tau_lo_; }
  double tau_hi() const { return tau_hi_; }
  std::vector<PathSample> samples() const;
  const std::vector<DenseStep>& segments() const { return segs_; }

  double tau_minus = -kOpenEnd;
  double tau_plus = kOpenEnd;
  bool excluded = false;  // tangent to the boundary
  bool domain_truncated = false;
  bool regularized = false;
  OdeStats stats;

 private:
  friend GeodesicPath integrate(const ChristoffelField&, const Vec&, const Vec&, double, double,
                                const GeodesicOptions&);
  const DenseStep& find(double tau) const;

  std::shared_ptr<GeodesicSystem> sys_;
  std::shared_ptr<const ChristoffelField> keep_;  // optional ownership
  std::vector<DenseStep> segs_;  // sorted by lower end
  double tau_lo_ = 0.0, tau_hi_ = 0.0;
};

/// Geodesic with z(0) = z0, z'(0) = v0 over [tau_a, tau_b] (tau_a ≤ 0 ≤ tau_b).
GeodesicPath integrate(const ChristoffelField& field, const Vec& z0, const Vec& v0, double tau_a, double tau_b,
                       const GeodesicOptions& opts = {});

struct ExitTimes {
  double tau_minus = -kOpenEnd;
  double tau_plus = kOpenEnd;
  bool excluded = false;
};

/// First crossings of r = 0 on each side of τ = 0, bisected to 1e-12.
ExitTimes exit_times(const GeodesicPath& path);

/// Time-1 endpoint; throws kDomain (with the exit time) when the geodesic leaves the domain.
Vec exp_map(const ChristoffelField& field, const Vec& z, const Vec& v, const GeodesicOptions& opts = {});

struct InverseExpOptions {
  double tol = 1e-10;
  int max_iter = 50;
  double fd_rel_step = 1e-7;
  bool need_jacobian = true;
  std::optional<Vec> guess;
  GeodesicOptions geo;
  /// Also report the largest r along the solution geodesic (one extra shot).
  bool track_max_r = false;
};

struct InverseExpResult {
  Vec v;
  Mat dexp;  // d_v exp at the solution (central differences)
  /// |det d_z̃ exp⁻¹| = 1/|det d_v exp|
  double inv_jacobian = 1.0;
  int iterations = 0;
  double residual = 0.0;
  double max_r = -kOpenEnd;  // filled when track_max_r
};

InverseExpResult inverse_exp(const ChristoffelField& field, const Vec& z, const Vec& zt,
                             const InverseExpOptions& opts = {});

/// |det d_z̃ exp⁻¹_z| by central differences of inverse_exp in z̃ with step rel_step·|z̃ − z|.
double inverse_exp_jacobian_fd(const ChristoffelField& field, const Vec& z, const Vec& zt, double rel_step = 1e-5,
                               const InverseExpOptions& opts = {});

struct ConvexitySample {
  Vec point;
  Vec omega;
  double analytic = 0.0;  // −Γ⁰_{αβ} ω^α ω^β
  double fd = 0.0;        // second difference of r along an integrated arc
};

std::vector<ConvexitySample> convexity_scan(const ChristoffelField& field, const std::vector<Vec>& boundary_pts,
                                            const std::vector<Vec>& dirs, double arc = 1e-3);

/// AH geodesic resampled in projective time τ with dτ/dt = (r∘γ)/c, r = ρ².
class ProjectivePath {
 public:
  double c = 1.0;
  std::vector<double> t, tau;  // monotone table
  double tau_of_t(double tt) const;
  double t_of_tau(double ta) const;
  /// Point (r, y) = (ρ², y) at projective time τ.
  Vec z(double ta) const;
  /// Projective velocity dz/dτ = (c/r)(2ρρ', y').
  Vec v(double ta) const;

  const GeodesicPath* source = nullptr;  // AH path in (ρ, y)
};

/// pre: path is an AH-metric geodesic in (ρ, y) coordinates with ρ > 0 on its span.
ProjectivePath reparametrize(const GeodesicPath& ah_path, double c, int nodes_per_segment = 8);

/// Max over dense-output midpoints of |v' + Γ(z)(v, v)| / (1 + |v|²).
double geodesic_residual(const ChristoffelField& field, const GeodesicPath& path);

}  // namespace ahx
