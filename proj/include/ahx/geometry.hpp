#pragma once

// Asymptotically hyperbolic metrics in normal form g = (dρ² + h_ρ)/ρ² on a
// coordinate collar [0, ε) × box, and the change of smooth structure r = ρ²
// that turns an even metric into a projectively compact one with
// k_r = h_{√r} = k⁽¹⁾ + r^{N/2} k⁽²⁾.

#include "ahx/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ahx {

/// Coordinate collar [0, collar_depth) × [-extent, extent]^n around a boundary point.
struct BoundaryPatch {
  int n = 2;
  double extent = 1.0;
  double collar_depth = 1.0;

  void validate() const;
  bool contains_y(const Vec& y) const;
};

/// Value and first derivatives of the split k = k1 + r^{N/2} k2 at one point.
struct ModelJet {
  Mat k1, dk1_dr;
  std::array<Mat, kMaxDim> dk1_dy;
  Mat k2, dk2_dr;
  std::array<Mat, kMaxDim> dk2_dy;
};

/// The projectively compact data k_r on the collar r ∈ [0, ε²).
class ProjectiveModel {
 public:
  virtual ~ProjectiveModel() = default;

  virtual int n() const = 0;
  /// Odd order N of the half-integer term r^{N/2} k2, or 0 when k2 ≡ 0.
  virtual int order() const = 0;
  virtual void jet(double r, const Vec& y, ModelJet& out) const = 0;
  virtual const BoundaryPatch& patch() const = 0;

  double half_order() const { return 0.5 * order(); }
  /// k_r(y) for r ≥ 0.
  Mat k(double r, const Vec& y) const;
  /// r-collar upper end ε².
  double r_max() const { return patch().collar_depth * patch().collar_depth; }
};

/// A one-parameter family h_ρ of boundary metrics with derivative access.
class MetricFamily {
 public:
  virtual ~MetricFamily() = default;

  virtual std::string name() const = 0;
  virtual const BoundaryPatch& patch() const = 0;
  virtual Mat h(double rho, const Vec& y) const = 0;
  virtual Mat dh_drho(double rho, const Vec& y) const = 0;
  virtual Mat dh_dy(double rho, const Vec& y, int alpha) const = 0;
  /// Declared evenness order N; nullopt means exactly even.
  virtual std::optional<int> evenness_order() const = 0;
  /// Supplied split (k1, k2) in the r variable; nullptr when none is supplied.
  virtual std::shared_ptr<const ProjectiveModel> split() const = 0;

  int n() const { return patch().n; }
};

/// h_ρ(y) = (1 + A ρ^p b(y)) · identity, with b a Gaussian bump (or 1 when width ≤ 0).
/// Covers every built-in scenario family.
struct ConformalFamilyParams {
  std::string name = "hyperbolic";
  BoundaryPatch patch;
  double amplitude = 0.0;
  int power = 0;
  std::vector<double> center;  // defaults to the origin
  double width = 0.0;
  std::optional<int> declared_order;  // nullopt: exactly even (requires even power)
};

class ConformalFamily final : public MetricFamily,
                              public std::enable_shared_from_this<ConformalFamily> {
 public:
  explicit ConformalFamily(ConformalFamilyParams params);

  std::string name() const override { return params_.name; }
  const BoundaryPatch& patch() const override { return params_.patch; }
  Mat h(double rho, const Vec& y) const override;
  Mat dh_drho(double rho, const Vec& y) const override;
  Mat dh_dy(double rho, const Vec& y, int alpha) const override;
  std::optional<int> evenness_order() const override { return params_.declared_order; }
  std::shared_ptr<const ProjectiveModel> split() const override;

  const ConformalFamilyParams& params() const { return params_; }
  /// Boundary profile b(y) and its gradient component.
  double profile(const Vec& y) const;
  double profile_dy(const Vec& y, int alpha) const;
  /// b(y) with its gradient written to grad[0..n).
  double profile(const Vec& y, double* grad) const;

 private:
  ConformalFamilyParams params_;
  Vec center_;
};

/// Parameters accepted by the built-in family factory.
struct FamilySpec {
  std::string name = "hyperbolic";
  int n = 2;
  std::optional<int> order;
  double amplitude = 1.0;
  std::vector<double> center;
  double width = 0.5;
  double extent = 1.0;
  double collar_depth = 1.0;
};

/// "hyperbolic", "even_quadratic", "odd5_bump" (alias "n5_bump"), "n3_bump".
std::shared_ptr<const MetricFamily> make_family(const FamilySpec& spec);

/// g in normal form at interior point (ρ, y).
Mat evaluate_ah_metric(const MetricFamily& family, double rho, const Vec& y);

struct EvennessOrderNorm {
  int order = 0;
  double norm = 0.0;
};

struct EvennessReport {
  std::vector<EvennessOrderNorm> orders;
  double step = 0.0;
  double scale = 1.0;
  double tolerance = 0.0;
  /// Odd orders m < N above the stencil's resolving order are not reported.
  int max_resolved_order = 5;
  bool passed = true;
};

/// One-sided 6-point stencils at ρ = 0 for odd m < N, sampled over a 3^n grid of y.
EvennessReport check_evenness(const MetricFamily& family, int order, double tol = 1e-6);

/// Builds the projective model k_r = h_{√r} from the family's supplied split.
std::shared_ptr<const ProjectiveModel> to_even_structure(const MetricFamily& family);

/// Grid function on (ρ_i, y_j) stored row-major in ρ.
struct CollarGridFunction {
  std::vector<double> rho;
  std::vector<Vec> y;
  std::vector<double> values;  // values[i * y.size() + j]

  double at(std::size_t i, std::size_t j) const { return values[i * y.size() + j]; }
};

/// r^{-1} f_e sampled on the (r = ρ², y) grid. The `rho` field of the result holds r.
CollarGridFunction pullback_density_weight(const CollarGridFunction& f);

/// Fornberg finite-difference weights for the m-th derivative at x0 over `nodes`.
std::vector<double> fd_weights(double x0, const std::vector<double>& nodes, int m);

}  // namespace ahx
