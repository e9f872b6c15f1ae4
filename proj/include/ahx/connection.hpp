#pragma once

// Christoffel symbols of the projectively compact connection in (r, y) coordinates,
// its split Γ̂ = Γ̄ + r^{N/2-1} H(r) B, and the extension of Γ̄ past r = 0.
// Coordinate index 0 is r; index α+1 is y^α.

#include "ahx/geometry.hpp"

#include <functional>
#include <limits>
#include <memory>
#include <string>

namespace ahx {

enum class Regularity { kSmooth, kC1Split, kContinuous };

const char* to_string(Regularity reg);

class ConnectionSplit;

/// Pointwise Γ^k_{ij}(z) on a domain r ∈ (r_min, r_max).
class ChristoffelField {
 public:
  virtual ~ChristoffelField() = default;

  virtual int dim() const = 0;
  virtual void eval(const Vec& z, Christoffel& out) const = 0;
  virtual Regularity regularity() const { return Regularity::kSmooth; }
  virtual double r_min() const { return -std::numeric_limits<double>::infinity(); }
  virtual double r_max() const { return std::numeric_limits<double>::infinity(); }
  /// Non-null for fields built from a split; enables the regularized geodesic system.
  virtual const ConnectionSplit* split() const { return nullptr; }
  virtual std::string tag() const = 0;

  bool in_domain(const Vec& z) const { return z[0] > r_min() && z[0] < r_max(); }
  Christoffel operator()(const Vec& z) const {
    Christoffel c;
    eval(z, c);
    return c;
  }
};

/// Γ ≡ 0 in dimension d.
class FlatField final : public ChristoffelField {
 public:
  explicit FlatField(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  void eval(const Vec&, Christoffel& out) const override { out.reset(dim_); }
  std::string tag() const override { return "flat"; }

 private:
  int dim_;
};

/// Γ̂ from k_r by the closed formulas; valid for r ≥ 0.
void hat_christoffel(const ProjectiveModel& model, const Vec& z, Christoffel& out);
Christoffel hat_christoffel(const ProjectiveModel& model, const Vec& z);

/// Γ̂ as a field on r ∈ [0, ε²). Tagged C¹-split for N ≥ 5 and continuous for N = 3.
class HatField final : public ChristoffelField {
 public:
  explicit HatField(std::shared_ptr<const ProjectiveModel> model);
  int dim() const override { return model_->n() + 1; }
  void eval(const Vec& z, Christoffel& out) const override;
  Regularity regularity() const override;
  double r_min() const override { return 0.0; }
  double r_max() const override { return model_->r_max(); }
  std::string tag() const override { return "hat"; }

 private:
  std::shared_ptr<const ProjectiveModel> model_;
};

/// Γ̄ (from k1 with the canonical choice) and B (coefficient of r^{N/2-1}).
class ConnectionSplit {
 public:
  ConnectionSplit(std::shared_ptr<const ProjectiveModel> model, double eps0);

  const ProjectiveModel& model() const { return *model_; }
  std::shared_ptr<const ProjectiveModel> model_ptr() const { return model_; }
  int dim() const { return model_->n() + 1; }
  /// Order N of the split, 0 when B ≡ 0.
  int order() const { return model_->order(); }
  double eps0() const { return eps0_; }
  bool trivial() const { return model_->order() == 0; }

  void gamma_bar(const Vec& z, Christoffel& out) const;
  /// B at r ≥ 0; zero for a trivial split.
  void B(const Vec& z, Christoffel& out) const;
  /// The block B^γ_{0β} alone (row γ, column β); zero for r < 0.
  Mat mixed(const Vec& z) const;
  /// Γ̄ + r^{N/2-1} H(r) B, with H(0) = 1. Equals Γ̄ bitwise for r ≤ 0.
  void composed(const Vec& z, Christoffel& out) const;
  /// Γ̄ and B (when r > 0) in one pass; returns r^{N/2-1} (0 when r ≤ 0 or trivial).
  double parts(const Vec& z, Christoffel& bar, Christoffel& b) const;

 private:
  std::shared_ptr<const ProjectiveModel> model_;
  double eps0_;
};

/// N < 5 → rejected.
std::shared_ptr<const ConnectionSplit> split_connection(std::shared_ptr<const ProjectiveModel> model,
                                                        double eps0 = 1.0);

/// Γ̄ + r^{N/2-1} H(r) B on r ∈ (-ε₀, ε²).
class ExtendedField final : public ChristoffelField {
 public:
  explicit ExtendedField(std::shared_ptr<const ConnectionSplit> split) : split_(std::move(split)) {}
  int dim() const override { return split_->dim(); }
  void eval(const Vec& z, Christoffel& out) const override;
  Regularity regularity() const override { return split_->trivial() ? Regularity::kSmooth : Regularity::kC1Split; }
  double r_min() const override { return -split_->eps0(); }
  double r_max() const override { return split_->model().r_max(); }
  const ConnectionSplit* split() const override { return split_.get(); }
  std::string tag() const override { return "hat_extended"; }

 private:
  std::shared_ptr<const ConnectionSplit> split_;
};

/// The smooth connection Γ̄ alone on r ∈ (-ε₀, ε²).
class BarField final : public ChristoffelField {
 public:
  explicit BarField(std::shared_ptr<const ConnectionSplit> split) : split_(std::move(split)) {}
  int dim() const override { return split_->dim(); }
  void eval(const Vec& z, Christoffel& out) const override;
  double r_min() const override { return -split_->eps0(); }
  double r_max() const override { return split_->model().r_max(); }
  std::string tag() const override { return "bar"; }

 private:
  std::shared_ptr<const ConnectionSplit> split_;
};

/// ExtendedField(split_connection(model)).
std::shared_ptr<const ChristoffelField> extend_past_boundary(std::shared_ptr<const ConnectionSplit> split);

/// Γ̂ for any model, extended by the k1-only formulas for r < 0. Used when N = 3,
/// where the split is rejected but geodesics and transforms still make sense.
class ComposedField final : public ChristoffelField {
 public:
  ComposedField(std::shared_ptr<const ProjectiveModel> model, double eps0);
  int dim() const override { return model_->n() + 1; }
  void eval(const Vec& z, Christoffel& out) const override;
  Regularity regularity() const override;
  double r_min() const override { return -eps0_; }
  double r_max() const override { return model_->r_max(); }
  std::string tag() const override { return "hat_composed"; }

 private:
  std::shared_ptr<const ProjectiveModel> model_;
  double eps0_;
};

/// Best available field for a model: ExtendedField when N ≥ 5 or even, ComposedField otherwise.
std::shared_ptr<const ChristoffelField> projective_field(std::shared_ptr<const ProjectiveModel> model,
                                                         double eps0 = 1.0);

/// Levi-Civita connection of a metric given as a callable, by 4th-order central differences.
Christoffel levi_civita_fd(const std::function<Mat(const Vec&)>& metric, const Vec& z, double step);

/// Levi-Civita field of the AH metric (dρ² + h_ρ)/ρ² in (ρ, y) coordinates, analytic.
class AhMetricField final : public ChristoffelField {
 public:
  explicit AhMetricField(std::shared_ptr<const MetricFamily> family) : family_(std::move(family)) {}
  int dim() const override { return family_->n() + 1; }
  void eval(const Vec& z, Christoffel& out) const override;
  double r_min() const override { return 0.0; }
  double r_max() const override { return family_->patch().collar_depth; }
  std::string tag() const override { return "ah_metric"; }
  const MetricFamily& family() const { return *family_; }

 private:
  std::shared_ptr<const MetricFamily> family_;
};

struct ProjectiveDifference {
  Christoffel D;
  /// max entrywise |Γ̂ − (ᵉΓ + D)| with ᵉΓ from finite differences of ᵉg = dr²/(4r²) + k_r/r.
  double residual = 0.0;
};

ProjectiveDifference projective_difference(const ProjectiveModel& model, const Vec& z);

/// ᵉg = dr²/(4r²) + k_r/r.
Mat projective_metric(const ProjectiveModel& model, const Vec& z);

/// Flat g⁰ in (x̂, y): the identity.
Mat background_metric(int dim);
bool is_unit_velocity(const Vec& v, double tol = 1e-12);
/// Throws kInvalidArgument when v = 0.
void require_nonzero_velocity(const Vec& v);

}  // namespace ahx
