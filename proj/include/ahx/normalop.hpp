#pragma once

// The microlocalized normal operator near a boundary point: artificial boundary chart,
// cutoff χ, sphere-bundle quadrature for A_{χ,η} and its exponential conjugation,
// the explicit Schwartz kernel, operator matrices, scattering norms and the Schur
// estimate for the difference operator E.
//
// Chart convention. Points z = (x, y) are in the shifted chart x = x_η = x̂ + η with
// x̂ = −r − q|y − y_p|², so the base point is r = η − x − q|y − y_p|². The lens
// Ũ_η = {0 ≤ x ≤ η − q|y − y_p|²} is where the compactified connection and its smooth
// part differ. Kernels are densities against coordinate Lebesgue measure dz̃.

#include "ahx/geodesic.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ahx {

/// χ(t) = ((1 − (t/M)²)₊)³.
struct CutoffProfile {
  double M = 1.0;
  double operator()(double t) const {
    const double u = t / M;
    if (!(std::abs(u) < 1.0)) return 0.0;
    const double w = 1.0 - u * u;
    return w * w * w;
  }
};

struct ArtificialBoundary {
  double q = 0.25;
  Vec y_p;  // empty: origin
  double eta = 0.0;

  Vec center(int n) const { return y_p.size() == n ? y_p : Vec(Vec::Zero(n)); }
  /// Base coordinates (r, y) of a chart point.
  Vec to_base(const Vec& z) const;
  Vec to_chart(const Vec& base) const;
  Vec vel_to_base(const Vec& z, const Vec& vc) const;
  Vec vel_to_chart(const Vec& z, const Vec& vb) const;
  /// x̂ = −r − q|y − y_p|² at a base point.
  double x_hat(const Vec& base) const;
  /// Chart point lies in the lens Ũ_η.
  bool in_lens(const Vec& z) const;
};

/// Vertex grid over [x_lo, x_hi] × box in y with nx × ny^n nodes.
struct SpatialGrid {
  int n = 2;
  double x_lo = 0.0025, x_hi = 0.05;
  int nx = 20;
  Vec y_lo, y_hi;  // per-axis bounds
  int ny = 20;

  int size() const;
  double hx() const { return nx > 1 ? (x_hi - x_lo) / (nx - 1) : 0.0; }
  double hy(int a) const { return ny > 1 ? (y_hi[a] - y_lo[a]) / (ny - 1) : 0.0; }
  Vec node(int idx) const;
  int index(int ix, const int* iy) const;
  void unpack(int idx, int& ix, int* iy) const;
  /// Cell volume per node (dx dy), uniform.
  double cell_volume() const;
  /// Trilinear hat-basis weights at a point: fills (node index, weight); returns count.
  int hat_weights(const Vec& z, int* idx, double* w) const;
  /// Refinement n → 2n − 1 per axis (coarse nodes are a subset).
  SpatialGrid refined() const;
  void validate() const;
};

struct LocalityConstants {
  double c0 = 0.05;
  double delta1 = 0.3;
  double delta2 = 0.4;
  double C_tilde = 10.0;
};

struct SphereGrid {
  int n_polar = 32;
  int n_azimuth = 64;
};

/// Node counts for kernel-based row quadrature in the model coordinates (ρ, s, ŷ).
struct KernelQuadrature {
  int n_s = 16;
  int n_azimuth = 32;
  int nodes_per_panel = 4;
  int max_panels = 48;
  /// Panels are sized so that one panel moves the image by at most this many grid cells.
  double cells_per_panel = 0.5;
  /// Conjugation exponent beyond which the kernel is treated as 0.
  double exp_cutoff = 40.0;
};

struct NormalOperatorConfig {
  CutoffProfile chi;
  double sigma = 1.0;
  ArtificialBoundary boundary;
  LocalityConstants loc;
  SphereGrid sphere;
  SpatialGrid grid;
  KernelQuadrature kq;
  double ode_rtol = 1e-10;
  double shoot_tol = 1e-10;

  double eta() const { return boundary.eta; }
  int n() const { return grid.n; }
  void validate() const;
  /// Stable FNV-1a hash of every numeric field.
  std::string hash() const;
};

struct LocalityWitness {
  bool passed = false;
  bool precondition_ok = false;
  double min_x_eta = 0.0;
  double re_entry_bound = 0.0;
  std::string reason;
};

/// Locality predicate for a chart point and unit chart velocity.
LocalityWitness locality_check(const ChristoffelField& field, const NormalOperatorConfig& cfg, const Vec& z,
                               const Vec& v);

struct KernelValue {
  double value = 0.0;
  double P = 0.0;
  double inv_jacobian = 1.0;
  double vnorm = 0.0;
  Vec v;           // chart velocity exp⁻¹
  Vec v_base;      // base velocity (warm start for neighbours)
  bool evaluated = false;  // false when a prefilter decided the value
  double max_r = -kOpenEnd;  // largest r along the geodesic, when tracked
};

using ScalarField = std::function<double(const Vec&)>;

/// One instance of A_{χ,η,σ} for a given connection.
class NormalOperator {
 public:
  NormalOperator(std::shared_ptr<const ChristoffelField> field, NormalOperatorConfig cfg);

  const NormalOperatorConfig& config() const { return cfg_; }
  const ChristoffelField& field() const { return *field_; }
  std::shared_ptr<const ChristoffelField> field_ptr() const { return field_; }

  /// Chart geodesic from (z, v) over |t| ≤ span, or nullopt-like empty path on failure.
  GeodesicPath geodesic(const Vec& z, const Vec& v, double span) const;

  /// A f(z) by sphere quadrature; `degenerate` set at x = 0.
  double apply_A(const ScalarField& f, const Vec& z, bool* degenerate = nullptr) const;
  /// x^{-2} e^{-σ/x} A(e^{σ/x} f)(z).
  double apply_A_sigma(const ScalarField& f, const Vec& z) const;

  /// Conjugated kernel κ(z, z̃) against dz̃.
  KernelValue kernel(const Vec& z, const Vec& zt, const Vec* guess_base = nullptr, bool track_r = false) const;

  /// Second derivative of x∘γ at t = 0 for v = (0, ŷ) from z; the model curvature a(ŷ).
  double chart_curvature(const Vec& z, const Vec& yhat) const;

 private:
  std::shared_ptr<const ChristoffelField> field_;
  NormalOperatorConfig cfg_;
};

double apply_A(const ChristoffelField& field, const NormalOperatorConfig& cfg, const ScalarField& f, const Vec& z,
               bool* degenerate = nullptr);
double apply_A_sigma(const ChristoffelField& field, const NormalOperatorConfig& cfg, const ScalarField& f,
                     const Vec& z);
double kernel_direct(const ChristoffelField& field, const NormalOperatorConfig& cfg, const Vec& z, const Vec& zt);

/// Ã_{χ,η,σ}: same constants with the shift η. Kernels of the result are evaluated at
/// translated chart points; kernel_physical below gives the untranslated view.
NormalOperatorConfig translate_operator(const NormalOperatorConfig& cfg, double eta);
/// Kernel in the unshifted chart x̂: equals kernel_direct at (ẑ + η̄, z̃ + η̄).
double kernel_physical(const ChristoffelField& field, const NormalOperatorConfig& cfg, const Vec& zhat,
                       const Vec& zthat);

/// Quadrature node of the kernel row rule around an output point.
struct RowNode {
  Vec zt;
  double weight;  // includes the Jacobian x^{n+2} ρ^n
  double rho, s;
  int az;
};

/// Kernel-adapted nodes z̃ = (x + x²(sρ + aρ²), y + xρŷ) around z.
/// `lens_only` restricts the ρ range to reach the lens.
/// `fixed_panels` > 0 overrides the grid-driven panel count.
std::vector<RowNode> kernel_row_nodes(const NormalOperator& op, const Vec& z, bool lens_only, int fixed_panels = 0);

/// Right-factor nodes z = (x̃(1 − a x̃ρ²)/(1 + s x̃ρ), ỹ + x̃ρŷ) around z̃.
std::vector<RowNode> kernel_column_nodes(const NormalOperator& op, const Vec& zt, double x_max, int fixed_panels = 0);

enum class AssemblyMethod { kKernel, kSphere };

struct AssemblyOptions {
  AssemblyMethod method = AssemblyMethod::kKernel;
  /// Output grid indices; empty means every node.
  std::vector<int> rows;
  /// Sphere method: t-nodes per direction and direction counts.
  int sphere_t_nodes = 48;
  SphereGrid sphere{16, 32};
  int threads = 1;
};

/// Dense discretization: A(i, j) ≈ ∫ κ(z_i, z̃) φ_j(z̃) dz̃ with trilinear hats φ_j on input nodes.
struct OperatorMatrix {
  Eigen::MatrixXd A;
  std::vector<int> rows;  // output grid indices
  std::vector<int> cols;  // input grid indices (lens nodes)
  Eigen::VectorXd row_weights, col_weights;  // cell volumes
  std::string config_hash;
  std::string field_tag;
  std::string method;
};

/// Input nodes: grid nodes inside the lens Ũ_η.
std::vector<int> lens_nodes(const NormalOperatorConfig& cfg);

OperatorMatrix assemble_matrix(const NormalOperator& op, const AssemblyOptions& opts = {});

/// Discrete H^{k,β}_sc norm: L² of x^{-β}u, plus x²∂_x u and x∂_y u terms when k = 1.
double discrete_sc_norm(const SpatialGrid& grid, const Eigen::VectorXd& u, int k, double beta);

struct SchurBounds {
  double eta = 0.0;
  double row_sup = 0.0;     // sup_z ∫ |κ_E(z, ·)|
  double col_sup = 0.0;     // sup_z̃ ∫ |κ_E(·, z̃)|
  double l2_bound = 0.0;    // sqrt(row_sup · col_sup)
  double h10_bound = 0.0;   // Schur bounds of (1, x²∂_x, x∂_y)κ_E combined in ℓ²
  long kernel_evals = 0;
  long nonzero_pairs = 0;
};

struct SchurOptions {
  int left_samples_x = 4;
  int left_samples_y = 5;
  int right_samples_x = 3;
  int right_samples_y = 5;
  /// x-scale of the sample boxes; 0 means max(η, 0.0025).
  double x_scale = 0.0;
  /// Evaluate both kernels even where the smooth geodesic never reaches r > 0.
  bool full_evaluation = false;
  /// ρ-panels per direction; 0 sizes panels from the grid.
  int panels = 0;
  /// Relative step of the x²∂_x, x∂_y finite differences.
  double fd_rel_step = 1e-4;
  int threads = 1;
};

/// Schur-test estimate of ‖E_{η,σ}‖ with κ_E = κ_hat − κ_bar.
SchurBounds schur_estimate_E(const NormalOperator& hat, const NormalOperator& bar, const SchurOptions& opts = {});

/// Sup over samples of |κ_hat − κ_bar| for explicit pairs.
double kernel_difference_sup(const NormalOperator& hat, const NormalOperator& bar,
                             const std::vector<std::pair<Vec, Vec>>& pairs);

}  // namespace ahx
