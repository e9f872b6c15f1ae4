#pragma once

// Forward X-ray transforms: Î f along ∇-geodesics between their exit times from {r ≥ 0},
// I f along unit-speed AH geodesics with a certified tail bound, and the relation
// I f(γ) = c · Î(r⁻¹ f_e)(γ̂) between them.

#include "ahx/geodesic.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ahx {

struct TestFunction {
  std::string name;
  std::function<double(const Vec&)> eval;
  /// Closed box outside which eval vanishes (first coordinate, then y).
  Vec box_lo, box_hi;
  /// Vanishing order k in ρ at the boundary: |f| ≤ decay_constant · ρ^k.
  int boundary_decay = 0;
  double decay_constant = 0.0;

  double operator()(const Vec& z) const { return eval(z); }
};

/// A ρ^k (1 − (ρ/ρ_s)²)₊⁴ (1 − |y − c|²/w²)₊⁴ in (ρ, y) coordinates.
TestFunction bump_function(int n, int decay, double rho_support, const Vec& center, double width,
                           double amplitude = 1.0);
/// f ≡ value on the whole box.
TestFunction constant_function(int n, double value, double box = 1e6);
/// a f + b g.
TestFunction linear_combination(double a, const TestFunction& f, double b, const TestFunction& g);
/// f_e(r, y) = f(√r, y) on r ≥ 0, 0 for r < 0.
TestFunction in_r_coordinates(const TestFunction& f);
/// r⁻¹ f_e(r, y).
TestFunction density_weighted(const TestFunction& f);

struct XrayOptions {
  double tol = 1e-10;
  /// Initial integration half-span; doubled until both exits are found.
  double span = 1.0;
  double max_span = 1024.0;
  GeodesicOptions geo;
};

struct XrayResult {
  double value = 0.0;
  double tau_minus = 0.0, tau_plus = 0.0;
  double error = 0.0;
};

/// ∫_{τ−}^{τ+} f(γ(τ)) dτ for the geodesic from (z, v) with z in {r ≥ 0}.
XrayResult xray_connection(const ChristoffelField& field, const TestFunction& f, const Vec& z, const Vec& v,
                           const XrayOptions& opts = {});

/// Initial data (ρ, y), velocity of a unit-speed AH geodesic.
struct AhGeodesic {
  Vec z0, v0;
};

/// Rescales dir to unit g-length at z = (ρ, y).
Vec unit_ah_velocity(const MetricFamily& family, const Vec& z, const Vec& dir);

/// Random unit-speed geodesics starting at ρ ∈ [rho_lo, rho_hi], |y| ≤ y_radius, whose
/// AH path stays below rho_cap (local to the collar). Deterministic in seed.
std::vector<AhGeodesic> sample_local_geodesics(std::shared_ptr<const MetricFamily> family, int count,
                                               std::uint64_t seed, double rho_lo = 0.1, double rho_hi = 0.4,
                                               double y_radius = 0.2, double rho_cap = 0.6);

struct XrayAhResult {
  double value = 0.0;
  double tail_bound = 0.0;
  double t_minus = 0.0, t_plus = 0.0;  // truncation window
  bool diverges = false;               // declared decay cannot make the integral converge
  std::string warning;
};

struct XrayAhOptions {
  double tail_tol = 1e-10;
  double tol = 1e-11;
  double t_start = 4.0;
  double t_max = 80.0;
};

/// ∫ f(γ(t)) dt over |t| ≤ T with the tail bound C ρ(±T)^k / (k μ) ≤ tail_tol, μ = −ρ'/ρ at ±T.
XrayAhResult xray_ah(std::shared_ptr<const MetricFamily> family, const TestFunction& f, const AhGeodesic& g,
                     const XrayAhOptions& opts = {});

struct RelationReport {
  double I = 0.0;
  double I_hat = 0.0;
  double c = 1.0;
  double residual = 0.0;  // |I − c Î|
  double tail_bound = 0.0;
  double tau_minus = 0.0, tau_plus = 0.0;
  Vec z_hat, v_hat;  // initial data of γ̂
};

/// Both sides computed independently: I on the AH path and Î on the ∇̂-geodesic through
/// the reparametrized initial data.
RelationReport verify_relation(std::shared_ptr<const MetricFamily> family, const TestFunction& f,
                               const AhGeodesic& g, double c, const XrayAhOptions& opts = {});

}  // namespace ahx
