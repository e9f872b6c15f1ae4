#include "ahx/xray.hpp"

#include "ahx/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace ahx {

namespace {

double quartic_plateau(double u2) {
  if (!(u2 < 1.0)) return 0.0;
  const double w = 1.0 - u2;
  return w * w * w * w;
}

/// Segment knots of a path restricted to [a, b], with a and b included.
std::vector<double> knots_between(const GeodesicPath& path, double a, double b) {
  std::vector<double> k{a, b};
  for (const auto& s : path.segments()) {
    for (double t : {s.t0, s.t1()}) {
      if (t > a && t < b) k.push_back(t);
    }
  }
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return k;
}

}  // namespace

TestFunction bump_function(int n, int decay, double rho_support, const Vec& center, double width, double amplitude) {
  if (!(rho_support > 0.0) || !(width > 0.0) || decay < 0 || center.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "bump_function: need rho_support > 0, width > 0, decay >= 0, center in R^n");
  }
  TestFunction f;
  std::ostringstream os;
  os << "bump_rho" << decay;
  f.name = os.str();
  f.boundary_decay = decay;
  f.decay_constant = std::abs(amplitude);
  f.box_lo = Vec(n + 1);
  f.box_hi = Vec(n + 1);
  f.box_lo[0] = 0.0;
  f.box_hi[0] = rho_support;
  for (int a = 0; a < n; ++a) {
    f.box_lo[a + 1] = center[a] - width;
    f.box_hi[a + 1] = center[a] + width;
  }
  const Vec c = center;
  f.eval = [=](const Vec& z) {
    const double rho = z[0];
    if (!(rho > 0.0) || rho >= rho_support) return 0.0;
    const double dy2 = (z.tail(n) - c).squaredNorm() / (width * width);
    if (dy2 >= 1.0) return 0.0;
    return amplitude * std::pow(rho, decay) * quartic_plateau((rho / rho_support) * (rho / rho_support)) *
           quartic_plateau(dy2);
  };
  return f;
}

TestFunction constant_function(int n, double value, double box) {
  TestFunction f;
  f.name = "constant";
  f.box_lo = Vec::Constant(n + 1, -box);
  f.box_hi = Vec::Constant(n + 1, box);
  f.boundary_decay = 0;
  f.decay_constant = std::abs(value);
  f.eval = [value](const Vec&) { return value; };
  return f;
}

TestFunction linear_combination(double a, const TestFunction& f, double b, const TestFunction& g) {
  TestFunction h;
  h.name = "combination";
  h.box_lo = f.box_lo.cwiseMin(g.box_lo);
  h.box_hi = f.box_hi.cwiseMax(g.box_hi);
  h.boundary_decay = std::min(f.boundary_decay, g.boundary_decay);
  h.decay_constant = std::abs(a) * f.decay_constant + std::abs(b) * g.decay_constant;
  auto fe = f.eval, ge = g.eval;
  h.eval = [=](const Vec& z) { return a * fe(z) + b * ge(z); };
  return h;
}

TestFunction in_r_coordinates(const TestFunction& f) {
  TestFunction h = f;
  h.name = f.name + "_e";
  h.box_lo[0] = 0.0;
  h.box_hi[0] = f.box_hi[0] * std::abs(f.box_hi[0]);
  auto fe = f.eval;
  h.eval = [fe](const Vec& z) {
    if (!(z[0] >= 0.0)) return 0.0;
    Vec p = z;
    p[0] = std::sqrt(z[0]);
    return fe(p);
  };
  return h;
}

TestFunction density_weighted(const TestFunction& f) {
  TestFunction h = in_r_coordinates(f);
  h.name = f.name + "_weighted";
  h.boundary_decay = f.boundary_decay - 2;
  auto fe = h.eval;
  h.eval = [fe](const Vec& z) {
    if (!(z[0] > 0.0)) return 0.0;
    return fe(z) / z[0];
  };
  return h;
}

XrayResult xray_connection(const ChristoffelField& field, const TestFunction& f, const Vec& z, const Vec& v,
                           const XrayOptions& opts) {
  require_nonzero_velocity(v);
  if (!(z[0] >= 0.0)) throw Error(ErrorCode::kDomain, "xray_connection: start point must satisfy r >= 0");
  GeodesicOptions go = opts.geo;
  go.find_exit_times = true;
  go.keep_dense = true;
  for (double span = opts.span; span <= opts.max_span; span *= 2.0) {
    const GeodesicPath path = integrate(field, z, v, -span, span, go);
    if (path.excluded) throw Error(ErrorCode::kExcludedGeodesic, "xray_connection: geodesic is tangent to r = 0");
    const bool found = std::isfinite(path.tau_plus) && std::isfinite(path.tau_minus);
    if (!found) {
      if (path.domain_truncated) {
        throw Error(ErrorCode::kDomain, "xray_connection: geodesic leaves the field's domain before exiting r >= 0");
      }
      continue;
    }
    XrayResult out;
    out.tau_minus = path.tau_minus;
    out.tau_plus = path.tau_plus;
    if (out.tau_plus <= out.tau_minus) return out;
    const auto breaks = knots_between(path, out.tau_minus, out.tau_plus);
    const auto r = integrate_gk([&](double t) { return f(path.z(t)); }, breaks, 1e-2 * opts.tol, opts.tol);
    out.value = r.value;
    out.error = r.error;
    return out;
  }
  throw Error(ErrorCode::kDomain, "xray_connection: no exit from r >= 0 within the maximal span");
}

Vec unit_ah_velocity(const MetricFamily& family, const Vec& z, const Vec& dir) {
  require_nonzero_velocity(dir);
  const Mat g = evaluate_ah_metric(family, z[0], z.tail(z.size() - 1));
  const double len2 = dir.dot(g * dir);
  if (!(len2 > 0.0)) throw Error(ErrorCode::kSingularMetric, "unit_ah_velocity: non-positive length");
  return dir / std::sqrt(len2);
}

std::vector<AhGeodesic> sample_local_geodesics(std::shared_ptr<const MetricFamily> family, int count,
                                               std::uint64_t seed, double rho_lo, double rho_hi, double y_radius,
                                               double rho_cap) {
  const int n = family->n();
  const AhMetricField field(family);
  GeodesicOptions go;
  go.regularize = false;
  go.find_exit_times = false;
  go.rtol = 1e-8;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<AhGeodesic> out;
  for (int attempt = 0; static_cast<int>(out.size()) < count; ++attempt) {
    if (attempt > 1000 * count) throw Error(ErrorCode::kNumerical, "sample_local_geodesics: acceptance rate too low");
    Vec z(n + 1), d(n + 1);
    z[0] = rho_lo + 0.5 * (u(rng) + 1.0) * (rho_hi - rho_lo);
    for (int a = 0; a < n; ++a) z[a + 1] = y_radius * u(rng);
    for (int i = 0; i <= n; ++i) d[i] = u(rng);
    if (d.norm() < 1e-3) continue;
    if (z.tail(n).norm() > y_radius) continue;
    const Vec v = unit_ah_velocity(*family, z, d);
    const GeodesicPath path = integrate(field, z, v, -30.0, 30.0, go);
    if (path.domain_truncated) continue;
    double top = 0.0, yfar = 0.0;
    for (const auto& s : path.samples()) {
      top = std::max(top, s.z[0]);
      yfar = std::max(yfar, s.z.tail(n).lpNorm<Eigen::Infinity>());
    }
    if (top < rho_cap && yfar < family->patch().extent) out.push_back({z, v});
  }
  return out;
}

XrayAhResult xray_ah(std::shared_ptr<const MetricFamily> family, const TestFunction& f, const AhGeodesic& g,
                     const XrayAhOptions& opts) {
  if (!(g.z0[0] > 0.0)) throw Error(ErrorCode::kDomain, "xray_ah: start point must be interior (rho > 0)");
  const AhMetricField field(family);
  GeodesicOptions go;
  go.regularize = false;
  go.find_exit_times = false;
  go.rtol = 1e-12;
  go.atol = 1e-14;
  XrayAhResult out;
  const int k = f.boundary_decay;
  const double C = f.decay_constant;
  if (C > 0.0 && k <= 0) {
    out.diverges = true;
    std::ostringstream os;
    os << "declared boundary decay order " << k << " does not make the integral converge";
    out.warning = os.str();
  }

  auto outside_support = [&](const Vec& z) {
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (z[i] < f.box_lo[i] || z[i] > f.box_hi[i]) return true;
    }
    return false;
  };
  for (double T = opts.t_start;; T *= 2.0) {
    const GeodesicPath path = integrate(field, g.z0, g.v0, -T, T, go);
    const double lo = path.tau_lo(), hi = path.tau_hi();
    // an end that left the collar contributes nothing once it is outside supp f
    auto end_tail = [&](double t, bool left_collar) {
      if (C == 0.0) return 0.0;
      if (left_collar) return outside_support(path.z(t)) ? 0.0 : kOpenEnd;
      if (out.diverges) return kOpenEnd;
      const double rho = path.z(t)[0];
      const double mu = -(t > 0 ? 1.0 : -1.0) * path.v(t)[0] / rho;  // outward decay rate of ρ
      if (!(mu > 0.5)) return kOpenEnd;
      return C * std::pow(rho, k) / (k * mu);
    };
    const bool cut_lo = lo > -T, cut_hi = hi < T;
    const double tail = end_tail(lo, cut_lo) + end_tail(hi, cut_hi);
    const bool last = T * 2.0 > opts.t_max || (cut_lo && cut_hi);
    if (tail <= opts.tail_tol || last || out.diverges) {
      const auto breaks = knots_between(path, lo, hi);
      const auto r = integrate_gk([&](double t) { return f(path.z(t)); }, breaks, 1e-3 * opts.tol, opts.tol, 20000);
      out.value = r.value;
      out.tail_bound = tail;
      out.t_minus = lo;
      out.t_plus = hi;
      if (!out.diverges && tail > opts.tail_tol) {
        out.warning = path.domain_truncated ? "geodesic leaves the collar inside the support of f"
                                            : "tail bound not met within t_max";
      }
      return out;
    }
  }
}

RelationReport verify_relation(std::shared_ptr<const MetricFamily> family, const TestFunction& f,
                               const AhGeodesic& g, double c, const XrayAhOptions& opts) {
  RelationReport rep;
  rep.c = c;
  const XrayAhResult ah = xray_ah(family, f, g, opts);
  rep.I = ah.value;
  rep.tail_bound = ah.tail_bound;

  // γ̂: initial data from the projective reparametrization at t = 0
  const AhMetricField field(family);
  GeodesicOptions go;
  go.regularize = false;
  go.find_exit_times = false;
  go.rtol = 1e-12;
  go.atol = 1e-14;
  const GeodesicPath path = integrate(field, g.z0, g.v0, -1e-3, 1e-3, go);
  const ProjectivePath proj = reparametrize(path, c);
  rep.z_hat = proj.z(0.0);
  rep.v_hat = proj.v(0.0);

  const auto model = to_even_structure(*family);
  const auto hat = projective_field(model);
  XrayOptions xo;
  xo.tol = 1e-11;
  xo.geo.rtol = 1e-12;
  xo.geo.atol = 1e-14;
  const XrayResult xr = xray_connection(*hat, density_weighted(f), rep.z_hat, rep.v_hat, xo);
  rep.I_hat = xr.value;
  rep.tau_minus = xr.tau_minus;
  rep.tau_plus = xr.tau_plus;
  rep.residual = std::abs(rep.I - c * rep.I_hat);
  return rep;
}

}  // namespace ahx
