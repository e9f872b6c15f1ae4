// Acceptance checks: one PASS/FAIL line per criterion. Arguments select a subset (e.g. "1 3 8").

#include "ahx/blowup.hpp"
#include "ahx/inversion.hpp"
#include "ahx/scenario.hpp"
#include "ahx/xray.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>

using namespace ahx;
using clk = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(clk::time_point t0) { return std::chrono::duration<double>(clk::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vec vec3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

Scenario scenario(const std::string& name) {
  return load_scenario(std::string(AHX_SOURCE_DIR) + "/scenarios/" + name + ".json");
}

struct Setup {
  Scenario sc;
  std::shared_ptr<const MetricFamily> family;
  std::shared_ptr<const ProjectiveModel> model;
  std::shared_ptr<const ChristoffelField> field;
};

Setup setup(const std::string& name) {
  Setup s{scenario(name), nullptr, nullptr, nullptr};
  s.family = make_family(s.sc.family);
  s.model = to_even_structure(*s.family);
  s.field = projective_field(s.model, s.sc.eps0);
  return s;
}

Outcome geodesic_oracle() {
  const auto t0 = clk::now();
  const Setup s = setup("hyperbolic");
  std::mt19937_64 rng(s.sc.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec z = vec3(0.055 + 0.045 * u(rng), 0.2 * u(rng), 0.2 * u(rng));
    const Vec v = vec3(0.5 * u(rng), 0.5 * u(rng), 0.5 * u(rng));
    const GeodesicPath p = integrate(*s.field, z, v, -1.0, 1.0);
    for (int k = 0; k <= 200; ++k) {
      const double t = -1.0 + 0.01 * k;
      Vec exact = z + t * v;
      exact[0] = z[0] + v[0] * t - v.tail(2).squaredNorm() * t * t;
      worst = std::max(worst, (p.z(t) - exact).norm() / exact.norm());
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 5.0, fmt("sup rel err %.3g over 100 geodesics, %.2f s", worst, secs)};
}

Outcome inverse_exp_oracle() {
  const Setup s = setup("hyperbolic");
  std::mt19937_64 rng(s.sc.seed + 7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double err = 0.0, jac = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Vec z = vec3(0.03 + 0.02 * u(rng), 0.1 * u(rng), 0.1 * u(rng));
    const Vec zt = vec3(0.03 + 0.02 * u(rng), z[1] + 0.1 * u(rng), z[2] + 0.1 * u(rng));
    const Vec w = zt.tail(2) - z.tail(2);
    const Vec expect = vec3(zt[0] - z[0] + w.squaredNorm(), w[0], w[1]);
    err = std::max(err, (inverse_exp(*s.field, z, zt).v - expect).norm());
    if (i % 5 == 0) jac = std::max(jac, std::abs(inverse_exp_jacobian_fd(*s.field, z, zt) - 1.0));
  }
  return {err <= 1e-8 && jac <= 1e-5, fmt("max |v - closed form| %.3g over 50 pairs, max |det - 1| %.3g", err, jac)};
}

Outcome convexity() {
  double worst = 0.0;
  bool negative = true;
  int count = 0;
  for (const char* name : {"hyperbolic", "even_quadratic", "n5_bump", "n3_bump"}) {
    const Setup s = setup(name);
    std::mt19937_64 rng(s.sc.seed + 1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec> pts, dirs;
    for (int i = 0; i < 10; ++i) pts.push_back(vec3(0.0, 0.5 * u(rng), 0.5 * u(rng)));
    for (int i = 0; i < 10; ++i) dirs.push_back(Vec((Vec(2) << u(rng), u(rng)).finished()).normalized());
    for (const auto& c : convexity_scan(*s.field, pts, dirs)) {
      const double m2h = -2.0 * c.omega.dot(s.model->k(0.0, c.point.tail(2)) * c.omega);
      worst = std::max({worst, std::abs(c.fd - m2h), std::abs(c.analytic - m2h)});
      negative = negative && c.fd < 0.0;
      ++count;
    }
  }
  return {worst <= 1e-6 && negative && count == 400,
          fmt("max |d2r + 2h(w,w)| %.3g over %d samples (100 per scenario), all negative: %s", worst, count,
              negative ? "yes" : "no")};
}

Outcome transform_relation() {
  const Setup s = setup("hyperbolic");
  const TestFunction f = bump_function(2, 3, 0.5, Vec::Zero(2), 0.6);
  const auto geos = sample_local_geodesics(s.family, 50, s.sc.seed);
  double worst = 0.0;
  for (const auto& g : geos) {
    const RelationReport r = verify_relation(s.family, f, g, 1.0);
    worst = std::max(worst, r.residual / std::max(1.0, std::abs(r.I)));
  }
  return {geos.size() == 50 && worst <= 1e-6, fmt("max scaled residual %.3g over %zu geodesics", worst, geos.size())};
}

// Matrix-applied operator against pointwise sphere quadrature at interior nodes of the base grid.
double quadrature_mismatch(std::shared_ptr<const ChristoffelField> field, const NormalOperatorConfig& cfg, int level) {
  const ArtificialBoundary bd = cfg.boundary;
  const ScalarField f = [bd](const Vec& z) {
    const double u = (z[0] - 0.012) / 0.012, v = z[1] / 0.25, w = z[2] / 0.25;
    const double t = 1.0 - u * u - v * v - w * w;
    return bd.in_lens(z) && t > 0.0 ? t * t * t : 0.0;
  };
  const int s = level ? 2 : 1;
  std::vector<int> rows;
  for (int ix : {1, 2, 3, 5}) {
    for (int jy : {8, 10}) {
      const int iy[2] = {jy * s, 9 * s};
      rows.push_back(cfg.grid.index(ix * s, iy));
    }
  }
  const NormalOperator op(std::move(field), cfg);
  AssemblyOptions ao;
  ao.rows = rows;
  const OperatorMatrix M = assemble_matrix(op, ao);
  const Eigen::VectorXd fv = sample_on_columns(M, cfg.grid, f);
  const Eigen::VectorXd mf = M.A * fv;
  double emax = 0.0, amax = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double a = op.apply_A_sigma(f, cfg.grid.node(rows[i]));
    emax = std::max(emax, std::abs(mf[static_cast<Eigen::Index>(i)] - a));
    amax = std::max(amax, std::abs(a));
  }
  return emax / amax;
}

Outcome kernel_quadrature() {
  const Setup s = setup("hyperbolic");
  NormalOperatorConfig cfg = s.sc.operator_config(0.02);
  cfg.sphere = SphereGrid{32, 64};
  cfg.kq = KernelQuadrature{};
  NormalOperatorConfig fine = cfg;
  fine.grid = cfg.grid.refined();
  const double e0 = quadrature_mismatch(s.field, cfg, 0), e1 = quadrature_mismatch(s.field, fine, 1);
  const double ratio = e1 / e0;
  const bool halves = ratio >= 0.35 && ratio <= 0.65;
  return {e0 <= 1e-3 && halves,
          fmt("rel err %.3g on 20x20, %.3g after refinement, ratio %.3g (need <= 1e-3 and 0.5 +/- 30%%)", e0, e1,
              ratio)};
}

Outcome diagonal_limit_check() {
  const Setup s = setup("n5_bump");
  const NormalOperator op(s.field, s.sc.operator_config(0.01));
  double min_slope = 1e300, max_gap = 0.0;
  int fits = 0;
  for (const Vec& th : {vec3(0.2, 0.9, 0.3), vec3(-0.3, 0.8, -0.2), vec3(0.0, 0.6, 0.8), vec3(0.5, 0.7, 0.1)}) {
    for (double x : {0.004, 0.01}) {
      const DiagonalFit fit = fit_diagonal_remainder(op, x, Vec::Zero(2), th);
      const BlowupPoint p0 = make_blowup_point(x, Vec::Zero(2), 0.0, th);
      max_gap = std::max(max_gap, std::abs(lifted_kernel(op, p0).value - diagonal_limit(x, p0.theta, op.config().chi)));
      if (!std::isfinite(fit.max_ratio)) return {false, "non-finite remainder ratio"};
      min_slope = std::min(min_slope, fit.loglog_slope);
      ++fits;
    }
  }
  return {min_slope >= 0.9 && max_gap <= 1e-12,
          fmt("min remainder log-log slope %.3g over %d rays, |K(0) - limit| %.3g", min_slope, fits, max_gap)};
}

Outcome perturbation_vanishing() {
  const auto t0 = clk::now();
  const Setup s = setup("n5_bump");
  const auto split = split_connection(s.model, s.sc.eps0);
  const auto hatf = extend_past_boundary(split);
  const auto barf = std::make_shared<BarField>(split);
  std::string detail;
  double zero_l2 = 0.0, zero_h = 0.0, prev_l2 = INFINITY, prev_h = INFINITY;
  bool monotone = true;
  std::vector<double> etas{0.0};
  for (double e : {0.02, 0.01, 0.005, 0.0025}) etas.push_back(e);
  for (double eta : etas) {
    const NormalOperatorConfig cfg = s.sc.operator_config(eta);
    const NormalOperator hat(hatf, cfg), bar(barf, cfg);
    const SchurBounds b = schur_estimate_E(hat, bar, s.sc.schur);
    detail += fmt("eta=%g L2=%.3g H10=%.3g; ", eta, b.l2_bound, b.h10_bound);
    if (eta == 0.0) {
      zero_l2 = b.l2_bound;
      zero_h = b.h10_bound;
      continue;
    }
    monotone = monotone && b.l2_bound < prev_l2 && b.h10_bound < prev_h;
    prev_l2 = b.l2_bound;
    prev_h = b.h10_bound;
  }
  detail += fmt("%.0f s", seconds_since(t0));
  return {zero_l2 <= 1e-12 && zero_h <= 1e-12 && monotone, detail};
}

Outcome injectivity_reconstruction() {
  const auto t0 = clk::now();
  const Setup s = setup("n5_bump");
  const NormalOperatorConfig cfg = s.sc.assembly_config();
  const NormalOperator op(s.field, cfg);
  AssemblyOptions ao;
  ao.method = s.sc.assembly_method;
  ao.rows = lens_nodes(cfg);
  const OperatorMatrix M = assemble_matrix(op, ao);
  const Certificate cert = injectivity_certificate(M);
  const double eta = cfg.eta(), Y = std::sqrt(eta / cfg.boundary.q);
  const Eigen::VectorXd f = sample_on_columns(M, cfg.grid, [&](const Vec& z) {
    const double r = std::pow((z[0] - 0.5 * eta) / (0.45 * eta), 2) + z.tail(2).squaredNorm() / (0.25 * Y * Y);
    return r < 1.0 ? std::pow(1.0 - r, 3) : 0.0;
  });
  const Reconstruction rec = reconstruct(M, M.A * f);
  const double err = relative_l2_error(rec.f, f, M.col_weights);
  const double secs = seconds_since(t0);
  return {cert.sigma_min > 0.0 && err <= 0.05 && secs < 600.0,
          fmt("%dx%d grid at eta=%g, %ld unknowns, sigma_min %.4g (%s), rec err %.3g, %.0f s", cfg.grid.nx,
              cfg.grid.ny, eta, static_cast<long>(M.A.cols()), cert.sigma_min, cert.method.c_str(), err, secs)};
}

Outcome exponential_decay() {
  const Setup s = setup("n5_bump");
  NormalOperatorConfig c1 = s.sc.operator_config(0.01), c2 = c1;
  c2.sigma = 2.0 * c1.sigma;
  const NormalOperator op1(s.field, c1), op2(s.field, c2);
  // long enough to cover band entry for rays that start outside the χ band
  std::vector<double> grid;
  for (int i = 0; i <= 80; ++i) grid.push_back(0.1 + 0.25 * i);
  bool ok = true;
  int rays = 0, vanish = 0;
  double worst = -INFINITY;
  for (const Vec& th : {vec3(0.6, 0.8, 0.0), vec3(0.5, 0.6, 0.6), vec3(0.7, -0.5, 0.5), vec3(0.9, 0.4, 0.0)}) {
    for (double x : {0.005, 0.01}) {
      const DecayScan a = decay_scan(op1, x, Vec::Zero(2), th, grid), b = decay_scan(op2, x, Vec::Zero(2), th, grid);
      ++rays;
      if (a.vanishes_identically) {
        ++vanish;
        continue;
      }
      ok = ok && a.slope < 0.0 && (b.vanishes_identically || b.slope < a.slope);
      worst = std::max(worst, a.slope);
    }
  }
  return {ok && vanish < rays,
          fmt("%d rays, %d vanish identically, largest slope at sigma %.3g; all steepen at 2 sigma: %s", rays, vanish,
              worst, ok ? "yes" : "no")};
}

Outcome hypothesis_boundary() {
  const Setup s = setup("n3_bump");
  std::string msg;
  try {
    split_connection(s.model, s.sc.eps0);
    return {false, "split_connection accepted N = 3"};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kRejected) return {false, std::string("wrong error: ") + e.what()};
    msg = e.what();
  }
  const auto out = std::filesystem::temp_directory_path() / "ahx_acceptance_n3";
  std::filesystem::remove_all(out);
  RunOptions o;
  o.out_dir = out.string();
  Scenario small = s.sc;
  small.geodesic_count = 10;
  small.xray_count = 5;
  const std::size_t files = run_subcommand(small, "geodesics", o).files.size() + run_subcommand(small, "xray", o).files.size();
  bool rejected = false;
  try {
    run_subcommand(small, "schur-sweep", o);
  } catch (const RunError& e) {
    rejected = e.operation() == "split_connection";
  }
  return {files > 0 && rejected, fmt("rejected with \"%s\"; geodesics + xray wrote %zu files", msg.c_str(), files)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"geodesic oracle", geodesic_oracle},
      {"inverse-exp oracle", inverse_exp_oracle},
      {"boundary convexity", convexity},
      {"transform relation", transform_relation},
      {"kernel/quadrature equivalence", kernel_quadrature},
      {"diagonal limit", diagonal_limit_check},
      {"perturbation vanishing", perturbation_vanishing},
      {"injectivity certificate and reconstruction", injectivity_reconstruction},
      {"exponential decay", exponential_decay},
      {"hypothesis boundary", hypothesis_boundary},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!pick.empty() && !pick.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("C%d %s %s: %s\n", id, o.pass ? "PASS" : "FAIL", criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
