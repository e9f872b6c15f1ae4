#include "ahx/blowup.hpp"
#include "ahx/inversion.hpp"
#include "ahx/scenario.hpp"
#include "ahx/xray.hpp"

#include "json.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>

namespace ahx {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(const std::filesystem::path& path, const std::string& comment, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw Error(ErrorCode::kDomain, "cannot write " + path.string());
    out_ << "# " << comment << '\n';
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << fmt17(values[i]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

std::vector<std::string> indexed(const std::string& stem, int count) {
  std::vector<std::string> v;
  for (int i = 0; i < count; ++i) v.push_back(stem + std::to_string(i + 1));
  return v;
}

template <class... Parts>
std::vector<std::string> cols(Parts&&... parts) {
  std::vector<std::string> out;
  auto add = [&](const auto& p) {
    if constexpr (std::is_convertible_v<decltype(p), std::string>) out.push_back(p);
    else out.insert(out.end(), p.begin(), p.end());
  };
  (add(parts), ...);
  return out;
}

void append(std::vector<double>& row, const Vec& v) {
  for (int i = 0; i < v.size(); ++i) row.push_back(v[i]);
}

struct Context {
  const Scenario& sc;
  std::filesystem::path out;
  int threads = 1;
  std::uint64_t seed = 1;
  std::string hash;
  RunReport& rep;
  std::shared_ptr<const MetricFamily> family;
  std::shared_ptr<const ProjectiveModel> model;
  std::shared_ptr<const ChristoffelField> field;
  std::optional<OperatorMatrix> matrix;
  std::optional<NormalOperatorConfig> matrix_cfg;

  std::string comment(const std::string& sub) const {
    return "config_hash=" + hash + " seed=" + std::to_string(seed) + " scenario=" + sc.name + " subcommand=" + sub;
  }
  Csv csv(const std::string& file, const std::string& sub, const std::vector<std::string>& header) {
    rep.files.push_back((out / file).string());
    return Csv(out / file, comment(sub), header);
  }
};

/// Runs fn, converting library errors into RunError naming the operation.
template <class F>
auto guarded(const std::string& op, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const RunError&) {
    throw;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSchema) throw;
    throw RunError(op, e.code(), e.what());
  } catch (const std::exception& e) {
    throw RunError(op, ErrorCode::kNumerical, e.what());
  }
}

void run_geodesics(Context& cx) {
  const int n = cx.sc.n();
  const bool hyperbolic = cx.sc.family.name == "hyperbolic";
  auto csv = cx.csv("geodesics.csv", "geodesics",
                    cols("id", "r0", indexed("y0_", n), "lambda", indexed("omega", n), "tau_minus", "tau_plus", "r_end",
                         indexed("y_end", n), "ode_residual", "closed_form_rel_err"));
  std::filesystem::create_directories(cx.out / "geodesics");
  std::mt19937_64 rng(cx.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < cx.sc.geodesic_count; ++i) {
    Vec z(n + 1), v(n + 1);
    z[0] = 0.055 + 0.045 * u(rng);
    for (int a = 0; a < n; ++a) z[a + 1] = 0.2 * u(rng);
    for (int k = 0; k <= n; ++k) v[k] = 0.5 * u(rng);
    const GeodesicPath path = guarded("geodesics", [&] { return integrate(*cx.field, z, v, -1.0, 1.0); });
    double cf = std::nan("");
    if (hyperbolic) {
      cf = 0.0;
      for (int k = 0; k <= 40; ++k) {
        const double t = -1.0 + 0.05 * k;
        Vec exact = z + t * v;
        exact[0] = z[0] + v[0] * t - v.tail(n).squaredNorm() * t * t;
        cf = std::max(cf, (path.z(t) - exact).norm() / exact.norm());
      }
    }
    {
      char name[48];
      std::snprintf(name, sizeof name, "geodesics/geodesic_%04d.csv", i);
      auto traj = cx.csv(name, "geodesics", cols("tau", "r", indexed("y", n), indexed("v", n + 1)));
      for (int k = 0; k <= 200; ++k) {
        const double t = -1.0 + 0.01 * k;
        std::vector<double> row{t};
        append(row, path.z(t));
        append(row, path.v(t));
        traj.row(row);
      }
    }
    const Vec end = path.z(path.tau_hi());
    std::vector<double> row{static_cast<double>(i), z[0]};
    append(row, z.tail(n));
    append(row, v);
    row.insert(row.end(), {path.tau_minus, path.tau_plus, end[0]});
    append(row, end.tail(n));
    row.push_back(geodesic_residual(*cx.field, path));
    row.push_back(cf);
    csv.row(row);
  }
}

void run_convexity(Context& cx) {
  const int n = cx.sc.n();
  auto csv = cx.csv("convexity.csv", "convexity",
                    cols("id", indexed("y", n), indexed("omega", n), "minus_2h", "analytic", "fd", "analytic_err",
                         "fd_err"));
  std::mt19937_64 rng(cx.seed + 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec> pts, dirs;
  const Vec c = cx.sc.operator_config(cx.sc.etas.front()).boundary.center(n);
  for (int i = 0; i < cx.sc.convexity_points; ++i) {
    Vec p = Vec::Zero(n + 1);
    for (int a = 0; a < n; ++a) p[a + 1] = c[a] + 0.5 * u(rng);
    pts.push_back(p);
  }
  for (int i = 0; i < cx.sc.convexity_dirs; ++i) {
    Vec w(n);
    for (int a = 0; a < n; ++a) w[a] = u(rng);
    dirs.push_back(w.normalized());
  }
  const auto samples = guarded("convexity", [&] { return convexity_scan(*cx.field, pts, dirs); });
  int id = 0;
  for (const auto& s : samples) {
    const Mat h = cx.model->k(0.0, s.point.tail(n));
    const double m2h = -2.0 * s.omega.dot(h * s.omega);
    std::vector<double> row{static_cast<double>(id++)};
    append(row, s.point.tail(n));
    append(row, s.omega);
    row.insert(row.end(), {m2h, s.analytic, s.fd, std::abs(s.analytic - m2h), std::abs(s.fd - m2h)});
    csv.row(row);
  }
}

void run_xray(Context& cx) {
  const int n = cx.sc.n();
  auto csv = cx.csv("xray.csv", "xray", {"id", "tau_minus", "tau_plus", "I_hat", "I", "residual", "tail_bound"});
  const auto geos = guarded("xray", [&] { return sample_local_geodesics(cx.family, cx.sc.xray_count, cx.seed); });
  Vec center = Vec::Zero(n);
  for (int a = 0; a < n && a < static_cast<int>(cx.sc.family.center.size()); ++a) center[a] = cx.sc.family.center[a];
  const TestFunction f = bump_function(n, 3, 0.5, center, 0.6);
  for (std::size_t i = 0; i < geos.size(); ++i) {
    const RelationReport r = guarded("xray", [&] { return verify_relation(cx.family, f, geos[i], 1.0); });
    csv.row({static_cast<double>(i), r.tau_minus, r.tau_plus, r.I_hat, r.I, r.residual, r.tail_bound});
  }
}

void run_kernel(Context& cx) {
  const int n = cx.sc.n();
  auto csv = cx.csv("kernel.csv", "kernel",
                    cols("eta", "x", indexed("y", n), "xt", indexed("yt", n), "kappa", "P", "vnorm", "evaluated"));
  for (double eta : cx.sc.etas) {
    const NormalOperatorConfig cfg = cx.sc.operator_config(eta);
    const NormalOperator op(cx.field, cfg);
    const double xs = std::max(eta, 0.0025);
    Vec z = Vec::Zero(n + 1);
    z[0] = 0.5 * xs;
    z.tail(n) = cfg.boundary.center(n);
    const int m = 21;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        Vec zt = z;
        zt[0] = z[0] * (0.5 + i / static_cast<double>(m - 1));
        zt[1] = z[1] + 2.0 * std::sqrt(z[0]) * (-1.0 + 2.0 * j / static_cast<double>(m - 1));
        if ((zt - z).norm() == 0.0) continue;
        const KernelValue kv = guarded("kernel", [&] { return op.kernel(z, zt); });
        std::vector<double> row{eta};
        append(row, z);
        append(row, zt);
        row.insert(row.end(), {kv.value, kv.P, kv.vnorm, kv.evaluated ? 1.0 : 0.0});
        csv.row(row);
      }
    }
  }
}

void run_blowup(Context& cx) {
  const int n = cx.sc.n();
  const double eta = cx.sc.etas.front();
  const NormalOperatorConfig cfg = cx.sc.operator_config(eta);
  const NormalOperator op(cx.field, cfg);
  const Vec y0 = cfg.boundary.center(n);
  std::vector<Vec> thetas;
  for (double a : {0.3, 0.0, -0.2}) {
    Vec th = Vec::Zero(n + 1);
    th[0] = a;
    th[1] = 0.9;
    if (n > 1) th[2] = 0.3 - a;
    thetas.push_back(th.normalized());
  }
  {
    auto csv = cx.csv("blowup.csv", "blowup",
                      cols("eta", "x", indexed("y", n), "R", indexed("theta", n + 1), "K", "diag_limit", "x01", "x10",
                           "x11", "density", "identity_residual"));
    for (const Vec& th : thetas) {
      for (double x : {0.005, 0.02}) {
        for (double R : {0.0, 0.0125, 0.025, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0}) {
          const BlowupPoint p = make_blowup_point(x, y0, R, th);
          const LiftedKernel lk = guarded("blowup", [&] { return lifted_kernel(op, p); });
          const DefiningFunctions df = defining_functions(x, R, p.X_hat());
          std::vector<double> row{eta, x};
          append(row, y0);
          row.push_back(R);
          append(row, p.theta);
          row.insert(row.end(), {lk.value, diagonal_limit(x, p.theta, cfg.chi), df.x01, df.x10, df.x11,
                                 density_factor(n, x, R, p.X_hat()), std::abs(lk.value - lk.from_downstairs)});
          csv.row(row);
        }
      }
    }
  }
  {
    auto csv = cx.csv("blowup_diagonal.csv", "blowup",
                      cols("x", indexed("theta", n + 1), "limit", "loglog_slope", "max_ratio"));
    for (const Vec& th : thetas) {
      for (double x : {0.005, 0.02}) {
        const DiagonalFit fit = guarded("blowup", [&] { return fit_diagonal_remainder(op, x, y0, th); });
        std::vector<double> row{x};
        append(row, th);
        row.insert(row.end(), {fit.limit, fit.loglog_slope, fit.max_ratio});
        csv.row(row);
      }
    }
  }
  {
    auto csv = cx.csv("blowup_decay.csv", "blowup",
                      cols("sigma", "x", indexed("theta", n + 1), "slope", "fitted", "vanishes_identically"));
    Vec th = Vec::Zero(n + 1);
    th[0] = 0.6;
    th[1] = 0.8;
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(0.1 + 0.25 * i);
    for (double s : {cx.sc.sigma, 2.0 * cx.sc.sigma}) {
      NormalOperatorConfig c2 = cfg;
      c2.sigma = s;
      const NormalOperator op2(cx.field, c2);
      const DecayScan ds = guarded("blowup", [&] { return decay_scan(op2, 0.01, y0, th, grid); });
      std::vector<double> row{s, 0.01};
      append(row, th);
      row.insert(row.end(), {ds.slope, static_cast<double>(ds.fitted), ds.vanishes_identically ? 1.0 : 0.0});
      csv.row(row);
    }
  }
}

std::vector<BlowupPoint> difference_samples(int n, double eta, const Vec& center) {
  std::vector<BlowupPoint> S;
  const double xs = std::max(eta, 0.0025);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 6; ++j) {
      for (double R : {0.05, 0.3, 1.0}) {
        const double a = 0.5 * j;
        Vec th = Vec::Zero(n + 1);
        th[0] = 0.4 * std::cos(a);
        th[1] = std::sin(a) + 0.3;
        if (n > 1) th[2] = std::cos(a);
        Vec y = center;
        y[0] += 0.1 * (i - 1.5) * std::sqrt(xs);
        S.push_back(make_blowup_point(xs * (0.2 + 0.4 * i), y, R, th));
      }
    }
  }
  return S;
}

void run_schur(Context& cx) {
  const int n = cx.sc.n();
  const auto split = guarded("split_connection", [&] { return split_connection(cx.model, cx.sc.eps0); });
  const auto hatf = extend_past_boundary(split);
  const auto barf = std::make_shared<BarField>(split);
  auto csv = cx.csv("schur_sweep.csv", "schur-sweep",
                    {"eta", "row_sup", "col_sup", "l2_bound", "h10_bound", "kernel_evals", "nonzero_pairs",
                     "kdiff_sup", "kdiff_sup_over_R", "kdiff_x_dx", "kdiff_x_dy"});
  for (double eta : cx.sc.etas) {
    const NormalOperatorConfig cfg = cx.sc.operator_config(eta);
    const NormalOperator hat(hatf, cfg), bar(barf, cfg);
    SchurOptions so = cx.sc.schur;
    so.threads = cx.threads;
    const SchurBounds sb = guarded("schur_estimate_E", [&] { return schur_estimate_E(hat, bar, so); });
    const auto kd = guarded("kernel_difference_diag", [&] {
      return kernel_difference_diag(hat, bar, difference_samples(n, eta, cfg.boundary.center(n)));
    });
    csv.row({eta, sb.row_sup, sb.col_sup, sb.l2_bound, sb.h10_bound, static_cast<double>(sb.kernel_evals),
             static_cast<double>(sb.nonzero_pairs), kd.sup_abs, kd.sup_R, kd.sup_dx, kd.sup_dy});
  }
}

void ensure_matrix(Context& cx) {
  if (cx.matrix) return;
  const NormalOperatorConfig cfg = guarded("assemble", [&] { return cx.sc.assembly_config(); });
  const NormalOperator op(cx.field, cfg);
  AssemblyOptions ao;
  ao.method = cx.sc.assembly_method;
  ao.rows = lens_nodes(cfg);
  ao.threads = cx.threads;
  cx.matrix = guarded("assemble", [&] { return assemble_matrix(op, ao); });
  cx.matrix_cfg = cfg;
}

void run_assemble(Context& cx) {
  ensure_matrix(cx);
  const OperatorMatrix& m = *cx.matrix;
  const NormalOperatorConfig& cfg = *cx.matrix_cfg;
  const int n = cx.sc.n();
  nlohmann::json header = {{"rows", m.A.rows()},
                           {"cols", m.A.cols()},
                           {"dtype", "float64"},
                           {"endianness", "little"},
                           {"order", "row-major"},
                           {"config_hash", m.config_hash},
                           {"scenario_hash", cx.hash},
                           {"field", m.field_tag},
                           {"method", m.method},
                           {"eta", cfg.eta()}};
  const auto path = cx.out / "matrix.bin";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RunError("assemble", ErrorCode::kDomain, "cannot write " + path.string());
  out << header.dump() << '\n';
  for (Eigen::Index i = 0; i < m.A.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.A.cols(); ++j) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(m.A(i, j));
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
  cx.rep.files.push_back(path.string());
  auto csv = cx.csv("matrix_nodes.csv", "assemble", cols("role", "position", "grid_index", "x", indexed("y", n), "weight"));
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    std::vector<double> row{0.0, static_cast<double>(i), static_cast<double>(m.rows[i])};
    append(row, cfg.grid.node(m.rows[i]));
    row.push_back(m.row_weights[static_cast<Eigen::Index>(i)]);
    csv.row(row);
  }
  for (std::size_t j = 0; j < m.cols.size(); ++j) {
    std::vector<double> row{1.0, static_cast<double>(j), static_cast<double>(m.cols[j])};
    append(row, cfg.grid.node(m.cols[j]));
    row.push_back(m.col_weights[static_cast<Eigen::Index>(j)]);
    csv.row(row);
  }
}

void run_invert(Context& cx) {
  ensure_matrix(cx);
  const OperatorMatrix& m = *cx.matrix;
  const NormalOperatorConfig& cfg = *cx.matrix_cfg;
  const int n = cx.sc.n();
  const Certificate cert = guarded("injectivity_certificate", [&] { return injectivity_certificate(m); });
  const double eta = cfg.eta();
  const double Y = std::sqrt(eta / cfg.boundary.q);
  const Vec c = cfg.boundary.center(n);
  const Eigen::VectorXd f = sample_on_columns(m, cfg.grid, [&](const Vec& z) {
    const double s = std::pow((z[0] - 0.5 * eta) / (0.45 * eta), 2) + (z.tail(n) - c).squaredNorm() / (0.25 * Y * Y);
    return s < 1.0 ? std::pow(1.0 - s, 3) : 0.0;
  });
  const Eigen::VectorXd data = m.A * f;
  const Reconstruction rec = guarded("reconstruct", [&] { return reconstruct(m, data); });
  const double err = relative_l2_error(rec.f, f, m.col_weights);
  const auto probes = make_probes(m, cfg.grid, cx.seed);
  const StabilityResult st = guarded("stability_ratio", [&] { return stability_ratio(m, cfg.grid, probes); });

  nlohmann::json rep = {{"config_hash", m.config_hash},
                        {"scenario_hash", cx.hash},
                        {"eta", eta},
                        {"rows", m.A.rows()},
                        {"cols", m.A.cols()},
                        {"sigma_min", cert.sigma_min},
                        {"sigma_max", cert.sigma_max},
                        {"certificate_method", cert.method},
                        {"stability_ratio", st.ratio},
                        {"injectivity_failure", st.injectivity_failure},
                        {"probes", probes.size()},
                        {"rel_error", err},
                        {"iterations", rec.iterations},
                        {"converged", rec.converged},
                        {"reg", rec.reg},
                        {"residual_history", rec.residual_history}};
  const auto path = cx.out / "invert.json";
  std::ofstream out(path);
  out << rep.dump(2) << '\n';
  cx.rep.files.push_back(path.string());
  auto csv = cx.csv("invert.csv", "invert", cols("grid_index", "x", indexed("y", n), "f", "f_hat"));
  for (std::size_t j = 0; j < m.cols.size(); ++j) {
    std::vector<double> row{static_cast<double>(m.cols[j])};
    append(row, cfg.grid.node(m.cols[j]));
    row.push_back(f[static_cast<Eigen::Index>(j)]);
    row.push_back(rec.f[static_cast<Eigen::Index>(j)]);
    csv.row(row);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "invert: sigma_min=%.6g rel_error=%.3g iterations=%d", cert.sigma_min, err,
                rec.iterations);
  cx.rep.notes.push_back(buf);
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{"geodesics", "xray",     "kernel", "blowup",   "schur-sweep",
                                              "assemble",  "invert",   "convexity", "all"};
  return names;
}

RunReport run_subcommand(const Scenario& sc, const std::string& sub, const RunOptions& opts) {
  static const std::map<std::string, std::function<void(Context&)>> table{
      {"geodesics", run_geodesics}, {"convexity", run_convexity}, {"xray", run_xray},
      {"kernel", run_kernel},       {"blowup", run_blowup},       {"schur-sweep", run_schur},
      {"assemble", run_assemble},   {"invert", run_invert}};
  if (sub != "all" && !table.count(sub)) throw Error(ErrorCode::kInvalidArgument, "unknown subcommand '" + sub + "'");
  RunReport rep;
  Context cx{sc, opts.out_dir.empty() ? sc.output_dir : opts.out_dir, std::max(1, opts.threads),
             opts.seed_set ? opts.seed : sc.seed, sc.hash(), rep, nullptr, nullptr, nullptr, std::nullopt,
             std::nullopt};
  std::filesystem::create_directories(cx.out);
  cx.family = make_family(sc.family);
  cx.model = guarded("to_even_structure", [&] { return to_even_structure(*cx.family); });
  cx.field = guarded("projective_field", [&] { return projective_field(cx.model, sc.eps0); });
  if (sub == "all") {
    for (const char* s : {"geodesics", "convexity", "xray", "kernel", "blowup", "schur-sweep", "assemble", "invert"}) {
      table.at(s)(cx);
    }
  } else {
    table.at(sub)(cx);
  }
  return rep;
}

}  // namespace ahx
