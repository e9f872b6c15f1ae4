#include "ahx/normalop.hpp"

#include "ahx/parallel.hpp"
#include "ahx/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>

namespace ahx {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Direction {
  Vec yhat;  // unit boundary direction
  double w;
};

/// Unit directions in ℝⁿ with quadrature weights for the (n−1)-sphere.
std::vector<Direction> boundary_directions(int n, int n_az) {
  std::vector<Direction> out;
  if (n == 1) {
    for (double sgn : {-1.0, 1.0}) out.push_back({Vec::Constant(1, sgn), 1.0});
    return out;
  }
  if (n == 2) {
    for (int k = 0; k < n_az; ++k) {
      const double phi = 2.0 * kPi * k / n_az;
      Vec d(2);
      d << std::cos(phi), std::sin(phi);
      out.push_back({d, 2.0 * kPi / n_az});
    }
    return out;
  }
  if (n == 3) {
    const QuadRule& gl = gauss_legendre(std::max(2, n_az / 2));
    for (size_t i = 0; i < gl.x.size(); ++i) {
      const double u = gl.x[i], su = std::sqrt(1.0 - u * u);
      for (int k = 0; k < n_az; ++k) {
        const double phi = 2.0 * kPi * k / n_az;
        Vec d(3);
        d << su * std::cos(phi), su * std::sin(phi), u;
        out.push_back({d, gl.w[i] * 2.0 * kPi / n_az});
      }
    }
    return out;
  }
  throw Error(ErrorCode::kInvalidArgument, "boundary dimension must be 1, 2 or 3");
}

struct BandDirection {
  Vec v;  // unit chart velocity (λ, ω)
  double w;  // sphere weight times χ
};

/// Product rule on the χ-band |λ| ≤ M|ω|x of the unit sphere in ℝ^{n+1}.
std::vector<BandDirection> band_directions(int n, double x, const CutoffProfile& chi, const SphereGrid& g) {
  std::vector<BandDirection> out;
  if (!(x > 0.0)) return out;
  const double beta = std::atan(chi.M * x);
  const QuadRule th = gauss_legendre(g.n_polar, 0.5 * kPi - beta, 0.5 * kPi + beta);
  const auto dirs = boundary_directions(n, g.n_azimuth);
  for (size_t i = 0; i < th.x.size(); ++i) {
    const double c = std::cos(th.x[i]), s = std::sin(th.x[i]);
    const double wchi = chi(c / (s * x));
    if (wchi == 0.0) continue;
    const double wth = th.w[i] * std::pow(s, n - 1) * wchi;
    for (const auto& d : dirs) {
      Vec v(n + 1);
      v[0] = c;
      v.tail(n) = s * d.yhat;
      out.push_back({v, wth * d.w});
    }
  }
  return out;
}

std::vector<double> path_breaks(const GeodesicPath& p, double x) {
  std::vector<double> b;
  for (const auto& s : p.segments()) {
    b.push_back(std::min(s.t0, s.t1()));
    b.push_back(std::max(s.t0, s.t1()));
  }
  for (double f : {0.0, 1.0, 3.0, 10.0}) {
    b.push_back(f * x);
    b.push_back(-f * x);
  }
  const double lo = p.tau_lo(), hi = p.tau_hi();
  std::vector<double> out;
  for (double t : b) {
    if (t >= lo && t <= hi) out.push_back(t);
  }
  out.push_back(lo);
  out.push_back(hi);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [](double a, double c) { return std::abs(a - c) < 1e-15; }),
            out.end());
  return out;
}

void hash_mix(std::uint64_t& h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
}

void hash_num(std::uint64_t& h, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g;", v);
  hash_mix(h, buf);
}

std::vector<double> axis_weights(int count, double h) {
  std::vector<double> w(count, h);
  if (count > 1) {
    w.front() *= 0.5;
    w.back() *= 0.5;
  }
  return w;
}

}  // namespace

// Artificial boundary

Vec ArtificialBoundary::to_base(const Vec& z) const {
  const int n = static_cast<int>(z.size()) - 1;
  Vec b = z;
  b[0] = eta - z[0] - q * (z.tail(n) - center(n)).squaredNorm();
  return b;
}

Vec ArtificialBoundary::to_chart(const Vec& base) const {
  // the map is an involution in the first coordinate
  return to_base(base);
}

Vec ArtificialBoundary::vel_to_base(const Vec& z, const Vec& vc) const {
  const int n = static_cast<int>(z.size()) - 1;
  Vec vb = vc;
  vb[0] = -vc[0] - 2.0 * q * (z.tail(n) - center(n)).dot(vc.tail(n));
  return vb;
}

Vec ArtificialBoundary::vel_to_chart(const Vec& z, const Vec& vb) const { return vel_to_base(z, vb); }

double ArtificialBoundary::x_hat(const Vec& base) const {
  const int n = static_cast<int>(base.size()) - 1;
  return -base[0] - q * (base.tail(n) - center(n)).squaredNorm();
}

bool ArtificialBoundary::in_lens(const Vec& z) const {
  const int n = static_cast<int>(z.size()) - 1;
  return z[0] >= 0.0 && z[0] <= eta - q * (z.tail(n) - center(n)).squaredNorm();
}

// Spatial grid

int SpatialGrid::size() const {
  int s = nx;
  for (int a = 0; a < n; ++a) s *= ny;
  return s;
}

Vec SpatialGrid::node(int idx) const {
  int ix, iy[kMaxDim];
  unpack(idx, ix, iy);
  Vec z(n + 1);
  z[0] = x_lo + ix * hx();
  for (int a = 0; a < n; ++a) z[a + 1] = y_lo[a] + iy[a] * hy(a);
  return z;
}

int SpatialGrid::index(int ix, const int* iy) const {
  int idx = 0;
  for (int a = n - 1; a >= 0; --a) idx = idx * ny + iy[a];
  return idx * nx + ix;
}

void SpatialGrid::unpack(int idx, int& ix, int* iy) const {
  ix = idx % nx;
  idx /= nx;
  for (int a = 0; a < n; ++a) {
    iy[a] = idx % ny;
    idx /= ny;
  }
}

double SpatialGrid::cell_volume() const {
  double v = hx();
  for (int a = 0; a < n; ++a) v *= hy(a);
  return v;
}

int SpatialGrid::hat_weights(const Vec& z, int* idx, double* w) const {
  const int d = n + 1;
  int base[kMaxDim];
  double frac[kMaxDim];
  for (int k = 0; k < d; ++k) {
    const double lo = k == 0 ? x_lo : y_lo[k - 1];
    const double h = k == 0 ? hx() : hy(k - 1);
    const int cnt = k == 0 ? nx : ny;
    const double u = (z[k] - lo) / h;
    if (!(u >= 0.0) || u > cnt - 1) return 0;
    int i0 = static_cast<int>(std::floor(u));
    if (i0 >= cnt - 1) i0 = cnt - 2;
    base[k] = i0;
    frac[k] = u - i0;
  }
  int count = 0;
  for (int corner = 0; corner < (1 << d); ++corner) {
    double wt = 1.0;
    int ix = 0, iy[kMaxDim];
    for (int k = 0; k < d; ++k) {
      const int bit = (corner >> k) & 1;
      wt *= bit ? frac[k] : 1.0 - frac[k];
      const int i = base[k] + bit;
      if (k == 0)
        ix = i;
      else
        iy[k - 1] = i;
    }
    if (wt == 0.0) continue;
    idx[count] = index(ix, iy);
    w[count] = wt;
    ++count;
  }
  return count;
}

SpatialGrid SpatialGrid::refined() const {
  SpatialGrid g = *this;
  g.nx = 2 * nx - 1;
  g.ny = 2 * ny - 1;
  return g;
}

void SpatialGrid::validate() const {
  if (n < 1 || n > kMaxDim - 1) throw Error(ErrorCode::kInvalidArgument, "grid boundary dimension out of range");
  if (nx < 2 || ny < 2) throw Error(ErrorCode::kInvalidArgument, "grid needs at least 2 nodes per axis");
  if (!(x_lo > 0.0) || !(x_hi > x_lo)) throw Error(ErrorCode::kInvalidArgument, "grid needs 0 < x_lo < x_hi");
  if (y_lo.size() != n || y_hi.size() != n) throw Error(ErrorCode::kInvalidArgument, "grid y bounds size mismatch");
  for (int a = 0; a < n; ++a) {
    if (!(y_hi[a] > y_lo[a])) throw Error(ErrorCode::kInvalidArgument, "grid needs y_lo < y_hi");
  }
}

// Config

void NormalOperatorConfig::validate() const {
  grid.validate();
  if (!(chi.M > 0.0)) throw Error(ErrorCode::kInvalidArgument, "cutoff half-width M must be positive");
  if (!(sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma must be non-negative");
  if (!(boundary.q > 0.0)) throw Error(ErrorCode::kInvalidArgument, "concavity q must be positive");
  if (!(boundary.eta >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "eta must be non-negative");
  if (boundary.y_p.size() != 0 && boundary.y_p.size() != grid.n)
    throw Error(ErrorCode::kInvalidArgument, "boundary center has the wrong dimension");
  if (!(loc.c0 > 0.0) || !(loc.delta1 > 0.0) || !(loc.delta2 > loc.delta1) || !(loc.C_tilde > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "locality constants need c0, delta1, C_tilde > 0 and delta2 > delta1");
  if (sphere.n_polar < 2 || sphere.n_azimuth < 4) throw Error(ErrorCode::kInvalidArgument, "sphere grid too small");
  // the χ-support must imply the velocity condition |λ|/|ω| ≤ C̃√x on the grid
  if (chi.M * grid.x_hi > loc.C_tilde * std::sqrt(grid.x_hi))
    throw Error(ErrorCode::kInconsistent, "M x <= C_tilde sqrt(x) fails on the grid");
}

std::string NormalOperatorConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : {chi.M, sigma, boundary.q, boundary.eta, loc.c0, loc.delta1, loc.delta2, loc.C_tilde, ode_rtol,
                   shoot_tol, grid.x_lo, grid.x_hi, kq.exp_cutoff, kq.cells_per_panel})
    hash_num(h, v);
  for (int v : {sphere.n_polar, sphere.n_azimuth, grid.n, grid.nx, grid.ny, kq.n_s, kq.n_azimuth, kq.nodes_per_panel,
                kq.max_panels})
    hash_num(h, v);
  for (int a = 0; a < grid.n; ++a) {
    hash_num(h, grid.y_lo[a]);
    hash_num(h, grid.y_hi[a]);
    hash_num(h, boundary.center(grid.n)[a]);
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Locality

LocalityWitness locality_check(const ChristoffelField& field, const NormalOperatorConfig& cfg, const Vec& z,
                               const Vec& v) {
  const int n = cfg.n();
  LocalityWitness w;
  const double om = v.tail(n).norm();
  if (om == 0.0) throw Error(ErrorCode::kInvalidArgument, "degenerate direction: omega = 0");
  const double x = z[0];
  if (!(x >= 0.0 && x <= cfg.loc.c0)) {
    w.reason = "x outside [0, c0]";
    return w;
  }
  if (std::abs(v[0]) / om > cfg.loc.C_tilde * std::sqrt(x)) {
    w.reason = "|lambda|/|omega| exceeds C_tilde sqrt(x)";
    return w;
  }
  w.precondition_ok = true;
  const ArtificialBoundary& bd = cfg.boundary;
  GeodesicOptions go;
  go.rtol = cfg.ode_rtol;
  go.find_exit_times = false;
  const GeodesicPath p = integrate(field, bd.to_base(z), bd.vel_to_base(z, v), -cfg.loc.delta2, cfg.loc.delta2, go);
  if (p.tau_lo() > -cfg.loc.delta2 || p.tau_hi() < cfg.loc.delta2) {
    w.reason = "geodesic left the field domain before |t| = delta2";
    return w;
  }
  auto xeta = [&](double t) { return bd.to_chart(p.z(t))[0]; };
  const int K = 400;
  double min_x = kOpenEnd, outer_min = kOpenEnd;
  for (int k = 0; k <= K; ++k) {
    const double t = -cfg.loc.delta2 + 2.0 * cfg.loc.delta2 * k / K;
    const double xv = xeta(t);
    min_x = std::min(min_x, xv);
    if (std::abs(t) >= cfg.loc.delta1) outer_min = std::min(outer_min, xv);
  }
  min_x = std::min(min_x, xeta(0.0));
  w.min_x_eta = min_x;
  w.re_entry_bound = std::min(xeta(-cfg.loc.delta1), xeta(cfg.loc.delta1));
  outer_min = std::min(outer_min, w.re_entry_bound);
  const double slack = 1e-12;
  w.passed = min_x >= -slack && outer_min >= cfg.loc.c0;
  if (!w.passed) w.reason = min_x < -slack ? "x_eta becomes negative" : "x_eta below c0 for |t| >= delta1";
  return w;
}

// Operator

NormalOperator::NormalOperator(std::shared_ptr<const ChristoffelField> field, NormalOperatorConfig cfg)
    : field_(std::move(field)), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (field_->dim() != cfg_.n() + 1) throw Error(ErrorCode::kInvalidArgument, "field and grid dimensions differ");
}

GeodesicPath NormalOperator::geodesic(const Vec& z, const Vec& v, double span) const {
  GeodesicOptions go;
  go.rtol = cfg_.ode_rtol;
  go.atol = 1e-2 * cfg_.ode_rtol;
  go.find_exit_times = false;
  const ArtificialBoundary& bd = cfg_.boundary;
  return integrate(*field_, bd.to_base(z), bd.vel_to_base(z, v), -span, span, go);
}

double NormalOperator::apply_A(const ScalarField& f, const Vec& z, bool* degenerate) const {
  const int n = cfg_.n();
  const double x = z[0];
  if (degenerate) *degenerate = false;
  if (!(x > 0.0)) {
    // the band collapses onto λ = 0 and its measure vanishes linearly in x
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  const ArtificialBoundary& bd = cfg_.boundary;
  double total = 0.0;
  for (const auto& d : band_directions(n, x, cfg_.chi, cfg_.sphere)) {
    const GeodesicPath p = geodesic(z, d.v, cfg_.loc.delta1);
    auto g = [&](double t) { return f(bd.to_chart(p.z(t))); };
    const AdaptiveResult r = integrate_gk(g, path_breaks(p, x), 1e-15, 1e-10, 4000);
    total += d.w * r.value;
  }
  return total;
}

double NormalOperator::apply_A_sigma(const ScalarField& f, const Vec& z) const {
  const double x = z[0];
  if (!(x > 0.0)) throw Error(ErrorCode::kDomain, "apply_A_sigma needs x_eta > 0");
  const double sigma = cfg_.sigma;
  ScalarField g = [&](const Vec& zt) {
    const double xt = zt[0];
    if (!(xt > 0.0)) return 0.0;
    const double fv = f(zt);
    if (fv == 0.0) return 0.0;
    return fv * std::exp(-sigma * (1.0 / x - 1.0 / xt));
  };
  return apply_A(g, z) / (x * x);
}

double NormalOperator::chart_curvature(const Vec& z, const Vec& yhat) const {
  const int n = cfg_.n();
  const ArtificialBoundary& bd = cfg_.boundary;
  Vec vc = Vec::Zero(n + 1);
  vc.tail(n) = yhat;
  const Vec Z = bd.to_base(z);
  const Vec vb = bd.vel_to_base(z, vc);
  Christoffel g;
  field_->eval(Z, g);
  const Vec acc = -g.contract(vb);
  const Vec dy = z.tail(n) - bd.center(n);
  const double xpp = -acc[0] - 2.0 * bd.q * yhat.squaredNorm() - 2.0 * bd.q * dy.dot(acc.tail(n));
  return 0.5 * xpp;
}

KernelValue NormalOperator::kernel(const Vec& z, const Vec& zt, const Vec* guess_base, bool track_r) const {
  const int n = cfg_.n();
  KernelValue kv;
  const double x = z[0], xt = zt[0];
  if (!(x > 0.0)) throw Error(ErrorCode::kDomain, "kernel needs x_eta(z) > 0");
  if (!(xt > 0.0)) return kv;
  const double expo = cfg_.sigma * (1.0 / x - 1.0 / xt);
  if (expo > cfg_.kq.exp_cutoff) return kv;
  const double dyn = (zt.tail(n) - z.tail(n)).norm();
  if (dyn == 0.0) {
    if (zt[0] == z[0]) throw Error(ErrorCode::kInvalidArgument, "kernel evaluated on the diagonal");
    return kv;
  }
  const ArtificialBoundary& bd = cfg_.boundary;
  const Vec Z = bd.to_base(z), Zt = bd.to_base(zt);
  Vec seed;
  if (guess_base) {
    seed = *guess_base;
  } else {
    Christoffel g;
    field_->eval(Z, g);
    const Vec d = Zt - Z;
    seed = d + 0.5 * g.contract(d);
  }
  {
    // cheap rejection from the second-order seed; generous margins
    const Vec vc = bd.vel_to_chart(z, seed);
    const double om = vc.tail(n).norm();
    if (vc.norm() > 2.0 * cfg_.loc.delta1) return kv;
    if (om > 0.0 && std::abs(vc[0] / (x * om)) > 2.0 * cfg_.chi.M + 1.0) return kv;
  }
  InverseExpOptions io;
  io.tol = cfg_.shoot_tol;
  io.geo.rtol = cfg_.ode_rtol;
  io.geo.atol = 1e-2 * cfg_.ode_rtol;
  io.geo.keep_dense = false;
  io.geo.find_exit_times = false;
  io.guess = seed;
  io.track_max_r = track_r;
  const InverseExpResult res = inverse_exp(*field_, Z, Zt, io);
  kv.evaluated = true;
  kv.max_r = res.max_r;
  kv.v_base = res.v;
  kv.v = bd.vel_to_chart(z, res.v);
  kv.inv_jacobian = res.inv_jacobian;
  kv.vnorm = kv.v.norm();
  const double om = kv.v.tail(n).norm();
  if (om == 0.0) return kv;
  kv.P = kv.v[0] / (x * om);
  if (kv.vnorm > cfg_.loc.delta1) return kv;
  const double c = cfg_.chi(kv.P);
  if (c == 0.0) return kv;
  kv.value = std::exp(-expo) * 2.0 * c * kv.inv_jacobian / (x * x * std::pow(kv.vnorm, n));
  return kv;
}

double apply_A(const ChristoffelField& field, const NormalOperatorConfig& cfg, const ScalarField& f, const Vec& z,
               bool* degenerate) {
  struct NoDelete {
    void operator()(const ChristoffelField*) const {}
  };
  NormalOperator op(std::shared_ptr<const ChristoffelField>(&field, NoDelete{}), cfg);
  return op.apply_A(f, z, degenerate);
}

double apply_A_sigma(const ChristoffelField& field, const NormalOperatorConfig& cfg, const ScalarField& f,
                     const Vec& z) {
  struct NoDelete {
    void operator()(const ChristoffelField*) const {}
  };
  NormalOperator op(std::shared_ptr<const ChristoffelField>(&field, NoDelete{}), cfg);
  return op.apply_A_sigma(f, z);
}

double kernel_direct(const ChristoffelField& field, const NormalOperatorConfig& cfg, const Vec& z, const Vec& zt) {
  struct NoDelete {
    void operator()(const ChristoffelField*) const {}
  };
  NormalOperator op(std::shared_ptr<const ChristoffelField>(&field, NoDelete{}), cfg);
  return op.kernel(z, zt).value;
}

NormalOperatorConfig translate_operator(const NormalOperatorConfig& cfg, double eta) {
  if (!(eta >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "eta must be non-negative");
  NormalOperatorConfig out = cfg;
  out.boundary.eta = eta;
  return out;
}

double kernel_physical(const ChristoffelField& field, const NormalOperatorConfig& cfg, const Vec& zhat,
                       const Vec& zthat) {
  Vec z = zhat, zt = zthat;
  z[0] += cfg.eta();
  zt[0] += cfg.eta();
  return kernel_direct(field, cfg, z, zt);
}

// Kernel-adapted quadrature

namespace {

double min_hy(const SpatialGrid& g) {
  double h = kOpenEnd;
  for (int a = 0; a < g.n; ++a) h = std::min(h, g.hy(a));
  return h;
}

int panel_count(double rho_max, double len, int max_panels) {
  if (!(rho_max > 0.0)) return 0;
  const int p = static_cast<int>(std::ceil(rho_max / std::max(len, 1e-300)));
  return std::clamp(p, 1, max_panels);
}

}  // namespace

std::vector<RowNode> kernel_row_nodes(const NormalOperator& op, const Vec& z, bool lens_only, int fixed_panels) {
  const NormalOperatorConfig& cfg = op.config();
  const int n = cfg.n();
  const double x = z[0];
  if (!(x > 0.0)) throw Error(ErrorCode::kDomain, "row quadrature needs x > 0");
  const KernelQuadrature& kq = cfg.kq;
  const double s_max = 1.25 * cfg.chi.M;
  const QuadRule srule = gauss_legendre(kq.n_s, -s_max, s_max);
  const QuadRule& pr = gauss_legendre(kq.nodes_per_panel);
  const double hyg = min_hy(cfg.grid), hxg = cfg.grid.hx();
  const double lens_y = std::sqrt(std::max(cfg.eta(), 0.0) / cfg.boundary.q);
  const double ydist = (z.tail(n) - cfg.boundary.center(n)).norm();
  std::vector<RowNode> out;
  const auto dirs = boundary_directions(n, kq.n_azimuth);
  for (size_t k = 0; k < dirs.size(); ++k) {
    const Vec& yh = dirs[k].yhat;
    const double a = std::max(op.chart_curvature(z, yh), 0.05);
    double rho_max = 1.2 * cfg.loc.delta1 / x;
    if (cfg.sigma > 0.0) {
      const double c = kq.exp_cutoff;
      if (cfg.sigma - c * x > 0.0) {
        const double Xs = c / (cfg.sigma - c * x);
        rho_max = std::min(rho_max, (s_max + std::sqrt(s_max * s_max + 4.0 * a * Xs)) / (2.0 * a));
      }
    }
    if (lens_only) {
      rho_max = std::min(rho_max, (ydist + lens_y + 2.0 * hyg) / x);
      const double Xmax = (cfg.eta() + 2.0 * hxg - x) / (x * x);
      const double disc = s_max * s_max + 4.0 * a * Xmax;
      if (disc < 0.0) continue;
      rho_max = std::min(rho_max, (s_max + std::sqrt(disc)) / (2.0 * a));
    }
    const double len = kq.cells_per_panel *
                       std::min(hyg / x, hxg / (x * x * (s_max + 2.0 * a * std::max(rho_max, 0.0))));
    const int panels = fixed_panels > 0 ? (rho_max > 0.0 ? fixed_panels : 0) : panel_count(rho_max, len, kq.max_panels);
    const double plen = panels > 0 ? rho_max / panels : 0.0;
    for (int p = 0; p < panels; ++p) {
      for (size_t i = 0; i < pr.x.size(); ++i) {
        const double rho = plen * (p + 0.5 * (pr.x[i] + 1.0));
        const double wr = 0.5 * plen * pr.w[i];
        const double jac = std::pow(x, n + 2) * std::pow(rho, n);
        for (size_t j = 0; j < srule.x.size(); ++j) {
          const double s = srule.x[j];
          Vec zt(n + 1);
          zt[0] = x + x * x * (s * rho + a * rho * rho);
          if (!(zt[0] > 0.0)) continue;
          zt.tail(n) = z.tail(n) + x * rho * yh;
          out.push_back({zt, jac * wr * srule.w[j] * dirs[k].w, rho, s, static_cast<int>(k)});
        }
      }
    }
  }
  return out;
}

std::vector<RowNode> kernel_column_nodes(const NormalOperator& op, const Vec& zt, double x_max, int fixed_panels) {
  const NormalOperatorConfig& cfg = op.config();
  const int n = cfg.n();
  const double xt = zt[0];
  if (!(xt > 0.0)) throw Error(ErrorCode::kDomain, "column quadrature needs x > 0");
  const KernelQuadrature& kq = cfg.kq;
  const double s_max = 1.25 * cfg.chi.M;
  const QuadRule srule = gauss_legendre(kq.n_s, -s_max, s_max);
  const QuadRule& pr = gauss_legendre(kq.nodes_per_panel);
  const double hyg = min_hy(cfg.grid), hxg = cfg.grid.hx();
  std::vector<RowNode> out;
  const auto dirs = boundary_directions(n, kq.n_azimuth);
  for (size_t k = 0; k < dirs.size(); ++k) {
    const Vec& yh = dirs[k].yhat;
    const double a = std::max(op.chart_curvature(zt, yh), 0.05);
    double rho_max = std::min(1.2 * cfg.loc.delta1 / xt, 1.0 / std::sqrt(a * xt));
    if (cfg.sigma > 0.0) {
      const double c = kq.exp_cutoff;
      rho_max = std::min(rho_max, 1.1 * std::sqrt(c / (cfg.sigma * a * (1.0 + c * xt / cfg.sigma))) + s_max / a);
    }
    const double len = kq.cells_per_panel * std::min(hyg / xt, hxg / (xt * xt * (s_max + 2.0 * a * rho_max)));
    const int panels = fixed_panels > 0 ? (rho_max > 0.0 ? fixed_panels : 0) : panel_count(rho_max, len, kq.max_panels);
    const double plen = panels > 0 ? rho_max / panels : 0.0;
    for (int p = 0; p < panels; ++p) {
      for (size_t i = 0; i < pr.x.size(); ++i) {
        const double rho = plen * (p + 0.5 * (pr.x[i] + 1.0));
        const double wr = 0.5 * plen * pr.w[i];
        for (size_t j = 0; j < srule.x.size(); ++j) {
          const double s = srule.x[j];
          const double den = 1.0 + s * xt * rho;
          if (!(den > 0.0)) continue;
          const double x = xt * (1.0 - a * xt * rho * rho) / den;
          if (!(x > 0.0) || x > x_max) continue;
          Vec z(n + 1);
          z[0] = x;
          z.tail(n) = zt.tail(n) + xt * rho * yh;
          const double jac = x * std::pow(xt, n + 1) * std::pow(rho, n) / den;
          out.push_back({z, jac * wr * srule.w[j] * dirs[k].w, rho, s, static_cast<int>(k)});
        }
      }
    }
  }
  return out;
}

// Assembly

std::vector<int> lens_nodes(const NormalOperatorConfig& cfg) {
  std::vector<int> out;
  for (int i = 0; i < cfg.grid.size(); ++i) {
    if (cfg.boundary.in_lens(cfg.grid.node(i))) out.push_back(i);
  }
  return out;
}

namespace {

Eigen::VectorXd node_weights(const SpatialGrid& g, const std::vector<int>& nodes) {
  const auto wx = axis_weights(g.nx, g.hx());
  std::vector<std::vector<double>> wy;
  for (int a = 0; a < g.n; ++a) wy.push_back(axis_weights(g.ny, g.hy(a)));
  Eigen::VectorXd w(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    int ix, iy[kMaxDim];
    g.unpack(nodes[i], ix, iy);
    double v = wx[ix];
    for (int a = 0; a < g.n; ++a) v *= wy[a][iy[a]];
    w[i] = v;
  }
  return w;
}

}  // namespace

OperatorMatrix assemble_matrix(const NormalOperator& op, const AssemblyOptions& opts) {
  const NormalOperatorConfig& cfg = op.config();
  const SpatialGrid& g = cfg.grid;
  const int n = cfg.n();
  OperatorMatrix M;
  M.rows = opts.rows;
  if (M.rows.empty()) {
    for (int i = 0; i < g.size(); ++i) M.rows.push_back(i);
  }
  M.cols = lens_nodes(cfg);
  std::vector<int> colmap(g.size(), -1);
  for (size_t j = 0; j < M.cols.size(); ++j) colmap[M.cols[j]] = static_cast<int>(j);
  M.A = Eigen::MatrixXd::Zero(M.rows.size(), M.cols.size());
  M.row_weights = node_weights(g, M.rows);
  M.col_weights = node_weights(g, M.cols);
  M.config_hash = cfg.hash();
  M.field_tag = op.field().tag();
  M.method = opts.method == AssemblyMethod::kKernel ? "kernel" : "sphere";
  if (M.cols.empty()) return M;
  const ArtificialBoundary& bd = cfg.boundary;

  auto deposit = [&](int r, const Vec& zt, double weight) {
    int idx[16];
    double w[16];
    const int cnt = g.hat_weights(zt, idx, w);
    for (int c = 0; c < cnt; ++c) {
      const int col = colmap[idx[c]];
      if (col >= 0) M.A(r, col) += weight * w[c];
    }
  };
  auto touches_input = [&](const Vec& zt) {
    int idx[16];
    double w[16];
    const int cnt = g.hat_weights(zt, idx, w);
    for (int c = 0; c < cnt; ++c) {
      if (colmap[idx[c]] >= 0) return true;
    }
    return false;
  };

  auto row_kernel = [&](int r) {
    const Vec z = g.node(M.rows[r]);
    for (const RowNode& nd : kernel_row_nodes(op, z, true)) {
      if (!touches_input(nd.zt)) continue;
      KernelValue kv;
      try {
        kv = op.kernel(z, nd.zt);
      } catch (const Error& e) {
        std::ostringstream os;
        os << e.what() << " at node pair z=(" << z.transpose() << ") zt=(" << nd.zt.transpose() << ")";
        throw Error(e.code(), os.str());
      }
      if (kv.value != 0.0) deposit(r, nd.zt, nd.weight * kv.value);
    }
  };

  auto row_sphere = [&](int r) {
    const Vec z = g.node(M.rows[r]);
    const double x = z[0];
    SphereGrid sg = opts.sphere;
    const int per = std::max(2, opts.sphere_t_nodes / 8);
    // beyond |t| = span the conjugation weight is below e^{-cutoff}
    const double c = cfg.kq.exp_cutoff;
    const double need = cfg.sigma > 0.0 && c * x < cfg.sigma ? c * x * x / (cfg.sigma - c * x) : kOpenEnd;
    for (const auto& d : band_directions(n, x, cfg.chi, sg)) {
      double span = cfg.loc.delta1;
      if (need < kOpenEnd) {
        const double a = std::max(op.chart_curvature(z, d.v.tail(n) / d.v.tail(n).norm()), 0.05) *
                         d.v.tail(n).squaredNorm();
        const double lam = std::abs(d.v[0]);
        span = std::min(span, 1.5 * (lam + std::sqrt(lam * lam + 4.0 * a * need)) / (2.0 * a));
      }
      const GeodesicPath p = op.geodesic(z, d.v, span);
      std::vector<double> br = {p.tau_lo(), p.tau_hi()};
      for (double f : {0.0, 1.0, 3.0, 10.0}) {
        for (double sg2 : {-1.0, 1.0}) {
          const double t = sg2 * f * x;
          if (t > p.tau_lo() && t < p.tau_hi()) br.push_back(t);
        }
      }
      std::sort(br.begin(), br.end());
      br.erase(std::unique(br.begin(), br.end()), br.end());
      for (size_t b = 0; b + 1 < br.size(); ++b) {
        const QuadRule q = gauss_legendre(per, br[b], br[b + 1]);
        for (size_t i = 0; i < q.x.size(); ++i) {
          const Vec zt = bd.to_chart(p.z(q.x[i]));
          if (!(zt[0] > 0.0) || !touches_input(zt)) continue;
          const double wt = d.w * q.w[i] * std::exp(-cfg.sigma * (1.0 / x - 1.0 / zt[0])) / (x * x);
          deposit(r, zt, wt);
        }
      }
    }
  };

  const int nr = static_cast<int>(M.rows.size());
  if (opts.method == AssemblyMethod::kKernel)
    parallel_for(nr, opts.threads, row_kernel);
  else
    parallel_for(nr, opts.threads, row_sphere);
  return M;
}

// Norms

double discrete_sc_norm(const SpatialGrid& g, const Eigen::VectorXd& u, int k, double beta) {
  if (u.size() != g.size()) throw Error(ErrorCode::kInvalidArgument, "grid function has the wrong size");
  if (k != 0 && k != 1) throw Error(ErrorCode::kInvalidArgument, "k must be 0 or 1");
  const int n = g.n;
  const auto wx = axis_weights(g.nx, g.hx());
  std::vector<std::vector<double>> wy;
  for (int a = 0; a < n; ++a) wy.push_back(axis_weights(g.ny, g.hy(a)));
  auto diff = [&](int idx, int axis) {
    int ix, iy[kMaxDim];
    g.unpack(idx, ix, iy);
    const int cnt = axis == 0 ? g.nx : g.ny;
    int& i = axis == 0 ? ix : iy[axis - 1];
    const double h = axis == 0 ? g.hx() : g.hy(axis - 1);
    const int i0 = i;
    double val;
    if (i0 == 0) {
      const double f0 = u[idx];
      i = 1;
      val = (u[g.index(ix, iy)] - f0) / h;
    } else if (i0 == cnt - 1) {
      const double f1 = u[idx];
      i = cnt - 2;
      val = (f1 - u[g.index(ix, iy)]) / h;
    } else {
      i = i0 + 1;
      const double fp = u[g.index(ix, iy)];
      i = i0 - 1;
      val = (fp - u[g.index(ix, iy)]) / (2.0 * h);
    }
    return val;
  };
  double sum = 0.0;
  for (int idx = 0; idx < g.size(); ++idx) {
    int ix, iy[kMaxDim];
    g.unpack(idx, ix, iy);
    double w = wx[ix];
    for (int a = 0; a < n; ++a) w *= wy[a][iy[a]];
    const double x = g.x_lo + ix * g.hx();
    const double sc = std::pow(x, -beta);
    double t = u[idx] * u[idx];
    if (k == 1) {
      const double dx = x * x * diff(idx, 0);
      t += dx * dx;
      for (int a = 0; a < n; ++a) {
        const double dy = x * diff(idx, a + 1);
        t += dy * dy;
      }
    }
    sum += w * sc * sc * t;
  }
  return std::sqrt(sum);
}

// Schur test for E

namespace {

struct PairDiff {
  double e = 0.0;         // κ_hat − κ_bar
  double dx = 0.0;        // x²∂_x in the left variable
  Vec dy;                 // x∂_y in the left variable
  bool nonzero = false;
  long evals = 0;
};

PairDiff pair_difference(const NormalOperator& hat, const NormalOperator& bar, const Vec& z, const Vec& zt,
                         bool full, double fd_rel, bool want_fd) {
  const int n = hat.config().n();
  PairDiff out;
  out.dy = Vec::Zero(n);
  const KernelValue kb = bar.kernel(z, zt, nullptr, !full);
  ++out.evals;
  // the smooth geodesic never reaches r > 0: both connections agree along it and near it
  if (!full && (!kb.evaluated || kb.max_r < -1e-9)) return out;
  const KernelValue kh = hat.kernel(z, zt);
  ++out.evals;
  out.e = kh.value - kb.value;
  if (!want_fd) {
    out.nonzero = out.e != 0.0;
    return out;
  }
  const double x = z[0];
  const double h = fd_rel * x;
  auto diffk = [&](const Vec& zz) {
    out.evals += 2;
    const double vh = kh.evaluated ? hat.kernel(zz, zt, &kh.v_base).value : hat.kernel(zz, zt).value;
    const double vb = kb.evaluated ? bar.kernel(zz, zt, &kb.v_base).value : bar.kernel(zz, zt).value;
    return vh - vb;
  };
  for (int k = 0; k <= n; ++k) {
    Vec zp = z, zm = z;
    zp[k] += h;
    zm[k] -= h;
    const double d = (diffk(zp) - diffk(zm)) / (2.0 * h);
    if (k == 0)
      out.dx = x * x * d;
    else
      out.dy[k - 1] = x * d;
  }
  out.nonzero = out.e != 0.0 || out.dx != 0.0 || out.dy.norm() != 0.0;
  return out;
}

}  // namespace

SchurBounds schur_estimate_E(const NormalOperator& hat, const NormalOperator& bar, const SchurOptions& opts) {
  const NormalOperatorConfig& cfg = hat.config();
  const int n = cfg.n();
  SchurBounds sb;
  sb.eta = cfg.eta();
  const double eta = cfg.eta();
  const double xs = opts.x_scale > 0.0 ? opts.x_scale : std::max(eta, 0.0025);
  const double ylens = std::sqrt(xs / cfg.boundary.q);
  const Vec yc = cfg.boundary.center(n);
  const double x_max = cfg.grid.x_hi;

  // sample points: x over (0, 1.5 xs], y along the first axis through the center
  auto samples = [&](int nxs, int nys) {
    std::vector<Vec> pts;
    for (int i = 0; i < nxs; ++i) {
      const double x = xs * 1.5 * (i + 0.5) / nxs;
      for (int j = 0; j < nys; ++j) {
        Vec z = Vec::Zero(n + 1);
        z[0] = x;
        z.tail(n) = yc;
        z[1] += nys > 1 ? ylens * (-1.0 + 2.0 * j / (nys - 1)) * 0.9 : 0.0;
        pts.push_back(z);
      }
    }
    return pts;
  };

  // per sample: ∫|κ_E|, ∫|x²∂_x κ_E|, ∫|x∂_y κ_E| (components)
  const int ncomp = 2 + n;
  auto accumulate = [&](const std::vector<Vec>& pts, bool left, std::vector<double>& sups) {
    sups.assign(ncomp, 0.0);
    std::vector<std::vector<double>> per(pts.size(), std::vector<double>(ncomp, 0.0));
    std::vector<long> evals(pts.size(), 0), nz(pts.size(), 0);
    parallel_for(static_cast<int>(pts.size()), opts.threads, [&](int i) {
      const Vec& p = pts[i];
      const auto nodes =
          left ? kernel_row_nodes(hat, p, false, opts.panels) : kernel_column_nodes(hat, p, x_max, opts.panels);
      for (const RowNode& nd : nodes) {
        const Vec& z = left ? p : nd.zt;
        const Vec& zt = left ? nd.zt : p;
        if (z[0] > x_max || zt[0] > x_max) continue;
        const PairDiff d = pair_difference(hat, bar, z, zt, opts.full_evaluation, opts.fd_rel_step, true);
        evals[i] += d.evals;
        if (!d.nonzero) continue;
        ++nz[i];
        per[i][0] += nd.weight * std::abs(d.e);
        per[i][1] += nd.weight * std::abs(d.dx);
        for (int a = 0; a < n; ++a) per[i][2 + a] += nd.weight * std::abs(d.dy[a]);
      }
    });
    for (size_t i = 0; i < pts.size(); ++i) {
      for (int c = 0; c < ncomp; ++c) sups[c] = std::max(sups[c], per[i][c]);
      sb.kernel_evals += evals[i];
      sb.nonzero_pairs += nz[i];
    }
  };

  std::vector<double> left, right;
  accumulate(samples(opts.left_samples_x, opts.left_samples_y), true, left);
  accumulate(samples(opts.right_samples_x, opts.right_samples_y), false, right);
  sb.row_sup = left[0];
  sb.col_sup = right[0];
  sb.l2_bound = std::sqrt(left[0] * right[0]);
  double h2 = 0.0;
  for (int c = 0; c < ncomp; ++c) h2 += left[c] * right[c];
  sb.h10_bound = std::sqrt(h2);
  return sb;
}

double kernel_difference_sup(const NormalOperator& hat, const NormalOperator& bar,
                             const std::vector<std::pair<Vec, Vec>>& pairs) {
  double s = 0.0;
  for (const auto& [z, zt] : pairs) s = std::max(s, std::abs(hat.kernel(z, zt).value - bar.kernel(z, zt).value));
  return s;
}

}  // namespace ahx
