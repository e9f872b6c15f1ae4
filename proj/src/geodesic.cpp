#include "ahx/geodesic.hpp"

#include "ahx/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ahx {

// ---------------------------------------------------------------------------
// GeodesicSystem

GeodesicSystem::GeodesicSystem(const ChristoffelField& field, const Vec& base, bool regularize)
    : field_(field), base_(base), dim_(field.dim()) {
  if (base.size() != dim_) throw Error(ErrorCode::kInvalidArgument, "point dimension does not match the field");
  const ConnectionSplit* sp = field.split();
  if (regularize && sp != nullptr && !sp->trivial() && field.regularity() == Regularity::kC1Split) {
    split_ = sp;
    coupling_ = 4.0 / sp->order();
  }
}

Mat GeodesicSystem::mixed_block(const Vec& z) const { return split_->mixed(z); }

State GeodesicSystem::to_state(const Vec& z, const Vec& v) const {
  State w(2 * dim_);
  w.head(dim_) = z - base_;
  w.tail(dim_) = v;
  if (split_ && z[0] > 0.0) {
    const double s = std::pow(z[0], split_->model().half_order());
    w.tail(dim_ - 1) = v.tail(dim_ - 1) + coupling_ * s * (mixed_block(z) * v.tail(dim_ - 1));
  }
  return w;
}

void GeodesicSystem::from_state(const State& w, Vec& z, Vec& v) const {
  z = base_ + w.head(dim_);
  v = w.tail(dim_);
  if (split_ && z[0] > 0.0) {
    const int n = dim_ - 1;
    const double s = std::pow(z[0], split_->model().half_order());
    const Mat L = Mat::Identity(n, n) + coupling_ * s * mixed_block(z);
    v.tail(n) = small_inverse(L) * w.tail(n);
  }
}

bool GeodesicSystem::rhs(const State& w, State& dw) const {
  const int d = dim_;
  const Vec z = base_ + w.head(d);
  if (!field_.in_domain(z)) return false;
  dw.resize(2 * d);
  if (!split_) {
    Christoffel g;
    field_.eval(z, g);
    const Vec v = w.tail(d);
    dw.head(d) = v;
    dw.tail(d) = -g.contract(v);
    return true;
  }

  // Regularized variables (z, v⁰, b), b = v_y + (4/N) r^{N/2} H(r) B_0 v_y.
  const int n = d - 1;
  const double r = z[0];
  Christoffel bar, bt;
  const double wgt = split_->parts(z, bar, bt);
  if (r <= 0.0) {
    const Vec v = w.tail(d);
    dw.head(d) = v;
    dw.tail(d) = -bar.contract(v);
    return true;
  }
  const double s = std::pow(r, split_->model().half_order());
  Mat b0(n, n);
  for (int g = 0; g < n; ++g)
    for (int be = 0; be < n; ++be) b0(g, be) = bt(g + 1, 0, be + 1);
  const Mat L = Mat::Identity(n, n) + coupling_ * s * b0;
  Vec v(d);
  v[0] = w[d];
  v.tail(n) = small_inverse(L) * w.tail(n);
  const Vec vy = v.tail(n);

  Christoffel hat = bar;
  hat.add_scaled(bt, wgt);
  const Vec acc_hat = hat.contract(v);
  const Vec acc_bar = bar.contract(v);
  const Vec acc_b = bt.contract(v);
  const Vec b0v = b0 * vy;

  // (∂_k B_0) v^k v_y as a directional central difference (one-sided near r = 0)
  const double vn = v.norm();
  const double h = 1e-6 * std::max(1.0, z.norm());
  const Vec dir = v / vn;
  Vec zp = z + h * dir, zm = z - h * dir;
  double denom = 2.0 * h;
  if (zm[0] < 0.0) {
    zm = z;
    denom = h;
  } else if (zp[0] < 0.0) {
    zp = z;
    denom = h;
  }
  const Vec dB = vn * ((mixed_block(zp) - mixed_block(zm)) * vy) / denom;
  const Vec C = dB - b0 * Vec(acc_hat.tail(n));

  dw.head(d) = v;
  dw[d] = -acc_hat[0];
  // B^γ_{αβ} v^α v^β = (B contraction) − 2 v⁰ B^γ_{0β} v^β
  const Vec byy = acc_b.tail(n) - 2.0 * v[0] * b0v;
  dw.tail(n) = -acc_bar.tail(n) - wgt * byy + coupling_ * s * C;
  return true;
}

OdeRhs GeodesicSystem::as_rhs() const {
  return [this](double, const State& w, State& dw) { return rhs(w, dw); };
}

// ---------------------------------------------------------------------------
// GeodesicPath

const DenseStep& GeodesicPath::find(double tau) const {
  if (segs_.empty() || tau < tau_lo_ - 1e-14 || tau > tau_hi_ + 1e-14) {
    std::ostringstream os;
    os << "tau=" << tau << " outside the integrated span [" << tau_lo_ << ", " << tau_hi_ << "]";
    throw Error(ErrorCode::kDomain, os.str());
  }
  auto lower = [](const DenseStep& s) { return std::min(s.t0, s.t1()); };
  auto it = std::upper_bound(segs_.begin(), segs_.end(), tau,
                             [&](double t, const DenseStep& s) { return t < lower(s); });
  if (it == segs_.begin()) return segs_.front();
  return *(it - 1);
}

Vec GeodesicPath::z(double tau) const {
  if (segs_.empty()) return sys_->base();
  return sys_->point(find(tau).eval(tau));
}

Vec GeodesicPath::v(double tau) const {
  Vec zz, vv;
  if (segs_.empty()) {
    sys_->from_state(sys_->to_state(sys_->base(), Vec::Zero(sys_->dim())), zz, vv);
    return vv;
  }
  sys_->from_state(find(tau).eval(tau), zz, vv);
  return vv;
}

Vec GeodesicPath::a(double tau) const {
  const int d = sys_->dim();
  if (!sys_->regularized()) return find(tau).deriv(tau).tail(d);
  const DenseStep& s = find(tau);
  const double h = 1e-3 * std::abs(s.h);
  const double lo = std::min(s.t0, s.t1()) + 2 * h, hi = std::max(s.t0, s.t1()) - 2 * h;
  const double t = std::clamp(tau, lo, hi);
  auto vat = [&](double tt) {
    Vec zz, vv;
    sys_->from_state(s.eval(tt), zz, vv);
    return vv;
  };
  return (vat(t - 2 * h) - 8.0 * vat(t - h) + 8.0 * vat(t + h) - vat(t + 2 * h)) / (12.0 * h);
}

std::vector<PathSample> GeodesicPath::samples() const {
  std::vector<PathSample> out;
  if (segs_.empty()) return out;
  auto push = [&](double t) { out.push_back({t, z(t), v(t)}); };
  push(std::min(segs_.front().t0, segs_.front().t1()));
  for (const auto& s : segs_) push(std::max(s.t0, s.t1()));
  return out;
}

GeodesicPath integrate(const ChristoffelField& field, const Vec& z0, const Vec& v0, double tau_a, double tau_b,
                       const GeodesicOptions& opts) {
  require_nonzero_velocity(v0);
  if (!(tau_a <= 0.0 && tau_b >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "tau span must contain 0");
  if (!field.in_domain(z0)) throw Error(ErrorCode::kDomain, "initial point outside the field's domain");

  GeodesicPath path;
  path.sys_ = std::make_shared<GeodesicSystem>(field, z0, opts.regularize);
  path.regularized = path.sys_->regularized();
  const GeodesicSystem& sys = *path.sys_;
  const State w0 = sys.to_state(z0, v0);
  const OdeRhs rhs = sys.as_rhs();
  OdeOptions o;
  o.rtol = opts.rtol;
  o.atol = opts.atol;

  auto crossed = [&](const DenseStep& s) {
    // leaving {r ≥ 0}: any sampled point of the step with r < 0
    for (double f : {0.25, 0.5, 0.75, 1.0}) {
      if (sys.point(s.eval(s.t0 + f * s.h))[0] < 0.0) return true;
    }
    return false;
  };
  StepObserver obs = nullptr;
  if (opts.stop_at_boundary) obs = [&](const DenseStep& s) { return !crossed(s); };

  auto run = [&](double t1, std::vector<DenseStep>& segs, double& reached) {
    if (t1 == 0.0) {
      reached = 0.0;
      return;
    }
    OdeResult r = dopri5(rhs, 0.0, w0, t1, o, true, obs);
    if (r.status == OdeStatus::kStepUnderflow || r.status == OdeStatus::kMaxSteps) {
      std::ostringstream os;
      os << "geodesic integration failed (step-size underflow) at tau=" << r.t_end;
      throw Error(ErrorCode::kStiffFailure, os.str());
    }
    if (r.status == OdeStatus::kDomain) path.domain_truncated = true;
    path.stats.steps += r.stats.steps;
    path.stats.rejected += r.stats.rejected;
    path.stats.rhs_evals += r.stats.rhs_evals;
    path.stats.max_err = std::max(path.stats.max_err, r.stats.max_err);
    segs = std::move(r.dense);
    reached = r.t_end;
  };

  std::vector<DenseStep> fwd, bwd;
  run(tau_b, fwd, path.tau_hi_);
  run(tau_a, bwd, path.tau_lo_);
  std::reverse(bwd.begin(), bwd.end());
  path.segs_ = std::move(bwd);
  path.segs_.insert(path.segs_.end(), fwd.begin(), fwd.end());

  if (opts.find_exit_times && z0[0] >= 0.0) {
    const ExitTimes et = exit_times(path);
    path.tau_minus = et.tau_minus;
    path.tau_plus = et.tau_plus;
    path.excluded = et.excluded;
  }
  return path;
}

ExitTimes exit_times(const GeodesicPath& path) {
  ExitTimes et;
  const double r0 = path.z(0.0)[0];
  if (r0 < 0.0) throw Error(ErrorCode::kDomain, "exit times need a start point in {r >= 0}");
  auto r = [&](double t) { return path.z(t)[0]; };

  auto search = [&](double dir) -> double {
    const double end = dir > 0 ? path.tau_hi() : path.tau_lo();
    if (end == 0.0) return dir * kOpenEnd;
    // walk step boundaries outward from 0, refining each step into quarters
    std::vector<double> knots;
    for (const auto& s : path.segments()) {
      const double lo = std::min(s.t0, s.t1()), hi = std::max(s.t0, s.t1());
      if (dir > 0 && lo >= 0.0) {
        for (int q = 1; q <= 4; ++q) knots.push_back(lo + 0.25 * q * (hi - lo));
      } else if (dir < 0 && hi <= 0.0) {
        for (int q = 1; q <= 4; ++q) knots.push_back(hi - 0.25 * q * (hi - lo));
      }
    }
    if (dir < 0) std::sort(knots.begin(), knots.end(), std::greater<double>());
    else std::sort(knots.begin(), knots.end());
    double prev = 0.0;
    for (double k : knots) {
      if (r(k) < 0.0) {
        double in = prev, out = k;  // r(in) ≥ 0, r(out) < 0
        while (std::abs(out - in) > 1e-12) {
          const double mid = 0.5 * (in + out);
          if (r(mid) >= 0.0) in = mid;
          else out = mid;
        }
        double t = 0.5 * (in + out);
        if (r0 == 0.0 && std::abs(t) < 1e-11) t = 0.0;
        return t;
      }
      prev = k;
    }
    return dir * kOpenEnd;
  };
  et.tau_plus = search(1.0);
  et.tau_minus = search(-1.0);
  et.excluded = std::abs(et.tau_plus) + std::abs(et.tau_minus) == 0.0;
  return et;
}

Vec exp_map(const ChristoffelField& field, const Vec& z, const Vec& v, const GeodesicOptions& opts) {
  if (v.squaredNorm() == 0.0) return z;
  GeodesicSystem sys(field, z, opts.regularize);
  OdeOptions o;
  o.rtol = opts.rtol;
  o.atol = opts.atol;
  OdeResult r = dopri5(sys.as_rhs(), 0.0, sys.to_state(z, v), 1.0, o);
  if (r.status == OdeStatus::kDomain) {
    std::ostringstream os;
    os << "geodesic leaves the field's domain at tau=" << r.t_end << " before tau=1";
    throw Error(ErrorCode::kDomain, os.str());
  }
  if (r.status != OdeStatus::kCompleted) throw Error(ErrorCode::kStiffFailure, "exp map integration failed");
  return sys.point(r.y_end);
}

// ---------------------------------------------------------------------------
// Shooting

namespace {

class Shooter {
 public:
  Shooter(const ChristoffelField& field, const Vec& z, const GeodesicOptions& geo)
      : sys_(field, z, geo.regularize), rhs_(sys_.as_rhs()) {
    opts_.rtol = geo.rtol;
    opts_.atol = geo.atol;
  }

  int dim() const { return sys_.dim(); }

  /// Displacement exp_z(v) − z from an adaptive run; records the step sequence.
  bool shoot(const Vec& v, Vec& disp, std::vector<double>* steps) {
    OdeOptions o = opts_;
    o.atol = opts_.atol * std::max(v.norm(), 1e-8);
    OdeResult r = dopri5(rhs_, 0.0, sys_.to_state(sys_.base(), v), 1.0, o);
    if (r.status != OdeStatus::kCompleted) return false;
    disp = r.y_end.head(sys_.dim());
    if (steps) *steps = std::move(r.step_sizes);
    return true;
  }

  /// Largest r over the adaptive shot, sampled at step ends and quarter points.
  bool max_r(const Vec& v, double& out) {
    OdeOptions o = opts_;
    o.atol = opts_.atol * std::max(v.norm(), 1e-8);
    const double r0 = sys_.base()[0];
    out = r0;
    double* acc = &out;
    StepObserver obs = [acc, r0](const DenseStep& s) {
      for (int k = 1; k <= 4; ++k) *acc = std::max(*acc, r0 + s.eval(s.t0 + 0.25 * k * s.h)[0]);
      return true;
    };
    OdeResult r = dopri5(rhs_, 0.0, sys_.to_state(sys_.base(), v), 1.0, o, false, obs);
    return r.status == OdeStatus::kCompleted;
  }

  bool replay(const Vec& v, const std::vector<double>& steps, Vec& disp) {
    OdeResult r = dopri5_replay(rhs_, 0.0, sys_.to_state(sys_.base(), v), steps);
    if (r.status != OdeStatus::kCompleted) return false;
    disp = r.y_end.head(sys_.dim());
    return true;
  }

  /// Forward-difference d_v exp around a shot whose displacement is known (cheaper; Newton directions).
  bool jacobian_fwd(const Vec& v, const Vec& base_disp, const std::vector<double>& steps, double h, Mat& J) {
    const int d = sys_.dim();
    J.resize(d, d);
    for (int k = 0; k < d; ++k) {
      Vec vp = v, dp;
      vp[k] += h;
      if (!replay(vp, steps, dp)) return false;
      J.col(k) = (dp - base_disp) / h;
    }
    return true;
  }

 private:
  GeodesicSystem sys_;
  OdeRhs rhs_;
  OdeOptions opts_;
};

}  // namespace

InverseExpResult inverse_exp(const ChristoffelField& field, const Vec& z, const Vec& zt, const InverseExpOptions& opts) {
  const int d = field.dim();
  InverseExpResult res;
  const Vec target = zt - z;
  const double dist = target.norm();
  res.v = Vec::Zero(d);
  res.dexp = Mat::Identity(d, d);
  if (dist == 0.0) return res;

  Shooter sh(field, z, opts.geo);
  // second-order seed: exp_z(v) ≈ z + v − ½Γ(v, v)
  Vec v;
  if (opts.guess) {
    v = *opts.guess;
  } else {
    Christoffel g;
    field.eval(z, g);
    v = target + 0.5 * g.contract(target);
  }
  const double goal = opts.tol * std::min(1.0, dist);

  std::vector<double> steps;
  Vec disp;
  if (!sh.shoot(v, disp, &steps)) {
    v = target;
    if (!sh.shoot(v, disp, &steps)) throw Error(ErrorCode::kShootingFailure, "initial shot leaves the domain");
  }
  Vec F = disp - target;
  double res_norm = F.norm();
  Mat J;
  bool have_J = false;
  int it = 0;
  double last_dv = kOpenEnd;
  for (; it < opts.max_iter && res_norm > goal; ++it) {
    const double hstep = opts.fd_rel_step * std::max(v.norm(), dist);
    if (!sh.jacobian_fwd(v, disp, steps, hstep, J)) throw Error(ErrorCode::kShootingFailure, "Jacobian shot failed");
    have_J = true;
    const Vec dv = -J.partialPivLu().solve(F);
    double lam = 1.0;
    bool improved = false;
    for (int k = 0; k < 8; ++k) {
      const Vec vn = v + lam * dv;
      std::vector<double> st;
      Vec dn;
      if (sh.shoot(vn, dn, &st)) {
        const Vec Fn = dn - target;
        if (Fn.norm() < res_norm) {
          v = vn;
          disp = dn;
          F = Fn;
          res_norm = Fn.norm();
          steps = std::move(st);
          last_dv = lam * dv.norm();
          improved = true;
          break;
        }
      }
      lam *= 0.5;
    }
    if (!improved) break;
  }
  res.iterations = it;
  res.residual = res_norm;
  if (res_norm > goal && res_norm > 100.0 * goal) {
    std::ostringstream os;
    os << "inverse exp did not converge: residual " << res_norm << " after " << it << " iterations";
    throw Error(ErrorCode::kShootingFailure, os.str());
  }
  res.v = v;
  if (opts.need_jacobian) {
    // the last Newton Jacobian is reused when the final correction was negligible
    if (have_J && last_dv <= 1e-6 * v.norm()) {
      res.dexp = J;
    } else {
      // forward differences around the converged shot, along its frozen step sequence
      const double h = 1e-6 * v.norm();
      if (!sh.jacobian_fwd(v, disp, steps, h, res.dexp)) {
        if (!have_J) throw Error(ErrorCode::kShootingFailure, "Jacobian shot failed");
        res.dexp = J;
      }
    }
    const double det = res.dexp.determinant();
    res.inv_jacobian = 1.0 / std::abs(det);
  }
  if (opts.track_max_r && !sh.max_r(v, res.max_r)) throw Error(ErrorCode::kShootingFailure, "final shot failed");
  return res;
}

double inverse_exp_jacobian_fd(const ChristoffelField& field, const Vec& z, const Vec& zt, double rel_step,
                               const InverseExpOptions& opts) {
  const int d = field.dim();
  const double h = rel_step * std::max((zt - z).norm(), 1e-12);
  InverseExpOptions o = opts;
  o.need_jacobian = false;
  o.tol = std::min(opts.tol, 1e-13);
  const Vec v0 = inverse_exp(field, z, zt, o).v;
  Mat J(d, d);
  for (int k = 0; k < d; ++k) {
    Vec p = zt, m = zt;
    p[k] += h;
    m[k] -= h;
    o.guess = v0;
    const Vec vp = inverse_exp(field, z, p, o).v;
    const Vec vm = inverse_exp(field, z, m, o).v;
    J.col(k) = (vp - vm) / (2.0 * h);
  }
  return std::abs(J.determinant());
}

// ---------------------------------------------------------------------------
// Convexity

std::vector<ConvexitySample> convexity_scan(const ChristoffelField& field, const std::vector<Vec>& boundary_pts,
                                            const std::vector<Vec>& dirs, double arc) {
  std::vector<ConvexitySample> out;
  const int d = field.dim();
  for (const Vec& p : boundary_pts) {
    if (p[0] != 0.0) throw Error(ErrorCode::kInvalidArgument, "convexity scan points must lie on r = 0");
    Christoffel g;
    field.eval(p, g);
    for (const Vec& w : dirs) {
      ConvexitySample s;
      s.point = p;
      s.omega = w;
      Vec v(d);
      v[0] = 0.0;
      v.tail(d - 1) = w;
      s.analytic = -g.contract(v)[0];
      GeodesicOptions go;
      go.rtol = 1e-13;
      go.atol = 1e-16;
      const Vec zp = exp_map(field, p, arc * v, go);
      const Vec zm = exp_map(field, p, -arc * v, go);
      s.fd = (zp[0] + zm[0] - 2.0 * p[0]) / (arc * arc);
      out.push_back(s);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Projective reparametrization

namespace {

/// ∫ r dt over [a, b] on one dense step, r = ρ².
double r_integral(const GeodesicPath& p, double a, double b) {
  const QuadRule& q = gauss_legendre(8);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    const double rho = p.z(c + h * q.x[i])[0];
    s += q.w[i] * rho * rho;
  }
  return s * h;
}

}  // namespace

double ProjectivePath::tau_of_t(double tt) const {
  if (tt <= t.front()) return tau.front();
  if (tt >= t.back()) return tau.back();
  const auto it = std::upper_bound(t.begin(), t.end(), tt);
  const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
  return tau[i] + r_integral(*source, t[i], tt) / c;
}

double ProjectivePath::t_of_tau(double ta) const {
  if (ta <= tau.front()) return t.front();
  if (ta >= tau.back()) return t.back();
  const auto it = std::upper_bound(tau.begin(), tau.end(), ta);
  const std::size_t i = static_cast<std::size_t>(it - tau.begin()) - 1;
  double lo = t[i], hi = t[i + 1];
  double x = lo + (hi - lo) * (ta - tau[i]) / (tau[i + 1] - tau[i]);
  for (int k = 0; k < 60; ++k) {
    const double f = tau[i] + r_integral(*source, t[i], x) / c - ta;
    if (f > 0) hi = x;
    else lo = x;
    const double rho = source->z(x)[0];
    double xn = x - f * c / (rho * rho);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (std::abs(xn - x) <= 1e-15 * std::max(1.0, std::abs(x))) {
      x = xn;
      break;
    }
    x = xn;
  }
  return x;
}

Vec ProjectivePath::z(double ta) const {
  Vec p = source->z(t_of_tau(ta));
  p[0] = p[0] * p[0];
  return p;
}

Vec ProjectivePath::v(double ta) const {
  const double tt = t_of_tau(ta);
  const Vec p = source->z(tt);
  Vec w = source->v(tt);
  const double rho = p[0];
  const double r = rho * rho;
  w[0] = 2.0 * rho * w[0];
  return (c / r) * w;
}

ProjectivePath reparametrize(const GeodesicPath& ah_path, double c, int nodes_per_segment) {
  if (!(c > 0.0)) throw Error(ErrorCode::kInvalidArgument, "c must be positive");
  (void)nodes_per_segment;
  ProjectivePath out;
  out.c = c;
  out.source = &ah_path;
  const auto& segs = ah_path.segments();
  if (segs.empty()) throw Error(ErrorCode::kReparametrization, "empty path");
  std::vector<double> knots;
  knots.push_back(std::min(segs.front().t0, segs.front().t1()));
  for (const auto& s : segs) knots.push_back(std::max(s.t0, s.t1()));
  for (const auto& s : segs) {
    const double lo = std::min(s.t0, s.t1()), hi = std::max(s.t0, s.t1());
    if (ah_path.z(0.5 * (lo + hi))[0] <= 0.0) throw Error(ErrorCode::kReparametrization, "rho must stay positive");
  }
  // anchor τ(0) = 0
  std::vector<double> tau(knots.size(), 0.0);
  const auto zero_it = std::lower_bound(knots.begin(), knots.end(), 0.0);
  const std::size_t i0 = static_cast<std::size_t>(zero_it - knots.begin());
  if (i0 >= knots.size() || knots[i0] != 0.0) throw Error(ErrorCode::kReparametrization, "t = 0 must be a knot");
  for (std::size_t i = i0 + 1; i < knots.size(); ++i) tau[i] = tau[i - 1] + r_integral(ah_path, knots[i - 1], knots[i]) / c;
  for (std::size_t i = i0; i-- > 0;) tau[i] = tau[i + 1] - r_integral(ah_path, knots[i], knots[i + 1]) / c;
  for (std::size_t i = 1; i < tau.size(); ++i) {
    if (!(tau[i] > tau[i - 1])) throw Error(ErrorCode::kReparametrization, "projective time is not monotone");
  }
  out.t = std::move(knots);
  out.tau = std::move(tau);
  return out;
}

double geodesic_residual(const ChristoffelField& field, const GeodesicPath& path) {
  double worst = 0.0;
  for (const auto& s : path.segments()) {
    const double mid = s.t0 + 0.5 * s.h;
    const Vec z = path.z(mid), v = path.v(mid);
    Christoffel g;
    field.eval(z, g);
    const double res = (path.a(mid) + g.contract(v)).norm() / (1.0 + v.squaredNorm());
    worst = std::max(worst, res);
  }
  return worst;
}

}  // namespace ahx
