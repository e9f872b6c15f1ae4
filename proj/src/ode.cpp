#include "ahx/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ahx {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct Stages {
  State k1, k2, k3, k4, k5, k6, k7, y1, err;
};

/// One DOPRI5 step from (t, y) with k1 = f(t, y) already known. Returns false on a domain miss.
bool step(const OdeRhs& f, double t, const State& y, double h, Stages& s, int& evals) {
  State tmp;
  tmp = y + h * a21 * s.k1;
  if (!f(t + c2 * h, tmp, s.k2)) return false;
  tmp = y + h * (a31 * s.k1 + a32 * s.k2);
  if (!f(t + c3 * h, tmp, s.k3)) return false;
  tmp = y + h * (a41 * s.k1 + a42 * s.k2 + a43 * s.k3);
  if (!f(t + c4 * h, tmp, s.k4)) return false;
  tmp = y + h * (a51 * s.k1 + a52 * s.k2 + a53 * s.k3 + a54 * s.k4);
  if (!f(t + c5 * h, tmp, s.k5)) return false;
  tmp = y + h * (a61 * s.k1 + a62 * s.k2 + a63 * s.k3 + a64 * s.k4 + a65 * s.k5);
  if (!f(t + h, tmp, s.k6)) return false;
  s.y1 = y + h * (a71 * s.k1 + a73 * s.k3 + a74 * s.k4 + a75 * s.k5 + a76 * s.k6);
  if (!f(t + h, s.y1, s.k7)) return false;
  evals += 6;
  s.err = h * (e1 * s.k1 + e3 * s.k3 + e4 * s.k4 + e5 * s.k5 + e6 * s.k6 + e7 * s.k7);
  return true;
}

DenseStep make_dense(double t, double h, const State& y, const Stages& s) {
  DenseStep d;
  d.t0 = t;
  d.h = h;
  d.rc[0] = y;
  d.rc[1] = s.y1 - y;
  d.rc[2] = h * s.k1 - d.rc[1];
  d.rc[3] = d.rc[1] - h * s.k7 - d.rc[2];
  d.rc[4] = h * (d1 * s.k1 + d3 * s.k3 + d4 * s.k4 + d5 * s.k5 + d6 * s.k6 + d7 * s.k7);
  return d;
}

double error_norm(const State& err, const State& y0, const State& y1, const OdeOptions& o) {
  double acc = 0.0;
  for (int i = 0; i < err.size(); ++i) {
    const double sc = o.atol + o.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double e = err[i] / sc;
    acc += e * e;
  }
  return std::sqrt(acc / err.size());
}

double initial_step(const OdeRhs& f, double t0, const State& y0, const State& f0, double dir,
                    const OdeOptions& o, double span) {
  auto wnorm = [&](const State& v) {
    double acc = 0.0;
    for (int i = 0; i < v.size(); ++i) {
      const double sc = o.atol + o.rtol * std::abs(y0[i]);
      acc += (v[i] / sc) * (v[i] / sc);
    }
    return std::sqrt(acc / v.size());
  };
  const double dn0 = wnorm(y0), dn1 = wnorm(f0);
  double h = (dn0 < 1e-10 || dn1 < 1e-10) ? 1e-6 : 0.01 * dn0 / dn1;
  h = std::min(h, span);
  State y1 = y0 + dir * h * f0, f1;
  double dn2 = 0.0;
  if (f(t0 + dir * h, y1, f1)) dn2 = wnorm(f1 - f0) / h;
  const double der = std::max(dn1, dn2);
  const double h1 = der <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der, 0.2);
  return std::min({100.0 * h, h1, span});
}

}  // namespace

State DenseStep::eval(double t) const {
  const double th = (t - t0) / h;
  const double th1 = 1.0 - th;
  return rc[0] + th * (rc[1] + th1 * (rc[2] + th * (rc[3] + th1 * rc[4])));
}

State DenseStep::deriv(double t) const {
  // d/dθ of rc0 + θ(rc1 + θ1(rc2 + θ(rc3 + θ1 rc4)))
  const double th = (t - t0) / h;
  const double th1 = 1.0 - th;
  const State inner3 = rc[3] + th1 * rc[4];
  const State dinner3 = -rc[4];
  const State inner2 = rc[2] + th * inner3;
  const State dinner2 = inner3 + th * dinner3;
  const State inner1 = rc[1] + th1 * inner2;
  const State dinner1 = -inner2 + th1 * dinner2;
  return (inner1 + th * dinner1) / h;
}

OdeResult dopri5(const OdeRhs& f, double t0, const State& y0, double t1, const OdeOptions& o, bool keep_dense,
                 const StepObserver& observer) {
  OdeResult res;
  res.t_end = t0;
  res.y_end = y0;
  if (t1 == t0) return res;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  const double hmax = o.h_max > 0.0 ? o.h_max : span;

  Stages s;
  if (!f(t0, y0, s.k1)) {
    res.status = OdeStatus::kDomain;
    return res;
  }
  res.stats.rhs_evals = 1;
  double h = o.h_init > 0.0 ? o.h_init : initial_step(f, t0, y0, s.k1, dir, o, span);
  h = std::min(h, hmax);
  res.stats.rhs_evals += 1;

  constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0, safe = 0.9;
  double facold = 1e-4;
  bool last_rejected = false;
  double t = t0;
  State y = y0;
  const double h_floor = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t1));

  while (true) {
    if (res.stats.steps + res.stats.rejected >= o.max_steps) {
      res.status = OdeStatus::kMaxSteps;
      break;
    }
    bool last = false;
    if ((t + dir * h - t1) * dir >= 0.0 || std::abs(t1 - (t + dir * h)) < 1e-14 * span) {
      h = std::abs(t1 - t);
      last = true;
    }
    if (h < h_floor) {
      res.status = OdeStatus::kStepUnderflow;
      break;
    }
    const double hs = dir * h;
    if (!step(f, t, y, hs, s, res.stats.rhs_evals)) {
      // stage left the domain: shrink and retry
      ++res.stats.rejected;
      h *= 0.25;
      last_rejected = true;
      if (h < h_floor * 1e3) {
        res.status = OdeStatus::kDomain;
        break;
      }
      continue;
    }
    const double err = error_norm(s.err, y, s.y1, o);
    const double fac11 = std::pow(std::max(err, 1e-300), expo1);
    if (err <= 1.0) {
      double fac = fac11 / std::pow(facold, beta);
      fac = std::max(facc2, std::min(facc1, fac / safe));
      double hnew = h / fac;
      facold = std::max(err, 1e-4);
      res.stats.max_err = std::max(res.stats.max_err, err);
      ++res.stats.steps;
      res.step_sizes.push_back(hs);
      DenseStep ds;
      const bool need_dense = keep_dense || observer;
      if (need_dense) ds = make_dense(t, hs, y, s);
      t = last ? t1 : t + hs;
      y = s.y1;
      s.k1 = s.k7;
      if (keep_dense) res.dense.push_back(ds);
      if (observer && !observer(ds)) {
        res.status = OdeStatus::kStopped;
        break;
      }
      if (last) break;
      if (last_rejected) hnew = std::min(hnew, h);
      last_rejected = false;
      h = std::min(hnew, hmax);
    } else {
      ++res.stats.rejected;
      h = h / std::min(facc1, fac11 / safe);
      last_rejected = true;
    }
  }
  res.t_end = t;
  res.y_end = y;
  return res;
}

OdeResult dopri5_replay(const OdeRhs& f, double t0, const State& y0, const std::vector<double>& steps) {
  OdeResult res;
  Stages s;
  double t = t0;
  State y = y0;
  res.t_end = t;
  res.y_end = y;
  if (!f(t, y, s.k1)) {
    res.status = OdeStatus::kDomain;
    return res;
  }
  for (double h : steps) {
    if (!step(f, t, y, h, s, res.stats.rhs_evals)) {
      res.status = OdeStatus::kDomain;
      break;
    }
    t += h;
    y = s.y1;
    s.k1 = s.k7;
    ++res.stats.steps;
  }
  res.t_end = t;
  res.y_end = y;
  return res;
}

}  // namespace ahx
