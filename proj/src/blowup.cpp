#include "ahx/blowup.hpp"

#include <algorithm>
#include <cmath>

namespace ahx {

Vec BlowupPoint::left() const {
  Vec z(y.size() + 1);
  z[0] = x;
  z.tail(y.size()) = y;
  return z;
}

Vec BlowupPoint::right() const {
  Vec z(y.size() + 1);
  z[0] = x + x * x * R * theta[0];
  z.tail(y.size()) = y + x * R * Y_hat();
  return z;
}

BlowupPoint make_blowup_point(double x, const Vec& y, double R, const Vec& theta) {
  if (!(x >= 0.0) || !(R >= 0.0)) throw Error(ErrorCode::kDomain, "blow-up point needs x >= 0 and R >= 0");
  if (theta.size() != y.size() + 1) throw Error(ErrorCode::kInvalidArgument, "theta must have n+1 components");
  const double nt = theta.norm();
  if (!(nt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "theta must be nonzero");
  BlowupPoint p;
  p.x = x;
  p.y = y;
  p.R = R;
  p.theta = theta / nt;
  return p;
}

namespace {

BlowupCoords polar(double base_x, const Vec& base_y, double X, const Vec& Y) {
  BlowupCoords out;
  out.pt.x = base_x;
  out.pt.y = base_y;
  Vec th(Y.size() + 1);
  th[0] = X;
  th.tail(Y.size()) = Y;
  out.pt.R = th.norm();
  if (out.pt.R == 0.0) {
    out.diagonal = true;
    return out;
  }
  out.pt.theta = th / out.pt.R;
  return out;
}

}  // namespace

BlowupCoords to_blowup(const Vec& z, const Vec& zt) {
  const double x = z[0];
  if (!(x > 0.0)) throw Error(ErrorCode::kDomain, "to_blowup: the left chart needs x > 0");
  const int n = static_cast<int>(z.size()) - 1;
  const double X = (zt[0] - x) / (x * x);
  const Vec Y = (zt.tail(n) - z.tail(n)) / x;
  return polar(x, z.tail(n), X, Y);
}

BlowupCoords to_blowup_right(const Vec& z, const Vec& zt) {
  const double xt = zt[0];
  if (!(xt > 0.0)) throw Error(ErrorCode::kDomain, "to_blowup_right: the right chart needs x~ > 0");
  const int n = static_cast<int>(z.size()) - 1;
  const double X = (z[0] - xt) / (xt * xt);
  const Vec Y = (z.tail(n) - zt.tail(n)) / xt;
  return polar(xt, zt.tail(n), X, Y);
}

DefiningFunctions defining_functions(double x, double R, double X_hat) {
  const double u = x * R * X_hat;
  if (!(2.0 + u > 0.0) || !(R >= 0.0)) throw Error(ErrorCode::kDomain, "defining_functions: outside the chart");
  return {(1.0 + u) / (2.0 + u), 1.0 / (2.0 + u), (2.0 + u) * (2.0 + u) / (1.0 + R)};
}

double density_factor(int n, double x, double R, double X_hat) {
  return std::pow(2.0 + x * R * X_hat, n) / (R + 1.0);
}

double diagonal_limit(double x, const Vec& theta, const CutoffProfile& chi) {
  const int n = static_cast<int>(theta.size()) - 1;
  const double yn = theta.tail(n).norm();
  if (yn == 0.0) return 0.0;
  const double c = chi(theta[0] / yn);
  if (c == 0.0) return 0.0;
  const double zn2 = x * x * theta[0] * theta[0] + yn * yn;
  return std::pow(2.0, 1 - n) * c * std::pow(zn2, -0.5 * n);
}

LiftedKernel lifted_kernel(const NormalOperator& op, const BlowupPoint& pt) {
  const int n = pt.n();
  LiftedKernel out;
  if (pt.R == 0.0) {
    out.on_diagonal = true;
    out.value = diagonal_limit(pt.x, pt.theta, op.config().chi);
    out.from_downstairs = out.value;
    out.G_ZZ = pt.x * pt.x * pt.theta[0] * pt.theta[0] + pt.Y_hat().squaredNorm();
    return out;
  }
  const double x = pt.x, R = pt.R, Xh = pt.X_hat();
  const double u = x * R * Xh;
  const KernelValue kv = op.kernel(pt.left(), pt.right());
  out.downstairs = kv.value;
  out.P = kv.P;
  out.inv_jacobian = kv.inv_jacobian;
  const double df = density_factor(n, x, R, Xh);
  out.from_downstairs = kv.value * std::pow(x, n + 2) * std::pow(R, n) / df;
  if (!kv.evaluated || kv.value == 0.0) return out;
  out.G_ZZ = kv.vnorm * kv.vnorm / (x * R * x * R);
  const double sigma = op.config().sigma;
  out.value = 2.0 * std::exp(-sigma * R * Xh / (1.0 + u)) * op.config().chi(kv.P) * kv.inv_jacobian /
              std::pow(out.G_ZZ, 0.5 * n) / df;
  return out;
}

DecayScan decay_scan(const NormalOperator& op, double x, const Vec& y, const Vec& theta,
                     const std::vector<double>& R_grid) {
  const BlowupPoint base = make_blowup_point(x, y, 0.0, theta);
  if (base.X_hat() < 0.5) throw Error(ErrorCode::kInvalidArgument, "decay_scan: rays need X^ >= 1/2");
  DecayScan out;
  double sr = 0, sk = 0, srr = 0, srk = 0;
  for (double R : R_grid) {
    BlowupPoint p = base;
    p.R = R;
    const double K = lifted_kernel(op, p).value;
    out.R.push_back(R);
    out.K.push_back(K);
    if (K != 0.0) {
      const double lk = std::log(std::abs(K));
      sr += R;
      sk += lk;
      srr += R * R;
      srk += R * lk;
      ++out.fitted;
    }
  }
  if (out.fitted == 0) {
    out.vanishes_identically = true;
    return out;
  }
  if (out.fitted >= 2) {
    const double m = out.fitted;
    out.slope = (m * srk - sr * sk) / (m * srr - sr * sr);
  }
  return out;
}

DiagonalFit fit_diagonal_remainder(const NormalOperator& op, double x, const Vec& y, const Vec& theta,
                                   double R_max, int points) {
  const BlowupPoint base = make_blowup_point(x, y, 0.0, theta);
  DiagonalFit out;
  out.limit = diagonal_limit(x, base.theta, op.config().chi);
  double sl = 0, sd = 0, sll = 0, sld = 0;
  int m = 0;
  for (int k = 0; k < points; ++k) {
    BlowupPoint p = base;
    p.R = R_max * std::pow(0.5, k);
    const double rem = std::abs(lifted_kernel(op, p).value - out.limit);
    out.R.push_back(p.R);
    out.remainder.push_back(rem);
    out.max_ratio = std::max(out.max_ratio, rem / p.R);
    if (rem > 0.0 && k >= 2) {  // asymptotic part of the grid
      const double lr = std::log(p.R), ld = std::log(rem);
      sl += lr;
      sd += ld;
      sll += lr * lr;
      sld += lr * ld;
      ++m;
    }
  }
  if (m >= 2) out.loglog_slope = (m * sld - sl * sd) / (m * sll - sl * sl);
  return out;
}

KernelDifferenceReport kernel_difference_diag(const NormalOperator& hat, const NormalOperator& bar,
                                              const std::vector<BlowupPoint>& samples, double fd_rel) {
  KernelDifferenceReport rep;
  auto KE = [&](const BlowupPoint& p) { return lifted_kernel(hat, p).value - lifted_kernel(bar, p).value; };
  for (const auto& p : samples) {
    const double w = std::min(p.R, 1.0);
    if (w == 0.0) continue;
    ++rep.samples;
    const double v = std::abs(KE(p));
    rep.sup_abs = std::max(rep.sup_abs, v);
    rep.sup_R = std::max(rep.sup_R, v / w);
    const double hx = fd_rel * p.x;
    BlowupPoint a = p, b = p;
    a.x += hx;
    b.x -= hx;
    rep.sup_dx = std::max(rep.sup_dx, std::abs(p.x * (KE(a) - KE(b)) / (2.0 * hx)) / w);
    for (int al = 0; al < p.n(); ++al) {
      const double hy = fd_rel * p.x;
      a = p;
      b = p;
      a.y[al] += hy;
      b.y[al] -= hy;
      rep.sup_dy = std::max(rep.sup_dy, std::abs(p.x * (KE(a) - KE(b)) / (2.0 * hy)) / w);
    }
  }
  return rep;
}

}  // namespace ahx
