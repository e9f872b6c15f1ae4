#include "ahx/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace ahx {

namespace {

double ipow(double x, int p) {
  double out = 1.0;
  for (int i = 0; i < p; ++i) out *= x;
  return out;
}

Mat scaled_identity(int n, double s) { return Mat::Identity(n, n) * s; }

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

/// 3^n grid at {-extent/2, 0, extent/2}.
std::vector<Vec> sample_y(const BoundaryPatch& patch) {
  std::vector<Vec> out;
  int total = 1;
  for (int a = 0; a < patch.n; ++a) total *= 3;
  for (int idx = 0; idx < total; ++idx) {
    Vec y(patch.n);
    int rem = idx;
    for (int a = 0; a < patch.n; ++a) {
      y[a] = 0.5 * patch.extent * ((rem % 3) - 1);
      rem /= 3;
    }
    out.push_back(y);
  }
  return out;
}

/// Split model of a conformal family: even powers go into k1, the odd power p = N into k2.
class ConformalModel final : public ProjectiveModel {
 public:
  explicit ConformalModel(std::shared_ptr<const ConformalFamily> family) : family_(std::move(family)) {
    const auto& p = family_->params();
    odd_ = (p.power % 2 != 0) && p.amplitude != 0.0;
  }

  int n() const override { return family_->n(); }
  int order() const override { return odd_ ? family_->params().power : 0; }
  const BoundaryPatch& patch() const override { return family_->patch(); }

  void jet(double r, const Vec& y, ModelJet& out) const override {
    const auto& p = family_->params();
    const int n = family_->n();
    const double a = p.amplitude;
    double grad[kMaxDim];
    const double b = family_->profile(y, grad);
    const Mat zero = Mat::Zero(n, n);
    if (odd_) {
      out.k1 = Mat::Identity(n, n);
      out.dk1_dr = zero;
      out.k2 = scaled_identity(n, a * b);
      out.dk2_dr = zero;
      for (int al = 0; al < n; ++al) {
        out.dk1_dy[al] = zero;
        out.dk2_dy[al] = scaled_identity(n, a * grad[al]);
      }
      return;
    }
    const int half = p.power / 2;
    const double rh = ipow(r, half);
    const double drh = half > 0 ? half * ipow(r, half - 1) : 0.0;
    out.k1 = scaled_identity(n, 1.0 + a * rh * b);
    out.dk1_dr = scaled_identity(n, a * drh * b);
    out.k2 = zero;
    out.dk2_dr = zero;
    for (int al = 0; al < n; ++al) {
      out.dk1_dy[al] = scaled_identity(n, a * rh * grad[al]);
      out.dk2_dy[al] = zero;
    }
  }

 private:
  std::shared_ptr<const ConformalFamily> family_;
  bool odd_ = false;
};

void require_spd(const Mat& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0)) {
    throw Error(ErrorCode::kSingularMetric, std::string(what) + " is not positive definite");
  }
}

/// 4th-order central difference of a matrix-valued function of one variable.
template <class F>
Mat central4(F&& f, double t, double h) {
  return (f(t - 2 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2 * h)) / (12.0 * h);
}

void validate_model(const ProjectiveModel& model) {
  const auto& patch = model.patch();
  const double rmax = model.r_max();
  const double fd_tol = 1e-7;
  for (double frac : {0.1, 0.3, 0.6}) {
    const double r = frac * rmax;
    for (const Vec& y : sample_y(patch)) {
      ModelJet j;
      model.jet(r, y, j);
      require_spd(model.k(r, y), "k_r");
      auto k1_r = [&](double t) { ModelJet q; model.jet(t, y, q); return q.k1; };
      auto k2_r = [&](double t) { ModelJet q; model.jet(t, y, q); return q.k2; };
      const double h = 1e-4 * rmax;
      double err = std::max(max_abs(central4(k1_r, r, h) - j.dk1_dr), max_abs(central4(k2_r, r, h) - j.dk2_dr));
      for (int al = 0; al < patch.n; ++al) {
        auto k1_y = [&](double t) { Vec yy = y; yy[al] = t; ModelJet q; model.jet(r, yy, q); return q.k1; };
        auto k2_y = [&](double t) { Vec yy = y; yy[al] = t; ModelJet q; model.jet(r, yy, q); return q.k2; };
        const double hy = 1e-4 * patch.extent;
        err = std::max(err, max_abs(central4(k1_y, y[al], hy) - j.dk1_dy[al]));
        err = std::max(err, max_abs(central4(k2_y, y[al], hy) - j.dk2_dy[al]));
      }
      if (err > fd_tol) {
        std::ostringstream os;
        os << "supplied split derivatives disagree with finite differences by " << err;
        throw Error(ErrorCode::kInconsistent, os.str());
      }
    }
  }
}

}  // namespace

void BoundaryPatch::validate() const {
  if (n < 2 || n + 1 > kMaxDim) throw Error(ErrorCode::kInvalidArgument, "boundary dimension n must satisfy 2 <= n <= 3");
  if (!(extent > 0.0)) throw Error(ErrorCode::kInvalidArgument, "extent must be positive");
  if (!(collar_depth > 0.0)) throw Error(ErrorCode::kInvalidArgument, "collar_depth must be positive");
}

bool BoundaryPatch::contains_y(const Vec& y) const {
  return y.size() == n && y.cwiseAbs().maxCoeff() <= extent;
}

Mat ProjectiveModel::k(double r, const Vec& y) const {
  ModelJet j;
  jet(r, y, j);
  if (order() == 0 || r <= 0.0) return j.k1;
  return j.k1 + std::pow(r, half_order()) * j.k2;
}

ConformalFamily::ConformalFamily(ConformalFamilyParams params) : params_(std::move(params)) {
  params_.patch.validate();
  if (params_.power < 0) throw Error(ErrorCode::kInvalidArgument, "power must be non-negative");
  const int n = params_.patch.n;
  center_ = Vec::Zero(n);
  if (!params_.center.empty()) {
    if (static_cast<int>(params_.center.size()) != n) {
      throw Error(ErrorCode::kInvalidArgument, "bump center must have n components");
    }
    for (int i = 0; i < n; ++i) center_[i] = params_.center[i];
  }
  if (params_.declared_order) {
    const int N = *params_.declared_order;
    if (N < 3 || N % 2 == 0) throw Error(ErrorCode::kInvalidArgument, "evenness order N must be an odd integer >= 3");
  }
  // positivity on the collar: 1 + A ρ^p b ≥ 1 - |A| ε^p
  const double worst = 1.0 - std::abs(params_.amplitude) * ipow(params_.patch.collar_depth, params_.power);
  if (params_.amplitude < 0.0 && !(worst > 0.0)) {
    throw Error(ErrorCode::kSingularMetric, "h_rho loses positivity inside the collar");
  }
}

double ConformalFamily::profile(const Vec& y) const {
  if (params_.width <= 0.0) return 1.0;
  const double d2 = (y - center_).squaredNorm();
  return std::exp(-0.5 * d2 / (params_.width * params_.width));
}

double ConformalFamily::profile(const Vec& y, double* grad) const {
  const int n = params_.patch.n;
  if (params_.width <= 0.0) {
    for (int a = 0; a < n; ++a) grad[a] = 0.0;
    return 1.0;
  }
  const double w2 = params_.width * params_.width;
  const double b = std::exp(-0.5 * (y - center_).squaredNorm() / w2);
  for (int a = 0; a < n; ++a) grad[a] = -(y[a] - center_[a]) / w2 * b;
  return b;
}

double ConformalFamily::profile_dy(const Vec& y, int alpha) const {
  if (params_.width <= 0.0) return 0.0;
  const double w2 = params_.width * params_.width;
  return -(y[alpha] - center_[alpha]) / w2 * profile(y);
}

Mat ConformalFamily::h(double rho, const Vec& y) const {
  return scaled_identity(n(), 1.0 + params_.amplitude * ipow(rho, params_.power) * profile(y));
}

Mat ConformalFamily::dh_drho(double rho, const Vec& y) const {
  const int p = params_.power;
  const double d = p > 0 ? p * ipow(rho, p - 1) : 0.0;
  return scaled_identity(n(), params_.amplitude * d * profile(y));
}

Mat ConformalFamily::dh_dy(double rho, const Vec& y, int alpha) const {
  return scaled_identity(n(), params_.amplitude * ipow(rho, params_.power) * profile_dy(y, alpha));
}

std::shared_ptr<const ProjectiveModel> ConformalFamily::split() const {
  const int p = params_.power;
  if (p % 2 != 0 && params_.amplitude != 0.0 && !params_.declared_order) return nullptr;
  return std::make_shared<ConformalModel>(shared_from_this());
}

std::shared_ptr<const MetricFamily> make_family(const FamilySpec& spec) {
  ConformalFamilyParams p;
  p.name = spec.name;
  p.patch = BoundaryPatch{spec.n, spec.extent, spec.collar_depth};
  p.center = spec.center;
  p.width = spec.width;
  if (spec.name == "hyperbolic") {
    p.amplitude = 0.0;
    p.power = 0;
    p.declared_order = spec.order;
  } else if (spec.name == "even_quadratic") {
    p.amplitude = spec.amplitude;
    p.power = 2;
    p.declared_order = spec.order;
  } else if (spec.name == "odd5_bump" || spec.name == "n5_bump") {
    p.amplitude = spec.amplitude;
    p.power = 5;
    p.declared_order = spec.order.value_or(5);
  } else if (spec.name == "n3_bump") {
    p.amplitude = spec.amplitude;
    p.power = 3;
    p.declared_order = spec.order.value_or(3);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown metric family '" + spec.name + "'");
  }
  return std::make_shared<ConformalFamily>(std::move(p));
}

Mat evaluate_ah_metric(const MetricFamily& family, double rho, const Vec& y) {
  const auto& patch = family.patch();
  if (!(rho > 0.0)) throw Error(ErrorCode::kDomain, "AH metric is defined only for rho > 0");
  if (rho >= patch.collar_depth) throw Error(ErrorCode::kDomain, "rho outside the collar");
  const int n = patch.n;
  const double s = 1.0 / (rho * rho);
  Mat g = Mat::Zero(n + 1, n + 1);
  g(0, 0) = s;
  g.bottomRightCorner(n, n) = s * family.h(rho, y);
  return g;
}

std::vector<double> fd_weights(double x0, const std::vector<double>& nodes, int m) {
  // Fornberg's recursion; returns weights for derivative order m only.
  const int np = static_cast<int>(nodes.size());
  if (m >= np) throw Error(ErrorCode::kInvalidArgument, "stencil too short for derivative order");
  std::vector<std::vector<double>> c(np, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < np; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> out(np);
  for (int i = 0; i < np; ++i) out[i] = c[i][m];
  return out;
}

EvennessReport check_evenness(const MetricFamily& family, int order, double tol) {
  const auto& patch = family.patch();
  if (order < 1 || order % 2 == 0) throw Error(ErrorCode::kInvalidArgument, "evenness order must be odd");
  EvennessReport rep;
  rep.step = patch.collar_depth / 10.0;
  constexpr int kPoints = 6;
  if ((kPoints - 1) * rep.step >= patch.collar_depth) throw Error(ErrorCode::kDomain, "stencil exits the collar");
  std::vector<double> nodes(kPoints);
  for (int i = 0; i < kPoints; ++i) nodes[i] = i * rep.step;

  const auto ys = sample_y(patch);
  rep.scale = 0.0;
  for (const Vec& y : ys) rep.scale = std::max(rep.scale, max_abs(family.h(0.0, y)));
  rep.tolerance = tol * rep.scale;
  rep.max_resolved_order = kPoints - 1;

  for (int m = 1; m < order && m <= rep.max_resolved_order; m += 2) {
    const auto w = fd_weights(0.0, nodes, m);
    double worst = 0.0;
    for (const Vec& y : ys) {
      Mat acc = Mat::Zero(patch.n, patch.n);
      for (int i = 0; i < kPoints; ++i) acc += w[i] * family.h(nodes[i], y);
      worst = std::max(worst, max_abs(acc));
    }
    rep.orders.push_back({m, worst});
    if (worst > rep.tolerance) rep.passed = false;
  }
  return rep;
}

std::shared_ptr<const ProjectiveModel> to_even_structure(const MetricFamily& family) {
  const auto declared = family.evenness_order();
  if (declared) {
    const auto rep = check_evenness(family, *declared);
    if (!rep.passed) {
      std::ostringstream os;
      os << "family '" << family.name() << "' fails the declared evenness check to order N=" << *declared;
      for (const auto& o : rep.orders) os << " [m=" << o.order << ": " << o.norm << "]";
      throw Error(ErrorCode::kInconsistent, os.str());
    }
  }
  auto model = family.split();
  if (!model) throw Error(ErrorCode::kInconsistent, "family '" + family.name() + "' supplies no (k1, k2) split");
  if (model->order() != 0 && (!declared || model->order() != *declared)) {
    throw Error(ErrorCode::kInconsistent, "split order does not match the declared evenness order");
  }

  // k1 + r^{N/2} k2 must reproduce h_{√r}.
  const auto& patch = family.patch();
  const double rmax = model->r_max();
  double scale = 0.0;
  for (const Vec& y : sample_y(patch)) scale = std::max(scale, max_abs(family.h(0.0, y)));
  for (double frac : {0.0, 0.05, 0.2, 0.5, 0.9}) {
    const double r = frac * rmax;
    for (const Vec& y : sample_y(patch)) {
      const double err = max_abs(model->k(r, y) - family.h(std::sqrt(r), y));
      if (err > 1e-12 * std::max(1.0, scale)) {
        std::ostringstream os;
        os << "split does not reproduce h at r=" << r << " (error " << err << ")";
        throw Error(ErrorCode::kInconsistent, os.str());
      }
    }
  }
  validate_model(*model);
  return model;
}

CollarGridFunction pullback_density_weight(const CollarGridFunction& f) {
  CollarGridFunction out;
  out.y = f.y;
  out.rho.resize(f.rho.size());
  out.values.resize(f.values.size());
  const std::size_t ny = f.y.size();
  for (std::size_t i = 0; i < f.rho.size(); ++i) {
    const double r = f.rho[i] * f.rho[i];
    out.rho[i] = r;
    for (std::size_t j = 0; j < ny; ++j) {
      const double v = f.at(i, j);
      double w;
      if (r > 0.0) {
        w = v / r;
      } else if (v != 0.0) {
        w = std::copysign(std::numeric_limits<double>::infinity(), v);
      } else if (i + 2 < f.rho.size() && i == 0) {
        // 0/0 at the boundary: linear extrapolation in r from the next two rows
        const double r1 = f.rho[1] * f.rho[1], r2 = f.rho[2] * f.rho[2];
        const double w1 = f.at(1, j) / r1, w2 = f.at(2, j) / r2;
        w = w1 - (w2 - w1) / (r2 - r1) * r1;
      } else {
        w = 0.0;
      }
      out.values[i * ny + j] = w;
    }
  }
  return out;
}

}  // namespace ahx
