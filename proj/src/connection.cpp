#include "ahx/connection.hpp"

#include <cmath>
#include <sstream>

namespace ahx {

namespace {

/// Christoffel symbols from the block data of k_r:
/// Γ⁰_{αβ} = 2(k − r∂_r k), Γ^γ_{0β} = ½ k⁻¹∂_r k, Γ^γ_{αβ} = Christoffels of k at fixed r.
void fill_from_k(int n, double r, const Mat& K, const Mat& dKr, const std::array<Mat, kMaxDim>& dKy,
                 Christoffel& out) {
  out.reset(n + 1);
  const double det = K.determinant();
  if (!(std::abs(det) > 1e-300) || !std::isfinite(det)) {
    throw Error(ErrorCode::kSingularMetric, "k_r is not invertible");
  }
  const Mat kinv = small_inverse(K);
  const Mat kinv_dr = kinv * dKr;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      out(0, a + 1, b + 1) = 2.0 * (K(a, b) - r * dKr(a, b));
      out(a + 1, 0, b + 1) = 0.5 * kinv_dr(a, b);
      out(a + 1, b + 1, 0) = 0.5 * kinv_dr(a, b);
    }
  }
  for (int c = 0; c < n; ++c) {
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        double s = 0.0;
        for (int d = 0; d < n; ++d) s += kinv(c, d) * (dKy[a](d, b) + dKy[b](d, a) - dKy[d](a, b));
        out(c + 1, a + 1, b + 1) = 0.5 * s;
        out(c + 1, b + 1, a + 1) = 0.5 * s;
      }
    }
  }
}

void check_finite(const Christoffel& c, const Vec& z) {
  for (int k = 0; k < c.dim(); ++k)
    for (int i = 0; i < c.dim(); ++i)
      for (int j = 0; j < c.dim(); ++j)
        if (!std::isfinite(c(k, i, j))) {
          std::ostringstream os;
          os << "smooth part is not finite at r=" << z[0];
          throw Error(ErrorCode::kExtension, os.str());
        }
}

void bar_from_jet(int n, double r, const ModelJet& j, Christoffel& out) {
  fill_from_k(n, r, j.k1, j.dk1_dr, j.dk1_dy, out);
}

void hat_from_jet(const ProjectiveModel& model, double r, const ModelJet& j, Christoffel& out) {
  const int n = model.n();
  if (model.order() == 0 || r <= 0.0) {
    bar_from_jet(n, r, j, out);
    return;
  }
  const double m = model.half_order();
  const double s = std::pow(r, m);
  const double ds = m * std::pow(r, m - 1.0);
  const Mat K = j.k1 + s * j.k2;
  const Mat dKr = j.dk1_dr + ds * j.k2 + s * j.dk2_dr;
  std::array<Mat, kMaxDim> dKy;
  for (int a = 0; a < n; ++a) dKy[a] = j.dk1_dy[a] + s * j.dk2_dy[a];
  fill_from_k(n, r, K, dKr, dKy, out);
}

Vec y_part(const Vec& z) { return z.tail(z.size() - 1); }

}  // namespace

const char* to_string(Regularity reg) {
  switch (reg) {
    case Regularity::kSmooth: return "smooth";
    case Regularity::kC1Split: return "C1_split";
    case Regularity::kContinuous: return "continuous";
  }
  return "unknown";
}

void hat_christoffel(const ProjectiveModel& model, const Vec& z, Christoffel& out) {
  if (z[0] < 0.0) throw Error(ErrorCode::kDomain, "hat Christoffel symbols need r >= 0");
  ModelJet j;
  model.jet(z[0], y_part(z), j);
  hat_from_jet(model, z[0], j, out);
}

Christoffel hat_christoffel(const ProjectiveModel& model, const Vec& z) {
  Christoffel c;
  hat_christoffel(model, z, c);
  return c;
}

HatField::HatField(std::shared_ptr<const ProjectiveModel> model) : model_(std::move(model)) {}

void HatField::eval(const Vec& z, Christoffel& out) const { hat_christoffel(*model_, z, out); }

Regularity HatField::regularity() const {
  if (model_->order() == 0) return Regularity::kSmooth;
  return model_->order() >= 5 ? Regularity::kC1Split : Regularity::kContinuous;
}

ConnectionSplit::ConnectionSplit(std::shared_ptr<const ProjectiveModel> model, double eps0)
    : model_(std::move(model)), eps0_(eps0) {
  if (!(eps0 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eps0 must be positive");
}

void ConnectionSplit::gamma_bar(const Vec& z, Christoffel& out) const {
  ModelJet j;
  model_->jet(z[0], y_part(z), j);
  bar_from_jet(model_->n(), z[0], j, out);
  if (z[0] < 0.0) check_finite(out, z);
}

void ConnectionSplit::B(const Vec& z, Christoffel& out) const {
  Christoffel bar;
  parts(z, bar, out);
}

double ConnectionSplit::parts(const Vec& z, Christoffel& bar, Christoffel& b) const {
  const int n = model_->n();
  const double r = z[0];
  ModelJet j;
  model_->jet(r, y_part(z), j);
  bar_from_jet(n, r, j, bar);
  if (r < 0.0) check_finite(bar, z);
  b.reset(n + 1);
  if (trivial() || r < 0.0) return 0.0;

  const double m = model_->half_order();
  const double s = std::pow(r, m);
  const Mat K = j.k1 + s * j.k2;
  const Mat kinv = small_inverse(K);
  const Mat k1inv = small_inverse(j.k1);
  const Mat k2k1inv = j.k2 * k1inv;

  const Mat b0 = 2.0 * r * ((1.0 - m) * j.k2 - r * j.dk2_dr);
  const Mat bmix = 0.5 * kinv * (m * j.k2 + r * j.dk2_dr - r * k2k1inv * j.dk1_dr);
  for (int a = 0; a < n; ++a) {
    for (int c = 0; c < n; ++c) {
      b(0, a + 1, c + 1) = b0(a, c);
      b(a + 1, 0, c + 1) = bmix(a, c);
      b(a + 1, c + 1, 0) = bmix(a, c);
    }
  }
  // S_{δαβ} = ∂_α k_{δβ} + ∂_β k_{δα} − ∂_δ k_{αβ}
  for (int a = 0; a < n; ++a) {
    for (int c = a; c < n; ++c) {
      Vec s1(n), s2(n);
      for (int d = 0; d < n; ++d) {
        s1[d] = j.dk1_dy[a](d, c) + j.dk1_dy[c](d, a) - j.dk1_dy[d](a, c);
        s2[d] = j.dk2_dy[a](d, c) + j.dk2_dy[c](d, a) - j.dk2_dy[d](a, c);
      }
      const Vec val = 0.5 * r * kinv * (s2 - k2k1inv * s1);
      for (int g = 0; g < n; ++g) {
        b(g + 1, a + 1, c + 1) = val[g];
        b(g + 1, c + 1, a + 1) = val[g];
      }
    }
  }
  return r > 0.0 ? std::pow(r, m - 1.0) : 0.0;
}

Mat ConnectionSplit::mixed(const Vec& z) const {
  const int n = model_->n();
  const double r = z[0];
  if (trivial() || r < 0.0) return Mat::Zero(n, n);
  ModelJet j;
  model_->jet(r, y_part(z), j);
  const double m = model_->half_order();
  const Mat K = j.k1 + std::pow(r, m) * j.k2;
  const Mat k1inv_dr = small_inverse(j.k1) * j.dk1_dr;
  return 0.5 * small_inverse(K) * (m * j.k2 + r * j.dk2_dr - r * j.k2 * k1inv_dr);
}

void ConnectionSplit::composed(const Vec& z, Christoffel& out) const {
  Christoffel b;
  const double w = parts(z, out, b);
  if (w != 0.0) out.add_scaled(b, w);
}

std::shared_ptr<const ConnectionSplit> split_connection(std::shared_ptr<const ProjectiveModel> model, double eps0) {
  if (!model) throw Error(ErrorCode::kInvalidArgument, "null projective model");
  const int N = model->order();
  if (N != 0 && N < 5) {
    std::ostringstream os;
    os << "split rejected: evenness order N=" << N
       << " < 5 leaves the compactified connection only continuous at r=0 (C^1 needs N >= 5)";
    throw Error(ErrorCode::kRejected, os.str());
  }
  return std::make_shared<ConnectionSplit>(std::move(model), eps0);
}

void ExtendedField::eval(const Vec& z, Christoffel& out) const { split_->composed(z, out); }

void BarField::eval(const Vec& z, Christoffel& out) const { split_->gamma_bar(z, out); }

std::shared_ptr<const ChristoffelField> extend_past_boundary(std::shared_ptr<const ConnectionSplit> split) {
  return std::make_shared<ExtendedField>(std::move(split));
}

ComposedField::ComposedField(std::shared_ptr<const ProjectiveModel> model, double eps0)
    : model_(std::move(model)), eps0_(eps0) {}

void ComposedField::eval(const Vec& z, Christoffel& out) const {
  ModelJet j;
  model_->jet(z[0], y_part(z), j);
  hat_from_jet(*model_, z[0], j, out);
  if (z[0] < 0.0) check_finite(out, z);
}

Regularity ComposedField::regularity() const {
  if (model_->order() == 0) return Regularity::kSmooth;
  return model_->order() >= 5 ? Regularity::kC1Split : Regularity::kContinuous;
}

std::shared_ptr<const ChristoffelField> projective_field(std::shared_ptr<const ProjectiveModel> model, double eps0) {
  const int N = model->order();
  if (N == 0 || N >= 5) return extend_past_boundary(split_connection(std::move(model), eps0));
  return std::make_shared<ComposedField>(std::move(model), eps0);
}

Christoffel levi_civita_fd(const std::function<Mat(const Vec&)>& metric, const Vec& z, double step) {
  const int d = static_cast<int>(z.size());
  const Mat g = metric(z);
  const Mat ginv = g.inverse();
  std::array<Mat, kMaxDim> dg;
  for (int k = 0; k < d; ++k) {
    Vec e = Vec::Zero(d);
    e[k] = step;
    dg[k] = (metric(z - 2 * e) - 8.0 * metric(z - e) + 8.0 * metric(z + e) - metric(z + 2 * e)) / (12.0 * step);
  }
  Christoffel out(d);
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int l = 0; l < d; ++l) s += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        out(k, i, j) = 0.5 * s;
      }
  return out;
}

void AhMetricField::eval(const Vec& z, Christoffel& out) const {
  const int n = family_->n();
  const double rho = z[0];
  if (!(rho > 0.0)) throw Error(ErrorCode::kDomain, "AH metric Christoffels need rho > 0");
  const Vec y = y_part(z);
  const Mat h = family_->h(rho, y);
  const Mat dh = family_->dh_drho(rho, y);
  std::array<Mat, kMaxDim> dhy;
  for (int a = 0; a < n; ++a) dhy[a] = family_->dh_dy(rho, y, a);
  const Mat hinv = h.inverse();
  const Mat hinv_dh = hinv * dh;
  out.reset(n + 1);
  out(0, 0, 0) = -1.0 / rho;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      out(0, a + 1, b + 1) = h(a, b) / rho - 0.5 * dh(a, b);
      const double mix = (a == b ? -1.0 / rho : 0.0) + 0.5 * hinv_dh(a, b);
      out(a + 1, 0, b + 1) = mix;
      out(a + 1, b + 1, 0) = mix;
    }
  }
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double s = 0.0;
        for (int d = 0; d < n; ++d) s += hinv(c, d) * (dhy[a](d, b) + dhy[b](d, a) - dhy[d](a, b));
        out(c + 1, a + 1, b + 1) = 0.5 * s;
      }
}

Mat projective_metric(const ProjectiveModel& model, const Vec& z) {
  const int n = model.n();
  const double r = z[0];
  Mat g = Mat::Zero(n + 1, n + 1);
  g(0, 0) = 1.0 / (4.0 * r * r);
  g.bottomRightCorner(n, n) = model.k(r, y_part(z)) / r;
  return g;
}

ProjectiveDifference projective_difference(const ProjectiveModel& model, const Vec& z) {
  const double r = z[0];
  if (!(r > 0.0)) throw Error(ErrorCode::kDomain, "projective difference needs r > 0");
  const int d = model.n() + 1;
  ProjectiveDifference out;
  out.D.reset(d);
  out.D(0, 0, 0) = 1.0 / r;
  for (int c = 1; c < d; ++c) {
    out.D(c, 0, c) = 0.5 / r;
    out.D(c, c, 0) = 0.5 / r;
  }
  Christoffel e = levi_civita_fd([&](const Vec& p) { return projective_metric(model, p); }, z, 1e-3 * r);
  e += out.D;
  out.residual = hat_christoffel(model, z).max_abs_diff(e);
  return out;
}

Mat background_metric(int dim) { return Mat::Identity(dim, dim); }

bool is_unit_velocity(const Vec& v, double tol) { return std::abs(v.norm() - 1.0) <= tol; }

void require_nonzero_velocity(const Vec& v) {
  if (!(v.squaredNorm() > 0.0)) throw Error(ErrorCode::kInvalidArgument, "zero vector is not a geodesic initial velocity");
}

}  // namespace ahx
