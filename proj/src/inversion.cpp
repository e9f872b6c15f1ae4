#include "ahx/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace ahx {

namespace {

/// Weighted operator Ã = W_out^{1/2} A W_in^{-1/2} applied without forming it.
struct WeightedOp {
  const Eigen::MatrixXd& A;
  Eigen::VectorXd sr, sc_inv;  // sqrt(row weights), 1/sqrt(col weights)

  WeightedOp(const Eigen::MatrixXd& a, const Eigen::VectorXd& rw, const Eigen::VectorXd& cw)
      : A(a), sr(rw.cwiseSqrt()), sc_inv(cw.cwiseSqrt().cwiseInverse()) {}

  Eigen::VectorXd apply(const Eigen::VectorXd& g) const { return sr.cwiseProduct(A * sc_inv.cwiseProduct(g)); }
  Eigen::VectorXd apply_t(const Eigen::VectorXd& h) const {
    return sc_inv.cwiseProduct(A.transpose() * sr.cwiseProduct(h));
  }
  Eigen::VectorXd gram(const Eigen::VectorXd& g) const { return apply_t(apply(g)); }
};

struct LanczosResult {
  double lo = 0.0, hi = 0.0;
  double residual_lo = 0.0, residual_hi = 0.0;  // |β_k s_k| of the extreme Ritz pairs
  int iterations = 0;
};

/// Extreme Ritz values of a symmetric operator, full reorthogonalization. Stops when
/// the Ritz pair selected by `target_hi` has relative residual ≤ tol.
LanczosResult lanczos(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply, Eigen::Index n,
                      bool target_hi, const CertificateOptions& opts) {
  LanczosResult out;
  const int kmax = static_cast<int>(std::min<Eigen::Index>(opts.lanczos_max_iter, n));
  Eigen::MatrixXd Q(n, kmax + 1);
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) q[i] = nd(rng);
  Q.col(0) = q.normalized();
  std::vector<double> alpha, beta;
  for (int j = 0; j < kmax; ++j) {
    Eigen::VectorXd w = apply(Q.col(j));
    if (!w.allFinite()) throw Error(ErrorCode::kNumerical, "Lanczos: operator produced non-finite values");
    alpha.push_back(Q.col(j).dot(w));
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd h = Q.leftCols(j + 1).transpose() * w;
      w -= Q.leftCols(j + 1) * h;
    }
    beta.push_back(w.norm());
    out.iterations = j + 1;
    const bool exhausted = beta.back() <= 1e-14 * std::max(1.0, std::abs(alpha.back()));
    if ((j + 1) % 5 == 0 || j + 1 == kmax || exhausted) {
      const int k = j + 1;
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
      for (int i = 0; i < k; ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      out.lo = es.eigenvalues()[0];
      out.hi = es.eigenvalues()[k - 1];
      out.residual_lo = std::abs(beta.back() * es.eigenvectors()(k - 1, 0));
      out.residual_hi = std::abs(beta.back() * es.eigenvectors()(k - 1, k - 1));
      const double rel = target_hi ? out.residual_hi / std::abs(out.hi) : out.residual_lo / std::abs(out.lo);
      if (rel <= opts.lanczos_tol || exhausted) break;
    }
    Q.col(j + 1) = w / beta.back();
  }
  return out;
}

Certificate certify(const WeightedOp& op, const CertificateOptions& opts) {
  Certificate c;
  const Eigen::Index m = op.A.rows(), n = op.A.cols();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "empty operator matrix");
  if (op.A.cwiseAbs().maxCoeff() == 0.0) {
    c.method = "zero";
    return c;
  }
  const auto gram = [&](const Eigen::VectorXd& v) { return op.gram(v); };
  if (m < n) {
    // a wide matrix has a nontrivial kernel
    const LanczosResult top = lanczos(gram, n, true, opts);
    c.sigma_max = std::sqrt(std::max(top.hi, 0.0));
    c.method = "wide";
    c.iterations = top.iterations;
    return c;
  }
  if (n <= opts.exact_limit) {
    // all Gram eigenvalues; as accurate as an SVD for σ ≫ ε‖A‖
    const Eigen::MatrixXd W = op.sr.asDiagonal() * op.A * op.sc_inv.asDiagonal();
    const Eigen::MatrixXd G = W.transpose() * W;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::kNumerical, "eigensolver failed");
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    c.sigma_min = ev.minCoeff();
    c.sigma_max = ev.maxCoeff();
    c.method = "gram-eig";
    return c;
  }
  const LanczosResult top = lanczos(gram, n, true, opts);
  c.sigma_max = std::sqrt(std::max(top.hi, 0.0));
  if (n <= opts.dense_limit) {
    // factor Ã once, then Lanczos on (ÃᵀÃ)⁻¹ whose top eigenvalue is σ_min⁻²
    const Eigen::MatrixXd W = op.sr.asDiagonal() * op.A * op.sc_inv.asDiagonal();
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> inv;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    Eigen::MatrixXd R;
    double pivot_min = 0.0, pivot_max = 0.0;
    if (m == n) {
      lu.compute(W);
      const Eigen::VectorXd d = lu.matrixLU().diagonal().cwiseAbs();
      pivot_min = d.minCoeff();
      pivot_max = d.maxCoeff();
      inv = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        const Eigen::VectorXd y = lu.transpose().solve(v);
        return lu.solve(y);
      };
      c.method = "lu-inverse-lanczos";
    } else {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
      R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
      const Eigen::VectorXd d = R.diagonal().cwiseAbs();
      pivot_min = d.minCoeff();
      pivot_max = d.maxCoeff();
      inv = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        const Eigen::VectorXd y = R.transpose().triangularView<Eigen::Lower>().solve(v);
        return R.triangularView<Eigen::Upper>().solve(y);
      };
      c.method = "qr-inverse-lanczos";
    }
    if (!(pivot_min > 1e-14 * pivot_max)) {
      c.sigma_min = 0.0;
      c.iterations = top.iterations;
      return c;
    }
    const LanczosResult low = lanczos(inv, n, true, opts);
    c.sigma_min = low.hi > 0.0 ? 1.0 / std::sqrt(low.hi) : 0.0;
    c.residual = low.hi > 0.0 ? low.residual_hi / low.hi : kOpenEnd;
    c.iterations = top.iterations + low.iterations;
    return c;
  }
  // beyond the factorization limit: Lanczos on ÃᵀÃ directly (an upper bound on σ_min)
  const LanczosResult low = lanczos(gram, n, false, opts);
  c.sigma_min = std::sqrt(std::max(low.lo, 0.0));
  c.residual = low.lo > 0.0 ? low.residual_lo / low.lo : kOpenEnd;
  c.iterations = top.iterations + low.iterations;
  c.method = "lanczos";
  return c;
}

}  // namespace

Certificate injectivity_certificate(const OperatorMatrix& m, const CertificateOptions& opts) {
  return certify(WeightedOp(m.A, m.row_weights, m.col_weights), opts);
}

Certificate injectivity_certificate(const Eigen::MatrixXd& A, const CertificateOptions& opts) {
  return certify(WeightedOp(A, Eigen::VectorXd::Ones(A.rows()), Eigen::VectorXd::Ones(A.cols())), opts);
}

double gram_norm_estimate(const OperatorMatrix& m, int iterations) {
  const WeightedOp op(m.A, m.row_weights, m.col_weights);
  Eigen::VectorXd g = Eigen::VectorXd::Ones(m.A.cols()).normalized();
  double lam = 0.0;
  for (int i = 0; i < iterations; ++i) {
    const Eigen::VectorXd h = op.gram(g);
    lam = g.dot(h);
    const double nh = h.norm();
    if (nh == 0.0) return 0.0;
    g = h / nh;
  }
  return lam;
}

Reconstruction reconstruct(const OperatorMatrix& m, const Eigen::VectorXd& data, const ReconstructOptions& opts) {
  if (data.size() != m.A.rows()) throw Error(ErrorCode::kInvalidArgument, "data does not match the output grid");
  const WeightedOp op(m.A, m.row_weights, m.col_weights);
  Reconstruction out;
  const double gn = gram_norm_estimate(m);
  out.reg = opts.reg >= 0.0 ? opts.reg : 1e-6 * gn;
  const Eigen::Index n = m.A.cols();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);  // g = W_in^{1/2} f
  const Eigen::VectorXd b = op.apply_t(m.row_weights.cwiseSqrt().cwiseProduct(data));
  const double bn = b.norm();
  auto finish = [&]() {
    out.f = op.sc_inv.cwiseProduct(g);
    return out;
  };
  if (bn == 0.0) {
    out.converged = true;
    return finish();
  }
  auto normal = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return op.gram(v) + out.reg * v; };

  if (opts.neumann) {
    const double c = gn > 0.0 ? 1.0 / (gn + out.reg) : 0.0;
    for (int it = 0; it < opts.max_iter; ++it) {
      const Eigen::VectorXd r = b - normal(g);
      const double rel = r.norm() / bn;
      out.residual_history.push_back(rel);
      out.iterations = it;
      if (rel <= opts.tol) {
        out.converged = true;
        return finish();
      }
      g += c * r;
    }
    out.iterations = opts.max_iter;
    return finish();
  }

  Eigen::VectorXd r = b, p = r;
  double rr = r.squaredNorm();
  for (int it = 0; it < opts.max_iter; ++it) {
    const double rel = std::sqrt(rr) / bn;
    out.residual_history.push_back(rel);
    out.iterations = it;
    if (rel <= opts.tol) {
      out.converged = true;
      return finish();
    }
    const Eigen::VectorXd Ap = normal(p);
    const double a = rr / p.dot(Ap);
    g += a * p;
    r -= a * Ap;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  out.iterations = opts.max_iter;
  out.residual_history.push_back(std::sqrt(rr) / bn);
  out.converged = out.residual_history.back() <= opts.tol;
  return finish();
}

double relative_l2_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& w) {
  const double den = std::sqrt(b.cwiseProduct(b).dot(w));
  const Eigen::VectorXd d = a - b;
  const double num = std::sqrt(d.cwiseProduct(d).dot(w));
  if (den == 0.0) return num == 0.0 ? 0.0 : kOpenEnd;
  return num / den;
}

StabilityResult stability_ratio(const OperatorMatrix& m, const SpatialGrid& grid,
                                const std::vector<Eigen::VectorXd>& probes) {
  StabilityResult out;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const Eigen::VectorXd& u = probes[k];
    if (u.size() != m.A.cols()) throw Error(ErrorCode::kInvalidArgument, "probe does not match the input nodes");
    const double un = std::sqrt(u.cwiseProduct(u).dot(m.col_weights));
    if (un == 0.0) throw Error(ErrorCode::kInvalidArgument, "probes must be nonzero");
    const Eigen::VectorXd Au = m.A * u;
    Eigen::VectorXd full = Eigen::VectorXd::Zero(grid.size());
    for (std::size_t i = 0; i < m.rows.size(); ++i) full[m.rows[i]] = Au[static_cast<Eigen::Index>(i)];
    const double an = discrete_sc_norm(grid, full, 1, 0.0);
    if (an == 0.0) {
      out.injectivity_failure = true;
      out.ratio = kOpenEnd;
      out.worst_probe = static_cast<int>(k);
      return out;
    }
    if (un / an > out.ratio) {
      out.ratio = un / an;
      out.worst_probe = static_cast<int>(k);
    }
  }
  return out;
}

Eigen::VectorXd sample_on_columns(const OperatorMatrix& m, const SpatialGrid& grid, const ScalarField& f) {
  Eigen::VectorXd out(m.cols.size());
  for (std::size_t j = 0; j < m.cols.size(); ++j) out[static_cast<Eigen::Index>(j)] = f(grid.node(m.cols[j]));
  return out;
}

std::vector<Eigen::VectorXd> make_probes(const OperatorMatrix& m, const SpatialGrid& grid, std::uint64_t seed,
                                         int random_bumps) {
  const int n = grid.n;
  std::vector<Eigen::VectorXd> out;
  Vec lo(n + 1), hi(n + 1);
  lo[0] = grid.x_lo;
  hi[0] = grid.x_hi;
  lo.tail(n) = grid.y_lo;
  hi.tail(n) = grid.y_hi;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < random_bumps; ++k) {
    Vec c(n + 1), w(n + 1);
    for (int i = 0; i <= n; ++i) {
      c[i] = lo[i] + u(rng) * (hi[i] - lo[i]);
      w[i] = (0.2 + 0.6 * u(rng)) * (hi[i] - lo[i]);
    }
    out.push_back(sample_on_columns(m, grid, [c, w](const Vec& z) {
      double s = 0.0;
      for (int i = 0; i < z.size(); ++i) s += ((z[i] - c[i]) / w[i]) * ((z[i] - c[i]) / w[i]);
      if (s >= 1.0) return 0.0;
      const double t = 1.0 - s;
      return t * t * t;
    }));
    if (out.back().norm() == 0.0) out.pop_back();
  }
  out.push_back(sample_on_columns(m, grid, [](const Vec&) { return 1.0; }));
  for (int i = 0; i <= n; ++i) {
    out.push_back(sample_on_columns(m, grid, [i](const Vec& z) { return z[i]; }));
    if (out.back().norm() == 0.0) out.pop_back();
  }
  return out;
}

}  // namespace ahx
