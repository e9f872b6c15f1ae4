#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <array>
#include <stdexcept>
#include <string>

namespace ahx {

/// Largest supported total dimension n+1.
inline constexpr int kMaxDim = 4;

/// Small vectors/matrices with inline storage (no heap traffic in the ODE loops).
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

enum class ErrorCode : int {
  kOk = 0,
  kDomain = 1,
  kInconsistent = 2,
  kSingularMetric = 3,
  kRejected = 4,
  kExtension = 5,
  kStiffFailure = 6,
  kShootingFailure = 7,
  kExcludedGeodesic = 8,
  kReparametrization = 9,
  kSchema = 10,
  kNumerical = 11,
  kInvalidArgument = 12,
};

const char* to_string(ErrorCode code);

/// Inverse of a small matrix (closed form for sizes 1-3).
inline Mat small_inverse(const Mat& a) {
  const auto n = a.rows();
  Mat out(n, n);
  if (n == 1) {
    out(0, 0) = 1.0 / a(0, 0);
  } else if (n == 2) {
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    out(0, 0) = a(1, 1) / det;
    out(1, 1) = a(0, 0) / det;
    out(0, 1) = -a(0, 1) / det;
    out(1, 0) = -a(1, 0) / det;
  } else if (n == 3) {
    out(0, 0) = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
    out(0, 1) = a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2);
    out(0, 2) = a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1);
    out(1, 0) = a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2);
    out(1, 1) = a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0);
    out(1, 2) = a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2);
    out(2, 0) = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
    out(2, 1) = a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1);
    out(2, 2) = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const double det = a(0, 0) * out(0, 0) + a(0, 1) * out(1, 0) + a(0, 2) * out(2, 0);
    out /= det;
  } else {
    out = a.inverse();
  }
  return out;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Christoffel symbols Γ^k_{ij} of a connection in dimension d = n+1.
class Christoffel {
 public:
  Christoffel() = default;
  explicit Christoffel(int dim) : dim_(dim) { data_.fill(0.0); }

  int dim() const { return dim_; }
  void reset(int dim) {
    dim_ = dim;
    data_.fill(0.0);
  }

  double& operator()(int k, int i, int j) { return data_[(k * kMaxDim + i) * kMaxDim + j]; }
  double operator()(int k, int i, int j) const { return data_[(k * kMaxDim + i) * kMaxDim + j]; }

  /// acc^k = Γ^k_{ij} v^i v^j
  Vec contract(const Vec& v) const {
    Vec out = Vec::Zero(dim_);
    for (int k = 0; k < dim_; ++k) {
      double s = 0.0;
      for (int i = 0; i < dim_; ++i) {
        for (int j = 0; j < dim_; ++j) s += (*this)(k, i, j) * v[i] * v[j];
      }
      out[k] = s;
    }
    return out;
  }

  double max_abs_diff(const Christoffel& other) const;
  double max_asymmetry() const;

  Christoffel& operator+=(const Christoffel& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Christoffel& operator-=(const Christoffel& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Christoffel& operator*=(double s) {
    for (auto& x : data_) x *= s;
    return *this;
  }
  void add_scaled(const Christoffel& o, double s) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
  }

 private:
  int dim_ = 0;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> data_{};
};

}  // namespace ahx
