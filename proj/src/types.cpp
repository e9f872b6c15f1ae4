#include "ahx/types.hpp"

#include <algorithm>
#include <cmath>

namespace ahx {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kDomain: return "domain error";
    case ErrorCode::kInconsistent: return "inconsistency error";
    case ErrorCode::kSingularMetric: return "singular metric";
    case ErrorCode::kRejected: return "rejected";
    case ErrorCode::kExtension: return "extension error";
    case ErrorCode::kStiffFailure: return "stiff failure";
    case ErrorCode::kShootingFailure: return "shooting failure";
    case ErrorCode::kExcludedGeodesic: return "excluded geodesic";
    case ErrorCode::kReparametrization: return "reparametrization error";
    case ErrorCode::kSchema: return "schema violation";
    case ErrorCode::kNumerical: return "numerical failure";
    case ErrorCode::kInvalidArgument: return "invalid argument";
  }
  return "unknown";
}

double Christoffel::max_abs_diff(const Christoffel& other) const {
  double m = 0.0;
  for (int k = 0; k < dim_; ++k)
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) m = std::max(m, std::abs((*this)(k, i, j) - other(k, i, j)));
  return m;
}

double Christoffel::max_asymmetry() const {
  double m = 0.0;
  for (int k = 0; k < dim_; ++k)
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) m = std::max(m, std::abs((*this)(k, i, j) - (*this)(k, j, i)));
  return m;
}

}  // namespace ahx
