#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace natent {

using Index = Eigen::Index;

/// Dense column array of coefficients, the working type for probability
/// vectors and CDFs. Scalar-templated so callers can trade precision
/// (e.g. long double cross-checks) without touching the algorithms.
template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

using ArrayXd = ArrayX<double>;

/// Raised when observed data (as opposed to parameters) is inconsistent
/// with its declared alphabet or format.
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Ceiling of a nonnegative real count, checked against the int64 range.
inline std::int64_t checked_ceil(double value, const char* what) {
  if (!(value >= 0.0)) {
    throw std::domain_error(std::string(what) + ": count must be nonnegative");
  }
  const double up = std::ceil(value);
  // 2^63 exactly; anything at or above cannot be held in int64.
  if (up >= 9223372036854775808.0) {
    throw std::overflow_error(std::string(what) +
                              ": count exceeds 64-bit integer range");
  }
  return static_cast<std::int64_t>(up);
}

}  // namespace detail

}  // namespace natent
