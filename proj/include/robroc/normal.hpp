#ifndef ROBROC_NORMAL_HPP
#define ROBROC_NORMAL_HPP

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace robroc::normal {

inline double cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

inline double quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

inline double pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace robroc::normal

#endif  // ROBROC_NORMAL_HPP
