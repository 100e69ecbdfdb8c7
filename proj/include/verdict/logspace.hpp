#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace verdict {
namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// log C(n, k) with real-valued n via the log-gamma continuation; returns
// -inf outside the support.
inline double lchoose(double n, double k) {
  if (k < -1e-9 || n - k < -1e-9) return kNegInf;
  k = std::max(k, 0.0);
  if (k == 0.0 || n - k <= 0.0) return 0.0;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
         std::lgamma(n - k + 1.0);
}

}  // namespace detail
}  // namespace verdict
