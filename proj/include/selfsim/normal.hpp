#pragma once

#include <cmath>
#include <numbers>

namespace selfsim {

/// Standard normal CDF, via erfc so the lower tail keeps full relative precision.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Psi(u) = P(N(0,1) > u).
inline double normal_tail(double u) { return 0.5 * std::erfc(u / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace selfsim
