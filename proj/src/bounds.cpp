#include "selfsim/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include "selfsim/errors.hpp"
#include "selfsim/philox.hpp"

namespace selfsim {
namespace {

bool is_kappa(double kappa, double target) { return std::abs(kappa - target) < 1e-12; }

double checked_ratio(const ProcessSpec& spec, double x) {
  const double f = variogram_ratio(spec, x);
  if (!std::isfinite(f))
    throw ComputeError(fmt::format("variogram ratio of {} is not finite at x = {}",
                                   spec.label(), x));
  return f;
}

// Brent minimization of sign * f on [lo, hi]; returns (x, f(x)).
std::pair<double, double> refine(const ProcessSpec& spec, double lo, double hi,
                                 double sign, double refine_tol) {
  const int bits = static_cast<int>(std::ceil(-std::log2(refine_tol))) + 1;
  auto objective = [&](double x) { return sign * checked_ratio(spec, x); };
  const auto [x, fx] = boost::math::tools::brent_find_minima(objective, lo, hi, bits);
  return {x, sign * fx};
}

}  // namespace

double variogram_ratio(const ProcessSpec& spec, double x) {
  if (!(x >= 0.0 && x < 1.0))
    throw ParameterError(fmt::format("variogram ratio: x = {} outside [0, 1)", x));
  const SSTriple triple = ss_parameters(spec);
  const double y = std::pow(x, triple.kappa / triple.alpha);
  return variogram(spec, 1.0, y) / std::pow(1.0 - x, triple.kappa);
}

double variogram_ratio_limit(const ProcessSpec& spec) {
  const SSTriple triple = ss_parameters(spec);
  return triple.c_y * std::pow(triple.kappa / triple.alpha, triple.kappa);
}

VariogramConstants compute_c1_c2(const ProcessSpec& spec, std::size_t coarse_n,
                                 double refine_tol) {
  if (coarse_n < 64) throw ParameterError("compute_c1_c2: coarse_n must be >= 64");
  if (!(refine_tol > 0.0)) throw ParameterError("compute_c1_c2: refine_tol must be > 0");
  const SSTriple triple = ss_parameters(spec);

  // Close to x = 1 the variogram of kernels without a closed-form increment is
  // a difference of O(1) numbers; stop where (1-x)^kappa is still >= 1e-9.
  const double gap = std::max(1e-6, std::pow(1e-9, 1.0 / triple.kappa));
  VariogramConstants out;
  out.scan_end = 1.0 - gap;
  out.limit = variogram_ratio_limit(spec);

  std::vector<double> xs(coarse_n), fs(coarse_n);
  for (std::size_t i = 0; i < coarse_n; ++i) {
    xs[i] = out.scan_end * static_cast<double>(i) / static_cast<double>(coarse_n - 1);
    fs[i] = checked_ratio(spec, xs[i]);
  }
  const auto imin = static_cast<std::size_t>(std::min_element(fs.begin(), fs.end()) - fs.begin());
  const auto imax = static_cast<std::size_t>(std::max_element(fs.begin(), fs.end()) - fs.begin());

  auto bracket = [&](std::size_t i) {
    return std::pair{xs[i == 0 ? 0 : i - 1], xs[std::min(i + 1, coarse_n - 1)]};
  };

  out.c1 = fs[imin];
  out.argmin_x = xs[imin];
  if (auto [lo, hi] = bracket(imin); hi > lo) {
    const auto [x, f] = refine(spec, lo, hi, 1.0, refine_tol);
    if (f < out.c1) {
      out.c1 = f;
      out.argmin_x = x;
    }
  }
  out.c2 = fs[imax];
  out.argmax_x = xs[imax];
  if (auto [lo, hi] = bracket(imax); hi > lo) {
    const auto [x, f] = refine(spec, lo, hi, -1.0, refine_tol);
    if (f > out.c2) {
      out.c2 = f;
      out.argmax_x = x;
    }
  }
  if (out.limit < out.c1) {
    out.c1 = out.limit;
    out.argmin_x = 1.0;
  }
  if (out.limit > out.c2) {
    out.c2 = out.limit;
    out.argmax_x = 1.0;
  }
  return out;
}

double universal_lower_bound(double R) {
  if (!(R > 0.0)) throw ParameterError("R must be > 0");
  return 0.5 * (1.0 + std::sqrt(1.0 + 1.0 / R));
}

PiterbargBounds piterbarg_bounds(const ProcessSpec& spec, double R,
                                 const VariogramConstants& constants) {
  if (!(R > 0.0) || !std::isfinite(R))
    throw ParameterError(fmt::format("Piterbarg bounds need finite R > 0 (got {})", R));
  const SSTriple triple = ss_parameters(spec);
  PiterbargBounds b;
  b.R = R;
  b.kappa = triple.kappa;
  b.lower_target = R / constants.c1;
  b.upper_target = R / constants.c2;
  b.universal_lower = universal_lower_bound(R);
  if (is_kappa(triple.kappa, 1.0)) {
    b.lower = 1.0 + constants.c1 / R;
    b.upper = 1.0 + constants.c2 / R;
  } else if (is_kappa(triple.kappa, 2.0)) {
    b.lower = b.universal_lower;
    b.upper = 0.5 * (1.0 + std::sqrt(1.0 + constants.c2 / R));
  }
  return b;
}

PiterbargBounds piterbarg_bounds(const ProcessSpec& spec, double R) {
  return piterbarg_bounds(spec, R, compute_c1_c2(spec));
}

PickandsClosedForm pickands_closed_form(const ProcessSpec& spec,
                                        std::optional<double> H_Bkappa_reference) {
  const SSTriple triple = ss_parameters(spec);
  PickandsClosedForm out;
  out.coefficient = triple.kappa / triple.alpha * std::pow(triple.c_y, 1.0 / triple.kappa);
  if (is_kappa(triple.kappa, 1.0)) {
    out.value = out.coefficient;
  } else if (is_kappa(triple.kappa, 2.0)) {
    out.value = out.coefficient / std::sqrt(std::numbers::pi);
  } else if (H_Bkappa_reference) {
    out.value = out.coefficient * *H_Bkappa_reference;
    out.from_reference = true;
  }
  return out;
}

HolderCheck check_holder_bound(const ProcessSpec& spec, double T, std::size_t sample_n,
                        std::uint64_t seed) {
  if (!(T > 0.0) || !std::isfinite(T)) throw ParameterError("check_holder_bound: T must be > 0");
  if (sample_n < 1000) throw ParameterError("check_holder_bound: sample_n must be >= 1000");
  const SSTriple triple = ss_parameters(spec);
  HolderCheck out;
  out.gamma = std::min(triple.alpha, triple.kappa);
  const double scale = std::pow(T, triple.alpha - out.gamma);

  auto ratio = [&](double t, double s) {
    const double d = std::abs(t - s);
    if (d == 0.0) return 0.0;
    return variogram(spec, t, s) / (scale * std::pow(d, out.gamma));
  };

  double structured = 0.0;
  for (int j = 0; j <= 4; ++j) {
    const double h = T * std::pow(10.0, -j);
    structured = std::max({structured, ratio(h, 0.0), ratio(T, T - h),
                           ratio(0.5 * T, std::max(0.0, 0.5 * T - h))});
  }
  auto scan = [&](std::size_t n) {
    double best = structured;
    NormalStream stream(seed, 0, Stream::kScan);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = T * stream.uniform();
      const double s = T * stream.uniform();
      best = std::max(best, ratio(t, s));
    }
    return best;
  };
  out.C_hat = scan(sample_n);
  out.C_hat_doubled = scan(2 * sample_n);
  out.pass = std::isfinite(out.C_hat_doubled) && out.C_hat_doubled <= 1.01 * out.C_hat;
  return out;
}

SandwichResult sandwich_check(const ProcessSpec& spec, double c1, double c2,
                              std::size_t n_pairs, double horizon, std::uint64_t seed,
                              double rel_tol) {
  if (!(c1 > 0.0 && c2 >= c1)) throw ParameterError("sandwich_check: need 0 < c1 <= c2");
  if (!(horizon > 0.0)) throw ParameterError("sandwich_check: horizon must be > 0");
  const SSTriple triple = ss_parameters(spec);
  const double e = triple.kappa / triple.alpha;
  constexpr double kRoundoff = 64.0 * std::numeric_limits<double>::epsilon();

  SandwichResult out;
  out.min_ratio = std::numeric_limits<double>::infinity();
  out.max_ratio = -std::numeric_limits<double>::infinity();
  NormalStream stream(seed, 0, Stream::kScan);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const double t = horizon * stream.uniform();
    const double s = horizon * stream.uniform();
    const double ts = std::pow(t, e), ss = std::pow(s, e);
    const double v = variogram(spec, ts, ss);
    const double d = std::pow(std::abs(t - s), triple.kappa);
    const double slack = kRoundoff * (variance(spec, ts) + variance(spec, ss));
    ++out.checked;
    out.min_ratio = std::min(out.min_ratio, v / d);
    out.max_ratio = std::max(out.max_ratio, v / d);
    const bool ok = v >= c1 * d * (1.0 - rel_tol) - slack &&
                    v <= c2 * d * (1.0 + rel_tol) + slack;
    if (!ok && out.pass) {
      out.pass = false;
      out.offending_pair = std::pair{t, s};
    }
  }
  return out;
}

}  // namespace selfsim
