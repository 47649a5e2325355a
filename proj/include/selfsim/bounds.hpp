#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "selfsim/process.hpp"

namespace selfsim {

/// f(x) = V_Y(1, x^(kappa/alpha)) / (1 - x)^kappa for x in [0, 1).
double variogram_ratio(const ProcessSpec& spec, double x);

/// lim_{x -> 1} f(x) = c_Y (kappa/alpha)^kappa.
double variogram_ratio_limit(const ProcessSpec& spec);

struct VariogramConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double argmin_x = 0.0;
  double argmax_x = 0.0;
  double limit = 0.0;
  /// Numeric scanning stops here; the interval up to 1 is covered by the
  /// analytic limit.
  double scan_end = 0.0;
};

/// c1 = inf f, c2 = sup f over [0, 1). Scans coarse_n equispaced points,
/// includes the analytic x -> 1 limit, then refines the best coarse bracket
/// of each extremum to width refine_tol.
VariogramConstants compute_c1_c2(const ProcessSpec& spec, std::size_t coarse_n = 4096,
                                 double refine_tol = 1e-10);

/// (1 + sqrt(1 + 1/R)) / 2, valid for every family.
double universal_lower_bound(double R);

struct PiterbargBounds {
  double R = 0.0;
  double kappa = 0.0;
  /// Closed forms exist for kappa = 1 and kappa = 2 only.
  std::optional<double> lower;
  std::optional<double> upper;
  /// H_{B_kappa}^{R/c1} <= H_Y^R <= H_{B_kappa}^{R/c2}: the Piterbarg
  /// arguments of the fBm comparison constants.
  double lower_target = 0.0;
  double upper_target = 0.0;
  double universal_lower = 0.0;
};

PiterbargBounds piterbarg_bounds(const ProcessSpec& spec, double R,
                                 const VariogramConstants& constants);
PiterbargBounds piterbarg_bounds(const ProcessSpec& spec, double R);

struct PickandsClosedForm {
  /// (kappa/alpha) c_Y^(1/kappa): H_Y = coefficient * H_{B_kappa}.
  double coefficient = 0.0;
  /// Known for kappa in {1, 2}, or when a reference H_{B_kappa} is supplied.
  std::optional<double> value;
  bool from_reference = false;
};

PickandsClosedForm pickands_closed_form(const ProcessSpec& spec,
                                        std::optional<double> H_Bkappa_reference = {});

struct HolderCheck {
  double gamma = 0.0;
  double C_hat = 0.0;
  /// C_hat over twice as many pairs (a superset of the first scan).
  double C_hat_doubled = 0.0;
  bool pass = false;
};

/// Empirical C in V_Y(t, s) <= C T^(alpha - gamma) |t - s|^gamma over
/// [0, T]^2, gamma = min(alpha, kappa). pass: C_hat finite and at most 1%
/// larger after doubling the sample.
HolderCheck check_holder_bound(const ProcessSpec& spec, double T, std::size_t sample_n = 4096,
                        std::uint64_t seed = 1);

struct SandwichResult {
  bool pass = true;
  std::size_t checked = 0;
  /// min and max of V(t^(kappa/alpha), s^(kappa/alpha)) / |t - s|^kappa seen.
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::optional<std::pair<double, double>> offending_pair;
};

/// c1 |t-s|^kappa <= V_Y(t^(kappa/alpha), s^(kappa/alpha)) <= c2 |t-s|^kappa on
/// random pairs in [0, horizon]^2, at relative tolerance rel_tol plus a
/// roundoff allowance for variograms computed by cancellation.
SandwichResult sandwich_check(const ProcessSpec& spec, double c1, double c2,
                              std::size_t n_pairs = 10000, double horizon = 4.0,
                              std::uint64_t seed = 1, double rel_tol = 1e-9);

}  // namespace selfsim
