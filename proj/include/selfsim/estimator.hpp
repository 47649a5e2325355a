#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "selfsim/grid.hpp"
#include "selfsim/process.hpp"
#include "selfsim/sampler.hpp"

namespace selfsim {

enum class Strategy {
  // mean of exp(max_i sqrt(2) Y(t_i) - (1+R) sigma^2(t_i)) under the law of Y
  kPlain,
  // paths drawn from a mixture of mean-shifted laws, reweighted by the
  // likelihood ratio; see estimate_functional
  kChangeOfMeasure,
};

std::string_view strategy_name(Strategy strategy);
Strategy parse_strategy(std::string_view name);

struct EstimatorOptions {
  Strategy strategy = Strategy::kPlain;
  /// Nested grid levels n, 2n - 1, 4n - 3, ... (1 = the requested grid only).
  int levels = 2;
  int threads = 0;
  SamplerMethod method = SamplerMethod::kAuto;
  /// heavy_tail is raised when the standardized fourth moment of the
  /// per-path terms exceeds this.
  double kurtosis_threshold = 50.0;
};

struct LevelEstimate {
  std::size_t grid_n = 0;
  double value = 0.0;
  double std_error = 0.0;
  double log_mean = 0.0;
};

struct FunctionalEstimate {
  /// Raw estimate on the finest level.
  double value = 0.0;
  double std_error = 0.0;
  double log_mean = 0.0;
  /// Richardson extrapolation across the levels in powers of dt^(kappa/2),
  /// formed per path so its stderr accounts for the correlation between
  /// levels. Equal to value when there is a single level.
  double extrapolated = 0.0;
  double extrapolated_stderr = 0.0;
  std::vector<LevelEstimate> levels;
  bool heavy_tail = false;
  double kurtosis = 0.0;
  std::size_t n_paths = 0;
  double T = 0.0;
  double R = 0.0;
  /// Requested (coarsest) grid size.
  std::size_t grid_n = 0;
  Strategy strategy = Strategy::kPlain;
};

/// Monte Carlo estimate of E exp(sup_{[0,T]} sqrt(2) Y(t) - (1+R) sigma^2(t))
/// with the supremum taken over grid points (t = 0 included).
///
/// kChangeOfMeasure draws a grid index I with probability proportional to
/// exp(-R0 sigma^2(t_I)), R0 = min R, and adds sqrt(2) Cov(., t_I) to the
/// path. The per-path weight is
///   C exp(max_i Z_i^R) / sum_i exp(sqrt(2) Y_i - (1+R0) sigma^2(t_i)),
/// C = sum_i exp(-R0 sigma^2(t_i)), which is unbiased and bounded by C for
/// R >= R0. One tilted batch serves every R in the list.
std::vector<FunctionalEstimate> estimate_functional(
    const ProcessSpec& spec, std::span<const double> R_values, double T,
    std::size_t grid_n, GridScheme scheme, std::size_t n_paths,
    std::uint64_t seed, const EstimatorOptions& options = {});

FunctionalEstimate estimate_functional(const ProcessSpec& spec, double R, double T,
                                       std::size_t grid_n, GridScheme scheme,
                                       std::size_t n_paths, std::uint64_t seed,
                                       const EstimatorOptions& options = {});

/// Per-path sup_i sqrt(2) Y(t_i) - (1+R) sigma^2(t_i) over the first
/// `prefix` grid points of an existing batch (all points when prefix is 0).
std::vector<double> path_suprema(const PathBatch& batch, double R,
                                 std::size_t prefix = 0);

/// Plain single-level estimate from an existing batch (prefix as above).
FunctionalEstimate estimate_from_batch(const PathBatch& batch, double R,
                                       std::size_t prefix = 0,
                                       double kurtosis_threshold = 50.0);

/// Richardson weights for `levels` nested levels halving dt each time, with
/// error expansion in powers of dt^exponent. Weights sum to 1.
std::vector<double> richardson_weights(int levels, double exponent);

/// E exp(sup_{[0,T]} sqrt(2) t xi - (1+R) t^2), xi ~ N(0,1), in closed form.
/// T may be +infinity when R > 0.
double exact_b2_functional(double R, double T);

struct PickandsPoint {
  double T = 0.0;
  std::size_t grid_n = 0;
  double ratio = 0.0;  // extrapolated estimate / T^(alpha/kappa)
  double std_error = 0.0;
  double raw_ratio = 0.0;  // finest level / T^(alpha/kappa)
  double raw_stderr = 0.0;
  FunctionalEstimate estimate;
};

struct PickandsCurve {
  std::vector<PickandsPoint> points;
  /// Slope of log(ratio) between the last two points.
  double last_two_slope = 0.0;
  /// Set when a point's relative stderr exceeded the cap; later T values
  /// were skipped.
  std::optional<double> capped_at;
  double exponent = 1.0;  // alpha / kappa
};

struct PickandsOptions {
  EstimatorOptions estimator{Strategy::kChangeOfMeasure, 2, 0,
                             SamplerMethod::kAuto, 50.0};
  double max_relative_stderr = 0.10;
};

/// H(T) / T^(alpha/kappa) at R = 0 for each T, using round(density * T) + 1
/// uniform grid points so the resolution is the same for every T.
PickandsCurve estimate_pickands_curve(const ProcessSpec& spec,
                                      std::span<const double> T_values,
                                      double density, std::size_t n_paths,
                                      std::uint64_t seed,
                                      const PickandsOptions& options = {});

struct ConvergenceReport {
  /// Weighted least-squares slope of log(ratio) on log(T).
  double drift = 0.0;
  double drift_stderr = 0.0;
  /// P from a fit of ratio = P + A T^-gamma over the last three points.
  double plateau = 0.0;
  double plateau_stderr = 0.0;
  double last_two_slope = 0.0;
  /// |drift| <= 2 drift_stderr: the statistical noise hides any trend.
  bool stderr_dominates = false;
};

ConvergenceReport convergence_report(std::span<const double> T_values,
                                     std::span<const double> ratios,
                                     std::span<const double> stderrs,
                                     double gamma = 1.0);
ConvergenceReport convergence_report(const PickandsCurve& curve);

}  // namespace selfsim
