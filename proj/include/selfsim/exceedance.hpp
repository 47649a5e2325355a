#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "selfsim/estimator.hpp"
#include "selfsim/grid.hpp"
#include "selfsim/normal.hpp"
#include "selfsim/process.hpp"
#include "selfsim/sampler.hpp"

namespace selfsim {

/// X with sigma_X(t) = 1 / (1 + b t^beta) and correlation exp(-a V_Y(t, s)).
struct ExceedanceSpec {
  ProcessSpec base;
  double a = 1.0;
  double b = 0.0;
  double beta = 1.0;

  /// Throws ParameterError unless a > 0, b >= 0, beta > 0 and alpha <= beta.
  void validate() const;
  /// true when alpha == beta (the drift enters the limit through R = b/a).
  bool matched_case() const;
  std::string_view case_label() const;
  double sigma(double t) const;
};

/// sigma_X(t_i) sigma_X(t_j) exp(-a V_Y(t_i, t_j)), t = 0 included.
Eigen::MatrixXd assemble_exceedance_covariance(const ExceedanceSpec& espec,
                                               const Grid& grid);

/// grid_n uniform points on [0, T u^(-2/alpha)]: the reference grid on
/// [0, a^(1/alpha) T] mapped back through t -> a^(-1/alpha) u^(-2/alpha) t.
Grid exceedance_grid(const ExceedanceSpec& espec, double T, double u, std::size_t grid_n);

/// X paths on `grid`, one row per path, keyed by (seed, path index).
RowMatrix sample_exceedance_paths(const ExceedanceSpec& espec, const Grid& grid,
                                  std::size_t n_paths, std::uint64_t seed,
                                  int threads = 0);

/// Number of rows whose maximum exceeds u.
std::size_t count_exceedances(const RowMatrix& paths, double u);

struct ExceedanceBudget {
  /// Paths per u; 0 sizes the run from the pilot batch.
  std::size_t n_paths = 0;
  std::size_t pilot_paths = 20000;
  double min_expected_hits = 100.0;
  std::size_t max_paths = 10'000'000;
  /// Relative binomial stderr aimed for when n_paths is 0.
  double target_relative_stderr = 0.03;
};

struct ExceedanceEstimate {
  double u = 0.0;
  double p_hat = 0.0;
  double std_error = 0.0;
  std::size_t hits = 0;
  std::size_t n_paths = 0;
  std::size_t pilot_hits = 0;
  double window = 0.0;
  std::size_t grid_n = 0;
  double jitter = 0.0;
};

/// P(max_i X(t_i) > u) on exceedance_grid(espec, T, u, grid_n). The first
/// pilot_paths paths estimate p; if the budget cannot give the required
/// expected number of hits, BudgetError reports the paths needed.
ExceedanceEstimate estimate_exceedance(const ExceedanceSpec& espec, double u, double T,
                                       std::size_t grid_n, const ExceedanceBudget& budget,
                                       std::uint64_t seed, int threads = 0);

struct RatioSeries {
  std::vector<double> u_values;
  std::vector<ExceedanceEstimate> estimates;
  std::vector<double> psi_values;
  std::vector<double> ratios;
  std::vector<double> ratio_stderrs;
  /// H_Y^{b/a}(a^(1/alpha) T) (matched case) or H_Y(a^(1/alpha) T), single
  /// level on the same grid as every exceedance window.
  double reference = 0.0;
  double reference_stderr = 0.0;
  double reference_R = 0.0;
  double reference_T = 0.0;
};

FunctionalEstimate exceedance_reference(const ExceedanceSpec& espec, double T,
                                        std::size_t grid_n, std::size_t n_paths,
                                        std::uint64_t seed, int threads = 0);

RatioSeries ratio_series(const ExceedanceSpec& espec, double T,
                         std::span<const double> u_values, std::size_t grid_n,
                         const ExceedanceBudget& budget, std::size_t reference_paths,
                         std::uint64_t seed, int threads = 0);

}  // namespace selfsim
