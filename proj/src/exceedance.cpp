#include "selfsim/exceedance.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "selfsim/errors.hpp"
#include "selfsim/parallel.hpp"
#include "selfsim/philox.hpp"

namespace selfsim {
namespace {

double base_alpha(const ExceedanceSpec& espec) { return ss_parameters(espec.base).alpha; }

struct ExceedanceFactor {
  Eigen::MatrixXd lower;  // D L with L the factor of the correlation matrix
  double jitter = 0.0;
};

ExceedanceFactor factor_exceedance(const ExceedanceSpec& espec, const Grid& grid) {
  const Eigen::MatrixXd cov = assemble_exceedance_covariance(espec, grid);
  const Eigen::VectorXd scales = cov.diagonal().array().sqrt();
  const Eigen::MatrixXd corr =
      scales.asDiagonal().inverse() * cov * scales.asDiagonal().inverse();
  CholeskyFactor f = factorize(
      corr, {}, fmt::format("exceedance kernel of {} on {} points", espec.base.label(),
                            grid.size()));
  return {scales.asDiagonal() * f.lower, f.jitter};
}

// Hit flags for paths [first, first + count) written into hits[first...].
void hit_flags(const ExceedanceFactor& factor, double u, std::uint64_t seed,
               std::size_t first, std::size_t count, int threads,
               std::vector<unsigned char>& hits) {
  const auto n = factor.lower.rows();
  const std::size_t chunk = PathSampler::kChunk;
  const std::size_t c0 = first / chunk;
  const std::size_t c1 = (first + count + chunk - 1) / chunk;
  parallel_for(c1 - c0, threads, [&](std::size_t offset) {
    const std::size_t c = c0 + offset;
    Eigen::MatrixXd z(n, static_cast<Eigen::Index>(chunk));
    for (std::size_t r = 0; r < chunk; ++r) {
      NormalStream stream(seed, c * chunk + r);
      for (Eigen::Index i = 0; i < n; ++i) z(i, static_cast<Eigen::Index>(r)) = stream.normal();
    }
    const Eigen::MatrixXd x = factor.lower.triangularView<Eigen::Lower>() * z;
    for (std::size_t r = 0; r < chunk; ++r) {
      const std::size_t p = c * chunk + r;
      if (p < first || p >= first + count) continue;
      hits[p] = x.col(static_cast<Eigen::Index>(r)).maxCoeff() > u ? 1 : 0;
    }
  });
}

}  // namespace

void ExceedanceSpec::validate() const {
  if (!(a > 0.0) || !std::isfinite(a)) throw ParameterError("exceedance: a must be > 0");
  if (!(b >= 0.0) || !std::isfinite(b)) throw ParameterError("exceedance: b must be >= 0");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw ParameterError("exceedance: beta must be > 0");
  const double alpha = ss_parameters(base).alpha;
  if (alpha > beta + 1e-12)
    throw ParameterError(fmt::format(
        "exceedance: alpha = {} exceeds beta = {}; only alpha <= beta is covered", alpha,
        beta));
}

bool ExceedanceSpec::matched_case() const {
  return std::abs(ss_parameters(base).alpha - beta) <= 1e-12;
}

std::string_view ExceedanceSpec::case_label() const {
  return matched_case() ? "alpha=beta" : "alpha<beta";
}

double ExceedanceSpec::sigma(double t) const { return 1.0 / (1.0 + b * std::pow(t, beta)); }

Eigen::MatrixXd assemble_exceedance_covariance(const ExceedanceSpec& espec,
                                               const Grid& grid) {
  espec.validate();
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double si = espec.sigma(grid.points[i]);
    m(i, i) = si * si;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v =
          si * espec.sigma(grid.points[j]) *
          std::exp(-espec.a * variogram(espec.base, grid.points[i], grid.points[j]));
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

Grid exceedance_grid(const ExceedanceSpec& espec, double T, double u, std::size_t grid_n) {
  espec.validate();
  if (!(u > 0.0)) throw ParameterError("exceedance: u must be > 0");
  const double alpha = base_alpha(espec);
  const double ref_T = std::pow(espec.a, 1.0 / alpha) * T;
  const Grid ref = build_grid(ref_T, grid_n);
  return scale_grid(ref, std::pow(espec.a, -1.0 / alpha) * std::pow(u, -2.0 / alpha));
}

RowMatrix sample_exceedance_paths(const ExceedanceSpec& espec, const Grid& grid,
                                  std::size_t n_paths, std::uint64_t seed, int threads) {
  const ExceedanceFactor factor = factor_exceedance(espec, grid);
  const auto n = factor.lower.rows();
  RowMatrix out(static_cast<Eigen::Index>(n_paths), n);
  const std::size_t chunk = PathSampler::kChunk;
  parallel_for((n_paths + chunk - 1) / chunk, threads, [&](std::size_t c) {
    Eigen::MatrixXd z(n, static_cast<Eigen::Index>(chunk));
    for (std::size_t r = 0; r < chunk; ++r) {
      NormalStream stream(seed, c * chunk + r);
      for (Eigen::Index i = 0; i < n; ++i) z(i, static_cast<Eigen::Index>(r)) = stream.normal();
    }
    const Eigen::MatrixXd x = factor.lower.triangularView<Eigen::Lower>() * z;
    for (std::size_t r = 0; r < chunk && c * chunk + r < n_paths; ++r)
      out.row(static_cast<Eigen::Index>(c * chunk + r)) =
          x.col(static_cast<Eigen::Index>(r)).transpose();
  });
  return out;
}

std::size_t count_exceedances(const RowMatrix& paths, double u) {
  std::size_t hits = 0;
  for (Eigen::Index r = 0; r < paths.rows(); ++r)
    if (paths.row(r).maxCoeff() > u) ++hits;
  return hits;
}

ExceedanceEstimate estimate_exceedance(const ExceedanceSpec& espec, double u, double T,
                                       std::size_t grid_n, const ExceedanceBudget& budget,
                                       std::uint64_t seed, int threads) {
  if (!(T > 0.0)) throw ParameterError("exceedance: T must be > 0");
  if (budget.pilot_paths < 1) throw ParameterError("exceedance: pilot_paths must be >= 1");
  const Grid grid = exceedance_grid(espec, T, u, grid_n);
  const ExceedanceFactor factor = factor_exceedance(espec, grid);

  ExceedanceEstimate est;
  est.u = u;
  est.window = grid.horizon;
  est.grid_n = grid.size();
  est.jitter = factor.jitter;

  const std::size_t pilot = budget.n_paths > 0 ? std::min(budget.pilot_paths, budget.n_paths)
                                               : budget.pilot_paths;
  std::vector<unsigned char> hits(pilot);
  hit_flags(factor, u, seed, 0, pilot, threads, hits);
  est.pilot_hits = static_cast<std::size_t>(std::count(hits.begin(), hits.end(), 1));
  const double p_guess =
      std::max(static_cast<double>(est.pilot_hits), 0.5) / static_cast<double>(pilot);

  std::size_t n_paths = budget.n_paths;
  const double needed_for_hits = budget.min_expected_hits / p_guess;
  if (n_paths == 0) {
    const double rel = budget.target_relative_stderr;
    const double needed = std::max(needed_for_hits, (1.0 - p_guess) / (p_guess * rel * rel));
    if (needed > static_cast<double>(budget.max_paths))
      throw BudgetError(fmt::format("exceedance at u = {}: about {:.3g} paths needed, "
                                    "above the cap of {}",
                                    u, needed, budget.max_paths),
                        std::ceil(needed));
    n_paths = std::max(pilot, static_cast<std::size_t>(std::ceil(needed)));
  } else if (static_cast<double>(n_paths) < needed_for_hits) {
    throw BudgetError(fmt::format("exceedance at u = {}: {} paths give about {:.3g} "
                                  "expected hits (< {}); about {:.3g} paths are needed",
                                  u, n_paths, static_cast<double>(n_paths) * p_guess,
                                  budget.min_expected_hits, needed_for_hits),
                      std::ceil(needed_for_hits));
  }

  hits.resize(n_paths, 0);
  if (n_paths > pilot) hit_flags(factor, u, seed, pilot, n_paths - pilot, threads, hits);
  est.n_paths = n_paths;
  est.hits = static_cast<std::size_t>(std::count(hits.begin(), hits.end(), 1));
  const double n = static_cast<double>(n_paths);
  est.p_hat = static_cast<double>(est.hits) / n;
  est.std_error = std::sqrt(est.p_hat * (1.0 - est.p_hat) / n);
  return est;
}

FunctionalEstimate exceedance_reference(const ExceedanceSpec& espec, double T,
                                        std::size_t grid_n, std::size_t n_paths,
                                        std::uint64_t seed, int threads) {
  espec.validate();
  const double alpha = base_alpha(espec);
  const double R = espec.matched_case() ? espec.b / espec.a : 0.0;
  const double ref_T = std::pow(espec.a, 1.0 / alpha) * T;
  EstimatorOptions options;
  options.strategy = Strategy::kChangeOfMeasure;
  options.levels = 1;
  options.threads = threads;
  return estimate_functional(espec.base, R, ref_T, grid_n, GridScheme::kUniform, n_paths,
                             seed, options);
}

RatioSeries ratio_series(const ExceedanceSpec& espec, double T,
                         std::span<const double> u_values, std::size_t grid_n,
                         const ExceedanceBudget& budget, std::size_t reference_paths,
                         std::uint64_t seed, int threads) {
  for (std::size_t i = 1; i < u_values.size(); ++i)
    if (!(u_values[i] > u_values[i - 1]))
      throw ParameterError("u values must be strictly increasing");
  RatioSeries out;
  const FunctionalEstimate ref =
      exceedance_reference(espec, T, grid_n, reference_paths, seed, threads);
  out.reference = ref.value;
  out.reference_stderr = ref.std_error;
  out.reference_R = ref.R;
  out.reference_T = ref.T;
  for (double u : u_values) {
    const ExceedanceEstimate est = estimate_exceedance(espec, u, T, grid_n, budget, seed, threads);
    const double psi = normal_tail(u);
    out.u_values.push_back(u);
    out.estimates.push_back(est);
    out.psi_values.push_back(psi);
    out.ratios.push_back(est.p_hat / psi);
    out.ratio_stderrs.push_back(est.std_error / psi);
    spdlog::debug("exceedance u={} p={} +- {} ratio={}", u, est.p_hat, est.std_error,
                  est.p_hat / psi);
  }
  return out;
}

}  // namespace selfsim
