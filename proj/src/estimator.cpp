#include "selfsim/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/LU>
#include <fmt/format.h>

#include "selfsim/errors.hpp"
#include "selfsim/parallel.hpp"
#include "selfsim/philox.hpp"

namespace selfsim {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

double log_sum_exp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

struct Moments {
  double mean = 0.0;  // of exp(log term - shift)
  double variance = 0.0;
  double fourth = 0.0;
};

// Mean and variance of sum_l weights[l] exp(log_terms[p * stride + offset + l])
// over paths p, computed relative to exp(shift).
Moments scaled_moments(const std::vector<double>& log_terms, std::size_t n_paths,
                       std::size_t stride, std::size_t offset,
                       std::span<const double> weights, double shift) {
  std::vector<double> x(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) {
    double acc = 0.0;
    for (std::size_t l = 0; l < weights.size(); ++l)
      acc += weights[l] * std::exp(log_terms[p * stride + offset + l] - shift);
    x[p] = acc;
  }
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(n_paths);
  for (double v : x) {
    const double d = v - m.mean;
    m.variance += d * d;
    m.fourth += d * d * d * d;
  }
  m.fourth /= static_cast<double>(n_paths);
  m.variance = n_paths > 1 ? m.variance / static_cast<double>(n_paths - 1) : 0.0;
  return m;
}

void check_R(std::span<const double> R_values) {
  if (R_values.empty()) throw ParameterError("at least one R value is required");
  for (double R : R_values)
    if (!(R >= 0.0) || !std::isfinite(R))
      throw ParameterError(fmt::format("R must be finite and >= 0 (got {})", R));
}

// Reduces log terms laid out as [path][R index][level] into estimates.
std::vector<FunctionalEstimate> reduce(const std::vector<double>& log_terms,
                                       std::size_t n_paths,
                                       std::span<const double> R_values,
                                       std::span<const std::size_t> level_sizes,
                                       std::span<const double> weights,
                                       double kurtosis_threshold) {
  const std::size_t L = level_sizes.size();
  const std::size_t stride = R_values.size() * L;
  const double n = static_cast<double>(n_paths);
  std::vector<FunctionalEstimate> out;
  for (std::size_t k = 0; k < R_values.size(); ++k) {
    FunctionalEstimate est;
    est.n_paths = n_paths;
    est.R = R_values[k];
    est.grid_n = level_sizes.front();

    double global_shift = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < L; ++l) {
      double shift = -std::numeric_limits<double>::infinity();
      for (std::size_t p = 0; p < n_paths; ++p)
        shift = std::max(shift, log_terms[p * stride + k * L + l]);
      global_shift = std::max(global_shift, shift);
      std::vector<double> unit(L, 0.0);
      unit[l] = 1.0;
      const Moments m = scaled_moments(log_terms, n_paths, stride, k * L, unit, shift);
      LevelEstimate level;
      level.grid_n = level_sizes[l];
      level.log_mean = shift + std::log(m.mean);
      level.value = std::exp(level.log_mean);
      level.std_error = std::exp(shift) * std::sqrt(m.variance / n);
      est.levels.push_back(level);
      if (l + 1 == L) {
        est.kurtosis = m.variance > 0.0 ? m.fourth / (m.variance * m.variance) : 0.0;
        est.heavy_tail = est.kurtosis > kurtosis_threshold;
      }
    }
    const LevelEstimate& finest = est.levels.back();
    est.value = finest.value;
    est.std_error = finest.std_error;
    est.log_mean = finest.log_mean;
    if (L == 1) {
      est.extrapolated = est.value;
      est.extrapolated_stderr = est.std_error;
    } else {
      const Moments m =
          scaled_moments(log_terms, n_paths, stride, k * L, weights, global_shift);
      est.extrapolated = std::exp(global_shift) * m.mean;
      est.extrapolated_stderr = std::exp(global_shift) * std::sqrt(m.variance / n);
    }
    out.push_back(std::move(est));
  }
  return out;
}

}  // namespace

std::string_view strategy_name(Strategy strategy) {
  return strategy == Strategy::kPlain ? "plain" : "change-of-measure";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "plain") return Strategy::kPlain;
  if (name == "change-of-measure" || name == "com") return Strategy::kChangeOfMeasure;
  throw ParameterError(fmt::format("unknown estimator strategy '{}'", name));
}

std::vector<double> richardson_weights(int levels, double exponent) {
  if (levels < 1) throw ParameterError("richardson_weights: levels must be >= 1");
  if (!(exponent > 0.0)) throw ParameterError("richardson_weights: exponent must be > 0");
  const auto L = static_cast<Eigen::Index>(levels);
  Eigen::MatrixXd vander(L, L);
  for (Eigen::Index j = 0; j < L; ++j)
    for (Eigen::Index l = 0; l < L; ++l)
      vander(j, l) = std::pow(2.0, -static_cast<double>(l * j) * exponent);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(L);
  rhs(0) = 1.0;
  const Eigen::VectorXd w = vander.fullPivLu().solve(rhs);
  return {w.data(), w.data() + w.size()};
}

std::vector<FunctionalEstimate> estimate_functional(
    const ProcessSpec& spec, std::span<const double> R_values, double T,
    std::size_t grid_n, GridScheme scheme, std::size_t n_paths, std::uint64_t seed,
    const EstimatorOptions& options) {
  check_R(R_values);
  if (n_paths < 1) throw ParameterError("n_paths must be at least 1");
  if (options.levels < 1 || options.levels > 8)
    throw ParameterError("levels must lie in 1..8");

  const Grid coarse = build_grid(T, grid_n, scheme);
  const Grid fine = refine_grid(coarse, options.levels - 1);
  const PathSampler sampler(spec, fine, options.method);

  const std::size_t L = static_cast<std::size_t>(options.levels);
  const std::size_t K = R_values.size();
  const std::size_t nf = fine.size();
  std::vector<std::size_t> level_sizes(L), level_strides(L);
  for (std::size_t l = 0; l < L; ++l) {
    level_strides[l] = std::size_t{1} << (L - 1 - l);
    level_sizes[l] = (nf - 1) / level_strides[l] + 1;
  }

  std::vector<double> drift(nf);
  for (std::size_t i = 0; i < nf; ++i) drift[i] = variance(spec, fine.points[i]);

  const bool tilted = options.strategy == Strategy::kChangeOfMeasure;
  const double R0 = *std::min_element(R_values.begin(), R_values.end());
  const Eigen::MatrixXd* law = nullptr;
  std::vector<double> law_var(nf), cdf(nf);
  double log_c = 0.0;
  if (tilted) {
    law = &sampler.law_covariance();
    std::vector<double> log_q(nf);
    for (std::size_t i = 0; i < nf; ++i) {
      law_var[i] = (*law)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
      log_q[i] = -R0 * law_var[i];
    }
    log_c = log_sum_exp(log_q);
    double acc = 0.0;
    for (std::size_t i = 0; i < nf; ++i) {
      acc += std::exp(log_q[i] - log_c);
      cdf[i] = acc;
    }
  }

  const std::size_t stride = K * L;
  std::vector<double> log_terms(n_paths * stride);
  const std::size_t chunks = (n_paths + PathSampler::kChunk - 1) / PathSampler::kChunk;

  parallel_for(chunks, options.threads, [&](std::size_t c) {
    RowMatrix block;
    sampler.sample_chunk(seed, c, block);
    std::vector<double> y(nf), exponent(nf);
    for (std::size_t r = 0; r < PathSampler::kChunk; ++r) {
      const std::size_t p = c * PathSampler::kChunk + r;
      if (p >= n_paths) break;
      for (std::size_t i = 0; i < nf; ++i)
        y[i] = block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
      double log_den = 0.0;
      if (tilted) {
        NormalStream tilt(seed, p, Stream::kTiltIndex);
        const double u = tilt.uniform() * cdf.back();
        const auto I = static_cast<Eigen::Index>(std::min<std::size_t>(
            static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) -
                                     cdf.begin()),
            nf - 1));
        for (std::size_t i = 0; i < nf; ++i)
          y[i] += kSqrt2 * (*law)(static_cast<Eigen::Index>(i), I);
        for (std::size_t i = 0; i < nf; ++i)
          exponent[i] = kSqrt2 * y[i] - (1.0 + R0) * law_var[i];
        log_den = log_sum_exp(exponent);
      }
      for (std::size_t k = 0; k < K; ++k) {
        const double R = R_values[k];
        for (std::size_t l = 0; l < L; ++l) {
          double sup = -std::numeric_limits<double>::infinity();
          for (std::size_t i = 0; i < nf; i += level_strides[l])
            sup = std::max(sup, kSqrt2 * y[i] - (1.0 + R) * drift[i]);
          log_terms[p * stride + k * L + l] = tilted ? log_c + sup - log_den : sup;
        }
      }
    }
  });

  const SSTriple triple = ss_parameters(spec);
  const std::vector<double> weights = richardson_weights(options.levels, triple.kappa / 2.0);
  auto out = reduce(log_terms, n_paths, R_values, level_sizes, weights,
                    options.kurtosis_threshold);
  for (auto& est : out) {
    est.T = T;
    est.strategy = options.strategy;
  }
  return out;
}

FunctionalEstimate estimate_functional(const ProcessSpec& spec, double R, double T,
                                       std::size_t grid_n, GridScheme scheme,
                                       std::size_t n_paths, std::uint64_t seed,
                                       const EstimatorOptions& options) {
  const double Rs[] = {R};
  return estimate_functional(spec, Rs, T, grid_n, scheme, n_paths, seed, options)
      .front();
}

std::vector<double> path_suprema(const PathBatch& batch, double R, std::size_t prefix) {
  const double Rs[] = {R};
  check_R(Rs);
  const std::size_t n = prefix == 0 ? batch.grid.size() : prefix;
  if (n > batch.grid.size()) throw ParameterError("path_suprema: prefix exceeds grid size");
  std::vector<double> drift(n);
  for (std::size_t i = 0; i < n; ++i)
    drift[i] = (1.0 + R) * variance(batch.spec, batch.grid.points[i]);
  std::vector<double> sup(batch.n_paths(), -std::numeric_limits<double>::infinity());
  for (std::size_t p = 0; p < batch.n_paths(); ++p)
    for (std::size_t i = 0; i < n; ++i)
      sup[p] = std::max(sup[p], kSqrt2 * batch.values(static_cast<Eigen::Index>(p),
                                                      static_cast<Eigen::Index>(i)) -
                                    drift[i]);
  return sup;
}

FunctionalEstimate estimate_from_batch(const PathBatch& batch, double R,
                                       std::size_t prefix, double kurtosis_threshold) {
  if (batch.n_paths() < 1) throw ParameterError("estimate_from_batch: empty batch");
  const std::vector<double> sup = path_suprema(batch, R, prefix);
  const double Rs[] = {R};
  const std::size_t sizes[] = {prefix == 0 ? batch.grid.size() : prefix};
  const double weights[] = {1.0};
  auto est = reduce(sup, sup.size(), Rs, sizes, weights, kurtosis_threshold).front();
  est.T = batch.grid.points[sizes[0] - 1];
  return est;
}

double exact_b2_functional(double R, double T) {
  if (!(R >= 0.0) || !std::isfinite(R))
    throw ParameterError("exact_b2_functional: R must be finite and >= 0");
  if (!(T >= 0.0)) throw ParameterError("exact_b2_functional: T must be >= 0");
  if (R == 0.0) {
    if (std::isinf(T))
      throw ParameterError("exact_b2_functional: diverges for R = 0 and T = infinity");
    return 1.0 + T / std::sqrt(std::numbers::pi);
  }
  // xi <= 0: sup 0. 0 < xi <= xi*: interior maximum xi^2 / (2(1+R)).
  // xi > xi*: maximum at T.
  const double s = std::sqrt((1.0 + R) / R);
  if (std::isinf(T)) return 0.5 * (1.0 + s);
  const double xi_star = kSqrt2 * (1.0 + R) * T;
  const double interior = 0.5 * s * std::erf(xi_star / (s * kSqrt2));
  const double boundary = std::exp(-R * T * T) * 0.5 * std::erfc(R * T);
  return 0.5 + interior + boundary;
}

PickandsCurve estimate_pickands_curve(const ProcessSpec& spec,
                                      std::span<const double> T_values, double density,
                                      std::size_t n_paths, std::uint64_t seed,
                                      const PickandsOptions& options) {
  if (T_values.empty()) throw ParameterError("pickands curve needs at least one T");
  if (!(density > 0.0)) throw ParameterError("grid density must be positive");
  for (std::size_t i = 1; i < T_values.size(); ++i)
    if (!(T_values[i] > T_values[i - 1]))
      throw ParameterError("T values must be strictly increasing");

  const SSTriple triple = ss_parameters(spec);
  PickandsCurve curve;
  curve.exponent = triple.alpha / triple.kappa;
  for (double T : T_values) {
    const auto n = static_cast<std::size_t>(std::llround(density * T)) + 1;
    PickandsPoint point;
    point.T = T;
    point.grid_n = std::max<std::size_t>(n, 2);
    point.estimate = estimate_functional(spec, 0.0, T, point.grid_n, GridScheme::kUniform,
                                         n_paths, seed, options.estimator);
    const double scale = std::pow(T, curve.exponent);
    point.ratio = point.estimate.extrapolated / scale;
    point.std_error = point.estimate.extrapolated_stderr / scale;
    point.raw_ratio = point.estimate.value / scale;
    point.raw_stderr = point.estimate.std_error / scale;
    curve.points.push_back(point);
    if (point.std_error > options.max_relative_stderr * std::abs(point.ratio)) {
      curve.capped_at = T;
      break;
    }
  }
  const auto& pts = curve.points;
  if (pts.size() >= 2) {
    const auto& a = pts[pts.size() - 2];
    const auto& b = pts.back();
    curve.last_two_slope =
        std::log(b.ratio / a.ratio) / std::log(b.T / a.T);
  }
  return curve;
}

ConvergenceReport convergence_report(std::span<const double> T_values,
                                     std::span<const double> ratios,
                                     std::span<const double> stderrs, double gamma) {
  const std::size_t n = T_values.size();
  if (n < 3) throw ParameterError("convergence report needs at least 3 T values");
  if (ratios.size() != n || stderrs.size() != n)
    throw ParameterError("convergence report: mismatched input lengths");
  if (!(gamma > 0.0)) throw ParameterError("convergence report: gamma must be > 0");
  bool weighted = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(T_values[i] > 0.0) || !(ratios[i] > 0.0))
      throw ParameterError("convergence report: T and ratios must be positive");
    if (!(stderrs[i] > 0.0)) weighted = false;
  }

  ConvergenceReport rep;
  {
    double sw = 0, sx = 0, sy = 0;
    std::vector<double> x(n), y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = std::log(T_values[i]);
      y[i] = std::log(ratios[i]);
      const double rel = stderrs[i] / ratios[i];
      w[i] = weighted ? 1.0 / (rel * rel) : 1.0;
      sw += w[i];
      sx += w[i] * x[i];
      sy += w[i] * y[i];
    }
    const double xm = sx / sw, ym = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxx += w[i] * (x[i] - xm) * (x[i] - xm);
      sxy += w[i] * (x[i] - xm) * (y[i] - ym);
    }
    rep.drift = sxy / sxx;
    rep.drift_stderr = weighted ? std::sqrt(1.0 / sxx) : 0.0;
  }
  {
    double sw = 0, sz = 0, szz = 0, sr = 0, szr = 0;
    for (std::size_t i = n - 3; i < n; ++i) {
      const double z = std::pow(T_values[i], -gamma);
      const double w = weighted ? 1.0 / (stderrs[i] * stderrs[i]) : 1.0;
      sw += w;
      sz += w * z;
      szz += w * z * z;
      sr += w * ratios[i];
      szr += w * z * ratios[i];
    }
    const double det = sw * szz - sz * sz;
    rep.plateau = (szz * sr - sz * szr) / det;
    rep.plateau_stderr = weighted ? std::sqrt(szz / det) : 0.0;
  }
  rep.last_two_slope = std::log(ratios[n - 1] / ratios[n - 2]) /
                       std::log(T_values[n - 1] / T_values[n - 2]);
  rep.stderr_dominates = std::abs(rep.drift) <= 2.0 * rep.drift_stderr;
  return rep;
}

ConvergenceReport convergence_report(const PickandsCurve& curve) {
  std::vector<double> T, r, s;
  for (const auto& p : curve.points) {
    T.push_back(p.T);
    r.push_back(p.ratio);
    s.push_back(p.std_error);
  }
  return convergence_report(T, r, s, curve.exponent);
}

}  // namespace selfsim
