#include "selfsim/process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "selfsim/errors.hpp"

namespace selfsim {
namespace {

constexpr double kRankOneTol = 1e-14;

thread_local double g_clamp_magnitude = 0.0;

void require(bool ok, const std::string& message) {
  if (!ok) throw ParameterError(message);
}

bool in_open(double x, double lo, double hi) { return x > lo && x < hi; }
bool in_half_open(double x, double lo, double hi) { return x > lo && x <= hi; }

double fbm_cov(double alpha, double s, double t) {
  return 0.5 * (std::pow(t, alpha) + std::pow(s, alpha) -
                std::pow(std::abs(t - s), alpha));
}

// Iterated integral I_t^k I_s^k of the fBm kernel, scaled by prod_j c_j^2.
// With p = alpha + 2k the mixed antiderivative of |u - v|^alpha is
//   G(t, s) = (-1)^k |t - s|^p / prod_{j=1}^{2k} (alpha + j),
// and subtracting its Taylor polynomials at t = 0 and s = 0 gives the unique
// antiderivative vanishing with its first k - 1 derivatives on both axes.
double integrated_cov(double alpha, int k, double s, double t) {
  const double p = alpha + 2.0 * k;

  double rising_k = 1.0;  // (alpha+1)...(alpha+k)
  for (int j = 1; j <= k; ++j) rising_k *= alpha + j;
  double rising_2k = rising_k;  // (alpha+1)...(alpha+2k)
  for (int j = k + 1; j <= 2 * k; ++j) rising_2k *= alpha + j;
  double k_factorial = 1.0;
  for (int j = 2; j <= k; ++j) k_factorial *= j;

  // I^k applied to u^alpha and to the constant 1.
  const double power_t = std::pow(t, alpha + k) / rising_k;
  const double power_s = std::pow(s, alpha + k) / rising_k;
  const double const_t = std::pow(t, k) / k_factorial;
  const double const_s = std::pow(s, k) / k_factorial;
  const double smooth_part = power_t * const_s + power_s * const_t;

  double taylor = 0.0;
  double binom = 1.0;  // binom(p, i)
  for (int i = 0; i < k; ++i) {
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    taylor += sign * binom *
              (std::pow(t, i) * std::pow(s, p - i) +
               std::pow(s, i) * std::pow(t, p - i));
    binom *= (p - i) / (i + 1.0);
  }
  const double k_sign = (k % 2 == 0) ? 1.0 : -1.0;
  const double rough_part =
      k_sign * (std::pow(std::abs(t - s), p) - taylor) / rising_2k;

  double norm2 = 1.0;
  for (int j = 1; j <= k; ++j) {
    const double c = integration_constant(alpha, j);
    norm2 *= c * c;
  }
  return norm2 * 0.5 * (smooth_part - rough_part);
}

double base_covariance(const ProcessSpec& spec, double s, double t) {
  if (s == 0.0 || t == 0.0) return 0.0;
  const double a = spec.alpha_param();
  switch (spec.family()) {
    case Family::kFbm:
      return fbm_cov(a, s, t);
    case Family::kBifractional: {
      const double K = spec.K();
      return (std::pow(std::pow(t, a) + std::pow(s, a), K) -
              std::pow(std::abs(t - s), a * K)) /
             std::pow(2.0, K);
    }
    case Family::kSubfractional:
      return (std::pow(t, a) + std::pow(s, a) -
              0.5 * (std::pow(t + s, a) + std::pow(std::abs(t - s), a))) /
             (2.0 - std::pow(2.0, a - 1.0));
    case Family::kIntegratedFbm:
      return integrated_cov(a, spec.k(), s, t);
    case Family::kTimeAverageFbm:
      return ((a + 2.0) * (std::pow(s, a + 1.0) * t + s * std::pow(t, a + 1.0)) +
              std::pow(std::abs(t - s), a + 2.0) - std::pow(t, a + 2.0) -
              std::pow(s, a + 2.0)) /
             (2.0 * (a + 1.0) * t * s);
    case Family::kDualFbm:
      return (std::pow(t, a) * s + std::pow(s, a) * t) / (t + s);
  }
  return 0.0;
}

double base_alpha(const ProcessSpec& spec) {
  const double a = spec.alpha_param();
  switch (spec.family()) {
    case Family::kBifractional:
      return a * spec.K();
    case Family::kIntegratedFbm:
      return a + 2.0 * spec.k();
    default:
      return a;
  }
}

double time_map(const ProcessSpec& spec, double t) {
  return spec.time_exponent() == 1.0 ? t : std::pow(t, spec.time_exponent());
}

}  // namespace

std::string_view family_name(Family family) {
  switch (family) {
    case Family::kFbm:
      return "fbm";
    case Family::kBifractional:
      return "bifractional";
    case Family::kSubfractional:
      return "sub-fractional";
    case Family::kIntegratedFbm:
      return "integrated";
    case Family::kTimeAverageFbm:
      return "time-average";
    case Family::kDualFbm:
      return "dual";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  std::string n(name);
  std::transform(n.begin(), n.end(), n.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::replace(n.begin(), n.end(), '_', '-');
  if (n == "fbm") return Family::kFbm;
  if (n == "bifractional" || n == "bfbm") return Family::kBifractional;
  if (n == "sub-fractional" || n == "subfractional" || n == "sfbm")
    return Family::kSubfractional;
  if (n == "integrated" || n == "integrated-fbm" || n == "kfold")
    return Family::kIntegratedFbm;
  if (n == "time-average" || n == "time-average-fbm" || n == "timeaverage")
    return Family::kTimeAverageFbm;
  if (n == "dual" || n == "dual-fbm") return Family::kDualFbm;
  throw ParameterError(fmt::format("unknown process family '{}'", name));
}

ProcessSpec::ProcessSpec(Family family, double alpha_param, double K, int k)
    : family_(family), alpha_param_(alpha_param) {
  require(std::isfinite(alpha_param), "alpha must be finite");
  switch (family) {
    case Family::kFbm:
    case Family::kTimeAverageFbm:
    case Family::kDualFbm:
      require(in_half_open(alpha_param, 0.0, 2.0),
              fmt::format("{}: alpha must lie in (0, 2], got {}",
                          family_name(family), alpha_param));
      break;
    case Family::kSubfractional:
      require(in_open(alpha_param, 0.0, 2.0),
              fmt::format("sub-fractional: alpha must lie in (0, 2), got {}",
                          alpha_param));
      break;
    case Family::kBifractional:
      require(in_open(alpha_param, 0.0, 2.0),
              fmt::format("bifractional: alpha must lie in (0, 2), got {}",
                          alpha_param));
      require(in_half_open(K, 0.0, 1.0),
              fmt::format("bifractional: K must lie in (0, 1], got {}", K));
      K_ = K;
      break;
    case Family::kIntegratedFbm:
      require(in_half_open(alpha_param, 0.0, 2.0),
              fmt::format("integrated: alpha must lie in (0, 2], got {}",
                          alpha_param));
      // The closed-form kernel loses accuracy to cancellation beyond this.
      require(k >= 1 && k <= 6,
              fmt::format("integrated: k must lie in 1..6, got {}", k));
      k_ = k;
      break;
  }
}

ProcessSpec ProcessSpec::fbm(double alpha) { return {Family::kFbm, alpha}; }
ProcessSpec ProcessSpec::bifractional(double alpha, double K) {
  return {Family::kBifractional, alpha, K};
}
ProcessSpec ProcessSpec::subfractional(double alpha) {
  return {Family::kSubfractional, alpha};
}
ProcessSpec ProcessSpec::integrated_fbm(double alpha, int k) {
  return {Family::kIntegratedFbm, alpha, 1.0, k};
}
ProcessSpec ProcessSpec::time_average_fbm(double alpha) {
  return {Family::kTimeAverageFbm, alpha};
}
ProcessSpec ProcessSpec::dual_fbm(double alpha) {
  return {Family::kDualFbm, alpha};
}

ProcessSpec ProcessSpec::scaled(double c) const {
  require(std::isfinite(c) && c > 0.0, "amplitude must be positive");
  ProcessSpec out = *this;
  out.amplitude_ *= c;
  return out;
}

ProcessSpec ProcessSpec::time_changed(double a1) const {
  require(std::isfinite(a1) && a1 > 0.0, "time exponent must be positive");
  ProcessSpec out = *this;
  out.time_exponent_ *= a1;
  return out;
}

ProcessSpec ProcessSpec::base() const {
  ProcessSpec out = *this;
  out.amplitude_ = 1.0;
  out.time_exponent_ = 1.0;
  return out;
}

std::string ProcessSpec::label() const {
  std::string s;
  switch (family_) {
    case Family::kBifractional:
      s = fmt::format("bifractional(alpha={},K={})", alpha_param_, K_);
      break;
    case Family::kIntegratedFbm:
      s = fmt::format("integrated(alpha={},k={})", alpha_param_, k_);
      break;
    default:
      s = fmt::format("{}(alpha={})", family_name(family_), alpha_param_);
  }
  if (amplitude_ != 1.0) s = fmt::format("{}*{}", amplitude_, s);
  if (time_exponent_ != 1.0) s += fmt::format("[t^{}]", time_exponent_);
  return s;
}

double integration_constant(double alpha, int j) {
  return std::sqrt(j * (alpha + 2.0 * j) * (alpha + j - 1.0) /
                   (alpha + 2.0 * j - 2.0));
}

SSTriple ss_parameters(const ProcessSpec& spec) {
  const double a = spec.alpha_param();
  SSTriple triple;
  switch (spec.family()) {
    case Family::kFbm:
      triple = {a, a, 1.0};
      break;
    case Family::kBifractional:
      triple = {a * spec.K(), a * spec.K(), std::pow(2.0, 1.0 - spec.K())};
      break;
    case Family::kSubfractional:
      triple = {a, a, 1.0 / (2.0 - std::pow(2.0, a - 1.0))};
      break;
    case Family::kIntegratedFbm: {
      const double k = spec.k();
      triple = {a + 2.0 * k, 2.0,
                k * (a + 2.0 * k) * (a + k - 1.0) / (a + 2.0 * k - 2.0)};
      break;
    }
    case Family::kTimeAverageFbm:
      triple = {a, 2.0, 1.0};
      break;
    case Family::kDualFbm:
      triple = {a, 2.0, a / 2.0};
      break;
  }
  if (spec.is_transformed()) {
    const double a1 = spec.time_exponent();
    triple.alpha *= a1;
    triple.c_y *= spec.amplitude() * spec.amplitude() *
                  std::pow(a1, triple.kappa);
  }
  return triple;
}

double variance(const ProcessSpec& spec, double t) {
  if (!(t >= 0.0)) throw ParameterError("variance: t must be >= 0");
  const double amp2 = spec.amplitude() * spec.amplitude();
  return amp2 * std::pow(time_map(spec, t), base_alpha(spec));
}

double covariance(const ProcessSpec& spec, double s, double t) {
  if (!(s >= 0.0 && t >= 0.0))
    throw ParameterError("covariance: s and t must be >= 0");
  const double amp2 = spec.amplitude() * spec.amplitude();
  return amp2 * base_covariance(spec, time_map(spec, s), time_map(spec, t));
}

double variogram(const ProcessSpec& spec, double s, double t) {
  if (!(s >= 0.0 && t >= 0.0))
    throw ParameterError("variogram: s and t must be >= 0");
  if (s == t) return 0.0;
  const double amp2 = spec.amplitude() * spec.amplitude();
  const double x = time_map(spec, s);
  const double y = time_map(spec, t);
  const double a = spec.alpha_param();
  // Closed forms that avoid the var + var - 2 cov cancellation.
  if (spec.family() == Family::kFbm) {
    return amp2 * std::pow(std::abs(x - y), a);
  }
  if (spec.family() == Family::kDualFbm) {
    if (x == 0.0 || y == 0.0) return amp2 * std::pow(std::max(x, y), a);
    return amp2 * (std::pow(x, a) - std::pow(y, a)) * (x - y) / (x + y);
  }
  const double vs = variance(spec, s);
  const double vt = variance(spec, t);
  const double v = vs + vt - 2.0 * covariance(spec, s, t);
  if (v >= 0.0) return v;
  const double scale = std::max(vs, vt);
  if (v < -1e-12 * scale) {
    throw ComputeError(fmt::format(
        "variogram of {} at ({}, {}) is {} (negative beyond roundoff)",
        spec.label(), s, t, v));
  }
  g_clamp_magnitude = std::max(g_clamp_magnitude, -v);
  return 0.0;
}

double variogram_clamp_magnitude() noexcept { return g_clamp_magnitude; }
void reset_variogram_clamp_magnitude() noexcept { g_clamp_magnitude = 0.0; }

std::vector<double> verify_s2(const ProcessSpec& spec,
                              std::span<const double> h_values) {
  const SSTriple triple = ss_parameters(spec);
  std::vector<double> ratios;
  ratios.reserve(h_values.size());
  double prev = 1.0;
  for (double h : h_values) {
    if (!(h > 0.0 && h < 1.0))
      throw ParameterError("verify_s2: h values must lie in (0, 1)");
    if (h >= prev && !ratios.empty())
      throw ParameterError("verify_s2: h values must be strictly decreasing");
    prev = h;
    ratios.push_back(variogram(spec, 1.0, 1.0 - h) /
                     (triple.c_y * std::pow(h, triple.kappa)));
  }
  return ratios;
}

double lamperti_covariance(const ProcessSpec& spec, double tau) {
  const SSTriple triple = ss_parameters(spec);
  const double lag = std::abs(tau);
  return std::exp(-triple.alpha * lag / 2.0) *
         covariance(spec, std::exp(lag), 1.0);
}

LampertiLocalParameter lamperti_local_parameter(const ProcessSpec& spec) {
  const SSTriple triple = ss_parameters(spec);
  LampertiLocalParameter out;
  if (triple.kappa < 2.0) {
    out.a = triple.c_y / 2.0;
  } else {
    out.a = (triple.c_y - triple.alpha * triple.alpha / 4.0) / 2.0;
  }
  out.degenerate = !(out.a > 1e-12 * std::max(1.0, triple.c_y));
  return out;
}

bool is_rank_one(const ProcessSpec& spec) {
  switch (spec.family()) {
    case Family::kFbm:
    case Family::kDualFbm:
    case Family::kTimeAverageFbm:
    case Family::kIntegratedFbm:
      return std::abs(spec.alpha_param() - 2.0) < kRankOneTol;
    default:
      return false;
  }
}

std::string kernel_description(const ProcessSpec& spec) {
  switch (spec.family()) {
    case Family::kFbm:
      return "R(s,t) = (t^a + s^a - |t-s|^a)/2; triple (a, a, 1)";
    case Family::kBifractional:
      return "R(s,t) = 2^-K ((t^a + s^a)^K - |t-s|^(aK)); triple (aK, aK, "
             "2^(1-K))";
    case Family::kSubfractional:
      return "R(s,t) = (t^a + s^a - ((t+s)^a + |t-s|^a)/2) / (2 - 2^(a-1)); "
             "triple (a, a, 1/(2 - 2^(a-1)))";
    case Family::kIntegratedFbm:
      return "Y_k(t) = c_k int_0^t Y_{k-1}(s) ds, Y_0 = fBm, c_1 = "
             "sqrt(a+2), c_j = sqrt(j(a+2j)(a+j-1)/(a+2j-2)); kernel by exact "
             "iterated integration; triple (a+2k, 2, k(a+2k)(a+k-1)/(a+2k-2))";
    case Family::kTimeAverageFbm:
      return "Y(t) = sqrt(a+2) t^-1 int_0^t B_a(s) ds; R(s,t) = ((a+2)(s^(a+1) "
             "t + s t^(a+1)) + |t-s|^(a+2) - t^(a+2) - s^(a+2)) / (2(a+1)ts); "
             "triple (a, 2, 1)";
    case Family::kDualFbm:
      return "R(s,t) = (t^a s + s^a t)/(t+s); triple (a, 2, a/2)";
  }
  return {};
}

}  // namespace selfsim
