#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selfsim {

enum class Family {
  kFbm,
  kBifractional,
  kSubfractional,
  kIntegratedFbm,
  kTimeAverageFbm,
  kDualFbm,
};

std::string_view family_name(Family family);
/// Accepts the CLI spellings ("fbm", "bifractional", "sub-fractional",
/// "integrated", "time-average", "dual") and a few aliases.
Family parse_family(std::string_view name);

/// Self-similarity triple (alpha, kappa, c_Y): sigma^2(t) = t^alpha and
/// Var(Y(1) - Y(1-h)) = c_Y h^kappa + o(h^kappa).
struct SSTriple {
  double alpha = 0.0;
  double kappa = 0.0;
  double c_y = 0.0;
};

/// One of the six self-similar Gaussian families together with its
/// parameters. Construction validates the parameter ranges.
///
/// A spec may additionally carry an amplitude c and a time exponent a1,
/// describing the process t -> c * Y(t^a1). Both default to 1; they exist so
/// that scaling and time-change identities can be exercised through the same
/// sampling and estimation code. Only specs with amplitude 1 satisfy
/// sigma^2(1) = 1.
class ProcessSpec {
 public:
  static ProcessSpec fbm(double alpha);
  static ProcessSpec bifractional(double alpha, double K);
  static ProcessSpec subfractional(double alpha);
  static ProcessSpec integrated_fbm(double alpha, int k);
  static ProcessSpec time_average_fbm(double alpha);
  static ProcessSpec dual_fbm(double alpha);

  /// Generic constructor; K is used by the bifractional family only and k by
  /// the integrated family only.
  ProcessSpec(Family family, double alpha_param, double K = 1.0, int k = 1);

  Family family() const noexcept { return family_; }
  double alpha_param() const noexcept { return alpha_param_; }
  double K() const noexcept { return K_; }
  int k() const noexcept { return k_; }
  double amplitude() const noexcept { return amplitude_; }
  double time_exponent() const noexcept { return time_exponent_; }
  bool is_transformed() const noexcept {
    return amplitude_ != 1.0 || time_exponent_ != 1.0;
  }

  /// The process c * Y(t) (amplitudes compose multiplicatively).
  ProcessSpec scaled(double c) const;
  /// The process Y(t^a1) (exponents compose multiplicatively).
  ProcessSpec time_changed(double a1) const;
  /// The same family and parameters with no transform applied.
  ProcessSpec base() const;

  /// Human-readable label, e.g. "dual(alpha=1)".
  std::string label() const;

  friend bool operator==(const ProcessSpec&, const ProcessSpec&) = default;

 private:
  Family family_;
  double alpha_param_;
  double K_ = 1.0;
  int k_ = 1;
  double amplitude_ = 1.0;
  double time_exponent_ = 1.0;
};

/// (alpha, kappa, c_Y) of the process. For transformed specs the triple of
/// c * Y(t^a1) is returned: (a1 alpha, kappa, c^2 a1^kappa c_Y).
SSTriple ss_parameters(const ProcessSpec& spec);

/// sigma^2(t) = amplitude^2 * (t^a1)^alpha.
double variance(const ProcessSpec& spec, double t);

/// R_Y(s, t). Integrated fBm uses an exact closed form of the iterated
/// integral of the fBm kernel; everything else uses the family's printed
/// covariance.
double covariance(const ProcessSpec& spec, double s, double t);

/// V_Y(s, t) = Var(Y(s) - Y(t)). Tiny negative roundoff is clamped to 0;
/// values below -1e-12 * max(sigma^2(s), sigma^2(t)) raise ComputeError.
double variogram(const ProcessSpec& spec, double s, double t);

/// Largest clamp applied by variogram() on the calling thread since the last
/// reset (diagnostic).
double variogram_clamp_magnitude() noexcept;
void reset_variogram_clamp_magnitude() noexcept;

/// variogram(1, 1-h) / (c_Y h^kappa) for each h.
std::vector<double> verify_s2(const ProcessSpec& spec,
                              std::span<const double> h_values);

/// Correlation of the Lamperti-transformed stationary process at lag tau:
/// exp(-alpha |tau| / 2) R_Y(exp|tau|, 1).
double lamperti_covariance(const ProcessSpec& spec, double tau);

struct LampertiLocalParameter {
  double a = 0.0;
  /// a <= 0: the stationary counterpart has no local expansion
  /// 1 - a|t|^kappa with a > 0 (rank-one / deterministic-direction cases).
  bool degenerate = false;
};

/// Local parameter a of R_X(t, 0) = 1 - a|t|^kappa + o(|t|^kappa):
/// c_Y / 2 for kappa < 2 and (c_Y - alpha^2/4) / 2 for kappa = 2.
LampertiLocalParameter lamperti_local_parameter(const ProcessSpec& spec);

/// True when the law is Y(t) = t^(alpha/2) xi for a single standard normal
/// xi (Schwarz equality). Happens for alpha_param = 2 in the fBm, dual,
/// time-average and integrated families.
bool is_rank_one(const ProcessSpec& spec);

/// Normalization constant c_j of the j-th integration step of the k-fold
/// integrated fBm: sqrt(j (alpha+2j)(alpha+j-1) / (alpha+2j-2)).
double integration_constant(double alpha, int j);

/// Short description of where the family's kernel and triple come from,
/// printed by the CLI `info` command.
std::string kernel_description(const ProcessSpec& spec);

}  // namespace selfsim
