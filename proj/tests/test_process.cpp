#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "selfsim/errors.hpp"
#include "selfsim/identities.hpp"
#include "selfsim/process.hpp"
#include "selfsim/sampler.hpp"

using namespace selfsim;

namespace {

double fbm_cov(double a, double s, double t) {
  return 0.5 * (std::pow(s, a) + std::pow(t, a) - std::pow(std::abs(t - s), a));
}

// double integral of w(u, v) fbm_cov(u, v) over [0,s]x[0,t], splitting the inner
// integral at the diagonal kink
template <class W>
double fbm_double_integral(double a, double s, double t, W weight) {
  using boost::math::quadrature::gauss_kronrod;
  auto inner = [&](double u) {
    auto f = [&](double v) { return weight(u, v) * fbm_cov(a, u, v); };
    if (u <= 0.0) return 0.0;
    if (u >= t) return gauss_kronrod<double, 61>::integrate(f, 0.0, t, 8, 1e-12);
    return gauss_kronrod<double, 61>::integrate(f, 0.0, u, 8, 1e-12) +
           gauss_kronrod<double, 61>::integrate(f, u, t, 8, 1e-12);
  };
  if (s > t) return gauss_kronrod<double, 61>::integrate(inner, 0.0, t, 8, 1e-12) +
                    gauss_kronrod<double, 61>::integrate(inner, t, s, 8, 1e-12);
  return gauss_kronrod<double, 61>::integrate(inner, 0.0, s, 8, 1e-12);
}

// k-fold iterated integral via the Cauchy repeated-integration formula
double integrated_oracle(double a, int k, double s, double t) {
  double norm = 1.0;
  double fact = 1.0;
  for (int j = 1; j <= k; ++j) {
    norm *= j * (a + 2 * j) * (a + j - 1) / (a + 2 * j - 2);
    if (j < k) fact *= j;
  }
  auto w = [&](double u, double v) {
    return std::pow(s - u, k - 1) * std::pow(t - v, k - 1) / (fact * fact);
  };
  return norm * fbm_double_integral(a, s, t, w);
}

std::vector<ProcessSpec> all_specs() {
  return {ProcessSpec::fbm(0.6),           ProcessSpec::fbm(1.5),
          ProcessSpec::fbm(2.0),           ProcessSpec::bifractional(1.0, 0.5),
          ProcessSpec::bifractional(1.6, 0.625), ProcessSpec::subfractional(0.7),
          ProcessSpec::subfractional(1.4), ProcessSpec::integrated_fbm(1.0, 1),
          ProcessSpec::integrated_fbm(0.5, 2), ProcessSpec::time_average_fbm(0.8),
          ProcessSpec::time_average_fbm(1.0), ProcessSpec::dual_fbm(1.0),
          ProcessSpec::dual_fbm(1.7)};
}

}  // namespace

TEST_CASE("ss triples") {
  const SSTriple bif = ss_parameters(ProcessSpec::bifractional(1.0, 0.5));
  CHECK(bif.alpha == doctest::Approx(0.5));
  CHECK(bif.kappa == doctest::Approx(0.5));
  CHECK(bif.c_y == doctest::Approx(std::sqrt(2.0)));

  const SSTriple bm = ss_parameters(ProcessSpec::fbm(1.0));
  CHECK(bm.alpha == 1.0);
  CHECK(bm.kappa == 1.0);
  CHECK(bm.c_y == 1.0);

  const SSTriple dual = ss_parameters(ProcessSpec::dual_fbm(1.0));
  CHECK(dual.alpha == 1.0);
  CHECK(dual.kappa == 2.0);
  CHECK(dual.c_y == doctest::Approx(0.5));

  const SSTriple sub = ss_parameters(ProcessSpec::subfractional(1.5));
  CHECK(sub.c_y == doctest::Approx(1.0 / (2.0 - std::pow(2.0, 0.5))));

  const SSTriple integ = ss_parameters(ProcessSpec::integrated_fbm(1.0, 2));
  CHECK(integ.alpha == doctest::Approx(5.0));
  CHECK(integ.kappa == 2.0);
  CHECK(integ.c_y == doctest::Approx(2.0 * 5.0 * 2.0 / 3.0));

  const SSTriple ta = ss_parameters(ProcessSpec::time_average_fbm(0.7));
  CHECK(ta.alpha == doctest::Approx(0.7));
  CHECK(ta.kappa == 2.0);
  CHECK(ta.c_y == 1.0);
}

TEST_CASE("parameter ranges are enforced") {
  CHECK_THROWS_AS(ProcessSpec::fbm(0.0), ParameterError);
  CHECK_THROWS_AS(ProcessSpec::fbm(2.1), ParameterError);
  CHECK_NOTHROW(ProcessSpec::fbm(2.0));
  CHECK_THROWS_AS(ProcessSpec::bifractional(2.0, 0.5), ParameterError);
  CHECK_THROWS_AS(ProcessSpec::bifractional(1.0, 0.0), ParameterError);
  CHECK_THROWS_AS(ProcessSpec::bifractional(1.0, 1.2), ParameterError);
  CHECK_THROWS_AS(ProcessSpec::subfractional(2.0), ParameterError);
  CHECK_THROWS_AS(ProcessSpec::integrated_fbm(1.0, 0), ParameterError);
  CHECK_THROWS_AS(ProcessSpec::time_average_fbm(-1.0), ParameterError);
  CHECK_THROWS_AS(ProcessSpec::dual_fbm(2.5), ParameterError);
  CHECK_THROWS_AS(parse_family("nope"), ParameterError);
  CHECK(parse_family("sub-fractional") == Family::kSubfractional);
}

TEST_CASE("variance values") {
  for (const ProcessSpec& spec : all_specs()) {
    CAPTURE(spec.label());
    CHECK(variance(spec, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(variance(spec, 0.0) == 0.0);
  }
  CHECK(variance(ProcessSpec::fbm(1.0), 4.0) == doctest::Approx(4.0));
  CHECK_THROWS(variance(ProcessSpec::fbm(1.0), -1.0));
}

TEST_CASE("covariance point values") {
  CHECK(covariance(ProcessSpec::fbm(1.0), 1.0, 2.0) == doctest::Approx(1.0));
  CHECK(covariance(ProcessSpec::dual_fbm(1.0), 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(covariance(ProcessSpec::subfractional(1.0), 1.0, 2.0) == doctest::Approx(1.0));
  CHECK(covariance(ProcessSpec::dual_fbm(1.0), 1.0, 2.0) == doctest::Approx(4.0 / 3.0));
  CHECK(covariance(ProcessSpec::dual_fbm(1.0), 0.0, 0.0) == 0.0);
  CHECK(covariance(ProcessSpec::time_average_fbm(1.0), 0.0, 1.0) == 0.0);

  // printed formulas evaluated independently
  const double s = 0.7, t = 2.3;
  {
    const double a = 1.3, K = 0.6;
    const double want =
        std::pow(2.0, -K) * (std::pow(std::pow(t, a) + std::pow(s, a), K) -
                             std::pow(t - s, a * K));
    CHECK(covariance(ProcessSpec::bifractional(a, K), s, t) == doctest::Approx(want));
  }
  {
    const double a = 0.9;
    const double want = (std::pow(s, a) + std::pow(t, a) -
                         0.5 * (std::pow(s + t, a) + std::pow(t - s, a))) /
                        (2.0 - std::pow(2.0, a - 1.0));
    CHECK(covariance(ProcessSpec::subfractional(a), s, t) == doctest::Approx(want));
  }
  {
    const double a = 1.4;
    const double want = (std::pow(t, a) * s + std::pow(s, a) * t) / (t + s);
    CHECK(covariance(ProcessSpec::dual_fbm(a), s, t) == doctest::Approx(want));
  }
  {
    const double a = 0.8;
    const double want = ((a + 2) * (std::pow(s, a + 1) * t + s * std::pow(t, a + 1)) +
                         std::pow(t - s, a + 2) - std::pow(t, a + 2) - std::pow(s, a + 2)) /
                        (2 * (a + 1) * t * s);
    CHECK(covariance(ProcessSpec::time_average_fbm(a), s, t) == doctest::Approx(want));
  }
}

TEST_CASE("time-average covariance matches the averaged fbm kernel") {
  const double a = 1.3;
  for (auto [s, t] : {std::pair{0.4, 1.0}, std::pair{1.0, 3.0}, std::pair{2.5, 2.5}}) {
    const double want =
        (a + 2) / (s * t) * fbm_double_integral(a, s, t, [](double, double) { return 1.0; });
    CHECK(covariance(ProcessSpec::time_average_fbm(a), s, t) ==
          doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("integrated fbm kernel agrees with quadrature") {
  for (auto [a, k] : {std::pair{1.0, 1}, std::pair{0.4, 1}, std::pair{1.8, 1},
                      std::pair{0.7, 2}, std::pair{1.2, 3}}) {
    const ProcessSpec spec = ProcessSpec::integrated_fbm(a, k);
    for (auto [s, t] : {std::pair{0.3, 1.0}, std::pair{1.0, 1.0}, std::pair{2.0, 0.5},
                        std::pair{1.7, 3.1}}) {
      CAPTURE(a);
      CAPTURE(k);
      CAPTURE(s);
      CAPTURE(t);
      const double want = integrated_oracle(a, k, s, t);
      CHECK(covariance(spec, s, t) == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("variogram") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 5.0);
  for (double a : {0.3, 1.0, 1.7}) {
    for (int i = 0; i < 50; ++i) {
      const double s = U(rng), t = U(rng);
      CHECK(variogram(ProcessSpec::fbm(a), s, t) ==
            doctest::Approx(std::pow(std::abs(t - s), a)).epsilon(1e-12));
    }
  }
  for (const ProcessSpec& spec : all_specs()) {
    CHECK(variogram(spec, 1.3, 1.3) == 0.0);
  }
  for (double x : {0.0, 0.2, 0.5, 0.9, 0.999}) {
    const double want = (1 - x) * (1 - x) / (1 + x);
    CHECK(variogram(ProcessSpec::dual_fbm(1.0), x, 1.0) ==
          doctest::Approx(want).epsilon(1e-9).scale(1e-12));
  }
}

TEST_CASE("local variogram ratios") {
  const std::vector<double> h{1e-1, 1e-2, 1e-3};
  for (double r : verify_s2(ProcessSpec::fbm(1.3), h)) CHECK(r == doctest::Approx(1.0));
  const std::vector<double> h3{1e-3};
  CHECK(verify_s2(ProcessSpec::dual_fbm(1.0), h3)[0] == doctest::Approx(1.0).epsilon(0.01));
  CHECK(verify_s2(ProcessSpec::dual_fbm(1.0), h3)[0] ==
        doctest::Approx(2.0 / (2.0 - 1e-3)).epsilon(1e-6));
  const std::vector<double> h4{1e-4};
  CHECK(verify_s2(ProcessSpec::subfractional(1.0), h4)[0] ==
        doctest::Approx(1.0).epsilon(1e-3));
  for (const ProcessSpec& spec : representative_specs()) {
    CAPTURE(spec.label());
    CHECK(verify_s2(spec, h3)[0] == doctest::Approx(1.0).epsilon(0.05));
  }
  // ratios move toward 1 as h shrinks
  for (const ProcessSpec& spec : all_specs()) {
    CAPTURE(spec.label());
    const std::vector<double> r = verify_s2(spec, h);
    CHECK(std::abs(r[2] - 1.0) <= std::abs(r[0] - 1.0) + 1e-9);
  }
}

TEST_CASE("kernel properties") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.01, 6.0);
  for (const ProcessSpec& spec : all_specs()) {
    CAPTURE(spec.label());
    const double alpha = ss_parameters(spec).alpha;
    for (int i = 0; i < 40; ++i) {
      const double s = U(rng), t = U(rng);
      CHECK(covariance(spec, s, t) == doctest::Approx(covariance(spec, t, s)).epsilon(1e-13));
      CHECK(covariance(spec, t, t) == doctest::Approx(variance(spec, t)).epsilon(1e-12));
      CHECK(covariance(spec, s, t) <= std::pow(s * t, alpha / 2) * (1 + 1e-12));
      for (double c : {0.5, 2.0, 10.0}) {
        const double lhs = covariance(spec, c * s, c * t);
        const double rhs = std::pow(c, alpha) * covariance(spec, s, t);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10).scale(1e-300));
      }
    }
  }
}

TEST_CASE("kernel matrices are positive semidefinite") {
  for (const ProcessSpec& spec : all_specs()) {
    CAPTURE(spec.label());
    CHECK(min_relative_eigenvalue(spec, 64, 5.0, 3) > -1e-8);
  }
}

TEST_CASE("lamperti correlation") {
  for (const ProcessSpec& spec : all_specs()) CHECK(lamperti_covariance(spec, 0.0) ==
                                                    doctest::Approx(1.0));
  for (double tau : {0.1, 0.5, 2.0, -1.0})
    CHECK(lamperti_covariance(ProcessSpec::fbm(1.0), tau) ==
          doctest::Approx(std::exp(-std::abs(tau) / 2)));
  const LampertiLocalParameter deg = lamperti_local_parameter(ProcessSpec::dual_fbm(2.0));
  CHECK(deg.degenerate);
  CHECK(deg.a == doctest::Approx(0.0).epsilon(1e-14));
  const LampertiLocalParameter bm = lamperti_local_parameter(ProcessSpec::fbm(1.0));
  CHECK_FALSE(bm.degenerate);
  CHECK(bm.a == doctest::Approx(0.5));
  // kappa = 2: a = (c_Y - alpha^2/4) / 2
  const LampertiLocalParameter ta = lamperti_local_parameter(ProcessSpec::time_average_fbm(1.0));
  CHECK(ta.a == doctest::Approx((1.0 - 0.25) / 2));
}

TEST_CASE("rank-one detection") {
  CHECK(is_rank_one(ProcessSpec::fbm(2.0)));
  CHECK(is_rank_one(ProcessSpec::dual_fbm(2.0)));
  CHECK(is_rank_one(ProcessSpec::time_average_fbm(2.0)));
  CHECK(is_rank_one(ProcessSpec::integrated_fbm(2.0, 1)));
  CHECK_FALSE(is_rank_one(ProcessSpec::fbm(1.9)));
  CHECK_FALSE(is_rank_one(ProcessSpec::bifractional(1.5, 1.0)));
}

TEST_CASE("transformed specs") {
  const ProcessSpec base = ProcessSpec::dual_fbm(1.0);
  const ProcessSpec tr = base.scaled(3.0).time_changed(0.5);
  const SSTriple t = ss_parameters(tr);
  CHECK(t.alpha == doctest::Approx(0.5));
  CHECK(t.kappa == 2.0);
  CHECK(t.c_y == doctest::Approx(9.0 * 0.25 * 0.5));
  CHECK(variance(tr, 4.0) == doctest::Approx(9.0 * 2.0));
  CHECK(covariance(tr, 4.0, 9.0) == doctest::Approx(9.0 * covariance(base, 2.0, 3.0)));
  CHECK(tr.base() == base);
}
