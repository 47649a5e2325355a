#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "selfsim/bounds.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/identities.hpp"

using namespace selfsim;

namespace {

// time-average variogram from its covariance formula, written out here
double ta_variogram(double a, double s, double t) {
  auto cov = [a](double s, double t) {
    return ((a + 2) * (std::pow(s, a + 1) * t + s * std::pow(t, a + 1)) +
            std::pow(std::abs(t - s), a + 2) - std::pow(t, a + 2) - std::pow(s, a + 2)) /
           (2 * (a + 1) * t * s);
  };
  return cov(s, s) + cov(t, t) - 2 * cov(s, t);
}

}  // namespace

TEST_CASE("dual fbm ratio and constants") {
  const ProcessSpec dual = ProcessSpec::dual_fbm(1.0);
  for (double x : {0.0, 0.1, 0.4, 0.8, 0.95}) {
    const double want = (1 + x) * (1 + x) / (1 + x * x);
    CHECK(variogram_ratio(dual, x) == doctest::Approx(want).epsilon(1e-9));
  }
  CHECK(variogram_ratio_limit(dual) == doctest::Approx(2.0));
  const VariogramConstants c = compute_c1_c2(dual);
  CHECK(std::abs(c.c1 - 1.0) < 1e-3);
  CHECK(std::abs(c.c2 - 2.0) < 1e-3);
}

TEST_CASE("fbm constants are exactly one") {
  for (double a : {0.5, 1.0, 1.5}) {
    const VariogramConstants c = compute_c1_c2(ProcessSpec::fbm(a));
    CHECK(c.c1 == 1.0);
    CHECK(c.c2 == 1.0);
  }
}

TEST_CASE("constants bracket the limit and the brute-force scan") {
  for (const ProcessSpec& spec : representative_specs()) {
    CAPTURE(spec.label());
    const VariogramConstants c = compute_c1_c2(spec);
    CHECK(c.c1 <= c.limit + 1e-12);
    CHECK(c.limit <= c.c2 + 1e-12);
    CHECK(c.c1 <= 1.0 + 1e-12);
    CHECK(c.c2 >= 1.0 - 1e-12);
    double lo = c.limit, hi = c.limit;
    for (int i = 0; i <= 20000; ++i) {
      const double x = 0.999 * i / 20000.0;
      const double f = variogram_ratio(spec, x);
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
    CHECK(c.c1 <= lo + 1e-9);
    CHECK(c.c2 >= hi - 1e-9);
    CHECK(c.c1 == doctest::Approx(lo).epsilon(1e-4));
    CHECK(c.c2 == doctest::Approx(hi).epsilon(1e-4));
  }
}

TEST_CASE("time-average constants from the printed kernel") {
  const double a = 1.0;
  double lo = 1e300, hi = 0;
  for (int i = 0; i < 20000; ++i) {
    const double x = 0.999 * i / 20000.0;
    const double f = ta_variogram(a, 1.0, std::pow(x, 2 / a)) / std::pow(1 - x, 2);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  hi = std::max(hi, 4.0 / (a * a));  // x -> 1 limit c_Y (kappa/alpha)^kappa
  const VariogramConstants c = compute_c1_c2(ProcessSpec::time_average_fbm(a));
  CHECK(c.c1 == doctest::Approx(lo).epsilon(1e-4));
  CHECK(c.c2 == doctest::Approx(hi).epsilon(1e-4));
}

TEST_CASE("bounds for kappa 1 and 2") {
  for (double R : {0.5, 1.0, 2.0}) {
    const PiterbargBounds b = piterbarg_bounds(ProcessSpec::fbm(1.0), R);
    REQUIRE(b.lower.has_value());
    CHECK(*b.lower == doctest::Approx(1 + 1 / R));
    CHECK(*b.upper == doctest::Approx(1 + 1 / R));
  }
  const PiterbargBounds rank_one = piterbarg_bounds(ProcessSpec::time_average_fbm(2.0), 1.0);
  CHECK(*rank_one.upper == doctest::Approx((1 + std::numbers::sqrt2) / 2).epsilon(1e-6));
  CHECK(*rank_one.lower == doctest::Approx((1 + std::numbers::sqrt2) / 2).epsilon(1e-6));

  const PiterbargBounds dual = piterbarg_bounds(ProcessSpec::dual_fbm(1.0), 1.0);
  CHECK(*dual.lower == doctest::Approx(universal_lower_bound(1.0)));
  CHECK(*dual.upper == doctest::Approx((1 + std::sqrt(1 + 2.0)) / 2).epsilon(1e-6));
  CHECK(dual.universal_lower == doctest::Approx((1 + std::sqrt(2.0)) / 2));

  for (const ProcessSpec& spec : representative_specs())
    for (double R : {0.5, 1.0, 2.0}) {
      const PiterbargBounds b = piterbarg_bounds(spec, R);
      REQUIRE(b.lower.has_value());
      CHECK(*b.lower <= *b.upper + 1e-12);
      if (b.kappa == 2.0) CHECK(*b.lower >= b.universal_lower - 1e-12);
    }

  const PiterbargBounds none = piterbarg_bounds(ProcessSpec::fbm(1.5), 1.0);
  CHECK_FALSE(none.lower.has_value());
  CHECK_FALSE(none.upper.has_value());
  CHECK_THROWS_AS(piterbarg_bounds(ProcessSpec::fbm(1.0), 0.0), ParameterError);
}

TEST_CASE("pickands closed forms") {
  CHECK(*pickands_closed_form(ProcessSpec::fbm(1.0)).value == doctest::Approx(1.0));
  CHECK(*pickands_closed_form(ProcessSpec::time_average_fbm(1.0)).value ==
        doctest::Approx(2 / std::sqrt(std::numbers::pi)));
  CHECK(*pickands_closed_form(ProcessSpec::dual_fbm(1.0)).value ==
        doctest::Approx(std::sqrt(2 / std::numbers::pi)));
  for (double a : {0.5, 1.0, 1.5})
    for (int k : {1, 2, 3}) {
      const double want = std::sqrt(4.0 * k * (a + k - 1) /
                                    (std::numbers::pi * (a + 2 * k) * (a + 2 * k - 2)));
      CHECK(*pickands_closed_form(ProcessSpec::integrated_fbm(a, k)).value ==
            doctest::Approx(want));
    }
  const PickandsClosedForm none = pickands_closed_form(ProcessSpec::fbm(1.5));
  CHECK_FALSE(none.value.has_value());
  CHECK(none.coefficient == doctest::Approx(1.0));
  const PickandsClosedForm ref = pickands_closed_form(ProcessSpec::bifractional(1.5, 0.5), 2.0);
  CHECK(ref.from_reference);
  CHECK(*ref.value == doctest::Approx(2.0 * std::pow(std::pow(2.0, 0.5), 1 / 0.75)));
}

TEST_CASE("sandwich holds at the computed constants") {
  for (const ProcessSpec& spec : representative_specs()) {
    CAPTURE(spec.label());
    const VariogramConstants c = compute_c1_c2(spec);
    const SandwichResult ok = sandwich_check(spec, c.c1, c.c2);
    CHECK(ok.pass);
    CHECK(ok.checked == 10000);
  }
  const SandwichResult bad = sandwich_check(ProcessSpec::dual_fbm(1.0), 1.0, 1.0);
  CHECK_FALSE(bad.pass);
  CHECK(bad.offending_pair.has_value());
  const SandwichResult half = sandwich_check(ProcessSpec::time_average_fbm(1.0), 3.0 / 4, 2.0);
  CHECK_FALSE(half.pass);
}

TEST_CASE("holder constant") {
  for (const ProcessSpec& spec : representative_specs()) {
    CAPTURE(spec.label());
    const HolderCheck h = check_holder_bound(spec, 5.0);
    CHECK(h.pass);
    CHECK(std::isfinite(h.C_hat));
    CHECK(h.gamma == std::min(ss_parameters(spec).alpha, ss_parameters(spec).kappa));
  }
  const HolderCheck bm = check_holder_bound(ProcessSpec::fbm(1.0), 3.0);
  CHECK(bm.C_hat == doctest::Approx(1.0));
}
