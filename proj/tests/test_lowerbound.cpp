#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "berkson/error.hpp"
#include "berkson/lowerbound.hpp"

using namespace berkson;

namespace {

MarginParams params(double k, double c, double C, double sigma) {
  MarginParams p;
  p.k = k;
  p.c = c;
  p.C = C;
  p.sigma = sigma;
  return p;
}

// Written-out gap displays for the step pair; the two regimes are separate formulas.
double gap_display(double w, double a, double c, double s) {
  if (w <= -a - s || w >= a + s) return 0.0;
  if (s >= a) {
    if (w <= a - s) return c / s * (w + a + s);
    if (w <= s - a) return 2 * a * c / s;
    return c / s * (a + s - w);
  }
  if (w <= s - a) return c / s * (w + a + s);
  if (w <= a - s) return 2 * c;
  return c / s * (a + s - w);
}

}  // namespace

TEST_CASE("Bernoulli KL") {
  CHECK(kl_bernoulli(0.3, 0.3) == 0.0);
  const double direct = 0.55 * std::log(0.55 / 0.45) + 0.45 * std::log(0.45 / 0.55);
  CHECK(kl_bernoulli(0.55, 0.45) == doctest::Approx(direct).epsilon(1e-14));
  CHECK(kl_bernoulli(0.55, 0.45) == doctest::Approx(0.0200).epsilon(0.01));
  CHECK(kl_bernoulli(0.55, 0.45) <= 0.04);
  CHECK(kl_bernoulli(0.9, 0.2) == doctest::Approx(0.9 * std::log(4.5) + 0.1 * std::log(0.125)).epsilon(1e-13));
  // Near 1/2 the divergence is (p - q)^2 / (2 q (1 - q)), i.e. twice (2x)^2.
  double prev = 1.0;
  for (double x : {0.1, 0.01, 0.001}) {
    const double ratio = kl_bernoulli(0.5 + x, 0.5 - x) / (8 * x * x);
    CAPTURE(x);
    CHECK(std::fabs(ratio - 1.0) < prev);
    CHECK(std::fabs(ratio - 1.0) <= 2 * x * x);
    prev = std::fabs(ratio - 1.0);
  }
  CHECK(kl_bernoulli(0.5 + 1e-9, 0.5) > 0.0);
  try {
    kl_bernoulli(0.0, 0.3);
    FAIL("expected DomainError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DomainError);
  }
  CHECK_THROWS_AS(kl_bernoulli(0.3, 1.0), Error);
}

TEST_CASE("KL reports") {
  const HypothesisPair zero = make_hypothesis_pair(params(1, 0.25, 1, 0.1), 0.0);
  const KLReport z = kl_report(zero, 1000, 1e-3);
  CHECK(z.max_pointwise_kl == 0.0);
  CHECK(z.integrated_kl == 0.0);
  CHECK(z.active_bound == 0.0);
  CHECK(z.passive_bound == 0.0);
  CHECK(z.gap == 0.0);

  const double sigma = 0.1;
  const std::size_t n = 400;
  const double a = sigma / std::sqrt(static_cast<double>(n));
  const HypothesisPair pair = make_hypothesis_pair(params(1, 0.25, 1, sigma), a);
  const KLReport r = kl_report(pair, n, default_gap_step(a, sigma));
  CHECK(r.active_bound >= 0.01);
  CHECK(r.active_bound <= 100.0);
  CHECK(r.regime == SigmaRegime::SigmaLarge);
  CHECK(r.gap == doctest::Approx(2 * a * 0.25 / sigma).epsilon(1e-9));
  const double g = 2 * a * 0.25 / sigma;
  CHECK(r.max_pointwise_kl <= 4 * g * g * 1.01);
  CHECK(r.active_bound == doctest::Approx(n * r.max_pointwise_kl));
  CHECK(r.passive_bound == doctest::Approx(n * r.integrated_kl));
  CHECK(r.integrated_kl < r.max_pointwise_kl);

  const KLReport small = kl_report(make_hypothesis_pair(params(1, 0.25, 1, 0.01), 0.1), 100, 1e-4);
  CHECK(small.regime == SigmaRegime::SigmaSmall);
  CHECK(small.gap == doctest::Approx(0.5).epsilon(1e-9));

  CHECK_THROWS_AS(kl_report(make_hypothesis_pair(params(1, 0.5, 1, 0.0001), 0.1), 100, 1e-3), Error);
}

TEST_CASE("step pair gaps match the displays") {
  for (auto [s, a] : {std::pair{0.2, 0.05}, std::pair{0.05, 0.2}, std::pair{0.1, 0.1}}) {
    const HypothesisPair pair = make_hypothesis_pair(params(1, 0.25, 1, s), a);
    for (int i = 0; i <= 1000; ++i) {
      const double w = -(1 - s) + 2 * (1 - s) * i / 1000.0;
      const double exact = gap_display(w, a, 0.25, s);
      REQUIRE(std::fabs(std::fabs(pair.F1(w) - pair.F0(w)) - exact) <= 1e-10);
      REQUIRE(std::fabs(step_pair_gap(w, a, 0.25, s) - exact) <= 1e-15);
    }
  }
}

TEST_CASE("pair members agree outside the support") {
  for (double k : {1.0, 2.0, 3.0}) {
    const double s = 0.05, a = 0.1;
    const HypothesisPair pair = make_hypothesis_pair(params(k, 0.2, 0.8, s), a);
    const Interval sup = pair.support();
    const Interval adm = pair.F0.admissible();
    for (int i = 0; i <= 2000; ++i) {
      const double w = adm.lo + adm.width() * i / 2000.0;
      if (sup.contains(w)) continue;
      REQUIRE(std::fabs(pair.F1(w) - pair.F0(w)) <= 1e-12);
    }
  }
}

TEST_CASE("gap scaling") {
  const std::vector<double> grid{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
  for (double k : {2.0, 3.0}) {
    const ScalingReport r = verify_gap_scaling(k, 0.2, 0.8, grid, grid);
    CAPTURE(k);
    CHECK(r.pass);
    CHECK(r.small_min.has_value());
    CHECK(r.large_min.has_value());
    CHECK(r.skipped > 0);
  }
  const ScalingReport k1 = verify_gap_scaling(1.0, 0.25, 1.0, {0.1, 0.2}, {0.001, 0.005});
  REQUIRE(k1.large_min.has_value());
  CHECK(*k1.large_min == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(*k1.large_max == doctest::Approx(0.5).epsilon(1e-9));

  std::vector<double> as{0.05, 0.1, 0.2};
  for (double a : as) {
    const ScalingReport r = verify_gap_scaling(3.0, 0.2, 0.8, {a / 20}, {a});
    REQUIRE(r.small_min.has_value());
    CHECK(*r.small_min >= 0.125);
    CHECK(*r.small_max <= 8.0);
  }
}

TEST_CASE("separation where the KL bound reaches one") {
  const double sigma = 0.1;
  for (std::size_t n : {100u, 1000u, 10000u}) {
    const double dn = static_cast<double>(n);
    const double act = rate_from_kl(1, sigma, n, SamplingMode::Active);
    CHECK(act / (sigma / std::sqrt(dn)) >= 0.25);
    CHECK(act / (sigma / std::sqrt(dn)) <= 4.0);
    const double pas = rate_from_kl(1, sigma, n, SamplingMode::Passive);
    CHECK(pas / std::sqrt(sigma / dn) >= 0.25);
    CHECK(pas / std::sqrt(sigma / dn) <= 4.0);
  }
  for (double k : {1.0, 2.0, 3.0}) {
    for (SamplingMode mode : {SamplingMode::Active, SamplingMode::Passive}) {
      const double r = rate_from_kl(k, sigma, 20000, mode) / rate_from_kl(k, sigma, 40000, mode);
      CAPTURE(k);
      CHECK(r == doctest::Approx(std::sqrt(2.0)).epsilon(0.1));
    }
  }
  RateFromKLOptions half;
  half.c = 0.5;
  try {
    rate_from_kl(1, sigma, 100, SamplingMode::Active, half);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::DomainError || e.code() == ErrorCode::RootNotBracketed));
  }
  CHECK(sampling_mode_from_string("active") == SamplingMode::Active);
  CHECK_THROWS_AS(sampling_mode_from_string("semi"), Error);
}
