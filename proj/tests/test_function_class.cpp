#include <doctest.h>

#include <cmath>

#include "berkson/error.hpp"
#include "berkson/function_class.hpp"

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

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::BadParams;
}

}  // namespace

TEST_CASE("power family values") {
  const RegressionFunction m1 = make_power(params(1, 0.25, 1, 0.0), 0.0);
  CHECK(m1(-0.5) == 0.25);
  CHECK(m1(0.0) == 0.5);
  CHECK(m1(0.5) == 0.75);

  CHECK(make_power(params(2, 0.25, 1, 0.0), 0.0)(0.0) == 0.5);

  const RegressionFunction m3 = make_power(params(3, 0.25, 1, 0.0), 0.2);
  CHECK(m3(0.6) == doctest::Approx(0.5 + 0.25 * 0.4 * 0.4).epsilon(1e-15));
  CHECK(m3(-0.2) == doctest::Approx(0.5 - 0.25 * 0.4 * 0.4).epsilon(1e-15));
}

TEST_CASE("parameter and boundary errors") {
  CHECK(code_of([] { make_power(params(2, 0.25, 1, 0.2), 0.9); }) == ErrorCode::BoundaryViolation);
  CHECK(code_of([] { make_power(params(0.5, 0.25, 1, 0.1), 0.0); }) == ErrorCode::BadParams);
  CHECK(code_of([] { make_power(params(2, 0.75, 1, 0.1), 0.0); }) == ErrorCode::BadParams);
  CHECK(code_of([] { make_power(params(2, 0.25, 0.1, 0.1), 0.0); }) == ErrorCode::BadParams);
  CHECK(code_of([] { make_lb_pair(params(2, 0.25, 0.25, 0.1), 0.1); }) == ErrorCode::BadParams);
  CHECK(code_of([] { make_lb_pair(params(1, 0.25, 1, 0.1), 0.0); }) == ErrorCode::BadParams);
  CHECK(code_of([] { make_lb_pair(params(1, 0.25, 1, 0.5), 0.6); }) == ErrorCode::BoundaryViolation);
}

TEST_CASE("beta constant") {
  CHECK(lb_beta(params(2, 0.25, 1, 0.1)) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(lb_beta(params(3, 0.2, 0.8, 0.1)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(code_of([] { lb_beta(params(1, 0.25, 1, 0.1)); }) == ErrorCode::BadParams);
}

TEST_CASE("step pair values") {
  const auto [p0, p1] = make_lb_pair(params(1, 0.25, 1, 0.1), 0.1);
  CHECK(p0.threshold() == -0.1);
  CHECK(p1.threshold() == 0.1);
  CHECK(p0(-0.2) == 0.25);
  CHECK(p1(0.05) == 0.25);
  CHECK(p0(0.05) == 0.75);
  CHECK(p0.form() == Form::StepPair0);
  CHECK(p1.form() == Form::StepPair1);
}

TEST_CASE("membership of constructed members") {
  const RegressionFunction m = make_power(params(2, 0.25, 1, 0.2), 0.0);
  const MembershipReport r = check_membership(m);
  CHECK(r.all_pass());
  CHECK(r.symmetry.checked >= 1000);

  for (double k : {1.0, 1.5, 3.0, 4.0}) {
    CAPTURE(k);
    CHECK(check_membership(make_power(params(k, 0.2, 0.8, 0.1), 0.3)).all_pass());
  }
  for (double a : {0.02, 0.1, 0.3}) {
    CAPTURE(a);
    const auto [p0, p1] = make_lb_pair(params(3, 0.2, 0.8, 0.05), a);
    CHECK(check_membership(p0).all_pass());
    CHECK(check_membership(p1).all_pass());
  }
}

TEST_CASE("a threshold within sigma of the edge fails the boundary condition") {
  const double sigma = 0.2;
  const RegressionFunction base = make_power(params(1, 0.25, 1, 0.0), 1.0 - sigma / 2);
  MarginParams noisy = base.params();
  noisy.sigma = sigma;
  const MembershipReport r = check_membership(base.with_params(noisy));
  CHECK_FALSE(r.boundary.pass);
  CHECK(r.boundary.violation == doctest::Approx(sigma / 2));
  CHECK(r.margin.pass);
}

TEST_CASE("upper margin constant equal to c breaks the second pair member") {
  const auto [p0, p1] = make_lb_pair(params(3, 0.2, 0.8, 0.05), 0.1);
  MarginParams tight = p1.params();
  tight.C = tight.c;
  const MembershipReport r = check_membership(p1.with_params(tight), 1e-4);
  CHECK_FALSE(r.margin.pass);
  CHECK(r.margin.worst_x > 0.1);
  // The first member is the pure power and stays inside even with C = c.
  CHECK(check_membership(p0.with_params(tight)).margin.pass);
}

TEST_CASE("second pair member rejoins the first after beta a + sigma") {
  for (double k : {2.0, 3.0, 4.5}) {
    const MarginParams p = params(k, 0.2, 0.8, 0.05);
    const double a = 0.07;
    const auto [p0, p1] = make_lb_pair(p, a);
    const double rejoin = lb_beta(p) * a + p.sigma;
    CHECK(p0.domain() == Interval{-0.05, 1.95});
    for (int i = 0; i <= 200; ++i) {
      const double x = rejoin + (p0.domain().hi - rejoin) * i / 200.0;
      REQUIRE(p0(x) == p1(x));
    }
    CHECK(p1(a) == 0.5);
    CHECK(p1(a / 2) < 0.5);
  }
}

TEST_CASE("member invariants on grids") {
  for (double k : {1.0, 2.0, 3.0}) {
    const double sigma = 0.15;
    const MarginParams p = params(k, 0.25, 1.0, sigma);
    const RegressionFunction m = make_power(p, -0.2);
    CHECK(m(m.threshold()) == 0.5);
    for (int i = 0; i <= 1000; ++i) {
      const double d = sigma * i / 1000.0;
      REQUIRE(std::fabs((m(-0.2 + d) - 0.5) - (0.5 - m(-0.2 - d))) <= 1e-12);
    }
    for (int i = 0; i <= 4000; ++i) {
      const double x = -1.0 + 2.0 * i / 4000.0;
      const double v = m(x);
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
      const double g = std::fabs(v - 0.5);
      if (x == -0.2 || g >= p.epsilon0) continue;
      const double shape = k == 1.0 ? 1.0 : std::pow(std::fabs(x + 0.2), k - 1.0);
      REQUIRE(g >= p.c * shape - 1e-12);
      REQUIRE(g <= shape + 1e-12);
    }
  }
}

TEST_CASE("json round trip and shifting") {
  const auto [p0, p1] = make_lb_pair(params(2, 0.25, 1, 0.1), 0.2);
  const RegressionFunction back = RegressionFunction::from_json(p1.to_json());
  CHECK(back.form() == Form::PowerPair1);
  CHECK(back.threshold() == p1.threshold());
  CHECK(back.domain() == p1.domain());
  for (double x : {-0.05, 0.1, 0.2, 0.35, 0.6, 1.5}) CHECK(back(x) == p1(x));

  const RegressionFunction m = make_power(params(3, 0.25, 1, 0.1), 0.1);
  const RegressionFunction m2 = RegressionFunction::from_json(m.to_json());
  CHECK(m2(0.4) == m(0.4));

  const RegressionFunction std1 = to_standard_domain(p1);
  CHECK(std1.domain() == Interval{-1.0, 1.0});
  CHECK(std1.threshold() == doctest::Approx(p1.threshold() - 1.0 + 0.1));
  CHECK(std1(0.3 - 0.9) == doctest::Approx(p1(0.3)).epsilon(1e-14));

  const RegressionFunction tab = make_tabulated(params(2, 0.25, 1, 0.0), 0.0, {-1, 0, 1}, {0.25, 0.5, 0.75});
  CHECK(tab(0.5) == doctest::Approx(0.625));
  CHECK(RegressionFunction::from_json(tab.to_json())(-0.5) == doctest::Approx(0.375));

  nlohmann::json bad = m.to_json();
  bad["form"] = "Sawtooth";
  CHECK(code_of([&] { RegressionFunction::from_json(bad); }) == ErrorCode::ConfigError);
}
