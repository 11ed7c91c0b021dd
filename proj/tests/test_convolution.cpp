#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "berkson/convolution.hpp"
#include "berkson/error.hpp"
#include "berkson/rng.hpp"

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

// Convolution of a step at s with the uniform window, written out directly.
double step_conv(double w, double s, double c, double sigma) {
  return 0.5 + c * std::clamp((w - s) / sigma, -1.0, 1.0);
}

}  // namespace

TEST_CASE("step convolution is piecewise linear") {
  const double sigma = 0.2, t = 0.1;
  const ConvolvedFunction F = convolve(make_power(params(1, 0.25, 1, sigma), t), sigma);
  CHECK(F(t) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(F(t + 0.1) == doctest::Approx(0.625).epsilon(1e-14));
  CHECK(F(t - 0.3) == doctest::Approx(0.25).epsilon(1e-14));
  for (int i = 0; i <= 100; ++i) {
    const double w = -0.8 + 1.6 * i / 100.0;
    REQUIRE(std::fabs(F(w) - step_conv(w, t, 0.25, sigma)) <= 1e-12);
  }
}

TEST_CASE("analytic and quadrature agree") {
  const ConvolvedFunction a = convolve(make_power(params(3, 0.25, 1, 0.2), 0.0), 0.2);
  const ConvolvedFunction q =
      convolve(make_power(params(3, 0.25, 1, 0.2), 0.0), 0.2, ConvolutionMethod::quadrature(2048));
  CHECK(std::fabs(a(0.05) - q(0.05)) <= 1e-10);

  CounterRng rng(5, 0);
  for (int i = 0; i < 50; ++i) {
    const double k = 1.0 + 3.0 * rng.uniform();
    const double sigma = 0.01 + 0.3 * rng.uniform();
    const double t = (1.0 - sigma) * (2.0 * rng.uniform() - 1.0);
    const RegressionFunction m = make_power(params(k, 0.25, 1, sigma), t);
    const ConvolvedFunction fa = convolve(m, sigma);
    const ConvolvedFunction fq = convolve(m, sigma, ConvolutionMethod::quadrature(2048));
    const double w = (1.0 - sigma) * (2.0 * rng.uniform() - 1.0);
    CAPTURE(k);
    CAPTURE(sigma);
    REQUIRE(std::fabs(fa(w) - fq(w)) <= 1e-9);
    REQUIRE(std::fabs(fa(t) - 0.5) <= 1e-10);
  }
}

TEST_CASE("range and monotonicity") {
  for (double k : {1.0, 2.0, 3.5}) {
    const double sigma = 0.1;
    const ConvolvedFunction F = convolve(make_power(params(k, 0.4, 1, sigma), 0.3), sigma);
    double prev = -1.0;
    for (int i = 0; i < 10000; ++i) {
      const double w = -0.9 + 1.8 * i / 9999.0;
      const double v = F(w);
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
      REQUIRE(v >= prev - 1e-15);  // flat pieces round at the last bit
      prev = v;
    }
  }
}

TEST_CASE("queries outside the admissible region are rejected") {
  const ConvolvedFunction F = convolve(make_power(params(2, 0.25, 1, 0.2), 0.0), 0.2);
  CHECK(F.admissible() == Interval{-0.8, 0.8});
  CHECK_THROWS_AS(F(0.85), Error);
  try {
    F(-0.81);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::QueryOutsideDomain);
  }
  CHECK_NOTHROW(F(0.8));
  CHECK_THROWS_AS(local_slope(F, 0.5), Error);
}

TEST_CASE("gaps between pair members") {
  const MarginParams p = params(1, 0.25, 1, 0.1);
  const auto [p0, p1] = make_lb_pair(p, 0.01);
  const ConvolvedFunction f0 = convolve(p0, 0.1), f1 = convolve(p1, 0.1);
  const GapResult g = max_gap(f0, f1, default_gap_step(0.01, 0.1));
  CHECK(g.gap == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(std::fabs(g.argmax) <= 0.1 - 0.01 + 1e-12);
  CHECK(max_gap(f0, f0, 1e-3).gap == 0.0);

  // Both k = 1 regimes, pointwise against the direct step formula.
  for (auto [sigma, a] : {std::pair{0.2, 0.05}, std::pair{0.05, 0.2}}) {
    const auto [q0, q1] = make_lb_pair(params(1, 0.25, 1, sigma), a);
    const ConvolvedFunction g0 = convolve(q0, sigma), g1 = convolve(q1, sigma);
    for (int i = 0; i <= 400; ++i) {
      const double w = -(1 - sigma) + 2 * (1 - sigma) * i / 400.0;
      const double expect = std::fabs(step_conv(w, a, 0.25, sigma) - step_conv(w, -a, 0.25, sigma));
      REQUIRE(std::fabs(std::fabs(g1(w) - g0(w)) - expect) <= 1e-10);
    }
  }

  const MarginParams p3 = params(3, 0.2, 0.8, 0.2);
  const auto [r0, r1] = make_lb_pair(p3, 0.01);
  const GapResult g3 = max_gap(convolve(r0, 0.2), convolve(r1, 0.2), default_gap_step(0.01, 0.2));
  const double ratio = g3.gap / (0.2 * 0.01);
  CHECK(ratio >= p3.c / 4);
  CHECK(ratio <= 4 * p3.C);
}

TEST_CASE("slope at the threshold") {
  for (double sigma : {0.05, 0.2, 0.4}) {
    const ConvolvedFunction F = convolve(make_power(params(2, 0.25, 1, sigma), 0.0), sigma);
    CHECK(local_slope(F, sigma / 2) == doctest::Approx(0.25).epsilon(1e-12));
  }
  const ConvolvedFunction F1 = convolve(make_power(params(1, 0.25, 1, 0.2), 0.0), 0.2);
  CHECK(local_slope(F1, 0.1) == doctest::Approx(1.25).epsilon(1e-12));
  const ConvolvedFunction F4 = convolve(make_power(params(4, 0.25, 1, 0.2), 0.0), 0.2);
  CHECK(local_slope(F4, 0.05) >= 0.25 * 0.2 * 0.2);
  // Smoothed curve lies above the lower-bound line on the right of t.
  for (double h : {0.01, 0.05, 0.1, 0.2}) CHECK(F4(h) >= 0.5 + 0.25 * 0.04 * h - 1e-15);
}
