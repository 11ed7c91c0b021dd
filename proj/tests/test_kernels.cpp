#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "berkson/rng.hpp"
#include "berkson/simd/kernels.hpp"

using namespace berkson;
using namespace berkson::simd;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::vector<double> random_vector(std::size_t n, std::uint64_t stream, double lo, double hi) {
  CounterRng rng(99, stream);
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

}  // namespace

TEST_CASE("scalar kernels follow their definitions") {
  const KernelTable& s = table(Isa::Scalar);
  const std::vector<double> x{-0.5, 0.0, 0.2, 0.6, 3.0};
  std::vector<double> out(x.size());
  s.signed_power(x.data(), x.size(), 0.2, 0.25, 2.0, out.data());
  CHECK(out[0] == doctest::Approx(0.5 - 0.25 * 0.49));
  CHECK(out[2] == 0.5);
  CHECK(out[3] == doctest::Approx(0.54));
  CHECK(out[4] == 1.0);  // clipped

  s.signed_power(x.data(), x.size(), 0.0, 0.25, 0.0, out.data());
  CHECK(out[0] == 0.25);
  CHECK(out[1] == 0.5);  // the kink itself sits at 1/2
  CHECK(out[3] == 0.75);

  const std::vector<double> prob{0.0, 1.0, 0.5, 0.5};
  const std::vector<double> u{0.0, 0.999, 0.49, 0.5};
  std::vector<std::int8_t> labels(4);
  CHECK(s.bernoulli_labels(prob.data(), u.data(), 4, labels.data()) == 2);
  CHECK(labels == std::vector<std::int8_t>{-1, 1, 1, -1});

  const std::vector<double> a{1, 2, 3, 4, 5, 6, 7};
  const std::vector<double> b{1, 0, 3, 1, 5, 6, 7};
  const MaxAbsDiff d = s.max_abs_diff(a.data(), b.data(), a.size());
  CHECK(d.value == 3.0);
  CHECK(d.index == 3);
  CHECK(s.striped_sum(a.data(), a.size()) == 28.0);
  CHECK(s.max_abs_diff(a.data(), b.data(), 0).index == 0);
}

TEST_CASE("nonneg_power uses repeated multiplication for small integral exponents") {
  CHECK(nonneg_power(0.3, 0.0) == 1.0);
  CHECK(nonneg_power(0.3, 1.0) == 0.3);
  CHECK(nonneg_power(0.3, 3.0) == 0.3 * 0.3 * 0.3);
  CHECK(nonneg_power(2.0, 0.5) == std::pow(2.0, 0.5));
  CHECK(nonneg_power(1.1, 20.0) == std::pow(1.1, 20.0));
}

TEST_CASE("AVX2 kernels are bit-identical to the scalar reference") {
  if (!isa_available(Isa::Avx2)) {
    MESSAGE("AVX2 variant unavailable; only the scalar path is exercised");
    return;
  }
  const KernelTable& s = table(Isa::Scalar);
  const KernelTable& v = table(Isa::Avx2);
  REQUIRE(&s != &v);

  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 63u, 1000u, 1001u}) {
    CAPTURE(n);
    const std::vector<double> x = random_vector(n, n, -1.5, 1.5);
    for (double exponent : {0.0, 1.0, 2.0, 3.0, 7.0, 16.0, 0.5, 2.5}) {
      CAPTURE(exponent);
      std::vector<double> a(n), b(n);
      s.signed_power(x.data(), n, 0.1, 0.3, exponent, a.data());
      v.signed_power(x.data(), n, 0.1, 0.3, exponent, b.data());
      for (std::size_t i = 0; i < n; ++i) REQUIRE(same_bits(a[i], b[i]));
    }

    const std::vector<double> prob = random_vector(n, 1000 + n, 0.0, 1.0);
    std::vector<double> u = random_vector(n, 2000 + n, 0.0, 1.0);
    if (n > 2) u[1] = prob[1];  // equality must give -1 in both
    std::vector<std::int8_t> la(n), lb(n);
    CHECK(s.bernoulli_labels(prob.data(), u.data(), n, la.data()) ==
          v.bernoulli_labels(prob.data(), u.data(), n, lb.data()));
    CHECK(la == lb);

    std::vector<double> y = random_vector(n, 3000 + n, -1.0, 1.0);
    const MaxAbsDiff ms = s.max_abs_diff(x.data(), y.data(), n);
    const MaxAbsDiff mv = v.max_abs_diff(x.data(), y.data(), n);
    CHECK(same_bits(ms.value, mv.value));
    CHECK(ms.index == mv.index);

    CHECK(same_bits(s.striped_sum(x.data(), n), v.striped_sum(x.data(), n)));
  }
}

TEST_CASE("max_abs_diff reports the first index on ties in every variant") {
  std::vector<double> a(37, 0.0), b(37, 0.0);
  for (std::size_t pos : {5u, 12u, 30u, 35u}) a[pos] = 2.0;
  for (Isa isa : {Isa::Scalar, Isa::Avx2}) {
    if (!isa_available(isa)) continue;
    const MaxAbsDiff d = table(isa).max_abs_diff(a.data(), b.data(), a.size());
    CHECK(d.index == 5);
    CHECK(d.value == 2.0);
  }
  // A tie between the vector body and the tail still picks the earlier one.
  std::vector<double> c(10, 0.0), z(10, 0.0);
  c[9] = 1.0;
  c[2] = 1.0;
  for (Isa isa : {Isa::Scalar, Isa::Avx2}) {
    if (!isa_available(isa)) continue;
    CHECK(table(isa).max_abs_diff(c.data(), z.data(), c.size()).index == 2);
  }
}

TEST_CASE("dispatch honours BERKSON_SIMD") {
  const char* env = std::getenv("BERKSON_SIMD");
  if (env != nullptr && std::string(env) == "scalar") {
    CHECK(active_isa() == Isa::Scalar);
  } else {
    CHECK(active_isa() == (isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar));
  }
  CHECK(isa_name(Isa::Scalar) == "scalar");
  CHECK(isa_name(Isa::Avx2) == "avx2");
}
