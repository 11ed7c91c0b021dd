#pragma once

// Data-parallel inner loops used by the oracle, the gap scans and the
// Monte-Carlo aggregation. Every kernel has a scalar reference and an AVX2
// variant; the two are bit-identical by construction (same operation order,
// no FMA contraction), so the dispatch level never changes any result.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace berkson::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

/// True if this binary carries the variant and the CPU can run it.
bool isa_available(Isa isa);

/// Level used by the free functions below. Picked once per process: the best
/// available ISA, unless BERKSON_SIMD=scalar forces the reference path.
Isa active_isa();

struct MaxAbsDiff {
  double value = 0.0;
  std::size_t index = 0;  // first index attaining value; 0 for empty input
};

struct KernelTable {
  // out[i] = clamp(0.5 + coef * sgn(x[i] - center) * |x[i] - center|^exponent, 0, 1)
  void (*signed_power)(const double* x, std::size_t n, double center, double coef,
                       double exponent, double* out);
  // out[i] = u[i] < prob[i] ? +1 : -1; returns the number of +1 labels.
  std::size_t (*bernoulli_labels)(const double* prob, const double* u, std::size_t n,
                                  std::int8_t* out);
  MaxAbsDiff (*max_abs_diff)(const double* a, const double* b, std::size_t n);
  // Four interleaved accumulators over the largest multiple of 4, combined as
  // (s0 + s1) + (s2 + s3), then the tail added left to right.
  double (*striped_sum)(const double* x, std::size_t n);
};

const KernelTable& table(Isa isa);
const KernelTable& table();

// Largest integral exponent evaluated by repeated multiplication; larger or
// fractional exponents fall back to std::pow in every variant.
inline constexpr int kMaxUnrolledExponent = 16;

/// Shared scalar definition of |d|^p used by both the kernels and the
/// segment evaluator of RegressionFunction.
double nonneg_power(double y, double exponent);

void signed_power(std::span<const double> x, double center, double coef, double exponent,
                  std::span<double> out);
std::size_t bernoulli_labels(std::span<const double> prob, std::span<const double> u,
                             std::span<std::int8_t> out);
MaxAbsDiff max_abs_diff(std::span<const double> a, std::span<const double> b);
double striped_sum(std::span<const double> x);

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
}  // namespace detail

}  // namespace berkson::simd
