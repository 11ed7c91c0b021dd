// Compiled with -mavx2 only; FMA stays disabled so every product and sum is
// rounded exactly as in the scalar reference.

#include "berkson/simd/kernels.hpp"

#include <immintrin.h>

#include <bit>
#include <cmath>

namespace berkson::simd {
namespace {

bool unrolled_exponent(double exponent, int& p) {
  if (std::floor(exponent) != exponent || exponent < 0.0 || exponent > kMaxUnrolledExponent) {
    return false;
  }
  p = static_cast<int>(exponent);
  return true;
}

void signed_power_avx2(const double* x, std::size_t n, double center, double coef,
                       double exponent, double* out) {
  int p = 0;
  if (!unrolled_exponent(exponent, p)) {
    detail::scalar_table().signed_power(x, n, center, coef, exponent, out);
    return;
  }
  const __m256d vcenter = _mm256_set1_pd(center);
  const __m256d vcoef = _mm256_set1_pd(coef);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d minus_one = _mm256_set1_pd(-1.0);
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vcenter);
    const __m256d a = _mm256_and_pd(d, abs_mask);
    const __m256d s = _mm256_or_pd(_mm256_and_pd(_mm256_cmp_pd(d, zero, _CMP_GT_OQ), one),
                                   _mm256_and_pd(_mm256_cmp_pd(d, zero, _CMP_LT_OQ), minus_one));
    __m256d q = one;
    if (p > 0) {
      q = a;
      for (int j = 1; j < p; ++j) q = _mm256_mul_pd(q, a);
    }
    const __m256d v = _mm256_add_pd(half, _mm256_mul_pd(_mm256_mul_pd(s, vcoef), q));
    _mm256_storeu_pd(out + i, _mm256_min_pd(_mm256_max_pd(v, zero), one));
  }
  if (i < n) detail::scalar_table().signed_power(x + i, n - i, center, coef, exponent, out + i);
}

std::size_t bernoulli_labels_avx2(const double* prob, const double* u, std::size_t n,
                                  std::int8_t* out) {
  std::size_t positives = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d lt = _mm256_cmp_pd(_mm256_loadu_pd(u + i), _mm256_loadu_pd(prob + i), _CMP_LT_OQ);
    const unsigned bits = static_cast<unsigned>(_mm256_movemask_pd(lt));
    for (int lane = 0; lane < 4; ++lane) {
      out[i + lane] = (bits >> lane) & 1u ? std::int8_t{1} : std::int8_t{-1};
    }
    positives += static_cast<std::size_t>(std::popcount(bits));
  }
  if (i < n) positives += detail::scalar_table().bernoulli_labels(prob + i, u + i, n - i, out + i);
  return positives;
}

MaxAbsDiff max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d best = _mm256_setzero_pd();
  __m256d best_idx = _mm256_setzero_pd();
  __m256d idx = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  const __m256d step = _mm256_set1_pd(4.0);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_and_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)),
                                    abs_mask);
    const __m256d gt = _mm256_cmp_pd(d, best, _CMP_GT_OQ);
    best = _mm256_blendv_pd(best, d, gt);
    best_idx = _mm256_blendv_pd(best_idx, idx, gt);
    idx = _mm256_add_pd(idx, step);
  }

  alignas(32) double vals[4];
  alignas(32) double idxs[4];
  _mm256_store_pd(vals, best);
  _mm256_store_pd(idxs, best_idx);
  MaxAbsDiff result;
  for (int lane = 0; lane < 4; ++lane) {
    const auto lane_idx = static_cast<std::size_t>(idxs[lane]);
    if (vals[lane] > result.value || (vals[lane] == result.value && lane_idx < result.index)) {
      result.value = vals[lane];
      result.index = lane_idx;
    }
  }
  for (; i < n; ++i) {
    const double d = std::fabs(a[i] - b[i]);
    if (d > result.value) {
      result.value = d;
      result.index = i;
    }
  }
  return result;
}

double striped_sum_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t blocked = n & ~std::size_t{3};
  for (std::size_t i = 0; i < blocked; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (std::size_t i = blocked; i < n; ++i) total += x[i];
  return total;
}

}  // namespace

namespace detail {

const KernelTable* avx2_table() {
  static const KernelTable t{signed_power_avx2, bernoulli_labels_avx2, max_abs_diff_avx2,
                             striped_sum_avx2};
  return &t;
}

}  // namespace detail
}  // namespace berkson::simd
