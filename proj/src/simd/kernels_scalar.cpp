#include "berkson/simd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace berkson::simd {

double nonneg_power(double y, double exponent) {
  const double rounded = std::floor(exponent);
  if (rounded == exponent && exponent >= 0.0 && exponent <= kMaxUnrolledExponent) {
    const int p = static_cast<int>(exponent);
    if (p == 0) return 1.0;
    double q = y;
    for (int j = 1; j < p; ++j) q *= y;
    return q;
  }
  return std::pow(y, exponent);
}

namespace {

void signed_power_scalar(const double* x, std::size_t n, double center, double coef,
                         double exponent, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - center;
    const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    const double q = nonneg_power(std::fabs(d), exponent);
    const double v = 0.5 + (s * coef) * q;
    out[i] = std::min(std::max(v, 0.0), 1.0);
  }
}

std::size_t bernoulli_labels_scalar(const double* prob, const double* u, std::size_t n,
                                    std::int8_t* out) {
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = u[i] < prob[i];
    out[i] = pos ? std::int8_t{1} : std::int8_t{-1};
    positives += pos ? 1 : 0;
  }
  return positives;
}

MaxAbsDiff max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
  MaxAbsDiff best;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::fabs(a[i] - b[i]);
    if (d > best.value) {
      best.value = d;
      best.index = i;
    }
  }
  return best;
}

double striped_sum_scalar(const double* x, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t blocked = n & ~std::size_t{3};
  for (std::size_t i = 0; i < blocked; i += 4) {
    acc[0] += x[i];
    acc[1] += x[i + 1];
    acc[2] += x[i + 2];
    acc[3] += x[i + 3];
  }
  double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (std::size_t i = blocked; i < n; ++i) total += x[i];
  return total;
}

}  // namespace

namespace detail {

const KernelTable& scalar_table() {
  static const KernelTable t{signed_power_scalar, bernoulli_labels_scalar, max_abs_diff_scalar,
                             striped_sum_scalar};
  return t;
}

}  // namespace detail
}  // namespace berkson::simd
