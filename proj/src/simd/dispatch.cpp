#include <cassert>
#include <cstdlib>
#include <string>

#include "berkson/simd/kernels.hpp"

namespace berkson::simd {

#if !defined(BERKSON_HAVE_AVX2)
namespace detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace detail
#endif

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(BERKSON_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return detail::avx2_table() != nullptr && __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() {
  static const Isa chosen = [] {
    if (const char* env = std::getenv("BERKSON_SIMD"); env != nullptr && std::string(env) == "scalar") {
      return Isa::Scalar;
    }
    return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
  }();
  return chosen;
}

const KernelTable& table(Isa isa) {
  if (isa == Isa::Avx2 && isa_available(Isa::Avx2)) return *detail::avx2_table();
  return detail::scalar_table();
}

const KernelTable& table() { return table(active_isa()); }

void signed_power(std::span<const double> x, double center, double coef, double exponent,
                  std::span<double> out) {
  assert(out.size() >= x.size());
  table().signed_power(x.data(), x.size(), center, coef, exponent, out.data());
}

std::size_t bernoulli_labels(std::span<const double> prob, std::span<const double> u,
                             std::span<std::int8_t> out) {
  assert(u.size() >= prob.size() && out.size() >= prob.size());
  return table().bernoulli_labels(prob.data(), u.data(), prob.size(), out.data());
}

MaxAbsDiff max_abs_diff(std::span<const double> a, std::span<const double> b) {
  assert(b.size() >= a.size());
  return table().max_abs_diff(a.data(), b.data(), a.size());
}

double striped_sum(std::span<const double> x) { return table().striped_sum(x.data(), x.size()); }

}  // namespace berkson::simd
