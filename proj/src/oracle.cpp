#include "berkson/oracle.hpp"

#include <cstdio>
#include <ostream>
#include <string>

#include "berkson/error.hpp"
#include "berkson/simd/kernels.hpp"

namespace berkson {
namespace {

constexpr double kQueryTol = 1e-12;

}  // namespace

NoisyOracle::NoisyOracle(RegressionFunction m, std::size_t budget, std::uint64_t seed, std::uint64_t stream)
    : m_(std::move(m)), budget_(budget), rng_(seed, stream) {
  if (budget == 0) throw Error(ErrorCode::BadParams, "oracle budget must be > 0");
}

void NoisyOracle::check_admissible(double w) const {
  if (!admissible().contains(w, kQueryTol)) {
    throw Error(ErrorCode::QueryOutsideDomain,
                "query w = " + std::to_string(w) + " lies within sigma of the boundary");
  }
}

Label NoisyOracle::query(double w) {
  if (used_ >= budget_) throw Error(ErrorCode::BudgetExhausted, "label budget of " + std::to_string(budget_) + " spent");
  check_admissible(w);
  const double s = sigma();
  const double u = s * (2.0 * rng_.uniform() - 1.0);
  const double v = rng_.uniform();
  const Label y = v < m_(w + u) ? Label::Positive : Label::Negative;
  ++used_;
  log_.push_back({w, y});
  return y;
}

std::vector<Sample> NoisyOracle::passive_batch(std::size_t n, Design design, const Interval& domain) {
  if (n > remaining()) {
    throw Error(ErrorCode::BudgetExhausted,
                "batch of " + std::to_string(n) + " exceeds remaining budget " + std::to_string(remaining()));
  }
  if (!(domain.hi > domain.lo)) throw Error(ErrorCode::DegenerateDomain, "batch domain has no width");
  check_admissible(domain.lo);
  check_admissible(domain.hi);

  const double s = sigma();
  const double width = domain.width();
  const double spacing = width / static_cast<double>(n);
  std::vector<double> w(n), x(n), v(n), p(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = design == Design::EquispacedGrid ? domain.lo + (static_cast<double>(i) + 0.5) * spacing
                                            : domain.lo + width * rng_.uniform();
    const double u = s * (2.0 * rng_.uniform() - 1.0);
    v[i] = rng_.uniform();
    x[i] = w[i] + u;
  }
  m_.eval(x, p);
  std::vector<std::int8_t> labels(n);
  simd::bernoulli_labels(p, v, labels);

  std::vector<Sample> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = Sample{w[i], static_cast<Label>(labels[i])};
  used_ += n;
  log_.insert(log_.end(), out.begin(), out.end());
  return out;
}

void write_query_log(std::ostream& out, std::uint64_t trial_id, std::span<const Sample> log, bool header) {
  if (header) out << "trial_id,step,w,y\n";
  char buf[96];
  for (std::size_t i = 0; i < log.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%llu,%zu,%.17g,%d\n", static_cast<unsigned long long>(trial_id), i,
                  log[i].w, static_cast<int>(log[i].y));
    out << buf;
  }
}

}  // namespace berkson
