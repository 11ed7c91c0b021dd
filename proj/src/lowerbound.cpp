#include "berkson/lowerbound.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include <boost/math/tools/toms748_solve.hpp>

#include "berkson/error.hpp"
#include "berkson/quadrature.hpp"

namespace berkson {
namespace {

// x - log1p(x), accurate near 0.
double log1p_defect(double x) {
  if (std::fabs(x) > 0.1) return x - std::log1p(x);
  double term = x * x;
  double sum = 0.0;
  for (int j = 2; j < 40; ++j) {
    const double add = ((j % 2 == 0) ? term : -term) / j;
    sum += add;
    if (std::fabs(add) < 1e-18 * std::fabs(sum)) break;
    term *= x;
  }
  return sum;
}

bool is_step_pair(const HypothesisPair& pair) { return pair.P0.params().k == 1.0; }

struct KLPieces {
  double max_kl = 0.0;
  double gap = 0.0;
  double integral = 0.0;
};

double pointwise_kl(const HypothesisPair& pair, double w, double* gap) {
  const double f0 = pair.F0.eval_unchecked(w);
  const double f1 = pair.F1.eval_unchecked(w);
  if (gap) *gap = std::fabs(f1 - f0);
  return f1 == f0 ? 0.0 : kl_bernoulli(f1, f0);
}

// Splits the support at every kink of F0 and F1 and walks each smooth piece.
KLPieces kl_pieces(const HypothesisPair& pair, double grid_step, bool want_max, bool want_integral) {
  KLPieces out;
  const Interval support = pair.support();
  if (!(support.hi > support.lo)) return out;
  const double sigma = pair.F0.sigma();

  std::vector<double> cuts{support.lo, support.hi};
  for (const RegressionFunction* m : {&pair.P0, &pair.P1}) {
    for (double b : m->breakpoints()) {
      for (double w : {b - sigma, b + sigma}) {
        if (w > support.lo && w < support.hi) cuts.push_back(w);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const GaussLegendreRule& rule = gauss_legendre(64);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i];
    const double hi = cuts[i + 1];
    if (!(hi > lo)) continue;
    if (want_integral) {
      out.integral += integrate([&](double w) { return pointwise_kl(pair, w, nullptr); }, lo, hi, rule);
    }
    if (want_max) {
      const double pieces = std::clamp(std::ceil((hi - lo) / grid_step), 64.0, 4096.0);
      const auto count = static_cast<std::size_t>(pieces);
      for (std::size_t j = 0; j <= count; ++j) {
        const double w = j == count ? hi : lo + (hi - lo) * static_cast<double>(j) / pieces;
        double gap = 0.0;
        const double kl = pointwise_kl(pair, w, &gap);
        out.max_kl = std::max(out.max_kl, kl);
        out.gap = std::max(out.gap, gap);
      }
    }
  }
  out.integral /= pair.F0.admissible().width();
  return out;
}

}  // namespace

std::string_view to_string(SamplingMode mode) { return mode == SamplingMode::Active ? "active" : "passive"; }

SamplingMode sampling_mode_from_string(std::string_view name) {
  if (name == "active") return SamplingMode::Active;
  if (name == "passive") return SamplingMode::Passive;
  throw Error(ErrorCode::ConfigError, "mode must be \"active\" or \"passive\", got \"" + std::string(name) + "\"");
}

std::string_view to_string(SigmaRegime regime) {
  return regime == SigmaRegime::SigmaSmall ? "sigma_small" : "sigma_large";
}

double kl_bernoulli(double p, double q) {
  if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0)) {
    throw Error(ErrorCode::DomainError,
                "kl_bernoulli needs p, q in (0, 1); got p = " + std::to_string(p) + ", q = " + std::to_string(q));
  }
  if (p == q) return 0.0;
  // p log(p/q) + (1-p) log((1-p)/(1-q)) rewritten around its second-order
  // term so that nearby p, q do not cancel catastrophically.
  const double d = p - q;
  const double r = d / q;
  const double s = -d / (1.0 - q);
  const double value = d * d / (q * (1.0 - q)) - p * log1p_defect(r) - (1.0 - p) * log1p_defect(s);
  return std::max(value, 0.0);
}

Interval HypothesisPair::support() const {
  const double sigma = F0.sigma();
  if (a <= 0.0) return Interval{0.0, -1.0};
  Interval window;
  if (is_step_pair(*this)) {
    window = Interval{-a - sigma, a + sigma};
  } else {
    window = Interval{0.0, P1.beta().value_or(1.0) * a + 2.0 * sigma};
  }
  return intersect(window, F0.admissible());
}

HypothesisPair make_hypothesis_pair(const MarginParams& params, double a) {
  if (!(a >= 0.0) || !std::isfinite(a)) throw Error(ErrorCode::BadParams, "separation a must be >= 0");
  if (!(params.sigma > 0.0)) throw Error(ErrorCode::BadParams, "hypothesis pairs need sigma > 0");
  if (a == 0.0) {
    // The first member does not depend on a; any admissible separation builds it.
    auto base = params.k == 1.0 ? make_power(params, 0.0) : make_lb_pair(params, 1e-3).first;
    return HypothesisPair{base, base, 0.0, convolve(base, params.sigma), convolve(base, params.sigma)};
  }
  auto [p0, p1] = make_lb_pair(params, a);
  ConvolvedFunction f0 = convolve(p0, params.sigma);
  ConvolvedFunction f1 = convolve(p1, params.sigma);
  return HypothesisPair{std::move(p0), std::move(p1), a, std::move(f0), std::move(f1)};
}

nlohmann::json KLReport::to_json() const {
  return nlohmann::json{{"max_pointwise_kl", max_pointwise_kl},
                        {"integrated_kl", integrated_kl},
                        {"active_bound", active_bound},
                        {"passive_bound", passive_bound},
                        {"gap", gap},
                        {"regime", std::string(to_string(regime))}};
}

KLReport kl_report(const HypothesisPair& pair, std::size_t n, double grid_step) {
  if (!(grid_step > 0.0)) throw Error(ErrorCode::BadParams, "grid_step must be > 0");
  KLReport report;
  report.regime = pair.F0.sigma() >= pair.a ? SigmaRegime::SigmaLarge : SigmaRegime::SigmaSmall;
  const KLPieces pieces = kl_pieces(pair, grid_step, true, true);
  report.max_pointwise_kl = pieces.max_kl;
  report.integrated_kl = pieces.integral;
  report.gap = pieces.gap;
  report.active_bound = static_cast<double>(n) * pieces.max_kl;
  report.passive_bound = static_cast<double>(n) * pieces.integral;
  return report;
}

// ---------------------------------------------------------------------------

nlohmann::json ScalingReport::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json cells_json = nlohmann::json::array();
  for (const ScalingCell& cell : cells) {
    cells_json.push_back({{"sigma", cell.sigma},
                          {"a", cell.a},
                          {"regime", std::string(to_string(cell.regime))},
                          {"gap", cell.gap},
                          {"predicted", cell.predicted},
                          {"ratio", cell.ratio}});
  }
  return nlohmann::json{{"k", k},
                        {"bracket", {lo, hi}},
                        {"small_sigma", {{"min_ratio", opt(small_min)}, {"max_ratio", opt(small_max)}}},
                        {"large_sigma", {{"min_ratio", opt(large_min)}, {"max_ratio", opt(large_max)}}},
                        {"skipped", skipped},
                        {"pass", pass},
                        {"cells", cells_json}};
}

ScalingReport verify_gap_scaling(double k, double c, double C, const std::vector<double>& sigma_grid,
                                 const std::vector<double>& a_grid) {
  ScalingReport report;
  report.k = k;
  bool all_in = true;
  auto widen = [](std::optional<double>& lo, std::optional<double>& hi, double v) {
    lo = lo ? std::min(*lo, v) : v;
    hi = hi ? std::max(*hi, v) : v;
  };
  for (double sigma : sigma_grid) {
    for (double a : a_grid) {
      const double ratio_sa = sigma / a;
      if (ratio_sa > 0.1 && ratio_sa < 10.0) {
        ++report.skipped;
        continue;
      }
      MarginParams params;
      params.k = k;
      params.c = c;
      params.C = C;
      params.sigma = sigma;
      std::optional<HypothesisPair> pair;
      try {
        pair = make_hypothesis_pair(params, a);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::BoundaryViolation) throw;
        ++report.skipped;
        continue;
      }
      const SigmaRegime regime = ratio_sa >= 10.0 ? SigmaRegime::SigmaLarge : SigmaRegime::SigmaSmall;
      const GapResult gap = max_gap(pair->F0, pair->F1, default_gap_step(a, sigma), pair->support());
      const double predicted =
          regime == SigmaRegime::SigmaLarge ? std::pow(sigma, k - 2.0) * a : std::pow(a, k - 1.0);
      const double ratio = gap.gap / predicted;
      report.cells.push_back(ScalingCell{sigma, a, regime, gap.gap, predicted, ratio});
      if (regime == SigmaRegime::SigmaLarge) {
        widen(report.large_min, report.large_max, ratio);
      } else {
        widen(report.small_min, report.small_max, ratio);
      }
      all_in = all_in && ratio >= report.lo && ratio <= report.hi;
    }
  }
  report.pass = all_in && !report.cells.empty();
  return report;
}

// ---------------------------------------------------------------------------

double rate_from_kl(double k, double sigma, std::size_t n, SamplingMode mode, const RateFromKLOptions& options) {
  if (n == 0) throw Error(ErrorCode::BadParams, "n must be positive");
  MarginParams params;
  params.k = k;
  params.c = options.c;
  params.C = options.C;
  params.sigma = sigma;
  params.validate();
  if (!(sigma > 0.0)) throw Error(ErrorCode::BadParams, "rate_from_kl needs sigma > 0");

  const double a_max = k == 1.0 ? 1.0 - sigma : 2.0 - 2.0 * sigma;
  const double a_min = 1e-14;
  const double nn = static_cast<double>(n);
  constexpr double kHuge = 700.0;  // log of an effectively infinite bound

  auto log_bound = [&](double log_a) {
    const double a = std::min(std::exp(log_a), a_max);
    try {
      const HypothesisPair pair = make_hypothesis_pair(params, a);
      const bool active = mode == SamplingMode::Active;
      const KLPieces pieces = kl_pieces(pair, default_gap_step(a, sigma), active, !active);
      const double bound = nn * (active ? pieces.max_kl : pieces.integral);
      return bound > 0.0 ? std::log(bound) : -kHuge;
    } catch (const Error& e) {
      // A member touching 0 or 1 where the other does not: infinite divergence.
      if (e.code() == ErrorCode::DomainError) return kHuge;
      throw;
    }
  };

  const double lo = std::log(a_min);
  const double hi = std::log(a_max);
  const double f_lo = log_bound(lo);
  const double f_hi = log_bound(hi);
  if (!(f_lo < 0.0 && f_hi > 0.0)) {
    throw Error(ErrorCode::RootNotBracketed,
                "KL bound does not cross 1 for a in [" + std::to_string(a_min) + ", " + std::to_string(a_max) +
                    "] (n = " + std::to_string(n) + ", sigma = " + std::to_string(sigma) + ")");
  }
  std::uintmax_t iterations = 200;
  const auto root = boost::math::tools::toms748_solve(log_bound, lo, hi, f_lo, f_hi,
                                                      boost::math::tools::eps_tolerance<double>(40), iterations);
  return std::exp(0.5 * (root.first + root.second));
}

double step_pair_gap(double w, double a, double c, double sigma) {
  if (w <= -a - sigma || w >= a + sigma) return 0.0;
  if (sigma >= a) {
    if (w <= a - sigma) return (w + a + sigma) * c / sigma;
    if (w <= sigma - a) return 2.0 * a * c / sigma;
    return ((a + sigma) - w) * c / sigma;
  }
  if (w <= -a + sigma) return (w + a + sigma) * c / sigma;
  if (w <= a - sigma) return 2.0 * c;
  return ((a + sigma) - w) * c / sigma;
}

}  // namespace berkson
