#include "berkson/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "berkson/error.hpp"
#include "berkson/json_util.hpp"

namespace berkson {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view to_string(NoiseBranch b) { return b == NoiseBranch::SmallNoise ? "small_noise" : "large_noise"; }
std::string_view to_string(EpochPhase p) { return p == EpochPhase::One ? "phase_one" : "phase_two"; }

nlohmann::json interval_json(const Interval& i) { return nlohmann::json::array({i.lo, i.hi}); }

// JSON has no NaN; empty bins serialize as null.
nlohmann::json number_or_null(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

}  // namespace

void WidehistConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::BadParams, "delta must lie in (0, 1)");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw Error(ErrorCode::BadParams, "kappa must be > 0");
  if (bin_width_override && !(*bin_width_override > 0.0)) {
    throw Error(ErrorCode::BadParams, "bin_width_override must be > 0");
  }
  if (smoothing_radius_override && !(*smoothing_radius_override >= 0.0)) {
    throw Error(ErrorCode::BadParams, "smoothing_radius_override must be >= 0");
  }
  if (reference_radius && !(*reference_radius > 0.0)) {
    throw Error(ErrorCode::BadParams, "reference_radius must be > 0");
  }
}

nlohmann::json WidehistConfig::to_json() const {
  nlohmann::json j{{"delta", delta}, {"kappa", kappa}};
  if (bin_width_override) j["bin_width"] = *bin_width_override;
  if (smoothing_radius_override) j["smoothing_radius"] = *smoothing_radius_override;
  return j;
}

WidehistConfig WidehistConfig::from_json(const nlohmann::json& j, const std::string& path) {
  WidehistConfig cfg;
  if (j.is_null()) return cfg;
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, path + ": expected an object");
  cfg.delta = json_util::optional_number(j, "delta", path).value_or(cfg.delta);
  cfg.kappa = json_util::optional_number(j, "kappa", path).value_or(cfg.kappa);
  cfg.bin_width_override = json_util::optional_number(j, "bin_width", path);
  cfg.smoothing_radius_override = json_util::optional_number(j, "smoothing_radius", path);
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
  return cfg;
}

nlohmann::json EstimateTrace::to_json() const {
  nlohmann::json j;
  j["estimator"] = estimator;
  j["t_hat"] = t_hat;
  j["bin_width"] = bin_width;
  j["smoothing_radius"] = smoothing_radius;
  j["branch"] = std::string(to_string(branch));
  j["domain"] = interval_json(domain);
  j["crossing_index"] = crossing_index ? nlohmann::json(*crossing_index) : nlohmann::json(nullptr);
  nlohmann::json bins_json = nlohmann::json::array();
  for (const BinRecord& b : bins) {
    bins_json.push_back({{"center", b.center},
                         {"raw_mean", number_or_null(b.raw_mean)},
                         {"smoothed", number_or_null(b.smoothed)},
                         {"count", b.count}});
  }
  j["bins"] = bins_json;
  nlohmann::json epochs_json = nlohmann::json::array();
  for (const EpochRecord& e : epochs) {
    epochs_json.push_back({{"epoch", e.epoch},
                           {"domain", interval_json(e.domain)},
                           {"queried", interval_json(e.queried)},
                           {"nominal_radius", e.nominal_radius},
                           {"budget", e.budget},
                           {"estimate", e.estimate},
                           {"phase", std::string(to_string(e.phase))}});
  }
  j["epochs"] = epochs_json;
  return j;
}

// ---------------------------------------------------------------------------
// WIDEHIST

double passive_noiseless_scale(double radius, std::size_t n, double k) {
  return std::pow(radius / static_cast<double>(n), 1.0 / (2.0 * k - 1.0));
}

double widehist_bin_width(std::size_t n, double sigma, double k, double c, double radius,
                          const WidehistConfig& config) {
  if (config.bin_width_override) return *config.bin_width_override;
  const double nn = static_cast<double>(n);
  const double log_term = std::log(2.0 * nn / config.delta);
  if (sigma < passive_noiseless_scale(radius, n, k)) {
    // Unsmoothed histogram: bins at distance h from t differ from 1/2 by c h^(k-1)
    // and hold n h / (2R) labels.
    return config.kappa * std::pow(radius * log_term / (nn * c * c), 1.0 / (2.0 * k - 1.0));
  }
  // Smoothed over the sigma window: the convolved slope near t is c sigma^(k-2).
  return config.kappa / c * std::sqrt(radius * log_term / (nn * std::pow(sigma, 2.0 * k - 3.0)));
}

EstimateTrace widehist(std::span<const Sample> samples, double sigma, double k, double c,
                       const Interval& domain, const WidehistConfig& config) {
  config.validate();
  if (!(domain.hi > domain.lo)) throw Error(ErrorCode::DegenerateDomain, "widehist domain has no width");
  const std::size_t n = samples.size();
  if (n < 4) throw Error(ErrorCode::TooFewSamples, "widehist needs at least 4 samples for 4 bins");

  const double radius = config.reference_radius.value_or(domain.radius());
  const bool small_noise = sigma < passive_noiseless_scale(radius, n, k);
  const double target_h = widehist_bin_width(n, sigma, k, c, radius, config);

  const double width = domain.width();
  const double ideal_bins = std::round(width / target_h);
  const auto bins = static_cast<std::size_t>(
      std::clamp(std::isfinite(ideal_bins) ? ideal_bins : 4.0, 4.0, static_cast<double>(n)));
  const double h = width / static_cast<double>(bins);

  const double smoothing = config.smoothing_radius_override.value_or(small_noise ? 0.0 : 0.5 * sigma);
  const auto half_window = static_cast<std::size_t>(std::floor(smoothing / h + 1e-9));

  std::vector<std::size_t> counts(bins, 0);
  std::vector<std::size_t> positives(bins, 0);
  std::size_t total_positive = 0;
  for (const Sample& s : samples) {
    const double pos = std::floor((s.w - domain.lo) / h);
    const auto idx = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    ++counts[idx];
    if (s.y == Label::Positive) {
      ++positives[idx];
      ++total_positive;
    }
  }

  EstimateTrace trace;
  trace.estimator = "widehist";
  trace.bin_width = h;
  trace.smoothing_radius = smoothing;
  trace.branch = small_noise ? NoiseBranch::SmallNoise : NoiseBranch::LargeNoise;
  trace.domain = domain;
  trace.bins.resize(bins);

  // Prefix sums over non-empty bins for the sliding window.
  std::vector<double> prefix_mean(bins + 1, 0.0);
  std::vector<std::size_t> prefix_filled(bins + 1, 0);
  for (std::size_t i = 0; i < bins; ++i) {
    const double raw = counts[i] > 0 ? static_cast<double>(positives[i]) / static_cast<double>(counts[i]) : kNaN;
    trace.bins[i] = BinRecord{domain.lo + (static_cast<double>(i) + 0.5) * h, raw, kNaN, counts[i]};
    prefix_mean[i + 1] = prefix_mean[i] + (counts[i] > 0 ? raw : 0.0);
    prefix_filled[i + 1] = prefix_filled[i] + (counts[i] > 0 ? 1 : 0);
  }
  for (std::size_t i = 0; i < bins; ++i) {
    const std::size_t lo = i >= half_window ? i - half_window : 0;
    const std::size_t hi = std::min(bins - 1, i + half_window);
    const std::size_t filled = prefix_filled[hi + 1] - prefix_filled[lo];
    if (filled > 0) trace.bins[i].smoothed = (prefix_mean[hi + 1] - prefix_mean[lo]) / static_cast<double>(filled);
  }

  // First left-to-right change from a bin below 1/2 to one at or above 1/2;
  // bins with no smoothed value are skipped.
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < bins; ++i) {
    if (std::isnan(trace.bins[i].smoothed)) continue;
    if (prev && trace.bins[*prev].smoothed < 0.5 && trace.bins[i].smoothed >= 0.5) {
      trace.crossing_index = i;
      trace.t_hat = 0.5 * (trace.bins[*prev].center + trace.bins[i].center);
      return trace;
    }
    prev = i;
  }

  bool any_below = false;
  bool any_above = false;
  for (const BinRecord& b : trace.bins) {
    if (std::isnan(b.smoothed)) continue;
    (b.smoothed < 0.5 ? any_below : any_above) = true;
  }
  bool positive_side;
  if (any_above && !any_below) {
    positive_side = true;
  } else if (any_below && !any_above) {
    positive_side = false;
  } else {
    positive_side = 2 * total_positive > n;
  }
  trace.t_hat = positive_side ? domain.lo : domain.hi;
  return trace;
}

std::size_t bin_index_of(const EstimateTrace& trace, double t) {
  const double pos = std::floor((t - trace.domain.lo) / trace.bin_width);
  return static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(trace.bins.size() - 1)));
}

bool misclassified_outside_core(const EstimateTrace& trace, double t) {
  const std::size_t star = bin_index_of(trace, t);
  for (std::size_t i = 0; i < trace.bins.size(); ++i) {
    const double p = trace.bins[i].smoothed;
    if (i + 1 < star && !(p < 0.5)) return true;
    if (i > star + 1 && !(p > 0.5)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// ACTPASS

int actpass_epochs(double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::BadParams, "epoch count needs sigma > 0");
  return std::max(1, static_cast<int>(std::ceil(std::log2(1.0 / sigma))));
}

EstimateTrace actpass(NoisyOracle& oracle, std::size_t n, double k, double c, const WidehistConfig& config) {
  config.validate();
  const double sigma = oracle.sigma();
  const int epochs = actpass_epochs(sigma);
  if (n < static_cast<std::size_t>(epochs)) {
    throw Error(ErrorCode::BadParams, "budget n = " + std::to_string(n) + " is below the epoch count " +
                                          std::to_string(epochs));
  }
  const std::size_t per_epoch = n / static_cast<std::size_t>(epochs);
  const std::size_t remainder = n % static_cast<std::size_t>(epochs);
  const Interval full{-1.0, 1.0};

  EstimateTrace result;
  Interval domain = full;
  double estimate = 0.0;
  for (int e = 1; e <= epochs; ++e) {
    const double radius = std::ldexp(1.0, 1 - e);
    const std::size_t budget = per_epoch + (e == epochs ? remainder : 0);
    const Interval queried = intersect(domain, oracle.admissible());
    EpochRecord rec{e, domain, queried, radius, budget, estimate, EpochPhase::Two};

    if (queried.hi > queried.lo && budget >= 4) {
      const std::vector<Sample> samples = oracle.passive_batch(budget, Design::EquispacedGrid, queried);
      WidehistConfig epoch_cfg = config;
      epoch_cfg.reference_radius = radius;
      EstimateTrace pass = widehist(samples, sigma, k, c, queried, epoch_cfg);
      estimate = pass.t_hat;
      rec.estimate = estimate;
      rec.phase = pass.branch == NoiseBranch::SmallNoise ? EpochPhase::One : EpochPhase::Two;
      if (e == epochs) {
        result.bin_width = pass.bin_width;
        result.smoothing_radius = pass.smoothing_radius;
        result.branch = pass.branch;
        result.bins = std::move(pass.bins);
        result.crossing_index = pass.crossing_index;
        result.domain = queried;
      }
    } else {
      rec.budget = 0;
      rec.phase = sigma < passive_noiseless_scale(radius, std::max<std::size_t>(budget, 1), k) ? EpochPhase::One
                                                                                              : EpochPhase::Two;
    }
    result.epochs.push_back(rec);
    const double next_radius = std::ldexp(1.0, -e);
    domain = intersect(Interval{estimate - next_radius, estimate + next_radius}, full);
  }
  result.estimator = "actpass";
  result.t_hat = estimate;
  return result;
}

// ---------------------------------------------------------------------------
// Bisection

EstimateTrace majority_bisection(NoisyOracle& oracle, std::size_t n, double c, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::BadParams, "delta must lie in (0, 1)");
  if (!(c > 0.0 && c <= 0.5)) throw Error(ErrorCode::BadParams, "c must lie in (0, 1/2]");
  const double log_inv_delta = std::log(1.0 / delta);
  const long lead_needed =
      c >= 0.5 ? 1L : std::max(1L, static_cast<long>(std::ceil(log_inv_delta / std::log((0.5 + c) / (0.5 - c)))));
  const long max_reps = std::max(lead_needed, static_cast<long>(std::ceil(log_inv_delta / (2.0 * c * c))));

  Interval bracket = oracle.admissible();
  std::size_t spent = 0;
  while (spent < n) {
    const double mid = bracket.center();
    long lead = 0;
    long reps = 0;
    Label last = Label::Positive;
    while (spent < n && reps < max_reps && std::labs(lead) < lead_needed) {
      last = oracle.query(mid);
      lead += static_cast<int>(last);
      ++reps;
      ++spent;
    }
    const bool positive = lead > 0 || (lead == 0 && last == Label::Positive);
    if (positive) {
      bracket.hi = mid;
    } else {
      bracket.lo = mid;
    }
  }
  EstimateTrace trace;
  trace.estimator = "bisection";
  trace.t_hat = bracket.center();
  trace.domain = oracle.admissible();
  trace.branch = NoiseBranch::SmallNoise;
  return trace;
}

EstimateTrace estimate_active(NoisyOracle& oracle, std::size_t n, double k, double c,
                              const WidehistConfig& config) {
  const double sigma = oracle.sigma();
  if (sigma > 0.0 && n >= 4 * static_cast<std::size_t>(actpass_epochs(sigma))) {
    return actpass(oracle, n, k, c, config);
  }
  return majority_bisection(oracle, n, c, config.delta);
}

std::vector<double> containment_frequency(std::span<const EstimateTrace> traces, double t) {
  std::size_t epochs = 0;
  for (const EstimateTrace& tr : traces) epochs = std::max(epochs, tr.epochs.size());
  std::vector<double> freq(epochs, 0.0);
  if (traces.empty()) return freq;
  for (std::size_t e = 0; e < epochs; ++e) {
    std::size_t hits = 0;
    for (const EstimateTrace& tr : traces) {
      if (e < tr.epochs.size() && tr.epochs[e].domain.contains(t)) ++hits;
    }
    freq[e] = static_cast<double>(hits) / static_cast<double>(traces.size());
  }
  return freq;
}

}  // namespace berkson
