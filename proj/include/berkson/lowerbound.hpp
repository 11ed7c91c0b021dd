#pragma once

// Two-hypothesis lower-bound quantities: a pair of class members with
// separated thresholds, the KL divergence their convolved label
// distributions accumulate over n queries, and the separation at which that
// divergence reaches one.

#include <cstddef>
#include <optional>
#include <vector>

#include <json.hpp>

#include "berkson/convolution.hpp"
#include "berkson/function_class.hpp"

namespace berkson {

enum class SamplingMode { Passive, Active };
std::string_view to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(std::string_view name);

/// KL(Ber(p) || Ber(q)) in nats. DomainError when p or q is 0 or 1.
double kl_bernoulli(double p, double q);

struct HypothesisPair {
  RegressionFunction P0;
  RegressionFunction P1;
  double a;
  ConvolvedFunction F0;
  ConvolvedFunction F1;

  /// Query region where F1 may differ from F0, clipped to the admissible region.
  Interval support() const;
};

/// Builds the pair from make_lb_pair. a == 0 gives two copies of the first member.
HypothesisPair make_hypothesis_pair(const MarginParams& params, double a);

enum class SigmaRegime { SigmaSmall, SigmaLarge };
std::string_view to_string(SigmaRegime regime);

struct KLReport {
  double max_pointwise_kl = 0.0;
  double integrated_kl = 0.0;  // average over the admissible region (uniform design)
  double active_bound = 0.0;
  double passive_bound = 0.0;
  double gap = 0.0;
  SigmaRegime regime = SigmaRegime::SigmaSmall;

  nlohmann::json to_json() const;
};

/// `grid_step` controls the sampling used for the maxima; the integral uses
/// Gauss-Legendre on every smooth piece of the support.
KLReport kl_report(const HypothesisPair& pair, std::size_t n, double grid_step);

struct ScalingCell {
  double sigma;
  double a;
  SigmaRegime regime;
  double gap;
  double predicted;
  double ratio;
};

struct ScalingReport {
  double k = 1.0;
  double lo = 0.125;
  double hi = 8.0;
  std::vector<ScalingCell> cells;
  std::optional<double> small_min, small_max;  // ratios in the sigma << a regime
  std::optional<double> large_min, large_max;  // ratios in the sigma >> a regime
  std::size_t skipped = 0;                     // cells with 1/10 < sigma/a < 10
  bool pass = false;

  nlohmann::json to_json() const;
};

/// max |F1 - F0| against a^(k-1) (sigma << a) or sigma^(k-2) a (sigma >> a)
/// on every grid cell with a clear regime; pass when all ratios sit in [1/8, 8].
ScalingReport verify_gap_scaling(double k, double c, double C, const std::vector<double>& sigma_grid,
                                 const std::vector<double>& a_grid);

struct RateFromKLOptions {
  double c = 0.25;
  double C = 1.0;
};

/// Separation a* at which the n-query KL bound of the mode equals 1.
/// RootNotBracketed when no admissible separation reaches 1.
double rate_from_kl(double k, double sigma, std::size_t n, SamplingMode mode, const RateFromKLOptions& options = {});

/// Exact |F1 - F0| for the k = 1 step pair from the closed-form displays.
double step_pair_gap(double w, double a, double c, double sigma);

}  // namespace berkson
