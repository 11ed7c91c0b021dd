#pragma once

// Threshold estimators: the smoothed-histogram passive estimator, the
// epoch-halving active wrapper around it, and the majority-vote bisection used
// when there is no feature noise to speak of.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "berkson/function_class.hpp"
#include "berkson/oracle.hpp"

namespace berkson {

struct WidehistConfig {
  double delta = 0.05;  // failure probability used in the bin-width formulas
  double kappa = 1.0;   // multiplicative constant on the bin width
  std::optional<double> bin_width_override;
  std::optional<double> smoothing_radius_override;
  /// Radius R entering the bin width and the regime test; defaults to half the
  /// domain width. The active estimator passes its nominal epoch radius.
  std::optional<double> reference_radius;

  void validate() const;
  nlohmann::json to_json() const;
  static WidehistConfig from_json(const nlohmann::json& j, const std::string& path);
};

/// Which bin-width law the passive estimator used.
enum class NoiseBranch { SmallNoise, LargeNoise };
/// Active-estimator phase: one while the per-epoch passive run cannot see the
/// noise, two once it can.
enum class EpochPhase { One, Two };

struct BinRecord {
  double center;
  double raw_mean;  // fraction of + labels in the bin; NaN when empty
  double smoothed;  // mean of raw_mean over bins within the smoothing radius; NaN if none
  std::size_t count;
};

struct EpochRecord {
  int epoch;                // 1-based
  Interval domain;          // D_e before the (Q) margin is applied
  Interval queried;         // D_e intersected with the admissible region
  double nominal_radius;    // 2^(1 - e)
  std::size_t budget;
  double estimate;          // t_e
  EpochPhase phase;
};

struct EstimateTrace {
  std::string estimator;
  double t_hat = 0.0;
  double bin_width = 0.0;
  double smoothing_radius = 0.0;
  NoiseBranch branch = NoiseBranch::LargeNoise;
  Interval domain;
  std::vector<BinRecord> bins;
  std::optional<std::size_t> crossing_index;
  std::vector<EpochRecord> epochs;

  nlohmann::json to_json() const;
};

/// Noise scale below which a passive learner behaves as if noiseless:
/// (R / n)^(1 / (2k - 1)).
double passive_noiseless_scale(double radius, std::size_t n, double k);

/// Bin width the passive estimator would pick (before rounding to a whole
/// number of bins).
double widehist_bin_width(std::size_t n, double sigma, double k, double c, double radius,
                          const WidehistConfig& config);

EstimateTrace widehist(std::span<const Sample> samples, double sigma, double k, double c,
                       const Interval& domain, const WidehistConfig& config = {});

/// ceil(log2(1 / sigma)), at least 1.
int actpass_epochs(double sigma);

EstimateTrace actpass(NoisyOracle& oracle, std::size_t n, double k, double c,
                      const WidehistConfig& config = {});

/// Bisection on the admissible region with a sequential majority vote at each
/// node: stop once one label leads by ceil(log(1/delta) / log((1/2+c)/(1/2-c)))
/// or after ceil(log(1/delta) / (2c^2)) queries.
EstimateTrace majority_bisection(NoisyOracle& oracle, std::size_t n, double c, double delta = 0.05);

/// Active entry point: the epoch estimator when sigma > 0 and every epoch gets
/// at least four labels, the bisection fallback otherwise.
EstimateTrace estimate_active(NoisyOracle& oracle, std::size_t n, double k, double c,
                              const WidehistConfig& config = {});

/// Per-epoch fraction of traces whose D_e contains t.
std::vector<double> containment_frequency(std::span<const EstimateTrace> traces, double t);

/// True when some bin outside {i*-1, i*, i*+1} (i* = bin holding t) sits on the
/// wrong side of 1/2 after smoothing; a smoothed mean of exactly 1/2 counts as wrong.
bool misclassified_outside_core(const EstimateTrace& trace, double t);

/// Index of the bin containing t in a passive trace.
std::size_t bin_index_of(const EstimateTrace& trace, double t);

}  // namespace berkson
