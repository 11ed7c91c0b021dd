#pragma once

// Monte-Carlo driver: runs many independent trials of an estimator against a
// fresh oracle per trial, aggregates the point error per sample size and
// fits log-log rates against the predicted exponents.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "berkson/estimators.hpp"
#include "berkson/function_class.hpp"
#include "berkson/lowerbound.hpp"

namespace berkson {

struct SigmaLaw {
  enum class Kind { Constant, PowerLaw };
  Kind kind = Kind::Constant;
  double value = 0.1;  // sigma for Constant, gamma for PowerLaw (sigma_n = n^-gamma)

  static SigmaLaw constant(double sigma) { return {Kind::Constant, sigma}; }
  static SigmaLaw power_law(double gamma) { return {Kind::PowerLaw, gamma}; }
  double sigma_at(std::size_t n) const;
  nlohmann::json to_json() const;
};

enum class NoiseRegime { SmallNoise, LargeNoise };
std::string_view to_string(NoiseRegime regime);

struct ThresholdSpec {
  enum class Kind { Fixed, Randomized, WorstCase };
  Kind kind = Kind::Fixed;
  double t = 0.0;
  Interval range{-0.5, 0.5};  // Randomized draws t uniformly from here, clipped to the sigma margin

  static ThresholdSpec fixed(double t) { return {Kind::Fixed, t, {}}; }
  static ThresholdSpec randomized(Interval range) { return {Kind::Randomized, 0.0, range}; }
  static ThresholdSpec worst_case() { return {Kind::WorstCase, 0.0, {-0.5, 0.5}}; }
  nlohmann::json to_json() const;
};

struct ExperimentConfig {
  SamplingMode mode = SamplingMode::Passive;
  double k = 1.0;
  double c = 0.25;
  double C = 1.0;
  SigmaLaw sigma_law;
  std::vector<std::size_t> n_grid;
  std::size_t trials = 500;
  std::uint64_t seed = 1;
  WidehistConfig estimator;
  ThresholdSpec threshold;

  /// BadParams on any violated constraint (n_grid increasing with >= 3
  /// values, trials >= 50, margin constants valid).
  void validate() const;
  nlohmann::json to_json() const;
  /// Reads the experiment keys of a config object; ConfigError names the key path.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::string& path = "");
};

struct ExponentPrediction {
  double exponent = 0.0;  // NaN when exponential
  NoiseRegime regime = NoiseRegime::LargeNoise;
  bool exponential = false;
};

/// Predicted n-exponent of the mean point error under the sigma law.
ExponentPrediction theoretical_exponent(SamplingMode mode, double k, const SigmaLaw& law);

/// Noise level below which the noiseless rate applies at sample size n.
double noiseless_rate(SamplingMode mode, double k, std::size_t n);

struct CellResult {
  std::size_t n = 0;
  double sigma = 0.0;
  double mean_error = 0.0;
  double stderr_ = 0.0;
  std::size_t trials = 0;
  double t = 0.0;  // threshold that produced the reported (worst) error; NaN when randomized
};

/// Runs config.trials independent trials at sample size n; trial i uses the
/// oracle stream (seed, i). Threads are capped by BERKSON_THREADS.
CellResult run_cell(const ExperimentConfig& config, std::size_t n);

/// Thresholds tried when the config asks for the worst case.
std::vector<double> worst_case_thresholds(double sigma);

inline constexpr double kErrorFloor = 1e-12;
inline constexpr double kSlopeTolerance = 0.15;

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double theoretical_exponent = 0.0;
  NoiseRegime regime = NoiseRegime::LargeNoise;
  bool exponential = false;
  double tolerance = kSlopeTolerance;
  bool pass = false;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

/// Least squares of log(error) on log(n). Errors of 0 are floored at
/// kErrorFloor with a warning; DegenerateFit when fewer than three points,
/// a negative error, or a single distinct n.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points, const ExponentPrediction& prediction,
                 double tolerance = kSlopeTolerance);

struct SweepResult {
  ExperimentConfig config;
  std::vector<CellResult> cells;
  RateFit fit;

  nlohmann::json to_json() const;
};

SweepResult run_sweep(const ExperimentConfig& config);

struct PrefactorRow {
  double sigma;
  double intercept;   // with the slope pinned to the predicted exponent
  double free_slope;  // unconstrained fit, for reference
  std::vector<CellResult> cells;
};

struct PrefactorScan {
  std::vector<PrefactorRow> rows;
  double sigma_exponent = 0.0;
  double predicted = 0.0;
  double tolerance = 0.2;
  bool pass = false;

  nlohmann::json to_json() const;
};

/// Repeats the sweep at each constant sigma and regresses the fitted
/// log-intercepts on log sigma. RegimeViolation when any (sigma, n) cell is
/// in the small-noise regime.
PrefactorScan prefactor_scan(const ExperimentConfig& base, const std::vector<double>& sigma_values,
                             double tolerance = 0.2);

/// "mode,k,c,sigma,n,trials,mean_error,stderr" rows.
void write_cells_csv(std::ostream& out, const ExperimentConfig& config, const std::vector<CellResult>& cells,
                     bool header = true);

/// Log-log scatter of the cells with the fitted line.
void write_loglog_svg(std::ostream& out, const SweepResult& sweep);

/// Worker count: hardware concurrency capped by BERKSON_THREADS (>= 1).
unsigned worker_count();

}  // namespace berkson
