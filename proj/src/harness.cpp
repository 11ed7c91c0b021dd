#include "berkson/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "berkson/error.hpp"
#include "berkson/json_util.hpp"
#include "berkson/oracle.hpp"
#include "berkson/rng.hpp"
#include "berkson/simd/kernels.hpp"

namespace berkson {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Separate stream family for drawing randomized thresholds so they never
// share counters with the oracle.
constexpr std::uint64_t kThresholdStreamTag = 0x7468726573686c64ULL;

struct Summary {
  double mean;
  double stderr_;
};

Summary summarize(const std::vector<double>& errors) {
  const double m = static_cast<double>(errors.size());
  const double mean = simd::striped_sum(errors) / m;
  std::vector<double> sq(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) sq[i] = (errors[i] - mean) * (errors[i] - mean);
  const double var = errors.size() > 1 ? simd::striped_sum(sq) / (m - 1.0) : 0.0;
  return {mean, std::sqrt(var / m)};
}

double one_trial(const ExperimentConfig& config, std::size_t n, double sigma, double t, std::uint64_t trial) {
  MarginParams params;
  params.k = config.k;
  params.c = config.c;
  params.C = config.C;
  params.sigma = sigma;
  NoisyOracle oracle(make_power(params, t), n, config.seed, trial);
  EstimateTrace trace;
  if (config.mode == SamplingMode::Passive) {
    const Interval region = oracle.admissible();
    const std::vector<Sample> samples = oracle.passive_batch(n, Design::EquispacedGrid, region);
    trace = widehist(samples, sigma, config.k, config.c, region, config.estimator);
  } else {
    trace = estimate_active(oracle, n, config.k, config.c, config.estimator);
  }
  return std::fabs(trace.t_hat - t);
}

// Runs body(i) for i in [0, count) on the worker pool; rethrows the failure
// with the lowest index so diagnostics do not depend on scheduling.
template <class Body>
void parallel_for(std::size_t count, Body body) {
  const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto run = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  if (workers <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

CellResult run_cell_at(const ExperimentConfig& config, std::size_t n, double sigma, std::optional<double> fixed_t) {
  std::vector<double> errors(config.trials);
  parallel_for(config.trials, [&](std::size_t i) {
    double t = fixed_t.value_or(0.0);
    if (!fixed_t) {
      CounterRng rng(config.seed ^ kThresholdStreamTag, i);
      const Interval r = intersect(config.threshold.range, Interval{-1.0 + sigma, 1.0 - sigma});
      t = r.lo + r.width() * rng.uniform();
    }
    try {
      errors[i] = one_trial(config, n, sigma, t, i);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " [trial " + std::to_string(i) + ", n = " + std::to_string(n) +
                                ", sigma = " + fmt(sigma) + ", t = " + fmt(t) + "]");
    }
  });
  const Summary s = summarize(errors);
  return CellResult{n, sigma, s.mean, s.stderr_, config.trials, fixed_t.value_or(kNaN)};
}

std::pair<double, double> ols(const std::vector<double>& x, const std::vector<double>& y, double* r2) {
  const double m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::DegenerateFit, "fit needs at least two distinct abscissae");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  if (r2) {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - (intercept + slope * x[i]);
      ss_res += e * e;
    }
    *r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  }
  return {slope, intercept};
}

}  // namespace

// ---------------------------------------------------------------------------

double SigmaLaw::sigma_at(std::size_t n) const {
  return kind == Kind::Constant ? value : std::pow(static_cast<double>(n), -value);
}

nlohmann::json SigmaLaw::to_json() const {
  if (kind == Kind::Constant) return nlohmann::json{{"sigma", value}};
  return nlohmann::json{{"sigma_gamma", value}};
}

std::string_view to_string(NoiseRegime regime) {
  return regime == NoiseRegime::SmallNoise ? "small_noise" : "large_noise";
}

nlohmann::json ThresholdSpec::to_json() const {
  switch (kind) {
    case Kind::Fixed: return nlohmann::json{{"t", t}};
    case Kind::Randomized: return nlohmann::json{{"t", "randomized"}, {"t_range", {range.lo, range.hi}}};
    case Kind::WorstCase: return nlohmann::json{{"t", "worst_case"}};
  }
  return {};
}

void ExperimentConfig::validate() const {
  MarginParams params;
  params.k = k;
  params.c = c;
  params.C = C;
  params.sigma = n_grid.empty() ? 0.0 : sigma_law.sigma_at(n_grid.front());
  params.validate();
  if (sigma_law.kind == SigmaLaw::Kind::PowerLaw && !(sigma_law.value > 0.0)) {
    throw Error(ErrorCode::BadParams, "sigma power-law exponent must be > 0");
  }
  if (n_grid.size() < 3) throw Error(ErrorCode::BadParams, "n grid needs at least 3 values");
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    if (n_grid[i] <= n_grid[i - 1]) throw Error(ErrorCode::BadParams, "n grid must be strictly increasing");
  }
  if (n_grid.front() < 4) throw Error(ErrorCode::BadParams, "every n must be at least 4");
  if (trials < 50) throw Error(ErrorCode::BadParams, "trials must be >= 50");
  if (threshold.kind == ThresholdSpec::Kind::Randomized && !(threshold.range.hi > threshold.range.lo)) {
    throw Error(ErrorCode::BadParams, "randomized threshold range is empty");
  }
  estimator.validate();
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j{{"mode", std::string(to_string(mode))},
                   {"k", k},
                   {"c", c},
                   {"C", C},
                   {"n", n_grid},
                   {"trials", trials},
                   {"seed", seed},
                   {"estimator", estimator.to_json()}};
  j.update(sigma_law.to_json());
  j.update(threshold.to_json());
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::string& path) {
  using namespace json_util;
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, (path.empty() ? "config" : path) + ": expected an object");
  ExperimentConfig cfg;
  if (auto mode = optional_string(j, "mode", path)) {
    try {
      cfg.mode = sampling_mode_from_string(*mode);
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, join(path, "mode") + ": " + e.what());
    }
  }
  cfg.k = require_number(j, "k", path);
  cfg.c = require_number(j, "c", path);
  cfg.C = optional_number(j, "C", path).value_or(std::max(1.0, cfg.c));
  const auto sigma = optional_number(j, "sigma", path);
  const auto gamma = optional_number(j, "sigma_gamma", path);
  if (sigma && gamma) throw Error(ErrorCode::ConfigError, join(path, "sigma") + ": give either sigma or sigma_gamma");
  if (!sigma && !gamma) throw Error(ErrorCode::ConfigError, join(path, "sigma") + ": required number is missing");
  cfg.sigma_law = sigma ? SigmaLaw::constant(*sigma) : SigmaLaw::power_law(*gamma);

  if (auto ns = optional_number_list(j, "n", path)) {
    for (std::size_t i = 0; i < ns->size(); ++i) {
      const double v = (*ns)[i];
      if (!(v >= 1.0) || v != std::floor(v)) {
        throw Error(ErrorCode::ConfigError, join(path, "n") + "[" + std::to_string(i) + "]: expected a positive integer");
      }
      cfg.n_grid.push_back(static_cast<std::size_t>(v));
    }
  }
  if (auto trials = optional_int(j, "trials", path)) {
    if (*trials < 1) throw Error(ErrorCode::ConfigError, join(path, "trials") + ": must be positive");
    cfg.trials = static_cast<std::size_t>(*trials);
  }
  if (auto seed = optional_int(j, "seed", path)) cfg.seed = static_cast<std::uint64_t>(*seed);
  if (j.contains("estimator")) cfg.estimator = WidehistConfig::from_json(j["estimator"], join(path, "estimator"));

  if (j.contains("t") && j["t"].is_string()) {
    const std::string kind = j["t"].get<std::string>();
    if (kind == "randomized") {
      cfg.threshold.kind = ThresholdSpec::Kind::Randomized;
      if (auto range = optional_number_list(j, "t_range", path)) {
        if (range->size() != 2) throw Error(ErrorCode::ConfigError, join(path, "t_range") + ": expected [lo, hi]");
        cfg.threshold.range = Interval{(*range)[0], (*range)[1]};
      }
    } else if (kind == "worst_case") {
      cfg.threshold.kind = ThresholdSpec::Kind::WorstCase;
    } else {
      throw Error(ErrorCode::ConfigError,
                  join(path, "t") + ": expected a number, \"randomized\" or \"worst_case\"");
    }
  } else {
    cfg.threshold = ThresholdSpec::fixed(optional_number(j, "t", path).value_or(0.0));
  }
  return cfg;
}

// ---------------------------------------------------------------------------

double noiseless_rate(SamplingMode mode, double k, std::size_t n) {
  const double nn = static_cast<double>(n);
  if (mode == SamplingMode::Passive) return std::pow(nn, -1.0 / (2.0 * k - 1.0));
  if (k == 1.0) return 0.0;
  return std::pow(nn, -1.0 / (2.0 * k - 2.0));
}

ExponentPrediction theoretical_exponent(SamplingMode mode, double k, const SigmaLaw& law) {
  if (!(k >= 1.0) || !std::isfinite(k)) throw Error(ErrorCode::BadParams, "k must be >= 1");
  if (!(law.value >= 0.0) || !std::isfinite(law.value)) throw Error(ErrorCode::BadParams, "sigma law parameter must be >= 0");
  const bool passive = mode == SamplingMode::Passive;
  // Noiseless exponent, and the sigma exponent of the large-noise prefactor.
  const bool exponential_small = !passive && k == 1.0;
  const double small = exponential_small ? kNaN : (passive ? -1.0 / (2.0 * k - 1.0) : -1.0 / (2.0 * k - 2.0));
  const double sigma_power = passive ? -(k - 1.5) : -(k - 2.0);

  ExponentPrediction p;
  bool small_regime;
  if (law.kind == SigmaLaw::Kind::Constant) {
    small_regime = law.value == 0.0;
  } else {
    // sigma_n = n^-gamma is below n^small exactly when gamma > -small.
    small_regime = !exponential_small && law.value > -small;
  }
  if (small_regime) {
    p.regime = NoiseRegime::SmallNoise;
    p.exponential = exponential_small;
    p.exponent = small;
    return p;
  }
  p.regime = NoiseRegime::LargeNoise;
  const double gamma = law.kind == SigmaLaw::Kind::Constant ? 0.0 : law.value;
  p.exponent = -gamma * sigma_power - 0.5;
  return p;
}

std::vector<double> worst_case_thresholds(double sigma) {
  const double edge = 1.0 - sigma - 0.01;
  return {0.0, -0.3, 0.3, -edge, edge};
}

CellResult run_cell(const ExperimentConfig& config, std::size_t n) {
  const double sigma = config.sigma_law.sigma_at(n);
  switch (config.threshold.kind) {
    case ThresholdSpec::Kind::Fixed: return run_cell_at(config, n, sigma, config.threshold.t);
    case ThresholdSpec::Kind::Randomized: return run_cell_at(config, n, sigma, std::nullopt);
    case ThresholdSpec::Kind::WorstCase: {
      CellResult worst = run_cell_at(config, n, sigma, std::nullopt);
      for (double t : worst_case_thresholds(sigma)) {
        CellResult r = run_cell_at(config, n, sigma, t);
        if (r.mean_error > worst.mean_error) worst = r;
      }
      return worst;
    }
  }
  return {};
}

unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BERKSON_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(cap));
  }
  return hw;
}

// ---------------------------------------------------------------------------

nlohmann::json RateFit::to_json() const {
  return nlohmann::json{{"slope", slope},
                        {"intercept", intercept},
                        {"r_squared", r_squared},
                        {"theoretical_exponent", exponential ? nlohmann::json("exponential") : nlohmann::json(theoretical_exponent)},
                        {"regime", std::string(to_string(regime))},
                        {"tolerance", tolerance},
                        {"pass", pass},
                        {"warnings", warnings}};
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points, const ExponentPrediction& prediction,
                 double tolerance) {
  if (points.size() < 3) throw Error(ErrorCode::DegenerateFit, "rate fit needs at least 3 points");
  RateFit fit;
  fit.tolerance = tolerance;
  fit.theoretical_exponent = prediction.exponent;
  fit.regime = prediction.regime;
  fit.exponential = prediction.exponential;
  std::vector<double> x, y;
  bool all_floored = true;
  for (const auto& [n, err] : points) {
    if (!(n > 0.0)) throw Error(ErrorCode::DegenerateFit, "sample sizes must be positive");
    if (!(err >= 0.0)) throw Error(ErrorCode::DegenerateFit, "errors must be non-negative");
    double e = err;
    if (e < kErrorFloor) {
      fit.warnings.push_back("error " + fmt(err) + " at n = " + fmt(n) + " floored at 1e-12");
      e = kErrorFloor;
    } else {
      all_floored = false;
    }
    x.push_back(std::log(n));
    y.push_back(std::log(e));
  }
  std::tie(fit.slope, fit.intercept) = ols(x, y, &fit.r_squared);
  if (prediction.exponential) {
    // Faster than any power law: either everything sits at the floor or the
    // decay is steeper than n^-1.
    fit.pass = all_floored || fit.slope <= -1.0;
  } else {
    fit.pass = std::fabs(fit.slope - prediction.exponent) <= tolerance;
  }
  return fit;
}

nlohmann::json SweepResult::to_json() const {
  nlohmann::json cells_json = nlohmann::json::array();
  for (const CellResult& c : cells) {
    cells_json.push_back({{"n", c.n},
                          {"sigma", c.sigma},
                          {"mean_error", c.mean_error},
                          {"stderr", c.stderr_},
                          {"trials", c.trials}});
  }
  return nlohmann::json{{"config", config.to_json()}, {"cells", cells_json}, {"fit", fit.to_json()}};
}

SweepResult run_sweep(const ExperimentConfig& config) {
  config.validate();
  SweepResult sweep;
  sweep.config = config;
  std::vector<std::pair<double, double>> points;
  for (std::size_t n : config.n_grid) {
    sweep.cells.push_back(run_cell(config, n));
    points.emplace_back(static_cast<double>(n), sweep.cells.back().mean_error);
  }
  sweep.fit = fit_rate(points, theoretical_exponent(config.mode, config.k, config.sigma_law));
  return sweep;
}

nlohmann::json PrefactorScan::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const PrefactorRow& r : rows) {
    nlohmann::json cells_json = nlohmann::json::array();
    for (const CellResult& c : r.cells) {
      cells_json.push_back({{"n", c.n}, {"mean_error", c.mean_error}, {"stderr", c.stderr_}});
    }
    rows_json.push_back(
        {{"sigma", r.sigma}, {"intercept", r.intercept}, {"free_slope", r.free_slope}, {"cells", cells_json}});
  }
  return nlohmann::json{{"sigma_exponent", sigma_exponent},
                        {"predicted", predicted},
                        {"tolerance", tolerance},
                        {"pass", pass},
                        {"rows", rows_json}};
}

PrefactorScan prefactor_scan(const ExperimentConfig& base, const std::vector<double>& sigma_values, double tolerance) {
  if (sigma_values.size() < 3) throw Error(ErrorCode::BadParams, "prefactor scan needs at least 3 sigma values");
  PrefactorScan scan;
  scan.tolerance = tolerance;
  scan.predicted = base.mode == SamplingMode::Passive ? -(base.k - 1.5) : -(base.k - 2.0);

  for (double sigma : sigma_values) {
    for (std::size_t n : base.n_grid) {
      if (!(sigma > noiseless_rate(base.mode, base.k, n))) {
        throw Error(ErrorCode::RegimeViolation, "sigma = " + fmt(sigma) + " is in the small-noise regime at n = " +
                                                    std::to_string(n));
      }
    }
  }

  std::vector<double> log_sigma, log_intercept;
  for (double sigma : sigma_values) {
    ExperimentConfig cfg = base;
    cfg.sigma_law = SigmaLaw::constant(sigma);
    const ExponentPrediction pred = theoretical_exponent(cfg.mode, cfg.k, cfg.sigma_law);
    const SweepResult sweep = run_sweep(cfg);
    double acc = 0.0;
    for (const CellResult& c : sweep.cells) {
      acc += std::log(std::max(c.mean_error, kErrorFloor)) - pred.exponent * std::log(static_cast<double>(c.n));
    }
    const double intercept = acc / static_cast<double>(sweep.cells.size());
    scan.rows.push_back(PrefactorRow{sigma, intercept, sweep.fit.slope, sweep.cells});
    log_sigma.push_back(std::log(sigma));
    log_intercept.push_back(intercept);
  }
  scan.sigma_exponent = ols(log_sigma, log_intercept, nullptr).first;
  scan.pass = std::fabs(scan.sigma_exponent - scan.predicted) <= tolerance;
  return scan;
}

// ---------------------------------------------------------------------------

void write_cells_csv(std::ostream& out, const ExperimentConfig& config, const std::vector<CellResult>& cells,
                     bool header) {
  if (header) out << "mode,k,c,sigma,n,trials,mean_error,stderr\n";
  for (const CellResult& c : cells) {
    out << to_string(config.mode) << ',' << fmt(config.k) << ',' << fmt(config.c) << ',' << fmt(c.sigma) << ','
        << c.n << ',' << c.trials << ',' << fmt(c.mean_error) << ',' << fmt(c.stderr_) << '\n';
  }
}

void write_loglog_svg(std::ostream& out, const SweepResult& sweep) {
  constexpr double W = 480, H = 360, M = 50;
  std::vector<double> lx, ly;
  for (const CellResult& c : sweep.cells) {
    lx.push_back(std::log10(static_cast<double>(c.n)));
    ly.push_back(std::log10(std::max(c.mean_error, kErrorFloor)));
  }
  if (lx.empty()) return;
  double x0 = *std::min_element(lx.begin(), lx.end()), x1 = *std::max_element(lx.begin(), lx.end());
  double y0 = *std::min_element(ly.begin(), ly.end()), y1 = *std::max_element(ly.begin(), ly.end());
  if (x1 - x0 < 1e-9) x1 = x0 + 1.0;
  if (y1 - y0 < 1e-9) y1 = y0 + 1.0;
  const double px = (x1 - x0) * 0.05, py = (y1 - y0) * 0.1;
  x0 -= px, x1 += px, y0 -= py, y1 += py;
  auto X = [&](double v) { return M + (v - x0) / (x1 - x0) * (W - 2 * M); };
  auto Y = [&](double v) { return H - M - (v - y0) / (y1 - y0) * (H - 2 * M); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M << "\" y2=\"" << H - M << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">log10 n</text>\n";
  out << "<text x=\"14\" y=\"" << H / 2 << "\" transform=\"rotate(-90 14 " << H / 2
      << ")\" text-anchor=\"middle\">log10 mean error</text>\n";
  const double fa = sweep.fit.intercept / std::log(10.0);
  const double fx0 = lx.front(), fx1 = lx.back();
  out << "<line x1=\"" << num(X(fx0)) << "\" y1=\"" << num(Y(fa + sweep.fit.slope * fx0)) << "\" x2=\"" << num(X(fx1))
      << "\" y2=\"" << num(Y(fa + sweep.fit.slope * fx1)) << "\" stroke=\"steelblue\"/>\n";
  for (std::size_t i = 0; i < lx.size(); ++i) {
    out << "<circle cx=\"" << num(X(lx[i])) << "\" cy=\"" << num(Y(ly[i])) << "\" r=\"3\" fill=\"black\"/>\n";
  }
  out << "<text x=\"" << W - M << "\" y=\"" << M - 10 << "\" text-anchor=\"end\">slope " << num(sweep.fit.slope)
      << " (theory " << (sweep.fit.exponential ? std::string("exp") : num(sweep.fit.theoretical_exponent))
      << ")</text>\n";
  out << "</svg>\n";
}

}  // namespace berkson
