// berkson: command-line front end for the simulation library.

#include <cmath>
#include <cstdio>
#include <functional>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "berkson/acceptance.hpp"
#include "berkson/convolution.hpp"
#include "berkson/error.hpp"
#include "berkson/estimators.hpp"
#include "berkson/function_class.hpp"
#include "berkson/harness.hpp"
#include "berkson/io.hpp"
#include "berkson/json_util.hpp"
#include "berkson/lowerbound.hpp"
#include "berkson/oracle.hpp"

namespace {

using json = nlohmann::json;
using namespace berkson;

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kConfig = 1, kRuntime = 2, kSelftest = 3 };

struct Flags {
  std::string config_path;
  std::optional<std::int64_t> seed;
  std::string out = "berkson_out";
  std::optional<std::int64_t> trials;
  std::optional<std::string> n;
  std::optional<double> sigma;
  std::optional<double> k;
  std::optional<std::string> mode;
  std::optional<double> c;
  std::optional<std::string> t;
  std::optional<double> a;
};

json load_config(const Flags& f) {
  json j = json::object();
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file " + f.config_path);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ConfigError, f.config_path + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config: top level must be an object");
  }
  // Flags replace config keys one for one.
  if (f.seed) j["seed"] = *f.seed;
  if (f.trials) j["trials"] = *f.trials;
  if (f.sigma) {
    j["sigma"] = *f.sigma;
    j.erase("sigma_gamma");
  }
  if (f.k) j["k"] = *f.k;
  if (f.mode) j["mode"] = *f.mode;
  if (f.c) j["c"] = *f.c;
  if (f.a) j["a"] = *f.a;
  if (f.t) {
    char* end = nullptr;
    const double v = std::strtod(f.t->c_str(), &end);
    if (end != f.t->c_str() && *end == '\0') {
      j["t"] = v;
    } else {
      j["t"] = *f.t;
    }
  }
  if (f.n) {
    json list = json::array();
    std::stringstream ss(*f.n);
    std::string item;
    while (std::getline(ss, item, ',')) {
      char* end = nullptr;
      const double v = std::strtod(item.c_str(), &end);
      if (item.empty() || *end != '\0') throw Error(ErrorCode::ConfigError, "--n: \"" + item + "\" is not a number");
      list.push_back(v == std::floor(v) ? json(static_cast<std::int64_t>(v)) : json(v));
    }
    j["n"] = list;
  }
  return j;
}

// c has a documented default; say so instead of applying it silently.
void default_c(json& j) {
  if (!j.contains("c")) {
    j["c"] = 0.25;
    std::cerr << "note: c not given, using c = 0.25\n";
  }
}

MarginParams params_from(const json& j) {
  MarginParams p;
  p.k = json_util::require_number(j, "k", "");
  p.c = json_util::require_number(j, "c", "");
  p.C = json_util::optional_number(j, "C", "").value_or(std::max(1.0, p.c));
  p.sigma = json_util::require_number(j, "sigma", "");
  p.epsilon0 = json_util::optional_number(j, "epsilon0", "").value_or(p.epsilon0);
  p.validate();
  return p;
}

class Outputs {
 public:
  Outputs(std::string dir, const json& config) : dir_(std::move(dir)) {
    manifest_.config_hash = config_hash(config);
    manifest_.seed = static_cast<std::uint64_t>(json_util::optional_int(config, "seed", "").value_or(1));
    manifest_.tool_version = kVersion;
    manifest_.started = utc_timestamp();
  }
  void write(const std::string& name, const std::string& bytes) {
    write_file_atomic(std::filesystem::path(dir_) / name, bytes);
    manifest_.outputs.push_back((std::filesystem::path(dir_) / name).string());
    std::cout << "wrote " << (std::filesystem::path(dir_) / name).string() << "\n";
  }
  void finish() {
    manifest_.finished = utc_timestamp();
    write_file_atomic(std::filesystem::path(dir_) / "manifest.json", manifest_.to_json().dump(2) + "\n");
  }

 private:
  std::string dir_;
  RunManifest manifest_;
};

// Each command validates its inputs first (config errors) and returns the work to run.
using Work = std::function<int()>;

Work cmd_convolve(json cfg, const Flags& f) {
  default_c(cfg);
  const MarginParams p = params_from(cfg);
  if (!(p.sigma > 0.0)) throw Error(ErrorCode::ConfigError, "sigma: convolve needs sigma > 0");
  const double t = json_util::optional_number(cfg, "t", "").value_or(0.0);
  const auto points = json_util::optional_int(cfg, "points", "").value_or(2001);
  if (points < 2) throw Error(ErrorCode::ConfigError, "points: need at least 2");
  return [=] {
    const ConvolvedFunction F = convolve(make_power(p, t), p.sigma);
    Outputs out(f.out, cfg);
    out.write("convolve.csv", convolve_curve_csv(F, static_cast<std::size_t>(points)));
    out.finish();
    return kOk;
  };
}

Work cmd_estimate(json cfg, const Flags& f) {
  default_c(cfg);
  const MarginParams p = params_from(cfg);
  const double t = json_util::optional_number(cfg, "t", "").value_or(0.0);
  const auto ns = json_util::optional_number_list(cfg, "n", "");
  if (!ns || ns->empty()) throw Error(ErrorCode::ConfigError, "n: required (first value is used)");
  const auto n = static_cast<std::size_t>(ns->front());
  const SamplingMode mode = sampling_mode_from_string(json_util::optional_string(cfg, "mode", "").value_or("passive"));
  const auto seed = static_cast<std::uint64_t>(json_util::optional_int(cfg, "seed", "").value_or(1));
  const WidehistConfig est = cfg.contains("estimator") ? WidehistConfig::from_json(cfg["estimator"], "estimator")
                                                       : WidehistConfig{};
  return [=] {
    NoisyOracle oracle(make_power(p, t), n, seed, 0);
    EstimateTrace trace;
    if (mode == SamplingMode::Passive) {
      const auto samples = oracle.passive_batch(n, Design::EquispacedGrid, oracle.admissible());
      trace = widehist(samples, p.sigma, p.k, p.c, oracle.admissible(), est);
    } else {
      trace = estimate_active(oracle, n, p.k, p.c, est);
    }
    json j = trace.to_json();
    j["t"] = t;
    j["abs_error"] = std::fabs(trace.t_hat - t);
    std::ostringstream log;
    write_query_log(log, 0, oracle.log());
    Outputs out(f.out, cfg);
    out.write("estimate.json", j.dump(2) + "\n");
    out.write("queries.csv", log.str());
    out.finish();
    std::cout << "t_hat = " << format_double(trace.t_hat) << "  |t_hat - t| = " << format_double(std::fabs(trace.t_hat - t))
              << "\n";
    return kOk;
  };
}

Work cmd_rates(json cfg, const Flags& f) {
  default_c(cfg);
  ExperimentConfig exp = ExperimentConfig::from_json(cfg);
  try {
    exp.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return [=] {
    const SweepResult sweep = run_sweep(exp);
    std::ostringstream csv, svg;
    write_cells_csv(csv, exp, sweep.cells);
    write_loglog_svg(svg, sweep);
    Outputs out(f.out, cfg);
    out.write("rates.csv", csv.str());
    out.write("rates.json", sweep.to_json().dump(2) + "\n");
    out.write("rates.svg", svg.str());
    out.finish();
    std::cout << sweep.fit.to_json().dump(2) << "\n";
    return kOk;
  };
}

Work cmd_lowerbound(json cfg, const Flags& f) {
  default_c(cfg);
  const MarginParams p = params_from(cfg);
  if (!(p.sigma > 0.0)) throw Error(ErrorCode::ConfigError, "sigma: lowerbound needs sigma > 0");
  const double a = json_util::require_number(cfg, "a", "");
  const auto ns = json_util::optional_number_list(cfg, "n", "");
  const auto n = static_cast<std::size_t>(ns && !ns->empty() ? ns->front() : 1000);
  const double step = json_util::optional_number(cfg, "grid_step", "").value_or(default_gap_step(std::max(a, 1e-12), p.sigma));
  return [=] {
    const HypothesisPair pair = make_hypothesis_pair(p, a);
    const KLReport rep = kl_report(pair, n, step);
    json j{{"n", n}, {"a", a}, {"kl", rep.to_json()}};
    for (SamplingMode mode : {SamplingMode::Active, SamplingMode::Passive}) {
      try {
        j["a_star"][std::string(to_string(mode))] = rate_from_kl(p.k, p.sigma, n, mode, {p.c, p.C});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RootNotBracketed) throw;
        j["a_star"][std::string(to_string(mode))] = nullptr;
      }
    }
    Outputs out(f.out, cfg);
    out.write("lowerbound.json", j.dump(2) + "\n");
    out.write("gap_curve.csv", gap_curve_csv(pair.F0, pair.F1, pair.F0.admissible(), 2001));
    out.finish();
    std::cout << j.dump(2) << "\n";
    return kOk;
  };
}

Work cmd_gapscan(json cfg, const Flags& f) {
  default_c(cfg);
  const double k = json_util::require_number(cfg, "k", "");
  const double c = json_util::require_number(cfg, "c", "");
  const double C = json_util::optional_number(cfg, "C", "").value_or(std::max(1.0, c));
  const std::vector<double> fallback{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
  const auto sigmas = json_util::optional_number_list(cfg, "sigma_grid", "").value_or(fallback);
  const auto as = json_util::optional_number_list(cfg, "a_grid", "").value_or(fallback);
  return [=] {
    const ScalingReport rep = verify_gap_scaling(k, c, C, sigmas, as);
    std::string csv = "sigma,a,regime,gap,predicted,ratio\n";
    for (const ScalingCell& cell : rep.cells) {
      csv += format_double(cell.sigma) + ',' + format_double(cell.a) + ',' + std::string(to_string(cell.regime)) + ',' +
             format_double(cell.gap) + ',' + format_double(cell.predicted) + ',' + format_double(cell.ratio) + '\n';
    }
    Outputs out(f.out, cfg);
    out.write("gapscan.json", rep.to_json().dump(2) + "\n");
    out.write("gapscan.csv", csv);
    out.finish();
    std::cout << "gap scaling " << (rep.pass ? "within" : "outside") << " [1/8, 8]\n";
    return kOk;
  };
}

Work cmd_selftest(json cfg, const Flags& f) {
  AcceptanceOptions opt;
  opt.seed = static_cast<std::uint64_t>(json_util::optional_int(cfg, "seed", "").value_or(static_cast<std::int64_t>(opt.seed)));
  if (auto t = json_util::optional_int(cfg, "trials", "")) {
    if (*t < 50) throw Error(ErrorCode::ConfigError, "trials: must be >= 50");
    opt.trials = static_cast<std::size_t>(*t);
  }
  if (auto only = json_util::optional_number_list(cfg, "criteria", "")) {
    for (double v : *only) opt.only.insert(static_cast<int>(v));
  }
  opt.out_dir = f.out;
  return [=] {
    Outputs out(f.out, cfg);
    const AcceptanceRun run = run_acceptance(opt, std::cout);
    out.finish();
    std::cout << (run.all_pass() ? "selftest: all criteria pass" : "selftest: FAILED") << "\n";
    return run.all_pass() ? kOk : kSelftest;
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold learning under Berkson feature noise"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "RNG seed");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--trials", flags.trials, "trials per cell");
    sub->add_option("--n", flags.n, "sample sizes, comma separated");
    sub->add_option("--sigma", flags.sigma, "noise half-width");
    sub->add_option("--k", flags.k, "margin exponent");
    sub->add_option("--mode", flags.mode, "passive or active");
    sub->add_option("--c", flags.c, "margin constant");
    sub->add_option("--t", flags.t, "threshold, or randomized / worst_case");
    sub->add_option("--a", flags.a, "separation of the hypothesis pair");
  };

  struct Entry {
    const char* name;
    const char* help;
    Work (*make)(json, const Flags&);
  };
  const std::vector<Entry> entries{
      {"convolve", "tabulate m and its convolution F", cmd_convolve},
      {"estimate", "run one estimation trial and print its trace", cmd_estimate},
      {"rates", "Monte-Carlo rate sweep with a log-log fit", cmd_rates},
      {"lowerbound", "KL report for a hypothesis pair", cmd_lowerbound},
      {"gapscan", "max-gap scaling over sigma and a grids", cmd_gapscan},
      {"selftest", "run the acceptance criteria", cmd_selftest},
  };
  std::vector<CLI::App*> subs;
  for (const Entry& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common(sub);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  Work work;
  try {
    const json cfg = load_config(flags);
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) work = entries[i].make(cfg, flags);
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }
  try {
    return work();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
