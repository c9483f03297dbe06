#include "spgg/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spgg/error.hpp"

namespace spgg {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownKeys = {
    "algorithm",   "L",           "r",           "rho",
    "alpha",       "beta",        "clip_eps",    "eta",
    "zeta",        "epochs",      "init_mode",   "init_p",
    "hidden",      "ref_update_period",          "lr_halve_period",
    "sigma_guard", "seed",        "snapshot_epochs",
    "output_dir",  "run_id",      "q_alpha",     "q_gamma",
    "q_epsilon",   "fermi_k",     "workers",
};

const std::set<std::string> kIntegerKeys = {"L",      "eta",  "zeta",
                                            "epochs", "seed", "ref_update_period",
                                            "lr_halve_period", "workers"};

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + " " + what);
}

double get_real(const json& doc, const char* key, double fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (!v.is_number()) fail(key, "must be a number");
  return v.get<double>();
}

std::int64_t get_int(const json& doc, const char* key, std::int64_t fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d)) return static_cast<std::int64_t>(d);
  }
  fail(key, "must be an integer");
}

std::string get_string(const json& doc, const char* key, const std::string& fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (!v.is_string()) fail(key, "must be a string");
  return v.get<std::string>();
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "grpo_gcc") return Algorithm::kGrpoGcc;
  if (name == "grpo") return Algorithm::kGrpo;
  if (name == "qlearning") return Algorithm::kQLearning;
  if (name == "fermi") return Algorithm::kFermi;
  fail("algorithm", "must be one of grpo_gcc, grpo, qlearning, fermi (got '" + name + "')");
}

std::string_view init_name(InitMode::Kind k) {
  switch (k) {
    case InitMode::Kind::kHalfHalf: return "half_half";
    case InitMode::Kind::kBernoulli: return "bernoulli";
    case InitMode::Kind::kAllDefect: return "all_defect";
    case InitMode::Kind::kAllCoop: return "all_coop";
  }
  return "half_half";
}

InitMode::Kind parse_init(const std::string& name) {
  if (name == "half_half") return InitMode::Kind::kHalfHalf;
  if (name == "bernoulli") return InitMode::Kind::kBernoulli;
  if (name == "all_defect") return InitMode::Kind::kAllDefect;
  if (name == "all_coop") return InitMode::Kind::kAllCoop;
  fail("init_mode", "must be one of half_half, bernoulli, all_defect, all_coop (got '" + name + "')");
}

void validate(ExperimentConfig& c) {
  if (c.side < 2) fail("L", "must be >= 2");
  if (!(std::isfinite(c.r) && c.r > 0.0)) fail("r", "must be > 0");
  if (!(c.rho >= 0.0)) fail("rho", "must be >= 0");
  if (!(c.alpha > 0.0)) fail("alpha", "must be > 0");
  if (!(c.beta >= 0.0)) fail("beta", "must be >= 0");
  if (!(c.clip_eps > 0.0 && c.clip_eps < 1.0)) fail("clip_eps", "must lie in (0, 1)");
  if (c.eta < 2) fail("eta", "must be >= 2");
  if (c.zeta < 1) fail("zeta", "must be >= 1");
  if (c.epochs < 1) fail("epochs", "must be >= 1");
  if (c.hidden.h1 < 1 || c.hidden.h2 < 1 || c.hidden.h3 < 1) fail("hidden", "widths must be positive");
  if (c.ref_update_period < 1) fail("ref_update_period", "must be >= 1");
  if (c.lr_halve_period < 1) fail("lr_halve_period", "must be >= 1");
  if (!(c.sigma_guard >= 0.0)) fail("sigma_guard", "must be >= 0");
  if (!(c.init.p >= 0.0 && c.init.p <= 1.0)) fail("init_p", "must lie in [0, 1]");
  if (!(c.q.alpha > 0.0 && c.q.alpha <= 1.0)) fail("q_alpha", "must lie in (0, 1]");
  if (!(c.q.gamma >= 0.0 && c.q.gamma < 1.0)) fail("q_gamma", "must lie in [0, 1)");
  if (!(c.q.epsilon >= 0.0 && c.q.epsilon <= 1.0)) fail("q_epsilon", "must lie in [0, 1]");
  if (!(c.fermi.noise > 0.0)) fail("fermi_k", "must be > 0");
  if (c.workers < 1) fail("workers", "must be >= 1");
  for (auto t : c.snapshot_epochs) {
    if (t < 0) fail("snapshot_epochs", "entries must be >= 0");
  }
  if (c.algorithm == Algorithm::kGrpo) c.rho = 0.0;
}

ExperimentConfig from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& item : doc.items()) {
    if (!kKnownKeys.contains(item.key())) {
      throw ConfigError("unknown configuration key '" + item.key() + "'");
    }
  }
  ExperimentConfig c;
  c.algorithm = parse_algorithm(get_string(doc, "algorithm", "grpo_gcc"));
  c.side = static_cast<int>(get_int(doc, "L", c.side));
  c.r = get_real(doc, "r", c.r);
  c.rho = get_real(doc, "rho", c.rho);
  c.alpha = get_real(doc, "alpha", c.alpha);
  c.beta = get_real(doc, "beta", c.beta);
  c.clip_eps = get_real(doc, "clip_eps", c.clip_eps);
  c.eta = static_cast<int>(get_int(doc, "eta", c.eta));
  c.zeta = static_cast<int>(get_int(doc, "zeta", c.zeta));
  c.epochs = get_int(doc, "epochs", c.epochs);
  c.init.kind = parse_init(get_string(doc, "init_mode", "half_half"));
  c.init.p = get_real(doc, "init_p", 0.5);
  if (doc.contains("hidden")) {
    const json& h = doc.at("hidden");
    if (!h.is_array() || h.size() != 3) fail("hidden", "must be an array of three integers");
    for (const auto& v : h) {
      if (!v.is_number_integer()) fail("hidden", "must be an array of three integers");
    }
    c.hidden = {h[0].get<int>(), h[1].get<int>(), h[2].get<int>()};
  }
  c.ref_update_period = static_cast<int>(get_int(doc, "ref_update_period", c.ref_update_period));
  c.lr_halve_period = static_cast<int>(get_int(doc, "lr_halve_period", c.lr_halve_period));
  c.sigma_guard = get_real(doc, "sigma_guard", c.sigma_guard);
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (s.is_number_unsigned()) {
      c.seed = s.get<std::uint64_t>();
    } else if (s.is_number_integer() && s.get<std::int64_t>() >= 0) {
      c.seed = static_cast<std::uint64_t>(s.get<std::int64_t>());
    } else {
      fail("seed", "must be a non-negative integer");
    }
  }
  if (doc.contains("snapshot_epochs")) {
    const json& s = doc.at("snapshot_epochs");
    if (!s.is_array()) fail("snapshot_epochs", "must be an array of integers");
    c.snapshot_epochs.clear();
    for (const auto& v : s) {
      if (!v.is_number_integer()) fail("snapshot_epochs", "must be an array of integers");
      c.snapshot_epochs.push_back(v.get<std::int64_t>());
    }
  }
  c.output_dir = get_string(doc, "output_dir", "");
  c.run_id = get_string(doc, "run_id", "");
  c.q.alpha = get_real(doc, "q_alpha", c.q.alpha);
  c.q.gamma = get_real(doc, "q_gamma", c.q.gamma);
  c.q.epsilon = get_real(doc, "q_epsilon", c.q.epsilon);
  c.fermi.noise = get_real(doc, "fermi_k", c.fermi.noise);
  c.workers = static_cast<int>(get_int(doc, "workers", c.workers));
  validate(c);
  return c;
}

json to_json(const ExperimentConfig& c) {
  json doc;
  doc["algorithm"] = std::string(algorithm_name(c.algorithm));
  doc["L"] = c.side;
  doc["r"] = c.r;
  doc["rho"] = c.rho;
  doc["alpha"] = c.alpha;
  doc["beta"] = c.beta;
  doc["clip_eps"] = c.clip_eps;
  doc["eta"] = c.eta;
  doc["zeta"] = c.zeta;
  doc["epochs"] = c.epochs;
  doc["init_mode"] = std::string(init_name(c.init.kind));
  doc["init_p"] = c.init.p;
  doc["hidden"] = {c.hidden.h1, c.hidden.h2, c.hidden.h3};
  doc["ref_update_period"] = c.ref_update_period;
  doc["lr_halve_period"] = c.lr_halve_period;
  doc["sigma_guard"] = c.sigma_guard;
  doc["seed"] = c.seed;
  doc["snapshot_epochs"] = c.snapshot_epochs;
  doc["output_dir"] = c.output_dir;
  doc["run_id"] = c.run_id;
  doc["q_alpha"] = c.q.alpha;
  doc["q_gamma"] = c.q.gamma;
  doc["q_epsilon"] = c.q.epsilon;
  doc["fermi_k"] = c.fermi.noise;
  doc["workers"] = c.workers;
  return doc;
}

json parse_document(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed configuration document: ") + e.what());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json parsed = json::parse(value, nullptr, false);
  doc[key] = parsed.is_discarded() ? json(value) : parsed;
}

json with_param(const ExperimentConfig& base, const std::string& param, double value) {
  if (!kKnownKeys.contains(param)) throw ConfigError("unknown sweep parameter '" + param + "'");
  json doc = to_json(base);
  if (kIntegerKeys.contains(param)) {
    if (value != std::floor(value)) fail(param, "must be an integer");
    doc[param] = static_cast<std::int64_t>(value);
  } else {
    doc[param] = value;
  }
  return doc;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kGrpoGcc: return "grpo_gcc";
    case Algorithm::kGrpo: return "grpo";
    case Algorithm::kQLearning: return "qlearning";
    case Algorithm::kFermi: return "fermi";
  }
  return "grpo_gcc";
}

TrainingConfig ExperimentConfig::training() const {
  TrainingConfig t;
  t.side = side;
  t.r = r;
  t.hyper.clip_eps = clip_eps;
  t.hyper.beta = beta;
  t.hyper.eta = eta;
  t.hyper.zeta = zeta;
  t.hyper.rho = algorithm == Algorithm::kGrpo ? 0.0 : rho;
  t.hyper.sigma_guard = sigma_guard;
  t.hyper.ref_update_period = ref_update_period;
  t.schedule = {alpha, lr_halve_period};
  t.widths = hidden;
  t.epochs = epochs;
  t.init = init;
  t.seed = seed;
  t.workers = workers;
  return t;
}

BaselineRun ExperimentConfig::baseline() const {
  return {side, r, epochs, init, seed, workers};
}

std::filesystem::path ExperimentConfig::output_root() const {
  if (!output_dir.empty()) return output_dir;
  if (const char* env = std::getenv("PGG_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return "runs";
}

std::filesystem::path ExperimentConfig::run_dir() const {
  if (!run_id.empty()) return output_root() / run_id;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s_L%d_r%.2f_seed%llu", std::string(algorithm_name(algorithm)).c_str(),
                side, r, static_cast<unsigned long long>(seed));
  return output_root() / buf;
}

ExperimentConfig parse_config(std::string_view json_text) { return from_json(parse_document(json_text)); }

ExperimentConfig parse_config(std::string_view json_text, const std::vector<std::string>& overrides) {
  json doc = parse_document(json_text);
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& o : overrides) apply_override(doc, o);
  return from_json(doc);
}

std::string config_to_json(const ExperimentConfig& config) { return to_json(config).dump(2); }

ExperimentConfig load_config_file(const std::filesystem::path& path,
                                  const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

RunOutcome execute_run(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  validate(cfg);
  const auto dir = cfg.run_dir();
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "config.json", std::ios::trunc);
    out << config_to_json(cfg) << '\n';
  }

  const std::set<std::int64_t> snapshots(cfg.snapshot_epochs.begin(), cfg.snapshot_epochs.end());
  std::vector<MetricsRow> partial;
  auto on_state = [&](std::int64_t t, const StrategyGrid& grid, const PayoffField& field) {
    partial.push_back(record_epoch(grid, field, t));
    if (snapshots.contains(t)) {
      write_snapshot(grid, dir / ("snap_" + std::to_string(t) + ".pgm"));
      write_heatmap(field, dir / ("heat_" + std::to_string(t) + ".ppm"));
    }
  };

  RunOutcome outcome;
  try {
    switch (cfg.algorithm) {
      case Algorithm::kGrpoGcc:
      case Algorithm::kGrpo: {
        RunSinks sinks;
        sinks.on_state = on_state;
        outcome.trace = run_training(cfg.training(), sinks).trace;
        break;
      }
      case Algorithm::kQLearning:
        outcome.trace = run_qlearning(cfg.baseline(), cfg.q, on_state);
        break;
      case Algorithm::kFermi:
        outcome.trace = run_fermi(cfg.baseline(), cfg.fermi, on_state);
        break;
    }
  } catch (...) {
    write_timeseries_csv(partial, dir / "timeseries.csv");
    throw;
  }
  write_timeseries_csv(outcome.trace.series.rows, dir / "timeseries.csv");
  outcome.summary.seed = cfg.seed;
  outcome.summary.final_coop_fraction = outcome.trace.series.final_coop_fraction();
  outcome.summary.epochs_run = cfg.epochs;
  return outcome;
}

RunSummary run_single(const ExperimentConfig& config) { return execute_run(config).summary; }

std::vector<double> parse_value_list(std::string_view text) {
  const std::string s(text);
  auto to_double = [&](const std::string& part) {
    try {
      std::size_t used = 0;
      const double v = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("values: cannot parse '" + part + "' as a number");
    }
  };
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw ConfigError("values: range must be start:stop:step");
    const double start = to_double(parts[0]);
    const double stop = to_double(parts[1]);
    const double step = to_double(parts[2]);
    if (!(step > 0.0) || stop < start) throw ConfigError("values: need step > 0 and stop >= start");
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (long k = 0; k < count; ++k) {
      // Snap to 1e-9 so 3.0:6.0:0.1 yields 3.1, not 3.1000000000000001.
      out.push_back(std::round((start + static_cast<double>(k) * step) * 1e9) / 1e9);
    }
  } else {
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ',');) {
      if (!p.empty()) out.push_back(to_double(p));
    }
  }
  if (out.empty()) throw ConfigError("values: list is empty");
  return out;
}

std::uint64_t child_seed(std::uint64_t master, std::size_t value_index, std::size_t replicate) {
  return derive_seed(master, value_index, replicate);
}

namespace {

AggregateStats aggregate_or_degenerate(std::span<const RunSummary> runs) {
  if (runs.size() >= 2) return aggregate_runs(runs);
  AggregateStats s;
  s.n = runs.size();
  if (runs.empty()) {
    s.mean = s.sample_std = s.ci_low = s.ci_high = std::nan("");
  } else {
    s.mean = s.ci_low = s.ci_high = runs.front().final_coop_fraction;
  }
  return s;
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
  if (spec.values.empty()) throw ConfigError("sweep values must be non-empty");
  if (spec.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (!kKnownKeys.contains(spec.param)) throw ConfigError("unknown sweep parameter '" + spec.param + "'");

  SweepResult result;
  result.directory = spec.base.output_root() / (spec.sweep_id.empty() ? "sweep_" + spec.param : spec.sweep_id);
  std::filesystem::create_directories(result.directory);

  for (std::size_t vi = 0; vi < spec.values.size(); ++vi) {
    const double value = spec.values[vi];
    ExperimentConfig cfg = from_json(with_param(spec.base, spec.param, value));
    cfg.output_dir = result.directory.string();
    std::vector<RunSummary> finals;
    for (int k = 0; k < spec.replicates; ++k) {
      cfg.seed = child_seed(spec.base.seed, vi, static_cast<std::size_t>(k));
      cfg.run_id = spec.param + "_" + format_value(value) + "_rep" + std::to_string(k);
      try {
        RunSummary s = run_single(cfg);
        finals.push_back(s);
        result.runs.push_back({value, k, s});
      } catch (const std::exception& e) {
        result.failures.push_back({value, k, e.what()});
      }
    }
    result.rows.push_back({value, aggregate_or_degenerate(finals)});
  }
  write_summary_csv(result.rows, result.directory / "summary.csv");
  write_runs_csv(result.runs, result.directory / "runs.csv");
  return result;
}

ReplicateResult run_replicates(const ExperimentConfig& config, int n, SeedPolicy policy) {
  if (n < 2) {
    throw InsufficientReplicates("replicate campaigns need n >= 2, got " + std::to_string(n));
  }
  ReplicateResult result;
  result.directory = config.run_dir();
  result.directory += "_replicates";
  std::vector<RunRecord> records;
  for (int k = 0; k < n; ++k) {
    ExperimentConfig cfg = config;
    cfg.seed = policy == SeedPolicy::kDerived ? child_seed(config.seed, 0, static_cast<std::size_t>(k))
                                              : config.seed;
    cfg.output_dir = result.directory.string();
    cfg.run_id = "rep" + std::to_string(k);
    const RunSummary s = run_single(cfg);
    result.runs.push_back(s);
    records.push_back({config.r, k, s});
  }
  result.stats = aggregate_runs(result.runs);
  const SummaryRow row{config.r, result.stats};
  write_summary_csv(std::span<const SummaryRow>(&row, 1), result.directory / "summary.csv");
  write_runs_csv(records, result.directory / "runs.csv");
  return result;
}

}  // namespace spgg
