// pgg: run, sweep and replicate spatial public goods game experiments.
//
//   pgg run --config cfg.json [--set key=value ...]
//   pgg sweep --config cfg.json --param r --values 3.0:6.0:0.1 --replicates 5
//   pgg replicate --config cfg.json -n 50
//
// Exit codes: 0 success, 1 run failure, 2 configuration error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spgg/error.hpp"
#include "spgg/experiment.hpp"

namespace {

constexpr int kExitRunFailure = 1;
constexpr int kExitConfigError = 2;

spgg::ExperimentConfig load(const std::string& path, const std::vector<std::string>& sets) {
  if (path.empty()) return spgg::parse_config("{}", sets);
  return spgg::load_config_file(path, sets);
}

void print_stats(const spgg::AggregateStats& s) {
  std::printf("n=%zu mean=%.6f std=%.6f ci=[%.6f, %.6f]\n", s.n, s.mean, s.sample_std, s.ci_low,
              s.ci_high);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial public goods game simulator (GRPO-GCC, GRPO, Q-learning, Fermi)"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;

  auto* run = app.add_subcommand("run", "Run a single configuration");
  run->add_option("--config", config_path, "JSON configuration file");
  run->add_option("--set", sets, "Override a field: key=value (repeatable)");

  std::string param;
  std::string values;
  int replicates = 1;
  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter over a value list");
  sweep->add_option("--config", config_path, "JSON configuration file");
  sweep->add_option("--set", sets, "Override a field: key=value (repeatable)");
  sweep->add_option("--param", param, "Config field to vary (r, beta, eta, zeta, rho, ...)")->required();
  sweep->add_option("--values", values, "start:stop:step or comma list")->required();
  sweep->add_option("--replicates", replicates, "Runs per value")->check(CLI::PositiveNumber);

  int n = 2;
  auto* replicate = app.add_subcommand("replicate", "Independent replicate campaign");
  replicate->add_option("--config", config_path, "JSON configuration file");
  replicate->add_option("--set", sets, "Override a field: key=value (repeatable)");
  replicate->add_option("-n", n, "Number of runs (>= 2)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  try {
    const spgg::ExperimentConfig config = load(config_path, sets);
    if (run->parsed()) {
      const auto outcome = spgg::execute_run(config);
      std::printf("%s final_coop_fraction=%.6f epochs=%lld dir=%s\n",
                  std::string(spgg::algorithm_name(config.algorithm)).c_str(),
                  outcome.summary.final_coop_fraction,
                  static_cast<long long>(outcome.summary.epochs_run), config.run_dir().c_str());
      return 0;
    }
    if (sweep->parsed()) {
      spgg::SweepSpec spec;
      spec.param = param;
      spec.values = spgg::parse_value_list(values);
      spec.replicates = replicates;
      spec.base = config;
      const auto result = spgg::run_sweep(spec);
      for (const auto& row : result.rows) {
        std::printf("%s=%g ", param.c_str(), row.param_value);
        print_stats(row.stats);
      }
      for (const auto& f : result.failures) {
        std::fprintf(stderr, "run failed (%s=%g, replicate %d): %s\n", param.c_str(), f.param_value,
                     f.replicate, f.message.c_str());
      }
      std::printf("summary: %s\n", (result.directory / "summary.csv").c_str());
      return result.failures.empty() ? 0 : kExitRunFailure;
    }
    if (replicate->parsed()) {
      const auto result = spgg::run_replicates(config, n);
      print_stats(result.stats);
      std::printf("summary: %s\n", (result.directory / "summary.csv").c_str());
      return 0;
    }
  } catch (const spgg::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfigError;
  } catch (const spgg::InsufficientReplicates& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failed: %s\n", e.what());
    return kExitRunFailure;
  }
  return 0;
}
