#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spgg/baselines.hpp"
#include "spgg/grpo.hpp"
#include "spgg/metrics.hpp"

namespace spgg {

enum class Algorithm { kGrpoGcc, kGrpo, kQLearning, kFermi };

std::string_view algorithm_name(Algorithm a);

/// Every knob of one run. Defaults reproduce the full-scale experimental setup.
struct ExperimentConfig {
  Algorithm algorithm = Algorithm::kGrpoGcc;
  int side = 200;
  double r = 4.0;
  double rho = 1.0;
  double alpha = 1e-4;
  double beta = 0.04;
  double clip_eps = 0.2;
  int eta = 8;
  int zeta = 3;
  std::int64_t epochs = 1000;
  InitMode init = InitMode::half_half();
  HiddenWidths hidden;
  int ref_update_period = 1;
  int lr_halve_period = 1000;
  double sigma_guard = 1e-8;
  std::uint64_t seed = 42;
  std::vector<std::int64_t> snapshot_epochs{0, 1, 10, 100, 1000};
  std::string output_dir;  // empty: $PGG_OUTPUT_DIR, else "runs"
  std::string run_id;      // empty: derived from algorithm, L, r and seed
  QConfig q;
  FermiConfig fermi;
  int workers = 1;

  TrainingConfig training() const;
  BaselineRun baseline() const;
  /// Resolved output root and run directory.
  std::filesystem::path output_root() const;
  std::filesystem::path run_dir() const;
};

/// Parses a JSON object; missing keys keep their defaults, unknown keys and
/// violated invariants raise ConfigError naming the field.
ExperimentConfig parse_config(std::string_view json_text);

/// Same, with `key=value` overrides applied on top of the document. Values are
/// read as JSON when they parse, otherwise as strings.
ExperimentConfig parse_config(std::string_view json_text, const std::vector<std::string>& overrides);

/// Serializes every field back to JSON (round-trips through parse_config).
std::string config_to_json(const ExperimentConfig& config);

ExperimentConfig load_config_file(const std::filesystem::path& path,
                                  const std::vector<std::string>& overrides = {});

struct RunOutcome {
  RunSummary summary;
  RunTrace trace;
};

/// Runs one configuration, writing timeseries.csv, snap_{t}.pgm and
/// heat_{t}.ppm under run_dir(). The partial time series is flushed on failure.
RunOutcome execute_run(const ExperimentConfig& config);
RunSummary run_single(const ExperimentConfig& config);

/// "start:stop:step" (inclusive) or "a,b,c".
std::vector<double> parse_value_list(std::string_view text);

struct SweepSpec {
  std::string param;
  std::vector<double> values;
  int replicates = 1;
  ExperimentConfig base;
  std::string sweep_id;  // empty: "sweep_{param}"
};

struct SweepFailure {
  double param_value = 0.0;
  int replicate = 0;
  std::string message;
};

struct SweepResult {
  std::vector<SummaryRow> rows;
  std::vector<RunRecord> runs;
  std::vector<SweepFailure> failures;
  std::filesystem::path directory;
};

/// Child seed of (value index, replicate) under the base config's master seed.
std::uint64_t child_seed(std::uint64_t master, std::size_t value_index, std::size_t replicate);

/// Runs every value x replicate, aggregates, and writes summary.csv and runs.csv.
SweepResult run_sweep(const SweepSpec& spec);

enum class SeedPolicy { kDerived, kFixed };

struct ReplicateResult {
  AggregateStats stats;
  std::vector<RunSummary> runs;
  std::filesystem::path directory;
};

/// n >= 2 runs, derived seeds by default; kFixed reuses the config seed.
ReplicateResult run_replicates(const ExperimentConfig& config, int n,
                               SeedPolicy policy = SeedPolicy::kDerived);

}  // namespace spgg
