#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spgg/lattice.hpp"

namespace spgg {

/// Population state after `epoch` updates (epoch 0 is the initial lattice).
struct MetricsRow {
  std::int64_t epoch = 0;
  double coop_fraction = 0.0;
  double defect_fraction = 0.0;
  double mean_payoff = 0.0;
  double global_g = 0.0;
  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct MetricsSeries {
  std::vector<MetricsRow> rows;

  double final_coop_fraction() const { return rows.empty() ? 0.0 : rows.back().coop_fraction; }
};

/// Outcome of any dynamics loop: the time series plus the final lattice.
struct RunTrace {
  MetricsSeries series;
  StrategyGrid final_grid{2};
};

struct RunSummary {
  std::uint64_t seed = 0;
  double final_coop_fraction = 0.0;
  std::int64_t epochs_run = 0;
};

struct AggregateStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sample_std = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

MetricsRow record_epoch(const StrategyGrid& grid, const PayoffField& field, std::int64_t epoch);

/// Header `epoch,coop_fraction,defect_fraction,mean_payoff,global_g`, reals at 6 d.p.
void write_timeseries_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path);
std::vector<MetricsRow> read_timeseries_csv(const std::filesystem::path& path);

/// Binary PGM (P5): 255 cooperator, 0 defector, row 0 first.
void write_snapshot(const StrategyGrid& grid, const std::filesystem::path& path);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Purple -> blue -> green -> yellow ramp over t in [0, 1]. Channels round
/// half down.
Rgb heat_color(double t);

/// Binary PPM (P6) of the min-max normalized field; a constant field maps to t = 0.5.
void write_heatmap(const PayoffField& field, const std::filesystem::path& path);

/// Mean, sample std (n - 1) and the normal 95% interval clipped to [0, 1].
/// Throws InsufficientReplicates for fewer than two summaries.
AggregateStats aggregate_runs(std::span<const RunSummary> summaries);

struct SummaryRow {
  double param_value = 0.0;
  AggregateStats stats;
};

/// Header `param_value,n,mean,std,ci_low,ci_high`.
void write_summary_csv(std::span<const SummaryRow> rows, const std::filesystem::path& path);

/// Per-run finals, header `param_value,replicate,seed,final_coop_fraction,epochs_run`.
struct RunRecord {
  double param_value = 0.0;
  int replicate = 0;
  RunSummary summary;
};
void write_runs_csv(std::span<const RunRecord> runs, const std::filesystem::path& path);

/// Largest 4-connected (toroidal) component of cells holding `s`.
std::size_t largest_cluster(const StrategyGrid& grid, Strategy s);

}  // namespace spgg
