#include "spgg/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spgg/error.hpp"

namespace spgg {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path, bool binary) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

constexpr std::array<std::array<double, 3>, 5> kAnchors{{
    {68, 1, 84},
    {59, 82, 139},
    {33, 145, 140},
    {94, 201, 98},
    {253, 231, 37},
}};

}  // namespace

MetricsRow record_epoch(const StrategyGrid& grid, const PayoffField& field, std::int64_t epoch) {
  const auto n = static_cast<double>(grid.size());
  const auto coop = static_cast<double>(grid.cooperator_count());
  MetricsRow row;
  row.epoch = epoch;
  row.coop_fraction = coop / n;
  row.defect_fraction = (n - coop) / n;
  row.mean_payoff = field.mean();
  row.global_g = row.coop_fraction;
  return row;
}

void write_timeseries_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path) {
  auto out = open_for_write(path, true);
  out << "epoch,coop_fraction,defect_fraction,mean_payoff,global_g\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << fixed6(r.coop_fraction) << ',' << fixed6(r.defect_fraction) << ','
        << fixed6(r.mean_payoff) << ',' << fixed6(r.global_g) << '\n';
  }
  finish(out, path);
}

std::vector<MetricsRow> read_timeseries_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "epoch,coop_fraction,defect_fraction,mean_payoff,global_g") {
    throw IoError("unexpected timeseries header in " + path.string());
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    MetricsRow r;
    char c1, c2, c3, c4;
    std::istringstream ls(line);
    if (!(ls >> r.epoch >> c1 >> r.coop_fraction >> c2 >> r.defect_fraction >> c3 >>
          r.mean_payoff >> c4 >> r.global_g) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',') {
      throw IoError("malformed timeseries row in " + path.string() + ": " + line);
    }
    rows.push_back(r);
  }
  return rows;
}

void write_snapshot(const StrategyGrid& grid, const std::filesystem::path& path) {
  auto out = open_for_write(path, true);
  out << "P5\n" << grid.side() << ' ' << grid.side() << "\n255\n";
  std::string payload(grid.size(), '\0');
  for (std::size_t i = 0; i < grid.size(); ++i) {
    payload[i] = grid[i] == kCooperate ? static_cast<char>(255) : '\0';
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  finish(out, path);
}

Rgb heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double scaled = t * 4.0;
  const auto seg = std::min<std::size_t>(static_cast<std::size_t>(scaled), 3);
  const double frac = scaled - static_cast<double>(seg);
  auto channel = [&](std::size_t k) {
    const double v = kAnchors[seg][k] + frac * (kAnchors[seg + 1][k] - kAnchors[seg][k]);
    return static_cast<std::uint8_t>(std::clamp(std::ceil(v - 0.5), 0.0, 255.0));
  };
  return {channel(0), channel(1), channel(2)};
}

void write_heatmap(const PayoffField& field, const std::filesystem::path& path) {
  if (field.values.size() != static_cast<std::size_t>(field.side) * static_cast<std::size_t>(field.side)) {
    throw InvalidInput("payoff field size does not match its side");
  }
  const auto [lo_it, hi_it] = std::minmax_element(field.values.begin(), field.values.end());
  const double lo = field.values.empty() ? 0.0 : *lo_it;
  const double hi = field.values.empty() ? 0.0 : *hi_it;
  auto out = open_for_write(path, true);
  out << "P6\n" << field.side << ' ' << field.side << "\n255\n";
  std::string payload;
  payload.reserve(field.values.size() * 3);
  for (double v : field.values) {
    const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    const Rgb c = heat_color(t);
    payload.push_back(static_cast<char>(c.r));
    payload.push_back(static_cast<char>(c.g));
    payload.push_back(static_cast<char>(c.b));
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  finish(out, path);
}

AggregateStats aggregate_runs(std::span<const RunSummary> summaries) {
  if (summaries.size() < 2) {
    throw InsufficientReplicates("aggregate_runs needs at least 2 replicates, got " +
                                 std::to_string(summaries.size()));
  }
  AggregateStats s;
  s.n = summaries.size();
  const auto n = static_cast<double>(s.n);
  double sum = 0.0;
  for (const auto& r : summaries) sum += r.final_coop_fraction;
  s.mean = sum / n;
  double ss = 0.0;
  for (const auto& r : summaries) {
    const double d = r.final_coop_fraction - s.mean;
    ss += d * d;
  }
  s.sample_std = std::sqrt(ss / (n - 1.0));
  const double half = 1.96 * s.sample_std / std::sqrt(n);
  s.ci_low = std::clamp(s.mean - half, 0.0, 1.0);
  s.ci_high = std::clamp(s.mean + half, 0.0, 1.0);
  return s;
}

void write_summary_csv(std::span<const SummaryRow> rows, const std::filesystem::path& path) {
  auto out = open_for_write(path, true);
  out << "param_value,n,mean,std,ci_low,ci_high\n";
  for (const auto& r : rows) {
    out << fixed6(r.param_value) << ',' << r.stats.n << ',' << fixed6(r.stats.mean) << ','
        << fixed6(r.stats.sample_std) << ',' << fixed6(r.stats.ci_low) << ','
        << fixed6(r.stats.ci_high) << '\n';
  }
  finish(out, path);
}

void write_runs_csv(std::span<const RunRecord> runs, const std::filesystem::path& path) {
  auto out = open_for_write(path, true);
  out << "param_value,replicate,seed,final_coop_fraction,epochs_run\n";
  for (const auto& r : runs) {
    out << fixed6(r.param_value) << ',' << r.replicate << ',' << r.summary.seed << ','
        << fixed6(r.summary.final_coop_fraction) << ',' << r.summary.epochs_run << '\n';
  }
  finish(out, path);
}

std::size_t largest_cluster(const StrategyGrid& grid, Strategy s) {
  std::vector<char> seen(grid.size(), 0);
  std::vector<std::size_t> stack;
  std::size_t best = 0;
  for (std::size_t start = 0; start < grid.size(); ++start) {
    if (seen[start] || grid[start] != s) continue;
    std::size_t size = 0;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++size;
      for (Cell n : von_neumann_neighbors(grid.cell(i), grid.side())) {
        const std::size_t j = grid.index(n);
        if (!seen[j] && grid[j] == s) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    best = std::max(best, size);
  }
  return best;
}

}  // namespace spgg
