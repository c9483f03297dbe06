#include "spgg/baselines.hpp"

#include <cmath>
#include <string>

#include "spgg/error.hpp"
#include "spgg/parallel.hpp"

namespace spgg {

namespace {

SplitMix64 baseline_stream(std::uint64_t seed, std::int64_t epoch, std::size_t agent) {
  return SplitMix64(
      agent_stream_seed(seed, StreamTag::kBaseline, static_cast<std::uint64_t>(epoch), agent));
}

void check_config(const QConfig& c) {
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw ConfigError("q_alpha must lie in (0, 1]");
  if (!(c.gamma >= 0.0 && c.gamma < 1.0)) throw ConfigError("q_gamma must lie in [0, 1)");
  if (!(c.epsilon >= 0.0 && c.epsilon <= 1.0)) throw ConfigError("q_epsilon must lie in [0, 1]");
}

}  // namespace

QTables::QTables(std::size_t agents, QConfig config)
    : agents_(agents), config_(config), values_(agents * kNeighborhoodCodes * 2, 0.0) {
  check_config(config_);
}

int q_state_index(const StrategyGrid& grid, Cell c) { return neighborhood_code(grid, c); }

StrategyGrid q_epoch(QTables& tables, const StrategyGrid& grid, double r, std::uint64_t seed,
                     std::int64_t epoch, int workers) {
  if (tables.agents() != grid.size()) {
    throw InvalidInput("Q-table count " + std::to_string(tables.agents()) +
                       " does not match lattice size " + std::to_string(grid.size()));
  }
  const QConfig& cfg = tables.config();
  std::vector<Strategy> actions(grid.size());
  std::vector<int> states(grid.size());
  parallel_for(grid.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      SplitMix64 rng = baseline_stream(seed, epoch, i);
      const int s = q_state_index(grid, grid.cell(i));
      states[i] = s;
      Strategy a;
      if (rng.bernoulli(cfg.epsilon)) {
        a = static_cast<Strategy>(rng.below(2));
      } else {
        const double q0 = tables.at(i, s, kDefect);
        const double q1 = tables.at(i, s, kCooperate);
        if (q0 == q1) {
          a = static_cast<Strategy>(rng.below(2));
        } else {
          a = q1 > q0 ? kCooperate : kDefect;
        }
      }
      actions[i] = a;
    }
  });

  StrategyGrid next(grid.side(), std::move(actions));
  const PayoffField field = payoff_field(next, r);
  parallel_for(grid.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const int s_next = q_state_index(next, next.cell(i));
      const double best_next =
          std::max(tables.at(i, s_next, kDefect), tables.at(i, s_next, kCooperate));
      double& q = tables.at(i, states[i], next[i]);
      q += cfg.alpha * (field.values[i] + cfg.gamma * best_next - q);
    }
  });
  return next;
}

double fermi_adopt_prob(double payoff_self, double payoff_neighbor, double noise) {
  if (!(noise > 0.0)) throw ConfigError("fermi_k must be > 0");
  return 1.0 / (1.0 + std::exp((payoff_self - payoff_neighbor) / noise));
}

StrategyGrid fermi_epoch(const StrategyGrid& grid, double r, const FermiConfig& config,
                         std::uint64_t seed, std::int64_t epoch, int workers) {
  if (!(config.noise > 0.0)) throw ConfigError("fermi_k must be > 0");
  const PayoffField field = payoff_field(grid, r);
  std::vector<Strategy> next(grid.cells());
  parallel_for(grid.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      SplitMix64 rng = baseline_stream(seed, epoch, i);
      const auto neighbors = von_neumann_neighbors(grid.cell(i), grid.side());
      const std::size_t j = grid.index(neighbors[rng.below(4)]);
      const double w = fermi_adopt_prob(field.values[i], field.values[j], config.noise);
      if (grid[j] != grid[i] && rng.bernoulli(w)) next[i] = grid[j];
    }
  });
  return StrategyGrid(grid.side(), std::move(next));
}

namespace {

template <class Step>
RunTrace run_dynamics(const BaselineRun& run, const StateObserver& on_state, Step&& step) {
  if (run.epochs < 1) throw ConfigError("epochs must be >= 1");
  SplitMix64 init_rng(derive_seed(run.seed, static_cast<std::uint64_t>(StreamTag::kInit), 0));
  StrategyGrid grid = init_lattice(run.side, run.init, init_rng);
  RunTrace trace;
  auto observe = [&](std::int64_t t) {
    const PayoffField field = payoff_field(grid, run.r);
    trace.series.rows.push_back(record_epoch(grid, field, t));
    if (on_state) on_state(t, grid, field);
  };
  observe(0);
  for (std::int64_t epoch = 0; epoch < run.epochs; ++epoch) {
    grid = step(grid, epoch);
    observe(epoch + 1);
  }
  trace.final_grid = grid;
  return trace;
}

}  // namespace

RunTrace run_qlearning(const BaselineRun& run, const QConfig& config, const StateObserver& on_state) {
  QTables tables(static_cast<std::size_t>(run.side) * static_cast<std::size_t>(run.side), config);
  return run_dynamics(run, on_state, [&](const StrategyGrid& grid, std::int64_t epoch) {
    return q_epoch(tables, grid, run.r, run.seed, epoch, run.workers);
  });
}

RunTrace run_fermi(const BaselineRun& run, const FermiConfig& config, const StateObserver& on_state) {
  return run_dynamics(run, on_state, [&](const StrategyGrid& grid, std::int64_t epoch) {
    return fermi_epoch(grid, run.r, config, run.seed, epoch, run.workers);
  });
}

}  // namespace spgg
