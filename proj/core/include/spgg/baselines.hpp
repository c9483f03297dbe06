#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spgg/lattice.hpp"
#include "spgg/metrics.hpp"
#include "spgg/random.hpp"

namespace spgg {

struct QConfig {
  double alpha = 0.1;
  double gamma = 0.9;
  double epsilon = 0.02;
};

/// One 32-state x 2-action table per agent, stored contiguously.
class QTables {
 public:
  QTables(std::size_t agents, QConfig config);

  std::size_t agents() const noexcept { return agents_; }
  const QConfig& config() const noexcept { return config_; }

  double& at(std::size_t agent, int state, Strategy action) {
    return values_[offset(agent, state, action)];
  }
  double at(std::size_t agent, int state, Strategy action) const {
    return values_[offset(agent, state, action)];
  }

 private:
  std::size_t offset(std::size_t agent, int state, Strategy action) const noexcept {
    return (agent * kNeighborhoodCodes + static_cast<std::size_t>(state)) * 2 + action;
  }

  std::size_t agents_;
  QConfig config_;
  std::vector<double> values_;
};

/// Bit 4 = self, bits 3..0 = (N, S, W, E).
int q_state_index(const StrategyGrid& grid, Cell c);

/// One synchronous Q-learning epoch: epsilon-greedy actions form S_{t+1},
/// rewards are raw payoffs on S_{t+1}, then one Bellman update per agent.
StrategyGrid q_epoch(QTables& tables, const StrategyGrid& grid, double r, std::uint64_t seed,
                     std::int64_t epoch, int workers = 1);

struct FermiConfig {
  double noise = 0.5;  // K
};

/// 1 / (1 + exp((self - neighbor) / K))
double fermi_adopt_prob(double payoff_self, double payoff_neighbor, double noise);

/// One synchronous imitation epoch against the pre-update payoff field.
StrategyGrid fermi_epoch(const StrategyGrid& grid, double r, const FermiConfig& config,
                         std::uint64_t seed, std::int64_t epoch, int workers = 1);

struct BaselineRun {
  int side = 50;
  double r = 4.0;
  std::int64_t epochs = 1000;
  InitMode init = InitMode::half_half();
  std::uint64_t seed = 0;
  int workers = 1;
};

using StateObserver = std::function<void(std::int64_t, const StrategyGrid&, const PayoffField&)>;

RunTrace run_qlearning(const BaselineRun& run, const QConfig& config,
                       const StateObserver& on_state = {});
RunTrace run_fermi(const BaselineRun& run, const FermiConfig& config,
                   const StateObserver& on_state = {});

}  // namespace spgg
