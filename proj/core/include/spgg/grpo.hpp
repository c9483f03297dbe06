#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "spgg/error.hpp"
#include "spgg/lattice.hpp"
#include "spgg/metrics.hpp"
#include "spgg/policy_net.hpp"
#include "spgg/random.hpp"

namespace spgg {

struct GrpoHyper {
  double clip_eps = 0.2;
  double beta = 0.04;
  int eta = 8;   // candidates per agent (G)
  int zeta = 3;  // inner updates per epoch
  double rho = 1.0;
  double sigma_guard = 1e-8;
  int ref_update_period = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Current policy, the per-epoch sampling snapshot and the KL anchor.
struct PolicyTriplet {
  MlpParams current;
  MlpParams old;
  MlpParams ref;

  static PolicyTriplet from(const MlpParams& initial) { return {initial, initial, initial}; }
};

struct CandidateSet {
  std::size_t agent = 0;
  std::vector<Strategy> actions;
  std::vector<double> old_probs;  // clamped pi_old(a^g | s)
  std::vector<double> rewards;
  std::vector<double> advantages;
};

struct CandidateDraws {
  std::vector<Strategy> actions;
  std::vector<double> old_probs;
};

/// G independent draws from softmax(forward(old, state)) with clamped probabilities.
CandidateDraws sample_candidates(const MlpParams& old, const StateVector& state, int count,
                                 SplitMix64& rng);
/// Same draw given the sampling policy's (unclamped) action probabilities.
CandidateDraws sample_candidates(const Eigen::Vector2d& probs, int count, SplitMix64& rng);

/// GCC-adjusted counterfactual reward of each action for the agent at `c`;
/// every other cell stays at the committed state and g comes from `signal`.
std::vector<double> candidate_rewards(const StrategyGrid& grid, Cell c,
                                      std::span<const Strategy> actions, double r,
                                      const GlobalSignal& signal);

/// (R - mean) / population std, or all zeros when std <= sigma_guard.
std::vector<double> normalize_advantages(std::span<const double> rewards, double sigma_guard);

/// One agent's objective and its derivative w.r.t. the current logits.
struct AgentObjective {
  double objective = 0.0;  // clip term - beta * kl
  double clip_term = 0.0;
  double kl = 0.0;
  Logits dobjective_dlogits = Logits::Zero();
};

/// Clipped surrogate minus the KL penalty, given the current policy's action
/// probabilities and the reference policy's cooperate probability.
AgentObjective agent_objective(const Eigen::Vector2d& probs, double ref_p_coop,
                               const CandidateSet& candidates, const GrpoHyper& hyper);

struct LossResult {
  double objective = 0.0;
  double mean_kl = 0.0;
  Gradients grad;  // gradient of the negated objective
};

/// Single-state objective and the gradient of its negation.
LossResult grpo_gcc_loss(const MlpParams& theta, const CandidateSet& candidates,
                         const StateVector& state, const MlpParams& ref, const GrpoHyper& hyper);

/// All agents' sampled candidates for one epoch.
struct EpochBatch {
  std::vector<int> codes;  // neighborhood code per agent
  std::vector<CandidateSet> candidates;
  double mean_advantage_std = 0.0;
};

EpochBatch build_batch(const MlpParams& old, const StrategyGrid& grid, const GrpoHyper& hyper,
                       double r, const GlobalSignal& signal, std::span<SplitMix64> agent_rngs,
                       int workers);

/// Mean over agents of the per-agent objective. Per-agent logit gradients are
/// summed per neighborhood code in ascending agent order, then backpropagated
/// once per code in ascending code order.
LossResult batch_loss(const MlpParams& theta, const EpochBatch& batch, const MlpParams& ref,
                      const GrpoHyper& hyper, int workers);

struct EpochReport {
  std::int64_t epoch = 0;
  double coop_fraction = 0.0;
  double mean_loss = 0.0;
  double mean_kl = 0.0;
  double mean_advantage_std = 0.0;
  double lr = 0.0;
};

struct EpochResult {
  StrategyGrid next;
  EpochReport report;
};

/// Non-finite loss during an epoch.
class EpochAborted : public NumericError {
 public:
  using NumericError::NumericError;
};

/// One synchronous GRPO(-GCC) epoch. Agent randomness comes from streams keyed
/// by (seed, epoch, agent), so results do not depend on `workers`.
EpochResult train_epoch(PolicyTriplet& policies, const StrategyGrid& grid, const GrpoHyper& hyper,
                        double r, AdamState& opt, const LrSchedule& schedule, std::int64_t epoch,
                        std::uint64_t seed, int workers);

struct TrainingConfig {
  int side = 200;
  double r = 4.0;
  GrpoHyper hyper;
  LrSchedule schedule;
  HiddenWidths widths;
  std::int64_t epochs = 1000;
  InitMode init = InitMode::half_half();
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Callbacks fired during a run. on_state sees S_t for t = 0..T.
struct RunSinks {
  std::function<void(std::int64_t, const StrategyGrid&, const PayoffField&)> on_state;
  std::function<void(const EpochReport&)> on_report;
};

struct TrainingResult {
  RunTrace trace;
  PolicyTriplet policies;
  std::vector<EpochReport> reports;
};

TrainingResult run_training(const TrainingConfig& config, const RunSinks& sinks = {});

}  // namespace spgg
