#include "spgg/grpo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include "spgg/parallel.hpp"

namespace spgg {

void GrpoHyper::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("clip_eps must lie in (0, 1)");
  if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
  if (eta < 2) throw ConfigError("eta must be >= 2");
  if (zeta < 1) throw ConfigError("zeta must be >= 1");
  if (!(rho >= 0.0)) throw ConfigError("rho must be >= 0");
  if (!(sigma_guard >= 0.0)) throw ConfigError("sigma_guard must be >= 0");
  if (ref_update_period < 1) throw ConfigError("ref_update_period must be >= 1");
}

CandidateDraws sample_candidates(const Eigen::Vector2d& probs, int count, SplitMix64& rng) {
  if (count < 2) throw ConfigError("eta must be >= 2");
  const double p_defect = clamp_prob(probs[0]);
  const double p_coop = clamp_prob(probs[1]);
  CandidateDraws draws;
  draws.actions.reserve(static_cast<std::size_t>(count));
  draws.old_probs.reserve(static_cast<std::size_t>(count));
  for (int g = 0; g < count; ++g) {
    const bool coop = rng.bernoulli(p_coop);
    draws.actions.push_back(coop ? kCooperate : kDefect);
    draws.old_probs.push_back(coop ? p_coop : p_defect);
  }
  return draws;
}

CandidateDraws sample_candidates(const MlpParams& old, const StateVector& state, int count,
                                 SplitMix64& rng) {
  return sample_candidates(forward(old, state).probs, count, rng);
}

std::vector<double> candidate_rewards(const StrategyGrid& grid, Cell c,
                                      std::span<const Strategy> actions, double r,
                                      const GlobalSignal& signal) {
  std::array<std::optional<double>, 2> by_action;
  std::vector<double> out;
  out.reserve(actions.size());
  for (Strategy a : actions) {
    auto& slot = by_action.at(a);
    if (!slot) slot = gcc_adjust(counterfactual_payoff(grid, c, a, r), a, signal);
    out.push_back(*slot);
  }
  return out;
}

std::vector<double> normalize_advantages(std::span<const double> rewards, double sigma_guard) {
  if (rewards.size() < 2) throw InvalidInput("advantage normalization needs at least 2 rewards");
  const auto n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double v : rewards) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : rewards) var += (v - mean) * (v - mean);
  const double sigma = std::sqrt(var / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (sigma <= sigma_guard) return out;
  for (std::size_t g = 0; g < rewards.size(); ++g) out[g] = (rewards[g] - mean) / sigma;
  return out;
}

AgentObjective agent_objective(const Eigen::Vector2d& probs, double ref_p_coop,
                               const CandidateSet& candidates, const GrpoHyper& hyper) {
  const std::size_t count = candidates.actions.size();
  if (count == 0 || candidates.old_probs.size() != count || candidates.advantages.size() != count) {
    throw InvariantViolation("candidate set is empty or inconsistent");
  }
  AgentObjective out;
  const double lo = 1.0 - hyper.clip_eps;
  const double hi = 1.0 + hyper.clip_eps;
  for (std::size_t g = 0; g < count; ++g) {
    const double old_p = candidates.old_probs[g];
    if (!(old_p >= kProbClamp)) {
      throw InvariantViolation("stored old-policy probability below the clamp floor");
    }
    const Strategy a = candidates.actions[g];
    const double pa = probs[a];
    const double pa_clamped = clamp_prob(pa);
    const double ratio = pa_clamped / old_p;
    const double adv = candidates.advantages[g];
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, lo, hi) * adv;
    out.clip_term += std::min(unclipped, clipped);

    const bool inside = ratio >= lo && ratio <= hi;
    if ((inside || unclipped < clipped) && pa == pa_clamped) {
      // d pi(a) / d z_k = pi(a) (delta_ak - pi_k)
      Logits onehot = Logits::Zero();
      onehot[a] = 1.0;
      out.dobjective_dlogits += adv * ratio * (onehot - probs);
    }
  }
  const auto inv_g = 1.0 / static_cast<double>(count);
  out.clip_term *= inv_g;
  out.dobjective_dlogits *= inv_g;

  const double p = probs[1];
  const double p_c = clamp_prob(p);
  const double q_c = clamp_prob(ref_p_coop);
  out.kl = kl_two_point(p, ref_p_coop);
  if (hyper.beta != 0.0 && p == p_c) {
    const double dkl_dp = std::log(p_c / q_c) - std::log((1.0 - p_c) / (1.0 - q_c));
    const double dp = p * probs[0];
    out.dobjective_dlogits -= hyper.beta * dkl_dp * Logits(-dp, dp);
  }
  out.objective = out.clip_term - hyper.beta * out.kl;
  return out;
}

LossResult grpo_gcc_loss(const MlpParams& theta, const CandidateSet& candidates,
                         const StateVector& state, const MlpParams& ref, const GrpoHyper& hyper) {
  const ForwardCache cache = forward(theta, state);
  const double ref_p = forward(ref, state).p_coop();
  const AgentObjective obj = agent_objective(cache.probs, ref_p, candidates, hyper);
  LossResult out{obj.objective, obj.kl, MlpParams::zeros(theta.widths())};
  backward(theta, cache, -obj.dobjective_dlogits, out.grad);
  return out;
}

namespace {

/// Forward caches for each neighborhood code.
std::array<ForwardCache, kNeighborhoodCodes> forward_all_codes(const MlpParams& params) {
  std::array<ForwardCache, kNeighborhoodCodes> caches;
  for (int code = 0; code < kNeighborhoodCodes; ++code) {
    caches[static_cast<std::size_t>(code)] = forward(params, state_from_code(code));
  }
  return caches;
}

}  // namespace

EpochBatch build_batch(const MlpParams& old, const StrategyGrid& grid, const GrpoHyper& hyper,
                       double r, const GlobalSignal& signal, std::span<SplitMix64> agent_rngs,
                       int workers) {
  if (agent_rngs.size() != grid.size()) throw InvariantViolation("one rng stream per agent required");
  if (hyper.eta < 2) throw ConfigError("eta must be >= 2");
  const auto caches = forward_all_codes(old);
  EpochBatch batch;
  batch.codes.resize(grid.size());
  batch.candidates.resize(grid.size());
  std::vector<double> adv_std(grid.size(), 0.0);
  parallel_for(grid.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Cell c = grid.cell(i);
      const int code = neighborhood_code(grid, c);
      batch.codes[i] = code;
      auto draws = sample_candidates(caches[static_cast<std::size_t>(code)].probs, hyper.eta,
                                     agent_rngs[i]);
      CandidateSet& set = batch.candidates[i];
      set.agent = i;
      set.rewards = candidate_rewards(grid, c, draws.actions, r, signal);
      set.advantages = normalize_advantages(set.rewards, hyper.sigma_guard);
      set.actions = std::move(draws.actions);
      set.old_probs = std::move(draws.old_probs);
      double ss = 0.0;
      for (double a : set.advantages) ss += a * a;
      adv_std[i] = std::sqrt(ss / static_cast<double>(set.advantages.size()));
    }
  });
  double total = 0.0;
  for (double s : adv_std) total += s;
  batch.mean_advantage_std = total / static_cast<double>(grid.size());
  return batch;
}

LossResult batch_loss(const MlpParams& theta, const EpochBatch& batch, const MlpParams& ref,
                      const GrpoHyper& hyper, int workers) {
  const std::size_t n = batch.candidates.size();
  if (n == 0 || batch.codes.size() != n) throw InvariantViolation("empty or inconsistent batch");
  const auto caches = forward_all_codes(theta);
  std::array<double, kNeighborhoodCodes> ref_p{};
  for (int code = 0; code < kNeighborhoodCodes; ++code) {
    ref_p[static_cast<std::size_t>(code)] = forward(ref, state_from_code(code)).p_coop();
  }

  std::vector<AgentObjective> per_agent(n);
  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto code = static_cast<std::size_t>(batch.codes[i]);
      per_agent[i] = agent_objective(caches[code].probs, ref_p[code], batch.candidates[i], hyper);
    }
  });

  std::array<Logits, kNeighborhoodCodes> bucket;
  bucket.fill(Logits::Zero());
  std::array<bool, kNeighborhoodCodes> used{};
  double objective = 0.0;
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto code = static_cast<std::size_t>(batch.codes[i]);
    objective += per_agent[i].objective;
    kl += per_agent[i].kl;
    bucket[code] -= per_agent[i].dobjective_dlogits;
    used[code] = true;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  LossResult out{objective * inv_n, kl * inv_n, MlpParams::zeros(theta.widths())};
  for (std::size_t code = 0; code < bucket.size(); ++code) {
    if (!used[code]) continue;
    backward(theta, caches[code], bucket[code] * inv_n, out.grad);
  }
  return out;
}

EpochResult train_epoch(PolicyTriplet& policies, const StrategyGrid& grid, const GrpoHyper& hyper,
                        double r, AdamState& opt, const LrSchedule& schedule, std::int64_t epoch,
                        std::uint64_t seed, int workers) {
  hyper.validate();
  if (epoch < 0) throw InvalidInput("epoch must be >= 0");
  if (!policies.current.same_shape(policies.ref)) {
    throw InvariantViolation("policy and reference shapes differ");
  }

  policies.old = policies.current;
  const GlobalSignal signal{global_coop_rate(grid), hyper.rho};

  std::vector<SplitMix64> rngs;
  rngs.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    rngs.emplace_back(agent_stream_seed(seed, StreamTag::kAgent, static_cast<std::uint64_t>(epoch), i));
  }
  const EpochBatch batch = build_batch(policies.old, grid, hyper, r, signal, rngs, workers);

  const double lr = effective_lr(schedule, epoch);
  double loss_sum = 0.0;
  double kl_sum = 0.0;
  for (int step = 0; step < hyper.zeta; ++step) {
    LossResult loss = batch_loss(policies.current, batch, policies.ref, hyper, workers);
    if (!std::isfinite(loss.objective) || !loss.grad.all_finite()) {
      std::ostringstream msg;
      msg << "non-finite loss at epoch " << epoch << ", inner step " << step
          << " (objective=" << loss.objective << ", mean_kl=" << loss.mean_kl
          << ", g=" << signal.coop_rate << ", lr=" << lr << ")";
      throw EpochAborted(msg.str());
    }
    loss_sum += -loss.objective;
    kl_sum += loss.mean_kl;
    adam_step(policies.current, loss.grad, opt, lr);
  }

  const auto caches = forward_all_codes(policies.current);
  std::vector<Strategy> next(grid.size());
  parallel_for(grid.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto code = static_cast<std::size_t>(batch.codes[i]);
      next[i] = rngs[i].bernoulli(clamp_prob(caches[code].p_coop())) ? kCooperate : kDefect;
    }
  });

  if ((epoch + 1) % hyper.ref_update_period == 0) policies.ref = policies.current;

  EpochResult result{StrategyGrid(grid.side(), std::move(next)), {}};
  result.report.epoch = epoch;
  result.report.coop_fraction = global_coop_rate(result.next);
  result.report.mean_loss = loss_sum / hyper.zeta;
  result.report.mean_kl = kl_sum / hyper.zeta;
  result.report.mean_advantage_std = batch.mean_advantage_std;
  result.report.lr = lr;
  return result;
}

TrainingResult run_training(const TrainingConfig& config, const RunSinks& sinks) {
  config.hyper.validate();
  if (config.epochs < 1) throw ConfigError("epochs must be >= 1");

  SplitMix64 init_rng(derive_seed(config.seed, static_cast<std::uint64_t>(StreamTag::kInit), 0));
  SplitMix64 weight_rng(derive_seed(config.seed, static_cast<std::uint64_t>(StreamTag::kWeights), 0));
  StrategyGrid grid = init_lattice(config.side, config.init, init_rng);

  TrainingResult result{{}, PolicyTriplet::from(MlpParams::glorot(config.widths, weight_rng)), {}};
  AdamState opt = AdamState::for_params(result.policies.current);

  auto observe = [&](std::int64_t t) {
    const PayoffField field = payoff_field(grid, config.r);
    result.trace.series.rows.push_back(record_epoch(grid, field, t));
    if (sinks.on_state) sinks.on_state(t, grid, field);
  };

  observe(0);
  for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochResult step = train_epoch(result.policies, grid, config.hyper, config.r, opt,
                                   config.schedule, epoch, config.seed, config.workers);
    grid = std::move(step.next);
    result.reports.push_back(step.report);
    if (sinks.on_report) sinks.on_report(step.report);
    observe(epoch + 1);
  }
  result.trace.final_grid = grid;
  return result;
}

}  // namespace spgg
