#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include <Eigen/Dense>

#include "spgg/lattice.hpp"
#include "spgg/random.hpp"

namespace spgg {

inline constexpr int kStateSize = 5;
inline constexpr int kNumActions = 2;

/// Lower/upper clamp applied to probabilities before logs and ratios.
inline constexpr double kProbClamp = 1e-7;

inline double clamp_prob(double p) noexcept {
  return p < kProbClamp ? kProbClamp : (p > 1.0 - kProbClamp ? 1.0 - kProbClamp : p);
}

using StateVector = Eigen::Matrix<double, kStateSize, 1>;
using Logits = Eigen::Vector2d;

/// Hidden layer widths; input is always 5 and output 2.
struct HiddenWidths {
  int h1 = 64;
  int h2 = 64;
  int h3 = 64;
  friend bool operator==(const HiddenWidths&, const HiddenWidths&) = default;
};

/// Weights and biases of the 5 -> h1 -> h2 -> h3 -> 2 policy MLP.
/// Also used as the gradient accumulator and for Adam moments.
struct MlpParams {
  std::array<Eigen::MatrixXd, 4> weights;  // weights[k] is out_k x in_k
  std::array<Eigen::VectorXd, 4> biases;

  static MlpParams zeros(const HiddenWidths& widths);
  /// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases. Draws weights
  /// layer by layer in row-major order.
  static MlpParams glorot(const HiddenWidths& widths, SplitMix64& rng);

  HiddenWidths widths() const;
  std::size_t parameter_count() const;
  bool same_shape(const MlpParams& other) const;
  bool all_finite() const;
  void set_zero();

  /// Visits every scalar in declared order (W1, b1, ..., W4, b4), matrices row-major.
  template <class Fn>
  void for_each(Fn&& fn) {
    for (std::size_t k = 0; k < 4; ++k) {
      for (Eigen::Index i = 0; i < weights[k].rows(); ++i)
        for (Eigen::Index j = 0; j < weights[k].cols(); ++j) fn(weights[k](i, j));
      for (Eigen::Index i = 0; i < biases[k].size(); ++i) fn(biases[k](i));
    }
  }
  template <class Fn>
  void for_each(Fn&& fn) const {
    const_cast<MlpParams*>(this)->for_each([&](double& v) { fn(static_cast<const double&>(v)); });
  }

  MlpParams& operator+=(const MlpParams& other);
  friend bool operator==(const MlpParams& a, const MlpParams& b);
};

using Gradients = MlpParams;

/// Intermediates of one forward pass, kept for backward.
struct ForwardCache {
  StateVector input;
  std::array<Eigen::VectorXd, 3> pre;   // FC_k outputs before ReLU
  std::array<Eigen::VectorXd, 3> post;  // after ReLU
  Logits logits;
  Eigen::Vector2d probs;  // probs[0] = defect, probs[1] = cooperate

  double p_coop() const noexcept { return probs[1]; }
  double prob(Strategy a) const noexcept { return probs[a]; }
};

/// [s_self, s_N, s_S, s_W, s_E] as 0/1 reals.
StateVector encode_state(const StrategyGrid& grid, Cell c);
/// Inverse of neighborhood_code(): the state vector for a 5-bit code.
StateVector state_from_code(int code);

/// Throws NumericError on non-finite input.
ForwardCache forward(const MlpParams& params, const StateVector& input);

/// Two-action softmax, stable for large logits.
Eigen::Vector2d softmax2(const Logits& z);

/// KL(Bernoulli(p) || Bernoulli(q)) on clamped probabilities of cooperating.
double kl_two_point(double p, double q);

/// Accumulates dLoss/dparams into `grads` given dLoss/dlogits.
/// ReLU subgradient at 0 is 0.
void backward(const MlpParams& params, const ForwardCache& cache, const Logits& dloss_dlogits,
              Gradients& grads);

struct AdamState {
  MlpParams m;
  MlpParams v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_params(const MlpParams& params);
};

/// Bias-corrected Adam. Throws NumericError (leaving params and state
/// untouched) when any gradient is non-finite.
void adam_step(MlpParams& params, const Gradients& grads, AdamState& state, double lr);

struct LrSchedule {
  double base_alpha = 1e-4;
  int halve_period = 1000;
};

/// base_alpha * 2^-floor(epoch / halve_period)
double effective_lr(const LrSchedule& schedule, std::int64_t epoch);

// Checkpoint: 16-byte header ("PGGM", u32 version, u16 h1, h2, h3, u16 0)
// followed by little-endian f64 values in for_each() order.
void save_checkpoint(const MlpParams& params, const std::filesystem::path& path);
MlpParams load_checkpoint(const std::filesystem::path& path);

}  // namespace spgg
