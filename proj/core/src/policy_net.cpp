#include "spgg/policy_net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "spgg/error.hpp"

namespace spgg {

namespace {

std::array<int, 5> layer_sizes(const HiddenWidths& w) {
  return {kStateSize, w.h1, w.h2, w.h3, kNumActions};
}

void check_widths(const HiddenWidths& w) {
  if (w.h1 < 1 || w.h2 < 1 || w.h3 < 1) {
    throw ConfigError("hidden widths must be positive");
  }
}

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kMagic[4] = {'P', 'G', 'G', 'M'};

template <class T>
void put_le(std::ofstream& out, T value) {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint IO assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get_le(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

}  // namespace

MlpParams MlpParams::zeros(const HiddenWidths& widths) {
  check_widths(widths);
  const auto sizes = layer_sizes(widths);
  MlpParams p;
  for (std::size_t k = 0; k < 4; ++k) {
    p.weights[k] = Eigen::MatrixXd::Zero(sizes[k + 1], sizes[k]);
    p.biases[k] = Eigen::VectorXd::Zero(sizes[k + 1]);
  }
  return p;
}

MlpParams MlpParams::glorot(const HiddenWidths& widths, SplitMix64& rng) {
  MlpParams p = zeros(widths);
  for (std::size_t k = 0; k < 4; ++k) {
    auto& w = p.weights[k];
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
  }
  return p;
}

HiddenWidths MlpParams::widths() const {
  return {static_cast<int>(weights[0].rows()), static_cast<int>(weights[1].rows()),
          static_cast<int>(weights[2].rows())};
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    n += static_cast<std::size_t>(weights[k].size() + biases[k].size());
  }
  return n;
}

bool MlpParams::same_shape(const MlpParams& other) const {
  for (std::size_t k = 0; k < 4; ++k) {
    if (weights[k].rows() != other.weights[k].rows() ||
        weights[k].cols() != other.weights[k].cols() ||
        biases[k].size() != other.biases[k].size()) {
      return false;
    }
  }
  return true;
}

bool MlpParams::all_finite() const {
  for (std::size_t k = 0; k < 4; ++k) {
    if (!weights[k].allFinite() || !biases[k].allFinite()) return false;
  }
  return true;
}

void MlpParams::set_zero() {
  for (std::size_t k = 0; k < 4; ++k) {
    weights[k].setZero();
    biases[k].setZero();
  }
}

MlpParams& MlpParams::operator+=(const MlpParams& other) {
  if (!same_shape(other)) throw InvariantViolation("parameter shape mismatch in +=");
  for (std::size_t k = 0; k < 4; ++k) {
    weights[k] += other.weights[k];
    biases[k] += other.biases[k];
  }
  return *this;
}

bool operator==(const MlpParams& a, const MlpParams& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t k = 0; k < 4; ++k) {
    if (a.weights[k] != b.weights[k] || a.biases[k] != b.biases[k]) return false;
  }
  return true;
}

StateVector encode_state(const StrategyGrid& grid, Cell c) {
  return state_from_code(neighborhood_code(grid, c));
}

StateVector state_from_code(int code) {
  StateVector s;
  for (int k = 0; k < kStateSize; ++k) s[k] = static_cast<double>((code >> (4 - k)) & 1);
  return s;
}

Eigen::Vector2d softmax2(const Logits& z) {
  const double m = z.maxCoeff();
  const double e0 = std::exp(z[0] - m);
  const double e1 = std::exp(z[1] - m);
  const double total = e0 + e1;
  return {e0 / total, e1 / total};
}

ForwardCache forward(const MlpParams& params, const StateVector& input) {
  if (!input.allFinite()) throw NumericError("policy input contains non-finite values");
  ForwardCache cache;
  cache.input = input;
  Eigen::VectorXd h = input;
  for (std::size_t k = 0; k < 3; ++k) {
    cache.pre[k] = params.weights[k] * h + params.biases[k];
    cache.post[k] = cache.pre[k].cwiseMax(0.0);
    h = cache.post[k];
  }
  cache.logits = params.weights[3] * h + params.biases[3];
  cache.probs = softmax2(cache.logits);
  return cache;
}

double kl_two_point(double p, double q) {
  p = clamp_prob(p);
  q = clamp_prob(q);
  return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
}

void backward(const MlpParams& params, const ForwardCache& cache, const Logits& dloss_dlogits,
              Gradients& grads) {
  if (!params.same_shape(grads)) throw InvariantViolation("gradient accumulator shape mismatch");
  if (cache.pre[0].size() != params.weights[0].rows()) {
    throw InvariantViolation("forward cache does not match parameters");
  }
  Eigen::VectorXd delta = dloss_dlogits;
  for (int k = 3; k >= 0; --k) {
    const auto layer = static_cast<std::size_t>(k);
    grads.biases[layer] += delta;
    if (k == 0) {
      grads.weights[0].noalias() += delta * cache.input.transpose();
      break;
    }
    grads.weights[layer].noalias() += delta * cache.post[layer - 1].transpose();
    Eigen::VectorXd upstream = params.weights[layer].transpose() * delta;
    const Eigen::VectorXd& pre = cache.pre[layer - 1];
    for (Eigen::Index i = 0; i < upstream.size(); ++i) {
      if (!(pre[i] > 0.0)) upstream[i] = 0.0;
    }
    delta = std::move(upstream);
  }
}

AdamState AdamState::for_params(const MlpParams& params) {
  AdamState s;
  s.m = MlpParams::zeros(params.widths());
  s.v = MlpParams::zeros(params.widths());
  return s;
}

void adam_step(MlpParams& params, const Gradients& grads, AdamState& state, double lr) {
  if (!params.same_shape(grads) || !params.same_shape(state.m)) {
    throw InvariantViolation("adam_step shape mismatch");
  }
  if (!grads.all_finite()) throw NumericError("non-finite gradient passed to adam_step");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps);
  };
  for (std::size_t k = 0; k < 4; ++k) {
    update(params.weights[k], grads.weights[k], state.m.weights[k], state.v.weights[k]);
    update(params.biases[k], grads.biases[k], state.m.biases[k], state.v.biases[k]);
  }
}

double effective_lr(const LrSchedule& schedule, std::int64_t epoch) {
  if (schedule.halve_period < 1) throw ConfigError("lr_halve_period must be >= 1");
  const auto halvings = epoch < 0 ? 0 : epoch / schedule.halve_period;
  return std::ldexp(schedule.base_alpha, -static_cast<int>(std::min<std::int64_t>(halvings, 2000)));
}

void save_checkpoint(const MlpParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  const HiddenWidths w = params.widths();
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(w.h1));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(w.h2));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(w.h3));
  put_le<std::uint16_t>(out, 0);
  params.for_each([&](double v) { put_le<double>(out, v); });
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

MlpParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a PGGM checkpoint: " + path.string());
  }
  if (get_le<std::uint32_t>(in) != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version: " + path.string());
  }
  HiddenWidths w;
  w.h1 = get_le<std::uint16_t>(in);
  w.h2 = get_le<std::uint16_t>(in);
  w.h3 = get_le<std::uint16_t>(in);
  (void)get_le<std::uint16_t>(in);
  if (!in) throw IoError("truncated checkpoint header: " + path.string());
  MlpParams params = MlpParams::zeros(w);
  params.for_each([&](double& v) { v = get_le<double>(in); });
  if (!in) throw IoError("truncated checkpoint payload: " + path.string());
  return params;
}

}  // namespace spgg
