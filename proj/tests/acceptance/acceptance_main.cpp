// Desk-scale acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.
//
//   acceptance_test [--out DIR] [--only N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "spgg/baselines.hpp"
#include "spgg/experiment.hpp"
#include "spgg/grpo.hpp"
#include "spgg/metrics.hpp"
#include "test_support.hpp"

namespace {

using namespace spgg;
using Clock = std::chrono::steady_clock;

constexpr int kSide = 50;
constexpr std::int64_t kGrpoEpochs = 500;
constexpr std::int64_t kBaselineEpochs = 5000;
const std::vector<std::uint64_t> kSeeds{1, 2, 3};

std::filesystem::path g_out = "acceptance_runs";

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt("%.4f", v[i]);
  return s + "]";
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

ExperimentConfig desk(Algorithm alg, double r, double rho, std::uint64_t seed, std::int64_t epochs) {
  ExperimentConfig c;
  c.algorithm = alg;
  c.side = kSide;
  c.r = r;
  c.rho = rho;
  c.epochs = epochs;
  c.seed = seed;
  c.snapshot_epochs = {0, epochs};
  c.output_dir = g_out.string();
  char id[96];
  std::snprintf(id, sizeof id, "%s_r%.2f_rho%.1f_seed%llu", std::string(algorithm_name(alg)).c_str(), r,
                rho, static_cast<unsigned long long>(seed));
  c.run_id = id;
  return c;
}

/// Runs are shared between criteria; each distinct configuration executes once.
struct RunCache {
  std::vector<std::pair<std::string, RunOutcome>> done;

  const RunOutcome& get(const ExperimentConfig& c) {
    const std::string key = c.run_dir().string();
    for (const auto& [k, v] : done) {
      if (k == key) return v;
    }
    done.emplace_back(key, execute_run(c));
    return done.back().second;
  }
};

RunCache g_runs;

std::vector<double> finals(Algorithm alg, double r, double rho) {
  std::vector<double> out;
  for (auto s : kSeeds) out.push_back(g_runs.get(desk(alg, r, rho, s, kGrpoEpochs)).summary.final_coop_fraction);
  return out;
}

Verdict grpo_threshold() {
  Verdict v;
  const auto low = finals(Algorithm::kGrpo, 3.0, 0.0);
  const auto high = finals(Algorithm::kGrpo, 6.0, 0.0);
  v.require(std::all_of(low.begin(), low.end(), [](double x) { return x <= 0.02; }),
            "r=3.0 finals " + list(low) + " <= 0.02");
  v.require(std::all_of(high.begin(), high.end(), [](double x) { return x >= 0.98; }),
            "r=6.0 finals " + list(high) + " >= 0.98");
  return v;
}

Verdict gcc_threshold() {
  Verdict v;
  const auto gcc4 = finals(Algorithm::kGrpoGcc, 4.0, 1.0);
  const auto gcc46 = finals(Algorithm::kGrpoGcc, 4.6, 1.0);
  const auto plain4 = finals(Algorithm::kGrpoGcc, 4.0, 0.0);
  v.require(mean(gcc4) >= 0.70, "rho=1 r=4.0 mean " + fmt("%.4f", mean(gcc4)) + " >= 0.70");
  v.require(mean(gcc46) >= 0.85, "rho=1 r=4.6 mean " + fmt("%.4f", mean(gcc46)) + " >= 0.85");
  v.require(mean(plain4) <= 0.05, "rho=0 r=4.0 mean " + fmt("%.4f", mean(plain4)) + " <= 0.05");
  return v;
}

Verdict fast_onset() {
  Verdict v;
  std::vector<double> at150;
  int hits = 0;
  for (auto s : kSeeds) {
    const auto& rows = g_runs.get(desk(Algorithm::kGrpoGcc, 4.0, 1.0, s, kGrpoEpochs)).trace.series.rows;
    const double c = rows.at(150).coop_fraction;
    at150.push_back(c);
    hits += c >= 0.80 ? 1 : 0;
  }
  v.require(hits >= 2, "coop at epoch 150 " + list(at150) + ", " + std::to_string(hits) + "/3 >= 0.80");
  return v;
}

Verdict q_plateau() {
  Verdict v;
  const double f = g_runs.get(desk(Algorithm::kQLearning, 4.0, 0.0, 1, kBaselineEpochs)).summary.final_coop_fraction;
  v.require(f >= 0.25 && f <= 0.55, "final " + fmt("%.4f", f) + " in [0.25, 0.55]");
  return v;
}

Verdict fermi_behaviour() {
  Verdict v;
  const auto& low = g_runs.get(desk(Algorithm::kFermi, 4.0, 0.0, 1, kBaselineEpochs));
  const auto& high = g_runs.get(desk(Algorithm::kFermi, 6.0, 0.0, 1, kBaselineEpochs));
  const double fl = low.summary.final_coop_fraction;
  const double fh = high.summary.final_coop_fraction;
  const auto cluster = std::max(largest_cluster(low.trace.final_grid, kCooperate),
                                largest_cluster(low.trace.final_grid, kDefect));
  v.require(fl < 0.70, "r=4.0 final " + fmt("%.4f", fl) + " < 0.70");
  v.require(fh >= 0.95, "r=6.0 final " + fmt("%.4f", fh) + " >= 0.95");
  v.require(cluster >= 25, "r=4.0 largest cluster " + std::to_string(cluster) + " >= 25");
  return v;
}

Verdict table_ordering() {
  Verdict v;
  for (double r : {4.0, 4.2, 4.4, 4.6}) {
    auto gcc = desk(Algorithm::kGrpoGcc, r, 1.0, 7, kGrpoEpochs);
    auto plain = desk(Algorithm::kGrpo, r, 0.0, 7, kGrpoEpochs);
    gcc.run_id.clear();
    plain.run_id.clear();
    const auto a = run_replicates(gcc, 5);
    const auto b = run_replicates(plain, 5);
    v.require(a.stats.mean > b.stats.mean, "r=" + fmt("%.1f", r) + " gcc " + fmt("%.4f", a.stats.mean) +
                                               " > grpo " + fmt("%.4f", b.stats.mean));
  }
  return v;
}

// ---- property suite ---------------------------------------------------------

double rel_err(double a, double f) {
  return std::abs(a - f) / std::max({1e-6, std::abs(a), std::abs(f)});
}

bool conservation(SplitMix64& rng) {
  for (int trial = 0; trial < 200; ++trial) {
    const int side = 3 + static_cast<int>(rng.below(30));
    const double r = 1.0 + 6.0 * rng.uniform();
    const auto grid = testing::random_grid(side, rng.uniform(), rng);
    const double expected = 5.0 * (r - 1.0) * static_cast<double>(grid.cooperator_count());
    if (std::abs(payoff_field(grid, r).sum() - expected) > 1e-9 * std::max(1.0, std::abs(expected))) return false;
  }
  return true;
}

bool neutrality() {
  const auto sea = testing::filled(7, kCooperate);
  for (int row = 0; row < 7; ++row) {
    for (int col = 0; col < 7; ++col) {
      if (std::abs(counterfactual_payoff(sea, {row, col}, kCooperate, 5.0) -
                   counterfactual_payoff(sea, {row, col}, kDefect, 5.0)) > 1e-12) {
        return false;
      }
    }
  }
  return true;
}

bool advantage_bounds(SplitMix64& rng) {
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> r(2 + rng.below(15));
    for (auto& x : r) x = 30.0 * rng.uniform();
    const auto a = normalize_advantages(r, 1e-8);
    double m = 0, ss = 0;
    for (double x : a) m += x;
    m /= static_cast<double>(a.size());
    for (double x : a) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / static_cast<double>(a.size()));
    if (std::abs(m) > 1e-9 || std::abs(sd - 1.0) > 1e-6) return false;
  }
  return normalize_advantages(std::vector<double>{7, 7, 7}, 1e-8) == std::vector<double>(3, 0.0);
}

bool kl_properties(SplitMix64& rng) {
  for (int trial = 0; trial < 5000; ++trial) {
    const double p = rng.uniform();
    const double q = rng.uniform();
    const double kl = kl_two_point(p, q);
    if (kl < 0.0 || kl_two_point(p, p) != 0.0) return false;
    if (clamp_prob(p) != clamp_prob(q) && !(kl > 0.0)) return false;
  }
  return true;
}

bool policy_gradient_fd(SplitMix64& rng) {
  const double h = 1e-5;
  int checked = 0;
  while (checked < 100) {
    MlpParams p = MlpParams::glorot({8, 8, 8}, rng);
    p.for_each([&](double& v) { v += 0.1 * (2.0 * rng.uniform() - 1.0); });
    StateVector x;
    for (int k = 0; k < kStateSize; ++k) x[k] = 2.0 * rng.uniform() - 1.0;
    const auto cache = forward(p, x);
    bool kink = false;
    for (const auto& pre : cache.pre) kink = kink || (pre.array().abs() < 1e-3).any();
    if (kink) continue;
    const Logits u(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
    Gradients g = MlpParams::zeros(p.widths());
    backward(p, cache, u, g);
    std::vector<double> numeric;
    p.for_each([&](double& v) {
      const double saved = v;
      v = saved + h;
      const double plus = u.dot(forward(p, x).logits);
      v = saved - h;
      const double minus = u.dot(forward(p, x).logits);
      v = saved;
      numeric.push_back((plus - minus) / (2 * h));
    });
    std::size_t i = 0;
    bool ok = true;
    g.for_each([&](double a) { ok = ok && rel_err(a, numeric[i++]) < 1e-4; });
    if (!ok) return false;
    ++checked;
  }
  return true;
}

bool epoch_loss_fd(SplitMix64& rng) {
  const GrpoHyper hyper;
  for (int trial = 0; trial < 3; ++trial) {
    const auto grid = testing::random_grid(4, 0.5, rng);
    const MlpParams old = MlpParams::glorot({4, 4, 4}, rng);
    MlpParams ref = old;
    ref.for_each([&](double& v) { v += 0.1 * (2.0 * rng.uniform() - 1.0); });
    std::vector<SplitMix64> streams;
    for (std::size_t i = 0; i < grid.size(); ++i) streams.emplace_back(rng.below(1u << 30));
    const auto batch = build_batch(old, grid, hyper, 4.0, {global_coop_rate(grid), 1.0}, streams, 1);
    MlpParams theta = old;
    theta.for_each([&](double& v) { v += 0.05 * (2.0 * rng.uniform() - 1.0); });
    const auto base = batch_loss(theta, batch, ref, hyper, 1);
    const double h = 1e-6;
    std::vector<double> numeric;
    theta.for_each([&](double& v) {
      const double saved = v;
      v = saved + h;
      const double plus = -batch_loss(theta, batch, ref, hyper, 1).objective;
      v = saved - h;
      const double minus = -batch_loss(theta, batch, ref, hyper, 1).objective;
      v = saved;
      numeric.push_back((plus - minus) / (2 * h));
    });
    std::size_t i = 0;
    bool ok = true;
    base.grad.for_each([&](double a) { ok = ok && rel_err(a, numeric[i++]) < 1e-3; });
    if (!ok) return false;
  }
  return true;
}

bool gcc_identity(SplitMix64& rng) {
  for (int trial = 0; trial < 1000; ++trial) {
    const double payoff = 40.0 * rng.uniform() - 5.0;
    const double g = rng.uniform();
    const double rho = 3.0 * rng.uniform();
    const Strategy s = rng.bernoulli(0.5) ? kCooperate : kDefect;
    if (gcc_adjust(payoff, s, {g, 0.0}) != payoff) return false;
    if (gcc_adjust(payoff, s, {0.0, rho}) != payoff || gcc_adjust(payoff, s, {1.0, rho}) != payoff) return false;
    if (gcc_adjust(payoff, kDefect, {g, rho}) != payoff) return false;
  }
  return true;
}

bool fermi_complement(SplitMix64& rng) {
  for (int trial = 0; trial < 2000; ++trial) {
    const double a = 40.0 * rng.uniform() - 20.0;
    const double b = 40.0 * rng.uniform() - 20.0;
    const double k = 0.1 + rng.uniform();
    if (std::abs(fermi_adopt_prob(a, b, k) + fermi_adopt_prob(b, a, k) - 1.0) > 1e-12) return false;
  }
  return true;
}

bool absorbing() {
  for (Strategy s : {kDefect, kCooperate}) {
    const auto grid = testing::filled(10, s);
    for (std::int64_t e = 0; e < 25; ++e) {
      if (!(fermi_epoch(grid, 3.0 + 0.15 * static_cast<double>(e), FermiConfig{}, 3, e) == grid)) return false;
    }
  }
  return true;
}

bool worker_determinism() {
  TrainingConfig cfg;
  cfg.side = 16;
  cfg.epochs = 50;
  cfg.seed = 2024;
  cfg.r = 4.4;
  std::vector<TrainingResult> runs;
  for (int w : {1, 2, 8}) {
    cfg.workers = w;
    runs.push_back(run_training(cfg));
  }
  for (std::size_t k = 1; k < runs.size(); ++k) {
    if (!(runs[k].trace.series.rows == runs[0].trace.series.rows)) return false;
    if (!(runs[k].trace.final_grid == runs[0].trace.final_grid)) return false;
    if (!(runs[k].policies.current == runs[0].policies.current)) return false;
  }
  return true;
}

bool golden_bytes() {
  const std::filesystem::path golden{SPGG_GOLDEN_DIR};
  const auto dir = g_out / "golden_check";
  const std::vector<MetricsRow> rows{
      {0, 0.5, 0.5, 1.25, 0.5},
      {1, 0.75, 0.25, 11.25, 0.75},
      {2, 1.0 / 3.0, 2.0 / 3.0, -0.1234567, 1.0 / 3.0},
  };
  write_timeseries_csv(rows, dir / "timeseries.csv");
  write_snapshot(StrategyGrid(2, {kCooperate, kDefect, kDefect, kCooperate}), dir / "checker.pgm");
  SplitMix64 rng(0);
  write_snapshot(init_lattice(4, InitMode::half_half(), rng), dir / "half.pgm");
  return testing::read_bytes(dir / "timeseries.csv") == testing::read_bytes(golden / "timeseries.csv") &&
         testing::read_bytes(dir / "checker.pgm") == testing::read_bytes(golden / "checker_2x2.pgm") &&
         testing::read_bytes(dir / "half.pgm") == testing::read_bytes(golden / "halfhalf_4x4.pgm");
}

Verdict property_suite() {
  Verdict v;
  const auto start = Clock::now();
  SplitMix64 rng(20240601);
  const std::vector<std::pair<const char*, std::function<bool()>>> checks{
      {"payoff conservation", [&] { return conservation(rng); }},
      {"r=5 neutrality", neutrality},
      {"advantage bounds", [&] { return advantage_bounds(rng); }},
      {"kl non-negativity", [&] { return kl_properties(rng); }},
      {"policy gradient fd", [&] { return policy_gradient_fd(rng); }},
      {"epoch loss fd", [&] { return epoch_loss_fd(rng); }},
      {"gcc identity", [&] { return gcc_identity(rng); }},
      {"fermi complement", [&] { return fermi_complement(rng); }},
      {"absorbing states", absorbing},
      {"worker determinism", worker_determinism},
      {"golden bytes", golden_bytes},
  };
  for (const auto& [name, check] : checks) v.require(check(), name);
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  v.require(secs < 60.0, "elapsed " + fmt("%.1f", secs) + "s < 60s");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) {
      g_out = argv[++i];
    } else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--out DIR] [--only N]\n", argv[0]);
      return 2;
    }
  }
  std::filesystem::create_directories(g_out);

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"grpo threshold (L=50, T=500, rho=0, 3 seeds)", grpo_threshold},
      {"gcc lowers threshold (L=50, T=500, 3 seeds)", gcc_threshold},
      {"fast onset (gcc r=4.0, epoch 150)", fast_onset},
      {"q-learning plateau (r=4.0, 5000 epochs)", q_plateau},
      {"fermi behaviour (5000 epochs)", fermi_behaviour},
      {"gcc beats grpo on replicates (n=5)", table_ordering},
      {"property suite", property_suite},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only != 0 && static_cast<std::size_t>(only) != k + 1) continue;
    const auto start = Clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    std::printf("%s criterion %zu: %s | %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first,
                v.detail.c_str(), secs);
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
