#include "spgg/lattice.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "spgg/error.hpp"
#include "test_support.hpp"

namespace spgg {
namespace {

using testing::brute_force_payoff;
using testing::filled;
using testing::random_grid;

TEST(InitLattice, AllDefectIsZeros) {
  SplitMix64 rng(1);
  const auto grid = init_lattice(4, InitMode::all_defect(), rng);
  EXPECT_EQ(grid.cooperator_count(), 0u);
  EXPECT_EQ(grid.size(), 16u);
}

TEST(InitLattice, HalfHalfUpperRowsDefect) {
  SplitMix64 rng(1);
  const auto grid = init_lattice(4, InitMode::half_half(), rng);
  for (int row = 0; row < 4; ++row) {
    for (int col = 0; col < 4; ++col) {
      EXPECT_EQ(grid.at({row, col}), row < 2 ? kDefect : kCooperate) << row << "," << col;
    }
  }
}

TEST(InitLattice, HalfHalfOddSideGivesFloorDefectorRows) {
  SplitMix64 rng(1);
  const auto grid = init_lattice(5, InitMode::half_half(), rng);
  EXPECT_EQ(grid.cooperator_count(), 15u);
  EXPECT_EQ(grid.at({1, 0}), kDefect);
  EXPECT_EQ(grid.at({2, 0}), kCooperate);
}

TEST(InitLattice, BernoulliWithinBinomialBand) {
  SplitMix64 rng(20240611);
  const auto grid = init_lattice(200, InitMode::bernoulli(0.5), rng);
  EXPECT_GE(grid.cooperator_count(), 19400u);
  EXPECT_LE(grid.cooperator_count(), 20600u);
}

TEST(InitLattice, BernoulliDeterministicGivenSeed) {
  SplitMix64 a(7), b(7);
  EXPECT_EQ(init_lattice(30, InitMode::bernoulli(0.3), a), init_lattice(30, InitMode::bernoulli(0.3), b));
}

TEST(InitLattice, RejectsTinyLattice) {
  SplitMix64 rng(1);
  EXPECT_THROW(init_lattice(1, InitMode::all_coop(), rng), ConfigError);
  EXPECT_THROW(init_lattice(5, InitMode::bernoulli(1.5), rng), ConfigError);
}

TEST(Neighbors, WrapAtCorner) {
  const auto n = von_neumann_neighbors({0, 0}, 3);
  EXPECT_EQ(n[0], (Cell{2, 0}));
  EXPECT_EQ(n[1], (Cell{1, 0}));
  EXPECT_EQ(n[2], (Cell{0, 2}));
  EXPECT_EQ(n[3], (Cell{0, 1}));
}

TEST(Neighbors, InteriorCell) {
  const auto n = von_neumann_neighbors({1, 1}, 3);
  EXPECT_EQ(n[0], (Cell{0, 1}));
  EXPECT_EQ(n[1], (Cell{2, 1}));
  EXPECT_EQ(n[2], (Cell{1, 0}));
  EXPECT_EQ(n[3], (Cell{1, 2}));
}

TEST(Neighbors, EastWrapsToColumnZero) {
  EXPECT_EQ(von_neumann_neighbors({0, 4}, 5)[3], (Cell{0, 0}));
}

TEST(GroupCount, UniformAndLoneCooperator) {
  EXPECT_EQ(group_cooperator_count(filled(5, kCooperate), {2, 2}), 5);
  EXPECT_EQ(group_cooperator_count(filled(5, kDefect), {2, 2}), 0);
  auto grid = filled(5, kDefect);
  grid.set({2, 2}, kCooperate);
  EXPECT_EQ(group_cooperator_count(grid, {2, 2}), 1);
}

TEST(GroupPayoff, HandValues) {
  EXPECT_DOUBLE_EQ(group_payoff(kCooperate, 5, 5.0), 4.0);
  EXPECT_DOUBLE_EQ(group_payoff(kDefect, 0, 4.0), 0.0);
  EXPECT_NEAR(group_payoff(kDefect, 3, 4.0), 2.4, 1e-12);
}

TEST(GroupPayoff, CooperatorInEmptyGroupIsInconsistent) {
  EXPECT_THROW(group_payoff(kCooperate, 0, 4.0), InvalidInput);
}

TEST(TotalPayoff, Examples) {
  EXPECT_DOUBLE_EQ(total_payoff(filled(6, kDefect), {3, 1}, 4.7), 0.0);
  EXPECT_DOUBLE_EQ(total_payoff(filled(6, kCooperate), {3, 1}, 4.0), 15.0);
  auto lone = filled(6, kDefect);
  lone.set({2, 3}, kCooperate);
  EXPECT_DOUBLE_EQ(total_payoff(lone, {2, 3}, 5.0), 0.0);
}

TEST(TotalPayoff, MatchesBruteForceOnRandomGrids) {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const int side = 3 + trial % 6;
    const auto grid = random_grid(side, 0.45, rng);
    const double r = 3.0 + 0.17 * trial;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Cell c = grid.cell(i);
      EXPECT_NEAR(total_payoff(grid, c, r), brute_force_payoff(grid.cells(), side, c.row, c.col, r),
                  1e-9);
    }
  }
}

TEST(PayoffField, CooperatorSeaConservation) {
  const auto field = payoff_field(filled(10, kCooperate), 4.0);
  for (double v : field.values) EXPECT_DOUBLE_EQ(v, 15.0);
  EXPECT_DOUBLE_EQ(field.sum(), 1500.0);
}

TEST(PayoffField, AllDefectorIsZero) {
  for (double v : payoff_field(filled(7, kDefect), 4.4).values) EXPECT_EQ(v, 0.0);
}

TEST(PayoffField, HalfHalfInvariantUnderColumnShift) {
  SplitMix64 rng(0);
  const auto grid = init_lattice(8, InitMode::half_half(), rng);
  const auto field = payoff_field(grid, 4.2);
  for (int row = 0; row < 8; ++row) {
    for (int col = 1; col < 8; ++col) {
      EXPECT_EQ(field.values[grid.index({row, col})], field.values[grid.index({row, 0})]);
    }
  }
}

TEST(PayoffField, AgreesWithTotalPayoff) {
  SplitMix64 rng(3);
  const auto grid = random_grid(9, 0.5, rng);
  const auto field = payoff_field(grid, 3.8);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(field.values[i], total_payoff(grid, grid.cell(i), 3.8), 1e-12);
  }
}

TEST(GlobalCoopRate, Examples) {
  EXPECT_DOUBLE_EQ(global_coop_rate(filled(4, kCooperate)), 1.0);
  SplitMix64 rng(0);
  EXPECT_DOUBLE_EQ(global_coop_rate(init_lattice(6, InitMode::half_half(), rng)), 0.5);
  StrategyGrid small(2, {1, 1, 0, 1});
  EXPECT_DOUBLE_EQ(global_coop_rate(small), 0.75);
}

TEST(GccAdjust, Examples) {
  EXPECT_DOUBLE_EQ(gcc_adjust(10.0, kCooperate, {0.5, 1.0}), 12.5);
  EXPECT_DOUBLE_EQ(gcc_adjust(10.0, kDefect, {0.5, 1.0}), 10.0);
  EXPECT_DOUBLE_EQ(gcc_adjust(10.0, kCooperate, {1.0, 1.0}), 10.0);
}

TEST(GccAdjust, IdentityCases) {
  for (double payoff : {-3.0, 0.0, 7.25}) {
    for (double g : {0.0, 0.3, 0.5, 1.0}) {
      EXPECT_EQ(gcc_adjust(payoff, kCooperate, {g, 0.0}), payoff);
      EXPECT_EQ(gcc_adjust(payoff, kDefect, {g, 3.0}), payoff);
    }
    EXPECT_EQ(gcc_adjust(payoff, kCooperate, {0.0, 2.0}), payoff);
    EXPECT_EQ(gcc_adjust(payoff, kCooperate, {1.0, 2.0}), payoff);
  }
}

// ---- properties ----

TEST(LatticeProperty, PayoffConservation) {
  SplitMix64 rng(2025);
  for (int trial = 0; trial < 200; ++trial) {
    const int side = 3 + static_cast<int>(rng.below(14));
    const auto grid = random_grid(side, rng.uniform(), rng);
    const double r = 1.0 + 6.0 * rng.uniform();
    const double expected = 5.0 * (r - 1.0) * static_cast<double>(grid.cooperator_count());
    const double sum = payoff_field(grid, r).sum();
    EXPECT_LE(std::abs(sum - expected), 1e-9 * std::max(1.0, std::abs(expected)));
  }
}

TEST(LatticeProperty, TranslationEquivariance) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const int side = 4 + trial;
    const auto grid = random_grid(side, 0.5, rng);
    const int dr = static_cast<int>(rng.below(static_cast<std::uint32_t>(side)));
    const int dc = static_cast<int>(rng.below(static_cast<std::uint32_t>(side)));
    const auto moved = grid.shifted(dr, dc);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Cell c = grid.cell(i);
      EXPECT_EQ(total_payoff(moved, {c.row + dr, c.col + dc}, 4.3), total_payoff(grid, c, 4.3));
    }
  }
}

TEST(LatticeProperty, CounterfactualNeutralityAtFive) {
  const auto sea = filled(5, kCooperate);
  for (std::size_t i = 0; i < sea.size(); ++i) {
    const Cell c = sea.cell(i);
    EXPECT_DOUBLE_EQ(counterfactual_payoff(sea, c, kCooperate, 5.0), 20.0);
    EXPECT_DOUBLE_EQ(counterfactual_payoff(sea, c, kDefect, 5.0), 20.0);
    for (double r : {3.0, 4.0, 4.9}) {
      EXPECT_GT(counterfactual_payoff(sea, c, kDefect, r), counterfactual_payoff(sea, c, kCooperate, r));
    }
    for (double r : {5.1, 6.0}) {
      EXPECT_LT(counterfactual_payoff(sea, c, kDefect, r), counterfactual_payoff(sea, c, kCooperate, r));
    }
  }
}

TEST(LatticeProperty, CounterfactualMatchesBruteForceFlip) {
  SplitMix64 rng(5);
  const auto grid = random_grid(7, 0.5, rng);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (Strategy a : {kDefect, kCooperate}) {
      auto cells = grid.cells();
      cells[i] = a;
      const Cell c = grid.cell(i);
      EXPECT_NEAR(counterfactual_payoff(grid, c, a, 4.4), brute_force_payoff(cells, 7, c.row, c.col, 4.4),
                  1e-12);
    }
  }
}

TEST(LatticeProperty, GroupCountsSumToFiveTimesCooperators) {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const auto grid = random_grid(3 + trial % 9, rng.uniform(), rng);
    int total = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) total += group_cooperator_count(grid, grid.cell(i));
    EXPECT_EQ(static_cast<std::size_t>(total), 5 * grid.cooperator_count());
  }
}

TEST(NeighborhoodCode, BitLayout) {
  EXPECT_EQ(neighborhood_code(filled(4, kCooperate), {1, 1}), 31);
  EXPECT_EQ(neighborhood_code(filled(4, kDefect), {1, 1}), 0);
  auto grid = filled(4, kDefect);
  grid.set({1, 1}, kCooperate);
  EXPECT_EQ(neighborhood_code(grid, {1, 1}), 16);
  grid.set({0, 1}, kCooperate);  // north
  EXPECT_EQ(neighborhood_code(grid, {1, 1}), 24);
  grid.set({1, 2}, kCooperate);  // east
  EXPECT_EQ(neighborhood_code(grid, {1, 1}), 25);
}

}  // namespace
}  // namespace spgg
