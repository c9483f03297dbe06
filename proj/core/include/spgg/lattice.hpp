#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "spgg/random.hpp"

namespace spgg {

/// Strategy of one agent: 0 defects, 1 cooperates.
using Strategy = std::uint8_t;
inline constexpr Strategy kDefect = 0;
inline constexpr Strategy kCooperate = 1;

/// Number of members in every public-goods group (self + 4 neighbors).
inline constexpr int kGroupSize = 5;

/// Lattice coordinate. Row-major; row 0 is the top of the lattice.
struct Cell {
  int row = 0;
  int col = 0;
  friend constexpr bool operator==(Cell, Cell) = default;
};

/// L x L toroidal lattice of binary strategies.
class StrategyGrid {
 public:
  /// All-defector grid. Throws ConfigError for side < 2.
  explicit StrategyGrid(int side);
  StrategyGrid(int side, std::vector<Strategy> cells);

  int side() const noexcept { return side_; }
  std::size_t size() const noexcept { return cells_.size(); }

  /// Row-major index of a (possibly out-of-range) cell after toroidal wrap.
  std::size_t index(Cell c) const noexcept {
    return static_cast<std::size_t>(wrap(c.row)) * static_cast<std::size_t>(side_) +
           static_cast<std::size_t>(wrap(c.col));
  }
  Cell cell(std::size_t idx) const noexcept {
    return {static_cast<int>(idx / static_cast<std::size_t>(side_)),
            static_cast<int>(idx % static_cast<std::size_t>(side_))};
  }

  Strategy at(Cell c) const noexcept { return cells_[index(c)]; }
  Strategy operator[](std::size_t idx) const noexcept { return cells_[idx]; }

  void set(Cell c, Strategy s);
  void set(std::size_t idx, Strategy s);

  std::size_t cooperator_count() const noexcept;

  const std::vector<Strategy>& cells() const noexcept { return cells_; }

  /// Toroidal translation: result.at(c + (dr, dc)) == this->at(c).
  StrategyGrid shifted(int drow, int dcol) const;

  friend bool operator==(const StrategyGrid&, const StrategyGrid&) = default;

 private:
  int wrap(int v) const noexcept {
    const int m = v % side_;
    return m < 0 ? m + side_ : m;
  }

  int side_;
  std::vector<Strategy> cells_;
};

/// Per-cell total payoff for one enhancement factor.
struct PayoffField {
  int side = 0;
  double r = 0.0;
  std::vector<double> values;

  double sum() const noexcept;
  double mean() const noexcept;
};

/// Global cooperation rate g and GCC strength rho.
struct GlobalSignal {
  double coop_rate = 0.0;
  double rho = 0.0;
};

struct InitMode {
  enum class Kind { kHalfHalf, kBernoulli, kAllDefect, kAllCoop };

  Kind kind = Kind::kHalfHalf;
  double p = 0.5;  // Bernoulli only

  static InitMode half_half() { return {Kind::kHalfHalf, 0.5}; }
  static InitMode bernoulli(double p) { return {Kind::kBernoulli, p}; }
  static InitMode all_defect() { return {Kind::kAllDefect, 0.0}; }
  static InitMode all_coop() { return {Kind::kAllCoop, 1.0}; }
};

/// HalfHalf: rows [0, L/2) defect, the rest cooperate (odd L gives floor(L/2)
/// defector rows). Bernoulli consumes one uniform draw per cell in row-major order.
StrategyGrid init_lattice(int side, const InitMode& mode, SplitMix64& rng);

/// Von Neumann neighbors in the fixed order (N, S, W, E), toroidally wrapped.
std::array<Cell, 4> von_neumann_neighbors(Cell c, int side);

/// Cooperators in the group centered on `center` (center + 4 neighbors).
int group_cooperator_count(const StrategyGrid& grid, Cell center);

/// Payoff of one member in one group. Throws InvalidInput for s=1 with N_C=0.
double group_payoff(Strategy s, int coop_in_group, double r);

/// Sum of N_C over the five groups containing `c`, as if `c` played `as`.
int group_count_sum(const StrategyGrid& grid, Cell c, Strategy as);

/// Total payoff of `c` across its five groups under the committed grid.
double total_payoff(const StrategyGrid& grid, Cell c, double r);

/// Total payoff of `c` with only its own strategy replaced by `as`.
double counterfactual_payoff(const StrategyGrid& grid, Cell c, Strategy as, double r);

PayoffField payoff_field(const StrategyGrid& grid, double r);

double global_coop_rate(const StrategyGrid& grid);

/// 5-bit neighborhood code: bit 4 = self, bits 3..0 = (N, S, W, E).
int neighborhood_code(const StrategyGrid& grid, Cell c);
inline constexpr int kNeighborhoodCodes = 32;

/// Cooperators get payoff * (1 + rho g (1 - g)); defectors are unchanged.
double gcc_adjust(double payoff, Strategy s, const GlobalSignal& signal);

}  // namespace spgg
