#include "spgg/lattice.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>

#include "spgg/error.hpp"

namespace spgg {

StrategyGrid::StrategyGrid(int side) : StrategyGrid(side, {}) {}

StrategyGrid::StrategyGrid(int side, std::vector<Strategy> cells) : side_(side) {
  if (side < 2) {
    throw ConfigError("lattice side must be >= 2, got " + std::to_string(side));
  }
  const auto n = static_cast<std::size_t>(side) * static_cast<std::size_t>(side);
  if (cells.empty()) {
    cells.assign(n, kDefect);
  }
  if (cells.size() != n) {
    throw InvalidInput("grid cell count " + std::to_string(cells.size()) +
                       " does not match side " + std::to_string(side));
  }
  for (Strategy s : cells) {
    if (s > 1) throw InvalidInput("strategy must be 0 or 1");
  }
  cells_ = std::move(cells);
}

void StrategyGrid::set(Cell c, Strategy s) { set(index(c), s); }

void StrategyGrid::set(std::size_t idx, Strategy s) {
  if (s > 1) throw InvalidInput("strategy must be 0 or 1");
  cells_.at(idx) = s;
}

std::size_t StrategyGrid::cooperator_count() const noexcept {
  return static_cast<std::size_t>(
      std::count(cells_.begin(), cells_.end(), kCooperate));
}

StrategyGrid StrategyGrid::shifted(int drow, int dcol) const {
  std::vector<Strategy> out(cells_.size());
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const Cell c = cell(i);
    out[index({c.row + drow, c.col + dcol})] = cells_[i];
  }
  return StrategyGrid(side_, std::move(out));
}

double PayoffField::sum() const noexcept {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

double PayoffField::mean() const noexcept {
  return values.empty() ? 0.0 : sum() / static_cast<double>(values.size());
}

StrategyGrid init_lattice(int side, const InitMode& mode, SplitMix64& rng) {
  if (side < 2) {
    throw ConfigError("lattice side must be >= 2, got " + std::to_string(side));
  }
  StrategyGrid grid(side);
  const std::size_t n = grid.size();
  switch (mode.kind) {
    case InitMode::Kind::kAllDefect:
      break;
    case InitMode::Kind::kAllCoop:
      for (std::size_t i = 0; i < n; ++i) grid.set(i, kCooperate);
      break;
    case InitMode::Kind::kHalfHalf: {
      const auto first_coop = static_cast<std::size_t>(side / 2) * static_cast<std::size_t>(side);
      for (std::size_t i = first_coop; i < n; ++i) grid.set(i, kCooperate);
      break;
    }
    case InitMode::Kind::kBernoulli:
      if (!(mode.p >= 0.0 && mode.p <= 1.0)) {
        throw ConfigError("bernoulli init probability must lie in [0, 1]");
      }
      for (std::size_t i = 0; i < n; ++i) {
        grid.set(i, rng.bernoulli(mode.p) ? kCooperate : kDefect);
      }
      break;
  }
  return grid;
}

std::array<Cell, 4> von_neumann_neighbors(Cell c, int side) {
  auto wrap = [side](int v) { return ((v % side) + side) % side; };
  const int r = wrap(c.row);
  const int col = wrap(c.col);
  return {Cell{wrap(r - 1), col}, Cell{wrap(r + 1), col}, Cell{r, wrap(col - 1)},
          Cell{r, wrap(col + 1)}};
}

int group_cooperator_count(const StrategyGrid& grid, Cell center) {
  int count = grid.at(center);
  for (Cell n : von_neumann_neighbors(center, grid.side())) count += grid.at(n);
  return count;
}

double group_payoff(Strategy s, int coop_in_group, double r) {
  if (coop_in_group < 0 || coop_in_group > kGroupSize) {
    throw InvalidInput("group cooperator count must lie in [0, 5]");
  }
  if (s == kCooperate && coop_in_group == 0) {
    throw InvalidInput("a cooperator's group cannot have zero cooperators");
  }
  const double share = r / kGroupSize * coop_in_group;
  return s == kCooperate ? share - 1.0 : share;
}

int group_count_sum(const StrategyGrid& grid, Cell c, Strategy as) {
  const int side = grid.side();
  const std::size_t self = grid.index(c);
  auto member = [&](Cell m) -> int { return grid.index(m) == self ? as : grid.at(m); };
  auto group = [&](Cell center) {
    int n = member(center);
    for (Cell m : von_neumann_neighbors(center, side)) n += member(m);
    return n;
  };
  int total = group(c);
  for (Cell n : von_neumann_neighbors(c, side)) total += group(n);
  return total;
}

double counterfactual_payoff(const StrategyGrid& grid, Cell c, Strategy as, double r) {
  const int sum = group_count_sum(grid, c, as);
  return r / kGroupSize * sum - (as == kCooperate ? kGroupSize : 0);
}

double total_payoff(const StrategyGrid& grid, Cell c, double r) {
  return counterfactual_payoff(grid, c, grid.at(c), r);
}

PayoffField payoff_field(const StrategyGrid& grid, double r) {
  PayoffField field{grid.side(), r, std::vector<double>(grid.size())};
  // N_C per center once, then each cell sums its five groups.
  std::vector<int> counts(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    counts[i] = group_cooperator_count(grid, grid.cell(i));
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Cell c = grid.cell(i);
    int sum = counts[i];
    for (Cell n : von_neumann_neighbors(c, grid.side())) sum += counts[grid.index(n)];
    field.values[i] = r / kGroupSize * sum - (grid[i] == kCooperate ? kGroupSize : 0);
  }
  return field;
}

double global_coop_rate(const StrategyGrid& grid) {
  return static_cast<double>(grid.cooperator_count()) / static_cast<double>(grid.size());
}

int neighborhood_code(const StrategyGrid& grid, Cell c) {
  int code = grid.at(c);
  for (Cell n : von_neumann_neighbors(c, grid.side())) code = (code << 1) | grid.at(n);
  return code;
}

double gcc_adjust(double payoff, Strategy s, const GlobalSignal& signal) {
  if (s != kCooperate) return payoff;
  const double g = signal.coop_rate;
  return payoff * (1.0 + signal.rho * g * (1.0 - g));
}

}  // namespace spgg
