#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "netx/report.hpp"

namespace netx {

// Arithmetic grid "start:step:stop" (inclusive of stop up to rounding).
struct Grid {
  double start = 0.0;
  double step = 1.0;
  std::size_t count = 1;

  double at(std::size_t k) const { return start + static_cast<double>(k) * step; }
  std::vector<double> values() const;
  static Grid parse(std::string_view text);
  static Grid from(double start, double step, double stop);
};

// Randomization p-value from the number of null draws at least as extreme
// as the observed statistic. Floored at 1/B.
double ri_p_value(std::size_t extreme, std::size_t reps);

// Two-sided tail rules. Equal-tailed doubles the smaller one-sided tail
// count; absolute compares |draw| >= |observed|. Draws that reproduce the
// observed value up to rounding count as ties (extreme), as do NaN draws.
enum class Tail { kEqualTailed, kAbsolute };
std::string_view tail_name(Tail t);
Tail parse_tail(std::string_view text);

double tail_p_value(std::span<const double> draws, double observed, Tail tail);

struct RiResult {
  std::string outcome;
  double statistic = 0.0;
  double p_value = 1.0;  // at the reference null (0 unless stated)
  double reference_null = 0.0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::vector<double> grid;
  std::vector<double> grid_p;
  bool ci_empty = true;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool clipped_low = false;   // lowest grid point accepted
  bool clipped_high = false;  // highest grid point accepted
  std::size_t n = 0;
  Json metadata = Json::object();

  // Acceptance region {g : p(g) > alpha}; the interval is its hull.
  void invert(double alpha = 0.05);
};

Json to_json(const RiResult& r, bool include_grid = false);

}  // namespace netx
