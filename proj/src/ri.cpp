#include "netx/ri.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "netx/error.hpp"

namespace netx {

std::vector<double> Grid::values() const {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = at(k);
  return out;
}

Grid Grid::from(double start, double step, double stop) {
  require(std::isfinite(start) && std::isfinite(step) && std::isfinite(stop), "grid bounds must be finite");
  require(step > 0.0, "grid step must be positive");
  require(stop >= start, "grid stop must not precede start");
  Grid g;
  g.start = start;
  g.step = step;
  g.count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  return g;
}

Grid Grid::parse(std::string_view text) {
  auto a = text.find(':');
  auto b = a == std::string_view::npos ? a : text.find(':', a + 1);
  require(b != std::string_view::npos, "grid must look like start:step:stop, got '" + std::string(text) + "'");
  try {
    return from(std::stod(std::string(text.substr(0, a))), std::stod(std::string(text.substr(a + 1, b - a - 1))),
                std::stod(std::string(text.substr(b + 1))));
  } catch (const std::invalid_argument&) {
    throw ValidationError("grid must look like start:step:stop, got '" + std::string(text) + "'");
  }
}

double ri_p_value(std::size_t extreme, std::size_t reps) {
  require(reps > 0, "ri_p_value: no replicates");
  return static_cast<double>(std::max<std::size_t>(extreme, 1)) / static_cast<double>(reps);
}

std::string_view tail_name(Tail t) { return t == Tail::kAbsolute ? "absolute" : "equal_tailed"; }

Tail parse_tail(std::string_view text) {
  if (text == "absolute") return Tail::kAbsolute;
  if (text == "equal_tailed" || text == "equal-tailed") return Tail::kEqualTailed;
  throw ValidationError("unknown tail rule '" + std::string(text) + "'");
}

double tail_p_value(std::span<const double> draws, double observed, Tail tail) {
  require(!draws.empty(), "tail_p_value: no draws");
  if (tail == Tail::kAbsolute) {
    const double b = std::fabs(observed);
    const double tol = 1e-12 * std::max(1.0, b);
    std::size_t extreme = 0;
    for (double d : draws)
      if (std::isnan(d) || std::fabs(d) >= b - tol) ++extreme;
    return ri_p_value(extreme, draws.size());
  }
  const double tol = 1e-12 * std::max(1.0, std::fabs(observed));
  std::size_t lo = 0, hi = 0;
  for (double d : draws) {
    if (std::isnan(d)) {
      ++lo;
      ++hi;
      continue;
    }
    if (d <= observed + tol) ++lo;
    if (d >= observed - tol) ++hi;
  }
  double p = 2.0 * static_cast<double>(std::min(lo, hi)) / static_cast<double>(draws.size());
  return std::clamp(p, 1.0 / static_cast<double>(draws.size()), 1.0);
}

void RiResult::invert(double alpha) {
  ci_empty = true;
  clipped_low = clipped_high = false;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid_p[k] > alpha)) continue;
    if (ci_empty) {
      ci_low = ci_high = grid[k];
      ci_empty = false;
    } else {
      ci_low = std::min(ci_low, grid[k]);
      ci_high = std::max(ci_high, grid[k]);
    }
    if (k == 0) clipped_low = true;
    if (k + 1 == grid.size()) clipped_high = true;
  }
}

Json to_json(const RiResult& r, bool include_grid) {
  Json j;
  j["outcome"] = r.outcome;
  j["statistic"] = number_or_null(r.statistic);
  j["p_value"] = r.p_value;
  j["reference_null"] = r.reference_null;
  j["reps"] = r.reps;
  j["seed"] = r.seed;
  j["n"] = r.n;
  j["ci_empty"] = r.ci_empty;
  j["ci_low"] = r.ci_empty ? Json(nullptr) : Json(r.ci_low);
  j["ci_high"] = r.ci_empty ? Json(nullptr) : Json(r.ci_high);
  j["clipped_low"] = r.clipped_low;
  j["clipped_high"] = r.clipped_high;
  if (!r.grid.empty()) {
    j["grid"] = {{"start", r.grid.front()}, {"stop", r.grid.back()}, {"count", r.grid.size()}};
  }
  if (include_grid) j["grid_p"] = r.grid_p;
  j["metadata"] = r.metadata;
  return j;
}

}  // namespace netx
