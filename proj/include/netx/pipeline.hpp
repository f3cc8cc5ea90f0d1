#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "netx/design.hpp"
#include "netx/io.hpp"
#include "netx/report.hpp"
#include "netx/ri.hpp"
#include "netx/simlab.hpp"

namespace netx {

// Everything a full run needs. Loaded from a TOML file; CLI flags override.
//
//   [inputs]   edges, posts, periods, clusters (optional), assignment (optional), keywords (optional)
//   [design]   p_t, p_hp
//   [graph]    k_out, k_in
//   [outcome]  measure ("threshold:0.5" | "score" | "keywords" | "posts"), alpha ("pooled" | "control")
//   [direct]   monthly_ri_reps, takeup
//   [exposure] q, reps, bins
//   [upstream] limit, max_posts, reps, grid, bins, tau_grid, beta_grid
//   [persistence] bins
//   [run]      seed, workers, out_dir
struct RunConfig {
  std::filesystem::path edges, posts, periods;
  std::optional<std::filesystem::path> clusters, assignment, keywords;
  std::filesystem::path out_dir = "netx_out";
  DesignParams design;
  int k_out = 10, k_in = 10;
  std::string measure = "threshold:0.5";
  bool alpha_control_only = false;
  std::size_t monthly_ri_reps = 1000;
  std::optional<double> takeup;
  double q = 0.7;
  std::size_t exposure_reps = 10000;
  int exposure_bins = 10;
  std::size_t upstream_limit = 400;
  double max_posts = 15000.0;
  std::size_t upstream_reps = 2000;
  Grid upstream_grid = Grid::from(-10.0, 0.25, 10.0);
  int upstream_bins = 10;
  Grid tau_grid = Grid::from(-5.0, 1.0, -1.0);
  Grid beta_grid = Grid::from(0.0, 0.01, 1.0);
  int persistence_bins = 40;
  std::uint64_t seed = 1;
  unsigned workers = 1;

  void validate() const;
  Json to_json() const;  // echoed into every report
};

// Reads a config file; relative input paths resolve against its directory.
RunConfig load_config(const std::filesystem::path& path);

// cluster -> assign -> panel -> estimates. Outputs are staged in a sibling
// temporary directory and moved into place only when every stage succeeds.
// Returns the manifest.
Json run_pipeline(const RunConfig& config);

// Scenario files use the sections [network], [outcomes], [upstream], [design]
// and a top-level start_month; keys mirror the ScenarioSpec fields.
sim::ScenarioSpec load_scenario(const std::filesystem::path& path);
sim::ScenarioSpec scenario_from_toml(const io::TomlTable& t);

// Writes edges.csv, clusters.csv, assignment.csv, posts.jsonl, periods.toml,
// config.toml and truth.json into `out_dir`. Returns the truth manifest.
Json simulate_dataset(const sim::ScenarioSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace netx
