#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "netx/report.hpp"

namespace netx::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string summary;  // one line, human readable
  Json detail;          // hashed into the digest
  double seconds = 0.0; // wall time, not hashed
};

struct BatteryOptions {
  std::uint64_t seed = 20240601;
  unsigned workers = 1;
  int ri_seeds = 1000;        // sharp-null simulations per RI test
  std::size_t ri_reps = 2000;
  int coverage_sims = 300;
  std::size_t mc_reps = 50000;
  bool determinism = true;    // re-run criteria 1-10 with another worker count
};

struct BatteryResult {
  std::vector<CriterionResult> criteria;
  std::string digest;  // FNV-1a over criteria 1-10 details
  double seconds = 0.0;
  bool passed() const;
};

// Runs criteria 1..10 (and 11 when enabled). `on_result` fires as each
// criterion finishes.
BatteryResult run_battery(const BatteryOptions& options,
                          const std::function<void(const CriterionResult&)>& on_result = {});

std::string format_line(const CriterionResult& r);

}  // namespace netx::acceptance
