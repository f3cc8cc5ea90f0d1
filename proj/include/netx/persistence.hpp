#pragma once

#include <span>
#include <string>

#include "netx/report.hpp"
#include "netx/stats.hpp"

namespace netx {

enum class RobustType { kCR0, kCR1 };

struct PersistenceFit {
  std::string outcome;
  double beta = 0.0;
  double std_error = 0.0;
  double p_value = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int bins = 0;
  int bins_requested = 0;
  std::size_t clusters = 0;
  std::size_t n = 0;
  RobustType robust = RobustType::kCR1;
};

// d_post on d_during plus a full set of Y_pre bin dummies; SE clustered on
// `cluster_of`. Bins are recomputed from y_pre with the given mode and
// reduce to the number of distinct values when needed.
PersistenceFit estimate_persistence(std::span<const double> d_during, std::span<const double> d_post,
                                    std::span<const double> y_pre, std::span<const int> cluster_of,
                                    int bins = 40, stats::BinMode mode = stats::BinMode::kEqualCount,
                                    RobustType robust = RobustType::kCR1);

Json to_json(const PersistenceFit& fit);

}  // namespace netx
