#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "netx/design.hpp"
#include "netx/report.hpp"
#include "netx/ri.hpp"
#include "netx/stats.hpp"

namespace netx {

// (1/N) * sum over z_i = t of y_i / p(t).
double ht_mean(std::span<const double> y, std::span<const std::uint8_t> z, const PropensityTable& table, int t);

// Cluster sums of potential-outcome cross products.
// s[t1][t2] = sum_c (sum_{i in c} Y_i(t1)) (sum_{j in c} Y_j(t2)); q[t1][t2] = sum_i Y_i(t1) Y_i(t2).
struct VarianceComponents {
  double s[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  double q[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  std::size_t n = 0;
};

VarianceComponents variance_components(std::span<const double> y1, std::span<const double> y0,
                                       std::span<const int> cluster_of);

struct HtVariance {
  double var1 = 0.0;    // Var[mu(1)]
  double var0 = 0.0;    // Var[mu(0)]
  double cov = 0.0;     // Cov[mu(1), mu(0)]
  double var_tau = 0.0;
};

// Exact design variance from both potential outcomes.
HtVariance true_variance(std::span<const double> y1, std::span<const double> y0, std::span<const int> cluster_of,
                         const PropensityTable& table);

// Plug-in estimates from observed outcomes: unbiased Var-hat per arm and the
// downward-biased Cov-hat, combined into a conservative Var-hat of tau.
HtVariance conservative_variance(std::span<const double> y, std::span<const std::uint8_t> z,
                                 std::span<const int> cluster_of, const PropensityTable& table);

// mu(1) - mu(0) with the conservative SE and a normal 95% interval.
EstimateReport ate_difference(std::span<const double> y, std::span<const std::uint8_t> z,
                              std::span<const int> cluster_of, const PropensityTable& table,
                              const std::string& estimand = "ate");

enum class Subgroup { kLow, kHigh };

// ate_difference on users with splitter <= median (low) or > median (high).
EstimateReport subgroup_ate(std::span<const double> y, std::span<const std::uint8_t> z,
                            std::span<const int> cluster_of, const PropensityTable& table,
                            std::span<const double> splitter, Subgroup side, const std::string& estimand);

// HT difference on a 0/1 indicator, no difference adjustment.
EstimateReport binary_ate(std::span<const double> indicator, std::span<const std::uint8_t> z,
                          std::span<const int> cluster_of, const PropensityTable& table,
                          const std::string& estimand);

// Coefficient on z in y ~ z + bin dummies.
double binned_treatment_coef(std::span<const double> y, std::span<const std::uint8_t> z,
                             const stats::BinDemeaner& bins);

struct MonthlyRiOptions {
  std::size_t reps = 10000;
  std::uint64_t seed = 0;
  Grid grid = Grid::from(-1.0, 0.005, 1.0);
  unsigned workers = 1;
  double alpha = 0.05;
  Tail tail = Tail::kEqualTailed;
};

// Randomization CI for a constant additive effect on one month's outcome.
// Null draws replicate the design; `bins` are frozen across replicates.
RiResult monthly_ri_ci(std::span<const double> y_month, std::span<const std::uint8_t> z,
                       const ClusterAssignment& clusters, const DesignParams& params,
                       const stats::BinDemeaner& bins, const MonthlyRiOptions& options);

// Wald treatment-on-treated: point and SE divided by take-up.
EstimateReport tot_wald(const EstimateReport& itt, double takeup);

}  // namespace netx
