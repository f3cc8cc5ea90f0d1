#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netx/design.hpp"
#include "netx/netgraph.hpp"
#include "netx/report.hpp"
#include "netx/stats.hpp"

namespace netx {

enum class Condition : std::uint8_t { kCL = 0, kCH = 1, kTL = 2, kTH = 3, kUnclassified = 4 };
inline constexpr int kNumConditions = 4;
std::string condition_name(Condition c);

enum class NeighborMode { kUndirected, kOutgoing };

// Neighbor lists with the weight each neighbor carries in W_i. Undirected
// mode sums in- and out-edge weights; outgoing mode uses out-edges only.
UndirectedAdjacency neighbor_weights(const InteractionGraph& g, NeighborMode mode = NeighborMode::kUndirected);

void validate_q(double q);

// Per-user q-fraction classification. Users with W_i = 0 are unclassified.
struct ExposureState {
  std::vector<double> w_total;
  std::vector<double> w_treated;
  std::vector<Condition> condition;
};

ExposureState classify_exposure(std::span<const std::uint8_t> z, const UndirectedAdjacency& nbrs, double q);

// Condition only, for replicate loops; writes into `out`.
void classify_into(std::span<const std::uint8_t> z, const UndirectedAdjacency& nbrs, double q,
                   std::vector<Condition>& out);

struct ExposurePropensities {
  std::vector<std::array<double, 5>> pi;  // [user][condition], unclassified last
  std::size_t reps = 0;                   // 0 for exact values
  std::uint64_t seed = 0;

  // Binomial Monte Carlo standard error of pi[i][c].
  double se(std::size_t i, int c) const;
};

ExposurePropensities mc_exposure_propensities(const ClusterAssignment& clusters, const UndirectedAdjacency& nbrs,
                                              const DesignParams& params, double q, std::size_t reps,
                                              std::uint64_t seed, unsigned workers = 1);

// Exact propensities by full enumeration of the design (small designs only).
ExposurePropensities exact_exposure_propensities(const ClusterAssignment& clusters, const UndirectedAdjacency& nbrs,
                                                 const DesignParams& params, double q);

struct ExposureTable {
  double q = 0.7;
  ExposureState state;
  ExposurePropensities propensities;
  std::vector<double> weight;           // 1 / pi(observed condition); 0 when excluded
  std::vector<std::uint8_t> included;
  std::size_t unclassified = 0;
  std::size_t trimmed = 0;              // pi(observed) below the floor
  double floor = 1e-4;
};

ExposureTable build_exposure_table(std::span<const std::uint8_t> z, const UndirectedAdjacency& nbrs, double q,
                                   ExposurePropensities propensities, double floor = 1e-4);

enum class HacKernel { kIndependent, kCluster, kClusterOrAdjacent };
std::string kernel_name(HacKernel k);

struct Dependency {
  HacKernel kernel = HacKernel::kClusterOrAdjacent;
  std::span<const int> cluster_of;       // per included user position
  const UndirectedAdjacency* adjacency = nullptr;  // indexed like cluster_of
};

// Sandwich covariance bread * meat * bread; meat sums (w_i e_i x_i)(w_j e_j x_j)'
// over dependent pairs (i == j always dependent).
Eigen::MatrixXd network_hac_vcov(const Eigen::MatrixXd& x, const stats::WlsFit& fit, const Dependency& dep);

struct HajekFit {
  std::array<double, 4> mu{};
  Eigen::Matrix4d vcov = Eigen::Matrix4d::Zero();
  std::array<std::size_t, 4> cell_count{};
  std::size_t n = 0;
  int bins = 0;
  HacKernel kernel = HacKernel::kClusterOrAdjacent;
};

// WLS of y on the four condition indicators plus centered bin dummies (when
// `bin_of` is non-empty), weights from the table. Without bins the condition
// coefficients are the Hajek ratios.
HajekFit hajek_estimate(std::span<const double> y, const ExposureTable& table, std::span<const int> bin_of,
                        std::span<const int> cluster_of, const UndirectedAdjacency* adjacency,
                        HacKernel kernel = HacKernel::kClusterOrAdjacent);

// Explicit ratio sum z_i(t) w_i y_i / sum z_i(t) w_i.
std::array<double, 4> hajek_ratio(std::span<const double> y, const ExposureTable& table);

struct Contrast {
  std::string name;
  double point = 0.0;
  double std_error = 0.0;
  double p_value = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct ContrastReport {
  std::array<double, 4> mu{};
  std::vector<Contrast> contrasts;  // TL, CH, TH, each against CL
  std::string kernel;
};

ContrastReport exposure_contrasts(const std::array<double, 4>& mu, const Eigen::Matrix4d& vcov);

Json to_json(const ContrastReport& r);

}  // namespace netx
