#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "netx/netgraph.hpp"

namespace netx {

struct DesignParams {
  double p_t = 0.5;    // cluster treatment probability
  double p_hp = 0.18;  // individual flip probability
  void validate() const;
};

// Marginal and pairwise treatment propensities of the hole-punching design.
// Index order is [t], [t1][t2] with t = 1 treated, 0 control.
struct PropensityTable {
  double marginal[2] = {0.0, 0.0};
  double same[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  double cross[2][2] = {{0.0, 0.0}, {0.0, 0.0}};

  double p(int t) const { return marginal[t]; }
  double joint(int t1, int t2, bool same_cluster) const {
    return same_cluster ? same[t1][t2] : cross[t1][t2];
  }
};

PropensityTable propensities(const DesignParams& params);

// Correlation of two same-cluster assignments implied by the table.
double within_cluster_correlation(const PropensityTable& table);

struct Assignment {
  std::vector<std::uint8_t> z;             // per node index
  std::vector<std::uint8_t> cluster_bits;  // per cluster id
  std::vector<std::uint8_t> flips;         // per node index
  std::uint64_t seed = 0;
};

// Stage one draws one Bernoulli(p_t) bit per cluster, stage two flips each
// node with probability p_hp. Draws are keyed by (seed, cluster) and
// (seed, node), so the result does not depend on evaluation order.
Assignment assign(const ClusterAssignment& clusters, const DesignParams& params, std::uint64_t seed);

// Treatment vector only; writes into `z` (resized to the node count).
void assign_z(std::span<const int> cluster_of, int num_clusters, const DesignParams& params,
              std::uint64_t seed, std::vector<std::uint8_t>& z);

// Exact distribution over treatment vectors: prob[mask] where bit i of mask
// is z_i. Built by literally enumerating every cluster-bit state and every
// flip pattern. Refuses more than 20 nodes or 6 clusters.
struct DesignDistribution {
  int num_nodes = 0;
  std::vector<double> prob;
  static bool z(std::uint32_t mask, int node) { return (mask >> node) & 1u; }
};

DesignDistribution enumerate_design(const ClusterAssignment& clusters, const DesignParams& params);

// Seed of replicate b.
std::uint64_t replicate_seed(std::uint64_t master_seed, std::uint64_t b);

Assignment replicate_assignment(const ClusterAssignment& clusters, const DesignParams& params,
                                std::uint64_t master_seed, std::uint64_t b);

// Calls fn(b, z) for b in [0, B). Each worker reuses its own buffer; fn must
// only write to per-replicate or per-worker state.
void for_each_replicate(const ClusterAssignment& clusters, const DesignParams& params, std::size_t reps,
                        std::uint64_t master_seed, unsigned workers,
                        const std::function<void(std::size_t, std::span<const std::uint8_t>)>& fn);

// Pooled Pearson correlation of z_i, z_j over all same-cluster pairs (i < j)
// across the supplied assignments.
double empirical_within_cluster_correlation(const ClusterAssignment& clusters,
                                            std::span<const Assignment> draws);

}  // namespace netx
