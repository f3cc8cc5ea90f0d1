#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace netx {

using Timestamp = std::int64_t;  // seconds since the Unix epoch, UTC

// Ordering used for every user-id tie-break: all-digit ids compare
// numerically, anything else lexicographically, digits before non-digits.
bool id_less(std::string_view a, std::string_view b);

// Sorted, deduplicated user ids with O(1) lookup.
class NodeIndex {
 public:
  NodeIndex() = default;
  explicit NodeIndex(std::vector<std::string> ids);

  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  const std::string& id(int i) const { return ids_[static_cast<std::size_t>(i)]; }
  std::optional<int> find(std::string_view id) const;
  int at(std::string_view id) const;  // throws ValidationError when absent

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, int> lookup_;
};

struct InteractionEvent {
  std::string src;
  std::string dst;
  Timestamp ts = 0;
};

struct Edge {
  int src = 0;
  int dst = 0;
  std::int64_t weight = 0;
};

// Weighted directed interaction network. Node indices follow id_less order;
// edges are sorted by (src, dst), carry weight >= 1, and never self-loop.
class InteractionGraph {
 public:
  InteractionGraph() = default;
  InteractionGraph(NodeIndex nodes, std::vector<Edge> edges);

  // Sums duplicate (src, dst) rows; drops self-loops and non-positive weights.
  static InteractionGraph from_weighted_edges(
      std::span<const std::tuple<std::string, std::string, std::int64_t>> rows);

  const NodeIndex& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  bool directed() const { return true; }
  std::int64_t weight(int src, int dst) const;

 private:
  NodeIndex nodes_;
  std::vector<Edge> edges_;
};

InteractionGraph build_graph(std::span<const InteractionEvent> events);

// Keeps the union of every node's k_out heaviest outgoing and k_in heaviest
// incoming edges. Ties: heavier first, then lower counterpart id.
InteractionGraph prune_graph(const InteractionGraph& g, int k_out = 10, int k_in = 10);

// Undirected, deduplicated adjacency in CSR form. `weight` is the sum of the
// edge weights in both directions between the two endpoints.
struct UndirectedAdjacency {
  std::vector<std::size_t> offsets;
  std::vector<int> neighbors;
  std::vector<std::int64_t> weights;

  std::size_t num_nodes() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const int> neighbors_of(int v) const {
    return {neighbors.data() + offsets[v], offsets[v + 1] - offsets[v]};
  }
  std::span<const std::int64_t> weights_of(int v) const {
    return {weights.data() + offsets[v], offsets[v + 1] - offsets[v]};
  }
};

UndirectedAdjacency undirected_view(const InteractionGraph& g);

// Hop distances from `source` (-1 = unreachable). max_depth < 0 means unbounded.
std::vector<int> bfs_distances(const UndirectedAdjacency& adj, int source, int max_depth = -1);

struct ClusterAssignment {
  NodeIndex nodes;
  std::vector<int> cluster_of;  // node index -> cluster id (0..num_clusters-1)
  std::vector<int> centroids;   // cluster id -> node index, -1 when unknown
  std::uint64_t seed = 0;

  int num_clusters() const { return static_cast<int>(centroids.size()); }
  std::size_t num_nodes() const { return cluster_of.size(); }
  std::vector<std::vector<int>> members() const;
  bool is_centroid(int node) const;
};

// Builds a ClusterAssignment from (user, cluster-label) pairs. Labels are
// renumbered densely in order of first appearance along sorted user ids.
ClusterAssignment make_clusters(std::span<const std::tuple<std::string, std::int64_t, bool>> rows);

// 3-net clustering on the undirected hop metric. Candidates are visited in a
// seeded uniform order; a candidate becomes a centroid unless it lies within
// two hops of an existing centroid. Every node then joins a nearest centroid;
// equidistant ties go to the cluster with the larger total edge weight to the
// node's already-assigned members, then to the lower cluster id.
ClusterAssignment three_net_cluster(const InteractionGraph& g, std::uint64_t seed);

}  // namespace netx
