#include "netx/netgraph.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <queue>

#include "netx/error.hpp"
#include "netx/rng.hpp"

namespace netx {

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

bool id_less(std::string_view a, std::string_view b) {
  bool da = all_digits(a), db = all_digits(b);
  if (da && db) {
    auto strip = [](std::string_view s) {
      std::size_t k = s.find_first_not_of('0');
      return k == std::string_view::npos ? std::string_view("0") : s.substr(k);
    };
    std::string_view sa = strip(a), sb = strip(b);
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    if (sa != sb) return sa < sb;
    return a < b;
  }
  if (da != db) return da;
  return a < b;
}

NodeIndex::NodeIndex(std::vector<std::string> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end(), [](const std::string& a, const std::string& b) { return id_less(a, b); });
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  lookup_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) lookup_.emplace(ids_[i], static_cast<int>(i));
}

std::optional<int> NodeIndex::find(std::string_view id) const {
  auto it = lookup_.find(std::string(id));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

int NodeIndex::at(std::string_view id) const {
  auto found = find(id);
  if (!found) throw ValidationError("unknown user id '" + std::string(id) + "'");
  return *found;
}

InteractionGraph::InteractionGraph(NodeIndex nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  for (const Edge& e : edges_) {
    require(e.src != e.dst, "interaction graph contains a self-loop");
    require(e.weight >= 1, "interaction graph edge weight must be >= 1");
  }
}

InteractionGraph InteractionGraph::from_weighted_edges(
    std::span<const std::tuple<std::string, std::string, std::int64_t>> rows) {
  std::vector<std::string> ids;
  for (const auto& [src, dst, w] : rows) {
    if (src == dst || w <= 0) continue;
    ids.push_back(src);
    ids.push_back(dst);
  }
  if (ids.empty()) throw ValidationError("empty graph: no usable interaction edges");
  NodeIndex index(std::move(ids));
  std::map<std::pair<int, int>, std::int64_t> acc;
  for (const auto& [src, dst, w] : rows) {
    if (src == dst || w <= 0) continue;
    acc[{index.at(src), index.at(dst)}] += w;
  }
  std::vector<Edge> edges;
  edges.reserve(acc.size());
  for (const auto& [key, w] : acc) edges.push_back({key.first, key.second, w});
  return InteractionGraph(std::move(index), std::move(edges));
}

std::int64_t InteractionGraph::weight(int src, int dst) const {
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair{src, dst}, [](const Edge& e, std::pair<int, int> key) {
    return e.src != key.first ? e.src < key.first : e.dst < key.second;
  });
  if (it != edges_.end() && it->src == src && it->dst == dst) return it->weight;
  return 0;
}

InteractionGraph build_graph(std::span<const InteractionEvent> events) {
  if (events.empty()) throw ValidationError("empty graph: no interaction events");
  std::vector<std::tuple<std::string, std::string, std::int64_t>> rows;
  rows.reserve(events.size());
  for (const auto& e : events) rows.emplace_back(e.src, e.dst, 1);
  return InteractionGraph::from_weighted_edges(rows);
}

InteractionGraph prune_graph(const InteractionGraph& g, int k_out, int k_in) {
  require(k_out >= 1 && k_in >= 1, "prune_graph: k_out and k_in must be >= 1");
  const auto& edges = g.edges();
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<std::size_t>> out(n), in(n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    out[static_cast<std::size_t>(edges[e].src)].push_back(e);
    in[static_cast<std::size_t>(edges[e].dst)].push_back(e);
  }
  std::vector<char> keep(edges.size(), 0);
  auto take_top = [&](std::vector<std::size_t>& list, int k, bool by_dst) {
    auto rank = [&](std::size_t a, std::size_t b) {
      if (edges[a].weight != edges[b].weight) return edges[a].weight > edges[b].weight;
      return by_dst ? edges[a].dst < edges[b].dst : edges[a].src < edges[b].src;
    };
    std::size_t take = std::min(list.size(), static_cast<std::size_t>(k));
    std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(take), list.end(), rank);
    for (std::size_t j = 0; j < take; ++j) keep[list[j]] = 1;
  };
  for (std::size_t v = 0; v < n; ++v) {
    take_top(out[v], k_out, true);
    take_top(in[v], k_in, false);
  }
  std::vector<Edge> kept;
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (keep[e]) kept.push_back(edges[e]);
  return InteractionGraph(g.nodes(), std::move(kept));
}

UndirectedAdjacency undirected_view(const InteractionGraph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<std::map<int, std::int64_t>> acc(n);
  for (const Edge& e : g.edges()) {
    acc[static_cast<std::size_t>(e.src)][e.dst] += e.weight;
    acc[static_cast<std::size_t>(e.dst)][e.src] += e.weight;
  }
  UndirectedAdjacency adj;
  adj.offsets.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) adj.offsets[v + 1] = adj.offsets[v] + acc[v].size();
  adj.neighbors.reserve(adj.offsets[n]);
  adj.weights.reserve(adj.offsets[n]);
  for (std::size_t v = 0; v < n; ++v)
    for (const auto& [u, w] : acc[v]) {
      adj.neighbors.push_back(u);
      adj.weights.push_back(w);
    }
  return adj;
}

std::vector<int> bfs_distances(const UndirectedAdjacency& adj, int source, int max_depth) {
  std::vector<int> dist(adj.num_nodes(), -1);
  std::queue<int> frontier;
  dist[static_cast<std::size_t>(source)] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    int v = frontier.front();
    frontier.pop();
    int d = dist[static_cast<std::size_t>(v)];
    if (max_depth >= 0 && d >= max_depth) continue;
    for (int u : adj.neighbors_of(v)) {
      if (dist[static_cast<std::size_t>(u)] < 0) {
        dist[static_cast<std::size_t>(u)] = d + 1;
        frontier.push(u);
      }
    }
  }
  return dist;
}

std::vector<std::vector<int>> ClusterAssignment::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(num_clusters()));
  for (std::size_t i = 0; i < cluster_of.size(); ++i)
    out[static_cast<std::size_t>(cluster_of[i])].push_back(static_cast<int>(i));
  return out;
}

bool ClusterAssignment::is_centroid(int node) const {
  int c = cluster_of[static_cast<std::size_t>(node)];
  return centroids[static_cast<std::size_t>(c)] == node;
}

ClusterAssignment make_clusters(std::span<const std::tuple<std::string, std::int64_t, bool>> rows) {
  require(!rows.empty(), "cluster table is empty");
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (const auto& row : rows) ids.push_back(std::get<0>(row));
  ClusterAssignment out;
  out.nodes = NodeIndex(ids);
  require(out.nodes.size() == rows.size(), "cluster table lists a user more than once");
  std::vector<std::int64_t> label(rows.size());
  std::vector<char> centroid(rows.size(), 0);
  for (const auto& [id, lab, is_c] : rows) {
    int i = out.nodes.at(id);
    label[static_cast<std::size_t>(i)] = lab;
    centroid[static_cast<std::size_t>(i)] = is_c ? 1 : 0;
  }
  std::map<std::int64_t, int> dense;
  out.cluster_of.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto [it, inserted] = dense.emplace(label[i], static_cast<int>(dense.size()));
    out.cluster_of[i] = it->second;
  }
  out.centroids.assign(dense.size(), -1);
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (centroid[i]) {
      int& slot = out.centroids[static_cast<std::size_t>(out.cluster_of[i])];
      require(slot < 0, "cluster table marks two centroids in one cluster");
      slot = static_cast<int>(i);
    }
  return out;
}

ClusterAssignment three_net_cluster(const InteractionGraph& g, std::uint64_t seed) {
  const std::size_t n = g.num_nodes();
  require(n > 0, "three_net_cluster: graph is empty");
  UndirectedAdjacency adj = undirected_view(g);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng::Stream stream(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[stream.below(i)]);

  // Centroid selection: skip anything within two hops of a chosen centroid.
  std::vector<char> blocked(n, 0);
  std::vector<int> centroids;
  for (int v : order) {
    if (blocked[static_cast<std::size_t>(v)]) continue;
    centroids.push_back(v);
    blocked[static_cast<std::size_t>(v)] = 1;
    for (int u : adj.neighbors_of(v)) {
      blocked[static_cast<std::size_t>(u)] = 1;
      for (int x : adj.neighbors_of(u)) blocked[static_cast<std::size_t>(x)] = 1;
    }
  }

  // Layered multi-source BFS carrying the set of nearest centroids (by cluster id).
  std::vector<int> dist(n, -1);
  std::vector<std::vector<int>> nearest(n);
  std::vector<int> cluster_of(n, -1);
  std::vector<int> layer;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    int v = centroids[c];
    dist[static_cast<std::size_t>(v)] = 0;
    nearest[static_cast<std::size_t>(v)] = {static_cast<int>(c)};
    cluster_of[static_cast<std::size_t>(v)] = static_cast<int>(c);
    layer.push_back(v);
  }
  int depth = 0;
  while (!layer.empty()) {
    std::vector<int> next;
    for (int v : layer)
      for (int u : adj.neighbors_of(v)) {
        auto& du = dist[static_cast<std::size_t>(u)];
        if (du < 0) {
          du = depth + 1;
          next.push_back(u);
        }
        if (du == depth + 1) {
          auto& set = nearest[static_cast<std::size_t>(u)];
          for (int c : nearest[static_cast<std::size_t>(v)]) set.push_back(c);
        }
      }
    std::sort(next.begin(), next.end());
    // Tie-break against clusters as they stood at the end of the previous layer.
    std::vector<int> chosen(next.size(), -1);
    for (std::size_t k = 0; k < next.size(); ++k) {
      int u = next[k];
      auto& set = nearest[static_cast<std::size_t>(u)];
      std::sort(set.begin(), set.end());
      set.erase(std::unique(set.begin(), set.end()), set.end());
      int best = set.front();
      if (set.size() > 1) {
        std::int64_t best_w = -1;
        for (int c : set) {
          std::int64_t w = 0;
          auto nb = adj.neighbors_of(u);
          auto wt = adj.weights_of(u);
          for (std::size_t j = 0; j < nb.size(); ++j)
            if (cluster_of[static_cast<std::size_t>(nb[j])] == c) w += wt[j];
          if (w > best_w) {
            best_w = w;
            best = c;
          }
        }
      }
      chosen[k] = best;
    }
    for (std::size_t k = 0; k < next.size(); ++k) cluster_of[static_cast<std::size_t>(next[k])] = chosen[k];
    layer = std::move(next);
    ++depth;
  }

  ClusterAssignment out;
  out.nodes = g.nodes();
  out.seed = seed;
  out.centroids = centroids;
  out.cluster_of = cluster_of;
  for (std::size_t v = 0; v < n; ++v)
    if (out.cluster_of[v] < 0) {
      // Unreachable from every centroid cannot happen (every node is a
      // centroid or within two hops of one), but keep the singleton fallback.
      out.cluster_of[v] = static_cast<int>(out.centroids.size());
      out.centroids.push_back(static_cast<int>(v));
    }
  return out;
}

}  // namespace netx
