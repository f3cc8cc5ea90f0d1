#include "netx/exposure.hpp"

#include <cmath>
#include <map>

#include "netx/error.hpp"
#include "netx/parallel.hpp"

namespace netx {

std::string condition_name(Condition c) {
  switch (c) {
    case Condition::kCL: return "CL";
    case Condition::kCH: return "CH";
    case Condition::kTL: return "TL";
    case Condition::kTH: return "TH";
    case Condition::kUnclassified: return "unclassified";
  }
  return "?";
}

std::string kernel_name(HacKernel k) {
  switch (k) {
    case HacKernel::kIndependent: return "independent";
    case HacKernel::kCluster: return "cluster";
    case HacKernel::kClusterOrAdjacent: return "cluster_or_adjacent";
  }
  return "?";
}

UndirectedAdjacency neighbor_weights(const InteractionGraph& g, NeighborMode mode) {
  if (mode == NeighborMode::kUndirected) return undirected_view(g);
  const std::size_t n = g.num_nodes();
  UndirectedAdjacency adj;
  adj.offsets.assign(n + 1, 0);
  for (const Edge& e : g.edges()) ++adj.offsets[static_cast<std::size_t>(e.src) + 1];
  for (std::size_t v = 0; v < n; ++v) adj.offsets[v + 1] += adj.offsets[v];
  // Edges are sorted by (src, dst), so a single pass fills CSR in order.
  for (const Edge& e : g.edges()) {
    adj.neighbors.push_back(e.dst);
    adj.weights.push_back(e.weight);
  }
  return adj;
}

void validate_q(double q) { require(q > 0.5 && q <= 1.0, "q must lie in (0.5, 1]"); }

namespace {

Condition classify_one(bool treated, double w, double wt, double q) {
  if (!(w > 0.0)) return Condition::kUnclassified;
  bool high = wt / w >= q;
  bool low = (w - wt) / w >= q;
  if (high) return treated ? Condition::kTH : Condition::kCH;
  if (low) return treated ? Condition::kTL : Condition::kCL;
  return Condition::kUnclassified;
}

}  // namespace

ExposureState classify_exposure(std::span<const std::uint8_t> z, const UndirectedAdjacency& nbrs, double q) {
  validate_q(q);
  const std::size_t n = nbrs.num_nodes();
  require(z.size() == n, "classify_exposure: assignment and graph sizes differ");
  ExposureState s;
  s.w_total.assign(n, 0.0);
  s.w_treated.assign(n, 0.0);
  s.condition.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto nb = nbrs.neighbors_of(static_cast<int>(i));
    auto wt = nbrs.weights_of(static_cast<int>(i));
    for (std::size_t k = 0; k < nb.size(); ++k) {
      s.w_total[i] += static_cast<double>(wt[k]);
      if (z[static_cast<std::size_t>(nb[k])]) s.w_treated[i] += static_cast<double>(wt[k]);
    }
    s.condition[i] = classify_one(z[i] != 0, s.w_total[i], s.w_treated[i], q);
  }
  return s;
}

void classify_into(std::span<const std::uint8_t> z, const UndirectedAdjacency& nbrs, double q,
                   std::vector<Condition>& out) {
  const std::size_t n = nbrs.num_nodes();
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto nb = nbrs.neighbors_of(static_cast<int>(i));
    auto wt = nbrs.weights_of(static_cast<int>(i));
    double w = 0.0, t = 0.0;
    for (std::size_t k = 0; k < nb.size(); ++k) {
      w += static_cast<double>(wt[k]);
      if (z[static_cast<std::size_t>(nb[k])]) t += static_cast<double>(wt[k]);
    }
    out[i] = classify_one(z[i] != 0, w, t, q);
  }
}

double ExposurePropensities::se(std::size_t i, int c) const {
  if (reps == 0) return 0.0;
  double p = pi[i][static_cast<std::size_t>(c)];
  return std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
}

ExposurePropensities mc_exposure_propensities(const ClusterAssignment& clusters, const UndirectedAdjacency& nbrs,
                                              const DesignParams& params, double q, std::size_t reps,
                                              std::uint64_t seed, unsigned workers) {
  validate_q(q);
  params.validate();
  require(reps >= 1000, "exposure propensities need at least 1000 replicates");
  const std::size_t n = clusters.num_nodes();
  require(nbrs.num_nodes() == n, "mc_exposure_propensities: graph and clusters differ in size");
  unsigned chunks = std::max(1u, workers);
  std::vector<std::vector<std::array<std::uint64_t, 5>>> counts(chunks,
                                                                std::vector<std::array<std::uint64_t, 5>>(n));
  parallel_chunks(reps, chunks, [&](std::size_t w, std::size_t begin, std::size_t end) {
    std::vector<std::uint8_t> z;
    std::vector<Condition> cond;
    auto& local = counts[w];
    for (std::size_t b = begin; b < end; ++b) {
      assign_z(clusters.cluster_of, clusters.num_clusters(), params, replicate_seed(seed, b), z);
      classify_into(z, nbrs, q, cond);
      for (std::size_t i = 0; i < n; ++i) ++local[i][static_cast<std::size_t>(cond[i])];
    }
  });
  ExposurePropensities out;
  out.reps = reps;
  out.seed = seed;
  out.pi.assign(n, {});
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 5; ++c) {
      std::uint64_t total = 0;
      for (const auto& local : counts) total += local[i][static_cast<std::size_t>(c)];
      out.pi[i][static_cast<std::size_t>(c)] = static_cast<double>(total) / static_cast<double>(reps);
    }
  return out;
}

ExposurePropensities exact_exposure_propensities(const ClusterAssignment& clusters, const UndirectedAdjacency& nbrs,
                                                 const DesignParams& params, double q) {
  validate_q(q);
  DesignDistribution dist = enumerate_design(clusters, params);
  const std::size_t n = clusters.num_nodes();
  ExposurePropensities out;
  out.pi.assign(n, {});
  std::vector<std::uint8_t> z(n);
  std::vector<Condition> cond;
  for (std::uint32_t mask = 0; mask < dist.prob.size(); ++mask) {
    double p = dist.prob[mask];
    if (p == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) z[i] = DesignDistribution::z(mask, static_cast<int>(i));
    classify_into(z, nbrs, q, cond);
    for (std::size_t i = 0; i < n; ++i) out.pi[i][static_cast<std::size_t>(cond[i])] += p;
  }
  return out;
}

ExposureTable build_exposure_table(std::span<const std::uint8_t> z, const UndirectedAdjacency& nbrs, double q,
                                   ExposurePropensities propensities, double floor) {
  ExposureTable t;
  t.q = q;
  t.floor = floor;
  t.state = classify_exposure(z, nbrs, q);
  t.propensities = std::move(propensities);
  const std::size_t n = z.size();
  require(t.propensities.pi.size() == n, "build_exposure_table: propensity table size mismatch");
  t.weight.assign(n, 0.0);
  t.included.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    Condition c = t.state.condition[i];
    if (c == Condition::kUnclassified) {
      ++t.unclassified;
      continue;
    }
    double pi = t.propensities.pi[i][static_cast<std::size_t>(c)];
    if (!(pi >= floor) || pi <= 0.0) {
      ++t.trimmed;
      continue;
    }
    t.weight[i] = 1.0 / pi;
    t.included[i] = 1;
  }
  return t;
}

Eigen::MatrixXd network_hac_vcov(const Eigen::MatrixXd& x, const stats::WlsFit& fit, const Dependency& dep) {
  const Eigen::Index n = x.rows(), p = x.cols();
  Eigen::MatrixXd g(n, p);
  for (Eigen::Index i = 0; i < n; ++i) g.row(i) = x.row(i) * (fit.weights(i) * fit.residuals(i));
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
  if (dep.kernel == HacKernel::kIndependent) {
    meat = g.transpose() * g;
  } else {
    require(static_cast<Eigen::Index>(dep.cluster_of.size()) == n, "network_hac_vcov: cluster labels misaligned");
    std::map<int, Eigen::VectorXd> sums;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto [it, fresh] = sums.try_emplace(dep.cluster_of[static_cast<std::size_t>(i)], Eigen::VectorXd::Zero(p));
      it->second += g.row(i).transpose();
    }
    for (const auto& [c, s] : sums) meat += s * s.transpose();
    if (dep.kernel == HacKernel::kClusterOrAdjacent && dep.adjacency) {
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int j : dep.adjacency->neighbors_of(static_cast<int>(i))) {
          if (dep.cluster_of[static_cast<std::size_t>(j)] == dep.cluster_of[static_cast<std::size_t>(i)]) continue;
          meat += g.row(i).transpose() * g.row(j);
        }
      }
    }
  }
  return fit.bread * meat * fit.bread;
}

std::array<double, 4> hajek_ratio(std::span<const double> y, const ExposureTable& table) {
  std::array<double, 4> num{}, den{};
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!table.included[i]) continue;
    auto c = static_cast<std::size_t>(table.state.condition[i]);
    num[c] += table.weight[i] * y[i];
    den[c] += table.weight[i];
  }
  std::array<double, 4> mu{};
  for (std::size_t c = 0; c < 4; ++c) mu[c] = den[c] > 0.0 ? num[c] / den[c] : std::nan("");
  return mu;
}

HajekFit hajek_estimate(std::span<const double> y, const ExposureTable& table, std::span<const int> bin_of,
                        std::span<const int> cluster_of, const UndirectedAdjacency* adjacency, HacKernel kernel) {
  const std::size_t n_all = y.size();
  require(table.included.size() == n_all, "hajek_estimate: outcome and exposure table sizes differ");
  require(bin_of.empty() || bin_of.size() == n_all, "hajek_estimate: bins misaligned");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n_all; ++i)
    if (table.included[i]) rows.push_back(i);
  HajekFit fit;
  fit.n = rows.size();
  fit.kernel = kernel;
  for (std::size_t i : rows) ++fit.cell_count[static_cast<std::size_t>(table.state.condition[i])];
  for (int c = 0; c < 4; ++c)
    if (fit.cell_count[static_cast<std::size_t>(c)] == 0)
      throw ValidationError("exposure cell " + condition_name(static_cast<Condition>(c)) + " is empty");

  // Bins present among included users, renumbered; the first is the reference.
  std::map<int, int> bin_index;
  if (!bin_of.empty())
    for (std::size_t i : rows) bin_index.emplace(bin_of[i], 0);
  int k = 0;
  for (auto& [b, idx] : bin_index) idx = k++;
  const int nbins = static_cast<int>(bin_index.size());
  fit.bins = nbins;
  const Eigen::Index p = 4 + std::max(0, nbins - 1);
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, p);
  Eigen::VectorXd yv(n), w(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    std::size_t i = rows[static_cast<std::size_t>(r)];
    x(r, static_cast<Eigen::Index>(table.state.condition[i])) = 1.0;
    if (nbins > 1) {
      int b = bin_index.at(bin_of[i]);
      if (b > 0) x(r, 3 + b) = 1.0;
    }
    yv(r) = y[i];
    w(r) = table.weight[i];
  }
  if (nbins > 1) {
    // Centering the dummies at their weighted means keeps the condition
    // coefficients on the scale of adjusted means.
    double wsum = w.sum();
    for (Eigen::Index c = 4; c < p; ++c) {
      double m = w.dot(x.col(c)) / wsum;
      x.col(c).array() -= m;
    }
  }
  stats::WlsFit wfit = stats::wls(x, yv, w);
  for (int c = 0; c < 4; ++c) fit.mu[static_cast<std::size_t>(c)] = wfit.coef(c);

  std::vector<int> cl(rows.size(), 0);
  UndirectedAdjacency sub;
  if (kernel != HacKernel::kIndependent) {
    require(cluster_of.size() == n_all, "hajek_estimate: cluster labels misaligned");
    for (std::size_t r = 0; r < rows.size(); ++r) cl[r] = cluster_of[rows[r]];
  }
  if (kernel == HacKernel::kClusterOrAdjacent && adjacency) {
    std::vector<int> pos(n_all, -1);
    for (std::size_t r = 0; r < rows.size(); ++r) pos[rows[r]] = static_cast<int>(r);
    sub.offsets.assign(rows.size() + 1, 0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (int j : adjacency->neighbors_of(static_cast<int>(rows[r])))
        if (pos[static_cast<std::size_t>(j)] >= 0) {
          sub.neighbors.push_back(pos[static_cast<std::size_t>(j)]);
          sub.weights.push_back(1);
        }
      sub.offsets[r + 1] = sub.neighbors.size();
    }
  }
  Dependency dep{kernel, cl, kernel == HacKernel::kClusterOrAdjacent && adjacency ? &sub : nullptr};
  Eigen::MatrixXd v = network_hac_vcov(x, wfit, dep);
  fit.vcov = v.topLeftCorner(4, 4);
  return fit;
}

ContrastReport exposure_contrasts(const std::array<double, 4>& mu, const Eigen::Matrix4d& vcov) {
  ContrastReport r;
  r.mu = mu;
  const std::pair<const char*, int> defs[] = {{"tau_TL", 2}, {"tau_CH", 1}, {"tau_TH", 3}};
  for (const auto& [name, t] : defs) {
    Contrast c;
    c.name = name;
    c.point = mu[static_cast<std::size_t>(t)] - mu[0];
    double var = vcov(t, t) + vcov(0, 0) - 2.0 * vcov(t, 0);
    c.std_error = std::sqrt(std::max(0.0, var));
    c.ci_low = c.point - kZ975 * c.std_error;
    c.ci_high = c.point + kZ975 * c.std_error;
    c.p_value = c.std_error > 0.0 ? stats::two_sided_normal_p(c.point / c.std_error) : (c.point == 0.0 ? 1.0 : 0.0);
    r.contrasts.push_back(c);
  }
  return r;
}

Json to_json(const ContrastReport& r) {
  Json j;
  Json mu = Json::object();
  for (int c = 0; c < 4; ++c) mu[condition_name(static_cast<Condition>(c))] = number_or_null(r.mu[static_cast<std::size_t>(c)]);
  j["mu"] = mu;
  Json arr = Json::array();
  for (const auto& c : r.contrasts)
    arr.push_back({{"name", c.name},
                   {"point", number_or_null(c.point)},
                   {"pct_change", number_or_null(pct_change(c.point))},
                   {"std_error", number_or_null(c.std_error)},
                   {"ci_low", number_or_null(c.ci_low)},
                   {"ci_high", number_or_null(c.ci_high)},
                   {"p_value", number_or_null(c.p_value)}});
  j["contrasts"] = arr;
  j["kernel"] = r.kernel;
  return j;
}

}  // namespace netx
