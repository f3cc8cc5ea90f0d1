#include "netx/design.hpp"

#include <cmath>

#include "netx/error.hpp"
#include "netx/parallel.hpp"
#include "netx/rng.hpp"

namespace netx {

namespace {

constexpr std::uint64_t kClusterStream = 1;
constexpr std::uint64_t kFlipStream = 2;

}  // namespace

void DesignParams::validate() const {
  require(std::isfinite(p_t) && p_t >= 0.0 && p_t <= 1.0, "p_t must lie in [0, 1]");
  require(std::isfinite(p_hp) && p_hp >= 0.0 && p_hp < 0.5, "p_hp must lie in [0, 0.5)");
}

PropensityTable propensities(const DesignParams& params) {
  params.validate();
  const double pt = params.p_t, ph = params.p_hp;
  PropensityTable t;
  t.marginal[1] = pt + ph - 2.0 * pt * ph;
  t.marginal[0] = 1.0 - t.marginal[1];
  t.same[1][1] = pt + ph * ph - 2.0 * pt * ph;
  t.same[0][0] = 1.0 + 2.0 * pt * ph + ph * ph - 2.0 * ph - pt;
  t.same[1][0] = ph * (1.0 - ph);
  t.same[0][1] = t.same[1][0];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) t.cross[a][b] = t.marginal[a] * t.marginal[b];
  return t;
}

double within_cluster_correlation(const PropensityTable& table) {
  double v = table.p(1) * table.p(0);
  if (v <= 0.0) return 0.0;
  return (table.same[1][1] - table.p(1) * table.p(1)) / v;
}

void assign_z(std::span<const int> cluster_of, int num_clusters, const DesignParams& params,
              std::uint64_t seed, std::vector<std::uint8_t>& z) {
  thread_local std::vector<std::uint8_t> bits;
  bits.resize(static_cast<std::size_t>(num_clusters));
  for (int c = 0; c < num_clusters; ++c)
    bits[static_cast<std::size_t>(c)] = rng::uniform(seed, kClusterStream, static_cast<std::uint64_t>(c)) < params.p_t;
  z.resize(cluster_of.size());
  for (std::size_t i = 0; i < cluster_of.size(); ++i) {
    std::uint8_t flip = rng::uniform(seed, kFlipStream, i) < params.p_hp;
    z[i] = bits[static_cast<std::size_t>(cluster_of[i])] ^ flip;
  }
}

Assignment assign(const ClusterAssignment& clusters, const DesignParams& params, std::uint64_t seed) {
  params.validate();
  Assignment a;
  a.seed = seed;
  const int nc = clusters.num_clusters();
  a.cluster_bits.resize(static_cast<std::size_t>(nc));
  for (int c = 0; c < nc; ++c)
    a.cluster_bits[static_cast<std::size_t>(c)] =
        rng::uniform(seed, kClusterStream, static_cast<std::uint64_t>(c)) < params.p_t;
  const std::size_t n = clusters.num_nodes();
  a.flips.resize(n);
  a.z.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    a.flips[i] = rng::uniform(seed, kFlipStream, i) < params.p_hp;
    a.z[i] = a.cluster_bits[static_cast<std::size_t>(clusters.cluster_of[i])] ^ a.flips[i];
  }
  return a;
}

DesignDistribution enumerate_design(const ClusterAssignment& clusters, const DesignParams& params) {
  params.validate();
  const int n = static_cast<int>(clusters.num_nodes());
  const int nc = clusters.num_clusters();
  require(n >= 1 && n <= 20, "enumerate_design: node count must be in [1, 20]");
  require(nc <= 6, "enumerate_design: at most 6 clusters");
  DesignDistribution out;
  out.num_nodes = n;
  out.prob.assign(std::size_t{1} << n, 0.0);
  const std::uint32_t flip_states = 1u << n;
  for (std::uint32_t cb = 0; cb < (1u << nc); ++cb) {
    double p_bits = 1.0;
    for (int c = 0; c < nc; ++c) p_bits *= ((cb >> c) & 1u) ? params.p_t : 1.0 - params.p_t;
    if (p_bits == 0.0) continue;
    std::uint32_t base = 0;
    for (int i = 0; i < n; ++i)
      if ((cb >> clusters.cluster_of[static_cast<std::size_t>(i)]) & 1u) base |= 1u << i;
    for (std::uint32_t f = 0; f < flip_states; ++f) {
      double p = p_bits;
      for (int i = 0; i < n; ++i) p *= ((f >> i) & 1u) ? params.p_hp : 1.0 - params.p_hp;
      out.prob[base ^ f] += p;
    }
  }
  return out;
}

std::uint64_t replicate_seed(std::uint64_t master_seed, std::uint64_t b) {
  return rng::derive_seed(master_seed, b);
}

Assignment replicate_assignment(const ClusterAssignment& clusters, const DesignParams& params,
                                std::uint64_t master_seed, std::uint64_t b) {
  return assign(clusters, params, replicate_seed(master_seed, b));
}

void for_each_replicate(const ClusterAssignment& clusters, const DesignParams& params, std::size_t reps,
                        std::uint64_t master_seed, unsigned workers,
                        const std::function<void(std::size_t, std::span<const std::uint8_t>)>& fn) {
  params.validate();
  require(reps >= 1, "replicate count must be at least 1");
  parallel_chunks(reps, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<std::uint8_t> z;
    for (std::size_t b = begin; b < end; ++b) {
      assign_z(clusters.cluster_of, clusters.num_clusters(), params, replicate_seed(master_seed, b), z);
      fn(b, z);
    }
  });
}

double empirical_within_cluster_correlation(const ClusterAssignment& clusters,
                                            std::span<const Assignment> draws) {
  double s = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, m = 0.0;
  auto members = clusters.members();
  for (const auto& a : draws)
    for (const auto& mem : members)
      for (std::size_t x = 0; x < mem.size(); ++x)
        for (std::size_t y = x + 1; y < mem.size(); ++y) {
          double zi = a.z[static_cast<std::size_t>(mem[x])], zj = a.z[static_cast<std::size_t>(mem[y])];
          s += zi * zj;
          sx += zi;
          sy += zj;
          sxx += zi * zi;
          syy += zj * zj;
          m += 1.0;
        }
  if (m < 2.0) return 0.0;
  double cov = s / m - (sx / m) * (sy / m);
  double vx = sxx / m - (sx / m) * (sx / m);
  double vy = syy / m - (sy / m) * (sy / m);
  if (vx <= 0.0 || vy <= 0.0) return 0.0;
  return cov / std::sqrt(vx * vy);
}

}  // namespace netx
