#include <gtest/gtest.h>

#include <cmath>

#include "netx/design.hpp"
#include "netx/error.hpp"
#include "netx/rng.hpp"

using namespace netx;

namespace {

ClusterAssignment clusters_of(std::vector<int> labels) {
  std::vector<std::tuple<std::string, std::int64_t, bool>> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) rows.emplace_back(std::to_string(i), labels[i], false);
  return make_clusters(rows);
}

}  // namespace

TEST(Propensity, PublishedDesign) {
  PropensityTable t = propensities({0.5, 0.18});
  EXPECT_NEAR(t.p(1), 0.5, 1e-12);
  EXPECT_NEAR(t.p(0), 0.5, 1e-12);
  // P(both treated) = P(c)(1-h)^2 + (1-P(c))h^2 = 0.5 * 0.6724 + 0.5 * 0.0324
  EXPECT_NEAR(t.same[1][1], 0.3524, 1e-12);
  EXPECT_NEAR(t.same[0][0], 0.3524, 1e-12);
  EXPECT_NEAR(t.same[1][0], 0.1476, 1e-12);
  EXPECT_NEAR(std::round(t.same[1][1] * 1000) / 1000, 0.352, 1e-12);
  EXPECT_NEAR(std::round(t.same[1][0] * 1000) / 1000, 0.148, 1e-12);
  EXPECT_NEAR(t.cross[1][1], 0.25, 1e-12);
  EXPECT_NEAR(within_cluster_correlation(t), 0.4096, 1e-12);
}

TEST(Propensity, MixtureOracle) {
  rng::Stream r(3);
  for (int k = 0; k < 200; ++k) {
    DesignParams d{r.uniform(), r.uniform() * 0.5};
    if (d.p_t <= 0 || d.p_hp <= 0) continue;
    PropensityTable t = propensities(d);
    const double h = d.p_hp, c = d.p_t;
    double p11 = c * (1 - h) * (1 - h) + (1 - c) * h * h;
    double p10 = c * (1 - h) * h + (1 - c) * h * (1 - h);
    double p00 = c * h * h + (1 - c) * (1 - h) * (1 - h);
    EXPECT_NEAR(t.same[1][1], p11, 1e-14);
    EXPECT_NEAR(t.same[1][0], p10, 1e-14);
    EXPECT_NEAR(t.same[0][0], p00, 1e-14);
    EXPECT_NEAR(t.p(1), c * (1 - h) + (1 - c) * h, 1e-14);
  }
}

TEST(Propensity, RejectsBadParams) {
  EXPECT_THROW(propensities({1.5, 0.1}), ValidationError);
  EXPECT_THROW(propensities({0.5, 1.0}), ValidationError);
  EXPECT_THROW(propensities({0.5, -0.1}), ValidationError);
}

TEST(Enumerate, SumsToOneAndMatchesTable) {
  ClusterAssignment c = clusters_of({0, 0, 1, 1, 1, 2});
  DesignParams d{0.3, 0.2};
  DesignDistribution dist = enumerate_design(c, d);
  double total = 0;
  for (double p : dist.prob) total += p;
  EXPECT_NEAR(total, 1.0, 1e-14);
  PropensityTable t = propensities(d);
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) {
      double p11 = 0;
      for (std::uint32_t m = 0; m < dist.prob.size(); ++m)
        if (dist.z(m, i) && dist.z(m, j)) p11 += dist.prob[m];
      EXPECT_NEAR(p11, t.joint(1, 1, c.cluster_of[i] == c.cluster_of[j]), 1e-14);
    }
}

TEST(Enumerate, RefusesLargeDesigns) {
  EXPECT_THROW(enumerate_design(clusters_of(std::vector<int>(21, 0)), {}), ValidationError);
  EXPECT_THROW(enumerate_design(clusters_of({0, 1, 2, 3, 4, 5, 6}), {}), ValidationError);
}

TEST(Assign, XorStructureAndSeeding) {
  ClusterAssignment c = clusters_of({0, 0, 0, 1, 1, 2, 2, 2, 2});
  Assignment a = assign(c, {0.5, 0.18}, 77);
  for (std::size_t i = 0; i < c.num_nodes(); ++i)
    EXPECT_EQ(a.z[i], a.cluster_bits[c.cluster_of[i]] ^ a.flips[i]);
  Assignment b = assign(c, {0.5, 0.18}, 77);
  EXPECT_EQ(a.z, b.z);
  std::vector<std::uint8_t> z;
  assign_z(c.cluster_of, c.num_clusters(), {0.5, 0.18}, 77, z);
  EXPECT_EQ(z, a.z);
}

TEST(Assign, EmpiricalRatesMatchTable) {
  std::vector<int> labels;
  for (int k = 0; k < 200; ++k)
    for (int m = 0; m < 5; ++m) labels.push_back(k);
  ClusterAssignment c = clusters_of(labels);
  DesignParams d{0.5, 0.18};
  std::vector<Assignment> draws;
  double treated = 0;
  for (std::uint64_t b = 0; b < 200; ++b) {
    draws.push_back(replicate_assignment(c, d, 9, b));
    for (auto v : draws.back().z) treated += v;
  }
  EXPECT_NEAR(treated / (200.0 * 1000.0), 0.5, 0.005);
  EXPECT_NEAR(empirical_within_cluster_correlation(c, draws), 0.4096, 0.01);
}

TEST(Replicates, IndependentOfWorkerCount) {
  ClusterAssignment c = clusters_of({0, 0, 1, 1, 2, 2, 3, 3, 3});
  auto collect = [&](unsigned w) {
    std::vector<std::vector<std::uint8_t>> out(300);
    for_each_replicate(c, {0.4, 0.2}, out.size(), 5, w, [&](std::size_t b, std::span<const std::uint8_t> z) {
      out[b].assign(z.begin(), z.end());
    });
    return out;
  };
  auto one = collect(1);
  EXPECT_EQ(one, collect(4));
  for (std::size_t b = 0; b < one.size(); ++b) EXPECT_EQ(one[b], replicate_assignment(c, {0.4, 0.2}, 5, b).z);
}

TEST(Propensity, CellsFormDistributions) {
  for (double pt : {0.0, 0.1, 0.5, 0.9, 1.0})
    for (double ph : {0.0, 0.05, 0.18, 0.49}) {
      PropensityTable t = propensities({pt, ph});
      double same = 0, cross = 0;
      for (int a = 0; a < 2; ++a) {
        EXPECT_NEAR(t.same[a][0] + t.same[a][1], t.p(a), 1e-12);
        for (int b = 0; b < 2; ++b) {
          EXPECT_GE(t.same[a][b], -1e-15);
          EXPECT_LE(t.same[a][b], 1.0 + 1e-15);
          same += t.same[a][b];
          cross += t.cross[a][b];
        }
      }
      EXPECT_NEAR(same, 1.0, 1e-12);
      EXPECT_NEAR(cross, 1.0, 1e-12);
    }
}

TEST(Propensity, NoFlipDegenerates) {
  PropensityTable t = propensities({0.3, 0.0});
  EXPECT_DOUBLE_EQ(t.p(1), 0.3);
  EXPECT_DOUBLE_EQ(t.same[1][1], 0.3);
  EXPECT_DOUBLE_EQ(t.same[1][0], 0.0);
}

TEST(Enumerate, SingleNodeAndSingletons) {
  DesignDistribution one = enumerate_design(clusters_of({0}), {0.5, 0.18});
  EXPECT_NEAR(one.prob[1], 0.5, 1e-12);
  DesignParams d{0.4, 0.1};
  DesignDistribution two = enumerate_design(clusters_of({0, 1}), d);
  double p = propensities(d).p(1);
  EXPECT_NEAR(two.prob[3], p * p, 1e-12);
  EXPECT_NEAR(two.prob[1], p * (1 - p), 1e-12);
}

TEST(Replicates, FirstReplicateUsesDerivedSeed) {
  ClusterAssignment c = clusters_of({0, 0, 1, 2, 2});
  EXPECT_EQ(replicate_assignment(c, {}, 31, 0).z, assign(c, {}, replicate_seed(31, 0)).z);
}

TEST(Replicates, PerUserFrequencyWithinMcError) {
  std::vector<int> labels;
  for (int k = 0; k < 20; ++k)
    for (int m = 0; m <= k % 4; ++m) labels.push_back(k);
  ClusterAssignment c = clusters_of(labels);
  const std::size_t B = 50000;
  std::vector<std::size_t> hits(c.num_nodes(), 0);
  for_each_replicate(c, {0.5, 0.18}, B, 12, 1, [&](std::size_t, std::span<const std::uint8_t> z) {
    for (std::size_t i = 0; i < z.size(); ++i) hits[i] += z[i];
  });
  const double se = std::sqrt(0.25 / B);
  for (auto h : hits) EXPECT_LT(std::fabs(h / double(B) - 0.5), 5 * se);
}
