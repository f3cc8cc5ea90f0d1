#include <gtest/gtest.h>

#include <cmath>

#include "netx/error.hpp"
#include "netx/exposure.hpp"
#include "netx/rng.hpp"

using namespace netx;

namespace {

using Row = std::tuple<std::string, std::string, std::int64_t>;

InteractionGraph random_graph(int n, double p, std::uint64_t seed) {
  rng::Stream r(seed);
  std::vector<Row> rows;
  for (int i = 0; i < n; ++i) {
    rows.emplace_back(std::to_string(i), std::to_string((i + 1) % n), 1 + r.below(3));
    for (int j = 0; j < n; ++j)
      if (i != j && r.uniform() < p) rows.emplace_back(std::to_string(i), std::to_string(j), 1 + r.below(6));
  }
  return InteractionGraph::from_weighted_edges(rows);
}

ClusterAssignment clusters_of(const std::vector<int>& labels) {
  std::vector<std::tuple<std::string, std::int64_t, bool>> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) rows.emplace_back(std::to_string(i), labels[i], false);
  return make_clusters(rows);
}

Condition slow_condition(int i, const InteractionGraph& g, const std::vector<std::uint8_t>& z, double q) {
  double w = 0, wt = 0;
  for (const auto& e : g.edges()) {
    int other = e.src == i ? e.dst : e.dst == i ? e.src : -1;
    if (other < 0) continue;
    w += static_cast<double>(e.weight);
    if (z[other]) wt += static_cast<double>(e.weight);
  }
  if (w <= 0) return Condition::kUnclassified;
  bool high = wt / w >= q, low = (w - wt) / w >= q;
  if (!high && !low) return Condition::kUnclassified;
  int base = z[i] ? 2 : 0;
  return static_cast<Condition>(base + (high ? 1 : 0));
}

// Manual table with given conditions and weights, everyone included.
ExposureTable manual_table(const std::vector<Condition>& cond, const std::vector<double>& w) {
  ExposureTable t;
  t.state.condition = cond;
  t.weight = w;
  t.included.assign(cond.size(), 1);
  return t;
}

}  // namespace

TEST(Classify, BoundaryInclusive) {
  std::vector<Row> rows{{"0", "1", 7}, {"0", "2", 3}};
  auto g = InteractionGraph::from_weighted_edges(rows);
  UndirectedAdjacency nb = neighbor_weights(g);
  std::vector<std::uint8_t> z{0, 1, 0};
  ExposureState s = classify_exposure(z, nb, 0.7);
  EXPECT_EQ(s.condition[0], Condition::kCH);
  EXPECT_DOUBLE_EQ(s.w_total[0], 10);
  EXPECT_DOUBLE_EQ(s.w_treated[0], 7);
  std::vector<std::uint8_t> none{0, 0, 0};
  EXPECT_EQ(classify_exposure(none, nb, 0.7).condition[0], Condition::kCL);
}

TEST(Classify, RejectsBadQ) {
  EXPECT_THROW(validate_q(0.0), ValidationError);
  EXPECT_THROW(validate_q(0.5), ValidationError);
  EXPECT_THROW(validate_q(1.01), ValidationError);
  EXPECT_NO_THROW(validate_q(1.0));
}

TEST(Classify, MatchesSlowRecomputation) {
  InteractionGraph g = random_graph(100, 0.03, 4);
  UndirectedAdjacency nb = neighbor_weights(g);
  rng::Stream r(1);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<std::uint8_t> z(100);
    for (auto& v : z) v = r.below(2);
    for (double q : {0.6, 0.7, 0.8}) {
      ExposureState s = classify_exposure(z, nb, q);
      for (int i = 0; i < 100; ++i) EXPECT_EQ(s.condition[i], slow_condition(i, g, z, q));
    }
  }
}

TEST(Classify, RaisingQNeverClassifiesMore) {
  InteractionGraph g = random_graph(80, 0.05, 9);
  UndirectedAdjacency nb = neighbor_weights(g);
  rng::Stream r(2);
  std::vector<std::uint8_t> z(80);
  for (auto& v : z) v = r.below(2);
  auto lo = classify_exposure(z, nb, 0.6), hi = classify_exposure(z, nb, 0.9);
  for (int i = 0; i < 80; ++i)
    if (lo.condition[i] == Condition::kUnclassified) EXPECT_EQ(hi.condition[i], Condition::kUnclassified);
}

TEST(Classify, OutgoingModeUsesOutEdgesOnly) {
  std::vector<Row> rows{{"0", "1", 1}, {"2", "0", 5}};
  auto g = InteractionGraph::from_weighted_edges(rows);
  UndirectedAdjacency out = neighbor_weights(g, NeighborMode::kOutgoing);
  std::vector<std::uint8_t> z{0, 1, 0};
  EXPECT_EQ(classify_exposure(z, out, 0.7).condition[0], Condition::kCH);
  EXPECT_EQ(classify_exposure(z, neighbor_weights(g), 0.7).condition[0], Condition::kCL);
}

TEST(Propensities, SingletonClustersClosedForm) {
  InteractionGraph g = random_graph(12, 0.1, 3);
  std::vector<int> labels(12);
  for (int i = 0; i < 12; ++i) labels[i] = i;
  ClusterAssignment c = clusters_of(labels);
  UndirectedAdjacency nb = neighbor_weights(g);
  const double pt = 0.4;
  // Independent Bernoulli(pt) per node: sum over own bit and neighbour subsets.
  auto mc = mc_exposure_propensities(c, nb, {pt, 0.0}, 0.7, 20000, 11);
  for (int i = 0; i < 12; ++i) {
    auto nbrs = nb.neighbors_of(i);
    auto ws = nb.weights_of(i);
    const std::size_t d = nbrs.size();
    std::array<double, 5> exact{};
    for (std::uint32_t m = 0; m < (1u << d); ++m) {
      double pr = 1, w = 0, wt = 0;
      for (std::size_t k = 0; k < d; ++k) {
        bool on = (m >> k) & 1u;
        pr *= on ? pt : 1 - pt;
        w += static_cast<double>(ws[k]);
        if (on) wt += static_cast<double>(ws[k]);
      }
      int cls = wt / w >= 0.7 ? 1 : (w - wt) / w >= 0.7 ? 0 : -1;
      for (int own = 0; own < 2; ++own) {
        double p = pr * (own ? pt : 1 - pt);
        exact[cls < 0 ? 4 : own * 2 + cls] += p;
      }
    }
    for (int t = 0; t < 5; ++t) {
      double se = std::sqrt(exact[t] * (1 - exact[t]) / 20000);
      if (se == 0) EXPECT_EQ(mc.pi[i][t], exact[t]);
      else EXPECT_LT(std::fabs(mc.pi[i][t] - exact[t]), 3.5 * se) << i << " " << t;
    }
  }
}

TEST(Propensities, McMatchesEnumerationAndSumsToOne) {
  InteractionGraph g = random_graph(12, 0.15, 8);
  ClusterAssignment c = clusters_of({0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1});
  UndirectedAdjacency nb = neighbor_weights(g);
  DesignParams d{0.5, 0.18};
  auto exact = exact_exposure_propensities(c, nb, d, 0.7);
  auto mc = mc_exposure_propensities(c, nb, d, 0.7, 50000, 5, 4);
  auto mc1 = mc_exposure_propensities(c, nb, d, 0.7, 50000, 5, 1);
  for (int i = 0; i < 12; ++i) {
    double sum = 0, esum = 0;
    for (int t = 0; t < 5; ++t) {
      sum += mc.pi[i][t];
      esum += exact.pi[i][t];
      double p = exact.pi[i][t];
      double se = std::sqrt(p * (1 - p) / 50000);
      if (se == 0) EXPECT_EQ(mc.pi[i][t], p);
      else EXPECT_LT(std::fabs(mc.pi[i][t] - p), 4 * se);
      EXPECT_EQ(mc.pi[i][t], mc1.pi[i][t]);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_NEAR(esum, 1.0, 1e-12);
  }
}

TEST(Hajek, HandRatios) {
  std::vector<Condition> cond{Condition::kCL, Condition::kCL, Condition::kCH, Condition::kTL, Condition::kTH};
  std::vector<double> w{2, 1, 1, 1, 1}, y{3, 0, 5, 7, 9};
  ExposureTable t = manual_table(cond, w);
  auto mu = hajek_ratio(y, t);
  EXPECT_DOUBLE_EQ(mu[0], 2.0);
  std::vector<int> cl{0, 1, 2, 3, 4};
  HajekFit fit = hajek_estimate(y, t, {}, cl, nullptr, HacKernel::kIndependent);
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(fit.mu[c], mu[c], 1e-12);
}

TEST(Hajek, EqualWeightsGiveMeansAndScaleInvariance) {
  rng::Stream r(3);
  const int n = 200;
  std::vector<Condition> cond(n);
  std::vector<double> w(n), w2(n), y(n);
  std::vector<int> bins(n), cl(n);
  for (int i = 0; i < n; ++i) {
    cond[i] = static_cast<Condition>(i % 4);
    w[i] = 0.5 + r.uniform();
    w2[i] = 7.5 * w[i];
    y[i] = r.normal() + (i % 4);
    bins[i] = static_cast<int>(r.below(5));
    cl[i] = i / 4;
  }
  auto fit = hajek_estimate(y, manual_table(cond, w), bins, cl, nullptr, HacKernel::kCluster);
  auto fit2 = hajek_estimate(y, manual_table(cond, w2), bins, cl, nullptr, HacKernel::kCluster);
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(fit.mu[c], fit2.mu[c], 1e-12);
  EXPECT_TRUE(fit.vcov.isApprox(fit2.vcov, 1e-10));
  std::vector<double> ones(n, 1.0);
  auto plain = hajek_ratio(y, manual_table(cond, ones));
  for (int c = 0; c < 4; ++c) {
    double s = 0, k = 0;
    for (int i = 0; i < n; ++i)
      if (static_cast<int>(cond[i]) == c) s += y[i], k += 1;
    EXPECT_NEAR(plain[c], s / k, 1e-12);
  }
}

TEST(Hajek, BinsMatchNormalEquations) {
  rng::Stream r(12);
  const int n = 300, nb = 6;
  std::vector<Condition> cond(n);
  std::vector<double> w(n), y(n);
  std::vector<int> bins(n), cl(n);
  for (int i = 0; i < n; ++i) {
    cond[i] = static_cast<Condition>(r.below(4));
    w[i] = 0.2 + 3 * r.uniform();
    bins[i] = static_cast<int>(r.below(nb));
    y[i] = 0.3 * bins[i] + 0.5 * static_cast<int>(cond[i]) + r.normal();
    cl[i] = i;
  }
  auto fit = hajek_estimate(y, manual_table(cond, w), bins, cl, nullptr, HacKernel::kIndependent);
  // Uncentered dummies (bin 0 reference) through the normal equations, then
  // shift the condition intercepts by the weighted dummy means.
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, 4 + nb - 1);
  Eigen::VectorXd yv(n), wv(n);
  for (int i = 0; i < n; ++i) {
    x(i, static_cast<int>(cond[i])) = 1;
    if (bins[i] > 0) x(i, 3 + bins[i]) = 1;
    yv(i) = y[i];
    wv(i) = w[i];
  }
  Eigen::MatrixXd xtwx = x.transpose() * wv.asDiagonal() * x;
  Eigen::VectorXd beta = xtwx.ldlt().solve(x.transpose() * wv.asDiagonal() * yv);
  for (int c = 0; c < 4; ++c) {
    double shift = 0;
    for (int b = 1; b < nb; ++b) shift += beta(3 + b) * wv.dot(x.col(3 + b)) / wv.sum();
    EXPECT_NEAR(fit.mu[c], beta(c) + shift, 1e-8);
  }
}

TEST(Hajek, EmptyCellNamed) {
  std::vector<Condition> cond{Condition::kCL, Condition::kCH, Condition::kTL};
  std::vector<double> w{1, 1, 1}, y{1, 2, 3};
  std::vector<int> cl{0, 1, 2};
  try {
    hajek_estimate(y, manual_table(cond, w), {}, cl, nullptr);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("TH"), std::string::npos);
  }
}

TEST(Contrasts, AlgebraAndZeroes) {
  std::array<double, 4> mu{1, 1, 1, 1};
  Eigen::Matrix4d v;
  v << 4, 1, 0.5, 0.2, 1, 3, 0.1, 0.3, 0.5, 0.1, 2, 0.4, 0.2, 0.3, 0.4, 5;
  auto rep = exposure_contrasts(mu, v);
  ASSERT_EQ(rep.contrasts.size(), 3u);
  for (const auto& c : rep.contrasts) EXPECT_EQ(c.point, 0.0);
  // TL, CH, TH against CL (index 0)
  EXPECT_NEAR(rep.contrasts[0].std_error, std::sqrt(4 + 2 - 2 * 0.5), 1e-12);
  EXPECT_NEAR(rep.contrasts[1].std_error, std::sqrt(4 + 3 - 2 * 1), 1e-12);
  EXPECT_NEAR(rep.contrasts[2].std_error, std::sqrt(4 + 5 - 2 * 0.2), 1e-12);
  std::array<double, 4> mu2{1, 2, 3, 4};
  auto rep2 = exposure_contrasts(mu2, v);
  EXPECT_DOUBLE_EQ(rep2.contrasts[0].point, 2.0);
  EXPECT_DOUBLE_EQ(rep2.contrasts[1].point, 1.0);
  EXPECT_DOUBLE_EQ(rep2.contrasts[2].point, 3.0);
}

TEST(Hac, IndependenceIsRobustSandwichAndClusteringInflatesDuplicates) {
  rng::Stream r(7);
  const int n = 40;
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n), w(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1;
    x(i, 1) = r.normal();
    y(i) = 1 + x(i, 1) + r.normal();
    w(i) = 0.5 + r.uniform();
  }
  stats::WlsFit fit = stats::wls(x, y, w);
  std::vector<int> cl(n);
  for (int i = 0; i < n; ++i) cl[i] = i;
  Dependency dep{HacKernel::kIndependent, cl, nullptr};
  Eigen::MatrixXd v = network_hac_vcov(x, fit, dep);
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd s = w(i) * fit.residuals(i) * x.row(i).transpose();
    meat += s * s.transpose();
  }
  Eigen::MatrixXd hc0 = fit.bread * meat * fit.bread;
  EXPECT_TRUE(v.isApprox(hc0, 1e-12));

  // Duplicate every unit and put copies in one cluster: cluster kernel >= independent.
  Eigen::MatrixXd x2(2 * n, 2);
  Eigen::VectorXd y2(2 * n), w2(2 * n);
  std::vector<int> cl2(2 * n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 2; ++k) {
      x2.row(2 * i + k) = x.row(i);
      y2(2 * i + k) = y(i);
      w2(2 * i + k) = w(i);
      cl2[2 * i + k] = i;
    }
  stats::WlsFit f2 = stats::wls(x2, y2, w2);
  Eigen::MatrixXd vi = network_hac_vcov(x2, f2, {HacKernel::kIndependent, cl2, nullptr});
  Eigen::MatrixXd vc = network_hac_vcov(x2, f2, {HacKernel::kCluster, cl2, nullptr});
  EXPECT_GE(vc(1, 1), vi(1, 1));
  EXPECT_GE((vc - vi).eigenvalues().real().minCoeff(), -1e-12);
}
