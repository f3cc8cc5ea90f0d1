#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>

#include "netx/error.hpp"
#include "netx/persistence.hpp"
#include "netx/rng.hpp"

using namespace netx;

namespace {

struct Data {
  std::vector<double> during, post, pre;
  std::vector<int> cluster;
};

Data draw(std::uint64_t seed, std::size_t n, double beta, int clusters) {
  rng::Stream r(seed);
  Data d;
  for (std::size_t i = 0; i < n; ++i) {
    double pre = r.normal();
    double dd = r.normal() + 0.3 * pre;
    d.pre.push_back(pre);
    d.during.push_back(dd);
    d.post.push_back(beta * dd + 0.5 * pre * pre + 0.4 * r.normal());
    d.cluster.push_back(static_cast<int>(r.below(static_cast<std::uint64_t>(clusters))));
  }
  return d;
}

// Full design matrix [d_during, bin dummies] and the cluster sandwich, no shortcuts.
std::pair<double, double> dense_fit(const Data& d, const std::vector<int>& bin_of, int bins) {
  const std::size_t n = d.pre.size();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 1 + bins);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    auto ii = static_cast<Eigen::Index>(i);
    x(ii, 0) = d.during[i];
    x(ii, 1 + bin_of[i]) = 1.0;
    y(ii) = d.post[i];
  }
  Eigen::VectorXd b = x.colPivHouseholderQr().solve(y);
  Eigen::VectorXd e = y - x * b;
  Eigen::MatrixXd bread = (x.transpose() * x).inverse();
  std::map<int, Eigen::VectorXd> score;
  for (std::size_t i = 0; i < n; ++i) {
    auto ii = static_cast<Eigen::Index>(i);
    Eigen::VectorXd s = x.row(ii).transpose() * e(ii);
    auto [it, fresh] = score.emplace(d.cluster[i], s);
    if (!fresh) it->second += s;
  }
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(1 + bins, 1 + bins);
  for (const auto& [c, s] : score) meat += s * s.transpose();
  Eigen::MatrixXd v = bread * meat * bread;
  return {b(0), std::sqrt(v(0, 0))};
}

}  // namespace

TEST(Persistence, FullPersistenceGivesOne) {
  Data d = draw(1, 400, 0.0, 50);
  d.post = d.during;
  PersistenceFit f = estimate_persistence(d.during, d.post, d.pre, d.cluster, 10);
  EXPECT_NEAR(f.beta, 1.0, 1e-12);
  EXPECT_NEAR(f.std_error, 0.0, 1e-10);
}

TEST(Persistence, MatchesDenseNormalEquations) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Data d = draw(seed, 600, 0.5, 40);
    PersistenceFit f = estimate_persistence(d.during, d.post, d.pre, d.cluster, 12, stats::BinMode::kEqualCount,
                                            RobustType::kCR0);
    stats::Binning b = stats::make_bins(d.pre, 12);
    auto [beta, se] = dense_fit(d, b.bin_of, b.num_bins);
    EXPECT_NEAR(f.beta, beta, 1e-8);
    EXPECT_NEAR(f.std_error, se, 1e-8);
    EXPECT_EQ(f.bins, 12);
    EXPECT_EQ(f.clusters, 40u);
  }
}

TEST(Persistence, Cr1AppliesSmallSampleFactor) {
  Data d = draw(7, 300, 0.4, 25);
  PersistenceFit cr0 = estimate_persistence(d.during, d.post, d.pre, d.cluster, 8, stats::BinMode::kEqualCount,
                                            RobustType::kCR0);
  PersistenceFit cr1 = estimate_persistence(d.during, d.post, d.pre, d.cluster, 8, stats::BinMode::kEqualCount,
                                            RobustType::kCR1);
  const double g = 25.0, n = 300.0, k = 9.0;
  EXPECT_DOUBLE_EQ(cr0.beta, cr1.beta);
  EXPECT_NEAR(cr1.std_error / cr0.std_error, std::sqrt(g / (g - 1.0) * (n - 1.0) / (n - k)), 1e-12);
}

TEST(Persistence, SingletonClustersGiveHc0) {
  Data d = draw(8, 200, 0.3, 1);
  for (std::size_t i = 0; i < d.cluster.size(); ++i) d.cluster[i] = static_cast<int>(i);
  PersistenceFit f = estimate_persistence(d.during, d.post, d.pre, d.cluster, 5, stats::BinMode::kEqualCount,
                                          RobustType::kCR0);
  stats::Binning b = stats::make_bins(d.pre, 5);
  auto [beta, se] = dense_fit(d, b.bin_of, b.num_bins);
  EXPECT_NEAR(f.std_error, se, 1e-10);
  EXPECT_EQ(f.clusters, 200u);
}

TEST(Persistence, MonotoneTransformOfPreLeavesFitUnchanged) {
  Data d = draw(9, 500, 0.6, 30);
  PersistenceFit a = estimate_persistence(d.during, d.post, d.pre, d.cluster, 20);
  std::vector<double> t;
  for (double v : d.pre) t.push_back(std::exp(2.0 * v) + 5.0);
  PersistenceFit b = estimate_persistence(d.during, d.post, t, d.cluster, 20);
  EXPECT_DOUBLE_EQ(a.beta, b.beta);
  EXPECT_DOUBLE_EQ(a.std_error, b.std_error);
}

TEST(Persistence, BinsReduceToDistinctValues) {
  Data d = draw(10, 300, 0.5, 20);
  for (std::size_t i = 0; i < d.pre.size(); ++i) d.pre[i] = static_cast<double>(i % 5);
  PersistenceFit f = estimate_persistence(d.during, d.post, d.pre, d.cluster, 40);
  EXPECT_EQ(f.bins, 5);
  EXPECT_EQ(f.bins_requested, 40);
}

TEST(Persistence, RecoversPlantedSlope) {
  Data d = draw(11, 20000, 0.45, 500);
  PersistenceFit f = estimate_persistence(d.during, d.post, d.pre, d.cluster, 40);
  EXPECT_NEAR(f.beta, 0.45, 4.0 * f.std_error);
  EXPECT_LT(f.ci_low, f.beta);
  EXPECT_GT(f.ci_high, f.beta);
}

TEST(Persistence, Refusals) {
  Data d = draw(12, 10, 0.5, 3);
  EXPECT_THROW(estimate_persistence(d.during, d.post, d.pre, d.cluster, 20), NumericalError);
  std::vector<double> flat(10, 1.0);
  EXPECT_THROW(estimate_persistence(flat, d.post, d.pre, d.cluster, 2), NumericalError);
  std::vector<double> shorter(9, 0.0);
  EXPECT_THROW(estimate_persistence(shorter, d.post, d.pre, d.cluster, 2), ValidationError);
}

TEST(Persistence, JsonFields) {
  Data d = draw(13, 100, 0.5, 10);
  PersistenceFit f = estimate_persistence(d.during, d.post, d.pre, d.cluster, 4);
  f.outcome = "hate";
  Json j = to_json(f);
  EXPECT_EQ(j["robust"], "CR1");
  EXPECT_EQ(j["bins"], 4);
  EXPECT_EQ(j["outcome"], "hate");
}
