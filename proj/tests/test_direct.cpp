#include <gtest/gtest.h>

#include <cmath>

#include "netx/direct.hpp"
#include "netx/error.hpp"
#include "netx/rng.hpp"

using namespace netx;

namespace {

ClusterAssignment clusters_of(const std::vector<int>& labels) {
  std::vector<std::tuple<std::string, std::int64_t, bool>> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) rows.emplace_back(std::to_string(i), labels[i], false);
  return make_clusters(rows);
}

struct Moments {
  double e_tau = 0, var_tau = 0, e_mu[2] = {0, 0}, var_mu[2] = {0, 0}, e_vhat_mu[2] = {0, 0}, e_vhat_tau = 0;
};

// Exact moments by summing over every assignment in the design.
Moments enumerate(const ClusterAssignment& c, const DesignParams& d, const std::vector<double>& y1,
                  const std::vector<double>& y0) {
  DesignDistribution dist = enumerate_design(c, d);
  PropensityTable t = propensities(d);
  const int n = static_cast<int>(y1.size());
  Moments m;
  double e2_tau = 0, e2_mu[2] = {0, 0};
  for (std::uint32_t mask = 0; mask < dist.prob.size(); ++mask) {
    const double pr = dist.prob[mask];
    if (pr == 0) continue;
    std::vector<double> y(n);
    std::vector<std::uint8_t> z(n);
    double mu[2] = {0, 0};
    for (int i = 0; i < n; ++i) {
      z[i] = dist.z(mask, i);
      y[i] = z[i] ? y1[i] : y0[i];
      mu[z[i]] += y[i] / t.p(z[i]) / n;
    }
    HtVariance v = conservative_variance(y, z, c.cluster_of, t);
    const double tau = mu[1] - mu[0];
    m.e_tau += pr * tau;
    e2_tau += pr * tau * tau;
    for (int a = 0; a < 2; ++a) {
      m.e_mu[a] += pr * mu[a];
      e2_mu[a] += pr * mu[a] * mu[a];
    }
    m.e_vhat_mu[1] += pr * v.var1;
    m.e_vhat_mu[0] += pr * v.var0;
    m.e_vhat_tau += pr * v.var_tau;
  }
  m.var_tau = e2_tau - m.e_tau * m.e_tau;
  for (int a = 0; a < 2; ++a) m.var_mu[a] = e2_mu[a] - m.e_mu[a] * m.e_mu[a];
  return m;
}

}  // namespace

TEST(HtMean, Arithmetic) {
  PropensityTable t = propensities({0.5, 0.18});
  std::vector<double> y{1, 1, 1, 1};
  std::vector<std::uint8_t> z{1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(ht_mean(y, z, t, 1), 1.0);
  std::vector<double> zero(4, 0.0);
  EXPECT_DOUBLE_EQ(ht_mean(zero, z, t, 0), 0.0);
}

TEST(Enumeration, UnbiasedAndVarianceTheorem) {
  rng::Stream r(21);
  for (int inst = 0; inst < 12; ++inst) {
    const int n = 4 + static_cast<int>(r.below(7));
    const int nc = 1 + static_cast<int>(r.below(4));
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i < nc ? i : static_cast<int>(r.below(nc));
    ClusterAssignment c = clusters_of(labels);
    DesignParams d{0.2 + 0.6 * r.uniform(), 0.05 + 0.3 * r.uniform()};
    std::vector<double> y1(n), y0(n);
    for (int i = 0; i < n; ++i) {
      y0[i] = 3 * r.uniform();
      y1[i] = y0[i] - 0.1 + 0.2 * r.uniform();
    }
    Moments m = enumerate(c, d, y1, y0);
    double ate = 0;
    for (int i = 0; i < n; ++i) ate += (y1[i] - y0[i]) / n;
    EXPECT_NEAR(m.e_tau, ate, 1e-10);
    HtVariance tv = true_variance(y1, y0, c.cluster_of, propensities(d));
    EXPECT_NEAR(tv.var_tau, m.var_tau, 1e-10);
    EXPECT_NEAR(tv.var1, m.var_mu[1], 1e-10);
    EXPECT_NEAR(tv.var0, m.var_mu[0], 1e-10);
    EXPECT_NEAR(m.e_vhat_mu[1], tv.var1, 1e-10);
    EXPECT_NEAR(m.e_vhat_mu[0], tv.var0, 1e-10);
    EXPECT_GE(m.e_vhat_tau - m.var_tau, -1e-10);
  }
}

TEST(Enumeration, ConstantEffectRecovered) {
  ClusterAssignment c = clusters_of({0, 0, 0, 1, 1, 2, 2, 2});
  std::vector<double> y0{1, 2, 0.5, 3, 1, 0, 2, 4}, y1 = y0;
  for (double& v : y1) v -= 0.1;
  EXPECT_NEAR(enumerate(c, {0.5, 0.18}, y1, y0).e_tau, -0.1, 1e-10);
}

TEST(Enumeration, PreShiftLeavesExpectationUnchanged) {
  // Adding a constant to Y_pre only moves alpha; with alpha fixed by design the
  // estimand is unchanged, so E[tau_hat] of delta = y - a*pre equals the ATE.
  ClusterAssignment c = clusters_of({0, 0, 1, 1, 1});
  std::vector<double> pre{1, 2, 3, 1, 0.5}, y0{1.5, 2, 2.5, 1, 1}, y1{1.2, 2.1, 2.4, 0.8, 1.1};
  for (double shift : {0.0, 5.0}) {
    std::vector<double> d1(5), d0(5);
    for (int i = 0; i < 5; ++i) {
      d1[i] = y1[i] - 0.7 * (pre[i] + shift);
      d0[i] = y0[i] - 0.7 * (pre[i] + shift);
    }
    double ate = 0;
    for (int i = 0; i < 5; ++i) ate += (y1[i] - y0[i]) / 5;
    EXPECT_NEAR(enumerate(c, {0.5, 0.18}, d1, d0).e_tau, ate, 1e-10);
  }
}

TEST(TrueVariance, Degenerate) {
  PropensityTable t = propensities({0.5, 0.18});
  std::vector<int> cl{0, 0, 1};
  std::vector<double> zero(3, 0.0);
  EXPECT_DOUBLE_EQ(true_variance(zero, zero, cl, t).var_tau, 0.0);
  std::vector<std::uint8_t> z{1, 0, 1};
  EXPECT_DOUBLE_EQ(conservative_variance(zero, z, cl, t).var_tau, 0.0);
}

TEST(AteDifference, ReportConsistency) {
  rng::Stream r(2);
  std::vector<double> y;
  std::vector<std::uint8_t> z;
  std::vector<int> cl;
  for (int i = 0; i < 200; ++i) {
    cl.push_back(i / 5);
    z.push_back(static_cast<std::uint8_t>(r.below(2)));
    y.push_back(1 + r.uniform() - 0.1 * z.back());
  }
  EstimateReport e = ate_difference(y, z, cl, propensities({0.5, 0.18}));
  EXPECT_LE(e.ci_low, e.point);
  EXPECT_GE(e.ci_high, e.point);
  EXPECT_NEAR(e.pct_change, (std::exp(e.point) - 1) * 100, 1e-12);
  EXPECT_NEAR(e.ci_high - e.point, kZ975 * e.std_error, 1e-12);
  EXPECT_EQ(e.n, 200u);
  EXPECT_THROW(ate_difference(y, z, cl, propensities({1.0, 0.0})), std::exception);
}

TEST(Subgroup, MedianTiesGoLowAndEmptyHighFails) {
  PropensityTable t = propensities({0.5, 0.18});
  std::vector<double> y{1, 2, 3, 4}, split{1, 1, 1, 1};
  std::vector<std::uint8_t> z{1, 0, 1, 0};
  std::vector<int> cl{0, 1, 2, 3};
  EXPECT_THROW(subgroup_ate(y, z, cl, t, split, Subgroup::kHigh, "h"), ValidationError);
  EstimateReport lo = subgroup_ate(y, z, cl, t, split, Subgroup::kLow, "l");
  EXPECT_EQ(lo.n, 4u);
}

TEST(Subgroup, PlantedEffectInHighHalf) {
  rng::Stream r(10);
  const int n = 4000;
  std::vector<double> y, act;
  std::vector<std::uint8_t> z;
  std::vector<int> cl;
  for (int i = 0; i < n; ++i) {
    cl.push_back(i);
    act.push_back(r.uniform());
    z.push_back(r.uniform() < 0.5);
    double effect = act.back() > 0.5 ? -0.2 : 0.0;
    y.push_back(1 + 0.1 * r.normal() + effect * z.back());
  }
  PropensityTable t = propensities({0.5, 0.0});
  EstimateReport hi = subgroup_ate(y, z, cl, t, act, Subgroup::kHigh, "hi");
  EstimateReport lo = subgroup_ate(y, z, cl, t, act, Subgroup::kLow, "lo");
  EXPECT_LT(std::fabs(hi.point + 0.2), 4 * hi.std_error);
  EXPECT_LT(std::fabs(lo.point), 4 * lo.std_error);
}

TEST(BinaryAte, AllOnesUnderEqualMarginals) {
  std::vector<double> ones(6, 1.0);
  std::vector<std::uint8_t> z{1, 1, 1, 0, 0, 0};
  std::vector<int> cl{0, 1, 2, 3, 4, 5};
  EXPECT_NEAR(binary_ate(ones, z, cl, propensities({0.5, 0.18}), "inactive").point, 0.0, 1e-15);
}

TEST(BinnedCoef, MatchesDummyRegression) {
  rng::Stream r(5);
  const int n = 60;
  std::vector<double> y(n);
  std::vector<std::uint8_t> z(n);
  std::vector<int> bins(n);
  for (int i = 0; i < n; ++i) {
    bins[i] = i % 4;
    z[i] = r.below(2);
    y[i] = bins[i] + 0.3 * z[i] + r.normal();
  }
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, 5);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = z[i];
    x(i, 1 + bins[i]) = 1;
    v(i) = y[i];
  }
  Eigen::VectorXd beta = x.colPivHouseholderQr().solve(v);
  EXPECT_NEAR(binned_treatment_coef(y, z, stats::BinDemeaner(bins)), beta(0), 1e-10);
}

TEST(MonthlyRi, CoversPlantedShiftAndRefusesSmallB) {
  std::vector<int> labels;
  for (int k = 0; k < 80; ++k)
    for (int m = 0; m < 4; ++m) labels.push_back(k);
  ClusterAssignment c = clusters_of(labels);
  DesignParams d{0.5, 0.18};
  Assignment a = assign(c, d, 3);
  rng::Stream r(6);
  std::vector<double> pre(c.num_nodes()), y(c.num_nodes());
  for (std::size_t i = 0; i < y.size(); ++i) {
    pre[i] = 2 * r.uniform();
    y[i] = pre[i] + 0.2 * r.normal() - 0.05 * a.z[i];
  }
  stats::BinDemeaner bins(stats::make_bins(pre, 10).bin_of);
  MonthlyRiOptions o;
  o.reps = 1000;
  o.seed = 9;
  RiResult res = monthly_ri_ci(y, a.z, c, d, bins, o);
  EXPECT_FALSE(res.ci_empty);
  EXPECT_LE(res.ci_low, -0.05);
  EXPECT_GE(res.ci_high, -0.05);
  o.reps = 50;
  EXPECT_THROW(monthly_ri_ci(y, a.z, c, d, bins, o), ValidationError);
}

TEST(Wald, Conversion) {
  EstimateReport itt;
  itt.point = -0.025;
  itt.std_error = 0.01;
  EXPECT_NEAR(tot_wald(itt, 0.458).point, -0.0546, 2e-4);
  EXPECT_DOUBLE_EQ(tot_wald(itt, 1.0).point, -0.025);
  itt.point = -0.04;
  EXPECT_DOUBLE_EQ(tot_wald(itt, 0.5).point, -0.08);
  EXPECT_DOUBLE_EQ(tot_wald(itt, 0.5).std_error, 0.02);
  EXPECT_THROW(tot_wald(itt, 0.0), ValidationError);
}
