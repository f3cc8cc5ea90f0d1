#include "netx/direct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "netx/error.hpp"

namespace netx {

double ht_mean(std::span<const double> y, std::span<const std::uint8_t> z, const PropensityTable& table, int t) {
  require(y.size() == z.size(), "ht_mean: outcome and assignment sizes differ");
  require(table.p(t) > 0.0, "ht_mean: p(t) must be positive");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (z[i] == t) s += y[i];
  return s / (static_cast<double>(y.size()) * table.p(t));
}

VarianceComponents variance_components(std::span<const double> y1, std::span<const double> y0,
                                       std::span<const int> cluster_of) {
  require(y1.size() == y0.size() && y1.size() == cluster_of.size(), "variance_components: size mismatch");
  VarianceComponents vc;
  vc.n = y1.size();
  std::map<int, std::pair<double, double>> sums;
  for (std::size_t i = 0; i < y1.size(); ++i) {
    auto& s = sums[cluster_of[i]];
    s.first += y0[i];
    s.second += y1[i];
    const double y[2] = {y0[i], y1[i]};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) vc.q[a][b] += y[a] * y[b];
  }
  for (const auto& [c, s] : sums) {
    const double t[2] = {s.first, s.second};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) vc.s[a][b] += t[a] * t[b];
  }
  return vc;
}

HtVariance true_variance(std::span<const double> y1, std::span<const double> y0, std::span<const int> cluster_of,
                         const PropensityTable& table) {
  VarianceComponents vc = variance_components(y1, y0, cluster_of);
  const double n2 = static_cast<double>(vc.n) * static_cast<double>(vc.n);
  auto var = [&](int t) {
    double p = table.p(t), ptt = table.same[t][t];
    return ((ptt / (p * p) - 1.0) * vc.s[t][t] + ((p - ptt) / (p * p)) * vc.q[t][t]) / n2;
  };
  HtVariance out;
  out.var1 = var(1);
  out.var0 = var(0);
  double ratio = table.same[1][0] / (table.p(1) * table.p(0));
  out.cov = ((ratio - 1.0) * vc.s[1][0] - ratio * vc.q[1][0]) / n2;
  out.var_tau = out.var1 + out.var0 - 2.0 * out.cov;
  return out;
}

HtVariance conservative_variance(std::span<const double> y, std::span<const std::uint8_t> z,
                                 std::span<const int> cluster_of, const PropensityTable& table) {
  require(y.size() == z.size() && y.size() == cluster_of.size(), "conservative_variance: size mismatch");
  const double n = static_cast<double>(y.size());
  std::map<int, std::pair<double, double>> sums;  // (sum over z=0, sum over z=1)
  double q[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto& s = sums[cluster_of[i]];
    (z[i] ? s.second : s.first) += y[i];
    q[z[i] ? 1 : 0] += y[i] * y[i];
  }
  double s[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  for (const auto& [c, t] : sums) {
    const double v[2] = {t.first, t.second};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) s[a][b] += v[a] * v[b];
  }
  HtVariance out;
  auto var = [&](int t) {
    double p = table.p(t), ptt = table.same[t][t];
    return ((1.0 / (p * p) - 1.0 / ptt) * s[t][t] + (1.0 / ptt - 1.0 / p) * q[t]) / (n * n);
  };
  out.var1 = var(1);
  out.var0 = var(0);
  double p1 = table.p(1), p0 = table.p(0), p10 = table.same[1][0];
  double cross = p10 > 0.0 ? (1.0 / (p1 * p0) - 1.0 / p10) * s[1][0] : 0.0;
  out.cov = (cross - q[1] / (2.0 * p1) - q[0] / (2.0 * p0)) / (n * n);
  out.var_tau = out.var1 + out.var0 - 2.0 * out.cov;
  return out;
}

EstimateReport ate_difference(std::span<const double> y, std::span<const std::uint8_t> z,
                              std::span<const int> cluster_of, const PropensityTable& table,
                              const std::string& estimand) {
  if (!(table.p(1) > 0.0 && table.p(1) < 1.0))
    throw NumericalError("degenerate design: p(1) must lie strictly between 0 and 1");
  require(!y.empty(), "ate_difference: empty sample");
  EstimateReport r;
  r.estimand = estimand;
  r.method = "ht_difference";
  r.n = y.size();
  r.point = ht_mean(y, z, table, 1) - ht_mean(y, z, table, 0);
  HtVariance v = conservative_variance(y, z, cluster_of, table);
  if (std::any_of(y.begin(), y.end(), [](double v) { return v < 0.0; }))
    r.warnings.push_back("negative outcomes: conservative variance guarantee does not apply");
  r.std_error = std::sqrt(std::max(0.0, v.var_tau));
  r.metadata["var_mu1"] = v.var1;
  r.metadata["var_mu0"] = v.var0;
  r.metadata["cov_mu1_mu0"] = v.cov;
  finish_normal(r);
  return r;
}

EstimateReport subgroup_ate(std::span<const double> y, std::span<const std::uint8_t> z,
                            std::span<const int> cluster_of, const PropensityTable& table,
                            std::span<const double> splitter, Subgroup side, const std::string& estimand) {
  require(splitter.size() == y.size(), "subgroup_ate: splitter size mismatch");
  const double med = stats::median(splitter);
  std::vector<double> ys;
  std::vector<std::uint8_t> zs;
  std::vector<int> cs;
  for (std::size_t i = 0; i < y.size(); ++i) {
    bool low = splitter[i] <= med;
    if (low != (side == Subgroup::kLow)) continue;
    ys.push_back(y[i]);
    zs.push_back(z[i]);
    cs.push_back(cluster_of[i]);
  }
  if (ys.empty())
    throw ValidationError("subgroup '" + estimand + "' is empty (" +
                          std::string(side == Subgroup::kLow ? "low" : "high") + " side of the median)");
  EstimateReport r = ate_difference(ys, zs, cs, table, estimand);
  r.metadata["median"] = med;
  r.metadata["side"] = side == Subgroup::kLow ? "low" : "high";
  return r;
}

EstimateReport binary_ate(std::span<const double> indicator, std::span<const std::uint8_t> z,
                          std::span<const int> cluster_of, const PropensityTable& table,
                          const std::string& estimand) {
  for (double v : indicator) require(v == 0.0 || v == 1.0, "binary_ate: outcome must be 0 or 1");
  EstimateReport r = ate_difference(indicator, z, cluster_of, table, estimand);
  r.method = "ht_binary";
  return r;
}

double binned_treatment_coef(std::span<const double> y, std::span<const std::uint8_t> z,
                             const stats::BinDemeaner& bins) {
  std::vector<double> zd(z.begin(), z.end());
  return bins.slope(zd, y);
}

RiResult monthly_ri_ci(std::span<const double> y_month, std::span<const std::uint8_t> z,
                       const ClusterAssignment& clusters, const DesignParams& params,
                       const stats::BinDemeaner& bins, const MonthlyRiOptions& options) {
  const std::size_t n = y_month.size();
  require(options.reps >= 100, "monthly RI needs at least 100 replicates");
  require(z.size() == n && bins.size() == n && clusters.num_nodes() == n,
          "monthly_ri_ci: outcome, assignment, bins and clusters must align");
  std::vector<double> zobs(z.begin(), z.end());
  const double theta = bins.slope(zobs, y_month);
  if (std::isnan(theta)) throw NumericalError("monthly_ri_ci: assignment has no variation within bins");

  // The shifted-outcome slope is linear in the null: theta_b(t0) = a_b + t0 (1 - c_b).
  std::vector<double> a(options.reps), c(options.reps);
  for_each_replicate(clusters, params, options.reps, options.seed, options.workers,
                     [&](std::size_t b, std::span<const std::uint8_t> zb) {
                       std::vector<double> mz(zb.begin(), zb.end());
                       bins.demean_in_place(mz);
                       double sxx = 0.0;
                       for (std::size_t i = 0; i < n; ++i) sxx += mz[i] * zb[i];
                       if (!(sxx > 1e-300)) {
                         a[b] = c[b] = std::numeric_limits<double>::quiet_NaN();
                         return;
                       }
                       a[b] = stats::dot(mz, y_month) / sxx;
                       c[b] = stats::dot(mz, zobs) / sxx;
                     });

  std::vector<double> draws(options.reps);
  auto p_at = [&](double t0) {
    for (std::size_t b = 0; b < options.reps; ++b) draws[b] = a[b] + t0 * (1.0 - c[b]);
    return tail_p_value(draws, theta, options.tail);
  };

  RiResult r;
  r.statistic = theta;
  r.reps = options.reps;
  r.seed = options.seed;
  r.n = n;
  r.reference_null = 0.0;
  r.p_value = p_at(0.0);
  r.grid = options.grid.values();
  r.grid_p.resize(r.grid.size());
  for (std::size_t k = 0; k < r.grid.size(); ++k) r.grid_p[k] = p_at(r.grid[k]);
  r.invert(options.alpha);
  r.metadata["null_family"] = "constant_shift";
  r.metadata["tail"] = tail_name(options.tail);
  r.metadata["bins"] = bins.num_bins();
  return r;
}

EstimateReport tot_wald(const EstimateReport& itt, double takeup) {
  require(std::isfinite(takeup) && takeup > 0.0 && takeup <= 1.0, "take-up must lie in (0, 1]");
  EstimateReport r = itt;
  r.estimand = itt.estimand.empty() ? "tot" : itt.estimand + "_tot";
  r.method = "wald";
  r.point = itt.point / takeup;
  r.std_error = itt.std_error / takeup;
  finish_normal(r);
  r.metadata["takeup"] = takeup;
  return r;
}

}  // namespace netx
