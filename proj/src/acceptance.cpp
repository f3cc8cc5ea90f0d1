#include "netx/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "netx/analytics.hpp"
#include "netx/design.hpp"
#include "netx/direct.hpp"
#include "netx/error.hpp"
#include "netx/exposure.hpp"
#include "netx/persistence.hpp"
#include "netx/rng.hpp"
#include "netx/simlab.hpp"
#include "netx/stats.hpp"
#include "netx/upstream.hpp"

namespace netx::acceptance {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// Random partition of n nodes into c non-empty clusters.
ClusterAssignment random_clusters(rng::Stream& r, int n, int c) {
  std::vector<std::tuple<std::string, std::int64_t, bool>> rows;
  for (int i = 0; i < n; ++i) {
    int k = i < c ? i : static_cast<int>(r.below(static_cast<std::uint64_t>(c)));
    rows.emplace_back(std::to_string(i), k, i < c);
  }
  return make_clusters(rows);
}

// ---- 1: propensity closed forms ----

CriterionResult criterion_propensities(std::uint64_t seed) {
  CriterionResult res{1, "propensity closed forms", false, "", Json::object()};
  const double tol = 1e-12;
  PropensityTable t = propensities({0.5, 0.18});
  // Marginals are exact. The published joints are printed to three decimals
  // (0.352, 0.148); the unrounded closed forms are 0.3524 and 0.1476.
  double exact_err = 0.0, printed_err = 0.0;
  exact_err = std::max(exact_err, std::fabs(t.marginal[1] - 0.5));
  exact_err = std::max(exact_err, std::fabs(t.marginal[0] - 0.5));
  for (int a = 0; a < 2; ++a) {
    exact_err = std::max(exact_err, std::fabs(t.same[a][a] - 0.3524));
    exact_err = std::max(exact_err, std::fabs(t.same[a][1 - a] - 0.1476));
    printed_err = std::max(printed_err, std::fabs(std::round(t.same[a][a] * 1000.0) / 1000.0 - 0.352));
    printed_err = std::max(printed_err, std::fabs(std::round(t.same[a][1 - a] * 1000.0) / 1000.0 - 0.148));
  }

  // Two clusters {0,1} and {2,3}: node pairs (0,1) share a cluster, (0,2) do not.
  std::vector<std::tuple<std::string, std::int64_t, bool>> rows{{"0", 0, true}, {"1", 0, false}, {"2", 1, true}, {"3", 1, false}};
  ClusterAssignment cl = make_clusters(rows);
  rng::Stream r(rng::derive_seed(seed, "c1"));
  double enum_err = 0.0;
  for (int k = 0; k < 50; ++k) {
    DesignParams p{0.02 + 0.96 * r.uniform(), 0.01 + 0.48 * r.uniform()};
    PropensityTable pt = propensities(p);
    DesignDistribution d = enumerate_design(cl, p);
    double m1 = 0.0, same[2][2] = {{0, 0}, {0, 0}}, cross[2][2] = {{0, 0}, {0, 0}};
    for (std::uint32_t mask = 0; mask < d.prob.size(); ++mask) {
      double pr = d.prob[mask];
      int z0 = d.z(mask, 0), z1 = d.z(mask, 1), z2 = d.z(mask, 2);
      if (z0) m1 += pr;
      same[z0][z1] += pr;
      cross[z0][z2] += pr;
    }
    enum_err = std::max(enum_err, std::fabs(pt.marginal[1] - m1));
    enum_err = std::max(enum_err, std::fabs(pt.marginal[0] - (1.0 - m1)));
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        enum_err = std::max(enum_err, std::fabs(pt.same[a][b] - same[a][b]));
        enum_err = std::max(enum_err, std::fabs(pt.cross[a][b] - cross[a][b]));
      }
  }
  res.detail = {{"closed_form_max_error", exact_err},
                {"printed_3dp_max_error", printed_err},
                {"enumeration_max_error", enum_err},
                {"pairs", 50},
                {"tolerance", tol}};
  res.passed = exact_err <= tol && printed_err <= tol && enum_err <= tol;
  res.summary = "(0.5, 0.18): marginals 0.5, joints 0.3524/0.1476 err " + sci(exact_err) + ", 3dp 0.352/0.148 err " +
                sci(printed_err) + "; 50 random pairs vs enumeration err " + sci(enum_err) + " (tol 1e-12)";
  return res;
}

// ---- 2-4: estimator moments by enumeration ----

struct MomentCheck {
  double bias = 0.0;        // |E tau_hat - tau|
  double var_err = 0.0;     // max over mu1, mu0, tau, cov of |enum - theorem|
  double varhat_err = 0.0;  // max over arms of |E Var-hat - Var|
  double slack = 0.0;       // E Var-hat(tau) - Var(tau)
  bool nonneg = false;
};

MomentCheck enumerate_moments(const ClusterAssignment& cl, const DesignParams& p, const std::vector<double>& y1,
                              const std::vector<double>& y0) {
  const PropensityTable t = propensities(p);
  const DesignDistribution d = enumerate_design(cl, p);
  const std::size_t n = cl.num_nodes();
  std::vector<double> y(n);
  std::vector<std::uint8_t> z(n);
  struct Draw {
    double prob, m1, m0, v1, v0, vt;
  };
  std::vector<Draw> draws;
  for (std::uint32_t mask = 0; mask < d.prob.size(); ++mask) {
    if (d.prob[mask] == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = d.z(mask, static_cast<int>(i));
      y[i] = z[i] ? y1[i] : y0[i];
    }
    HtVariance vh = conservative_variance(y, z, cl.cluster_of, t);
    draws.push_back({d.prob[mask], ht_mean(y, z, t, 1), ht_mean(y, z, t, 0), vh.var1, vh.var0, vh.var_tau});
  }
  double e1 = 0, e0 = 0, ev1 = 0, ev0 = 0, evt = 0;
  for (const auto& w : draws) {
    e1 += w.prob * w.m1;
    e0 += w.prob * w.m0;
    ev1 += w.prob * w.v1;
    ev0 += w.prob * w.v0;
    evt += w.prob * w.vt;
  }
  double var1 = 0, var0 = 0, cov = 0, vt = 0;
  for (const auto& w : draws) {
    double a = w.m1 - e1, b = w.m0 - e0;
    var1 += w.prob * a * a;
    var0 += w.prob * b * b;
    cov += w.prob * a * b;
    vt += w.prob * (a - b) * (a - b);
  }
  double tau = 0.0;
  for (std::size_t i = 0; i < n; ++i) tau += y1[i] - y0[i];
  tau /= static_cast<double>(n);

  HtVariance th = true_variance(y1, y0, cl.cluster_of, t);
  MomentCheck m;
  m.bias = std::fabs((e1 - e0) - tau);
  m.var_err = std::max({std::fabs(var1 - th.var1), std::fabs(var0 - th.var0), std::fabs(cov - th.cov),
                        std::fabs(vt - th.var_tau)});
  m.varhat_err = std::max(std::fabs(ev1 - th.var1), std::fabs(ev0 - th.var0));
  m.slack = evt - th.var_tau;
  return m;
}

std::vector<CriterionResult> criteria_moments(std::uint64_t seed) {
  rng::Stream r(rng::derive_seed(seed, "c2"));
  const double tol = 1e-10;
  double bias = 0, var_err = 0, varhat_err = 0, min_slack = 1e300;
  int nonneg_instances = 0, instances = 20;
  Json per = Json::array();
  for (int k = 0; k < instances; ++k) {
    int n = 2 + static_cast<int>(r.below(11));  // 2..12
    int c = 1 + static_cast<int>(r.below(static_cast<std::uint64_t>(std::min(4, n))));
    ClusterAssignment cl = random_clusters(r, n, c);
    DesignParams p{0.15 + 0.7 * r.uniform(), 0.03 + 0.44 * r.uniform()};
    bool nonneg = k < 15;
    std::vector<double> y1(n), y0(n);
    for (int i = 0; i < n; ++i) {
      y0[i] = nonneg ? 4.0 * r.uniform() : 4.0 * r.normal();
      y1[i] = y0[i] + (nonneg ? r.uniform() - 0.3 : r.normal());
      if (nonneg) y1[i] = std::max(0.0, y1[i]);
    }
    MomentCheck m = enumerate_moments(cl, p, y1, y0);
    bias = std::max(bias, m.bias);
    var_err = std::max(var_err, m.var_err);
    varhat_err = std::max(varhat_err, m.varhat_err);
    if (nonneg) {
      ++nonneg_instances;
      min_slack = std::min(min_slack, m.slack);
    }
    per.push_back({{"n", n}, {"clusters", c}, {"p_t", p.p_t}, {"p_hp", p.p_hp}, {"nonneg", nonneg},
                   {"bias", m.bias}, {"var_err", m.var_err}, {"varhat_err", m.varhat_err}, {"slack", m.slack}});
  }
  std::vector<CriterionResult> out;
  CriterionResult c2{2, "estimator unbiasedness", bias <= tol, "", Json::object()};
  c2.detail = {{"instances", instances}, {"max_bias", bias}, {"tolerance", tol}, {"per_instance", per}};
  c2.summary = std::to_string(instances) + " enumerated instances, max |E tau_hat - tau| = " + sci(bias) + " (tol 1e-10)";
  CriterionResult c3{3, "variance theorem exactness", var_err <= tol, "", Json::object()};
  c3.detail = {{"instances", instances}, {"max_error", var_err}, {"tolerance", tol}};
  c3.summary = "max |Var_enum - theorem| over mu(1), mu(0), cov, tau = " + sci(var_err) + " (tol 1e-10)";
  bool cons = varhat_err <= tol && min_slack >= -tol;
  CriterionResult c4{4, "conservative inference", cons, "", Json::object()};
  c4.detail = {{"instances", instances}, {"max_arm_error", varhat_err}, {"nonneg_instances", nonneg_instances},
               {"min_slack", min_slack}, {"tolerance", tol}};
  c4.summary = "max |E Var-hat(mu_t) - Var| = " + sci(varhat_err) + "; min E Var-hat(tau) - Var(tau) over " +
               std::to_string(nonneg_instances) + " nonneg instances = " + sci(min_slack);
  out.push_back(c2);
  out.push_back(c3);
  out.push_back(c4);
  return out;
}

// ---- 5: RI validity under sharp nulls ----

struct NullSummary {
  std::string name;
  std::vector<double> p;
  double reject = 0.0;
  double ks_p = 0.0;
  bool ok = false;
};

NullSummary summarize(std::string name, std::vector<double> p) {
  NullSummary s;
  s.name = std::move(name);
  std::size_t rej = 0;
  for (double v : p)
    if (v <= 0.05) ++rej;
  s.reject = static_cast<double>(rej) / static_cast<double>(p.size());
  s.ks_p = stats::ks_uniform(p).p_value;
  s.ok = s.reject >= 0.03 && s.reject <= 0.07 && s.ks_p > 0.01;
  s.p = std::move(p);
  return s;
}

sim::ScenarioSpec null_scenario() {
  sim::ScenarioSpec s;
  s.network.n = 200;
  s.network.clusters = 20;
  s.network.p_in = 0.3;
  s.network.p_out = 0.003;
  s.outcomes.tau_direct = 0.0;
  s.outcomes.noise = 0.2;
  s.upstream.users = 100;
  s.upstream.tau_upstream = 0.0;
  return s;
}

CriterionResult criterion_ri_validity(const BatteryOptions& o) {
  CriterionResult res{5, "RI validity", false, "", Json::object()};
  const auto t0 = Clock::now();
  const std::uint64_t base = rng::derive_seed(o.seed, "c5");
  const std::size_t seeds = static_cast<std::size_t>(o.ri_seeds);
  std::vector<double> p_direct(seeds), p_up(seeds), p_pers(seeds);
  for (std::size_t s = 0; s < seeds; ++s) {
    const std::uint64_t sd = rng::derive_seed(base, s);
    sim::ScenarioSpec spec = null_scenario();
    sim::SimNetwork net = sim::gen_network(spec.network, rng::derive_seed(sd, "net"));
    Assignment a = assign(net.clusters, spec.design, rng::derive_seed(sd, "assign"));
    const std::uint64_t ri_seed = rng::derive_seed(sd, "ri");

    sim::SimOutcomes out = sim::gen_outcomes(net, a.z, spec.outcomes, spec.start_month, rng::derive_seed(sd, "sim"));
    stats::BinDemeaner bins(stats::make_bins(out.panel.y_pre, 40).bin_of);
    std::size_t month = 0;
    while (out.panel.buckets[month].period != PeriodName::kDuring) ++month;
    MonthlyRiOptions mo;
    mo.reps = o.ri_reps;
    mo.seed = ri_seed;
    mo.workers = o.workers;
    mo.grid = Grid::from(0.0, 1.0, 0.0);
    p_direct[s] = monthly_ri_ci(out.panel.month_column(month), a.z, net.clusters, spec.design, bins, mo).p_value;

    // Upstream: no exposure effect for ri_test; a planted tau for the
    // persistence null, which fixes tau and beta.
    spec.upstream.tau_upstream = -0.03;
    sim::SimUpstream up = sim::gen_upstream_scenario(net, a.z, spec.upstream, rng::derive_seed(sd, "up"));
    std::vector<const std::vector<RosterEntry>*> rosters;
    for (const auto& roster : up.rosters) rosters.push_back(&roster);
    ExposureDraws draws(rosters, net.clusters, spec.design, o.ri_reps, ri_seed, o.workers);
    stats::BinDemeaner ub(upstream_bins(up.pre_volume, 10).bin_of);
    std::vector<double> y0(up.y.size());
    for (std::size_t k = 0; k < y0.size(); ++k) y0[k] = up.y[k] - up.tau_unit * up.t[k];
    p_up[s] = ri_test(y0, up.t, draws, ub, 0.0);
    p_pers[s] = persistence_ri_p(up.d_during, up.d_post, up.t, draws, ub, up.tau_unit, spec.upstream.beta);
  }
  std::vector<NullSummary> sums{summarize("direct_monthly", p_direct), summarize("upstream_ri_test", p_up),
                                summarize("persistence_ri", p_pers)};
  const double secs = elapsed(t0);
  bool ok = secs < 600.0;
  Json parts = Json::array();
  for (const auto& s : sums) {
    ok = ok && s.ok;
    parts.push_back({{"test", s.name}, {"reject_rate", s.reject}, {"ks_p", s.ks_p}, {"ok", s.ok}});
    res.summary += s.name + " P(p<=.05)=" + fixed(s.reject, 3) + " KS p=" + fixed(s.ks_p, 3) + "; ";
  }
  res.detail = {{"seeds", seeds}, {"reps", o.ri_reps}, {"band", {0.03, 0.07}}, {"ks_min", 0.01}, {"tests", parts}};
  res.passed = ok;
  res.summary += "runtime " + fixed(secs, 1) + "s (limit 600s)";
  return res;
}

// ---- 6: coverage with planted effects ----

CriterionResult criterion_coverage(const BatteryOptions& o) {
  CriterionResult res{6, "CI coverage with planted effects", false, "", Json::object()};
  const std::uint64_t base = rng::derive_seed(o.seed, "c6");
  const int sims = o.coverage_sims;
  int cov_direct = 0, cov_up = 0, cov_beta = 0, cov_beta_ri = 0;
  int up_clipped = 0;
  for (int s = 0; s < sims; ++s) {
    const std::uint64_t sd = rng::derive_seed(base, static_cast<std::uint64_t>(s));
    sim::ScenarioSpec spec;
    spec.network.n = 600;
    spec.network.clusters = 60;
    spec.network.p_in = 0.3;
    spec.network.p_out = 0.002;
    spec.outcomes.tau_direct = -0.05;
    spec.outcomes.beta = 0.75;
    spec.outcomes.noise = 0.1;
    spec.upstream.users = 200;
    spec.upstream.tau_upstream = -0.03;
    spec.upstream.beta = 0.75;
    sim::SimNetwork net = sim::gen_network(spec.network, rng::derive_seed(sd, "net"));
    Assignment a = assign(net.clusters, spec.design, rng::derive_seed(sd, "assign"));
    sim::SimOutcomes out = sim::gen_outcomes(net, a.z, spec.outcomes, spec.start_month, rng::derive_seed(sd, "sim"));
    const double ate = out.truth["ate_during"].get<double>();

    EstimateReport r = ate_difference(out.panel.delta_during, a.z, net.clusters.cluster_of, propensities(spec.design));
    if (r.ci_low <= ate && ate <= r.ci_high) ++cov_direct;

    PersistenceFit pf = estimate_persistence(out.panel.raw_difference(PeriodName::kDuring),
                                             out.panel.raw_difference(PeriodName::kPost), out.panel.y_pre,
                                             net.clusters.cluster_of, 40);
    if (pf.ci_low <= spec.outcomes.beta && spec.outcomes.beta <= pf.ci_high) ++cov_beta;

    sim::SimUpstream up = sim::gen_upstream_scenario(net, a.z, spec.upstream, rng::derive_seed(sd, "up"));
    std::vector<const std::vector<RosterEntry>*> rosters;
    for (const auto& roster : up.rosters) rosters.push_back(&roster);
    ExposureDraws draws(rosters, net.clusters, spec.design, o.ri_reps, rng::derive_seed(sd, "ri"), o.workers);
    stats::BinDemeaner ub(upstream_bins(up.pre_volume, 10).bin_of);
    RiResult ci = ri_confidence_interval(up.y, up.t, draws, ub, UpstreamRiOptions{});
    const double tau = up.tau_unit;
    if (!ci.ci_empty && ci.ci_low - 1e-9 <= tau && tau <= ci.ci_high + 1e-9) ++cov_up;
    if (ci.clipped_low || ci.clipped_high) ++up_clipped;

    PersistenceRiOptions po;
    po.tau_grid = Grid::from(tau, 1.0, tau);
    PersistenceRow row = persistence_ri(up.d_during, up.d_post, up.t, draws, ub, po).front();
    if (!row.ci_empty && row.ci_low - 1e-9 <= spec.upstream.beta && spec.upstream.beta <= row.ci_high + 1e-9)
      ++cov_beta_ri;
  }
  auto rate = [&](int c) { return static_cast<double>(c) / sims; };
  const double need = 0.93;
  res.passed = rate(cov_direct) >= need && rate(cov_up) >= need && rate(cov_beta) >= need && rate(cov_beta_ri) >= need;
  res.detail = {{"sims", sims},
                {"tau_direct", rate(cov_direct)},
                {"tau_upstream", rate(cov_up)},
                {"tau_upstream_clipped", up_clipped},
                {"beta_direct_persistence", rate(cov_beta)},
                {"beta_upstream_ri", rate(cov_beta_ri)},
                {"threshold", need}};
  res.summary = std::to_string(sims) + " sims: tau_direct " + fixed(rate(cov_direct), 3) + ", tau_upstream " +
                fixed(rate(cov_up), 3) + ", beta (OLS) " + fixed(rate(cov_beta), 3) + ", beta (RI) " +
                fixed(rate(cov_beta_ri), 3) + " (need >= 0.93)";
  return res;
}

// ---- 7: Hajek regression equals the ratio ----

CriterionResult criterion_hajek(std::uint64_t seed) {
  CriterionResult res{7, "Hajek equivalence", false, "", Json::object()};
  rng::Stream r(rng::derive_seed(seed, "c7"));
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 20 + r.below(181);
    ExposureTable t;
    t.state.condition.resize(n);
    t.weight.resize(n);
    t.included.assign(n, 1);
    std::vector<double> y(n);
    std::vector<int> cluster(n);
    for (std::size_t i = 0; i < n; ++i) {
      t.state.condition[i] = static_cast<Condition>(i < 4 ? i : r.below(4));
      t.weight[i] = 1.0 + 49.0 * r.uniform();
      y[i] = 2.0 * r.normal() + 1.0;
      cluster[i] = static_cast<int>(r.below(n / 4 + 1));
      if (i >= 4 && r.uniform() < 0.1) t.included[i] = 0;
    }
    HajekFit fit = hajek_estimate(y, t, {}, cluster, nullptr, HacKernel::kCluster);
    double num[4] = {0, 0, 0, 0}, den[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      if (!t.included[i]) continue;
      int c = static_cast<int>(t.state.condition[i]);
      num[c] += t.weight[i] * y[i];
      den[c] += t.weight[i];
    }
    for (int c = 0; c < 4; ++c) worst = std::max(worst, std::fabs(fit.mu[c] - num[c] / den[c]));
  }
  res.passed = worst <= 1e-10;
  res.detail = {{"instances", 100}, {"max_error", worst}, {"tolerance", 1e-10}};
  res.summary = "100 instances, max |WLS - ratio| = " + sci(worst) + " (tol 1e-10)";
  return res;
}

// ---- 8: MC exposure propensities ----

CriterionResult criterion_mc_propensity(const BatteryOptions& o) {
  CriterionResult res{8, "exposure propensity agreement", false, "", Json::object()};
  rng::Stream r(rng::derive_seed(o.seed, "c8"));
  const int n = 10;
  std::vector<std::tuple<std::string, std::string, std::int64_t>> edges;
  for (int i = 0; i < n; ++i) edges.emplace_back(std::to_string(i), std::to_string((i + 1) % n), 1 + r.below(3));
  for (int k = 0; k < 8; ++k) {
    int a = static_cast<int>(r.below(n)), b = static_cast<int>(r.below(n));
    if (a != b) edges.emplace_back(std::to_string(a), std::to_string(b), 1 + r.below(4));
  }
  InteractionGraph g = InteractionGraph::from_weighted_edges(edges);
  std::vector<std::tuple<std::string, std::int64_t, bool>> rows;
  for (int i = 0; i < n; ++i) rows.emplace_back(std::to_string(i), i * 3 / n, false);
  ClusterAssignment cl = make_clusters(rows);
  UndirectedAdjacency nbrs = neighbor_weights(g);
  DesignParams p;
  const double q = 0.7;
  ExposurePropensities exact = exact_exposure_propensities(cl, nbrs, p, q);
  ExposurePropensities mc = mc_exposure_propensities(cl, nbrs, p, q, o.mc_reps, rng::derive_seed(o.seed, "mc"), o.workers);
  double worst_z = 0.0;
  int cells = 0, outside = 0, degenerate = 0;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 5; ++c) {
      double pe = exact.pi[i][c], pm = mc.pi[i][c];
      double se = std::sqrt(pe * (1.0 - pe) / static_cast<double>(o.mc_reps));
      ++cells;
      if (se == 0.0) {
        ++degenerate;
        if (pm != pe) ++outside;
        continue;
      }
      double zs = std::fabs(pm - pe) / se;
      worst_z = std::max(worst_z, zs);
      if (zs > 3.0) ++outside;
    }
  res.passed = outside == 0;
  res.detail = {{"users", n}, {"cells", cells}, {"degenerate_cells", degenerate}, {"outside_3se", outside},
                {"max_abs_z", worst_z}, {"reps", o.mc_reps}};
  res.summary = std::to_string(cells) + " user/condition cells, " + std::to_string(outside) +
                " outside 3 SE, max |z| = " + fixed(worst_z, 2) + " (B=" + std::to_string(o.mc_reps) + ")";
  return res;
}

// ---- 9: Wald conversion ----

CriterionResult criterion_wald() {
  CriterionResult res{9, "Wald conversion", false, "", Json::object()};
  EstimateReport itt;
  itt.estimand = "itt";
  itt.point = -0.025;
  itt.std_error = 0.01;
  EstimateReport tot = tot_wald(itt, 0.458);
  res.passed = std::fabs(tot.point - (-0.0546)) <= 0.0002;
  res.detail = {{"itt", -0.025}, {"takeup", 0.458}, {"tot", tot.point}, {"target", -0.0546}, {"tolerance", 0.0002}};
  res.summary = "tot_wald(-0.025, 0.458) = " + fixed(tot.point, 5) + " (target -0.0546 +/- 0.0002)";
  return res;
}

// ---- 10: analytics oracles ----

OrderingStat brute_ordering(const std::vector<std::vector<OrderedRepost>>& posts) {
  OrderingStat s;
  for (const auto& reps : posts) {
    // Earliest repost per user by scanning every candidate.
    std::vector<const OrderedRepost*> firsts;
    for (const auto& a : reps) {
      bool earliest = true;
      for (const auto& b : reps) {
        if (b.user_id != a.user_id || &a == &b) continue;
        bool b_first = b.ts < a.ts || (b.ts == a.ts && id_less(b.repost_id, a.repost_id));
        if (b_first) earliest = false;
      }
      if (earliest) firsts.push_back(&a);
    }
    std::size_t parts = 0, nons = 0;
    for (const auto* a : firsts) (a->participant ? parts : nons)++;
    s.denominator += parts * nons;
    for (const auto* j : firsts) {
      if (j->participant) continue;
      for (const auto* k : firsts) {
        if (!k->participant) continue;
        if (k->ts < j->ts || (k->ts == j->ts && id_less(k->repost_id, j->repost_id))) ++s.numerator;
      }
    }
  }
  return s;
}

PostEvent repost_at(const std::string& user, const std::string& source, int year, unsigned month, int k) {
  using namespace std::chrono;
  PostEvent p;
  p.user_id = user;
  p.post_id = user + "-" + source + "-" + std::to_string(year) + std::to_string(month) + "-" + std::to_string(k);
  p.kind = PostKind::kRepost;
  p.source_user_id = source;
  p.ts = sys_seconds{sys_days{std::chrono::year{year} / month / 10}}.time_since_epoch().count() + k;
  return p;
}

CriterionResult criterion_analytics(std::uint64_t seed) {
  CriterionResult res{10, "analytics oracles", false, "", Json::object()};
  rng::Stream r(rng::derive_seed(seed, "c10"));

  int ordering_mismatch = 0;
  for (int k = 0; k < 1000; ++k) {
    std::vector<std::vector<OrderedRepost>> posts(1 + r.below(4));
    for (auto& reps : posts) {
      std::size_t m = r.below(25);
      for (std::size_t j = 0; j < m; ++j) {
        OrderedRepost o;
        int u = static_cast<int>(r.below(12));
        o.user_id = "u" + std::to_string(u);
        o.participant = u % 3 == 0;
        o.ts = static_cast<Timestamp>(r.below(10));
        o.repost_id = std::to_string(r.below(1000) * 100 + j);  // post ids are unique
        reps.push_back(o);
      }
    }
    OrderingStat a = ordering_statistic(posts), b = brute_ordering(posts);
    if (a.numerator != b.numerator || a.denominator != b.denominator) ++ordering_mismatch;
  }

  // Hand-computed renewal fixtures.
  int renewal_mismatch = 0;
  {
    std::vector<PostEvent> posts;
    int k = 0;
    for (const char* s : {"x", "y", "z"}) posts.push_back(repost_at("a", s, 2023, 1, k++));
    for (const char* s : {"y", "w"}) posts.push_back(repost_at("a", s, 2023, 2, k++));
    posts.push_back(repost_at("a", "w", 2023, 3, k++));
    for (int j = 0; j < 3; ++j) posts.push_back(repost_at("b", "x", 2023, 1, k++));
    RenewalSeries s = renewal_rate(posts);
    // a: Jan 1 - 1/3, Feb 1 - 1/2; b: Jan 1. March has no following month.
    std::map<std::pair<std::string, std::string>, double> want{
        {{"a", "2023-01"}, 2.0 / 3.0}, {{"a", "2023-02"}, 0.5}, {{"b", "2023-01"}, 1.0}};
    if (s.points.size() != want.size()) ++renewal_mismatch;
    for (const auto& pt : s.points) {
      auto it = want.find({pt.user_id, pt.month});
      if (it == want.end() || std::fabs(it->second - pt.rate) > 1e-15) ++renewal_mismatch;
    }
    if (std::fabs(s.overall_mean - (2.0 / 3.0 + 0.5 + 1.0) / 3.0) > 1e-15) ++renewal_mismatch;
    if (s.months.empty() || std::fabs(s.months[0].mean - 5.0 / 6.0) > 1e-15) ++renewal_mismatch;
  }
  {
    std::vector<PostEvent> posts;
    int k = 0;
    for (int j = 0; j < 5; ++j) posts.push_back(repost_at("a", "x", 2023, 1, k++));
    for (int j = 0; j < 3; ++j) posts.push_back(repost_at("a", "y", 2023, 1, k++));
    for (int j = 0; j < 2; ++j) posts.push_back(repost_at("a", "z", 2023, 1, k++));
    posts.push_back(repost_at("a", "x", 2023, 2, k++));
    // Cap 0.5 keeps {x}: renewal 0. Cap 0.8 keeps {x, y}: renewal 1/2.
    RenewalSeries s50 = renewal_rate(posts, 0.5), s80 = renewal_rate(posts, 0.8);
    if (s50.points.size() != 1 || s50.points[0].rate != 0.0) ++renewal_mismatch;
    if (s80.points.size() != 1 || s80.points[0].rate != 0.5) ++renewal_mismatch;
  }

  int lost_mismatch = 0;
  for (int k = 0; k < 1000; ++k) {
    std::set<std::string> pre, period;
    for (std::size_t j = r.below(20); j > 0; --j) pre.insert("u" + std::to_string(r.below(30)));
    for (std::size_t j = r.below(20); j > 0; --j) period.insert("u" + std::to_string(r.below(30)));
    std::vector<std::string> diff;
    std::set_difference(pre.begin(), pre.end(), period.begin(), period.end(), std::back_inserter(diff));
    std::unordered_set<std::string> a(pre.begin(), pre.end()), b(period.begin(), period.end());
    if (lost_count(a, b) != diff.size()) ++lost_mismatch;
  }
  res.passed = ordering_mismatch == 0 && renewal_mismatch == 0 && lost_mismatch == 0;
  res.detail = {{"ordering_cases", 1000}, {"ordering_mismatch", ordering_mismatch},
                {"renewal_mismatch", renewal_mismatch}, {"lost_cases", 1000}, {"lost_mismatch", lost_mismatch}};
  res.summary = "ordering 1000 rosters: " + std::to_string(ordering_mismatch) + " mismatches; renewal fixtures: " +
                std::to_string(renewal_mismatch) + "; lost reposters 1000 cases: " + std::to_string(lost_mismatch);
  return res;
}

std::string digest_of(const std::vector<CriterionResult>& rs) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& r : rs) {
    std::string s = std::to_string(r.id) + (r.passed ? "1" : "0") + r.detail.dump();
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<CriterionResult> run_core(const BatteryOptions& o, const std::function<void(const CriterionResult&)>& cb) {
  std::vector<CriterionResult> out;
  auto timed = [&](auto&& fn) {
    auto t0 = Clock::now();
    CriterionResult r = fn();
    r.seconds = elapsed(t0);
    if (cb) cb(r);
    out.push_back(std::move(r));
  };
  timed([&] {
    auto t0 = Clock::now();
    CriterionResult r = criterion_propensities(o.seed);
    double s = elapsed(t0);
    if (s >= 10.0) r.passed = false;
    r.summary += ", " + fixed(s, 2) + "s (limit 10s)";
    return r;
  });
  {
    auto t0 = Clock::now();
    auto rs = criteria_moments(o.seed);
    double s = elapsed(t0) / 3.0;
    for (auto& r : rs) {
      r.seconds = s;
      if (cb) cb(r);
      out.push_back(std::move(r));
    }
  }
  timed([&] { return criterion_ri_validity(o); });
  timed([&] { return criterion_coverage(o); });
  timed([&] { return criterion_hajek(o.seed); });
  timed([&] { return criterion_mc_propensity(o); });
  timed([&] { return criterion_wald(); });
  timed([&] { return criterion_analytics(o.seed); });
  return out;
}

}  // namespace

bool BatteryResult::passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& r) { return r.passed; });
}

BatteryResult run_battery(const BatteryOptions& o, const std::function<void(const CriterionResult&)>& on_result) {
  const auto t0 = Clock::now();
  BatteryResult res;
  res.criteria = run_core(o, on_result);
  res.digest = digest_of(res.criteria);
  if (o.determinism) {
    BatteryOptions again = o;
    again.workers = o.workers == 1 ? 4 : 1;
    auto t1 = Clock::now();
    std::string second = digest_of(run_core(again, {}));
    double total = elapsed(t0);
    CriterionResult r{11, "determinism", false, "", Json::object()};
    r.seconds = elapsed(t1);
    r.passed = second == res.digest && total < 1800.0;
    r.detail = {{"workers", {o.workers, again.workers}}, {"digests", {res.digest, second}}};
    r.summary = "digest " + res.digest + " (workers=" + std::to_string(o.workers) + ") vs " + second + " (workers=" +
                std::to_string(again.workers) + "); two battery runs took " + fixed(total, 1) + "s (limit 1800s)";
    if (on_result) on_result(r);
    res.criteria.push_back(r);
  }
  res.seconds = elapsed(t0);
  return res;
}

std::string format_line(const CriterionResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "[%s] criterion %2d  %-32s ", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str());
  return head + r.summary;
}

}  // namespace netx::acceptance
