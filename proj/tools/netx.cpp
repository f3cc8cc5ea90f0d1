// netx: command-line front end. Exit codes: 0 ok, 2 validation, 3 numerical.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "netx/acceptance.hpp"
#include "netx/analytics.hpp"
#include "netx/direct.hpp"
#include "netx/error.hpp"
#include "netx/exposure.hpp"
#include "netx/io.hpp"
#include "netx/parallel.hpp"
#include "netx/persistence.hpp"
#include "netx/pipeline.hpp"
#include "netx/rng.hpp"
#include "netx/upstream.hpp"

namespace fs = std::filesystem;
using namespace netx;

namespace {

void emit(const Json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    io::write_json(out, j);
  }
}

HateMeasure measure_from(const std::string& spec, const std::string& keywords) {
  std::string s = spec;
  std::string path = keywords;
  // "keywords:<path>" carries the file inline.
  if (s.rfind("keywords:", 0) == 0) {
    auto rest = s.substr(9);
    auto comma = rest.find(',');
    path = rest.substr(0, comma);
    s = "keywords" + (comma == std::string::npos ? std::string() : rest.substr(comma));
  }
  HateMeasure m = parse_hate_measure(s);
  if (m.mode == HateMode::kKeyword) {
    require(!path.empty(), "keyword measure needs a keyword file");
    std::istringstream in(io::read_text(path));
    std::string line;
    while (std::getline(in, line))
      for (auto& t : tokenize(line)) m.keywords.insert(t);
  }
  m.validate();
  return m;
}

// Aligns an assignment file to a panel's users.
struct Aligned {
  std::vector<std::uint8_t> z;
  std::vector<int> cluster_of;
};

Aligned align(const OutcomePanel& panel, const io::AssignmentFile& af) {
  Aligned a;
  require(panel.num_users() == af.clusters.num_nodes(), "panel and assignment cover different users");
  for (std::size_t i = 0; i < panel.num_users(); ++i) {
    int k = af.clusters.nodes.at(panel.users.id(static_cast<int>(i)));
    a.z.push_back(af.assignment.z[k]);
    a.cluster_of.push_back(af.clusters.cluster_of[k]);
  }
  return a;
}

Json stamp(Json j, const std::string& command, std::uint64_t seed) {
  Json out;
  out["command"] = command;
  out["seed"] = seed;
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = it.value();
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"netx: design-based inference for network experiments"};
  app.require_subcommand(1);
  unsigned workers = default_workers();
  app.add_option("--workers", workers, "worker threads (results do not depend on this)");

  // cluster
  auto* cl = app.add_subcommand("cluster", "prune the interaction graph and run 3-net clustering");
  std::string edges, out;
  int k_out = 10, k_in = 10;
  std::uint64_t seed = 1;
  cl->add_option("--edges", edges, "edges.csv or interactions.jsonl")->required();
  cl->add_option("--k-out", k_out);
  cl->add_option("--k-in", k_in);
  cl->add_option("--seed", seed);
  cl->add_option("--out", out)->required();
  cl->callback([&] {
    InteractionGraph g = prune_graph(io::read_graph(edges), k_out, k_in);
    ClusterAssignment c = three_net_cluster(g, rng::derive_seed(seed, "cluster"));
    io::write_clusters_csv(out, c);
    std::fprintf(stderr, "%zu users, %zu edges kept, %d clusters\n", g.num_nodes(), g.num_edges(), c.num_clusters());
  });

  // assign
  auto* as = app.add_subcommand("assign", "draw the two-stage hole-punching assignment");
  std::string clusters_path;
  DesignParams design;
  as->add_option("--clusters", clusters_path)->required();
  as->add_option("--pt", design.p_t);
  as->add_option("--php", design.p_hp);
  as->add_option("--seed", seed);
  as->add_option("--out", out)->required();
  as->callback([&] {
    design.validate();
    ClusterAssignment c = io::read_clusters_csv(clusters_path);
    Assignment a = assign(c, design, rng::derive_seed(seed, "assign"));
    io::write_assignment_csv(out, c, a);
  });

  // propensity
  auto* pr = app.add_subcommand("propensity", "closed-form propensity table");
  std::string enumerate_path;
  pr->add_option("--pt", design.p_t);
  pr->add_option("--php", design.p_hp);
  pr->add_option("--enumerate", enumerate_path, "clusters.csv to check against full enumeration");
  pr->add_option("--out", out);
  pr->callback([&] {
    design.validate();
    PropensityTable t = propensities(design);
    Json j;
    j["p_t"] = design.p_t;
    j["p_hp"] = design.p_hp;
    j["marginal"] = {{"treated", t.marginal[1]}, {"control", t.marginal[0]}};
    j["same_cluster"] = {{"11", t.same[1][1]}, {"10", t.same[1][0]}, {"01", t.same[0][1]}, {"00", t.same[0][0]}};
    j["cross_cluster"] = {{"11", t.cross[1][1]}, {"10", t.cross[1][0]}, {"01", t.cross[0][1]}, {"00", t.cross[0][0]}};
    j["within_cluster_correlation"] = within_cluster_correlation(t);
    if (!enumerate_path.empty()) {
      ClusterAssignment c = io::read_clusters_csv(enumerate_path);
      DesignDistribution d = enumerate_design(c, design);
      const int n = d.num_nodes;
      double worst = 0.0;
      for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k) {
          double cell[2][2] = {{0, 0}, {0, 0}};
          for (std::uint32_t m = 0; m < d.prob.size(); ++m) cell[d.z(m, i)][d.z(m, k)] += d.prob[m];
          bool same = c.cluster_of[i] == c.cluster_of[k];
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) worst = std::max(worst, std::fabs(cell[a][b] - t.joint(a, b, same)));
        }
      j["enumeration"] = {{"nodes", n}, {"clusters", c.num_clusters()}, {"max_abs_error", worst}};
    }
    emit(j, out);
  });

  // panel
  auto* pa = app.add_subcommand("panel", "build the per-user outcome panel");
  std::string posts, periods_path, roster, hate_mode = "threshold:0.5", keywords, aggregation = "monthly", alpha = "pooled";
  pa->add_option("--posts", posts)->required();
  pa->add_option("--periods", periods_path)->required();
  pa->add_option("--users", roster, "clusters.csv or assignment.csv defining the roster");
  pa->add_option("--hate-mode", hate_mode);
  pa->add_option("--keywords", keywords);
  pa->add_option("--aggregation", aggregation)->check(CLI::IsMember({"monthly", "total"}));
  pa->add_option("--alpha", alpha)->check(CLI::IsMember({"pooled", "control"}));
  pa->add_option("--out", out)->required();
  pa->callback([&] {
    PeriodSpec periods = io::read_periods(periods_path);
    auto p = io::read_posts_jsonl(posts);
    std::vector<std::string> users;
    std::vector<std::uint8_t> z;
    if (!roster.empty()) {
      io::CsvTable t = io::read_csv(roster);
      if (t.column("assigned") >= 0) {
        auto af = io::read_assignment_csv(roster);
        users = af.clusters.nodes.ids();
        z = af.assignment.z;
      } else {
        users = io::read_clusters_csv(roster).nodes.ids();
      }
    }
    require(alpha == "pooled" || !z.empty(), "control-only alpha needs --users pointing at an assignment file");
    OutcomePanel panel = build_panel(p, users, periods, measure_from(hate_mode, keywords),
                                     aggregation == "total" ? PeriodAggregation::kLogPeriodTotal
                                                            : PeriodAggregation::kMonthlyLogMean);
    difference_adjust(panel, alpha == "control" ? AlphaSample::kControlOnly : AlphaSample::kPooled, z);
    io::write_panel(out, panel, periods);
  });

  // estimate direct
  auto* est = app.add_subcommand("estimate", "direct-effect estimators");
  est->require_subcommand(1);
  auto* dir = est->add_subcommand("direct", "difference estimator with conservative variance");
  std::string panel_path, assignment_path, subgroup, grid_text = "-1:0.005:1", tail_text = "equal";
  bool monthly = false;
  std::size_t reps = 10000;
  std::optional<double> takeup;
  dir->add_option("--panel", panel_path)->required();
  dir->add_option("--assignment", assignment_path)->required();
  dir->add_option("--subgroup", subgroup, "median_activity:high|low or hate_share:high|low");
  dir->add_flag("--monthly-ri", monthly);
  dir->add_option("--reps", reps);
  dir->add_option("--grid", grid_text);
  dir->add_option("--tail", tail_text);
  dir->add_option("--seed", seed);
  dir->add_option("--takeup", takeup);
  dir->add_option("--pt", design.p_t);
  dir->add_option("--php", design.p_hp);
  dir->add_option("--out", out);
  dir->callback([&] {
    design.validate();
    io::PanelFile pf = io::read_panel(panel_path);
    io::AssignmentFile af = io::read_assignment_csv(assignment_path);
    require(pf.panel.adjusted, "panel has no difference-adjusted outcomes");
    Aligned a = align(pf.panel, af);
    PropensityTable t = propensities(design);
    Json reports = Json::array();
    auto add = [&](const std::vector<double>& y, const std::string& name, double alpha_v) {
      EstimateReport r;
      if (subgroup.empty()) {
        r = ate_difference(y, a.z, a.cluster_of, t, name);
      } else {
        auto colon = subgroup.find(':');
        require(colon != std::string::npos, "--subgroup must look like median_activity:high");
        std::string var = subgroup.substr(0, colon), side = subgroup.substr(colon + 1);
        require(var == "median_activity" || var == "hate_share", "unknown subgroup variable " + var);
        require(side == "high" || side == "low", "subgroup side must be high or low");
        const auto& split = var == "median_activity" ? pf.panel.pre_posts : pf.panel.pre_hate_share;
        r = subgroup_ate(y, a.z, a.cluster_of, t, split, side == "high" ? Subgroup::kHigh : Subgroup::kLow,
                         name + "_" + var + "_" + side);
      }
      r.metadata["alpha"] = alpha_v;
      reports.push_back(to_json(r));
      if (takeup) reports.push_back(to_json(tot_wald(r, *takeup)));
    };
    add(pf.panel.delta_during, "during", pf.panel.alpha_during);
    if (pf.panel.has_post) add(pf.panel.delta_post, "post", pf.panel.alpha_post);
    Json j;
    j["estimates"] = reports;
    if (monthly) {
      // Cluster table re-ordered to the panel's users.
      std::vector<std::tuple<std::string, std::int64_t, bool>> rows;
      for (std::size_t i = 0; i < pf.panel.num_users(); ++i)
        rows.emplace_back(pf.panel.users.id(static_cast<int>(i)), a.cluster_of[i], false);
      ClusterAssignment c = make_clusters(rows);
      stats::BinDemeaner bins(stats::make_bins(pf.panel.y_pre, 40).bin_of);
      Json months = Json::array();
      for (std::size_t b = 0; b < pf.panel.buckets.size(); ++b) {
        if (pf.panel.buckets[b].period == PeriodName::kPre) continue;
        MonthlyRiOptions o;
        o.reps = reps;
        o.seed = rng::derive_seed(rng::derive_seed(seed, "ri"), "monthly:" + pf.panel.buckets[b].label());
        o.grid = Grid::parse(grid_text);
        o.workers = workers;
        o.tail = parse_tail(tail_text);
        RiResult r = monthly_ri_ci(pf.panel.month_column(b), a.z, c, design, bins, o);
        r.outcome = std::string(period_label(pf.panel.buckets[b].period)) + ":" + pf.panel.buckets[b].label();
        months.push_back(to_json(r));
      }
      j["monthly_ri"] = months;
    }
    emit(stamp(j, "estimate direct", seed), out);
  });

  // exposure
  auto* ex = app.add_subcommand("exposure", "q-fraction exposure contrasts");
  std::string graph_path, kernel = "cluster_or_adjacent", neighbor = "undirected";
  double q = 0.7;
  int bins = 10;
  std::size_t mc_reps = 50000;
  ex->add_option("--panel", panel_path)->required();
  ex->add_option("--assignment", assignment_path)->required();
  ex->add_option("--graph", graph_path)->required();
  ex->add_option("--q", q);
  ex->add_option("--reps", mc_reps);
  ex->add_option("--seed", seed);
  ex->add_option("--bins", bins, "pre-outcome bins as covariates (0 = none)");
  ex->add_option("--kernel", kernel)->check(CLI::IsMember({"independent", "cluster", "cluster_or_adjacent"}));
  ex->add_option("--neighbors", neighbor)->check(CLI::IsMember({"undirected", "outgoing"}));
  ex->add_option("--pt", design.p_t);
  ex->add_option("--php", design.p_hp);
  ex->add_option("--out", out);
  ex->callback([&] {
    design.validate();
    validate_q(q);
    io::PanelFile pf = io::read_panel(panel_path);
    io::AssignmentFile af = io::read_assignment_csv(assignment_path);
    InteractionGraph g = io::read_graph(graph_path);
    require(g.nodes().ids() == af.clusters.nodes.ids(), "graph and assignment cover different users");
    Aligned a = align(pf.panel, af);
    UndirectedAdjacency nbrs = neighbor_weights(g, neighbor == "outgoing" ? NeighborMode::kOutgoing : NeighborMode::kUndirected);
    ExposurePropensities pi = mc_exposure_propensities(af.clusters, nbrs, design, q, mc_reps,
                                                       rng::derive_seed(seed, "mc"), workers);
    // Panel order equals id order, as does the assignment's.
    ExposureTable table = build_exposure_table(af.assignment.z, nbrs, q, std::move(pi));
    HacKernel k = kernel == "independent" ? HacKernel::kIndependent
                  : kernel == "cluster"   ? HacKernel::kCluster
                                          : HacKernel::kClusterOrAdjacent;
    std::vector<int> bin_of;
    if (bins > 1) bin_of = stats::make_bins(pf.panel.y_pre, bins).bin_of;
    Json j;
    j["q"] = q;
    j["reps"] = mc_reps;
    j["unclassified"] = table.unclassified;
    j["trimmed"] = table.trimmed;
    Json outs = Json::array();
    auto run_one = [&](const std::vector<double>& y, const char* name) {
      HajekFit fit = hajek_estimate(y, table, bin_of, a.cluster_of, &nbrs, k);
      ContrastReport cr = exposure_contrasts(fit.mu, fit.vcov);
      cr.kernel = kernel_name(k);
      outs.push_back({{"outcome", name}, {"n", fit.n}, {"fit", to_json(cr)}});
    };
    run_one(pf.panel.delta_during, "during");
    if (pf.panel.has_post) run_one(pf.panel.delta_post, "post");
    j["outcomes"] = outs;
    emit(stamp(j, "exposure", seed), out);
  });

  // upstream ri / persistence
  auto* up = app.add_subcommand("upstream", "indirect effects on upstream users");
  up->require_subcommand(1);
  std::size_t limit = 400;
  double max_posts = 15000;
  std::string weighting = "count", lost = "hate", tau_grid = "-5:1:-1", beta_grid = "0:0.01:1";
  int up_bins = 10;
  std::size_t up_reps = 10000;
  grid_text = "-10:0.25:10";
  auto common_up = [&](CLI::App* c) {
    c->add_option("--posts", posts)->required();
    c->add_option("--assignment", assignment_path)->required();
    c->add_option("--clusters", clusters_path, "optional cross-check of the assignment's clusters");
    c->add_option("--periods", periods_path)->required();
    c->add_option("--limit", limit);
    c->add_option("--max-posts", max_posts);
    c->add_option("--reps", up_reps);
    c->add_option("--seed", seed);
    c->add_option("--bins", up_bins);
    c->add_option("--hate-mode", hate_mode);
    c->add_option("--keywords", keywords);
    c->add_option("--weighting", weighting)->check(CLI::IsMember({"count", "hate"}));
    c->add_option("--pt", design.p_t);
    c->add_option("--php", design.p_hp);
    c->add_option("--out", out);
  };
  auto* ur = up->add_subcommand("ri", "randomization test and interval for tau");
  common_up(ur);
  ur->add_option("--grid", grid_text);
  ur->add_option("--tail", tail_text);
  ur->add_option("--lost", lost)->check(CLI::IsMember({"hate", "any"}));
  auto* upers = up->add_subcommand("persistence", "randomization interval for beta given tau");
  common_up(upers);
  upers->add_option("--tau-grid", tau_grid);
  upers->add_option("--beta-grid", beta_grid);

  struct UpContext {
    io::AssignmentFile af;
    PeriodSpec periods;
    std::vector<PostEvent> posts;
    UpstreamData data;
    Selection sel;
    HateMeasure measure;
    ExposureWeighting weighting;
  };
  auto load_up = [&] {
    design.validate();
    UpContext c;
    c.af = io::read_assignment_csv(assignment_path);
    if (!clusters_path.empty()) {
      ClusterAssignment chk = io::read_clusters_csv(clusters_path);
      require(chk.nodes.ids() == c.af.clusters.nodes.ids() && chk.cluster_of == c.af.clusters.cluster_of,
              "--clusters disagrees with the assignment file");
    }
    c.periods = io::read_periods(periods_path);
    c.posts = io::read_posts_jsonl(posts);
    c.measure = measure_from(hate_mode, keywords);
    c.weighting = weighting == "hate" ? ExposureWeighting::kHate : ExposureWeighting::kCount;
    c.data = build_upstream(c.posts, c.af.clusters.nodes, c.periods.pre);
    c.sel = select_upstream(c.data, limit, max_posts, c.weighting);
    require(c.sel.users.size() >= 3, "fewer than three upstream users selected");
    return c;
  };
  auto roster_of = [](const UpContext& c, std::size_t k) -> const std::vector<RosterEntry>& {
    const UpstreamUser& u = c.data.users[c.sel.users[k]];
    return c.weighting == ExposureWeighting::kHate ? u.hate_roster : u.roster;
  };

  ur->callback([&] {
    UpContext c = load_up();
    UpstreamOutcomes uo = upstream_outcomes(c.posts, c.data, c.sel.users, c.periods, c.measure,
                                            lost == "any" ? LostMode::kAnyReposts : LostMode::kHateReposts);
    const std::size_t m = c.sel.users.size();
    std::vector<std::pair<std::string, const std::vector<double>*>> outcomes{
        {"hate_reposts_participants_during", &uo.hate_part_during},
        {"hate_reposts_nonparticipants_during", &uo.hate_non_during},
        {"lost_reposters_participants_during", &uo.lost_part_during},
        {"lost_reposters_nonparticipants_during", &uo.lost_non_during}};
    if (uo.has_post) {
      outcomes.push_back({"hate_reposts_participants_post", &uo.hate_part_post});
      outcomes.push_back({"hate_reposts_nonparticipants_post", &uo.hate_non_post});
      outcomes.push_back({"lost_reposters_participants_post", &uo.lost_part_post});
      outcomes.push_back({"lost_reposters_nonparticipants_post", &uo.lost_non_post});
    }
    UpstreamRiOptions opt;
    opt.grid = Grid::parse(grid_text);
    opt.tail = parse_tail(tail_text);
    const std::uint64_t ri_seed = rng::derive_seed(rng::derive_seed(seed, "ri"), "upstream");
    Json results = Json::array();
    for (const auto& [name, y] : outcomes) {
      std::vector<const std::vector<RosterEntry>*> rosters;
      std::vector<double> ys, ts, pv;
      for (std::size_t k = 0; k < m; ++k) {
        double t = realized_exposure(roster_of(c, k), c.af.assignment.z);
        if (!std::isfinite((*y)[k]) || !std::isfinite(t)) continue;
        rosters.push_back(&roster_of(c, k));
        ys.push_back((*y)[k]);
        ts.push_back(t);
        pv.push_back(c.data.users[c.sel.users[k]].pre_posts);
      }
      Json o{{"outcome", name}, {"n", ys.size()}, {"dropped", m - ys.size()}};
      try {
        require(ys.size() >= 3, "fewer than three usable upstream users");
        stats::BinDemeaner bd(upstream_bins(pv, up_bins).bin_of);
        ExposureDraws draws(rosters, c.af.clusters, design, up_reps, ri_seed, workers);
        RiResult r = ri_confidence_interval(ys, ts, draws, bd, opt);
        r.outcome = name;
        o["ri"] = to_json(r);
      } catch (const std::exception& e) {
        o["error"] = e.what();
      }
      results.push_back(o);
    }
    Json j;
    j["selected"] = m;
    j["over_cap"] = c.sel.over_cap;
    j["unresolved_reposts"] = c.data.unresolved_reposts;
    j["warnings"] = c.sel.warnings;
    j["weighting"] = weighting;
    j["lost_mode"] = lost;
    j["results"] = results;
    emit(stamp(j, "upstream ri", seed), out);
  });

  upers->callback([&] {
    UpContext c = load_up();
    require(c.periods.post.has_value(), "persistence needs a post period");
    UpstreamOutcomes uo = upstream_outcomes(c.posts, c.data, c.sel.users, c.periods, c.measure);
    const std::size_t m = c.sel.users.size();
    std::vector<double> dd(m), dp(m), t(m), pv(m);
    std::vector<const std::vector<RosterEntry>*> rosters;
    for (std::size_t k = 0; k < m; ++k) {
      dd[k] = uo.hate_non_during[k] - uo.hate_non_pre[k];
      dp[k] = uo.hate_non_post[k] - uo.hate_non_pre[k];
      t[k] = realized_exposure(roster_of(c, k), c.af.assignment.z);
      pv[k] = c.data.users[c.sel.users[k]].pre_posts;
      rosters.push_back(&roster_of(c, k));
    }
    stats::BinDemeaner bd(upstream_bins(pv, up_bins).bin_of);
    ExposureDraws draws(rosters, c.af.clusters, design, up_reps,
                        rng::derive_seed(rng::derive_seed(seed, "ri"), "upstream"), workers);
    PersistenceRiOptions opt;
    opt.tau_grid = Grid::parse(tau_grid);
    opt.beta_grid = Grid::parse(beta_grid);
    Json rows = Json::array();
    for (const auto& row : persistence_ri(dd, dp, t, draws, bd, opt)) rows.push_back(to_json(row));
    Json j{{"outcome", "hate_reposts_nonparticipants"}, {"selected", m}, {"tail", tail_name(opt.tail)}, {"rows", rows}};
    emit(stamp(j, "upstream persistence", seed), out);
  });

  // persistence
  auto* pe = app.add_subcommand("persistence", "persistence of the direct effect");
  std::string robust = "CR1", bin_mode = "count";
  pe->add_option("--panel", panel_path)->required();
  pe->add_option("--clusters", clusters_path, "clusters.csv or assignment.csv")->required();
  pe->add_option("--bins", bins);
  pe->add_option("--robust", robust)->check(CLI::IsMember({"CR0", "CR1"}));
  pe->add_option("--bin-mode", bin_mode)->check(CLI::IsMember({"count", "width"}));
  pe->add_option("--out", out);
  pe->callback([&] {
    io::PanelFile pf = io::read_panel(panel_path);
    require(pf.panel.has_post, "panel has no post period");
    io::CsvTable t = io::read_csv(clusters_path);
    ClusterAssignment c = t.column("assigned") >= 0 ? io::read_assignment_csv(clusters_path).clusters
                                                     : io::read_clusters_csv(clusters_path);
    std::vector<int> cluster_of;
    for (std::size_t i = 0; i < pf.panel.num_users(); ++i)
      cluster_of.push_back(c.cluster_of[c.nodes.at(pf.panel.users.id(static_cast<int>(i)))]);
    PersistenceFit fit = estimate_persistence(pf.panel.raw_difference(PeriodName::kDuring),
                                              pf.panel.raw_difference(PeriodName::kPost), pf.panel.y_pre, cluster_of,
                                              bins == 10 && !pe->count("--bins") ? 40 : bins,
                                              bin_mode == "width" ? stats::BinMode::kEqualWidth : stats::BinMode::kEqualCount,
                                              robust == "CR0" ? RobustType::kCR0 : RobustType::kCR1);
    fit.outcome = pf.panel.measure_label;
    emit(Json{{"command", "persistence"}, {"fits", Json::array({to_json(fit)})}}, out);
  });

  // analytics
  auto* an = app.add_subcommand("analytics", "behavioural analytics");
  an->require_subcommand(1);
  std::optional<double> cap;
  auto* ren = an->add_subcommand("renewal", "monthly audience renewal");
  ren->add_option("--posts", posts)->required();
  ren->add_option("--users", roster, "clusters.csv or assignment.csv");
  ren->add_option("--cap", cap, "top-q account share, e.g. 0.8");
  ren->add_option("--out", out)->required();
  ren->callback([&] {
    auto p = io::read_posts_jsonl(posts);
    std::vector<std::string> users;
    if (!roster.empty()) users = io::read_clusters_csv(roster).nodes.ids();
    RenewalSeries s = renewal_rate(p, cap, users);
    std::string csv = "user_id,month,rate,accounts\n";
    for (const auto& pt : s.points)
      csv += pt.user_id + "," + pt.month + "," + io::fmt_double(pt.rate) + "," + std::to_string(pt.accounts) + "\n";
    io::write_text(out, csv);
    Json months = Json::array();
    for (const auto& m : s.months)
      months.push_back({{"month", m.month}, {"users", m.users}, {"mean", m.mean}, {"ci_low", m.ci_low},
                        {"ci_high", m.ci_high}, {"band", "mean +/- 1.96 SE across users"}});
    fs::path summary = fs::path(out).replace_extension(".summary.json");
    io::write_json(summary, {{"cap", cap ? Json(*cap) : Json(nullptr)},
                             {"overall_mean", number_or_null(s.overall_mean)},
                             {"months", months}});
  });

  auto* ord = an->add_subcommand("ordering", "repost-ordering statistic per upstream user");
  ord->add_option("--posts", posts)->required();
  ord->add_option("--assignment", assignment_path, "assignment.csv or clusters.csv (participants)")->required();
  ord->add_option("--periods", periods_path)->required();
  ord->add_option("--limit", limit);
  ord->add_option("--max-posts", max_posts);
  ord->add_option("--out", out)->required();
  ord->callback([&] {
    auto p = io::read_posts_jsonl(posts);
    PeriodSpec periods = io::read_periods(periods_path);
    ClusterAssignment c = io::read_clusters_csv(assignment_path);
    UpstreamData data = build_upstream(p, c.nodes, periods.pre);
    Selection sel = select_upstream(data, limit, max_posts);
    std::vector<std::string> ids;
    for (auto k : sel.users) ids.push_back(data.users[k].user_id);
    Period window{periods.pre.start, periods.post ? periods.post->end : periods.during.end};
    std::string csv = "user_id,numerator,denominator,r\n";
    for (const auto& s : ordering_from_posts(p, ids, c.nodes, window))
      csv += s.user_id + "," + std::to_string(s.numerator) + "," + std::to_string(s.denominator) + "," +
             io::fmt_double(s.value()) + "\n";
    io::write_text(out, csv);
  });

  auto* comp = an->add_subcommand("composition", "follower and status counts of reposted accounts");
  std::string period_name = "during";
  comp->add_option("--posts", posts)->required();
  comp->add_option("--users", roster, "clusters.csv or assignment.csv")->required();
  comp->add_option("--periods", periods_path)->required();
  comp->add_option("--period", period_name)->check(CLI::IsMember({"pre", "during", "post"}));
  comp->add_option("--out", out)->required();
  comp->callback([&] {
    auto p = io::read_posts_jsonl(posts);
    PeriodSpec periods = io::read_periods(periods_path);
    PeriodName pn = period_name == "pre" ? PeriodName::kPre : period_name == "post" ? PeriodName::kPost : PeriodName::kDuring;
    const Period* window = periods.get(pn);
    require(window != nullptr, "period " + period_name + " is not defined");
    ClusterAssignment c = io::read_clusters_csv(roster);
    std::string csv = "user_id,mean_log_followers,mean_log_statuses,reposts,missing\n";
    for (const auto& r : composition_outcomes(p, c.nodes.ids(), *window))
      csv += r.user_id + "," + io::fmt_double(r.mean_log_followers) + "," + io::fmt_double(r.mean_log_statuses) + "," +
             std::to_string(r.reposts) + "," + std::to_string(r.missing) + "\n";
    io::write_text(out, csv);
  });

  auto* pl = an->add_subcommand("placebo", "direct estimator on pre-treatment placebo periods");
  std::string placebo_path;
  pl->add_option("--posts", posts)->required();
  pl->add_option("--assignment", assignment_path)->required();
  pl->add_option("--periods", periods_path)->required();
  pl->add_option("--placebo-periods", placebo_path)->required();
  pl->add_option("--hate-mode", hate_mode);
  pl->add_option("--keywords", keywords);
  pl->add_option("--pt", design.p_t);
  pl->add_option("--php", design.p_hp);
  pl->add_option("--out", out);
  pl->callback([&] {
    design.validate();
    auto p = io::read_posts_jsonl(posts);
    io::AssignmentFile af = io::read_assignment_csv(assignment_path);
    EstimateReport r = direct_placebo(p, af.clusters.nodes.ids(), io::read_periods(periods_path),
                                      io::read_periods(placebo_path), measure_from(hate_mode, keywords),
                                      af.assignment.z, af.clusters.cluster_of, propensities(design));
    emit(Json{{"command", "analytics placebo"}, {"estimates", Json::array({to_json(r)})}}, out);
  });

  // simulate
  auto* si = app.add_subcommand("simulate", "synthetic experiment with planted effects");
  std::string scenario, out_dir;
  si->add_option("--scenario", scenario, "scenario TOML (defaults when omitted)");
  si->add_option("--seed", seed);
  si->add_option("--out-dir", out_dir)->required();
  si->callback([&] {
    sim::ScenarioSpec spec = scenario.empty() ? sim::ScenarioSpec{} : load_scenario(scenario);
    simulate_dataset(spec, seed, out_dir);
  });

  // run
  auto* ru = app.add_subcommand("run", "full pipeline from a config file");
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  ru->add_option("--config", config_path)->required();
  ru->add_option("--seed", seed_override);
  ru->add_option("--out-dir", out_dir);
  ru->callback([&] {
    RunConfig c = load_config(config_path);
    if (seed_override) c.seed = *seed_override;
    if (!out_dir.empty()) c.out_dir = out_dir;
    c.workers = workers;
    Json m = run_pipeline(c);
    std::fprintf(stderr, "wrote %s (%zu files)\n", c.out_dir.string().c_str(), m["outputs"].size());
  });

  // validate
  auto* va = app.add_subcommand("validate", "run the acceptance battery");
  acceptance::BatteryOptions bo;
  bool no_determinism = false;
  std::string report_path;
  va->add_option("--seed", bo.seed);
  va->add_option("--ri-seeds", bo.ri_seeds);
  va->add_option("--coverage-sims", bo.coverage_sims);
  va->add_flag("--no-determinism", no_determinism, "skip the second run with another worker count");
  va->add_option("--report", report_path, "write the battery result as JSON");
  int status = 0;
  va->callback([&] {
    bo.workers = workers;
    bo.determinism = !no_determinism;
    auto res = acceptance::run_battery(bo, [](const acceptance::CriterionResult& r) {
      std::printf("%s\n", acceptance::format_line(r).c_str());
      std::fflush(stdout);
    });
    std::printf("digest %s, %.1fs, %s\n", res.digest.c_str(), res.seconds, res.passed() ? "all passed" : "FAILURES");
    if (!report_path.empty()) {
      Json j;
      j["seed"] = bo.seed;
      j["digest"] = res.digest;
      Json cs = Json::array();
      for (const auto& r : res.criteria)
        cs.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"summary", r.summary}, {"detail", r.detail}});
      j["criteria"] = cs;
      io::write_json(report_path, j);
    }
    if (!res.passed()) status = 1;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "netx: error: %s\n", e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "netx: error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "netx: numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "netx: numerical error: %s\n", e.what());
    return 3;
  }
}
