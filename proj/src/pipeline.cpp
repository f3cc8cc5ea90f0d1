#include "netx/pipeline.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "netx/analytics.hpp"
#include "netx/direct.hpp"
#include "netx/error.hpp"
#include "netx/exposure.hpp"
#include "netx/persistence.hpp"
#include "netx/rng.hpp"
#include "netx/upstream.hpp"

namespace netx {

namespace fs = std::filesystem;

void RunConfig::validate() const {
  design.validate();
  validate_q(q);
  require(k_out >= 1 && k_in >= 1, "k_out and k_in must be >= 1");
  require(monthly_ri_reps == 0 || monthly_ri_reps >= 100, "monthly_ri_reps must be 0 or >= 100");
  require(exposure_reps >= 1000, "exposure reps must be >= 1000");
  require(upstream_reps >= 100, "upstream reps must be >= 100");
  require(persistence_bins >= 1 && exposure_bins >= 0 && upstream_bins >= 1, "bin counts must be positive");
  require(!takeup || (*takeup > 0.0 && *takeup <= 1.0), "takeup must lie in (0, 1]");
  parse_hate_measure(measure);
}

namespace {
Json grid_json(const Grid& g) { return {{"start", g.start}, {"step", g.step}, {"stop", g.at(g.count - 1)}}; }
}  // namespace

Json RunConfig::to_json() const {
  Json j;
  auto name = [](const fs::path& p) { return p.filename().string(); };
  j["inputs"] = {{"edges", name(edges)}, {"posts", name(posts)}, {"periods", name(periods)}};
  if (clusters) j["inputs"]["clusters"] = name(*clusters);
  if (assignment) j["inputs"]["assignment"] = name(*assignment);
  if (keywords) j["inputs"]["keywords"] = name(*keywords);
  j["design"] = {{"p_t", design.p_t}, {"p_hp", design.p_hp}};
  j["graph"] = {{"k_out", k_out}, {"k_in", k_in}};
  j["outcome"] = {{"measure", measure}, {"alpha", alpha_control_only ? "control" : "pooled"}};
  j["direct"] = {{"monthly_ri_reps", monthly_ri_reps}, {"takeup", takeup ? Json(*takeup) : Json(nullptr)}};
  j["exposure"] = {{"q", q}, {"reps", exposure_reps}, {"bins", exposure_bins}};
  j["upstream"] = {{"limit", upstream_limit},     {"max_posts", max_posts},           {"reps", upstream_reps},
                   {"grid", grid_json(upstream_grid)}, {"bins", upstream_bins},     {"tau_grid", grid_json(tau_grid)},
                   {"beta_grid", grid_json(beta_grid)}};
  j["persistence"] = {{"bins", persistence_bins}};
  j["run"] = {{"seed", seed}};
  return j;
}

RunConfig load_config(const fs::path& path) {
  io::TomlTable t = io::read_toml(path);
  RunConfig c;
  const fs::path base = path.parent_path();
  auto file = [&](const char* key) -> std::optional<fs::path> {
    auto s = io::toml_string(t, "inputs", key);
    if (!s) return std::nullopt;
    fs::path p(*s);
    return p.is_absolute() ? p : base / p;
  };
  auto need = [&](const char* key) {
    auto p = file(key);
    require(p.has_value(), path.string() + ": [inputs] " + key + " is required");
    return *p;
  };
  c.edges = need("edges");
  c.posts = need("posts");
  c.periods = need("periods");
  c.clusters = file("clusters");
  c.assignment = file("assignment");
  c.keywords = file("keywords");
  auto num = [&](const char* sec, const char* key, auto& dst) {
    if (auto v = io::toml_number(t, sec, key)) dst = static_cast<std::remove_reference_t<decltype(dst)>>(*v);
  };
  auto grid = [&](const char* sec, const char* key, Grid& dst) {
    if (auto v = io::toml_string(t, sec, key)) dst = Grid::parse(*v);
  };
  num("design", "p_t", c.design.p_t);
  num("design", "p_hp", c.design.p_hp);
  num("graph", "k_out", c.k_out);
  num("graph", "k_in", c.k_in);
  if (auto m = io::toml_string(t, "outcome", "measure")) c.measure = *m;
  if (auto a = io::toml_string(t, "outcome", "alpha")) {
    require(*a == "pooled" || *a == "control", "[outcome] alpha must be pooled or control");
    c.alpha_control_only = *a == "control";
  }
  num("direct", "monthly_ri_reps", c.monthly_ri_reps);
  if (auto v = io::toml_number(t, "direct", "takeup")) c.takeup = *v;
  num("exposure", "q", c.q);
  num("exposure", "reps", c.exposure_reps);
  num("exposure", "bins", c.exposure_bins);
  num("upstream", "limit", c.upstream_limit);
  num("upstream", "max_posts", c.max_posts);
  num("upstream", "reps", c.upstream_reps);
  grid("upstream", "grid", c.upstream_grid);
  num("upstream", "bins", c.upstream_bins);
  grid("upstream", "tau_grid", c.tau_grid);
  grid("upstream", "beta_grid", c.beta_grid);
  num("persistence", "bins", c.persistence_bins);
  num("run", "seed", c.seed);
  num("run", "workers", c.workers);
  if (auto o = io::toml_string(t, "run", "out_dir")) c.out_dir = fs::path(*o).is_absolute() ? fs::path(*o) : base / *o;
  return c;
}

namespace {

std::vector<std::string> read_keywords(const fs::path& path) {
  std::istringstream in(io::read_text(path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto toks = tokenize(line);
    out.insert(out.end(), toks.begin(), toks.end());
  }
  require(!out.empty(), path.string() + ": no keywords");
  return out;
}

HateMeasure make_measure(const RunConfig& c) {
  HateMeasure m = parse_hate_measure(c.measure);
  if (m.mode == HateMode::kKeyword) {
    require(c.keywords.has_value(), "keyword measure needs [inputs] keywords");
    for (auto& k : read_keywords(*c.keywords)) m.keywords.insert(k);
  }
  m.validate();
  return m;
}

Json direct_reports(const OutcomePanel& panel, const ClusterAssignment& clusters, const Assignment& a,
                    const RunConfig& c) {
  const PropensityTable table = propensities(c.design);
  Json out = Json::array();
  auto push = [&](EstimateReport r) { out.push_back(to_json(r)); };
  EstimateReport during = ate_difference(panel.delta_during, a.z, clusters.cluster_of, table, "during");
  during.metadata["alpha"] = panel.alpha_during;
  push(during);
  if (c.takeup) push(tot_wald(during, *c.takeup));
  if (panel.has_post) {
    EstimateReport post = ate_difference(panel.delta_post, a.z, clusters.cluster_of, table, "post");
    post.metadata["alpha"] = panel.alpha_post;
    push(post);
  }
  for (Subgroup side : {Subgroup::kLow, Subgroup::kHigh}) {
    const char* name = side == Subgroup::kLow ? "during_activity_low" : "during_activity_high";
    try {
      push(subgroup_ate(panel.delta_during, a.z, clusters.cluster_of, table, panel.pre_posts, side, name));
    } catch (const std::exception& e) {
      EstimateReport r;
      r.estimand = name;
      r.method = "difference_ht";
      r.point = r.std_error = r.ci_low = r.ci_high = r.pct_change = r.p_value = std::nan("");
      r.warnings.push_back(e.what());
      push(r);
    }
  }
  return out;
}

Json monthly_reports(const OutcomePanel& panel, const ClusterAssignment& clusters, const Assignment& a,
                     const RunConfig& c) {
  Json out = Json::array();
  if (c.monthly_ri_reps == 0) return out;
  stats::Binning bins = stats::make_bins(panel.y_pre, 40);
  stats::BinDemeaner dm(bins.bin_of);
  for (std::size_t b = 0; b < panel.buckets.size(); ++b) {
    if (panel.buckets[b].period == PeriodName::kPre) continue;
    MonthlyRiOptions o;
    o.reps = c.monthly_ri_reps;
    o.seed = rng::derive_seed(rng::derive_seed(c.seed, "ri"), "monthly:" + panel.buckets[b].label());
    o.workers = c.workers;
    RiResult r = monthly_ri_ci(panel.month_column(b), a.z, clusters, c.design, dm, o);
    r.outcome = std::string(period_label(panel.buckets[b].period)) + ":" + panel.buckets[b].label();
    if (r.clipped_low || r.clipped_high) r.metadata["warning"] = "interval reaches the grid edge";
    out.push_back(to_json(r));
  }
  return out;
}

Json exposure_report(const OutcomePanel& panel, const InteractionGraph& g, const ClusterAssignment& clusters,
                     const Assignment& a, const RunConfig& c) {
  UndirectedAdjacency nbrs = neighbor_weights(g);
  require(nbrs.num_nodes() == clusters.num_nodes(), "graph and cluster table cover different users");
  ExposurePropensities pi =
      mc_exposure_propensities(clusters, nbrs, c.design, c.q, c.exposure_reps, rng::derive_seed(c.seed, "mc"), c.workers);
  ExposureTable table = build_exposure_table(a.z, nbrs, c.q, std::move(pi));
  Json j;
  j["q"] = c.q;
  j["reps"] = c.exposure_reps;
  j["unclassified"] = table.unclassified;
  j["trimmed"] = table.trimmed;
  j["floor"] = table.floor;
  std::vector<int> bin_of;
  if (c.exposure_bins > 1) bin_of = stats::make_bins(panel.y_pre, c.exposure_bins).bin_of;
  Json outcomes = Json::array();
  auto run = [&](const char* name, const std::vector<double>& y) {
    Json o;
    o["outcome"] = name;
    try {
      HajekFit fit = hajek_estimate(y, table, bin_of, clusters.cluster_of, &nbrs);
      ContrastReport cr = exposure_contrasts(fit.mu, fit.vcov);
      cr.kernel = kernel_name(fit.kernel);
      o["fit"] = to_json(cr);
      o["n"] = fit.n;
      o["bins"] = fit.bins;
      o["cell_count"] = {{"CL", fit.cell_count[0]}, {"CH", fit.cell_count[1]}, {"TL", fit.cell_count[2]},
                         {"TH", fit.cell_count[3]}};
    } catch (const ValidationError& e) {
      o["error"] = e.what();
    }
    outcomes.push_back(o);
  };
  run("during", panel.delta_during);
  if (panel.has_post) run("post", panel.delta_post);
  j["outcomes"] = outcomes;
  return j;
}

Json upstream_report(std::span<const PostEvent> posts, const PeriodSpec& periods, const HateMeasure& measure,
                     const ClusterAssignment& clusters, const Assignment& a, const RunConfig& c) {
  Json j;
  UpstreamData data = build_upstream(posts, clusters.nodes, periods.pre);
  Selection sel = select_upstream(data, c.upstream_limit, c.max_posts);
  j["candidates"] = data.users.size();
  j["selected"] = sel.users.size();
  j["over_cap"] = sel.over_cap;
  j["unresolved_reposts"] = data.unresolved_reposts;
  j["warnings"] = sel.warnings;
  j["results"] = Json::array();
  if (sel.users.size() < 3) {
    j["warnings"].push_back("too few upstream users for inference");
    return j;
  }
  UpstreamOutcomes uo = upstream_outcomes(posts, data, sel.users, periods, measure);
  const std::size_t m = sel.users.size();
  std::vector<double> t(m), pre(m);
  for (std::size_t k = 0; k < m; ++k) {
    const UpstreamUser& u = data.users[sel.users[k]];
    t[k] = realized_exposure(u.roster, a.z);
    pre[k] = u.pre_posts;
  }
  const std::uint64_t ri_seed = rng::derive_seed(rng::derive_seed(c.seed, "ri"), "upstream");

  auto subset_run = [&](const std::string& name, const std::vector<double>& y) {
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < m; ++k)
      if (std::isfinite(y[k]) && std::isfinite(t[k])) keep.push_back(k);
    Json o;
    o["outcome"] = name;
    o["dropped"] = m - keep.size();
    if (keep.size() < 3) {
      o["error"] = "fewer than three usable upstream users";
      j["results"].push_back(o);
      return;
    }
    std::vector<const std::vector<RosterEntry>*> rosters;
    std::vector<double> ys, ts, pv;
    for (std::size_t k : keep) {
      rosters.push_back(&data.users[sel.users[k]].roster);
      ys.push_back(y[k]);
      ts.push_back(t[k]);
      pv.push_back(pre[k]);
    }
    stats::Binning bins = upstream_bins(pv, c.upstream_bins);
    stats::BinDemeaner dm(bins.bin_of);
    ExposureDraws draws(rosters, clusters, c.design, c.upstream_reps, ri_seed, c.workers);
    try {
      UpstreamRiOptions opt;
      opt.grid = c.upstream_grid;
      RiResult r = ri_confidence_interval(ys, ts, draws, dm, opt);
      r.outcome = name;
      o["ri"] = to_json(r);
    } catch (const NumericalError& e) {
      o["error"] = e.what();
    }
    j["results"].push_back(o);
  };
  subset_run("hate_reposts_participants_during", uo.hate_part_during);
  subset_run("hate_reposts_nonparticipants_during", uo.hate_non_during);
  subset_run("lost_reposters_participants_during", uo.lost_part_during);
  subset_run("lost_reposters_nonparticipants_during", uo.lost_non_during);
  if (uo.has_post) {
    subset_run("hate_reposts_nonparticipants_post", uo.hate_non_post);
    std::vector<double> dd(m), dp(m);
    for (std::size_t k = 0; k < m; ++k) {
      dd[k] = uo.hate_non_during[k] - uo.hate_non_pre[k];
      dp[k] = uo.hate_non_post[k] - uo.hate_non_pre[k];
    }
    std::vector<const std::vector<RosterEntry>*> rosters;
    for (std::size_t k = 0; k < m; ++k) rosters.push_back(&data.users[sel.users[k]].roster);
    stats::BinDemeaner dm(upstream_bins(pre, c.upstream_bins).bin_of);
    ExposureDraws draws(rosters, clusters, c.design, c.upstream_reps, ri_seed, c.workers);
    PersistenceRiOptions opt;
    opt.tau_grid = c.tau_grid;
    opt.beta_grid = c.beta_grid;
    Json p;
    p["outcome"] = "hate_reposts_nonparticipants";
    try {
      Json rows = Json::array();
      for (const auto& row : persistence_ri(dd, dp, t, draws, dm, opt)) rows.push_back(to_json(row));
      p["rows"] = rows;
      p["tail"] = tail_name(opt.tail);
    } catch (const NumericalError& e) {
      p["error"] = e.what();
    }
    j["persistence"] = p;
  }
  return j;
}

Json analytics_report(std::span<const PostEvent> posts, const PeriodSpec& periods, const ClusterAssignment& clusters,
                      const Assignment& a, const RunConfig& c) {
  Json j;
  const auto& ids = clusters.nodes.ids();
  for (std::optional<double> cap : {std::optional<double>{}, std::optional<double>{0.8}}) {
    RenewalSeries s = renewal_rate(posts, cap, ids);
    Json months = Json::array();
    for (const auto& m : s.months)
      months.push_back({{"month", m.month}, {"users", m.users}, {"mean", number_or_null(m.mean)},
                        {"ci_low", number_or_null(m.ci_low)}, {"ci_high", number_or_null(m.ci_high)}});
    j[cap ? "renewal_top80" : "renewal"] = {{"overall_mean", number_or_null(s.overall_mean)}, {"months", months}};
  }

  // Ordering over the selected upstream users' originals during treatment.
  UpstreamData data = build_upstream(posts, clusters.nodes, periods.pre);
  Selection sel = select_upstream(data, c.upstream_limit, c.max_posts);
  std::vector<std::string> upstream;
  for (std::size_t k : sel.users) upstream.push_back(data.users[k].user_id);
  double r_sum = 0.0;
  std::size_t defined = 0, pairs = 0;
  for (const auto& s : ordering_from_posts(posts, upstream, clusters.nodes, periods.during)) {
    if (!s.defined()) continue;
    r_sum += s.value();
    pairs += s.denominator;
    ++defined;
  }
  j["ordering"] = {{"users", upstream.size()}, {"defined", defined}, {"pairs", pairs},
                   {"mean_r", defined ? Json(r_sum / static_cast<double>(defined)) : Json(nullptr)}};

  // Reposted-account composition by arm during treatment.
  Json comp = Json::object();
  auto rows = composition_outcomes(posts, ids, periods.during);
  for (const char* field : {"followers", "statuses"}) {
    double sum[2] = {0.0, 0.0};
    std::size_t n[2] = {0, 0};
    std::size_t missing = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      missing += rows[i].missing;
      double v = field[0] == 'f' ? rows[i].mean_log_followers : rows[i].mean_log_statuses;
      if (std::isnan(v)) continue;
      sum[a.z[i]] += v;
      ++n[a.z[i]];
    }
    double m1 = n[1] ? sum[1] / static_cast<double>(n[1]) : std::nan("");
    double m0 = n[0] ? sum[0] / static_cast<double>(n[0]) : std::nan("");
    comp[std::string("mean_log_") + field] = {{"treated", number_or_null(m1)}, {"control", number_or_null(m0)},
                                              {"difference", number_or_null(m1 - m0)},
                                              {"users_treated", n[1]}, {"users_control", n[0]},
                                              {"missing_reposts", missing}};
  }
  j["composition"] = comp;
  return j;
}

void write_report(const fs::path& dir, const std::string& name, Json body, const RunConfig& c) {
  Json j;
  j["report"] = name;
  j["config"] = c.to_json();
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
  io::write_json(dir / "reports" / (name + ".json"), j);
}

}  // namespace

Json run_pipeline(const RunConfig& c) {
  c.validate();
  for (const fs::path& p : {c.edges, c.posts, c.periods})
    if (!fs::exists(p)) throw ValidationError("input file not found: " + p.string());

  fs::path final_dir = c.out_dir;
  fs::path tmp = final_dir;
  tmp += ".partial";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  try {
    InteractionGraph g = prune_graph(io::read_graph(c.edges), c.k_out, c.k_in);
    PeriodSpec periods = io::read_periods(c.periods);
    std::vector<PostEvent> posts = io::read_posts_jsonl(c.posts);
    HateMeasure measure = make_measure(c);

    ClusterAssignment clusters;
    Assignment a;
    if (c.assignment) {
      io::AssignmentFile af = io::read_assignment_csv(*c.assignment);
      clusters = std::move(af.clusters);
      a = std::move(af.assignment);
    } else {
      clusters = c.clusters ? io::read_clusters_csv(*c.clusters) : three_net_cluster(g, rng::derive_seed(c.seed, "cluster"));
      a = assign(clusters, c.design, rng::derive_seed(c.seed, "assign"));
    }
    require(clusters.nodes.ids() == g.nodes().ids(), "cluster table and graph cover different users");
    io::write_clusters_csv(tmp / "clusters.csv", clusters);
    io::write_assignment_csv(tmp / "assignment.csv", clusters, a);

    OutcomePanel panel = build_panel(posts, clusters.nodes.ids(), periods, measure);
    difference_adjust(panel, c.alpha_control_only ? AlphaSample::kControlOnly : AlphaSample::kPooled, a.z);
    io::write_panel(tmp / "panel.csv", panel, periods);

    write_report(tmp, "direct", {{"estimates", direct_reports(panel, clusters, a, c)},
                                 {"monthly_ri", monthly_reports(panel, clusters, a, c)}}, c);
    if (panel.has_post) {
      PersistenceFit fit = estimate_persistence(panel.raw_difference(PeriodName::kDuring),
                                                panel.raw_difference(PeriodName::kPost), panel.y_pre,
                                                clusters.cluster_of, c.persistence_bins);
      fit.outcome = panel.measure_label;
      write_report(tmp, "persistence", {{"fits", Json::array({to_json(fit)})}}, c);
    }
    write_report(tmp, "exposure", exposure_report(panel, g, clusters, a, c), c);
    write_report(tmp, "upstream", upstream_report(posts, periods, measure, clusters, a, c), c);
    write_report(tmp, "analytics", analytics_report(posts, periods, clusters, a, c), c);

    Json manifest;
    manifest["config"] = c.to_json();
    Json inputs = Json::object();
    for (const fs::path& p : {c.edges, c.posts, c.periods}) inputs[p.filename().string()] = io::file_hash(p);
    for (const auto& p : {c.clusters, c.assignment, c.keywords})
      if (p) inputs[p->filename().string()] = io::file_hash(*p);
    manifest["inputs"] = inputs;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(tmp))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    Json outputs = Json::object();
    for (const auto& f : files) outputs[fs::relative(f, tmp).generic_string()] = io::file_hash(f);
    manifest["outputs"] = outputs;
    io::write_json(tmp / "manifest.json", manifest);

    fs::remove_all(final_dir);
    fs::rename(tmp, final_dir);
    return manifest;
  } catch (...) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw;
  }
}

sim::ScenarioSpec scenario_from_toml(const io::TomlTable& t) {
  sim::ScenarioSpec s;
  auto num = [&](const char* sec, const char* key, auto& dst) {
    if (auto v = io::toml_number(t, sec, key)) dst = static_cast<std::remove_reference_t<decltype(dst)>>(*v);
  };
  auto flag = [&](const char* sec, const char* key, bool& dst) {
    if (auto v = io::toml_bool(t, sec, key)) dst = *v;
  };
  num("network", "n", s.network.n);
  num("network", "clusters", s.network.clusters);
  num("network", "size_sigma", s.network.size_sigma);
  num("network", "p_in", s.network.p_in);
  num("network", "p_out", s.network.p_out);
  num("network", "weight_tail", s.network.weight_tail);
  flag("network", "recluster", s.network.recluster);
  auto& o = s.outcomes;
  num("outcomes", "level_mu", o.level_mu);
  num("outcomes", "level_sigma", o.level_sigma);
  num("outcomes", "tau_direct", o.tau_direct);
  num("outcomes", "effect_cl", o.exposure_effect[0]);
  num("outcomes", "effect_ch", o.exposure_effect[1]);
  num("outcomes", "effect_tl", o.exposure_effect[2]);
  num("outcomes", "effect_th", o.exposure_effect[3]);
  num("outcomes", "q", o.q);
  num("outcomes", "beta", o.beta);
  num("outcomes", "trend_during", o.trend_during);
  num("outcomes", "trend_post", o.trend_post);
  num("outcomes", "noise", o.noise);
  num("outcomes", "months_pre", o.months_pre);
  num("outcomes", "months_during", o.months_during);
  num("outcomes", "months_post", o.months_post);
  flag("outcomes", "count_scale", o.count_scale);
  auto& u = s.upstream;
  num("upstream", "users", u.users);
  num("upstream", "roster_mean", u.roster_mean);
  num("upstream", "home_share", u.home_share);
  num("upstream", "home_clusters", u.home_clusters);
  num("upstream", "tau_upstream", u.tau_upstream);
  num("upstream", "beta", u.beta);
  num("upstream", "noise", u.noise);
  num("upstream", "churn", u.churn);
  num("design", "p_t", s.design.p_t);
  num("design", "p_hp", s.design.p_hp);
  if (auto m = io::toml_string(t, "", "start_month")) s.start_month = *m;
  s.validate();
  return s;
}

sim::ScenarioSpec load_scenario(const fs::path& path) {
  try {
    return scenario_from_toml(io::read_toml(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Json simulate_dataset(const sim::ScenarioSpec& spec, std::uint64_t seed, const fs::path& out_dir) {
  spec.validate();
  const std::uint64_t sim_seed = rng::derive_seed(seed, "sim");
  sim::SimNetwork net = sim::gen_network(spec.network, rng::derive_seed(sim_seed, "network"));
  Assignment a = assign(net.clusters, spec.design, rng::derive_seed(seed, "assign"));
  sim::SimOutcomes out = sim::gen_outcomes(net, a.z, spec.outcomes, spec.start_month, rng::derive_seed(sim_seed, "outcomes"));
  sim::SimUpstream up = sim::gen_upstream_scenario(net, a.z, spec.upstream, rng::derive_seed(sim_seed, "upstream"));
  std::vector<PostEvent> posts = sim::gen_posts(net, out, up, rng::derive_seed(sim_seed, "posts"));

  fs::create_directories(out_dir);
  io::write_edges_csv(out_dir / "edges.csv", net.graph);
  io::write_clusters_csv(out_dir / "clusters.csv", net.clusters);
  io::write_assignment_csv(out_dir / "assignment.csv", net.clusters, a);
  io::write_posts_jsonl(out_dir / "posts.jsonl", posts);
  io::write_text(out_dir / "periods.toml", io::periods_toml(out.periods));
  io::write_text(out_dir / "config.toml",
                 "[inputs]\nedges = \"edges.csv\"\nposts = \"posts.jsonl\"\nperiods = \"periods.toml\"\n"
                 "assignment = \"assignment.csv\"\n\n[design]\np_t = " + io::fmt_double(spec.design.p_t) +
                 "\np_hp = " + io::fmt_double(spec.design.p_hp) + "\n\n[run]\nseed = " + std::to_string(seed) +
                 "\nout_dir = \"run\"\n");

  Json truth;
  truth["seed"] = seed;
  truth["scenario"] = sim::to_json(spec);
  truth["direct"] = out.truth;
  truth["upstream"] = up.truth;
  // In posts.jsonl the effect acts on counts: each outsider repost survives
  // with probability 0.7 exp(tau_per_unit T), so log outcomes move by less.
  truth["upstream"]["posts_keep_probability"] = "0.7 * exp(tau_upstream_per_unit * T)";
  truth["network"] = {{"nodes", net.graph.num_nodes()}, {"edges", net.graph.num_edges()},
                      {"clusters", net.clusters.num_clusters()}};
  std::size_t treated = 0;
  for (auto v : a.z) treated += v;
  truth["assignment"] = {{"treated", treated}, {"users", a.z.size()}};
  io::write_json(out_dir / "truth.json", truth);
  return truth;
}

}  // namespace netx
