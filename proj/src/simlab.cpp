#include "netx/simlab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "netx/error.hpp"
#include "netx/rng.hpp"

namespace netx::sim {

namespace {

Timestamp month_start(std::chrono::year_month ym) {
  using namespace std::chrono;
  return sys_seconds{sys_days{ym / 1}}.time_since_epoch().count();
}

std::chrono::year_month parse_month(const std::string& s) {
  int y = 0;
  unsigned m = 0;
  require(std::sscanf(s.c_str(), "%d-%u", &y, &m) == 2 && m >= 1 && m <= 12, "start month must look like YYYY-MM");
  return std::chrono::year{y} / std::chrono::month{m};
}

std::int64_t pareto_weight(rng::Stream& r, double tail) {
  double u = 1.0 - r.uniform();  // (0, 1]
  double w = std::floor(std::pow(u, -1.0 / tail));
  return static_cast<std::int64_t>(std::min(w, 1e9));
}

// Geometric on {0, 1, ...} with the given mean.
std::int64_t geometric(rng::Stream& r, double mean) {
  if (mean <= 0.0) return 0;
  std::geometric_distribution<std::int64_t> g(1.0 / (1.0 + mean));
  return g(r);
}

std::int64_t poisson(rng::Stream& r, double mean) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::int64_t> p(mean);
  return p(r);
}

std::string fmt(const char* pattern, int a, int b = 0) {
  char buf[48];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

}  // namespace

void ScenarioSpec::validate() const {
  require(network.n >= 2, "simulated network needs n >= 2");
  require(network.clusters >= 0 && network.clusters <= network.n, "cluster count must lie in [0, n]");
  require(network.p_in >= 0.0 && network.p_in <= 1.0 && network.p_out >= 0.0 && network.p_out <= 1.0,
          "edge probabilities must lie in [0, 1]");
  require(network.weight_tail > 0.0, "weight tail index must be positive");
  require(network.size_sigma >= 0.0, "size_sigma must be non-negative");
  require(outcomes.months_pre >= 1 && outcomes.months_during >= 1 && outcomes.months_post >= 0,
          "period lengths must be positive");
  require(outcomes.noise >= 0.0, "noise must be non-negative");
  validate_q(outcomes.q);
  require(upstream.users >= 0 && upstream.roster_mean >= 1.0, "upstream roster mean must be >= 1");
  require(upstream.home_share >= 0.0 && upstream.home_share <= 1.0, "home_share must lie in [0, 1]");
  require(upstream.home_clusters >= 1, "home_clusters must be >= 1");
  require(upstream.churn >= 0.0 && upstream.churn <= 1.0, "churn must lie in [0, 1]");
  design.validate();
  parse_month(start_month);
}

Json to_json(const ScenarioSpec& s) {
  Json j;
  j["network"] = {{"n", s.network.n},
                  {"clusters", s.network.clusters},
                  {"size_sigma", s.network.size_sigma},
                  {"p_in", s.network.p_in},
                  {"p_out", s.network.p_out},
                  {"weight_tail", s.network.weight_tail},
                  {"recluster", s.network.recluster}};
  const auto& o = s.outcomes;
  j["outcomes"] = {{"level_mu", o.level_mu},
                   {"level_sigma", o.level_sigma},
                   {"tau_direct", o.tau_direct},
                   {"exposure_effect", {{"CL", o.exposure_effect[0]}, {"CH", o.exposure_effect[1]},
                                        {"TL", o.exposure_effect[2]}, {"TH", o.exposure_effect[3]}}},
                   {"q", o.q},
                   {"beta", o.beta},
                   {"trend_during", o.trend_during},
                   {"trend_post", o.trend_post},
                   {"noise", o.noise},
                   {"months_pre", o.months_pre},
                   {"months_during", o.months_during},
                   {"months_post", o.months_post},
                   {"count_scale", o.count_scale}};
  const auto& u = s.upstream;
  j["upstream"] = {{"users", u.users},
                   {"roster_mean", u.roster_mean},
                   {"home_share", u.home_share},
                   {"home_clusters", u.home_clusters},
                   {"tau_upstream_per_pp", u.tau_upstream},
                   {"tau_upstream_per_unit", u.tau_upstream * 100.0},
                   {"beta", u.beta},
                   {"noise", u.noise},
                   {"churn", u.churn}};
  j["design"] = {{"p_t", s.design.p_t}, {"p_hp", s.design.p_hp}};
  j["start_month"] = s.start_month;
  return j;
}

std::string node_name(int i) { return fmt("u%05d", i); }

SimNetwork gen_network(const NetworkSpec& spec, std::uint64_t seed) {
  require(spec.n >= 2, "simulated network needs n >= 2");
  const int n = spec.n;
  rng::Stream r(rng::derive_seed(seed, "graph"));

  const int hidden = spec.clusters > 0 ? spec.clusters : std::max(1, n / 10);
  std::vector<double> share(static_cast<std::size_t>(hidden), 1.0);
  if (spec.size_sigma > 0.0)
    for (auto& s : share) s = std::exp(spec.size_sigma * r.normal());
  // Largest-remainder rounding with every community non-empty.
  double total = 0.0;
  for (double s : share) total += s;
  std::vector<int> size(static_cast<std::size_t>(hidden), 1);
  int left = n - hidden;
  std::vector<std::pair<double, int>> rem;
  for (int k = 0; k < hidden; ++k) {
    double exact = share[k] / total * left;
    int whole = static_cast<int>(std::floor(exact));
    size[k] += whole;
    rem.push_back({exact - whole, k});
  }
  int assigned = 0;
  for (int s : size) assigned += s;
  std::stable_sort(rem.begin(), rem.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++size[rem[k % rem.size()].second];

  std::vector<int> label(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> members(static_cast<std::size_t>(hidden));
  for (int k = 0, i = 0; k < hidden; ++k)
    for (int m = 0; m < size[k]; ++m, ++i) {
      label[i] = k;
      members[k].push_back(i);
    }

  std::vector<std::tuple<std::string, std::string, std::int64_t>> rows;
  std::vector<int> degree(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double p = label[i] == label[j] ? spec.p_in : spec.p_out;
      if (r.uniform() < p) {
        rows.emplace_back(node_name(i), node_name(j), pareto_weight(r, spec.weight_tail));
        ++degree[i];
        ++degree[j];
      }
    }
  for (int i = 0; i < n; ++i) {
    if (degree[i] > 0) continue;
    const auto& mates = members[label[i]];
    int j = mates.size() > 1 ? mates[r.below(mates.size())] : static_cast<int>(r.below(static_cast<std::uint64_t>(n)));
    while (j == i) j = static_cast<int>(r.below(static_cast<std::uint64_t>(n)));
    rows.emplace_back(node_name(i), node_name(j), pareto_weight(r, spec.weight_tail));
    ++degree[i];
    ++degree[j];
  }

  SimNetwork net;
  net.graph = InteractionGraph::from_weighted_edges(rows);
  if (spec.clusters > 0 && !spec.recluster) {
    std::vector<std::tuple<std::string, std::int64_t, bool>> cl;
    for (int i = 0; i < n; ++i) cl.emplace_back(node_name(i), label[i], members[label[i]].front() == i);
    net.clusters = make_clusters(cl);
    net.clusters.seed = seed;
    net.planted = label;
  } else {
    net.clusters = three_net_cluster(net.graph, rng::derive_seed(seed, "cluster"));
    if (spec.clusters > 0) net.planted = label;
  }
  return net;
}

SimOutcomes gen_outcomes(const SimNetwork& net, std::span<const std::uint8_t> z, const OutcomeSpec& spec,
                         const std::string& start_month, std::uint64_t seed) {
  const std::size_t n = net.clusters.num_nodes();
  require(z.size() == n, "gen_outcomes: assignment size mismatch");
  validate_q(spec.q);

  SimOutcomes out;
  auto ym = parse_month(start_month);
  using std::chrono::months;
  const int mp = spec.months_pre, md = spec.months_during, mq = spec.months_post;
  out.periods.pre = {month_start(ym), month_start(ym + months{mp})};
  out.periods.during = {out.periods.pre.end, month_start(ym + months{mp + md})};
  if (mq > 0) out.periods.post = Period{out.periods.during.end, month_start(ym + months{mp + md + mq})};
  out.periods.validate();

  UndirectedAdjacency nbrs = neighbor_weights(net.graph);
  ExposureState ex = classify_exposure(z, nbrs, spec.q);
  out.condition = ex.condition;

  OutcomePanel& panel = out.panel;
  panel.users = net.clusters.nodes;
  panel.buckets = month_buckets(out.periods);
  panel.has_post = mq > 0;
  panel.measure_label = "simulated";
  const std::size_t nb = panel.buckets.size();
  panel.raw.assign(n, std::vector<double>(nb, 0.0));
  panel.y_pre.assign(n, 0.0);
  panel.y_during.assign(n, 0.0);
  panel.y_post.assign(n, 0.0);
  panel.pre_posts.assign(n, 0.0);
  panel.pre_hate_share.assign(n, 0.0);
  out.y_during0.assign(n, 0.0);
  out.y_during1.assign(n, 0.0);
  out.y_post0.assign(n, 0.0);
  out.y_post1.assign(n, 0.0);

  const std::uint64_t base = rng::derive_seed(seed, "outcomes");
  for (std::size_t i = 0; i < n; ++i) {
    rng::Stream r(rng::derive_seed(base, i));
    const double level = std::log1p(std::exp(spec.level_mu + spec.level_sigma * r.normal()));
    const double hate_share = 0.1 + 0.5 * r.uniform();
    const double eta = spec.noise * r.normal();
    const double eps = spec.noise * r.normal();
    const Condition c = ex.condition[i];
    const double exposure = c == Condition::kUnclassified ? 0.0 : spec.exposure_effect[static_cast<int>(c)];

    std::vector<double> pre_v(static_cast<std::size_t>(mp));
    for (auto& v : pre_v) v = level + spec.noise * r.normal();
    double y_pre = 0.0;
    for (double v : pre_v) y_pre += v;
    y_pre /= mp;

    auto period_values = [&](int count, double mean) {
      std::vector<double> w(static_cast<std::size_t>(count));
      double wbar = 0.0;
      for (auto& x : w) {
        x = spec.noise * r.normal();
        wbar += x;
      }
      wbar /= std::max(count, 1);
      for (auto& x : w) x = mean + x - wbar;
      return w;
    };
    const double shift0 = exposure + eta;
    out.y_during0[i] = y_pre + spec.trend_during + shift0;
    out.y_during1[i] = out.y_during0[i] + spec.tau_direct;
    out.y_post0[i] = y_pre + spec.trend_post + spec.beta * shift0 + eps;
    out.y_post1[i] = out.y_post0[i] + spec.beta * spec.tau_direct;
    std::vector<double> dur_v = period_values(md, z[i] ? out.y_during1[i] : out.y_during0[i]);
    std::vector<double> post_v = period_values(mq, z[i] ? out.y_post1[i] : out.y_post0[i]);

    std::size_t kp = 0, kd = 0, kq = 0;
    double sums[3] = {0.0, 0.0, 0.0};
    for (std::size_t b = 0; b < nb; ++b) {
      double v = 0.0;
      switch (panel.buckets[b].period) {
        case PeriodName::kPre: v = pre_v[kp++]; break;
        case PeriodName::kDuring: v = dur_v[kd++]; break;
        case PeriodName::kPost: v = post_v[kq++]; break;
      }
      double raw = std::expm1(v);
      if (spec.count_scale) {
        // Multiplicative count noise: the log-linear model no longer holds exactly.
        raw = std::max(0.0, (raw + 1.0) * std::exp(spec.noise * r.normal() - 0.5 * spec.noise * spec.noise) - 1.0);
      }
      panel.raw[i][b] = raw;
      sums[static_cast<int>(panel.buckets[b].period)] += panel.monthly_log(i, b);
    }
    panel.y_pre[i] = sums[0] / mp;
    panel.y_during[i] = sums[1] / md;
    panel.y_post[i] = mq > 0 ? sums[2] / mq : 0.0;
    double pre_raw = 0.0;
    for (std::size_t b = 0; b < nb; ++b)
      if (panel.buckets[b].period == PeriodName::kPre) pre_raw += std::max(0.0, panel.raw[i][b]);
    panel.pre_hate_share[i] = hate_share;
    panel.pre_posts[i] = pre_raw / hate_share;
  }
  difference_adjust(panel);

  std::size_t counts[5] = {0, 0, 0, 0, 0};
  for (auto c : out.condition) ++counts[static_cast<int>(c)];
  Json& t = out.truth;
  t["tau_direct"] = spec.tau_direct;
  t["beta"] = spec.beta;
  t["exposure_effect"] = {{"CL", spec.exposure_effect[0]}, {"CH", spec.exposure_effect[1]},
                          {"TL", spec.exposure_effect[2]}, {"TH", spec.exposure_effect[3]}};
  t["q"] = spec.q;
  t["trend_during"] = spec.trend_during;
  t["trend_post"] = spec.trend_post;
  t["noise"] = spec.noise;
  t["count_scale"] = spec.count_scale;
  double ate = 0.0;
  for (std::size_t i = 0; i < n; ++i) ate += out.y_during1[i] - out.y_during0[i];
  t["ate_during"] = n ? ate / static_cast<double>(n) : 0.0;
  t["condition_counts"] = {{"CL", counts[0]}, {"CH", counts[1]}, {"TL", counts[2]}, {"TH", counts[3]},
                           {"unclassified", counts[4]}};
  t["alpha_during"] = panel.alpha_during;
  t["alpha_post"] = panel.alpha_post;
  return out;
}

SimUpstream gen_upstream_scenario(const SimNetwork& net, std::span<const std::uint8_t> z, const UpstreamSpec& spec,
                                  std::uint64_t seed) {
  const std::size_t n = net.clusters.num_nodes();
  require(z.size() == n, "gen_upstream_scenario: assignment size mismatch");
  require(spec.roster_mean >= 1.0, "upstream roster mean must be >= 1");
  const auto members = net.clusters.members();
  const int k_clusters = net.clusters.num_clusters();

  SimUpstream out;
  out.tau_unit = spec.tau_upstream * 100.0;
  out.churn = spec.churn;
  const std::uint64_t base = rng::derive_seed(seed, "upstream");
  const std::size_t m = static_cast<std::size_t>(spec.users);
  out.user_ids.resize(m);
  out.rosters.resize(m);
  out.pre_volume.resize(m);
  out.t.resize(m);
  out.y.resize(m);
  out.d_during.resize(m);
  out.d_post.resize(m);
  std::size_t all_treated = 0, all_control = 0;
  for (std::size_t k = 0; k < m; ++k) {
    rng::Stream r(rng::derive_seed(base, k));
    out.user_ids[k] = fmt("s%05d", static_cast<int>(k));
    std::vector<int> home(static_cast<std::size_t>(spec.home_clusters));
    for (auto& h : home) h = static_cast<int>(r.below(static_cast<std::uint64_t>(k_clusters)));
    const std::size_t size =
        std::min<std::size_t>(n, 1 + static_cast<std::size_t>(geometric(r, spec.roster_mean - 1.0)));
    std::map<int, double> weight;
    while (weight.size() < size) {
      int j;
      if (r.uniform() < spec.home_share) {
        const auto& pool = members[home[r.below(home.size())]];
        j = pool[r.below(pool.size())];
      } else {
        j = static_cast<int>(r.below(n));
      }
      weight[j] += 1.0 + static_cast<double>(geometric(r, 1.0));
    }
    for (const auto& [j, w] : weight) out.rosters[k].push_back({j, w});
    out.pre_volume[k] = std::max(1.0, std::round(std::exp(4.0 + r.normal())));
    const double t = realized_exposure(out.rosters[k], z);
    out.t[k] = t;
    if (t == 1.0) ++all_treated;
    if (t == 0.0) ++all_control;
    const double y0 = 0.3 * std::log(out.pre_volume[k]) + spec.noise * r.normal();
    out.y[k] = y0 + out.tau_unit * t;
    const double shock = spec.noise * r.normal();
    const double d_during0 = 0.05 + shock;
    const double d_post0 = 0.02 + spec.beta * shock + 0.5 * spec.noise * r.normal();
    out.d_during[k] = d_during0 + out.tau_unit * t;
    out.d_post[k] = d_post0 + spec.beta * out.tau_unit * t;
  }
  Json& tr = out.truth;
  tr["tau_upstream_per_pp"] = spec.tau_upstream;
  tr["tau_upstream_per_unit"] = out.tau_unit;
  tr["beta"] = spec.beta;
  tr["users"] = m;
  tr["all_treated_rosters"] = all_treated;
  tr["all_control_rosters"] = all_control;
  tr["churn"] = spec.churn;
  return out;
}

std::vector<PostEvent> gen_posts(const SimNetwork& net, const SimOutcomes& outcomes, const SimUpstream& upstream,
                                 std::uint64_t seed) {
  const OutcomePanel& panel = outcomes.panel;
  const std::size_t n = panel.num_users();
  std::vector<PostEvent> posts;
  const std::uint64_t base = rng::derive_seed(seed, "posts");

  auto when = [](rng::Stream& r, const Period& p) {
    return p.start + static_cast<Timestamp>(r.below(static_cast<std::uint64_t>(p.end - p.start)));
  };

  for (std::size_t i = 0; i < n; ++i) {
    rng::Stream r(rng::derive_seed(base, i));
    int counter = 0;
    const std::string& uid = panel.users.id(static_cast<int>(i));
    for (std::size_t b = 0; b < panel.buckets.size(); ++b) {
      const auto& bucket = panel.buckets[b];
      const double rate = std::max(0.0, panel.raw[i][b]);
      const std::int64_t hate = poisson(r, rate);
      const double share = panel.pre_hate_share[i] > 0.0 ? panel.pre_hate_share[i] : 0.3;
      const std::int64_t other = poisson(r, rate * (1.0 / share - 1.0));
      for (std::int64_t h = 0; h < hate + other; ++h) {
        PostEvent p;
        p.user_id = uid;
        p.post_id = uid + "-" + fmt("%06d", ++counter);
        p.ts = when(r, bucket.span);
        p.hate_score = h < hate ? 0.51 + 0.49 * r.uniform() : 0.49 * r.uniform();
        posts.push_back(std::move(p));
      }
    }
  }

  // Upstream originals and their reposts.
  const Period pre = outcomes.periods.pre;
  for (std::size_t k = 0; k < upstream.user_ids.size(); ++k) {
    rng::Stream r(rng::derive_seed(rng::derive_seed(base, "upstream"), k));
    const std::string& sid = upstream.user_ids[k];
    int counter = 0;
    auto original = [&](const Period& p) {
      PostEvent o;
      o.user_id = sid;
      o.post_id = sid + "-" + fmt("%06d", ++counter);
      o.ts = when(r, {p.start, p.end - 86400});
      o.hate_score = 0.6 + 0.4 * r.uniform();
      posts.push_back(o);
      return posts.size() - 1;
    };
    auto repost = [&](std::size_t orig, const std::string& who, const Period& p) {
      PostEvent rp;
      rp.user_id = who;
      rp.kind = PostKind::kRepost;
      rp.source_user_id = sid;
      rp.source_post_id = posts[orig].post_id;
      rp.hate_score = posts[orig].hate_score;
      rp.ts = std::min<Timestamp>(p.end - 1, posts[orig].ts + 1 + static_cast<Timestamp>(r.below(86400)));
      rp.post_id = who + "-r" + sid + "-" + fmt("%06d", ++counter);
      rp.source_followers = std::round(std::exp(6.0 + 1.5 * r.normal()));
      rp.source_statuses = std::round(std::exp(7.0 + r.normal()));
      posts.push_back(std::move(rp));
    };
    const std::size_t originals = std::max<std::size_t>(3, upstream.rosters[k].size());
    std::vector<std::size_t> pre_orig;
    for (std::size_t o = 0; o < originals; ++o) pre_orig.push_back(original(pre));
    const int outsiders = 1 + static_cast<int>(upstream.rosters[k].size());
    for (const auto& e : upstream.rosters[k]) {
      const std::string& who = net.clusters.nodes.id(e.participant);
      for (int w = 0; w < static_cast<int>(e.weight); ++w) repost(pre_orig[r.below(pre_orig.size())], who, pre);
    }
    for (int o = 0; o < outsiders; ++o) repost(pre_orig[r.below(pre_orig.size())], fmt("x%05d-%03d", static_cast<int>(k), o), pre);
    // Later months: churned audiences, outsiders thinned by exposure.
    const double keep = std::exp(upstream.tau_unit * upstream.t[k]);
    for (const auto& bucket : panel.buckets) {
      if (bucket.period == PeriodName::kPre) continue;
      std::size_t orig = original(bucket.span);
      for (const auto& e : upstream.rosters[k])
        if (r.uniform() >= upstream.churn) repost(orig, net.clusters.nodes.id(e.participant), bucket.span);
      for (int o = 0; o < outsiders; ++o)
        if (r.uniform() < keep * 0.7) repost(orig, fmt("x%05d-%03d", static_cast<int>(k), o), bucket.span);
    }
  }
  std::sort(posts.begin(), posts.end(), [](const PostEvent& a, const PostEvent& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    return a.post_id < b.post_id;
  });
  return posts;
}

double hill_tail_index(std::vector<double> values, std::size_t k) {
  require(k >= 1 && k < values.size(), "hill estimator needs 1 <= k < n");
  std::sort(values.begin(), values.end(), std::greater<>());
  const double xk = values[k];
  require(xk > 0.0, "hill estimator needs positive values");
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += std::log(values[i] / xk);
  return static_cast<double>(k) / s;
}

}  // namespace netx::sim
