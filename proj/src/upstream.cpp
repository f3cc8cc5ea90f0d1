#include "netx/upstream.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "netx/error.hpp"
#include "netx/parallel.hpp"

namespace netx {

double UpstreamUser::potential_exposure(bool hate_weighted) const {
  double num = hate_weighted ? hate_participant : reposts_participant;
  double den = hate_weighted ? hate_total : reposts_total;
  return den > 0.0 ? num / den : 0.0;
}

UpstreamData build_upstream(std::span<const PostEvent> posts, const NodeIndex& participants, const Period& window) {
  UpstreamData data;
  data.participants = participants;

  // Originals posted in the window, keyed by post id.
  std::unordered_map<std::string, const PostEvent*> originals;
  std::unordered_map<std::string, double> authored;
  for (const auto& p : posts) {
    if (!window.contains(p.ts)) continue;
    authored[p.user_id] += 1.0;
    if (!p.is_repost() && !p.post_id.empty()) originals.emplace(p.post_id, &p);
  }

  struct Acc {
    double total = 0, part = 0, hate_total = 0, hate_part = 0;
    std::map<int, std::pair<double, double>> roster;
    bool reached = false;
  };
  std::map<std::string, Acc> acc;
  for (const auto& p : posts) {
    if (!p.is_repost() || !window.contains(p.ts)) continue;
    std::string author = p.source_user_id;
    double h = p.hate_score;
    if (!p.source_post_id.empty()) {
      auto it = originals.find(p.source_post_id);
      if (it == originals.end()) continue;  // original predates the window
      author = it->second->user_id;
      h = it->second->hate_score;
    } else {
      ++data.unresolved_reposts;
    }
    if (participants.find(author)) continue;
    Acc& a = acc[author];
    a.total += 1.0;
    a.hate_total += h;
    if (auto idx = participants.find(p.user_id)) {
      a.part += 1.0;
      a.hate_part += h;
      auto& r = a.roster[*idx];
      r.first += 1.0;
      r.second += h;
      a.reached = true;
    }
  }
  std::vector<std::string> ids;
  for (const auto& [id, a] : acc)
    if (a.reached) ids.push_back(id);
  std::sort(ids.begin(), ids.end(), [](const std::string& x, const std::string& y) { return id_less(x, y); });
  for (const auto& id : ids) {
    const Acc& a = acc.at(id);
    UpstreamUser u;
    u.user_id = id;
    auto it = authored.find(id);
    u.pre_posts = it == authored.end() ? 0.0 : it->second;
    u.reposts_total = a.total;
    u.reposts_participant = a.part;
    u.hate_total = a.hate_total;
    u.hate_participant = a.hate_part;
    for (const auto& [idx, w] : a.roster) {
      u.roster.push_back({idx, w.first});
      u.hate_roster.push_back({idx, w.second});
    }
    data.users.push_back(std::move(u));
  }
  return data;
}

double realized_exposure(std::span<const RosterEntry> roster, std::span<const std::uint8_t> z) {
  double num = 0.0, den = 0.0;
  for (const auto& e : roster) {
    den += e.weight;
    if (z[static_cast<std::size_t>(e.participant)]) num += e.weight;
  }
  return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

Selection select_upstream(const UpstreamData& data, std::size_t limit, double max_posts,
                          ExposureWeighting weighting) {
  Selection sel;
  std::vector<std::size_t> cand;
  const bool hw = weighting == ExposureWeighting::kHate;
  for (std::size_t k = 0; k < data.users.size(); ++k) {
    const auto& u = data.users[k];
    if (u.pre_posts >= max_posts) {
      ++sel.over_cap;
      continue;
    }
    if ((hw ? u.hate_participant : u.reposts_participant) <= 0.0) continue;
    cand.push_back(k);
  }
  std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
    const auto& ua = data.users[a];
    const auto& ub = data.users[b];
    double fa = ua.potential_exposure(hw), fb = ub.potential_exposure(hw);
    if (fa != fb) return fa > fb;
    if (ua.reposts_total != ub.reposts_total) return ua.reposts_total > ub.reposts_total;
    return id_less(ua.user_id, ub.user_id);
  });
  if (cand.size() < limit)
    sel.warnings.push_back("only " + std::to_string(cand.size()) + " upstream candidates for a limit of " +
                           std::to_string(limit));
  if (cand.size() > limit) cand.resize(limit);
  sel.users = std::move(cand);
  return sel;
}

ExposureDraws::ExposureDraws(const std::vector<const std::vector<RosterEntry>*>& rosters,
                             const ClusterAssignment& clusters, const DesignParams& params, std::size_t reps,
                             std::uint64_t seed, unsigned workers)
    : reps_(reps), users_(rosters.size()), seed_(seed), data_(reps * rosters.size()) {
  require(reps >= 1, "exposure draws need at least one replicate");
  for_each_replicate(clusters, params, reps, seed, workers, [&](std::size_t b, std::span<const std::uint8_t> z) {
    double* out = data_.data() + b * users_;
    for (std::size_t i = 0; i < users_; ++i) out[i] = realized_exposure(*rosters[i], z);
  });
}

double upstream_statistic(std::span<const double> y, std::span<const double> t, const stats::BinDemeaner& bins) {
  return bins.slope(t, y);
}

stats::Binning upstream_bins(std::span<const double> pre_volume, int requested) {
  stats::Binning b = stats::make_bins(pre_volume, requested, stats::BinMode::kEqualCount);
  stats::merge_singleton_bins(b);
  return b;
}

namespace {

// Per replicate: theta_b(tau0) = a_b + tau0 (1 - c_b).
struct ShiftCoefficients {
  std::vector<double> a, c;
};

ShiftCoefficients shift_coefficients(std::span<const double> y, std::span<const double> t, const ExposureDraws& draws,
                                     const stats::BinDemeaner& bins) {
  const std::size_t n = y.size();
  require(t.size() == n && draws.users() == n && bins.size() == n, "upstream RI: inputs must align");
  ShiftCoefficients sc;
  sc.a.resize(draws.reps());
  sc.c.resize(draws.reps());
  std::vector<double> mt(n);
  for (std::size_t b = 0; b < draws.reps(); ++b) {
    auto tb = draws.draw(b);
    std::copy(tb.begin(), tb.end(), mt.begin());
    bins.demean_in_place(mt);
    double sxx = stats::dot(mt, tb);
    if (!(sxx > 1e-300)) {
      sc.a[b] = sc.c[b] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    sc.a[b] = stats::dot(mt, y) / sxx;
    sc.c[b] = stats::dot(mt, t) / sxx;
  }
  return sc;
}

}  // namespace

double ri_test(std::span<const double> y, std::span<const double> t, const ExposureDraws& draws,
               const stats::BinDemeaner& bins, double tau0, Tail tail) {
  const double theta = upstream_statistic(y, t, bins);
  if (std::isnan(theta)) throw NumericalError("upstream RI: exposure has no variation within bins");
  ShiftCoefficients sc = shift_coefficients(y, t, draws, bins);
  std::vector<double> d(draws.reps());
  for (std::size_t b = 0; b < d.size(); ++b) d[b] = sc.a[b] + tau0 * (1.0 - sc.c[b]);
  return tail_p_value(d, theta, tail);
}

RiResult ri_confidence_interval(std::span<const double> y, std::span<const double> t, const ExposureDraws& draws,
                                const stats::BinDemeaner& bins, const UpstreamRiOptions& options) {
  RiResult r;
  r.statistic = upstream_statistic(y, t, bins);
  if (std::isnan(r.statistic)) throw NumericalError("upstream RI: exposure has no variation within bins");
  ShiftCoefficients sc = shift_coefficients(y, t, draws, bins);
  std::vector<double> d(draws.reps());
  auto p_at = [&](double tau0) {
    for (std::size_t b = 0; b < d.size(); ++b) d[b] = sc.a[b] + tau0 * (1.0 - sc.c[b]);
    return tail_p_value(d, r.statistic, options.tail);
  };
  r.reps = draws.reps();
  r.seed = draws.seed();
  r.n = y.size();
  r.p_value = p_at(0.0);
  r.grid = options.grid.values();
  r.grid_p.resize(r.grid.size());
  for (std::size_t k = 0; k < r.grid.size(); ++k) r.grid_p[k] = p_at(r.grid[k]);
  r.invert(options.alpha);
  r.metadata["scale"] = "per_unit_exposure";
  r.metadata["tail"] = tail_name(options.tail);
  r.metadata["bins"] = bins.num_bins();
  if (!r.ci_empty) {
    r.metadata["ci_per_pp_low"] = r.ci_low / 100.0;
    r.metadata["ci_per_pp_high"] = r.ci_high / 100.0;
    r.metadata["ci_pct_per_pp_low"] = pct_change(r.ci_low / 100.0);
    r.metadata["ci_pct_per_pp_high"] = pct_change(r.ci_high / 100.0);
  } else {
    r.metadata["diagnostic"] = "no grid point accepted; widen the grid";
  }
  return r;
}

std::size_t lost_count(const std::unordered_set<std::string>& pre_roster,
                       const std::unordered_set<std::string>& period_roster) {
  std::size_t lost = 0;
  for (const auto& u : pre_roster)
    if (!period_roster.contains(u)) ++lost;
  return lost;
}

UpstreamOutcomes upstream_outcomes(std::span<const PostEvent> posts, const UpstreamData& data,
                                   std::span<const std::size_t> selected, const PeriodSpec& periods,
                                   const HateMeasure& measure, LostMode lost_mode, PeriodAggregation aggregation) {
  const std::vector<MonthBucket> buckets = month_buckets(periods);
  const std::size_t n = selected.size(), nb = buckets.size();
  std::unordered_map<std::string, std::size_t> row;
  for (std::size_t r = 0; r < n; ++r) row.emplace(data.users[selected[r]].user_id, r);
  std::vector<std::vector<double>> part(n, std::vector<double>(nb, 0.0)), non(n, std::vector<double>(nb, 0.0));
  // rosters[row][period][participant?]
  std::vector<std::array<std::array<std::unordered_set<std::string>, 2>, 3>> rosters(n);
  std::vector<Timestamp> starts(nb);
  for (std::size_t b = 0; b < nb; ++b) starts[b] = buckets[b].span.start;

  for (const auto& p : posts) {
    if (!p.is_repost()) continue;
    auto it = row.find(p.source_user_id);
    if (it == row.end()) continue;
    auto pos = std::upper_bound(starts.begin(), starts.end(), p.ts);
    if (pos == starts.begin()) continue;
    std::size_t b = static_cast<std::size_t>(pos - starts.begin()) - 1;
    if (!buckets[b].span.contains(p.ts)) continue;
    const bool is_part = data.participants.find(p.user_id).has_value();
    double v = measure.value(p);
    (is_part ? part : non)[it->second][b] += v;
    bool counts = lost_mode == LostMode::kAnyReposts || v > 0.0;
    if (counts) rosters[it->second][static_cast<std::size_t>(buckets[b].period)][is_part ? 1 : 0].insert(p.user_id);
  }

  auto period_value = [&](const std::vector<double>& counts, PeriodName p) {
    double acc = 0.0;
    int m = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      if (buckets[b].period != p) continue;
      acc += aggregation == PeriodAggregation::kMonthlyLogMean ? std::log1p(counts[b]) : counts[b];
      ++m;
    }
    if (aggregation == PeriodAggregation::kLogPeriodTotal) return std::log1p(acc);
    return m > 0 ? acc / m : 0.0;
  };

  UpstreamOutcomes out;
  out.has_post = periods.post.has_value();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t r = 0; r < n; ++r) {
    out.hate_part_pre.push_back(period_value(part[r], PeriodName::kPre));
    out.hate_part_during.push_back(period_value(part[r], PeriodName::kDuring));
    out.hate_non_pre.push_back(period_value(non[r], PeriodName::kPre));
    out.hate_non_during.push_back(period_value(non[r], PeriodName::kDuring));
    if (out.has_post) {
      out.hate_part_post.push_back(period_value(part[r], PeriodName::kPost));
      out.hate_non_post.push_back(period_value(non[r], PeriodName::kPost));
    }
    for (int who = 0; who < 2; ++who) {
      const auto& pre = rosters[r][0][static_cast<std::size_t>(who)];
      auto& during_out = who ? out.lost_part_during : out.lost_non_during;
      auto& post_out = who ? out.lost_part_post : out.lost_non_post;
      if (pre.empty()) {
        ++(who ? out.empty_roster_part : out.empty_roster_non);
        during_out.push_back(nan);
        if (out.has_post) post_out.push_back(nan);
        continue;
      }
      during_out.push_back(std::log1p(static_cast<double>(lost_count(pre, rosters[r][1][static_cast<std::size_t>(who)]))));
      if (out.has_post)
        post_out.push_back(std::log1p(static_cast<double>(lost_count(pre, rosters[r][2][static_cast<std::size_t>(who)]))));
    }
  }
  return out;
}

namespace {

struct PersistenceMoments {
  double dd = 0.0, dp = 0.0;   // <MD, D>, <MD, P>
  std::vector<double> up, du, uu;  // per replicate <Mu, P>, <MD, u>, <Mu, u>
};

PersistenceMoments persistence_moments(std::span<const double> d_during, std::span<const double> d_post,
                                       std::span<const double> t, const ExposureDraws& draws,
                                       const stats::BinDemeaner& bins) {
  const std::size_t n = d_during.size();
  require(d_post.size() == n && t.size() == n && draws.users() == n && bins.size() == n,
          "persistence RI: inputs must align");
  PersistenceMoments m;
  std::vector<double> md = bins.demean(d_during);
  m.dd = stats::dot(md, d_during);
  m.dp = stats::dot(md, d_post);
  m.up.resize(draws.reps());
  m.du.resize(draws.reps());
  m.uu.resize(draws.reps());
  std::vector<double> u(n);
  for (std::size_t b = 0; b < draws.reps(); ++b) {
    auto tb = draws.draw(b);
    for (std::size_t i = 0; i < n; ++i) u[i] = tb[i] - t[i];
    std::vector<double> mu = bins.demean(u);
    m.up[b] = stats::dot(mu, d_post);
    m.du[b] = stats::dot(mu, d_during);
    m.uu[b] = stats::dot(mu, u);
  }
  return m;
}

double persistence_draw(const PersistenceMoments& m, std::size_t b, double tau, double beta0) {
  double num = m.dp + tau * m.up[b] + beta0 * tau * m.du[b] + beta0 * tau * tau * m.uu[b];
  double den = m.dd + 2.0 * tau * m.du[b] + tau * tau * m.uu[b];
  return den > 1e-300 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double persistence_ri_p(std::span<const double> d_during, std::span<const double> d_post, std::span<const double> t,
                        const ExposureDraws& draws, const stats::BinDemeaner& bins, double tau, double beta0,
                        Tail tail) {
  require(tau != 0.0, "persistence RI: beta is not identified at tau = 0");
  PersistenceMoments m = persistence_moments(d_during, d_post, t, draws, bins);
  if (!(m.dd > 1e-300)) throw NumericalError("persistence RI: during outcome has no variation within bins");
  const double theta = m.dp / m.dd;
  std::vector<double> d(draws.reps());
  for (std::size_t b = 0; b < d.size(); ++b) d[b] = persistence_draw(m, b, tau, beta0);
  return tail_p_value(d, theta, tail);
}

std::vector<PersistenceRow> persistence_ri(std::span<const double> d_during, std::span<const double> d_post,
                                           std::span<const double> t, const ExposureDraws& draws,
                                           const stats::BinDemeaner& bins, const PersistenceRiOptions& options) {
  const Grid& bg = options.beta_grid;
  require(bg.start >= -1e-12 && bg.at(bg.count - 1) <= 1.0 + 1e-12, "beta grid must lie within [0, 1]");
  PersistenceMoments m = persistence_moments(d_during, d_post, t, draws, bins);
  if (!(m.dd > 1e-300)) throw NumericalError("persistence RI: during outcome has no variation within bins");
  const double theta = m.dp / m.dd;
  std::vector<PersistenceRow> rows;
  std::vector<double> d(draws.reps());
  for (double tau : options.tau_grid.values()) {
    PersistenceRow row;
    row.tau = tau;
    if (std::fabs(tau) < 1e-12) {
      row.refused = true;
      rows.push_back(row);
      continue;
    }
    RiResult acc;
    acc.grid = bg.values();
    acc.grid_p.resize(acc.grid.size());
    for (std::size_t k = 0; k < acc.grid.size(); ++k) {
      for (std::size_t b = 0; b < d.size(); ++b) d[b] = persistence_draw(m, b, tau, acc.grid[k]);
      acc.grid_p[k] = tail_p_value(d, theta, options.tail);
    }
    acc.invert(options.alpha);
    row.ci_empty = acc.ci_empty;
    row.ci_low = acc.ci_low;
    row.ci_high = acc.ci_high;
    for (std::size_t b = 0; b < d.size(); ++b) d[b] = persistence_draw(m, b, tau, 0.0);
    row.p_beta_zero = tail_p_value(d, theta, options.tail);
    double best = *std::max_element(acc.grid_p.begin(), acc.grid_p.end());
    double lo = 0.0, hi = 0.0;
    bool seen = false;
    for (std::size_t k = 0; k < acc.grid.size(); ++k)
      if (acc.grid_p[k] == best) {
        if (!seen) lo = acc.grid[k];
        hi = acc.grid[k];
        seen = true;
      }
    row.beta_hat = 0.5 * (lo + hi);
    row.grid_p = std::move(acc.grid_p);
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const PersistenceRow& row) {
  Json j;
  j["tau"] = row.tau;
  j["tau_per_pp"] = row.tau / 100.0;
  j["refused"] = row.refused;
  if (row.refused) {
    j["reason"] = "beta is not identified at tau = 0";
    return j;
  }
  j["beta_hat"] = row.beta_hat;
  j["ci_empty"] = row.ci_empty;
  j["ci_low"] = row.ci_empty ? Json(nullptr) : Json(row.ci_low);
  j["ci_high"] = row.ci_empty ? Json(nullptr) : Json(row.ci_high);
  j["p_beta_zero"] = row.p_beta_zero;
  return j;
}

}  // namespace netx
