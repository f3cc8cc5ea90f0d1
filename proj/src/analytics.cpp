#include "netx/analytics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "netx/direct.hpp"
#include "netx/error.hpp"

namespace netx {

namespace {

int month_key(Timestamp ts) {
  using namespace std::chrono;
  year_month_day ymd{floor<days>(sys_seconds{seconds{ts}})};
  return static_cast<int>(ymd.year()) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
}

std::string month_label(int key) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", key / 12, key % 12 + 1);
  return buf;
}

bool repost_before(const OrderedRepost& a, const OrderedRepost& b) {
  if (a.ts != b.ts) return a.ts < b.ts;
  return id_less(a.repost_id, b.repost_id);
}

}  // namespace

double renewal(const std::vector<std::string>& s_t, const std::vector<std::string>& s_next) {
  require(!s_t.empty(), "renewal undefined for an empty month");
  std::unordered_set<std::string> next(s_next.begin(), s_next.end());
  std::unordered_set<std::string> cur(s_t.begin(), s_t.end());
  std::size_t kept = 0;
  for (const auto& a : cur)
    if (next.contains(a)) ++kept;
  return 1.0 - static_cast<double>(kept) / static_cast<double>(cur.size());
}

std::vector<std::string> top_share_accounts(const std::vector<std::pair<std::string, std::size_t>>& counts, double q) {
  require(q > 0.0 && q <= 1.0, "renewal cap must lie in (0, 1]");
  auto sorted = counts;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return id_less(a.first, b.first);
  });
  std::size_t total = 0;
  for (const auto& [a, c] : sorted) total += c;
  std::vector<std::string> out;
  std::size_t covered = 0;
  const double need = q * static_cast<double>(total);
  for (const auto& [a, c] : sorted) {
    if (static_cast<double>(covered) >= need - 1e-9) break;
    out.push_back(a);
    covered += c;
  }
  return out;
}

RenewalSeries renewal_rate(std::span<const PostEvent> posts, std::optional<double> q_cap,
                           std::span<const std::string> users) {
  std::unordered_set<std::string> roster(users.begin(), users.end());
  // user -> month -> account -> count
  std::map<std::string, std::map<int, std::map<std::string, std::size_t>>, bool (*)(std::string_view, std::string_view)>
      by_user(id_less);
  int first = std::numeric_limits<int>::max(), last = std::numeric_limits<int>::min();
  for (const auto& p : posts) {
    int m = month_key(p.ts);
    first = std::min(first, m);
    last = std::max(last, m);
    if (!p.is_repost()) continue;
    if (!roster.empty() && !roster.contains(p.user_id)) continue;
    ++by_user[p.user_id][m][p.source_user_id];
  }
  RenewalSeries out;
  out.q_cap = q_cap;
  std::map<int, std::vector<double>> per_month;
  for (const auto& [user, months] : by_user) {
    for (const auto& [m, accounts] : months) {
      if (m + 1 > last) continue;
      std::vector<std::pair<std::string, std::size_t>> counts(accounts.begin(), accounts.end());
      std::vector<std::string> s_t;
      if (q_cap) {
        s_t = top_share_accounts(counts, *q_cap);
      } else {
        for (const auto& [a, c] : counts) s_t.push_back(a);
      }
      if (s_t.empty()) continue;
      std::vector<std::string> s_next;
      if (auto it = months.find(m + 1); it != months.end())
        for (const auto& [a, c] : it->second) s_next.push_back(a);
      double r = renewal(s_t, s_next);
      out.points.push_back({user, month_label(m), r, s_t.size()});
      per_month[m].push_back(r);
    }
  }
  double total = 0.0;
  for (const auto& [m, rates] : per_month) {
    RenewalSeries::MonthSummary s;
    s.month = month_label(m);
    s.users = rates.size();
    s.mean = stats::mean(rates);
    double se = rates.size() > 1 ? std::sqrt(stats::variance(rates) / static_cast<double>(rates.size())) : 0.0;
    s.ci_low = s.mean - kZ975 * se;
    s.ci_high = s.mean + kZ975 * se;
    out.months.push_back(s);
    for (double r : rates) total += r;
  }
  out.overall_mean = out.points.empty() ? std::nan("") : total / static_cast<double>(out.points.size());
  return out;
}

double OrderingStat::value() const {
  if (!defined()) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

OrderingStat ordering_statistic(const std::vector<std::vector<OrderedRepost>>& posts) {
  OrderingStat s;
  for (const auto& reposts : posts) {
    std::unordered_map<std::string, const OrderedRepost*> earliest;
    for (const auto& r : reposts) {
      auto [it, fresh] = earliest.emplace(r.user_id, &r);
      if (!fresh && repost_before(r, *it->second)) it->second = &r;
    }
    std::vector<const OrderedRepost*> seq;
    seq.reserve(earliest.size());
    for (const auto& [u, r] : earliest) seq.push_back(r);
    std::sort(seq.begin(), seq.end(), [](const OrderedRepost* a, const OrderedRepost* b) { return repost_before(*a, *b); });
    std::size_t parts_before = 0, parts = 0, nons = 0;
    for (const OrderedRepost* r : seq) {
      if (r->participant) {
        ++parts_before;
        ++parts;
      } else {
        s.numerator += parts_before;
        ++nons;
      }
    }
    s.denominator += parts * nons;
  }
  return s;
}

std::vector<OrderingStat> ordering_from_posts(std::span<const PostEvent> posts, std::span<const std::string> upstream,
                                              const NodeIndex& participants, const Period& window) {
  std::unordered_map<std::string, std::size_t> row;
  for (std::size_t k = 0; k < upstream.size(); ++k) row.emplace(upstream[k], k);
  std::unordered_map<std::string, std::size_t> original_owner;
  for (const auto& p : posts)
    if (!p.is_repost() && row.contains(p.user_id)) original_owner.emplace(p.post_id, row.at(p.user_id));
  std::vector<std::map<std::string, std::vector<OrderedRepost>>> grouped(upstream.size());
  for (const auto& p : posts) {
    if (!p.is_repost() || !window.contains(p.ts) || p.source_post_id.empty()) continue;
    auto it = original_owner.find(p.source_post_id);
    if (it == original_owner.end()) continue;
    grouped[it->second][p.source_post_id].push_back(
        {p.user_id, p.ts, p.post_id, participants.find(p.user_id).has_value()});
  }
  std::vector<OrderingStat> out;
  for (std::size_t k = 0; k < upstream.size(); ++k) {
    std::vector<std::vector<OrderedRepost>> per_post;
    for (auto& [pid, reps] : grouped[k]) per_post.push_back(std::move(reps));
    OrderingStat s = ordering_statistic(per_post);
    s.user_id = upstream[k];
    out.push_back(s);
  }
  return out;
}

std::vector<CompositionRow> composition_outcomes(std::span<const PostEvent> posts, std::span<const std::string> users,
                                                 const Period& period) {
  std::unordered_map<std::string, std::size_t> row;
  std::vector<CompositionRow> out;
  for (const auto& u : users) {
    row.emplace(u, out.size());
    out.push_back({u, 0.0, 0.0, 0, 0});
  }
  std::vector<double> sf(out.size(), 0.0), ss(out.size(), 0.0);
  for (const auto& p : posts) {
    if (!p.is_repost() || !period.contains(p.ts)) continue;
    auto it = row.find(p.user_id);
    if (it == row.end()) continue;
    auto& r = out[it->second];
    if (!p.source_followers || !p.source_statuses || *p.source_followers <= 0.0 || *p.source_statuses <= 0.0) {
      ++r.missing;
      continue;
    }
    sf[it->second] += std::log(*p.source_followers);
    ss[it->second] += std::log(*p.source_statuses);
    ++r.reposts;
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (out[k].reposts == 0) {
      out[k].mean_log_followers = out[k].mean_log_statuses = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    out[k].mean_log_followers = sf[k] / static_cast<double>(out[k].reposts);
    out[k].mean_log_statuses = ss[k] / static_cast<double>(out[k].reposts);
  }
  return out;
}

void validate_placebo(const PeriodSpec& actual, const PeriodSpec& placebo) {
  placebo.validate();
  const Timestamp start = actual.during.start;
  require(placebo.pre.end <= start && placebo.during.end <= start && (!placebo.post || placebo.post->end <= start),
          "placebo window overlaps the treatment period");
}

EstimateReport direct_placebo(std::span<const PostEvent> posts, std::span<const std::string> users,
                              const PeriodSpec& actual, const PeriodSpec& placebo, const HateMeasure& measure,
                              std::span<const std::uint8_t> z, std::span<const int> cluster_of,
                              const PropensityTable& table) {
  validate_placebo(actual, placebo);
  OutcomePanel panel = build_panel(posts, users, placebo, measure);
  difference_adjust(panel);
  // Panel rows follow sorted ids; realign the assignment.
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t k = 0; k < users.size(); ++k) pos.emplace(users[k], k);
  std::vector<std::uint8_t> zz(panel.num_users());
  std::vector<int> cc(panel.num_users());
  for (std::size_t i = 0; i < panel.num_users(); ++i) {
    std::size_t k = pos.at(panel.users.id(static_cast<int>(i)));
    zz[i] = z[k];
    cc[i] = cluster_of[k];
  }
  EstimateReport r = ate_difference(panel.delta_during, zz, cc, table, "placebo_" + panel.measure_label);
  r.placebo = true;
  r.metadata["alpha"] = panel.alpha_during;
  return r;
}

}  // namespace netx
