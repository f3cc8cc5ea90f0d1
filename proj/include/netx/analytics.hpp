#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netx/design.hpp"
#include "netx/outcomes.hpp"
#include "netx/report.hpp"

namespace netx {

// ---- audience renewal ----

struct RenewalPoint {
  std::string user_id;
  std::string month;  // "YYYY-MM" of t
  double rate = 0.0;
  std::size_t accounts = 0;  // |S_u(t)| after the cap
};

struct RenewalSeries {
  std::optional<double> q_cap;
  std::vector<RenewalPoint> points;
  struct MonthSummary {
    std::string month;
    std::size_t users = 0;
    double mean = 0.0;
    double ci_low = 0.0;  // mean -/+ 1.96 SE across users
    double ci_high = 0.0;
  };
  std::vector<MonthSummary> months;
  double overall_mean = 0.0;
};

// r = 1 - |S(t) n S(t+1)| / |S(t)|. The cap keeps the smallest set of most
// reposted accounts covering at least q_cap of u's month-t reposts (count
// desc, then id); S(t+1) is never capped. Months without reposts are skipped.
double renewal(const std::vector<std::string>& s_t, const std::vector<std::string>& s_next);
std::vector<std::string> top_share_accounts(const std::vector<std::pair<std::string, std::size_t>>& counts, double q);

RenewalSeries renewal_rate(std::span<const PostEvent> posts, std::optional<double> q_cap = std::nullopt,
                           std::span<const std::string> users = {});

// ---- repost ordering ----

struct OrderedRepost {
  std::string user_id;
  Timestamp ts = 0;
  std::string repost_id;
  bool participant = false;
};

struct OrderingStat {
  std::string user_id;
  std::size_t numerator = 0;    // (non-participant, participant) pairs with participant first
  std::size_t denominator = 0;  // sum_k |N_k| |P_k|
  bool defined() const { return denominator > 0; }
  double value() const;         // NaN when undefined
};

// One original post's reposts; a user counts once at their earliest repost.
OrderingStat ordering_statistic(const std::vector<std::vector<OrderedRepost>>& posts);

// R_i for each upstream user, from reposts of originals they authored.
std::vector<OrderingStat> ordering_from_posts(std::span<const PostEvent> posts, std::span<const std::string> upstream,
                                              const NodeIndex& participants, const Period& window);

// ---- reposted-account composition ----

struct CompositionRow {
  std::string user_id;
  double mean_log_followers = 0.0;  // NaN when no usable reposts
  double mean_log_statuses = 0.0;
  std::size_t reposts = 0;
  std::size_t missing = 0;
};

std::vector<CompositionRow> composition_outcomes(std::span<const PostEvent> posts, std::span<const std::string> users,
                                                 const Period& period);

// ---- placebo ----

// Every placebo period must end no later than the true treatment start.
void validate_placebo(const PeriodSpec& actual, const PeriodSpec& placebo);

// Re-runs the direct difference estimator on a panel built over the placebo
// periods. `cluster_of` and `z` follow `users`.
EstimateReport direct_placebo(std::span<const PostEvent> posts, std::span<const std::string> users,
                              const PeriodSpec& actual, const PeriodSpec& placebo, const HateMeasure& measure,
                              std::span<const std::uint8_t> z, std::span<const int> cluster_of,
                              const PropensityTable& table);

}  // namespace netx
