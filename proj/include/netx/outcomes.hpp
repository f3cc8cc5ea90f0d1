#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "netx/netgraph.hpp"

namespace netx {

enum class PostKind { kOriginal, kRepost };

struct PostEvent {
  std::string user_id;
  std::string post_id;
  Timestamp ts = 0;
  PostKind kind = PostKind::kOriginal;
  std::string source_user_id;  // reposts only
  std::string source_post_id;  // reposts only; may be empty
  double hate_score = 0.0;
  std::optional<double> source_followers;
  std::optional<double> source_statuses;
  std::vector<std::string> text_tokens;

  bool is_repost() const { return kind == PostKind::kRepost; }
};

// Throws ValidationError when the score is outside [0, 1] or the repost
// fields do not match the kind.
void validate_post(const PostEvent& post);

// Half-open [start, end).
struct Period {
  Timestamp start = 0;
  Timestamp end = 0;
  bool contains(Timestamp t) const { return t >= start && t < end; }
  bool overlaps(const Period& o) const { return start < o.end && o.start < end; }
};

enum class PeriodName { kPre = 0, kDuring = 1, kPost = 2 };
std::string_view period_label(PeriodName p);

struct PeriodSpec {
  Period pre;
  Period during;
  std::optional<Period> post;
  void validate() const;
  const Period* get(PeriodName p) const;
};

// Calendar-month pieces of a period (UTC). A month split by a period
// boundary contributes one bucket to each side.
struct MonthBucket {
  PeriodName period = PeriodName::kPre;
  int year = 0;
  unsigned month = 0;  // 1..12
  Period span;
  std::string label() const;  // "2023-08"
};

std::vector<MonthBucket> month_buckets(const PeriodSpec& periods);

enum class HateMode { kThreshold, kRawScore, kKeyword, kAllPosts };
enum class PostCategory { kAll, kOriginal, kRepost };

struct HateMeasure {
  HateMode mode = HateMode::kThreshold;
  double threshold = 0.5;  // strict: score > threshold
  std::unordered_set<std::string> keywords;
  PostCategory category = PostCategory::kAll;

  void validate() const;
  // Contribution of one post to its month's raw count.
  double value(const PostEvent& post) const;
  std::string label() const;
};

// "threshold:0.5", "score", "keywords" (keywords filled separately) or
// "posts"; optional ",original" / ",repost" category suffix.
HateMeasure parse_hate_measure(std::string_view spec);

enum class PeriodAggregation { kMonthlyLogMean, kLogPeriodTotal };
enum class AlphaSample { kPooled, kControlOnly };

struct OutcomePanel {
  NodeIndex users;
  std::vector<MonthBucket> buckets;
  std::vector<std::vector<double>> raw;  // [user][bucket] counts (or score sums)
  std::vector<double> y_pre, y_during, y_post;
  std::vector<double> delta_during, delta_post;
  double alpha_during = 1.0;
  double alpha_post = 1.0;
  bool adjusted = false;
  bool has_post = false;
  std::vector<double> pre_posts;       // all pre-period posts, any score
  std::vector<double> pre_hate_share;  // hate posts / posts in pre (0 when none)
  std::string measure_label;
  PeriodAggregation aggregation = PeriodAggregation::kMonthlyLogMean;

  std::size_t num_users() const { return users.size(); }
  // log1p of the bucket count; the per-month outcome Y_{i,m}.
  double monthly_log(std::size_t user, std::size_t bucket) const;
  std::vector<double> month_column(std::size_t bucket) const;
  // Y - Y_pre without rescaling.
  std::vector<double> raw_difference(PeriodName p) const;
};

// Rows are `users` (or every poster when empty). Posts by users outside the
// roster and posts outside all periods are ignored. Users without posts keep
// an all-zero row.
OutcomePanel build_panel(std::span<const PostEvent> posts, std::span<const std::string> users,
                         const PeriodSpec& periods, const HateMeasure& measure,
                         PeriodAggregation aggregation = PeriodAggregation::kMonthlyLogMean);

// Fills delta_during / delta_post with alpha = mean(Y_period) / mean(Y_pre).
// Control-only mode averages over z == 0 users and needs `z`.
void difference_adjust(OutcomePanel& panel, AlphaSample sample = AlphaSample::kPooled,
                       std::span<const std::uint8_t> z = {});

// Users with at least two engagements whose hate score exceeds 0.9 and whose
// target-group score exceeds 0.5 inside `window`.
enum class EngagementKind { kPost, kRepost, kLike };
struct EngagementEvent {
  std::string user_id;
  Timestamp ts = 0;
  EngagementKind kind = EngagementKind::kPost;
  double hate_score = 0.0;
  double target_score = 0.0;
};
std::vector<std::string> eligibility_filter(std::span<const EngagementEvent> events, const Period& window,
                                            int min_engagements = 2, double hate_cut = 0.9,
                                            double target_cut = 0.5);

// Lowercase, split on non-alphanumerics, drop tokens shorter than 3.
std::vector<std::string> tokenize(std::string_view text);

struct KeywordScore {
  std::string token;
  double ratio = 0.0;
  std::int64_t hate_count = 0;
  std::int64_t nonhate_count = 0;
};

// Ranks tokens by smoothed relative-frequency ratio (count + 1) / (total + V)
// in the hate corpus over the same quantity in the non-hate corpus. Ties:
// higher hate count, then lexicographic.
std::vector<KeywordScore> keyword_rank(std::span<const std::string> hate_corpus,
                                       std::span<const std::string> nonhate_corpus, std::size_t k);

}  // namespace netx
