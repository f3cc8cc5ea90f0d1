#include "netx/outcomes.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <unordered_map>

#include "netx/error.hpp"

namespace netx {

void validate_post(const PostEvent& post) {
  require(!post.user_id.empty(), "post without user_id");
  require(std::isfinite(post.hate_score) && post.hate_score >= 0.0 && post.hate_score <= 1.0,
          "hate_score must lie in [0, 1] (post " + post.post_id + ")");
  if (post.is_repost())
    require(!post.source_user_id.empty(), "repost without source_user_id (post " + post.post_id + ")");
  else
    require(post.source_user_id.empty() && post.source_post_id.empty(),
            "original post carries source fields (post " + post.post_id + ")");
}

std::string_view period_label(PeriodName p) {
  switch (p) {
    case PeriodName::kPre: return "pre";
    case PeriodName::kDuring: return "during";
    case PeriodName::kPost: return "post";
  }
  return "?";
}

void PeriodSpec::validate() const {
  require(pre.start < pre.end, "pre period is empty");
  require(during.start < during.end, "during period is empty");
  require(pre.end <= during.start, "pre period must end before the during period starts");
  if (post) {
    require(post->start < post->end, "post period is empty");
    require(during.end <= post->start, "during period must end before the post period starts");
  }
}

const Period* PeriodSpec::get(PeriodName p) const {
  switch (p) {
    case PeriodName::kPre: return &pre;
    case PeriodName::kDuring: return &during;
    case PeriodName::kPost: return post ? &*post : nullptr;
  }
  return nullptr;
}

std::string MonthBucket::label() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u", year, month);
  return buf;
}

std::vector<MonthBucket> month_buckets(const PeriodSpec& periods) {
  using namespace std::chrono;
  periods.validate();
  std::vector<MonthBucket> out;
  for (PeriodName p : {PeriodName::kPre, PeriodName::kDuring, PeriodName::kPost}) {
    const Period* span = periods.get(p);
    if (!span) continue;
    Timestamp t = span->start;
    while (t < span->end) {
      auto day = floor<days>(sys_seconds{seconds{t}});
      year_month_day ymd{day};
      year_month next = year_month{ymd.year(), ymd.month()} + months{1};
      Timestamp month_end = sys_seconds{sys_days{next / 1}}.time_since_epoch().count();
      MonthBucket b;
      b.period = p;
      b.year = static_cast<int>(ymd.year());
      b.month = static_cast<unsigned>(ymd.month());
      b.span = {t, std::min(month_end, span->end)};
      out.push_back(b);
      t = b.span.end;
    }
  }
  return out;
}

void HateMeasure::validate() const {
  if (mode == HateMode::kThreshold)
    require(threshold > 0.0 && threshold < 1.0, "hate threshold must lie in (0, 1)");
  if (mode == HateMode::kKeyword) require(!keywords.empty(), "keyword measure needs a non-empty keyword list");
}

double HateMeasure::value(const PostEvent& post) const {
  if (category == PostCategory::kOriginal && post.is_repost()) return 0.0;
  if (category == PostCategory::kRepost && !post.is_repost()) return 0.0;
  switch (mode) {
    case HateMode::kThreshold: return post.hate_score > threshold ? 1.0 : 0.0;
    case HateMode::kRawScore: return post.hate_score;
    case HateMode::kAllPosts: return 1.0;
    case HateMode::kKeyword:
      for (const auto& tok : post.text_tokens)
        if (keywords.contains(tok)) return 1.0;
      return 0.0;
  }
  return 0.0;
}

std::string HateMeasure::label() const {
  std::string s;
  switch (mode) {
    case HateMode::kThreshold: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "threshold:%g", threshold);
      s = buf;
      break;
    }
    case HateMode::kRawScore: s = "score"; break;
    case HateMode::kKeyword: s = "keywords:" + std::to_string(keywords.size()); break;
    case HateMode::kAllPosts: s = "posts"; break;
  }
  if (category == PostCategory::kOriginal) s += ",original";
  if (category == PostCategory::kRepost) s += ",repost";
  return s;
}

HateMeasure parse_hate_measure(std::string_view spec) {
  HateMeasure m;
  std::string_view head = spec;
  if (auto comma = spec.find(','); comma != std::string_view::npos) {
    head = spec.substr(0, comma);
    std::string_view cat = spec.substr(comma + 1);
    if (cat == "original") m.category = PostCategory::kOriginal;
    else if (cat == "repost") m.category = PostCategory::kRepost;
    else if (cat == "all") m.category = PostCategory::kAll;
    else throw ValidationError("unknown post category '" + std::string(cat) + "'");
  }
  if (head.starts_with("threshold:")) {
    m.mode = HateMode::kThreshold;
    try {
      m.threshold = std::stod(std::string(head.substr(10)));
    } catch (const std::exception&) {
      throw ValidationError("bad threshold in '" + std::string(spec) + "'");
    }
  } else if (head == "threshold") {
    m.mode = HateMode::kThreshold;
  } else if (head == "score") {
    m.mode = HateMode::kRawScore;
  } else if (head.starts_with("keywords")) {
    m.mode = HateMode::kKeyword;
  } else if (head == "posts") {
    m.mode = HateMode::kAllPosts;
  } else {
    throw ValidationError("unknown hate measure '" + std::string(spec) + "'");
  }
  if (m.mode == HateMode::kThreshold) m.validate();
  return m;
}

double OutcomePanel::monthly_log(std::size_t user, std::size_t bucket) const {
  return std::log1p(raw[user][bucket]);
}

std::vector<double> OutcomePanel::month_column(std::size_t bucket) const {
  std::vector<double> out(num_users());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = monthly_log(i, bucket);
  return out;
}

std::vector<double> OutcomePanel::raw_difference(PeriodName p) const {
  const auto& y = p == PeriodName::kPost ? y_post : y_during;
  require(p != PeriodName::kPre && y.size() == y_pre.size(), "raw_difference: period not available");
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] - y_pre[i];
  return out;
}

OutcomePanel build_panel(std::span<const PostEvent> posts, std::span<const std::string> users,
                         const PeriodSpec& periods, const HateMeasure& measure, PeriodAggregation aggregation) {
  measure.validate();
  OutcomePanel panel;
  panel.buckets = month_buckets(periods);
  panel.has_post = periods.post.has_value();
  panel.measure_label = measure.label();
  panel.aggregation = aggregation;
  if (users.empty()) {
    std::vector<std::string> ids;
    for (const auto& p : posts) ids.push_back(p.user_id);
    panel.users = NodeIndex(std::move(ids));
  } else {
    panel.users = NodeIndex(std::vector<std::string>(users.begin(), users.end()));
  }
  const std::size_t n = panel.users.size();
  const std::size_t nb = panel.buckets.size();
  panel.raw.assign(n, std::vector<double>(nb, 0.0));
  panel.pre_posts.assign(n, 0.0);
  std::vector<double> pre_hate(n, 0.0);
  HateMeasure share_measure;  // pre hate share always uses the default threshold rule

  std::vector<Timestamp> starts(nb);
  for (std::size_t b = 0; b < nb; ++b) starts[b] = panel.buckets[b].span.start;

  for (const auto& post : posts) {
    validate_post(post);
    auto row = panel.users.find(post.user_id);
    if (!row) continue;
    auto it = std::upper_bound(starts.begin(), starts.end(), post.ts);
    if (it == starts.begin()) continue;
    std::size_t b = static_cast<std::size_t>(it - starts.begin()) - 1;
    if (!panel.buckets[b].span.contains(post.ts)) continue;
    auto r = static_cast<std::size_t>(*row);
    panel.raw[r][b] += measure.value(post);
    if (panel.buckets[b].period == PeriodName::kPre) {
      panel.pre_posts[r] += 1.0;
      pre_hate[r] += share_measure.value(post);
    }
  }

  auto period_value = [&](std::size_t i, PeriodName p) {
    double acc = 0.0;
    int months = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      if (panel.buckets[b].period != p) continue;
      acc += aggregation == PeriodAggregation::kMonthlyLogMean ? panel.monthly_log(i, b) : panel.raw[i][b];
      ++months;
    }
    if (aggregation == PeriodAggregation::kLogPeriodTotal) return std::log1p(acc);
    return months > 0 ? acc / months : 0.0;
  };

  panel.y_pre.resize(n);
  panel.y_during.resize(n);
  if (panel.has_post) panel.y_post.resize(n);
  panel.pre_hate_share.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    panel.y_pre[i] = period_value(i, PeriodName::kPre);
    panel.y_during[i] = period_value(i, PeriodName::kDuring);
    if (panel.has_post) panel.y_post[i] = period_value(i, PeriodName::kPost);
    panel.pre_hate_share[i] = panel.pre_posts[i] > 0 ? pre_hate[i] / panel.pre_posts[i] : 0.0;
  }
  return panel;
}

void difference_adjust(OutcomePanel& panel, AlphaSample sample, std::span<const std::uint8_t> z) {
  const std::size_t n = panel.num_users();
  if (sample == AlphaSample::kControlOnly)
    require(z.size() == n, "control-only alpha needs an assignment for every panel user");
  auto mean_over = [&](const std::vector<double>& y) {
    double s = 0.0;
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (sample == AlphaSample::kControlOnly && z[i] != 0) continue;
      s += y[i];
      m += 1.0;
    }
    return m > 0 ? s / m : 0.0;
  };
  double pre = mean_over(panel.y_pre);
  if (!(pre > 0.0)) throw NumericalError("alpha undefined: mean pre-period outcome is zero");
  panel.alpha_during = mean_over(panel.y_during) / pre;
  panel.delta_during.resize(n);
  for (std::size_t i = 0; i < n; ++i) panel.delta_during[i] = panel.y_during[i] - panel.alpha_during * panel.y_pre[i];
  if (panel.has_post) {
    panel.alpha_post = mean_over(panel.y_post) / pre;
    panel.delta_post.resize(n);
    for (std::size_t i = 0; i < n; ++i) panel.delta_post[i] = panel.y_post[i] - panel.alpha_post * panel.y_pre[i];
  }
  panel.adjusted = true;
}

std::vector<std::string> eligibility_filter(std::span<const EngagementEvent> events, const Period& window,
                                            int min_engagements, double hate_cut, double target_cut) {
  std::unordered_map<std::string, int> count;
  for (const auto& e : events) {
    if (!window.contains(e.ts)) continue;
    if (e.hate_score > hate_cut && e.target_score > target_cut) ++count[e.user_id];
  }
  std::vector<std::string> out;
  for (const auto& [user, c] : count)
    if (c >= min_engagements) out.push_back(user);
  std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) { return id_less(a, b); });
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 3) out.push_back(cur);
    cur.clear();
  };
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) cur.push_back(static_cast<char>(std::tolower(c)));
    else flush();
  }
  flush();
  return out;
}

std::vector<KeywordScore> keyword_rank(std::span<const std::string> hate_corpus,
                                       std::span<const std::string> nonhate_corpus, std::size_t k) {
  require(!hate_corpus.empty() && !nonhate_corpus.empty(), "keyword_rank: both corpora must be non-empty");
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> counts;
  for (const auto& t : hate_corpus) ++counts[t].first;
  for (const auto& t : nonhate_corpus) ++counts[t].second;
  const double vocab = static_cast<double>(counts.size());
  const double nh = static_cast<double>(hate_corpus.size());
  const double nn = static_cast<double>(nonhate_corpus.size());
  std::vector<KeywordScore> out;
  out.reserve(counts.size());
  for (const auto& [tok, c] : counts) {
    double fh = (static_cast<double>(c.first) + 1.0) / (nh + vocab);
    double fn = (static_cast<double>(c.second) + 1.0) / (nn + vocab);
    out.push_back({tok, fh / fn, c.first, c.second});
  }
  // The smoothing denominators are shared, so ratios order like (h + 1) / (n + 1); compare exactly.
  std::sort(out.begin(), out.end(), [](const KeywordScore& a, const KeywordScore& b) {
    const std::int64_t lhs = (a.hate_count + 1) * (b.nonhate_count + 1);
    const std::int64_t rhs = (b.hate_count + 1) * (a.nonhate_count + 1);
    if (lhs != rhs) return lhs > rhs;
    if (a.hate_count != b.hate_count) return a.hate_count > b.hate_count;
    return a.token < b.token;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

}  // namespace netx
