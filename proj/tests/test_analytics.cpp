#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "netx/analytics.hpp"
#include "netx/error.hpp"
#include "netx/io.hpp"
#include "netx/rng.hpp"

using namespace netx;

namespace {

Timestamp ts(const char* s) { return io::parse_iso8601(s); }

int counter = 0;

PostEvent repost_of(const std::string& user, const std::string& source, Timestamp when) {
  PostEvent p;
  p.user_id = user;
  p.post_id = "r" + std::to_string(++counter);
  p.kind = PostKind::kRepost;
  p.source_user_id = source;
  p.source_post_id = source + "-post";
  p.ts = when;
  return p;
}

PostEvent original_by(const std::string& user, Timestamp when) {
  PostEvent p;
  p.user_id = user;
  p.post_id = "o" + std::to_string(++counter);
  p.ts = when;
  return p;
}

PeriodSpec periods(const char* a, const char* b, const char* c, const char* d) {
  PeriodSpec s;
  s.pre = {ts(a), ts(b)};
  s.during = {ts(b), ts(c)};
  s.post = Period{ts(c), ts(d)};
  return s;
}

}  // namespace

TEST(Renewal, HandExample) {
  EXPECT_NEAR(renewal({"a", "b", "c"}, {"b", "c", "d"}), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(renewal({"a", "b"}, {"a", "b"}), 0.0);
  EXPECT_EQ(renewal({"a", "b"}, {}), 1.0);
  EXPECT_THROW(renewal({}, {"a"}), ValidationError);
}

TEST(Renewal, FromPostsSkipsLastMonth) {
  std::vector<PostEvent> posts;
  for (const char* a : {"a", "b", "c"}) posts.push_back(repost_of("u", a, ts("2023-01-10")));
  for (const char* a : {"b", "c", "d"}) posts.push_back(repost_of("u", a, ts("2023-02-10")));
  RenewalSeries s = renewal_rate(posts);
  ASSERT_EQ(s.points.size(), 1u);
  EXPECT_EQ(s.points[0].month, "2023-01");
  EXPECT_NEAR(s.points[0].rate, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.overall_mean, 1.0 / 3.0, 1e-15);
}

TEST(Renewal, CapKeepsHeaviestAccounts) {
  std::vector<std::pair<std::string, std::size_t>> counts{{"a", 6}, {"b", 3}, {"c", 1}};
  EXPECT_EQ(top_share_accounts(counts, 0.5), (std::vector<std::string>{"a"}));
  EXPECT_EQ(top_share_accounts(counts, 0.9), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(top_share_accounts(counts, 1.0), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_THROW(top_share_accounts(counts, 0.0), ValidationError);
}

TEST(Renewal, CapIsMonotone) {
  rng::Stream r(4);
  std::vector<PostEvent> posts;
  for (int u = 0; u < 40; ++u)
    for (int m = 0; m < 4; ++m)
      for (int k = 0; k < 30; ++k) {
        std::string src = "s" + std::to_string(static_cast<int>(std::floor(std::pow(r.uniform(), 3.0) * 60)));
        Timestamp t = ts("2023-01-01") + static_cast<Timestamp>(m) * 31 * 86400 + 86400;
        posts.push_back(repost_of("u" + std::to_string(u), src, t));
      }
  std::size_t prev_accounts = 0;
  for (double q : {0.3, 0.5, 0.7, 0.9, 1.0}) {
    RenewalSeries s = renewal_rate(posts, q);
    std::size_t accounts = 0;
    for (const auto& p : s.points) accounts += p.accounts;
    EXPECT_GE(accounts, prev_accounts);
    prev_accounts = accounts;
  }
}

TEST(Renewal, SyntheticChurnRecoversRate) {
  rng::Stream r(5);
  const double churn = 0.78;
  std::vector<PostEvent> posts;
  int fresh = 0;
  for (int u = 0; u < 300; ++u) {
    std::vector<std::string> set;
    for (int k = 0; k < 20; ++k) set.push_back("a" + std::to_string(fresh++));
    for (int m = 0; m < 6; ++m) {
      Timestamp t = ts("2023-01-05") + static_cast<Timestamp>(m) * 31 * 86400;
      for (const auto& a : set) posts.push_back(repost_of("u" + std::to_string(u), a, t));
      for (auto& a : set)
        if (r.uniform() < churn) a = "a" + std::to_string(fresh++);
    }
  }
  RenewalSeries s = renewal_rate(posts);
  EXPECT_EQ(s.months.size(), 5u);
  EXPECT_NEAR(s.overall_mean, churn, 0.01);
  for (const auto& m : s.months) {
    EXPECT_LE(m.ci_low, churn + 0.02);
    EXPECT_GE(m.ci_high, churn - 0.02);
  }
}

TEST(Ordering, ParticipantFirstGivesOne) {
  std::vector<std::vector<OrderedRepost>> one{{{"p", 1, "x1", true}, {"n", 2, "x2", false}}};
  OrderingStat s = ordering_statistic(one);
  EXPECT_EQ(s.numerator, 1u);
  EXPECT_EQ(s.denominator, 1u);
  EXPECT_EQ(s.value(), 1.0);
  std::vector<std::vector<OrderedRepost>> rev{{{"p", 3, "x1", true}, {"n", 2, "x2", false}}};
  EXPECT_EQ(ordering_statistic(rev).value(), 0.0);
}

TEST(Ordering, UndefinedWithoutBothKinds) {
  std::vector<std::vector<OrderedRepost>> only{{{"p", 1, "x1", true}, {"q", 2, "x2", true}}};
  EXPECT_FALSE(ordering_statistic(only).defined());
  EXPECT_TRUE(std::isnan(ordering_statistic(only).value()));
}

TEST(Ordering, EarliestRepostCounts) {
  // n reposts before p and again after; only the first counts.
  std::vector<std::vector<OrderedRepost>> post{
      {{"n", 5, "x3", false}, {"p", 2, "x2", true}, {"n", 1, "x1", false}}};
  EXPECT_EQ(ordering_statistic(post).value(), 0.0);
}

TEST(Ordering, MatchesBruteForceAndIsOrderInvariant) {
  rng::Stream r(6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<OrderedRepost>> posts;
    std::size_t num = 0, den = 0;
    for (int k = 0; k < 3; ++k) {
      std::vector<OrderedRepost> reps;
      int m = static_cast<int>(r.below(8));
      for (int j = 0; j < m; ++j) {
        // distinct users and times, so the brute force below needs no tie rule
        reps.push_back({"u" + std::to_string(j), static_cast<Timestamp>(r.below(1000000)) * 8 + j,
                        "id" + std::to_string(j), r.uniform() < 0.4});
      }
      for (const auto& a : reps)
        for (const auto& b : reps)
          if (a.participant && !b.participant) {
            ++den;
            if (a.ts < b.ts) ++num;
          }
      posts.push_back(reps);
    }
    OrderingStat s = ordering_statistic(posts);
    EXPECT_EQ(s.numerator, num);
    EXPECT_EQ(s.denominator, den);
    for (auto& reps : posts) std::reverse(reps.begin(), reps.end());
    std::reverse(posts.begin(), posts.end());
    OrderingStat t = ordering_statistic(posts);
    EXPECT_EQ(t.numerator, num);
    EXPECT_EQ(t.denominator, den);
  }
}

TEST(Ordering, FromPosts) {
  std::vector<PostEvent> posts;
  PostEvent o = original_by("up", ts("2023-03-01"));
  posts.push_back(o);
  auto rep = [&](const std::string& u, Timestamp dt) {
    PostEvent p = repost_of(u, "up", o.ts + dt);
    p.source_post_id = o.post_id;
    posts.push_back(p);
  };
  rep("p1", 10);
  rep("x1", 20);
  rep("p2", 30);
  rep("x2", 40);
  NodeIndex parts({"p1", "p2"});
  std::vector<std::string> up{"up"};
  auto out = ordering_from_posts(posts, up, parts, {ts("2023-03-01"), ts("2023-04-01")});
  ASSERT_EQ(out.size(), 1u);
  // pairs (p,x): p1<x1, p1<x2, p2>x1, p2<x2
  EXPECT_EQ(out[0].numerator, 3u);
  EXPECT_EQ(out[0].denominator, 4u);
}

TEST(Composition, MeanLogFollowers) {
  std::vector<PostEvent> posts;
  PostEvent p = repost_of("u", "s", ts("2023-01-10"));
  p.source_followers = std::exp(3.0);
  p.source_statuses = std::exp(5.0);
  posts.push_back(p);
  PostEvent q = repost_of("u", "t", ts("2023-01-11"));  // no metadata
  posts.push_back(q);
  std::vector<std::string> users{"u", "v"};
  auto rows = composition_outcomes(posts, users, {ts("2023-01-01"), ts("2023-02-01")});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(rows[0].mean_log_followers, 3.0, 1e-12);
  EXPECT_NEAR(rows[0].mean_log_statuses, 5.0, 1e-12);
  EXPECT_EQ(rows[0].reposts, 1u);
  EXPECT_EQ(rows[0].missing, 1u);
  EXPECT_TRUE(std::isnan(rows[1].mean_log_followers));
}

TEST(Composition, PermutationInvariant) {
  rng::Stream r(8);
  std::vector<PostEvent> posts;
  for (int k = 0; k < 50; ++k) {
    PostEvent p = repost_of("u" + std::to_string(k % 5), "s", ts("2023-01-02") + k);
    p.source_followers = 1.0 + r.uniform() * 1e6;
    p.source_statuses = 1.0 + r.uniform() * 1e4;
    posts.push_back(p);
  }
  std::vector<std::string> users{"u0", "u1", "u2", "u3", "u4"};
  Period per{ts("2023-01-01"), ts("2023-02-01")};
  auto a = composition_outcomes(posts, users, per);
  std::reverse(posts.begin(), posts.end());
  auto b = composition_outcomes(posts, users, per);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k].mean_log_followers, b[k].mean_log_followers, 1e-12);
}

TEST(Placebo, OverlapIsRejected) {
  PeriodSpec actual = periods("2023-01-01", "2023-03-01", "2023-05-01", "2023-07-01");
  PeriodSpec ok = periods("2022-09-01", "2022-11-01", "2023-01-01", "2023-03-01");
  EXPECT_NO_THROW(validate_placebo(actual, ok));
  PeriodSpec bad = periods("2022-11-01", "2023-01-01", "2023-03-15", "2023-04-01");
  EXPECT_THROW(validate_placebo(actual, bad), ValidationError);
}

TEST(Placebo, NullDataGivesSmallEstimate) {
  rng::Stream r(9);
  PeriodSpec actual = periods("2023-01-01", "2023-03-01", "2023-05-01", "2023-07-01");
  PeriodSpec placebo;
  placebo.pre = {ts("2022-09-01"), ts("2022-11-01")};
  placebo.during = {ts("2022-11-01"), ts("2023-01-01")};
  std::vector<std::string> users;
  std::vector<std::uint8_t> z;
  std::vector<int> cl;
  std::vector<PostEvent> posts;
  for (int i = 0; i < 400; ++i) {
    std::string u = "u" + std::to_string(i);
    users.push_back(u);
    z.push_back(static_cast<std::uint8_t>(r.uniform() < 0.5));
    cl.push_back(i / 4);
    for (int k = 0; k < 40; ++k) {
      PostEvent p = original_by(u, ts("2022-09-01") + static_cast<Timestamp>(r.below(120 * 86400)));
      p.hate_score = r.uniform() < 0.2 ? 0.9 : 0.1;
      posts.push_back(p);
    }
  }
  EstimateReport rep = direct_placebo(posts, users, actual, placebo, parse_hate_measure("threshold:0.5"), z, cl,
                                      propensities({0.5, 0.18}));
  EXPECT_TRUE(rep.placebo);
  EXPECT_LT(std::abs(rep.point), 4.0 * rep.std_error + 1e-12);
}
