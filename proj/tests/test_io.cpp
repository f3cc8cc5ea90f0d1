#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "netx/design.hpp"
#include "netx/error.hpp"
#include "netx/io.hpp"
#include "netx/rng.hpp"

using namespace netx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("netx_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Iso8601, ParseFormats) {
  EXPECT_EQ(io::parse_iso8601("1970-01-01"), 0);
  EXPECT_EQ(io::parse_iso8601("2023-08-01"), 1690848000);
  EXPECT_EQ(io::parse_iso8601("2023-08-01T12:00:00Z"), 1690848000 + 43200);
  EXPECT_EQ(io::parse_iso8601("2023-08-01T12:00:00+01:00"), 1690848000 + 39600);
  EXPECT_EQ(io::parse_iso8601("2023-08-01T12:00"), 1690848000 + 43200);
  EXPECT_EQ(io::parse_iso8601("2024-02-29"), io::parse_iso8601("2024-03-01") - 86400);
  EXPECT_THROW(io::parse_iso8601("2023-02-30"), ValidationError);
  EXPECT_THROW(io::parse_iso8601("2023-8-1"), ValidationError);
  EXPECT_THROW(io::parse_iso8601("2023-08-01x"), ValidationError);
}

TEST(Iso8601, RoundTrip) {
  rng::Stream r(1);
  for (int i = 0; i < 1000; ++i) {
    Timestamp t = static_cast<Timestamp>(r.below(4000000000ULL));
    EXPECT_EQ(io::parse_iso8601(io::format_iso8601(t)), t);
  }
}

TEST(FmtDouble, RoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9}) EXPECT_EQ(std::stod(io::fmt_double(v)), v);
  EXPECT_EQ(io::fmt_double(std::nan("")), "nan");
}

TEST(Toml, Subset) {
  auto t = io::parse_toml(
      "top = 1\n[design]\np_t = 0.5 # comment\nname = \"a # b\"\nflag = true\n\n[other]\nx = -3e2\n");
  EXPECT_EQ(io::toml_number(t, "", "top"), 1.0);
  EXPECT_EQ(io::toml_number(t, "design", "p_t"), 0.5);
  EXPECT_EQ(io::toml_string(t, "design", "name"), "a # b");
  EXPECT_EQ(io::toml_bool(t, "design", "flag"), true);
  EXPECT_EQ(io::toml_number(t, "other", "x"), -300.0);
  EXPECT_FALSE(io::toml_number(t, "other", "missing").has_value());
  EXPECT_THROW(io::parse_toml("[bad\n"), ValidationError);
  EXPECT_THROW(io::parse_toml("novalue\n"), ValidationError);
  EXPECT_THROW(io::parse_toml("s = \"open\n"), ValidationError);
}

TEST(Periods, RoundTrip) {
  PeriodSpec p;
  p.pre = {io::parse_iso8601("2023-01-01"), io::parse_iso8601("2023-03-01")};
  p.during = {p.pre.end, io::parse_iso8601("2023-05-15")};
  p.post = Period{p.during.end, io::parse_iso8601("2023-07-01")};
  PeriodSpec q = io::periods_from_toml(io::parse_toml(io::periods_toml(p)));
  EXPECT_EQ(q.pre.start, p.pre.start);
  EXPECT_EQ(q.during.end, p.during.end);
  ASSERT_TRUE(q.post.has_value());
  EXPECT_EQ(q.post->end, p.post->end);
}

TEST(Csv, QuotesAndErrors) {
  fs::path d = scratch("csv");
  io::write_text(d / "a.csv", "src,dst,weight\n\"x,1\",y,3\nb,c,1\n");
  io::CsvTable t = io::read_csv(d / "a.csv");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][0], "x,1");
  EXPECT_EQ(t.column("weight"), 2);
  EXPECT_EQ(t.column("nope"), -1);
  EXPECT_THROW(io::read_csv(d / "missing.csv"), std::exception);
}

TEST(Graph, EdgesRoundTrip) {
  fs::path d = scratch("edges");
  std::vector<std::tuple<std::string, std::string, std::int64_t>> rows{
      {"1", "2", 3}, {"2", "1", 1}, {"10", "2", 5}, {"1", "2", 2}, {"3", "3", 4}};
  InteractionGraph g = InteractionGraph::from_weighted_edges(rows);
  io::write_edges_csv(d / "e.csv", g);
  InteractionGraph h = io::read_edges_csv(d / "e.csv");
  ASSERT_EQ(h.num_edges(), g.num_edges());
  EXPECT_EQ(h.weight(h.nodes().at("1"), h.nodes().at("2")), 5);
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    EXPECT_EQ(h.nodes().id(h.edges()[k].src), g.nodes().id(g.edges()[k].src));
    EXPECT_EQ(h.edges()[k].weight, g.edges()[k].weight);
  }
  io::write_text(d / "bad.csv", "src,dst,weight\na,b,x\n");
  EXPECT_THROW(io::read_edges_csv(d / "bad.csv"), ValidationError);
}

TEST(Assignment, RoundTrip) {
  fs::path d = scratch("assign");
  std::vector<std::tuple<std::string, std::int64_t, bool>> rows;
  for (int i = 0; i < 40; ++i) rows.emplace_back("u" + std::to_string(i), i / 5, i % 5 == 0);
  ClusterAssignment c = make_clusters(rows);
  Assignment a = assign(c, {0.5, 0.18}, 42);
  io::write_clusters_csv(d / "c.csv", c);
  ClusterAssignment c2 = io::read_clusters_csv(d / "c.csv");
  EXPECT_EQ(c2.cluster_of, c.cluster_of);
  EXPECT_EQ(c2.nodes.ids(), c.nodes.ids());
  io::write_assignment_csv(d / "a.csv", c, a);
  io::AssignmentFile f = io::read_assignment_csv(d / "a.csv");
  EXPECT_EQ(f.assignment.z, a.z);
  EXPECT_EQ(f.clusters.cluster_of, c.cluster_of);
}

TEST(Posts, RoundTripAndValidation) {
  fs::path d = scratch("posts");
  std::vector<PostEvent> posts(2);
  posts[0].user_id = "1";
  posts[0].post_id = "p1";
  posts[0].ts = 1690848000;
  posts[0].hate_score = 0.25;
  posts[0].text_tokens = {"x", "y"};
  posts[1].user_id = "2";
  posts[1].post_id = "p2";
  posts[1].ts = 1690848100;
  posts[1].kind = PostKind::kRepost;
  posts[1].source_user_id = "1";
  posts[1].source_post_id = "p1";
  posts[1].source_followers = 1000.0;
  posts[1].source_statuses = 50.0;
  posts[1].hate_score = 0.25;
  io::write_posts_jsonl(d / "p.jsonl", posts);
  auto back = io::read_posts_jsonl(d / "p.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].text_tokens, posts[0].text_tokens);
  EXPECT_EQ(back[1].source_post_id, "p1");
  EXPECT_EQ(back[1].source_followers, 1000.0);
  EXPECT_TRUE(back[1].is_repost());
  io::write_text(d / "bad.jsonl",
                 "{\"user_id\":\"1\",\"post_id\":\"p\",\"ts\":\"2023-01-01\",\"hate_score\":1.5}\n");
  EXPECT_THROW(io::read_posts_jsonl(d / "bad.jsonl"), ValidationError);
  io::write_text(d / "iso.jsonl",
                 "{\"user_id\":7,\"post_id\":8,\"ts\":\"2023-01-01T00:00:00Z\",\"hate_score\":0.1,\"text\":\"Hello world\"}\n");
  auto iso = io::read_posts_jsonl(d / "iso.jsonl");
  EXPECT_EQ(iso[0].user_id, "7");
  EXPECT_EQ(iso[0].ts, io::parse_iso8601("2023-01-01"));
}

TEST(Panel, RoundTrip) {
  fs::path d = scratch("panel");
  PeriodSpec per;
  per.pre = {io::parse_iso8601("2023-01-01"), io::parse_iso8601("2023-03-01")};
  per.during = {per.pre.end, io::parse_iso8601("2023-05-01")};
  per.post = Period{per.during.end, io::parse_iso8601("2023-06-01")};
  rng::Stream r(2);
  std::vector<PostEvent> posts;
  std::vector<std::string> users;
  for (int i = 0; i < 30; ++i) {
    users.push_back("u" + std::to_string(i));
    for (int k = 0; k < 20; ++k) {
      PostEvent p;
      p.user_id = users.back();
      p.post_id = p.user_id + "_" + std::to_string(k);
      p.ts = per.pre.start + static_cast<Timestamp>(r.below(150 * 86400));
      p.hate_score = r.uniform();
      posts.push_back(p);
    }
  }
  OutcomePanel panel = build_panel(posts, users, per, parse_hate_measure("threshold:0.5"));
  difference_adjust(panel);
  io::write_panel(d / "panel.csv", panel, per);
  io::PanelFile f = io::read_panel(d / "panel.csv");
  EXPECT_EQ(f.panel.users.ids(), panel.users.ids());
  EXPECT_EQ(f.panel.y_pre, panel.y_pre);
  EXPECT_EQ(f.panel.delta_post, panel.delta_post);
  EXPECT_EQ(f.panel.raw, panel.raw);
  EXPECT_EQ(f.panel.alpha_during, panel.alpha_during);
  EXPECT_EQ(f.periods.during.end, per.during.end);
}

TEST(FileHash, Deterministic) {
  fs::path d = scratch("hash");
  io::write_text(d / "a", "hello");
  io::write_text(d / "b", "hello");
  io::write_text(d / "c", "hellp");
  EXPECT_EQ(io::file_hash(d / "a"), io::file_hash(d / "b"));
  EXPECT_NE(io::file_hash(d / "a"), io::file_hash(d / "c"));
  EXPECT_EQ(io::file_hash(d / "a").size(), 16u);
}
