#include "netx/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "netx/error.hpp"

namespace netx::io {

namespace {

std::string where(const fs::path& path, std::size_t line) { return path.string() + ":" + std::to_string(line) + ": "; }

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_double(const std::string& s, const std::string& ctx) {
  if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(ctx + "expected a number, got '" + s + "'");
  }
}

std::int64_t parse_int(const std::string& s, const std::string& ctx) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(ctx + "expected an integer, got '" + s + "'");
  }
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

// Sequentially reads non-empty JSONL records, tagging errors with line numbers.
template <typename Fn>
void for_each_jsonl(const fs::path& path, Fn&& fn) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const std::exception& e) {
      throw ValidationError(where(path, no) + "invalid JSON: " + e.what());
    }
    try {
      fn(j, no);
    } catch (const ValidationError& e) {
      throw ValidationError(where(path, no) + e.what());
    } catch (const Json::exception& e) {
      throw ValidationError(where(path, no) + e.what());
    }
  }
}

std::string id_field(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw ValidationError(std::string("field '") + key + "' must be a string or integer id");
}

Timestamp ts_field(const Json& v) {
  if (v.is_number()) return static_cast<Timestamp>(v.get<double>());
  if (v.is_string()) return parse_iso8601(v.get<std::string>());
  throw ValidationError("timestamp must be epoch seconds or an ISO-8601 string");
}

}  // namespace

Timestamp parse_iso8601(std::string_view text) {
  std::string s = trim(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  int used = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &used) != 3 || used != 10)
    throw ValidationError("bad ISO-8601 date '" + s + "'");
  std::size_t pos = 10;
  long offset = 0;
  if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
    ++pos;
    int n = 0;
    if (std::sscanf(s.c_str() + pos, "%2d:%2d%n", &h, &mi, &n) != 2 || n != 5)
      throw ValidationError("bad ISO-8601 time in '" + s + "'");
    pos += 5;
    if (pos < s.size() && s[pos] == ':') {
      if (std::sscanf(s.c_str() + pos, ":%2d%n", &sec, &n) != 1 || n != 3)
        throw ValidationError("bad ISO-8601 seconds in '" + s + "'");
      pos += 3;
      if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      }
    }
    if (pos < s.size()) {
      if (s[pos] == 'Z' && pos + 1 == s.size()) {
        ++pos;
      } else if ((s[pos] == '+' || s[pos] == '-') && s.size() - pos == 6 && s[pos + 3] == ':') {
        int oh = 0, om = 0;
        if (std::sscanf(s.c_str() + pos + 1, "%2d:%2d", &oh, &om) != 2)
          throw ValidationError("bad ISO-8601 offset in '" + s + "'");
        offset = (s[pos] == '+' ? 1 : -1) * (oh * 3600L + om * 60L);
        pos = s.size();
      }
    }
  }
  if (pos != s.size()) throw ValidationError("trailing characters in timestamp '" + s + "'");
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) throw ValidationError("invalid calendar value in '" + s + "'");
  Timestamp days_part = sys_days{ymd}.time_since_epoch().count();
  return days_part * 86400 + h * 3600 + mi * 60 + sec - offset;
}

std::string format_iso8601(Timestamp ts) {
  using namespace std::chrono;
  sys_seconds t{seconds{ts}};
  auto dp = floor<days>(t);
  year_month_day ymd{dp};
  hh_mm_ss hms{t - dp};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) return static_cast<int>(k);
  return -1;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  CsvTable t;
  std::string line;
  std::size_t no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw ValidationError(where(path, no) + "expected " + std::to_string(t.header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
    t.line.push_back(no);
  }
  if (!have_header) throw ValidationError(path.string() + ": missing header");
  return t;
}

std::string read_text(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

std::string file_hash(const fs::path& path) {
  std::string bytes = read_text(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- TOML subset ----

TomlTable parse_toml(std::string_view text, const std::string& origin) {
  TomlTable t;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    // Strip comments outside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    std::string s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ValidationError(origin + ":" + std::to_string(no) + ": unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      t[section];
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ValidationError(origin + ":" + std::to_string(no) + ": expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty()) throw ValidationError(origin + ":" + std::to_string(no) + ": empty key or value");
    if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"')
        throw ValidationError(origin + ":" + std::to_string(no) + ": unterminated string");
    }
    t[section][key] = value;
  }
  return t;
}

TomlTable read_toml(const fs::path& path) { return parse_toml(read_text(path), path.string()); }

namespace {
const std::string* toml_raw(const TomlTable& t, const std::string& section, const std::string& key) {
  auto s = t.find(section);
  if (s == t.end()) return nullptr;
  auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}
}  // namespace

std::optional<std::string> toml_string(const TomlTable& t, const std::string& section, const std::string& key) {
  const std::string* raw = toml_raw(t, section, key);
  if (!raw) return std::nullopt;
  if (raw->front() == '"') return raw->substr(1, raw->size() - 2);
  return *raw;
}

std::optional<double> toml_number(const TomlTable& t, const std::string& section, const std::string& key) {
  const std::string* raw = toml_raw(t, section, key);
  if (!raw) return std::nullopt;
  std::string v;
  for (char c : *raw)
    if (c != '_') v += c;
  return parse_double(v, "[" + section + "] " + key + ": ");
}

std::optional<bool> toml_bool(const TomlTable& t, const std::string& section, const std::string& key) {
  const std::string* raw = toml_raw(t, section, key);
  if (!raw) return std::nullopt;
  if (*raw == "true") return true;
  if (*raw == "false") return false;
  throw ValidationError("[" + section + "] " + key + ": expected true or false");
}

PeriodSpec periods_from_toml(const TomlTable& t) {
  auto get = [&](const std::string& sec) -> std::optional<Period> {
    auto a = toml_string(t, sec, "start");
    auto b = toml_string(t, sec, "end");
    if (!a && !b) return std::nullopt;
    require(a && b, "period [" + sec + "] needs both start and end");
    return Period{parse_iso8601(*a), parse_iso8601(*b)};
  };
  PeriodSpec p;
  auto pre = get("pre");
  auto during = get("during");
  require(pre && during, "periods need [pre] and [during] sections");
  p.pre = *pre;
  p.during = *during;
  p.post = get("post");
  p.validate();
  return p;
}

PeriodSpec read_periods(const fs::path& path) {
  try {
    return periods_from_toml(read_toml(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string periods_toml(const PeriodSpec& p) {
  std::string s;
  auto sec = [&](const char* name, const Period& q) {
    s += std::string("[") + name + "]\nstart = \"" + format_iso8601(q.start) + "\"\nend = \"" +
         format_iso8601(q.end) + "\"\n\n";
  };
  sec("pre", p.pre);
  sec("during", p.during);
  if (p.post) sec("post", *p.post);
  return s;
}

Json to_json(const PeriodSpec& p) {
  Json j;
  j["pre"] = {{"start", format_iso8601(p.pre.start)}, {"end", format_iso8601(p.pre.end)}};
  j["during"] = {{"start", format_iso8601(p.during.start)}, {"end", format_iso8601(p.during.end)}};
  if (p.post) j["post"] = {{"start", format_iso8601(p.post->start)}, {"end", format_iso8601(p.post->end)}};
  return j;
}

// ---- graph ----

InteractionGraph read_edges_csv(const fs::path& path) {
  CsvTable t = read_csv(path);
  int cs = t.column("src"), cd = t.column("dst"), cw = t.column("weight");
  require(cs >= 0 && cd >= 0, path.string() + ": header must contain src,dst[,weight]");
  std::vector<std::tuple<std::string, std::string, std::int64_t>> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    std::int64_t w = cw >= 0 && !f[cw].empty() ? parse_int(f[cw], where(path, t.line[r])) : 1;
    if (w < 1) throw ValidationError(where(path, t.line[r]) + "weight must be >= 1");
    if (f[cs].empty() || f[cd].empty()) throw ValidationError(where(path, t.line[r]) + "empty user id");
    rows.emplace_back(f[cs], f[cd], w);
  }
  require(!rows.empty(), path.string() + ": no edges");
  return InteractionGraph::from_weighted_edges(rows);
}

std::vector<InteractionEvent> read_interactions_jsonl(const fs::path& path) {
  std::vector<InteractionEvent> out;
  for_each_jsonl(path, [&](const Json& j, std::size_t) {
    InteractionEvent e;
    e.src = id_field(j, "src");
    e.dst = id_field(j, "dst");
    if (j.contains("ts")) e.ts = ts_field(j["ts"]);
    out.push_back(std::move(e));
  });
  return out;
}

InteractionGraph read_graph(const fs::path& path) {
  if (path.extension() == ".jsonl") {
    auto events = read_interactions_jsonl(path);
    return build_graph(events);
  }
  return read_edges_csv(path);
}

void write_edges_csv(const fs::path& path, const InteractionGraph& g) {
  std::string s = "src,dst,weight\n";
  for (const auto& e : g.edges())
    s += g.nodes().id(e.src) + "," + g.nodes().id(e.dst) + "," + std::to_string(e.weight) + "\n";
  write_text(path, s);
}

// ---- clusters and assignment ----

void write_clusters_csv(const fs::path& path, const ClusterAssignment& c) {
  std::string s = "user_id,cluster_id,is_centroid\n";
  for (std::size_t i = 0; i < c.num_nodes(); ++i)
    s += c.nodes.id(static_cast<int>(i)) + "," + std::to_string(c.cluster_of[i]) + "," +
         (c.is_centroid(static_cast<int>(i)) ? "1" : "0") + "\n";
  write_text(path, s);
}

namespace {
bool parse_flag(const std::string& s, const std::string& ctx) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false" || s.empty()) return false;
  throw ValidationError(ctx + "expected 0/1, got '" + s + "'");
}
}  // namespace

ClusterAssignment read_clusters_csv(const fs::path& path) {
  CsvTable t = read_csv(path);
  int cu = t.column("user_id"), cc = t.column("cluster_id"), cz = t.column("is_centroid");
  require(cu >= 0 && cc >= 0, path.string() + ": header must contain user_id,cluster_id");
  std::vector<std::tuple<std::string, std::int64_t, bool>> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    std::string ctx = where(path, t.line[r]);
    rows.emplace_back(f[cu], parse_int(f[cc], ctx), cz >= 0 && parse_flag(f[cz], ctx));
  }
  require(!rows.empty(), path.string() + ": no rows");
  try {
    return make_clusters(rows);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_assignment_csv(const fs::path& path, const ClusterAssignment& c, const Assignment& a) {
  std::string s = "user_id,cluster_id,cluster_bit,flip,assigned\n";
  for (std::size_t i = 0; i < c.num_nodes(); ++i) {
    int k = c.cluster_of[i];
    s += c.nodes.id(static_cast<int>(i)) + "," + std::to_string(k) + "," +
         std::to_string(static_cast<int>(a.cluster_bits[k])) + "," + std::to_string(static_cast<int>(a.flips[i])) +
         "," + std::to_string(static_cast<int>(a.z[i])) + "\n";
  }
  write_text(path, s);
}

AssignmentFile read_assignment_csv(const fs::path& path) {
  CsvTable t = read_csv(path);
  int cu = t.column("user_id"), cc = t.column("cluster_id"), cb = t.column("cluster_bit"), cf = t.column("flip"),
      ca = t.column("assigned");
  require(cu >= 0 && cc >= 0 && ca >= 0, path.string() + ": header must contain user_id,cluster_id,...,assigned");
  std::vector<std::tuple<std::string, std::int64_t, bool>> rows;
  std::vector<std::string> ids;
  std::vector<int> z, bit, flip;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    std::string ctx = where(path, t.line[r]);
    rows.emplace_back(f[cu], parse_int(f[cc], ctx), false);
    ids.push_back(f[cu]);
    z.push_back(parse_flag(f[ca], ctx));
    bit.push_back(cb >= 0 ? parse_flag(f[cb], ctx) : z.back());
    flip.push_back(cf >= 0 ? parse_flag(f[cf], ctx) : 0);
    if (bit.back() ^ flip.back() ^ z.back())
      throw ValidationError(ctx + "assigned must equal cluster_bit xor flip");
  }
  require(!rows.empty(), path.string() + ": no rows");
  AssignmentFile out;
  out.clusters = make_clusters(rows);
  const std::size_t n = out.clusters.num_nodes();
  out.assignment.z.assign(n, 0);
  out.assignment.flips.assign(n, 0);
  out.assignment.cluster_bits.assign(static_cast<std::size_t>(out.clusters.num_clusters()), 0);
  std::vector<int> seen(out.assignment.cluster_bits.size(), -1);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    int i = out.clusters.nodes.at(ids[r]);
    int k = out.clusters.cluster_of[i];
    out.assignment.z[i] = static_cast<std::uint8_t>(z[r]);
    out.assignment.flips[i] = static_cast<std::uint8_t>(flip[r]);
    if (seen[k] >= 0 && seen[k] != bit[r])
      throw ValidationError(where(path, t.line[r]) + "conflicting cluster_bit within cluster");
    seen[k] = bit[r];
    out.assignment.cluster_bits[k] = static_cast<std::uint8_t>(bit[r]);
  }
  return out;
}

// ---- posts ----

std::vector<PostEvent> read_posts_jsonl(const fs::path& path) {
  std::vector<PostEvent> out;
  for_each_jsonl(path, [&](const Json& j, std::size_t) {
    PostEvent p;
    p.user_id = id_field(j, "user_id");
    p.post_id = id_field(j, "post_id");
    p.ts = ts_field(j.at("ts"));
    std::string kind = j.value("kind", std::string("original"));
    if (kind == "original") {
      p.kind = PostKind::kOriginal;
    } else if (kind == "repost") {
      p.kind = PostKind::kRepost;
    } else {
      throw ValidationError("kind must be 'original' or 'repost'");
    }
    if (j.contains("source_user_id") && !j["source_user_id"].is_null()) p.source_user_id = id_field(j, "source_user_id");
    if (j.contains("source_post_id") && !j["source_post_id"].is_null()) p.source_post_id = id_field(j, "source_post_id");
    p.hate_score = j.at("hate_score").get<double>();
    if (j.contains("source_followers") && !j["source_followers"].is_null())
      p.source_followers = j["source_followers"].get<double>();
    if (j.contains("source_statuses") && !j["source_statuses"].is_null())
      p.source_statuses = j["source_statuses"].get<double>();
    if (j.contains("text_tokens")) p.text_tokens = j["text_tokens"].get<std::vector<std::string>>();
    if (j.contains("text")) {
      auto toks = tokenize(j["text"].get<std::string>());
      p.text_tokens.insert(p.text_tokens.end(), toks.begin(), toks.end());
    }
    validate_post(p);
    out.push_back(std::move(p));
  });
  return out;
}

Json to_json(const PostEvent& p) {
  Json j;
  j["user_id"] = p.user_id;
  j["post_id"] = p.post_id;
  j["ts"] = p.ts;
  j["kind"] = p.is_repost() ? "repost" : "original";
  if (p.is_repost()) {
    j["source_user_id"] = p.source_user_id;
    if (!p.source_post_id.empty()) j["source_post_id"] = p.source_post_id;
  }
  j["hate_score"] = p.hate_score;
  if (p.source_followers) j["source_followers"] = *p.source_followers;
  if (p.source_statuses) j["source_statuses"] = *p.source_statuses;
  if (!p.text_tokens.empty()) j["text_tokens"] = p.text_tokens;
  return j;
}

void write_posts_jsonl(const fs::path& path, const std::vector<PostEvent>& posts) {
  std::string s;
  for (const auto& p : posts) s += to_json(p).dump() + "\n";
  write_text(path, s);
}

// ---- panel ----

fs::path meta_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

namespace {
std::string bucket_column(const MonthBucket& b) { return std::string(period_label(b.period)) + ":" + b.label(); }
const char* kPanelFixed[] = {"user_id",     "y_pre",      "y_during",  "y_post",
                             "delta_during", "delta_post", "pre_posts", "pre_hate_share"};
}  // namespace

void write_panel(const fs::path& csv_path, const OutcomePanel& panel, const PeriodSpec& periods) {
  std::string s;
  for (const char* h : kPanelFixed) s += std::string(h) + ",";
  for (const auto& b : panel.buckets) s += bucket_column(b) + ",";
  s.back() = '\n';
  const bool adj = panel.adjusted;
  for (std::size_t i = 0; i < panel.num_users(); ++i) {
    s += panel.users.id(static_cast<int>(i));
    double vals[] = {panel.y_pre[i],
                     panel.y_during[i],
                     panel.has_post ? panel.y_post[i] : std::nan(""),
                     adj ? panel.delta_during[i] : std::nan(""),
                     adj && panel.has_post ? panel.delta_post[i] : std::nan(""),
                     panel.pre_posts[i],
                     panel.pre_hate_share[i]};
    for (double v : vals) s += "," + fmt_double(v);
    for (std::size_t b = 0; b < panel.buckets.size(); ++b) s += "," + fmt_double(panel.raw[i][b]);
    s += "\n";
  }
  write_text(csv_path, s);

  Json meta;
  meta["measure"] = panel.measure_label;
  meta["aggregation"] = panel.aggregation == PeriodAggregation::kMonthlyLogMean ? "monthly_log_mean" : "log_period_total";
  meta["adjusted"] = panel.adjusted;
  meta["alpha_during"] = number_or_null(panel.alpha_during);
  meta["alpha_post"] = panel.has_post ? number_or_null(panel.alpha_post) : Json(nullptr);
  meta["periods"] = to_json(periods);
  meta["users"] = panel.num_users();
  Json cols = Json::array();
  for (const char* h : kPanelFixed) cols.push_back(h);
  for (const auto& b : panel.buckets) cols.push_back(bucket_column(b));
  meta["columns"] = cols;
  write_json(meta_path(csv_path), meta);
}

PanelFile read_panel(const fs::path& csv_path) {
  PanelFile out;
  Json meta;
  try {
    meta = Json::parse(read_text(meta_path(csv_path)));
  } catch (const Json::exception& e) {
    throw ValidationError(meta_path(csv_path).string() + ": " + e.what());
  }
  out.meta = meta;
  TomlTable t;
  for (const char* sec : {"pre", "during", "post"}) {
    if (!meta["periods"].contains(sec)) continue;
    t[sec]["start"] = "\"" + meta["periods"][sec]["start"].get<std::string>() + "\"";
    t[sec]["end"] = "\"" + meta["periods"][sec]["end"].get<std::string>() + "\"";
  }
  out.periods = periods_from_toml(t);

  CsvTable csv = read_csv(csv_path);
  OutcomePanel& p = out.panel;
  p.buckets = month_buckets(out.periods);
  p.has_post = out.periods.post.has_value();
  p.measure_label = meta.value("measure", std::string());
  p.aggregation = meta.value("aggregation", std::string()) == "log_period_total" ? PeriodAggregation::kLogPeriodTotal
                                                                                   : PeriodAggregation::kMonthlyLogMean;
  p.adjusted = meta.value("adjusted", false);
  if (p.adjusted) {
    p.alpha_during = meta["alpha_during"].is_number() ? meta["alpha_during"].get<double>() : std::nan("");
    if (p.has_post) p.alpha_post = meta["alpha_post"].is_number() ? meta["alpha_post"].get<double>() : std::nan("");
  }
  std::vector<int> fixed;
  for (const char* h : kPanelFixed) {
    int c = csv.column(h);
    require(c >= 0, csv_path.string() + ": missing column " + h);
    fixed.push_back(c);
  }
  std::vector<int> bcol;
  for (const auto& b : p.buckets) {
    int c = csv.column(bucket_column(b));
    require(c >= 0, csv_path.string() + ": missing column " + bucket_column(b));
    bcol.push_back(c);
  }
  std::vector<std::string> ids;
  for (const auto& r : csv.rows) ids.push_back(r[fixed[0]]);
  p.users = NodeIndex(ids);
  require(p.users.size() == ids.size(), csv_path.string() + ": duplicate user_id");
  const std::size_t n = ids.size();
  p.raw.assign(n, std::vector<double>(p.buckets.size(), 0.0));
  for (auto* v : {&p.y_pre, &p.y_during, &p.y_post, &p.delta_during, &p.delta_post, &p.pre_posts, &p.pre_hate_share})
    v->assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& f = csv.rows[r];
    std::string ctx = where(csv_path, csv.line[r]);
    std::size_t i = static_cast<std::size_t>(p.users.at(ids[r]));
    std::vector<double>* dst[] = {&p.y_pre, &p.y_during, &p.y_post, &p.delta_during,
                                  &p.delta_post, &p.pre_posts, &p.pre_hate_share};
    for (int k = 0; k < 7; ++k) (*dst[k])[i] = parse_double(f[fixed[k + 1]], ctx);
    for (std::size_t b = 0; b < bcol.size(); ++b) p.raw[i][b] = parse_double(f[bcol[b]], ctx);
  }
  if (!p.has_post) {
    p.y_post.clear();
    p.delta_post.clear();
  }
  if (!p.adjusted) {
    p.delta_during.clear();
    p.delta_post.clear();
  }
  return out;
}

}  // namespace netx::io
