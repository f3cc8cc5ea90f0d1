#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "netx/design.hpp"
#include "netx/netgraph.hpp"
#include "netx/outcomes.hpp"
#include "netx/report.hpp"

namespace netx::io {

namespace fs = std::filesystem;

// "2023-08-01", "2023-08-01T12:00:00Z", "2023-08-01T12:00:00+01:00".
Timestamp parse_iso8601(std::string_view text);
std::string format_iso8601(Timestamp ts);

// Shortest round-trip formatting of doubles; NaN prints as "nan".
std::string fmt_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line;  // source line of each row
  int column(std::string_view name) const;  // -1 when absent
};

// Comma-separated, optional double quotes, header required.
CsvTable read_csv(const fs::path& path);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, std::string_view text);
void write_json(const fs::path& path, const Json& j);

// FNV-1a 64 of a file's bytes, as 16 hex digits.
std::string file_hash(const fs::path& path);

// ---- TOML subset: [section] headers, key = "string" | number | bool. ----
using TomlTable = std::map<std::string, std::map<std::string, std::string>>;  // section -> key -> raw value
TomlTable read_toml(const fs::path& path);
TomlTable parse_toml(std::string_view text, const std::string& origin = "<string>");
std::optional<std::string> toml_string(const TomlTable& t, const std::string& section, const std::string& key);
std::optional<double> toml_number(const TomlTable& t, const std::string& section, const std::string& key);
std::optional<bool> toml_bool(const TomlTable& t, const std::string& section, const std::string& key);

// [pre] / [during] / optional [post] sections with start and end keys.
PeriodSpec read_periods(const fs::path& path);
PeriodSpec periods_from_toml(const TomlTable& t);
std::string periods_toml(const PeriodSpec& p);
Json to_json(const PeriodSpec& p);

// ---- graph ----
InteractionGraph read_edges_csv(const fs::path& path);
std::vector<InteractionEvent> read_interactions_jsonl(const fs::path& path);
// Picks the reader from the extension (.jsonl or .csv).
InteractionGraph read_graph(const fs::path& path);
void write_edges_csv(const fs::path& path, const InteractionGraph& g);

// ---- clusters and assignment ----
void write_clusters_csv(const fs::path& path, const ClusterAssignment& c);
ClusterAssignment read_clusters_csv(const fs::path& path);

struct AssignmentFile {
  ClusterAssignment clusters;
  Assignment assignment;  // indexed like clusters.nodes
};
void write_assignment_csv(const fs::path& path, const ClusterAssignment& c, const Assignment& a);
AssignmentFile read_assignment_csv(const fs::path& path);

// ---- posts ----
std::vector<PostEvent> read_posts_jsonl(const fs::path& path);
void write_posts_jsonl(const fs::path& path, const std::vector<PostEvent>& posts);
Json to_json(const PostEvent& p);

// ---- panel ----
// Columns: user_id, y_pre, y_during, y_post, delta_during, delta_post,
// pre_posts, pre_hate_share, then one raw column per month bucket named
// "<period>:<YYYY-MM>".
void write_panel(const fs::path& csv_path, const OutcomePanel& panel, const PeriodSpec& periods);
struct PanelFile {
  OutcomePanel panel;
  PeriodSpec periods;
  Json meta;
};
// Reads panel.csv and the sibling panel.meta.json.
PanelFile read_panel(const fs::path& csv_path);
fs::path meta_path(const fs::path& csv_path);

}  // namespace netx::io
