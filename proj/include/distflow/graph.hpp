#pragma once

// Static dependence graph with per-component ICFG, relevance filtering and
// coverage pruning.

#include <compare>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "distflow/trace.hpp"

namespace distflow {

enum class EdgeKind : std::uint8_t { intra_data, intra_control, inter_adjacent, inter_posterior };

std::string_view to_string(EdgeKind kind);
std::optional<EdgeKind> parse_edge_kind(std::string_view text);
inline bool is_interprocedural(EdgeKind k) {
  return k == EdgeKind::inter_adjacent || k == EdgeKind::inter_posterior;
}

/// `to` depends on `from`; information flows from -> to.
struct DepEdge {
  StmtId from = 0;
  StmtId to = 0;
  EdgeKind kind = EdgeKind::intra_data;

  friend auto operator<=>(const DepEdge&, const DepEdge&) = default;
};

struct StaticDepGraph {
  std::map<StmtId, MethodId> nodes;
  std::set<DepEdge> edges;
  std::set<std::pair<StmtId, StmtId>> cfg;  // ICFG successor relation
  std::set<StmtId> entries;
  std::map<StmtId, BranchId> guards;         // statement runs iff this branch edge was taken
  std::map<StmtId, std::string> api_calls;   // message API callsites

  void add_node(StmtId id, MethodId method);
  /// Throws MalformedTrace when an endpoint is unknown or the kind does not
  /// match the endpoints' methods.
  void add_edge(StmtId from, StmtId to, EdgeKind kind);

  const MethodId& method_of(StmtId id) const;
  std::set<MethodId> methods() const;
  std::map<MethodId, std::vector<StmtId>> stmts_by_method() const;

  friend bool operator==(const StaticDepGraph&, const StaticDepGraph&) = default;
};

void write_graph(std::ostream& out, const StaticDepGraph& graph);
StaticDepGraph read_graph(std::istream& in);

/// One graph file per (context, flow) sensitivity pair.
struct GraphVariant {
  bool ctx = true;
  bool flow = true;
  std::string file;
};

void write_graph_manifest(std::ostream& out, const std::vector<GraphVariant>& variants);
std::vector<GraphVariant> read_graph_manifest(std::istream& in);
/// Loads every variant listed in `dir/graphs.txt`, keyed by (ctx, flow).
std::map<std::pair<bool, bool>, StaticDepGraph> load_graph_variants(const std::filesystem::path& dir);

struct SourceSinkConfig {
  std::vector<std::string> sources;  // statement ids or p<proc>.<Class>.<method>
  std::vector<std::string> sinks;
  std::set<std::string> send_apis;
  std::set<std::string> recv_apis;
};

SourceSinkConfig read_source_sink(std::istream& in);
void write_source_sink(std::ostream& out, const SourceSinkConfig& cfg);

/// Statements named by designators; a method designator stands for all its
/// statements. Unknown designators are ignored.
std::set<StmtId> resolve_stmts(const StaticDepGraph& graph, const std::vector<std::string>& designators);

std::set<StmtId> send_callsites(const StaticDepGraph& graph, const SourceSinkConfig& cfg);
std::set<StmtId> recv_callsites(const StaticDepGraph& graph, const SourceSinkConfig& cfg);

/// Methods touched by both the forward ICFG closure of sources (plus receive
/// callsites) and the backward closure of sinks (plus send callsites).
std::set<MethodId> relevant_methods(const StaticDepGraph& graph, const SourceSinkConfig& cfg);

/// Restriction to the statements of `methods`.
StaticDepGraph partial_graph(const StaticDepGraph& graph, const std::set<MethodId>& methods);

/// Keeps covered statements and the edges between them.
StaticDepGraph prune_by_coverage(const StaticDepGraph& graph, const std::set<StmtId>& covered);

/// Union of stmt_cover events and statements whose guard branch was taken.
std::set<StmtId> statement_coverage(const StaticDepGraph& graph, const TraceSet& traces);

}  // namespace distflow
