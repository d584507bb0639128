#pragma once

// Statement-level flow paths: activated dependence graph, coverage pruning,
// per-process segment discovery and interprocess splicing. Also hosts the
// end-to-end pipeline in its three trace-consumption modes.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "distflow/graph.hpp"
#include "distflow/phase1.hpp"
#include "distflow/trace.hpp"

namespace distflow {

struct DynDepGraph {
  std::map<StmtId, MethodId> nodes;
  std::set<std::pair<StmtId, StmtId>> edges;

  friend bool operator==(const DynDepGraph&, const DynDepGraph&) = default;
};

enum class SegmentKind { intra, sofps, refps, sifps, spliced };
std::string_view to_string(SegmentKind kind);

struct StmtFlowPath {
  std::vector<StmtId> stmts;
  SegmentKind kind = SegmentKind::intra;

  friend auto operator<=>(const StmtFlowPath&, const StmtFlowPath&) = default;
};

struct InletOutletIndex {
  std::set<StmtId> inlets;   // receive callsites
  std::set<StmtId> outlets;  // send callsites
};

/// Which methods ran where in ES, and which method events are adjacent.
class ActivationIndex {
 public:
  explicit ActivationIndex(const GlobalOrder& es);

  bool appears(const MethodId& m) const { return first_.count(m) > 0; }
  /// Some event of m2 immediately follows some event of m1 in their process's
  /// entry/returned-into subsequence.
  bool adjacent(const MethodId& m1, const MethodId& m2) const { return adjacent_.count({m1, m2}) > 0; }
  /// Some event of m2 comes after some event of m1.
  bool posterior(const MethodId& m1, const MethodId& m2) const;
  bool activates(const StaticDepGraph& g, const DepEdge& e) const;

 private:
  std::map<MethodId, std::size_t> first_, last_;
  std::set<std::pair<MethodId, MethodId>> adjacent_;
};

/// Activated subgraph grown from s (and inlets), keeping only what reaches t
/// (or an outlet). Empty when s or t is missing or never executed.
DynDepGraph build_ddg(const StaticDepGraph& sdg, StmtId s, StmtId t, const GlobalOrder& es,
                      const InletOutletIndex& io = {});
DynDepGraph build_ddg(const StaticDepGraph& sdg, StmtId s, StmtId t, const ActivationIndex& act,
                      const InletOutletIndex& io);

DynDepGraph prune_ddg(const DynDepGraph& g, const std::set<StmtId>& coverage);

struct PathLimits {
  std::size_t max_stmts = 256;
  std::size_t max_paths = 20000;
  std::size_t max_steps = 2'000'000;  // DFS expansions per search
};

struct PathSet {
  std::set<StmtFlowPath> paths;
  bool truncated = false;
};

/// Simple paths from In to Out over nodes whose methods are in `allowed`.
PathSet find_paths(const DynDepGraph& g, const std::set<StmtId>& in, const std::set<StmtId>& out,
                   const std::set<MethodId>& allowed, SegmentKind kind, const PathLimits& limits = {});

/// No other inlet/outlet event between a send at `outlet` and a receive at
/// `inlet`, judged over the events of that channel (or over all of ES in
/// strict mode).
class JunctionIndex {
 public:
  JunctionIndex(const GlobalOrder& es, bool strict);
  bool joins(StmtId outlet, ProcessId from, StmtId inlet, ProcessId to) const;

 private:
  const GlobalOrder& es_;
  bool strict_;
  std::map<std::pair<StmtId, ProcessId>, std::vector<std::size_t>> sends_;  // (stmt, peer) -> ES positions
  std::map<std::pair<StmtId, ProcessId>, std::vector<std::size_t>> recvs_;
  mutable std::map<std::tuple<StmtId, ProcessId, StmtId, ProcessId>, bool> memo_;
};

struct SegmentSet {
  std::set<StmtFlowPath> sofps;
  std::map<ProcessId, std::set<StmtFlowPath>> refps;
  std::set<StmtFlowPath> sifps;
};

/// SOFPS . REFPS* . SIFPS concatenations whose junctions hold, visiting each
/// process at most once.
PathSet splice_segments(const SegmentSet& segments, const StaticDepGraph& g, const JunctionIndex& junctions,
                        const PathLimits& limits = {});

struct Phase2Options {
  PathLimits limits;
  bool strict_splice = false;
};

struct Phase2Result {
  std::set<StmtFlowPath> intra;
  std::set<StmtFlowPath> inter;
  bool truncated = false;
};

Phase2Result phase2(const StaticDepGraph& sdg, const std::set<MethodId>& path_methods, const TraceSet& traces,
                    const std::set<StmtId>& coverage, const SourceSinkConfig& cfg, const Phase2Options& options = {});

std::string format_path(const StmtFlowPath& path);

// ---------------------------------------------------------------------------

enum class PipelineMode { default_mode, sim, mul };
std::optional<PipelineMode> parse_pipeline_mode(std::string_view text);

struct FlowOptions {
  PipelineMode mode = PipelineMode::default_mode;
  Phase1Options phase1;
  Phase2Options phase2;
};

struct FlowReport {
  Phase1Result phase1;
  Phase2Result phase2;
  std::size_t events_phase1 = 0;  // events each phase consumed
  std::size_t events_phase2 = 0;
};

/// Runs both phases. `sdg` is the graph used for relevance and statement
/// paths (context-insensitive, flow-sensitive in the standard setup).
FlowReport run_flowpaths(const TraceSet& traces, const StaticDepGraph& sdg, const SourceSinkConfig& cfg,
                         const FlowOptions& options = {});

/// Keeps events of `methods` plus every send/recv event.
TraceSet filter_methods(const TraceSet& traces, const std::set<MethodId>& methods);
/// Keeps only first-entry and last-returned-into events per method, plus
/// send/recv events.
TraceSet first_last_only(const TraceSet& traces);

}  // namespace distflow
