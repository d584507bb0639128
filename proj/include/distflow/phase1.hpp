#pragma once

// Method-level information flow paths from first-entry / last-returned-into
// timestamps and message causality.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "distflow/graph.hpp"
#include "distflow/trace.hpp"

namespace distflow {

enum class RemoteRule {
  happens_before,  // m in P_j joins when fe(q) happens-before lr(m), directly or through relays
  first_message,   // literal per-pair rule: fe(q) <= p2fm[i][j] <= lr(m)
};

struct DependenceSet {
  MethodId root;
  std::set<MethodId> members;
};

struct MethodFlowPath {
  std::vector<MethodId> methods;
  bool truncated = false;

  friend auto operator<=>(const MethodFlowPath&, const MethodFlowPath&) = default;
};

struct Phase1Options {
  RemoteRule remote = RemoteRule::happens_before;
  std::size_t path_limit = 16;
};

struct Phase1Result {
  std::vector<MethodFlowPath> paths;  // sorted, unique
  std::map<MethodId, DependenceSet> ds;  // per executed source method
  std::set<MethodId> path_methods;       // every method on some path, including cut ones
  bool truncated = false;
};

/// Spans and causality of a trace set, shared by many dependence-set queries.
class Phase1Context {
 public:
  Phase1Context(const TraceSet& traces, const FirstMsgMap& first_msgs);

  /// Methods with at least one entry or returned-into event.
  const std::map<MethodId, MethodSpan>& executed() const { return spans_; }
  DependenceSet method_ds(const MethodId& q, RemoteRule rule = RemoteRule::happens_before) const;

 private:
  const TraceSet& traces_;
  const FirstMsgMap& first_msgs_;
  CausalIndex index_;
  std::map<MethodId, MethodSpan> spans_;
};

DependenceSet method_ds(const MethodId& q, const TraceSet& traces, const FirstMsgMap& first_msgs,
                        RemoteRule rule = RemoteRule::happens_before);

Phase1Result method_level_paths(const TraceSet& traces, const FirstMsgMap& first_msgs,
                                const std::set<MethodId>& source_methods, const std::set<MethodId>& sink_methods,
                                const Phase1Options& options = {});

/// Enclosing methods of the statements or methods named by designators.
std::set<MethodId> enclosing_methods(const StaticDepGraph& graph, const std::vector<std::string>& designators);

/// True iff fe(m_i) <= lr(m_j) for all i < j.
bool satisfies_order(const MethodFlowPath& path, const std::map<MethodId, MethodSpan>& spans);

std::string format_path(const MethodFlowPath& path);

}  // namespace distflow
