#include "distflow/phase1.hpp"

#include <algorithm>
#include <tuple>

namespace distflow {

Phase1Context::Phase1Context(const TraceSet& traces, const FirstMsgMap& first_msgs)
    : traces_(traces), first_msgs_(first_msgs), index_(traces) {
  std::set<MethodId> with_method_events;
  for (const auto& t : traces) {
    for (const auto& e : t.events) {
      if (is_method_event(e.kind)) with_method_events.insert(e.method);
    }
  }
  for (auto& [m, span] : method_spans(traces)) {
    if (with_method_events.count(m)) spans_.emplace(m, span);
  }
}

DependenceSet Phase1Context::method_ds(const MethodId& q, RemoteRule rule) const {
  DependenceSet ds;
  ds.root = q;
  auto qs = spans_.find(q);
  if (qs == spans_.end()) return ds;
  const auto& qspan = qs->second;

  std::vector<std::size_t> frontier;
  if (rule == RemoteRule::happens_before) frontier = index_.reach_from(qspan.first_entry);

  for (const auto& [m, span] : spans_) {
    if (m.process == q.process) {
      if (qspan.fe <= span.lr) ds.members.insert(m);
      continue;
    }
    if (rule == RemoteRule::happens_before) {
      auto t = span.last_return.trace;
      if (frontier[t] != kUnreached && span.last_return.index >= frontier[t]) ds.members.insert(m);
    } else {
      auto fm = first_msgs_.get(q.process, m.process);
      if (fm && qspan.fe <= *fm && *fm <= span.lr) ds.members.insert(m);
    }
  }
  return ds;
}

DependenceSet method_ds(const MethodId& q, const TraceSet& traces, const FirstMsgMap& first_msgs, RemoteRule rule) {
  return Phase1Context(traces, first_msgs).method_ds(q, rule);
}

Phase1Result method_level_paths(const TraceSet& traces, const FirstMsgMap& first_msgs,
                                const std::set<MethodId>& source_methods, const std::set<MethodId>& sink_methods,
                                const Phase1Options& options) {
  Phase1Result result;
  Phase1Context ctx(traces, first_msgs);
  const auto& spans = ctx.executed();
  std::set<MethodFlowPath> paths;
  const auto limit = std::max<std::size_t>(options.path_limit, 2);

  for (const auto& q : source_methods) {
    if (!spans.count(q)) continue;
    auto ds = ctx.method_ds(q, options.remote);
    // one path per reachable sink: q, the members that may precede the sink in
    // (fe, lr) order, then the sink itself
    std::vector<MethodId> middle(ds.members.begin(), ds.members.end());
    std::sort(middle.begin(), middle.end(), [&](const MethodId& a, const MethodId& b) {
      const auto& sa = spans.at(a);
      const auto& sb = spans.at(b);
      return std::tie(sa.fe, sa.lr, a) < std::tie(sb.fe, sb.lr, b);
    });
    for (const auto& t : ds.members) {
      if (!sink_methods.count(t)) continue;
      const auto lr_t = spans.at(t).lr;
      MethodFlowPath path;
      path.methods.push_back(q);
      result.path_methods.insert(q);
      for (const auto& m : middle) {
        if (m == q || m == t || spans.at(m).fe > lr_t) continue;
        // a cut path is only shortened in the report
        result.path_methods.insert(m);
        if (path.methods.size() + 1 >= limit) {
          path.truncated = true;
          continue;
        }
        path.methods.push_back(m);
      }
      // a flow may leave the source method and come back into it
      if (t != q || path.methods.size() > 1) path.methods.push_back(t);
      result.path_methods.insert(t);
      result.truncated = result.truncated || path.truncated;
      paths.insert(std::move(path));
    }
    result.ds.emplace(q, std::move(ds));
  }
  result.paths.assign(paths.begin(), paths.end());
  return result;
}

std::set<MethodId> enclosing_methods(const StaticDepGraph& graph, const std::vector<std::string>& designators) {
  std::set<MethodId> out;
  for (const auto& d : designators) {
    if (auto m = parse_method_designator(d)) out.insert(*m);
  }
  for (auto s : resolve_stmts(graph, designators)) out.insert(graph.method_of(s));
  return out;
}

bool satisfies_order(const MethodFlowPath& path, const std::map<MethodId, MethodSpan>& spans) {
  for (std::size_t j = 0; j < path.methods.size(); ++j) {
    auto sj = spans.find(path.methods[j]);
    if (sj == spans.end()) return false;
    for (std::size_t i = 0; i < j; ++i) {
      auto si = spans.find(path.methods[i]);
      if (si == spans.end() || si->second.fe > sj->second.lr) return false;
    }
  }
  return true;
}

std::string format_path(const MethodFlowPath& path) {
  std::string out = "path level=method";
  for (std::size_t i = 0; i < path.methods.size(); ++i) {
    out += i == 0 ? " " : " -> ";
    out += path.methods[i].str();
  }
  if (path.truncated) out += " truncated";
  return out;
}

}  // namespace distflow
