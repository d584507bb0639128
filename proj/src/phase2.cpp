#include "distflow/phase2.hpp"

#include <algorithm>
#include <deque>

#include "distflow/error.hpp"

namespace distflow {

std::string_view to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::intra: return "intra";
    case SegmentKind::sofps: return "sofps";
    case SegmentKind::refps: return "refps";
    case SegmentKind::sifps: return "sifps";
    case SegmentKind::spliced: return "spliced";
  }
  return "?";
}

ActivationIndex::ActivationIndex(const GlobalOrder& es) {
  std::map<ProcessId, const MethodId*> previous;  // last method event per process
  for (std::size_t i = 0; i < es.merged.size(); ++i) {
    const auto& e = es.merged[i];
    first_.emplace(e.method, i);
    last_[e.method] = i;
    if (!is_method_event(e.kind)) continue;
    auto& prev = previous[e.process()];
    if (prev) adjacent_.emplace(*prev, e.method);
    prev = &e.method;
  }
}

bool ActivationIndex::posterior(const MethodId& m1, const MethodId& m2) const {
  auto a = first_.find(m1);
  auto b = last_.find(m2);
  return a != first_.end() && b != last_.end() && b->second > a->second;
}

bool ActivationIndex::activates(const StaticDepGraph& g, const DepEdge& e) const {
  const auto& m1 = g.method_of(e.from);
  const auto& m2 = g.method_of(e.to);
  switch (e.kind) {
    case EdgeKind::intra_data:
    case EdgeKind::intra_control: return appears(m1);
    case EdgeKind::inter_adjacent: return adjacent(m1, m2);
    case EdgeKind::inter_posterior: return posterior(m1, m2);
  }
  return false;
}

namespace {

std::set<StmtId> reach(const std::set<StmtId>& seeds, const std::map<StmtId, std::vector<StmtId>>& adj) {
  std::set<StmtId> seen(seeds.begin(), seeds.end());
  std::deque<StmtId> work(seeds.begin(), seeds.end());
  while (!work.empty()) {
    auto n = work.front();
    work.pop_front();
    auto it = adj.find(n);
    if (it == adj.end()) continue;
    for (auto m : it->second) {
      if (seen.insert(m).second) work.push_back(m);
    }
  }
  return seen;
}

}  // namespace

DynDepGraph build_ddg(const StaticDepGraph& sdg, StmtId s, StmtId t, const ActivationIndex& act,
                      const InletOutletIndex& io) {
  DynDepGraph out;
  if (!sdg.nodes.count(s) || !sdg.nodes.count(t)) return out;
  if (!act.appears(sdg.method_of(s)) || !act.appears(sdg.method_of(t))) return out;

  auto live = [&](StmtId n) { return act.appears(sdg.method_of(n)); };
  std::map<StmtId, std::vector<StmtId>> fwd, bwd;
  std::vector<std::pair<StmtId, StmtId>> active;
  for (const auto& e : sdg.edges) {
    if (!live(e.from) || !live(e.to) || !act.activates(sdg, e)) continue;
    fwd[e.from].push_back(e.to);
    bwd[e.to].push_back(e.from);
    active.emplace_back(e.from, e.to);
  }
  std::set<StmtId> starts{s}, ends{t};
  for (auto n : io.inlets) {
    if (sdg.nodes.count(n) && live(n)) starts.insert(n);
  }
  for (auto n : io.outlets) {
    if (sdg.nodes.count(n) && live(n)) ends.insert(n);
  }
  auto forward = reach(starts, fwd);
  auto backward = reach(ends, bwd);
  for (auto n : forward) {
    if (backward.count(n)) out.nodes.emplace(n, sdg.method_of(n));
  }
  for (const auto& [a, b] : active) {
    if (out.nodes.count(a) && out.nodes.count(b)) out.edges.emplace(a, b);
  }
  return out;
}

DynDepGraph build_ddg(const StaticDepGraph& sdg, StmtId s, StmtId t, const GlobalOrder& es,
                      const InletOutletIndex& io) {
  return build_ddg(sdg, s, t, ActivationIndex(es), io);
}

DynDepGraph prune_ddg(const DynDepGraph& g, const std::set<StmtId>& coverage) {
  DynDepGraph out;
  for (const auto& [n, m] : g.nodes) {
    if (coverage.count(n)) out.nodes.emplace(n, m);
  }
  for (const auto& [a, b] : g.edges) {
    if (out.nodes.count(a) && out.nodes.count(b)) out.edges.emplace(a, b);
  }
  return out;
}

PathSet find_paths(const DynDepGraph& g, const std::set<StmtId>& in, const std::set<StmtId>& out,
                   const std::set<MethodId>& allowed, SegmentKind kind, const PathLimits& limits) {
  PathSet result;
  auto ok = [&](StmtId n) {
    auto it = g.nodes.find(n);
    return it != g.nodes.end() && allowed.count(it->second) > 0;
  };
  std::map<StmtId, std::vector<StmtId>> adj;
  for (const auto& [a, b] : g.edges) {
    if (ok(a) && ok(b)) adj[a].push_back(b);
  }

  std::vector<StmtId> path;
  std::set<StmtId> on_path;
  std::size_t steps = 0;
  auto stop = [&] {
    if (result.paths.size() >= limits.max_paths || steps >= limits.max_steps) {
      result.truncated = true;
      return true;
    }
    return false;
  };
  auto dfs = [&](auto&& self, StmtId n) -> void {
    if (stop()) return;
    ++steps;
    path.push_back(n);
    on_path.insert(n);
    if (out.count(n)) result.paths.insert(StmtFlowPath{path, kind});
    if (path.size() >= limits.max_stmts) {
      if (adj.count(n)) result.truncated = true;
    } else if (auto it = adj.find(n); it != adj.end()) {
      for (auto m : it->second) {
        if (!on_path.count(m)) self(self, m);
      }
    }
    on_path.erase(n);
    path.pop_back();
  };
  for (auto s : in) {
    if (ok(s)) dfs(dfs, s);
  }
  return result;
}

JunctionIndex::JunctionIndex(const GlobalOrder& es, bool strict) : es_(es), strict_(strict) {
  for (std::size_t i = 0; i < es.merged.size(); ++i) {
    const auto& e = es.merged[i];
    if (!e.stmt_id || !e.peer) continue;
    if (e.kind == EventKind::send) sends_[{*e.stmt_id, *e.peer}].push_back(i);
    if (e.kind == EventKind::recv) recvs_[{*e.stmt_id, *e.peer}].push_back(i);
  }
}

bool JunctionIndex::joins(StmtId outlet, ProcessId from, StmtId inlet, ProcessId to) const {
  auto key = std::make_tuple(outlet, from, inlet, to);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  bool holds = false;
  auto s = sends_.find({outlet, to});
  auto r = recvs_.find({inlet, from});
  if (s != sends_.end() && r != recvs_.end()) {
    const auto& sp = s->second;
    const auto& rp = r->second;
    if (strict_) {
      for (auto p : sp) {
        if (std::binary_search(rp.begin(), rp.end(), p + 1)) {
          holds = true;
          break;
        }
      }
    } else {
      // merge the two position lists; a send directly followed by a receive
      // in that subsequence means nothing else on this channel intervenes
      std::size_t a = 0, b = 0;
      bool last_was_send = false;
      while (a < sp.size() || b < rp.size()) {
        bool take_send = b >= rp.size() || (a < sp.size() && sp[a] < rp[b]);
        if (take_send) {
          last_was_send = true;
          ++a;
        } else {
          if (last_was_send) {
            holds = true;
            break;
          }
          last_was_send = false;
          ++b;
        }
      }
    }
  }
  memo_.emplace(key, holds);
  return holds;
}

PathSet splice_segments(const SegmentSet& segments, const StaticDepGraph& g, const JunctionIndex& junctions,
                        const PathLimits& limits) {
  PathSet result;
  auto proc = [&](StmtId n) { return g.method_of(n).process; };
  std::set<ProcessId> visited;
  std::vector<StmtId> chain;

  auto extend = [&](auto&& self, StmtId outlet) -> void {
    if (result.paths.size() >= limits.max_paths) {
      result.truncated = true;
      return;
    }
    const auto from = proc(outlet);
    auto fits = [&](const StmtFlowPath& seg) {
      auto inlet = seg.stmts.front();
      auto to = proc(inlet);
      return !visited.count(to) && junctions.joins(outlet, from, inlet, to);
    };
    auto append = [&](const StmtFlowPath& seg) {
      if (chain.size() + seg.stmts.size() > limits.max_stmts) {
        result.truncated = true;
        return false;
      }
      chain.insert(chain.end(), seg.stmts.begin(), seg.stmts.end());
      return true;
    };
    for (const auto& seg : segments.sifps) {
      if (!fits(seg) || !append(seg)) continue;
      result.paths.insert(StmtFlowPath{chain, SegmentKind::spliced});
      chain.resize(chain.size() - seg.stmts.size());
    }
    for (const auto& [p, segs] : segments.refps) {
      if (visited.count(p)) continue;
      for (const auto& seg : segs) {
        if (!fits(seg) || !append(seg)) continue;
        visited.insert(p);
        self(self, seg.stmts.back());
        visited.erase(p);
        chain.resize(chain.size() - seg.stmts.size());
      }
    }
  };

  for (const auto& head : segments.sofps) {
    chain = head.stmts;
    visited = {proc(head.stmts.front())};
    extend(extend, head.stmts.back());
  }
  return result;
}

namespace {

std::set<StmtId> in_process(const std::set<StmtId>& stmts, const StaticDepGraph& g, ProcessId p) {
  std::set<StmtId> out;
  for (auto n : stmts) {
    if (g.method_of(n).process == p) out.insert(n);
  }
  return out;
}

void absorb(std::set<StmtFlowPath>& into, bool& truncated, PathSet&& from) {
  into.merge(from.paths);
  truncated = truncated || from.truncated;
}

}  // namespace

Phase2Result phase2(const StaticDepGraph& sdg, const std::set<MethodId>& path_methods, const TraceSet& traces,
                    const std::set<StmtId>& coverage, const SourceSinkConfig& cfg, const Phase2Options& options) {
  Phase2Result result;
  if (path_methods.empty()) return result;

  const auto g = partial_graph(sdg, path_methods);
  const auto es = merge_global(traces);
  const ActivationIndex act(es);
  const JunctionIndex junctions(es, options.strict_splice);
  InletOutletIndex io{recv_callsites(g, cfg), send_callsites(g, cfg)};
  const auto sources = resolve_stmts(g, cfg.sources);
  const auto sinks = resolve_stmts(g, cfg.sinks);

  std::map<ProcessId, std::set<MethodId>> ran;
  for (const auto& t : traces) {
    auto& set = ran[t.process];
    for (const auto& e : t.events) set.insert(e.method);
  }
  const auto& lim = options.limits;

  for (auto s : sources) {
    for (auto t : sinks) {
      auto ddg = prune_ddg(build_ddg(g, s, t, act, io), coverage);
      if (!ddg.nodes.count(s) || !ddg.nodes.count(t)) continue;
      const auto ps = g.method_of(s).process;
      const auto pt = g.method_of(t).process;
      if (ps == pt) {
        absorb(result.intra, result.truncated, find_paths(ddg, {s}, {t}, ran[ps], SegmentKind::intra, lim));
        continue;
      }
      SegmentSet segs;
      bool cut = false;
      absorb(segs.sofps, cut, find_paths(ddg, {s}, in_process(io.outlets, g, ps), ran[ps], SegmentKind::sofps, lim));
      absorb(segs.sifps, cut, find_paths(ddg, in_process(io.inlets, g, pt), {t}, ran[pt], SegmentKind::sifps, lim));
      if (segs.sofps.empty() || segs.sifps.empty()) {
        result.truncated = result.truncated || cut;
        continue;
      }
      for (const auto& [p, methods] : ran) {
        if (p == ps || p == pt) continue;
        absorb(segs.refps[p], cut,
               find_paths(ddg, in_process(io.inlets, g, p), in_process(io.outlets, g, p), methods,
                          SegmentKind::refps, lim));
      }
      auto spliced = splice_segments(segs, g, junctions, lim);
      result.truncated = result.truncated || cut;
      absorb(result.inter, result.truncated, std::move(spliced));
    }
  }
  return result;
}

std::string format_path(const StmtFlowPath& path) {
  std::string out = "path level=stmt kind=" + std::string(to_string(path.kind)) + " ";
  for (std::size_t i = 0; i < path.stmts.size(); ++i) {
    if (i) out += " -> ";
    out += std::to_string(path.stmts[i]);
  }
  return out;
}

std::optional<PipelineMode> parse_pipeline_mode(std::string_view text) {
  if (text == "default") return PipelineMode::default_mode;
  if (text == "sim") return PipelineMode::sim;
  if (text == "mul") return PipelineMode::mul;
  return std::nullopt;
}

TraceSet filter_methods(const TraceSet& traces, const std::set<MethodId>& methods) {
  TraceSet out;
  for (const auto& t : traces) {
    ProcessTrace kept{t.process, {}};
    for (const auto& e : t.events) {
      if (e.kind == EventKind::send || e.kind == EventKind::recv || methods.count(e.method)) kept.events.push_back(e);
    }
    out.push_back(std::move(kept));
  }
  return out;
}

TraceSet first_last_only(const TraceSet& traces) {
  TraceSet out;
  for (const auto& t : traces) {
    std::map<MethodId, std::size_t> first, last;
    for (std::size_t i = 0; i < t.events.size(); ++i) {
      const auto& e = t.events[i];
      if (e.kind == EventKind::entry) first.emplace(e.method, i);
      if (e.kind == EventKind::returned_into) last[e.method] = i;
    }
    std::set<std::size_t> keep;
    for (const auto& [m, i] : first) keep.insert(i);
    for (const auto& [m, i] : last) keep.insert(i);
    ProcessTrace kept{t.process, {}};
    for (std::size_t i = 0; i < t.events.size(); ++i) {
      const auto& e = t.events[i];
      if (e.kind == EventKind::send || e.kind == EventKind::recv || keep.count(i)) kept.events.push_back(e);
    }
    out.push_back(std::move(kept));
  }
  return out;
}

FlowReport run_flowpaths(const TraceSet& traces, const StaticDepGraph& sdg, const SourceSinkConfig& cfg,
                         const FlowOptions& options) {
  FlowReport report;
  const auto sources = enclosing_methods(sdg, cfg.sources);
  const auto sinks = enclosing_methods(sdg, cfg.sinks);

  TraceSet pass1, pass2;
  switch (options.mode) {
    case PipelineMode::sim:
      pass1 = traces;
      break;
    case PipelineMode::default_mode:
      pass1 = filter_methods(traces, relevant_methods(sdg, cfg));
      break;
    case PipelineMode::mul:
      pass1 = first_last_only(filter_methods(traces, relevant_methods(sdg, cfg)));
      break;
  }
  auto count = [](const TraceSet& ts) {
    std::size_t n = 0;
    for (const auto& t : ts) n += t.events.size();
    return n;
  };
  report.events_phase1 = count(pass1);
  report.phase1 = method_level_paths(pass1, first_message_map(pass1), sources, sinks, options.phase1);

  if (options.mode == PipelineMode::mul) {
    pass2 = filter_methods(traces, report.phase1.path_methods);
  } else {
    pass2 = std::move(pass1);
  }
  report.phase2 = phase2(sdg, report.phase1.path_methods, pass2, statement_coverage(sdg, pass2), cfg, options.phase2);

  report.events_phase2 = count(pass2);
  return report;
}

}  // namespace distflow
