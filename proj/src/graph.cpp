#include "distflow/graph.hpp"

#include <deque>
#include <fstream>
#include <sstream>

#include "distflow/error.hpp"

namespace distflow {

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::intra_data: return "intra_data";
    case EdgeKind::intra_control: return "intra_control";
    case EdgeKind::inter_adjacent: return "inter_adjacent";
    case EdgeKind::inter_posterior: return "inter_posterior";
  }
  return "?";
}

std::optional<EdgeKind> parse_edge_kind(std::string_view text) {
  for (auto k : {EdgeKind::intra_data, EdgeKind::intra_control, EdgeKind::inter_adjacent,
                 EdgeKind::inter_posterior}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

void StaticDepGraph::add_node(StmtId id, MethodId method) { nodes[id] = std::move(method); }

void StaticDepGraph::add_edge(StmtId from, StmtId to, EdgeKind kind) {
  auto a = nodes.find(from);
  auto b = nodes.find(to);
  if (a == nodes.end() || b == nodes.end()) {
    throw MalformedTrace("edge " + std::to_string(from) + "->" + std::to_string(to) + " has an unknown endpoint");
  }
  if ((a->second == b->second) == is_interprocedural(kind)) {
    throw MalformedTrace("edge " + std::to_string(from) + "->" + std::to_string(to) + " of kind " +
                         std::string(to_string(kind)) + " does not match its endpoints' methods");
  }
  edges.insert({from, to, kind});
}

const MethodId& StaticDepGraph::method_of(StmtId id) const {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw MalformedTrace("unknown statement " + std::to_string(id));
  return it->second;
}

std::set<MethodId> StaticDepGraph::methods() const {
  std::set<MethodId> out;
  for (const auto& [id, m] : nodes) out.insert(m);
  return out;
}

std::map<MethodId, std::vector<StmtId>> StaticDepGraph::stmts_by_method() const {
  std::map<MethodId, std::vector<StmtId>> out;
  for (const auto& [id, m] : nodes) out[m].push_back(id);
  return out;
}

void write_graph(std::ostream& out, const StaticDepGraph& g) {
  for (const auto& [id, m] : g.nodes) {
    out << "node " << id << ' ' << m.method_name << ' ' << m.class_name << ' ' << m.process << '\n';
  }
  for (const auto& e : g.edges) out << "edge " << to_string(e.kind) << ' ' << e.from << ' ' << e.to << '\n';
  for (const auto& [a, b] : g.cfg) out << "cfg " << a << ' ' << b << '\n';
  for (auto s : g.entries) out << "entry " << s << '\n';
  for (const auto& [s, b] : g.guards) out << "guard " << s << ' ' << b << '\n';
  for (const auto& [s, api] : g.api_calls) out << "call " << s << ' ' << api << '\n';
}

StaticDepGraph read_graph(std::istream& in) {
  StaticDepGraph g;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::tuple<StmtId, StmtId, EdgeKind>> pending;
  auto bad = [&]() { return MalformedTrace("graph line " + std::to_string(lineno) + ": " + line); };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream f(line);
    std::string tag;
    if (!(f >> tag) || tag[0] == '#') continue;
    if (tag == "node") {
      StmtId id;
      MethodId m;
      if (!(f >> id >> m.method_name >> m.class_name >> m.process)) throw bad();
      g.add_node(id, std::move(m));
    } else if (tag == "edge") {
      std::string kind;
      StmtId a, b;
      if (!(f >> kind >> a >> b)) throw bad();
      auto k = parse_edge_kind(kind);
      if (!k) throw bad();
      pending.emplace_back(a, b, *k);
    } else if (tag == "cfg") {
      StmtId a, b;
      if (!(f >> a >> b)) throw bad();
      g.cfg.insert({a, b});
    } else if (tag == "entry") {
      StmtId s;
      if (!(f >> s)) throw bad();
      g.entries.insert(s);
    } else if (tag == "guard") {
      StmtId s;
      BranchId b;
      if (!(f >> s >> b)) throw bad();
      g.guards[s] = b;
    } else if (tag == "call") {
      StmtId s;
      std::string api;
      if (!(f >> s >> api)) throw bad();
      g.api_calls[s] = api;
    } else {
      throw bad();
    }
  }
  // edges may precede their nodes in hand-written files
  for (auto [a, b, k] : pending) g.add_edge(a, b, k);
  for (const auto& [a, b] : g.cfg) {
    if (!g.nodes.count(a) || !g.nodes.count(b)) throw MalformedTrace("cfg edge with unknown statement");
  }
  return g;
}

void write_graph_manifest(std::ostream& out, const std::vector<GraphVariant>& variants) {
  for (const auto& v : variants) {
    out << "variant ctx=" << v.ctx << " flow=" << v.flow << " file=" << v.file << '\n';
  }
}

std::vector<GraphVariant> read_graph_manifest(std::istream& in) {
  std::vector<GraphVariant> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string tag;
    if (!(f >> tag) || tag[0] == '#') continue;
    if (tag != "variant") throw MalformedTrace("bad graph manifest line: " + line);
    GraphVariant v;
    bool have_ctx = false, have_flow = false;
    std::string kv;
    while (f >> kv) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw MalformedTrace("bad graph manifest field: " + kv);
      auto key = kv.substr(0, eq), val = kv.substr(eq + 1);
      if (key == "ctx") {
        v.ctx = val == "1";
        have_ctx = true;
      } else if (key == "flow") {
        v.flow = val == "1";
        have_flow = true;
      } else if (key == "file") {
        v.file = val;
      }
    }
    if (!have_ctx || !have_flow || v.file.empty()) throw MalformedTrace("incomplete graph manifest line: " + line);
    out.push_back(v);
  }
  return out;
}

std::map<std::pair<bool, bool>, StaticDepGraph> load_graph_variants(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "graphs.txt");
  if (!manifest) throw Error(ErrorKind::data, "no graph manifest in " + dir.string());
  std::map<std::pair<bool, bool>, StaticDepGraph> out;
  for (const auto& v : read_graph_manifest(manifest)) {
    std::ifstream in(dir / v.file);
    if (!in) throw Error(ErrorKind::data, "missing graph file " + (dir / v.file).string());
    out[{v.ctx, v.flow}] = read_graph(in);
  }
  return out;
}

SourceSinkConfig read_source_sink(std::istream& in) {
  SourceSinkConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string tag, a, b;
    if (!(f >> tag) || tag[0] == '#') continue;
    if (tag == "source" && f >> a) {
      cfg.sources.push_back(a);
    } else if (tag == "sink" && f >> a) {
      cfg.sinks.push_back(a);
    } else if (tag == "msgapi" && f >> a >> b && (a == "send" || a == "recv")) {
      (a == "send" ? cfg.send_apis : cfg.recv_apis).insert(b);
    } else {
      throw UsageError("bad source/sink line: " + line);
    }
  }
  return cfg;
}

void write_source_sink(std::ostream& out, const SourceSinkConfig& cfg) {
  for (const auto& s : cfg.sources) out << "source " << s << '\n';
  for (const auto& s : cfg.sinks) out << "sink " << s << '\n';
  for (const auto& a : cfg.send_apis) out << "msgapi send " << a << '\n';
  for (const auto& a : cfg.recv_apis) out << "msgapi recv " << a << '\n';
}

std::set<StmtId> resolve_stmts(const StaticDepGraph& graph, const std::vector<std::string>& designators) {
  std::set<StmtId> out;
  for (const auto& d : designators) {
    if (auto m = parse_method_designator(d)) {
      for (const auto& [id, method] : graph.nodes) {
        if (method == *m) out.insert(id);
      }
      continue;
    }
    try {
      std::size_t used = 0;
      auto id = std::stoul(d, &used);
      if (used == d.size() && graph.nodes.count(static_cast<StmtId>(id))) out.insert(static_cast<StmtId>(id));
    } catch (const std::exception&) {
      // not a statement id either; ignored like any unknown designator
    }
  }
  return out;
}

namespace {

std::set<StmtId> callsites(const StaticDepGraph& graph, const std::set<std::string>& apis) {
  std::set<StmtId> out;
  for (const auto& [s, api] : graph.api_calls) {
    if (apis.count(api)) out.insert(s);
  }
  return out;
}

std::set<StmtId> closure(const std::set<StmtId>& start, const std::map<StmtId, std::vector<StmtId>>& succ) {
  std::set<StmtId> seen(start.begin(), start.end());
  std::deque<StmtId> work(start.begin(), start.end());
  while (!work.empty()) {
    auto s = work.front();
    work.pop_front();
    auto it = succ.find(s);
    if (it == succ.end()) continue;
    for (auto n : it->second) {
      if (seen.insert(n).second) work.push_back(n);
    }
  }
  return seen;
}

}  // namespace

std::set<StmtId> send_callsites(const StaticDepGraph& graph, const SourceSinkConfig& cfg) {
  return callsites(graph, cfg.send_apis);
}

std::set<StmtId> recv_callsites(const StaticDepGraph& graph, const SourceSinkConfig& cfg) {
  return callsites(graph, cfg.recv_apis);
}

std::set<MethodId> relevant_methods(const StaticDepGraph& graph, const SourceSinkConfig& cfg) {
  if (cfg.sources.empty() || cfg.sinks.empty()) throw ConfigError("relevance needs at least one source and one sink");
  auto starts = resolve_stmts(graph, cfg.sources);
  auto ends = resolve_stmts(graph, cfg.sinks);
  auto recvs = recv_callsites(graph, cfg);
  auto sends = send_callsites(graph, cfg);
  starts.insert(recvs.begin(), recvs.end());
  ends.insert(sends.begin(), sends.end());

  std::map<StmtId, std::vector<StmtId>> fwd, bwd;
  for (const auto& [a, b] : graph.cfg) {
    fwd[a].push_back(b);
    bwd[b].push_back(a);
  }
  std::set<MethodId> forward, backward, out;
  for (auto s : closure(starts, fwd)) forward.insert(graph.method_of(s));
  for (auto s : closure(ends, bwd)) backward.insert(graph.method_of(s));
  for (const auto& m : forward) {
    if (backward.count(m)) out.insert(m);
  }
  return out;
}

StaticDepGraph partial_graph(const StaticDepGraph& graph, const std::set<MethodId>& methods) {
  std::set<StmtId> keep;
  for (const auto& [id, m] : graph.nodes) {
    if (methods.count(m)) keep.insert(id);
  }
  return prune_by_coverage(graph, keep);
}

StaticDepGraph prune_by_coverage(const StaticDepGraph& graph, const std::set<StmtId>& covered) {
  StaticDepGraph out;
  for (const auto& [id, m] : graph.nodes) {
    if (covered.count(id)) out.nodes.emplace(id, m);
  }
  auto kept = [&](StmtId s) { return out.nodes.count(s) > 0; };
  for (const auto& e : graph.edges) {
    if (kept(e.from) && kept(e.to)) out.edges.insert(e);
  }
  for (const auto& c : graph.cfg) {
    if (kept(c.first) && kept(c.second)) out.cfg.insert(c);
  }
  for (auto s : graph.entries) {
    if (kept(s)) out.entries.insert(s);
  }
  for (const auto& [s, b] : graph.guards) {
    if (kept(s)) out.guards.emplace(s, b);
  }
  for (const auto& [s, api] : graph.api_calls) {
    if (kept(s)) out.api_calls.emplace(s, api);
  }
  return out;
}

std::set<StmtId> statement_coverage(const StaticDepGraph& graph, const TraceSet& traces) {
  std::set<StmtId> covered;
  std::set<BranchId> taken;
  for (const auto& trace : traces) {
    for (const auto& e : trace.events) {
      if (e.kind == EventKind::stmt_cover && e.stmt_id) covered.insert(*e.stmt_id);
      if (e.kind == EventKind::branch && e.branch_id) taken.insert(*e.branch_id);
    }
  }
  for (const auto& [s, b] : graph.guards) {
    if (taken.count(b)) covered.insert(s);
  }
  return covered;
}

}  // namespace distflow
