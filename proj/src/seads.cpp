#include "distflow/seads.hpp"

#include <chrono>
#include <deque>
#include <sstream>
#include <thread>

#include "distflow/error.hpp"

namespace distflow {

std::string Configuration::str() const {
  std::string out(6, '0');
  for (int i = 0; i < 6; ++i) {
    if (bits & (1 << (5 - i))) out[i] = '1';
  }
  return out;
}

std::optional<Configuration> Configuration::parse(std::string_view text) {
  if (text.size() != 6) return std::nullopt;
  Configuration c;
  for (char ch : text) {
    if (ch != '0' && ch != '1') return std::nullopt;
    c.bits = static_cast<std::uint8_t>((c.bits << 1) | (ch == '1'));
  }
  return c;
}

bool config_valid(Configuration c) {
  if (c.bits == 0 || c.bits > 0b111111) return false;
  if ((c.context() || c.flow() || c.coverage()) && !c.graph()) return false;
  if (c.instances() && !c.events()) return false;
  return true;
}

std::vector<Configuration> valid_configurations() {
  std::vector<Configuration> out;
  for (unsigned b = 0; b < 64; ++b) {
    Configuration c{static_cast<std::uint8_t>(b)};
    if (config_valid(c)) out.push_back(c);
  }
  return out;
}

Budget Budget::split(double total, double construct_share, double load_share, double deps_share) {
  Budget b{total, total * construct_share, total * load_share, total * deps_share};
  if (!(b.construct > 0 && b.load > 0 && b.deps > 0)) throw ConfigError("budget parts must be positive");
  if (b.construct + b.load + b.deps > total * (1 + 1e-12)) throw ConfigError("budget parts exceed the total");
  return b;
}

EventQueue method_events(const ProcessTrace& trace) {
  EventQueue out;
  for (const auto& e : trace.events) {
    if (is_method_event(e.kind)) out.push_back({e.method, e.kind, e.seq});
  }
  return out;
}

EventQueue first_last_instances(const EventQueue& qu) {
  std::map<MethodId, std::pair<std::size_t, std::size_t>> span;
  for (std::size_t i = 0; i < qu.size(); ++i) {
    auto [it, fresh] = span.try_emplace(qu[i].method, i, i);
    if (!fresh) it->second.second = i;
  }
  std::vector<char> keep(qu.size(), 0);
  for (const auto& [m, s] : span) keep[s.first] = keep[s.second] = 1;
  EventQueue out;
  for (std::size_t i = 0; i < qu.size(); ++i) {
    if (keep[i]) out.push_back(qu[i]);
  }
  return out;
}

namespace {

struct LiftedGraph {
  std::map<MethodId, std::set<MethodId>> succ;
  std::map<MethodId, std::vector<MethodId>> posterior_preds;
  std::set<std::pair<MethodId, MethodId>> adjacent;
};

LiftedGraph lift(const StaticDepGraph& g) {
  LiftedGraph out;
  for (const auto& e : g.edges) {
    if (!is_interprocedural(e.kind)) continue;
    const auto& a = g.method_of(e.from);
    const auto& b = g.method_of(e.to);
    out.succ[a].insert(b);
    if (e.kind == EdgeKind::inter_adjacent) {
      out.adjacent.emplace(a, b);
    } else {
      out.posterior_preds[b].push_back(a);
    }
  }
  for (auto& [m, preds] : out.posterior_preds) {
    std::sort(preds.begin(), preds.end());
    preds.erase(std::unique(preds.begin(), preds.end()), preds.end());
  }
  return out;
}

const StaticDepGraph& variant_for(Configuration c, const GraphVariants& graphs) {
  auto it = graphs.find({c.context(), c.flow()});
  if (it == graphs.end()) {
    throw ConfigError("no static graph for context=" + std::to_string(c.context()) +
                      " flow=" + std::to_string(c.flow()));
  }
  return it->second;
}

// fe/lr here are the first and last method events of each method; in a
// complete trace those are its first entry and last returned-into.
struct Spans {
  std::map<MethodId, std::size_t> first, last;  // positions in the queue
};

Spans spans_of(const EventQueue& qu) {
  Spans s;
  for (std::size_t i = 0; i < qu.size(); ++i) {
    s.first.emplace(qu[i].method, i);
    s.last[qu[i].method] = i;
  }
  return s;
}

std::set<MethodId> static_reach(const MethodId& m, const LiftedGraph& g) {
  std::set<MethodId> seen{m};
  std::deque<MethodId> work{m};
  while (!work.empty()) {
    auto x = work.front();
    work.pop_front();
    auto it = g.succ.find(x);
    if (it == g.succ.end()) continue;
    for (const auto& y : it->second) {
      if (seen.insert(y).second) work.push_back(y);
    }
  }
  return seen;
}

// Every event is visible: adjacent edges fire only when the dependent's event
// directly follows an event of the impacted depender, posterior edges at any
// later event of the dependent.
std::set<MethodId> instance_propagation(const MethodId& m, const EventQueue& qu, const Spans& spans,
                                        const LiftedGraph& g) {
  std::map<MethodId, std::size_t> impacted;
  const auto start = spans.first.at(m);
  impacted[m] = start;
  for (std::size_t k = start + 1; k < qu.size(); ++k) {
    const auto& y = qu[k].method;
    if (impacted.count(y)) continue;
    bool hit = false;
    const auto& prev = qu[k - 1].method;
    if (impacted.count(prev) && g.adjacent.count({prev, y})) hit = true;
    if (!hit) {
      if (auto it = g.posterior_preds.find(y); it != g.posterior_preds.end()) {
        for (const auto& x : it->second) {
          auto t = impacted.find(x);
          if (t != impacted.end() && t->second < k) {
            hit = true;
            break;
          }
        }
      }
    }
    if (hit) impacted.emplace(y, k);
  }
  std::set<MethodId> out;
  for (const auto& [x, t] : impacted) out.insert(x);
  return out;
}

// Only first/last events: any edge x->y fires when y is still running after x
// was impacted, and y counts as impacted from the earliest moment it could be.
std::set<MethodId> span_propagation(const MethodId& m, const EventQueue& qu, const Spans& spans,
                                    const LiftedGraph& g) {
  auto seq_first = [&](const MethodId& x) { return qu[spans.first.at(x)].seq; };
  auto seq_last = [&](const MethodId& x) { return qu[spans.last.at(x)].seq; };
  std::map<MethodId, std::uint64_t> impacted;
  std::set<std::pair<std::uint64_t, MethodId>> frontier;
  impacted[m] = seq_first(m);
  frontier.emplace(impacted[m], m);
  while (!frontier.empty()) {
    auto [t, x] = *frontier.begin();
    frontier.erase(frontier.begin());
    auto it = g.succ.find(x);
    if (it == g.succ.end()) continue;
    for (const auto& y : it->second) {
      if (!spans.first.count(y) || seq_last(y) <= t) continue;
      auto cand = std::max(t, seq_first(y));
      auto cur = impacted.find(y);
      if (cur != impacted.end() && cur->second <= cand) continue;
      if (cur != impacted.end()) frontier.erase({cur->second, y});
      impacted[y] = cand;
      frontier.emplace(cand, y);
    }
  }
  std::set<MethodId> out;
  for (const auto& [x, t] : impacted) out.insert(x);
  return out;
}

}  // namespace

DepMap compute_deps(const EventQueue& qu, Configuration c, const GraphVariants& graphs,
                    const std::set<StmtId>& coverage) {
  if (!config_valid(c)) throw ConfigError("invalid configuration " + c.str());
  LiftedGraph lifted;
  if (c.graph()) {
    const auto& g = variant_for(c, graphs);
    lifted = c.coverage() ? lift(prune_by_coverage(g, coverage)) : lift(g);
  }
  const auto queue = c.instances() ? qu : first_last_instances(qu);
  const auto spans = spans_of(queue);

  DepMap out;
  for (const auto& [m, first] : spans.first) {
    auto& ds = out[m];
    if (!c.events()) {
      ds = static_reach(m, lifted);
    } else if (!c.graph()) {
      ds.insert(m);
      const auto fe = queue[first].seq;
      for (const auto& [y, last] : spans.last) {
        if (queue[last].seq > fe) ds.insert(y);
      }
    } else if (c.instances()) {
      ds = instance_propagation(m, queue, spans, lifted);
    } else {
      ds = span_propagation(m, queue, spans, lifted);
    }
  }
  return out;
}

double CostModel::construct_cost(Configuration c, std::size_t units) const {
  if (!c.graph()) return 0;
  return construct_per_unit * static_cast<double>(units) *
         (1 + context_factor * c.context() + flow_factor * c.flow());
}

double CostModel::load_cost(Configuration c, std::size_t units) const {
  if (!c.graph()) return 0;
  return load_per_unit * static_cast<double>(units) * (c.coverage() ? coverage_load_factor : 1.0);
}

double CostModel::deps_cost(Configuration c, std::size_t events) const {
  return deps_per_event * static_cast<double>(events) * (1 + instance_factor * c.instances());
}

double effective_cost(const RoundRecord& r) { return r.timeout ? r.budget + r.overrun : r.cost; }

namespace {

std::set<StmtId> covered_stmts(const ArbiterState& s, const StaticDepGraph& g) {
  auto out = s.coverage;
  for (const auto& [stmt, b] : g.guards) {
    if (s.taken.count(b)) out.insert(stmt);
  }
  return out;
}

void run_round(ArbiterState& s, const GraphVariants& graphs, ConfigController& controller,
               const ArbiterOptions& opt, ArbitrationLog& log) {
  RoundRecord rec;
  rec.index = log.rounds.size();
  rec.config = s.tcn;
  rec.budget = opt.budget.total;
  rec.events = s.qu.size();
  const auto c = s.tcn;
  const StaticDepGraph* g = c.graph() ? &variant_for(c, graphs) : nullptr;
  const std::size_t units = g ? g->nodes.size() + g->edges.size() : 0;
  std::optional<DepMap> deps;

  if (opt.costs.mode == CostModel::Mode::synthetic) {
    if (g && s.built != c.static_part()) {
      auto cost = opt.costs.construct_cost(c, units);
      rec.cost += cost;
      rec.rebuilt = true;
      if (cost > opt.budget.construct) {
        rec.timeout = true;
        rec.overrun = cost - opt.budget.construct;
        s.built.reset();
      } else {
        s.built = c.static_part();
      }
    }
    if (!rec.timeout && g) {
      auto cost = opt.costs.load_cost(c, units);
      rec.cost += cost;
      rec.timeout = cost > opt.budget.load;
      if (rec.timeout) rec.overrun = cost - opt.budget.load;
    }
    if (!rec.timeout) {
      auto cost = opt.costs.deps_cost(c, s.qu.size());
      rec.cost += cost;
      rec.timeout = cost > opt.budget.deps;
      if (rec.timeout) rec.overrun = cost - opt.budget.deps;
    }
    if (!rec.timeout) deps = compute_deps(s.qu, c, graphs, g ? covered_stmts(s, *g) : std::set<StmtId>{});
  } else {
    // measured: the whole computation is charged to the dependence phase
    auto t0 = std::chrono::steady_clock::now();
    auto result = compute_deps(s.qu, c, graphs, g ? covered_stmts(s, *g) : std::set<StmtId>{});
    rec.cost = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rec.rebuilt = g && s.built != c.static_part();
    if (g) s.built = c.static_part();
    rec.timeout = rec.cost > opt.budget.deps;
    if (rec.timeout) rec.overrun = rec.cost - opt.budget.deps;
    if (!rec.timeout) deps = std::move(result);
  }

  log.rounds.push_back(rec);
  log.maps.push_back(std::move(deps));
  auto next = controller.next(rec);
  if (!config_valid(next)) throw ConfigError("controller proposed invalid configuration " + next.str());
  s.old_tcn = s.tcn;
  s.tcn = next;
  s.g_counter = 0;
  s.now += rec.cost;
  s.last_t = s.now;
}

}  // namespace

ArbitrationLog arbitrate(ArbiterState& state, const ProcessTrace& stream, const GraphVariants& graphs,
                         ConfigController& controller, const ArbiterOptions& options) {
  if (!config_valid(state.tcn)) throw ConfigError("invalid starting configuration " + state.tcn.str());
  ArbitrationLog log;
  for (const auto& e : stream.events) {
    if (e.kind == EventKind::stmt_cover && e.stmt_id) state.coverage.insert(*e.stmt_id);
    if (e.kind == EventKind::branch && e.branch_id) state.taken.insert(*e.branch_id);
    if (!is_method_event(e.kind)) continue;
    state.qu.push_back({e.method, e.kind, e.seq});
    ++state.g_counter;
    state.now += 1;
    if (state.g_counter > state.tc && state.now - state.last_t > state.tt) {
      run_round(state, graphs, controller, options, log);
    }
  }
  if (options.final_round && state.g_counter > 0) run_round(state, graphs, controller, options, log);
  return log;
}

std::string format_round(const RoundRecord& r) {
  std::ostringstream out;
  out << "round " << r.index << ' ' << r.config.str() << ' ' << r.cost << ' ' << r.budget << ' '
      << (r.timeout ? 1 : 0);
  return out.str();
}

std::vector<Snapshot> run_workers(const TraceSet& traces, const GraphVariants& graphs, const ArbiterState& initial,
                                  const ControllerFactory& make_controller, const ArbiterOptions& options) {
  std::vector<Snapshot> out(traces.size());
  std::vector<std::exception_ptr> errors(traces.size());
  std::vector<std::thread> workers;
  workers.reserve(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    workers.emplace_back([&, i] {
      try {
        auto state = initial;
        auto controller = make_controller(traces[i].process);
        auto& snap = out[i];
        snap.process = traces[i].process;
        snap.log = arbitrate(state, traces[i], graphs, *controller, options);
        for (auto it = snap.log.maps.rbegin(); it != snap.log.maps.rend(); ++it) {
          if (*it) {
            snap.deps = **it;
            break;
          }
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

DependenceSet merge_query(const MethodId& q, const std::map<ProcessId, DepMap>& intra, const TraceSet& traces) {
  DependenceSet ds;
  ds.root = q;
  CausalIndex index(traces);

  // first event of Q in every trace that runs it
  std::map<std::size_t, std::size_t> starts;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const auto& ev = traces[t].events;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      if (is_method_event(ev[i].kind) && ev[i].method == q) {
        starts.emplace(t, i);
        break;
      }
    }
  }
  if (starts.empty()) return ds;

  auto local = [&](ProcessId p, const MethodId& m) -> const std::set<MethodId>* {
    auto pit = intra.find(p);
    if (pit == intra.end()) return nullptr;
    auto mit = pit->second.find(m);
    return mit == pit->second.end() ? nullptr : &mit->second;
  };

  std::map<std::size_t, std::vector<std::size_t>> frontiers;
  for (const auto& [t, i] : starts) {
    if (auto s = local(traces[t].process, q)) ds.members.insert(s->begin(), s->end());
    frontiers[t] = index.reach_from(EventRef{t, i});
  }

  for (std::size_t j = 0; j < traces.size(); ++j) {
    std::map<MethodId, std::size_t> last;
    const auto& ev = traces[j].events;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      if (is_method_event(ev[i].kind)) last[ev[i].method] = i;
    }
    for (const auto& [m, idx] : last) {
      bool after = false;
      for (const auto& [t, frontier] : frontiers) {
        if (t != j && frontier[j] != kUnreached && idx >= frontier[j]) after = true;
      }
      if (!after) continue;
      if (auto s = local(traces[j].process, m)) ds.members.insert(s->begin(), s->end());
    }
  }
  return ds;
}

std::string format_ds(const DependenceSet& ds) {
  std::string out = "ds " + ds.root.str() + ":";
  for (const auto& m : ds.members) out += " " + m.str();
  return out;
}

}  // namespace distflow
