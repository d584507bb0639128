#include "distflow/netsim.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>

#include "distflow/error.hpp"

namespace distflow {

namespace {

const char* topology_name(Topology t) {
  switch (t) {
    case Topology::client_server: return "client_server";
    case Topology::peer_to_peer: return "peer_to_peer";
    case Topology::n_tier: return "n_tier";
  }
  return "?";
}

// Raw engine output reduced by modulo: std distributions are not specified
// bit-for-bit across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(engine_() % n); }
  bool chance(unsigned percent) { return below(100) < percent; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

std::string Scenario::str() const {
  std::ostringstream out;
  out << "topology=" << topology_name(topology) << " processes=" << processes << " seed=" << seed
      << " length=" << length << " isolated=" << (isolated ? 1 : 0);
  return out.str();
}

Scenario read_scenario(std::istream& in) {
  Scenario s;
  bool have_processes = false;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string key, value;
    if (!(f >> key) || key[0] == '#') continue;
    if (!(f >> value)) throw UsageError("scenario key without value: " + key);
    try {
      if (key == "topology") {
        if (value == "client_server") s.topology = Topology::client_server;
        else if (value == "peer_to_peer") s.topology = Topology::peer_to_peer;
        else if (value == "n_tier") s.topology = Topology::n_tier;
        else throw UsageError("unknown topology " + value);
      } else if (key == "seed") {
        s.seed = std::stoull(value);
      } else if (key == "length") {
        s.length = std::stoull(value);
      } else if (key == "processes" || key == "tiers" || key == "peers") {
        s.processes = std::stoull(value);
        have_processes = true;
      } else if (key == "isolated") {
        s.isolated = value == "1" || value == "true";
      } else {
        throw UsageError("unknown scenario key " + key);
      }
    } catch (const std::logic_error&) {
      throw UsageError("bad scenario value for " + key + ": " + value);
    }
  }
  if (s.topology == Topology::client_server) {
    if (have_processes && s.processes != 2) throw UsageError("client_server has exactly 2 processes");
    s.processes = 2;
  } else if (!have_processes) {
    s.processes = 3;
  }
  return s;
}

void write_scenario(std::ostream& out, const Scenario& s) {
  out << "topology " << topology_name(s.topology) << '\n'
      << "processes " << s.processes << '\n'
      << "seed " << s.seed << '\n'
      << "length " << s.length << '\n'
      << "isolated " << (s.isolated ? 1 : 0) << '\n';
}

SourceSinkConfig ProgramModel::source_sink() const {
  SourceSinkConfig cfg;
  for (auto s : sources) cfg.sources.push_back(std::to_string(s));
  for (auto s : sinks) cfg.sinks.push_back(std::to_string(s));
  cfg.send_apis.insert(send_api);
  cfg.recv_apis.insert(recv_api);
  return cfg;
}

std::set<std::pair<MethodId, MethodId>> ProgramModel::call_edges() const {
  std::set<std::pair<MethodId, MethodId>> out;
  for (const auto& pm : processes) {
    for (const auto& m : pm.methods) {
      for (const auto& s : m.body) {
        if (s.kind == StmtKind::call) out.insert({m.id, pm.methods[s.callee].id});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// program generation

namespace {

struct Links {
  std::vector<ProcessId> upstream;    // processes sending data to us
  std::vector<ProcessId> downstream;  // processes we send data to
};

std::vector<Links> topology_links(const Scenario& s) {
  std::vector<Links> links(s.processes);
  if (s.isolated) return links;
  auto add = [&](ProcessId from, ProcessId to) {
    links[from].downstream.push_back(to);
    links[to].upstream.push_back(from);
  };
  const auto n = static_cast<ProcessId>(s.processes);
  switch (s.topology) {
    case Topology::client_server:
    case Topology::n_tier:
      for (ProcessId p = 0; p + 1 < n; ++p) add(p, p + 1);
      break;
    case Topology::peer_to_peer:
      for (ProcessId a = 0; a < n; ++a)
        for (ProcessId b = a + 1; b < n; ++b) add(a, b);
      break;
  }
  return links;
}

std::string role_class(const Scenario& s, ProcessId p) {
  switch (s.topology) {
    case Topology::client_server: return p == 0 ? "Client" : "Server";
    case Topology::n_tier: return "Tier" + std::to_string(p);
    case Topology::peer_to_peer: return "Peer" + std::to_string(p);
  }
  return "Node";
}

class Generator {
 public:
  Generator(const Scenario& s, Rng& rng) : scenario_(s), rng_(rng) {}

  ProcessModel process(ProcessId p, const Links& links, bool want_source, bool want_sink) {
    ProcessModel pm;
    pm.process = p;
    pm.objects = 2;
    pm.fields = 1 + static_cast<std::uint32_t>(rng_.below(2));
    const bool compact = scenario_.length / std::max<std::size_t>(scenario_.processes, 1) < 60;
    const auto role = role_class(scenario_, p);

    auto add_method = [&](std::string cls, std::string name, std::size_t params, std::size_t locals) {
      MethodModel m;
      m.id = MethodId{p, std::move(cls), std::move(name)};
      m.params = params;
      m.locals = locals;
      m.entry_branch = next_branch_++;
      pm.methods.push_back(std::move(m));
      return pm.methods.size() - 1;
    };

    const auto main_idx = add_method(role, "main", 0, 6);
    std::vector<std::size_t> recv_stages, workers, send_stages;
    for (auto u : links.upstream) recv_stages.push_back(add_method(role, "recvFrom" + std::to_string(u), 0, 2));
    const auto n_workers = compact ? 1 + rng_.below(2) : 2 + rng_.below(2);
    for (std::size_t w = 0; w < n_workers; ++w) {
      auto params = rng_.below(3);
      workers.push_back(add_method(rng_.chance(50) ? "Handler" : "Codec", "w" + std::to_string(w), params, params + 3));
    }
    for (auto d : links.downstream) send_stages.push_back(add_method(role, "sendTo" + std::to_string(d), 1, 4));

    const auto source_worker = workers[rng_.below(workers.size())];
    const auto sink_worker = workers[rng_.below(workers.size())];

    for (std::size_t i = 0; i < recv_stages.size(); ++i) {
      recv_stage(pm, pm.methods[recv_stages[i]], links.upstream[i]);
    }
    for (std::size_t i = 0; i < send_stages.size(); ++i) {
      send_stage(pm, pm.methods[send_stages[i]], links.downstream[i]);
    }
    for (auto w : workers) {
      std::vector<std::size_t> callees;
      for (auto c : workers) {
        if (c > w) callees.push_back(c);
      }
      worker(pm, w, callees, want_source && w == source_worker, want_sink && w == sink_worker);
    }
    main_body(pm, main_idx, recv_stages, workers, send_stages, want_source ? source_worker : kNone,
              want_sink ? sink_worker : kNone);
    return pm;
  }

  std::vector<StmtId> sources, sinks;

 private:
  Stmt stmt(StmtKind kind) {
    Stmt s;
    s.id = next_stmt_++;
    s.kind = kind;
    return s;
  }

  ObjRef obj(const ProcessModel& pm) {
    ObjRef r;
    r.is_this = rng_.chance(70);
    if (!r.is_this) r.object = static_cast<std::uint32_t>(rng_.below(pm.objects));
    return r;
  }

  void recv_stage(const ProcessModel& pm, MethodModel& m, ProcessId from) {
    auto r = stmt(StmtKind::recv);
    r.peer = from;
    r.def = 0;
    m.body.push_back(r);
    auto st = stmt(StmtKind::store);
    st.uses = {0};
    st.field = static_cast<std::uint32_t>(rng_.below(pm.fields));
    st.obj = obj(pm);
    m.body.push_back(st);
    auto ack = stmt(StmtKind::send);
    ack.peer = from;
    m.body.push_back(ack);
    auto ret = stmt(StmtKind::ret);
    ret.uses = {0};
    m.body.push_back(ret);
  }

  // sends the parameter combined with a field value, then waits for the ack
  void send_stage(const ProcessModel& pm, MethodModel& m, ProcessId to) {
    auto ld = stmt(StmtKind::load);
    ld.def = 1;
    ld.field = static_cast<std::uint32_t>(rng_.below(pm.fields));
    ld.obj = obj(pm);
    m.body.push_back(ld);
    auto mix = stmt(StmtKind::assign);
    mix.uses = {0, 1};
    mix.def = 2;
    m.body.push_back(mix);
    auto s = stmt(StmtKind::send);
    s.peer = to;
    s.uses = {2};
    m.body.push_back(s);
    auto ack = stmt(StmtKind::recv);  // acknowledgement, never read
    ack.peer = to;
    ack.def = 3;
    m.body.push_back(ack);
    m.body.push_back(stmt(StmtKind::ret));
  }

  struct Scope {
    std::vector<std::size_t> avail;  // locals holding a value
    std::size_t keep = kNone;        // never overwritten (the source value)
  };

  std::size_t pick_use(const Scope& sc, const MethodModel& m) {
    if (!sc.avail.empty()) return sc.avail[rng_.below(sc.avail.size())];
    return rng_.below(m.locals);
  }

  std::size_t pick_def(Scope& sc, const MethodModel& m) {
    auto d = m.params + rng_.below(m.locals - m.params);
    if (d == sc.keep) d = d + 1 < m.locals ? d + 1 : m.params;
    if (std::find(sc.avail.begin(), sc.avail.end(), d) == sc.avail.end()) sc.avail.push_back(d);
    return d;
  }

  void block(ProcessModel& pm, std::size_t mi, const std::vector<std::size_t>& callees, Scope& sc,
             std::size_t depth, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
      auto& m = pm.methods[mi];
      auto roll = rng_.below(100);
      if (roll < 30) {
        auto s = stmt(StmtKind::assign);
        s.uses.push_back(pick_use(sc, m));
        if (rng_.chance(40)) s.uses.push_back(pick_use(sc, m));
        s.def = pick_def(sc, m);
        m.body.push_back(s);
      } else if (roll < 45) {
        auto s = stmt(StmtKind::load);
        s.field = static_cast<std::uint32_t>(rng_.below(pm.fields));
        s.obj = obj(pm);
        s.def = pick_def(sc, m);
        m.body.push_back(s);
      } else if (roll < 62) {
        auto s = stmt(StmtKind::store);
        s.uses = {pick_use(sc, m)};
        s.field = static_cast<std::uint32_t>(rng_.below(pm.fields));
        s.obj = obj(pm);
        m.body.push_back(s);
      } else if (roll < 80 && !callees.empty()) {
        auto s = stmt(StmtKind::call);
        s.callee = callees[rng_.below(callees.size())];
        for (std::size_t a = 0; a < pm.methods[s.callee].params; ++a) s.uses.push_back(pick_use(sc, m));
        s.obj = obj(pm);
        if (rng_.chance(70)) s.def = pick_def(sc, m);
        m.body.push_back(s);
      } else if (roll < 90 && depth < 2) {
        auto kind = roll < 86 ? StmtKind::branch : StmtKind::loop;
        auto s = stmt(kind);
        s.uses = {pick_use(sc, m)};
        s.taken = next_branch_++;
        s.not_taken = next_branch_++;
        auto at = m.body.size();
        m.body.push_back(s);
        Scope inner = sc;
        block(pm, mi, callees, inner, depth + 1, 1 + (depth == 0 ? rng_.below(2) : 0));
        // values defined inside the block may or may not exist afterwards
        for (auto v : inner.avail) {
          if (std::find(sc.avail.begin(), sc.avail.end(), v) == sc.avail.end()) sc.avail.push_back(v);
        }
        pm.methods[mi].body[at].block_end = pm.methods[mi].body.size();
      } else {
        auto s = stmt(StmtKind::assign);
        s.uses.push_back(pick_use(sc, m));
        s.def = pick_def(sc, m);
        m.body.push_back(s);
      }
    }
  }

  void worker(ProcessModel& pm, std::size_t mi, const std::vector<std::size_t>& callees, bool with_source,
              bool with_sink) {
    Scope sc;
    for (std::size_t p = 0; p < pm.methods[mi].params; ++p) sc.avail.push_back(p);
    if (with_source) {
      auto s = stmt(StmtKind::source);
      s.def = pick_def(sc, pm.methods[mi]);
      sc.keep = s.def;
      sources.push_back(s.id);
      pm.methods[mi].body.push_back(s);
      if (rng_.chance(50)) {
        auto st = stmt(StmtKind::store);
        st.uses = {s.def};
        st.field = static_cast<std::uint32_t>(rng_.below(pm.fields));
        st.obj = obj(pm);
        pm.methods[mi].body.push_back(st);
      }
    }
    block(pm, mi, callees, sc, 0, 1 + rng_.below(3));
    auto& m = pm.methods[mi];
    if (with_sink) {
      auto s = stmt(StmtKind::sink);
      s.uses = {m.params > 0 && rng_.chance(50) ? rng_.below(m.params) : pick_use(sc, m)};
      sinks.push_back(s.id);
      m.body.push_back(s);
    }
    auto ret = stmt(StmtKind::ret);
    if (sc.keep != kNone && rng_.chance(50)) ret.uses = {sc.keep};
    else if (!sc.avail.empty()) ret.uses = {sc.avail[rng_.below(sc.avail.size())]};
    m.body.push_back(ret);
  }

  void main_body(ProcessModel& pm, std::size_t mi, const std::vector<std::size_t>& recv_stages,
                 const std::vector<std::size_t>& workers, const std::vector<std::size_t>& send_stages,
                 std::size_t source_worker, std::size_t sink_worker) {
    Scope sc;
    auto call = [&](std::size_t callee, bool def) {
      auto s = stmt(StmtKind::call);
      s.callee = callee;
      for (std::size_t a = 0; a < pm.methods[callee].params; ++a) s.uses.push_back(pick_use(sc, pm.methods[mi]));
      s.obj = obj(pm);
      if (def) s.def = pick_def(sc, pm.methods[mi]);
      pm.methods[mi].body.push_back(s);
    };
    if (rng_.chance(50)) call(workers[rng_.below(workers.size())], true);

    auto loop = stmt(StmtKind::loop);
    loop.fixed_trips = true;
    loop.taken = next_branch_++;
    loop.not_taken = next_branch_++;
    const auto loop_at = pm.methods[mi].body.size();
    pm.methods[mi].body.push_back(loop);
    for (auto r : recv_stages) call(r, true);
    for (auto w : workers) {
      bool pinned = w == source_worker || w == sink_worker;
      if (!pinned && rng_.chance(30)) {
        auto br = stmt(StmtKind::branch);
        br.uses = {pick_use(sc, pm.methods[mi])};
        br.taken = next_branch_++;
        br.not_taken = next_branch_++;
        auto at = pm.methods[mi].body.size();
        pm.methods[mi].body.push_back(br);
        call(w, rng_.chance(60));
        pm.methods[mi].body[at].block_end = pm.methods[mi].body.size();
      } else {
        call(w, rng_.chance(60));
      }
    }
    for (auto s : send_stages) call(s, false);  // argument: some main local
    pm.methods[mi].body[loop_at].block_end = pm.methods[mi].body.size();
    pm.methods[mi].body.push_back(stmt(StmtKind::ret));
  }

  const Scenario& scenario_;
  Rng& rng_;
  StmtId next_stmt_ = 1;
  BranchId next_branch_ = 1;
};

void validate(const Scenario& s) {
  if (s.topology == Topology::client_server && s.processes != 2) throw UsageError("client_server has exactly 2 processes");
  if (s.topology == Topology::n_tier && s.processes < 2) throw UsageError("n_tier needs at least 2 tiers");
  if (s.processes < 1) throw UsageError("scenario needs at least one process");
  if (s.processes > 64) throw UsageError("too many processes");
}

}  // namespace

// ---------------------------------------------------------------------------
// simulation

namespace {

struct Instance {
  StmtId stmt = 0;
  std::size_t method = 0;  // global method index
  std::vector<std::size_t> deps;
  bool source = false;
  bool sink = false;
};

class Simulator {
 public:
  Simulator(const ProgramModel& model, std::uint64_t seed) : model_(model), rng_(seed ^ 0x5eed5eedULL) {
    std::size_t base = 0;
    for (const auto& pm : model.processes) {
      Proc p;
      p.pm = &pm;
      p.base = base;
      base += pm.methods.size();
      for (const auto& m : pm.methods) method_ids_.push_back(m.id);
      procs_.push_back(std::move(p));
    }
    source_set_.insert(model.sources.begin(), model.sources.end());
    sink_set_.insert(model.sinks.begin(), model.sinks.end());
  }

  void run(std::size_t trips) {
    trips_ = trips;
    for (auto& p : procs_) start(p);
    while (true) {
      std::vector<std::size_t> runnable;
      bool any_alive = false;
      for (std::size_t i = 0; i < procs_.size(); ++i) {
        if (procs_[i].stack.empty()) continue;
        any_alive = true;
        if (can_step(procs_[i])) runnable.push_back(i);
      }
      if (!any_alive) break;
      if (runnable.empty()) throw CausalityError("simulated program deadlocked");
      step(procs_[runnable[rng_.below(runnable.size())]]);
    }
  }

  TraceSet traces() const {
    TraceSet out;
    for (const auto& p : procs_) out.push_back(ProcessTrace{p.pm->process, p.events});
    return out;
  }

  std::size_t event_count() const {
    std::size_t n = 0;
    for (const auto& p : procs_) n += p.events.size();
    return n;
  }

  GroundTruth truth() const;

 private:
  struct Ctx {
    std::size_t owner = 0;
    std::size_t end = 0;
    bool loop = false;
    std::size_t remaining = 0;
    std::size_t owner_inst = kNone;
  };
  struct Frame {
    std::size_t method = 0;
    std::size_t pc = 0;
    std::vector<std::size_t> writer;
    std::uint32_t receiver = 0;
    std::vector<Ctx> ctx;
  };
  struct Proc {
    const ProcessModel* pm = nullptr;
    std::size_t base = 0;
    std::vector<Frame> stack;
    std::vector<EventRecord> events;
    std::uint64_t seq = 0;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> heap;
  };
  struct Message {
    MsgId id;
    std::size_t send_inst;
  };

  const MethodModel& method(const Proc& p, const Frame& f) const { return p.pm->methods[f.method]; }

  EventRecord& emit(Proc& p, EventKind kind, const MethodId& m) {
    EventRecord e;
    e.kind = kind;
    e.method = m;
    e.seq = ++p.seq;
    p.events.push_back(std::move(e));
    return p.events.back();
  }

  void enter(Proc& p, std::size_t callee, std::uint32_t receiver, std::size_t invoke_inst) {
    const auto& m = p.pm->methods[callee];
    emit(p, EventKind::entry, m.id);
    emit(p, EventKind::branch, m.id).branch_id = m.entry_branch;
    Frame f;
    f.method = callee;
    f.receiver = receiver;
    f.writer.assign(m.locals, kNone);
    for (std::size_t i = 0; i < m.params; ++i) f.writer[i] = invoke_inst;
    p.stack.push_back(std::move(f));
  }

  void start(Proc& p) { enter(p, 0, 0, kNone); }

  // Moves pc past finished blocks; a finished loop body returns to its header.
  void normalize(Proc& p) {
    auto& f = p.stack.back();
    while (!f.ctx.empty() && f.pc == f.ctx.back().end) {
      if (f.ctx.back().loop) {
        f.pc = f.ctx.back().owner;
        return;
      }
      f.ctx.pop_back();
    }
  }

  bool can_step(const Proc& p) const {
    const auto& f = p.stack.back();
    const auto& s = method(p, f).body[f.pc];
    if (s.kind != StmtKind::recv) return true;
    auto it = channels_.find({s.peer, p.pm->process});
    return it != channels_.end() && !it->second.empty();
  }

  static std::size_t control(const Frame& f) { return f.ctx.empty() ? kNone : f.ctx.back().owner_inst; }

  std::size_t instance(const Proc& p, const Frame& f, const Stmt& s, std::size_t ctl) {
    Instance in;
    in.stmt = s.id;
    in.method = p.base + f.method;
    for (auto u : s.uses) {
      if (f.writer[u] != kNone) in.deps.push_back(f.writer[u]);
    }
    if (ctl != kNone) in.deps.push_back(ctl);
    in.source = source_set_.count(s.id) > 0;
    in.sink = sink_set_.count(s.id) > 0;
    insts_.push_back(std::move(in));
    return insts_.size() - 1;
  }

  std::uint32_t resolve(const ObjRef& r, std::uint32_t receiver) const { return r.is_this ? receiver : r.object; }

  void step(Proc& p) {
    auto& f = p.stack.back();
    const auto& m = method(p, f);
    const auto& s = m.body[f.pc];
    const bool back_edge = s.kind == StmtKind::loop && !f.ctx.empty() && f.ctx.back().loop && f.ctx.back().owner == f.pc;
    std::size_t ctl = control(f);
    if (back_edge) ctl = f.ctx.size() >= 2 ? f.ctx[f.ctx.size() - 2].owner_inst : kNone;

    std::optional<Message> msg;
    if (s.kind == StmtKind::recv) {
      auto& q = channels_[{s.peer, p.pm->process}];
      msg = q.front();
      q.pop_front();
    }
    const auto inst = instance(p, f, s, ctl);
    if (msg) insts_[inst].deps.push_back(msg->send_inst);
    emit(p, EventKind::stmt_cover, m.id).stmt_id = s.id;

    switch (s.kind) {
      case StmtKind::assign:
      case StmtKind::source:
        f.writer[s.def] = inst;
        ++f.pc;
        break;
      case StmtKind::sink:
        ++f.pc;
        break;
      case StmtKind::load: {
        auto it = p.heap.find({resolve(s.obj, f.receiver), s.field});
        if (it != p.heap.end()) insts_[inst].deps.push_back(it->second);
        f.writer[s.def] = inst;
        ++f.pc;
        break;
      }
      case StmtKind::store:
        p.heap[{resolve(s.obj, f.receiver), s.field}] = inst;
        ++f.pc;
        break;
      case StmtKind::send: {
        auto& e = emit(p, EventKind::send, m.id);
        e.msg_id = next_msg_;
        e.peer = s.peer;
        e.stmt_id = s.id;
        channels_[{p.pm->process, s.peer}].push_back({next_msg_, inst});
        ++next_msg_;
        ++f.pc;
        break;
      }
      case StmtKind::recv: {
        auto& e = emit(p, EventKind::recv, m.id);
        e.msg_id = msg->id;
        e.peer = s.peer;
        e.stmt_id = s.id;
        if (s.def != kNone) f.writer[s.def] = inst;
        ++f.pc;
        break;
      }
      case StmtKind::branch: {
        bool taken = rng_.chance(50);
        emit(p, EventKind::branch, m.id).branch_id = taken ? s.taken : s.not_taken;
        if (taken) {
          f.ctx.push_back(Ctx{f.pc, s.block_end, false, 0, inst});
          ++f.pc;
        } else {
          f.pc = s.block_end;
        }
        break;
      }
      case StmtKind::loop: {
        std::size_t remaining = back_edge ? f.ctx.back().remaining : (s.fixed_trips ? trips_ : rng_.below(3));
        bool enter_body = remaining > 0;
        emit(p, EventKind::branch, m.id).branch_id = enter_body ? s.taken : s.not_taken;
        if (enter_body) {
          if (back_edge) {
            f.ctx.back().remaining = remaining - 1;
            f.ctx.back().owner_inst = inst;
          } else {
            f.ctx.push_back(Ctx{f.pc, s.block_end, true, remaining - 1, inst});
          }
          ++f.pc;
        } else {
          if (back_edge) f.ctx.pop_back();
          f.pc = s.block_end;
        }
        break;
      }
      case StmtKind::call: {
        auto receiver = resolve(s.obj, f.receiver);
        enter(p, s.callee, receiver, inst);  // invalidates f
        break;
      }
      case StmtKind::ret: {
        emit(p, EventKind::returned_into, m.id);
        p.stack.pop_back();  // invalidates f
        if (p.stack.empty()) return;
        auto& caller = p.stack.back();
        const auto& cm = method(p, caller);
        emit(p, EventKind::returned_into, cm.id);
        const auto& call = cm.body[caller.pc];
        Instance back;
        back.stmt = call.id;
        back.method = p.base + caller.method;
        back.deps.push_back(inst);
        if (control(caller) != kNone) back.deps.push_back(control(caller));
        insts_.push_back(std::move(back));
        if (call.def != kNone) caller.writer[call.def] = insts_.size() - 1;
        ++caller.pc;
        break;
      }
    }
    normalize(p);
  }

  const ProgramModel& model_;
  Rng rng_;
  std::size_t trips_ = 1;
  std::vector<Proc> procs_;
  std::vector<MethodId> method_ids_;
  std::map<std::pair<ProcessId, ProcessId>, std::deque<Message>> channels_;
  MsgId next_msg_ = 1;
  std::vector<Instance> insts_;
  std::set<StmtId> source_set_, sink_set_;
};

std::vector<StmtId> loop_erase(const std::vector<StmtId>& walk) {
  std::vector<StmtId> out;
  for (auto s : walk) {
    auto it = std::find(out.begin(), out.end(), s);
    if (it != out.end()) {
      out.erase(it + 1, out.end());
    } else {
      out.push_back(s);
    }
  }
  return out;
}

GroundTruth Simulator::truth() const {
  GroundTruth gt;
  const auto n_methods = method_ids_.size();
  const auto words = (n_methods + 63) / 64;
  std::vector<std::vector<std::uint64_t>> origins(insts_.size(), std::vector<std::uint64_t>(words, 0));
  std::vector<std::vector<std::uint64_t>> reached_by(n_methods, std::vector<std::uint64_t>(words, 0));
  for (std::size_t i = 0; i < insts_.size(); ++i) {
    for (auto d : insts_[i].deps) {
      for (std::size_t w = 0; w < words; ++w) origins[i][w] |= origins[d][w];
      origins[i][insts_[d].method / 64] |= std::uint64_t{1} << (insts_[d].method % 64);
    }
    auto& acc = reached_by[insts_[i].method];
    for (std::size_t w = 0; w < words; ++w) acc[w] |= origins[i][w];
  }
  for (std::size_t m2 = 0; m2 < n_methods; ++m2) {
    for (std::size_t m1 = 0; m1 < n_methods; ++m1) {
      if (m1 != m2 && (reached_by[m2][m1 / 64] >> (m1 % 64) & 1)) gt.dyn_dep.insert({method_ids_[m1], method_ids_[m2]});
    }
  }

  std::vector<char> reaches_source(insts_.size(), 0);
  for (std::size_t i = 0; i < insts_.size(); ++i) {
    bool r = insts_[i].source;
    for (auto d : insts_[i].deps) r = r || reaches_source[d];
    reaches_source[i] = r;
  }
  constexpr std::size_t kPathsPerSink = 64;
  constexpr std::size_t kVisitsPerSink = 20000;
  for (std::size_t i = 0; i < insts_.size(); ++i) {
    if (!insts_[i].sink || !reaches_source[i]) continue;
    std::size_t found = 0, visits = 0;
    std::vector<std::size_t> walk{i};
    // iterative DFS over dependences, newest instance first
    std::vector<std::pair<std::size_t, std::size_t>> stack{{i, 0}};
    while (!stack.empty() && found < kPathsPerSink && visits < kVisitsPerSink) {
      auto& [node, next] = stack.back();
      if (next == 0 && insts_[node].source) {
        std::vector<StmtId> forward;
        for (auto it = walk.rbegin(); it != walk.rend(); ++it) forward.push_back(insts_[*it].stmt);
        gt.dyn_paths.insert(loop_erase(forward));
        ++found;
      }
      const auto& deps = insts_[node].deps;
      while (next < deps.size() && !reaches_source[deps[next]]) ++next;
      if (next == deps.size()) {
        stack.pop_back();
        walk.pop_back();
        continue;
      }
      auto child = deps[next++];
      ++visits;
      stack.push_back({child, 0});
      walk.push_back(child);
    }
  }
  return gt;
}

}  // namespace

ProgramModel generate_program(const Scenario& scenario) {
  validate(scenario);
  Rng rng(scenario.seed);
  Generator gen(scenario, rng);
  ProgramModel model;
  model.scenario = scenario;
  auto links = topology_links(scenario);
  const auto last = static_cast<ProcessId>(scenario.processes - 1);
  for (ProcessId p = 0; p <= last; ++p) {
    bool src = p == 0 || (p == last && rng.chance(30));
    bool snk = p == last || (p == 0 && rng.chance(30));
    model.processes.push_back(gen.process(p, links[p], src, snk));
  }
  model.sources = gen.sources;
  model.sinks = gen.sinks;
  std::sort(model.sources.begin(), model.sources.end());
  std::sort(model.sinks.begin(), model.sinks.end());

  // pick the main-loop trip count from the cost of one and two iterations
  Simulator one(model, scenario.seed);
  one.run(1);
  Simulator two(model, scenario.seed);
  two.run(2);
  auto e1 = one.event_count(), e2 = two.event_count();
  auto per = e2 > e1 ? e2 - e1 : 1;
  model.main_trips = scenario.length > e1 ? 1 + (scenario.length - e1) / per : 1;
  return model;
}

SimResult simulate(const ProgramModel& model, const Scenario& scenario) {
  validate(scenario);
  Simulator sim(model, scenario.seed);
  sim.run(model.main_trips);
  auto stamped = stamp_lamport(sim.traces());
  SimResult out;
  out.bundle.scenario = scenario.str();
  out.bundle.traces = std::move(stamped.traces);
  out.first_msgs = std::move(stamped.first_msgs);
  out.truth = sim.truth();
  return out;
}

// ---------------------------------------------------------------------------
// static graphs

namespace {

struct MethodShape {
  std::vector<std::size_t> parent;               // innermost enclosing branch/loop
  std::vector<std::vector<std::size_t>> succ;    // intraprocedural successors
};

MethodShape shape_of(const MethodModel& m) {
  const auto n = m.body.size();
  MethodShape sh;
  sh.parent.assign(n, kNone);
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < n; ++i) {
    while (!open.empty() && i >= m.body[open.back()].block_end) open.pop_back();
    sh.parent[i] = open.empty() ? kNone : open.back();
    if (m.body[i].kind == StmtKind::branch || m.body[i].kind == StmtKind::loop) open.push_back(i);
  }
  auto resolve = [&](std::size_t raw, std::size_t p) {
    while (p != kNone && raw == m.body[p].block_end) {
      if (m.body[p].kind == StmtKind::loop) return p;
      p = sh.parent[p];
    }
    return raw < n ? raw : kNone;
  };
  sh.succ.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = m.body[i];
    if (s.kind == StmtKind::ret) continue;
    if (s.kind == StmtKind::branch || s.kind == StmtKind::loop) {
      sh.succ[i].push_back(i + 1);
      auto out = resolve(s.block_end, sh.parent[i]);
      if (out != kNone) sh.succ[i].push_back(out);
    } else {
      auto next = resolve(i + 1, sh.parent[i]);
      if (next != kNone) sh.succ[i].push_back(next);
    }
  }
  return sh;
}

void local_data_edges(StaticDepGraph& g, const MethodModel& m, const MethodShape& sh, bool flow_sensitive) {
  const auto n = m.body.size();
  std::vector<std::size_t> defs;
  for (std::size_t i = 0; i < n; ++i) {
    if (m.body[i].def != kNone) defs.push_back(i);
  }
  auto add = [&](std::size_t d, std::size_t u) {
    if (d != u) g.add_edge(m.body[d].id, m.body[u].id, EdgeKind::intra_data);
  };
  if (!flow_sensitive) {
    for (std::size_t u = 0; u < n; ++u) {
      for (auto v : m.body[u].uses) {
        for (auto d : defs) {
          if (m.body[d].def == v) add(d, u);
        }
      }
    }
    return;
  }
  // reaching definitions, one bit per statement index
  std::vector<std::vector<char>> in(n, std::vector<char>(n, 0)), out(n, std::vector<char>(n, 0));
  std::vector<std::vector<std::size_t>> pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto s : sh.succ[i]) pred[s].push_back(i);
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<char> next_in(n, 0);
      for (auto p : pred[i]) {
        for (std::size_t k = 0; k < n; ++k) next_in[k] |= out[p][k];
      }
      auto next_out = next_in;
      if (m.body[i].def != kNone) {
        for (auto d : defs) {
          if (m.body[d].def == m.body[i].def) next_out[d] = 0;
        }
        next_out[i] = 1;
      }
      if (next_in != in[i] || next_out != out[i]) {
        in[i] = std::move(next_in);
        out[i] = std::move(next_out);
        changed = true;
      }
    }
  }
  for (std::size_t u = 0; u < n; ++u) {
    for (auto v : m.body[u].uses) {
      for (auto d : defs) {
        if (in[u][d] && m.body[d].def == v) add(d, u);
      }
    }
  }
}

}  // namespace

StaticDepGraph emit_static_graph(const ProgramModel& model, bool ctx_sensitive, bool flow_sensitive) {
  StaticDepGraph g;
  for (const auto& pm : model.processes) {
    const auto& methods = pm.methods;
    std::vector<MethodShape> shapes;
    for (const auto& m : methods) {
      shapes.push_back(shape_of(m));
      for (const auto& s : m.body) g.add_node(s.id, m.id);
    }
    if (!methods.empty() && !methods[0].body.empty()) g.entries.insert(methods[0].body[0].id);

    // receiver points-to sets; callers always precede callees
    std::vector<std::set<std::uint32_t>> pts(methods.size());
    if (!methods.empty()) pts[0] = {0};
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      for (const auto& s : methods[mi].body) {
        if (s.kind != StmtKind::call) continue;
        if (s.obj.is_this) pts[s.callee].insert(pts[mi].begin(), pts[mi].end());
        else pts[s.callee].insert(s.obj.object);
      }
    }

    struct Access {
      StmtId stmt;
      std::size_t method;
      std::uint32_t field;
      std::set<std::uint32_t> objects;
    };
    std::vector<Access> stores, loads;

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const auto& m = methods[mi];
      const auto& sh = shapes[mi];
      for (std::size_t i = 0; i < m.body.size(); ++i) {
        const auto& s = m.body[i];
        g.guards[s.id] = sh.parent[i] == kNone ? m.entry_branch : m.body[sh.parent[i]].taken;
        if (sh.parent[i] != kNone) g.add_edge(m.body[sh.parent[i]].id, s.id, EdgeKind::intra_control);
        if (s.kind == StmtKind::send) g.api_calls[s.id] = model.send_api;
        if (s.kind == StmtKind::recv) g.api_calls[s.id] = model.recv_api;
        for (auto n : sh.succ[i]) g.cfg.insert({s.id, m.body[n].id});
        if (s.kind == StmtKind::call) {
          const auto& callee = methods[s.callee];
          g.cfg.insert({s.id, callee.body.front().id});
          for (std::size_t k = 0; k < callee.body.size(); ++k) {
            const auto& cs = callee.body[k];
            if (cs.kind == StmtKind::ret) {
              for (auto n : sh.succ[i]) g.cfg.insert({cs.id, m.body[n].id});
            }
            bool reads_param = std::any_of(cs.uses.begin(), cs.uses.end(), [&](std::size_t u) { return u < callee.params; });
            if (reads_param) g.add_edge(s.id, cs.id, EdgeKind::inter_adjacent);
            if (cs.kind == StmtKind::ret) g.add_edge(cs.id, s.id, EdgeKind::inter_adjacent);
          }
        }
        if (s.kind == StmtKind::load || s.kind == StmtKind::store) {
          Access a{s.id, mi, s.field, {}};
          if (s.obj.is_this) a.objects = pts[mi];
          else a.objects = {s.obj.object};
          (s.kind == StmtKind::store ? stores : loads).push_back(std::move(a));
        }
      }
      local_data_edges(g, m, sh, flow_sensitive);
    }

    for (const auto& st : stores) {
      for (const auto& ld : loads) {
        if (st.field != ld.field) continue;
        if (ctx_sensitive) {
          bool alias = std::any_of(st.objects.begin(), st.objects.end(), [&](auto o) { return ld.objects.count(o) > 0; });
          if (!alias) continue;
        }
        g.add_edge(st.stmt, ld.stmt, st.method == ld.method ? EdgeKind::intra_data : EdgeKind::inter_posterior);
      }
    }
  }
  return g;
}

void write_ground_truth(std::ostream& out, const GroundTruth& truth) {
  for (const auto& [a, b] : truth.dyn_dep) out << "dep " << a.str() << ' ' << b.str() << '\n';
  for (const auto& path : truth.dyn_paths) {
    out << "path";
    for (auto s : path) out << ' ' << s;
    out << '\n';
  }
}

GroundTruth read_ground_truth(std::istream& in) {
  GroundTruth gt;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string tag;
    if (!(f >> tag) || tag[0] == '#') continue;
    if (tag == "dep") {
      std::string a, b;
      f >> a >> b;
      auto ma = parse_method_designator(a), mb = parse_method_designator(b);
      if (!ma || !mb) throw MalformedTrace("bad ground-truth line: " + line);
      gt.dyn_dep.insert({*ma, *mb});
    } else if (tag == "path") {
      std::vector<StmtId> path;
      StmtId s;
      while (f >> s) path.push_back(s);
      gt.dyn_paths.insert(std::move(path));
    } else {
      throw MalformedTrace("bad ground-truth line: " + line);
    }
  }
  return gt;
}

void write_simulation(const std::filesystem::path& dir, const ProgramModel& model, const SimResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "graphs");
  write_bundle(dir / "traces", result.bundle);
  std::vector<GraphVariant> variants;
  for (bool ctx : {true, false}) {
    for (bool flow : {true, false}) {
      GraphVariant v{ctx, flow, std::string("sdg_c") + (ctx ? "1" : "0") + "f" + (flow ? "1" : "0") + ".txt"};
      std::ofstream out(dir / "graphs" / v.file, std::ios::binary);
      write_graph(out, emit_static_graph(model, ctx, flow));
      variants.push_back(v);
    }
  }
  {
    std::ofstream out(dir / "graphs" / "graphs.txt", std::ios::binary);
    write_graph_manifest(out, variants);
  }
  {
    std::ofstream out(dir / "sources.txt", std::ios::binary);
    write_source_sink(out, model.source_sink());
  }
  {
    std::ofstream out(dir / "truth.txt", std::ios::binary);
    write_ground_truth(out, result.truth);
  }
  {
    std::ofstream out(dir / "scenario.txt", std::ios::binary);
    write_scenario(out, model.scenario);
  }
}

}  // namespace distflow
