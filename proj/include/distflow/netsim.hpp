#pragma once

// Deterministic multi-process program generator and simulator. Produces
// Lamport-stamped traces, static dependence graphs at four sensitivity
// levels and the ground truth the analyses are checked against.

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "distflow/graph.hpp"
#include "distflow/trace.hpp"
#include "distflow/trace_io.hpp"

namespace distflow {

enum class Topology { client_server, peer_to_peer, n_tier };

struct Scenario {
  Topology topology = Topology::client_server;
  std::uint64_t seed = 0;
  std::size_t length = 200;    // target event count
  std::size_t processes = 2;   // peers or tiers; fixed to 2 for client_server
  bool isolated = false;       // no messaging at all

  std::string str() const;
};

Scenario read_scenario(std::istream& in);
void write_scenario(std::ostream& out, const Scenario& s);

enum class StmtKind { assign, load, store, call, branch, loop, source, sink, ret, send, recv };

inline constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

/// Object a field access or a call receiver refers to.
struct ObjRef {
  bool is_this = true;
  std::uint32_t object = 0;  // when !is_this
};

struct Stmt {
  StmtId id = 0;
  StmtKind kind = StmtKind::assign;
  std::vector<std::size_t> uses;   // local slots read (call: the arguments)
  std::size_t def = kNone;         // local slot written
  std::uint32_t field = 0;         // load/store
  ObjRef obj;                      // load/store target, call receiver
  std::size_t callee = kNone;      // method index within the process
  std::size_t block_end = 0;       // branch/loop: index one past the block
  BranchId taken = 0;              // branch/loop edge ids
  BranchId not_taken = 0;
  bool fixed_trips = false;        // loop runs the scenario's iteration count
  ProcessId peer = 0;              // send/recv
};

struct MethodModel {
  MethodId id;
  std::size_t params = 0;
  std::size_t locals = 0;  // including params, which are read-only
  BranchId entry_branch = 0;
  std::vector<Stmt> body;  // flattened; blocks delimited by block_end
};

struct ProcessModel {
  ProcessId process = 0;
  std::vector<MethodModel> methods;  // [0] is main; calls only go to higher indices
  std::uint32_t objects = 2;
  std::uint32_t fields = 2;
};

struct ProgramModel {
  Scenario scenario;
  std::vector<ProcessModel> processes;
  std::size_t main_trips = 1;
  std::vector<StmtId> sources;
  std::vector<StmtId> sinks;
  std::string send_api = "Channel.send";
  std::string recv_api = "Channel.recv";

  SourceSinkConfig source_sink() const;
  std::set<std::pair<MethodId, MethodId>> call_edges() const;
};

struct GroundTruth {
  std::set<std::pair<MethodId, MethodId>> dyn_dep;  // (m1, m2): m2 depends on m1
  std::set<std::vector<StmtId>> dyn_paths;          // source -> sink statement paths

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct SimResult {
  TraceBundle bundle;
  FirstMsgMap first_msgs;
  GroundTruth truth;
};

/// Throws UsageError for invalid scenarios (n_tier with fewer than 2 tiers, ...).
ProgramModel generate_program(const Scenario& scenario);
SimResult simulate(const ProgramModel& model, const Scenario& scenario);
StaticDepGraph emit_static_graph(const ProgramModel& model, bool ctx_sensitive, bool flow_sensitive);

void write_ground_truth(std::ostream& out, const GroundTruth& truth);
GroundTruth read_ground_truth(std::istream& in);

/// Writes traces/, graphs/ (four variants + graphs.txt), sources.txt and
/// truth.txt under `dir`.
void write_simulation(const std::filesystem::path& dir, const ProgramModel& model, const SimResult& result);

}  // namespace distflow
