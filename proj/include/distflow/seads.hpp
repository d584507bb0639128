#pragma once

// Self-tuning online dependence analysis: configuration encoding, per-config
// dependence computation, the arbitration loop and cross-process merging.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "distflow/graph.hpp"
#include "distflow/phase1.hpp"
#include "distflow/trace.hpp"

namespace distflow {

/// Six bits, most significant first: staticGraph, contextSensitivity,
/// flowSensitivity, methodEvent, statementCoverage, methodInstanceLevel.
struct Configuration {
  std::uint8_t bits = 0;

  static constexpr std::uint8_t kGraph = 1 << 5;
  static constexpr std::uint8_t kContext = 1 << 4;
  static constexpr std::uint8_t kFlow = 1 << 3;
  static constexpr std::uint8_t kEvents = 1 << 2;
  static constexpr std::uint8_t kCoverage = 1 << 1;
  static constexpr std::uint8_t kInstances = 1 << 0;

  bool graph() const { return bits & kGraph; }
  bool context() const { return bits & kContext; }
  bool flow() const { return bits & kFlow; }
  bool events() const { return bits & kEvents; }
  bool coverage() const { return bits & kCoverage; }
  bool instances() const { return bits & kInstances; }

  /// The bits that decide which static graph is built.
  std::uint8_t static_part() const { return bits & (kGraph | kContext | kFlow); }

  std::string str() const;
  static std::optional<Configuration> parse(std::string_view text);

  friend auto operator<=>(const Configuration&, const Configuration&) = default;
};

inline constexpr Configuration kMostPrecise{0b111111};

bool config_valid(Configuration c);
/// All valid configurations in encoding order.
std::vector<Configuration> valid_configurations();

struct Budget {
  double total = 30;
  double construct = 21;  // sgc_T
  double load = 6;        // sgl_T
  double deps = 3;        // d_T

  /// Splits `total` by the given fractions; throws ConfigError when the parts
  /// are not positive or exceed the total.
  static Budget split(double total, double construct_share = 0.7, double load_share = 0.2, double deps_share = 0.1);
};

struct MethodEvent {
  MethodId method;
  EventKind kind = EventKind::entry;  // entry or returned_into
  std::uint64_t seq = 0;
};

using EventQueue = std::vector<MethodEvent>;
using DepMap = std::map<MethodId, std::set<MethodId>>;
using GraphVariants = std::map<std::pair<bool, bool>, StaticDepGraph>;  // (ctx, flow)

EventQueue method_events(const ProcessTrace& trace);
/// First entry and last returned-into event of every method.
EventQueue first_last_instances(const EventQueue& qu);

/// Dependence sets of every method in `qu` under configuration `c`.
/// Throws ConfigError for an invalid configuration or a missing graph variant.
DepMap compute_deps(const EventQueue& qu, Configuration c, const GraphVariants& graphs,
                    const std::set<StmtId>& coverage);

/// Deterministic stand-in for measured analysis time.
struct CostModel {
  enum class Mode { synthetic, wallclock };
  Mode mode = Mode::synthetic;
  double construct_per_unit = 0.05;  // per node+edge of the chosen variant
  double context_factor = 2.0;       // extra construction multiplier for each sensitivity
  double flow_factor = 1.0;
  double load_per_unit = 0.01;
  double coverage_load_factor = 0.5;
  double deps_per_event = 0.005;
  double instance_factor = 1.0;

  double construct_cost(Configuration c, std::size_t graph_units) const;
  double load_cost(Configuration c, std::size_t graph_units) const;
  double deps_cost(Configuration c, std::size_t events) const;
};

struct RoundRecord {
  std::size_t index = 0;
  Configuration config;
  double cost = 0;  // all attempted phases at full cost
  double budget = 0;
  bool timeout = false;
  double overrun = 0;  // by how much the failing phase exceeded its share
  bool rebuilt = false;
  std::size_t events = 0;  // queue length the round saw
};

/// What the learner is charged: the round cost, or past the budget by the
/// overrun when a phase timed out.
double effective_cost(const RoundRecord& r);

class ConfigController {
 public:
  virtual ~ConfigController() = default;
  /// Told how the last round went; returns the configuration for the next one.
  virtual Configuration next(const RoundRecord& round) = 0;
};

/// Never adapts.
class PinnedController : public ConfigController {
 public:
  explicit PinnedController(Configuration c = kMostPrecise) : config_(c) {}
  Configuration next(const RoundRecord&) override { return config_; }

 private:
  Configuration config_;
};

struct ArbiterState {
  std::size_t g_counter = 0;
  double last_t = 0;
  double now = 0;
  EventQueue qu;
  std::set<StmtId> coverage;
  std::set<BranchId> taken;
  Configuration tcn = kMostPrecise;
  Configuration old_tcn = kMostPrecise;
  std::optional<std::uint8_t> built;  // static part of the graph in hand
  std::size_t tc = 1000;
  double tt = 0;
};


struct ArbitrationLog {
  std::vector<RoundRecord> rounds;
  std::vector<std::optional<DepMap>> maps;  // one per round, empty on timeout
};

struct ArbiterOptions {
  Budget budget;
  CostModel costs;
  bool final_round = false;  // run one more round for events left at stream end
};

/// Feeds `stream` through the monitor: method events fill QU, coverage events
/// update coverage, and a round runs whenever gCounter > TC and more than TT
/// logical time has passed.
ArbitrationLog arbitrate(ArbiterState& state, const ProcessTrace& stream, const GraphVariants& graphs,
                         ConfigController& controller, const ArbiterOptions& options);

std::string format_round(const RoundRecord& r);

/// One process's last completed round, shared read-only with queriers.
struct Snapshot {
  ProcessId process = 0;
  DepMap deps;
  ArbitrationLog log;
};

using ControllerFactory = std::function<std::unique_ptr<ConfigController>(ProcessId)>;

/// One worker thread per process; returns snapshots ordered by process id.
std::vector<Snapshot> run_workers(const TraceSet& traces, const GraphVariants& graphs, const ArbiterState& initial,
                                  const ControllerFactory& make_controller, const ArbiterOptions& options);

/// Cross-process dependence set of Q from per-process intra-process results.
DependenceSet merge_query(const MethodId& q, const std::map<ProcessId, DepMap>& intra, const TraceSet& traces);

std::string format_ds(const DependenceSet& ds);

}  // namespace distflow
