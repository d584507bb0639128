#pragma once

// Event/trace data model, Lamport stamping and the global event order.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace distflow {

using ProcessId = std::uint32_t;
using StmtId = std::uint32_t;
using BranchId = std::uint32_t;
using MsgId = std::uint64_t;
using Timestamp = std::uint64_t;

struct MethodId {
  ProcessId process = 0;
  std::string class_name;
  std::string method_name;

  friend auto operator<=>(const MethodId&, const MethodId&) = default;

  /// "p<proc>.<class>.<method>", the designator used in reports.
  std::string str() const;
  /// "<class>.<method>", the process-independent code identity.
  std::string signature() const;
};

/// Parses the "p<proc>.<class>.<method>" designator produced by MethodId::str().
std::optional<MethodId> parse_method_designator(std::string_view text);

enum class EventKind : std::uint8_t { entry, returned_into, send, recv, branch, stmt_cover };

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

inline bool is_method_event(EventKind kind) {
  return kind == EventKind::entry || kind == EventKind::returned_into;
}

struct EventRecord {
  EventKind kind = EventKind::stmt_cover;
  MethodId method;
  Timestamp ts = 0;  // 0 until stamped
  std::uint64_t seq = 0;
  std::optional<MsgId> msg_id;       // send/recv
  std::optional<ProcessId> peer;     // send/recv
  std::optional<BranchId> branch_id; // branch
  std::optional<StmtId> stmt_id;     // stmt_cover, and the callsite of send/recv

  ProcessId process() const { return method.process; }
  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct ProcessTrace {
  ProcessId process = 0;
  std::vector<EventRecord> events;

  friend bool operator==(const ProcessTrace&, const ProcessTrace&) = default;
};

/// One trace per process, ordered by process id.
using TraceSet = std::vector<ProcessTrace>;

/// Timestamp of the first message a receiver got from each sender.
struct FirstMsgMap {
  std::map<std::pair<ProcessId, ProcessId>, Timestamp> entries;  // (receiver, sender)

  std::optional<Timestamp> get(ProcessId receiver, ProcessId sender) const;
  friend bool operator==(const FirstMsgMap&, const FirstMsgMap&) = default;
};

struct StampResult {
  TraceSet traces;
  FirstMsgMap first_msgs;
};

/// Assigns Lamport timestamps to every event: local events and sends tick the
/// process counter, a receive takes max(local, piggybacked) + 1. Existing
/// timestamps are ignored, so stamping is idempotent.
/// Throws MalformedTrace for unmatched receives and CausalityError when the
/// message matching admits no causal order.
StampResult stamp_lamport(TraceSet raw);

FirstMsgMap first_message_map(const TraceSet& traces);

struct GlobalOrder {
  std::vector<EventRecord> merged;
};

/// Total order by (ts, process id, seq). Throws on unstamped events.
GlobalOrder merge_global(const TraceSet& traces);

/// Position of an event inside a TraceSet.
struct EventRef {
  std::size_t trace = 0;  // index into the TraceSet, not the process id
  std::size_t index = 0;

  friend auto operator<=>(const EventRef&, const EventRef&) = default;
};

inline constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();

/// Happens-before queries over program order plus send->recv edges.
class CausalIndex {
 public:
  explicit CausalIndex(const TraceSet& traces);

  /// For every trace, the first event index that `from` happens-before
  /// (kUnreached when no event of that trace is causally after `from`).
  std::vector<std::size_t> reach_from(EventRef from) const;

  bool happens_before(EventRef a, EventRef b) const;

  std::optional<EventRef> locate(ProcessId process, std::uint64_t seq) const;
  std::optional<std::size_t> trace_of(ProcessId process) const;
  const TraceSet& traces() const { return *traces_; }

 private:
  struct Delivery {
    std::size_t send_index;
    EventRef recv;
  };
  const TraceSet* traces_;
  std::map<ProcessId, std::size_t> trace_by_process_;
  std::vector<std::vector<Delivery>> deliveries_;  // per trace, ordered by send index
};

bool happens_before(const EventRecord& e1, const EventRecord& e2, const TraceSet& traces,
                    const FirstMsgMap& first_msgs);

/// First-entry / last-returned-into anchors of one method in its trace.
struct MethodSpan {
  EventRef first_entry;
  EventRef last_return;
  Timestamp fe = 0;
  Timestamp lr = 0;
};

/// fe/lr of every method with events. lr is the last returned-into event;
/// methods without one fall back to their last event (and fe to the first
/// event when no entry was recorded).
std::map<MethodId, MethodSpan> method_spans(const TraceSet& traces);

/// Methods having at least one event in the given trace.
std::vector<MethodId> executed_methods(const ProcessTrace& trace);

}  // namespace distflow
