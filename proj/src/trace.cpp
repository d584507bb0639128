#include "distflow/trace.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <tuple>

#include "distflow/error.hpp"

namespace distflow {

std::string MethodId::str() const {
  return "p" + std::to_string(process) + "." + class_name + "." + method_name;
}

std::string MethodId::signature() const { return class_name + "." + method_name; }

std::optional<MethodId> parse_method_designator(std::string_view text) {
  if (text.size() < 2 || text[0] != 'p') return std::nullopt;
  auto first_dot = text.find('.');
  auto last_dot = text.rfind('.');
  if (first_dot == std::string_view::npos || last_dot == first_dot) return std::nullopt;
  ProcessId proc = 0;
  auto digits = text.substr(1, first_dot - 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), proc);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  MethodId id;
  id.process = proc;
  id.class_name = std::string(text.substr(first_dot + 1, last_dot - first_dot - 1));
  id.method_name = std::string(text.substr(last_dot + 1));
  if (id.class_name.empty() || id.method_name.empty()) return std::nullopt;
  return id;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::entry: return "entry";
    case EventKind::returned_into: return "returned_into";
    case EventKind::send: return "send";
    case EventKind::recv: return "recv";
    case EventKind::branch: return "branch";
    case EventKind::stmt_cover: return "stmt_cover";
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (auto k : {EventKind::entry, EventKind::returned_into, EventKind::send, EventKind::recv,
                 EventKind::branch, EventKind::stmt_cover}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::optional<Timestamp> FirstMsgMap::get(ProcessId receiver, ProcessId sender) const {
  auto it = entries.find({receiver, sender});
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

namespace {

void check_sequence(const ProcessTrace& trace) {
  for (std::size_t i = 1; i < trace.events.size(); ++i) {
    if (trace.events[i].seq <= trace.events[i - 1].seq) {
      throw MalformedTrace("process " + std::to_string(trace.process) +
                           ": seq not strictly increasing at event " + std::to_string(i));
    }
  }
  for (const auto& e : trace.events) {
    if (e.method.process != trace.process) {
      throw MalformedTrace("event of process " + std::to_string(e.method.process) +
                           " stored in trace of process " + std::to_string(trace.process));
    }
  }
}

}  // namespace

StampResult stamp_lamport(TraceSet raw) {
  std::sort(raw.begin(), raw.end(),
            [](const ProcessTrace& a, const ProcessTrace& b) { return a.process < b.process; });
  std::map<MsgId, EventRef> sends;
  std::map<MsgId, EventRef> recvs;
  for (std::size_t t = 0; t < raw.size(); ++t) {
    check_sequence(raw[t]);
    for (std::size_t i = 0; i < raw[t].events.size(); ++i) {
      const auto& e = raw[t].events[i];
      if (e.kind != EventKind::send && e.kind != EventKind::recv) continue;
      if (!e.msg_id) throw MalformedTrace("message event without msg_id in process " + std::to_string(raw[t].process));
      auto& table = e.kind == EventKind::send ? sends : recvs;
      if (!table.emplace(*e.msg_id, EventRef{t, i}).second) {
        throw MalformedTrace("duplicate " + std::string(to_string(e.kind)) + " for msg_id " + std::to_string(*e.msg_id));
      }
    }
  }
  for (const auto& [msg, ref] : recvs) {
    auto it = sends.find(msg);
    if (it == sends.end()) throw MalformedTrace("recv with unknown msg_id " + std::to_string(msg));
    const auto& send = raw[it->second.trace].events[it->second.index];
    const auto& recv = raw[ref.trace].events[ref.index];
    if (send.peer && *send.peer != recv.process()) {
      throw MalformedTrace("msg_id " + std::to_string(msg) + " sent to process " + std::to_string(*send.peer) +
                           " but received by " + std::to_string(recv.process()));
    }
  }

  std::vector<std::size_t> pos(raw.size(), 0);
  std::vector<Timestamp> clock(raw.size(), 0);
  std::map<MsgId, Timestamp> piggyback;
  std::size_t remaining = 0;
  for (const auto& t : raw) remaining += t.events.size();

  while (remaining > 0) {
    bool progress = false;
    for (std::size_t t = 0; t < raw.size(); ++t) {
      auto& events = raw[t].events;
      while (pos[t] < events.size()) {
        auto& e = events[pos[t]];
        if (e.kind == EventKind::recv) {
          auto carried = piggyback.find(*e.msg_id);
          if (carried == piggyback.end()) break;  // sender not stamped yet
          clock[t] = std::max(clock[t], carried->second) + 1;
        } else {
          clock[t] += 1;
        }
        e.ts = clock[t];
        if (e.kind == EventKind::send) piggyback.emplace(*e.msg_id, e.ts);
        ++pos[t];
        --remaining;
        progress = true;
      }
    }
    if (!progress) throw CausalityError("cyclic message causality: no receive can be stamped");
  }

  StampResult result;
  result.first_msgs = first_message_map(raw);
  result.traces = std::move(raw);
  return result;
}

FirstMsgMap first_message_map(const TraceSet& traces) {
  FirstMsgMap map;
  for (const auto& trace : traces) {
    for (const auto& e : trace.events) {
      if (e.kind != EventKind::recv || !e.peer) continue;
      auto key = std::make_pair(trace.process, *e.peer);
      auto it = map.entries.find(key);
      if (it == map.entries.end() || e.ts < it->second) map.entries[key] = e.ts;
    }
  }
  return map;
}

GlobalOrder merge_global(const TraceSet& traces) {
  GlobalOrder order;
  for (const auto& trace : traces) {
    for (const auto& e : trace.events) {
      if (e.ts == 0) {
        throw Error(ErrorKind::data, "merge_global: unstamped event in process " + std::to_string(trace.process) +
                                         " seq " + std::to_string(e.seq));
      }
      order.merged.push_back(e);
    }
  }
  std::stable_sort(order.merged.begin(), order.merged.end(), [](const EventRecord& a, const EventRecord& b) {
    return std::tie(a.ts, a.method.process, a.seq) < std::tie(b.ts, b.method.process, b.seq);
  });
  return order;
}

CausalIndex::CausalIndex(const TraceSet& traces) : traces_(&traces), deliveries_(traces.size()) {
  std::map<MsgId, EventRef> recvs;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    trace_by_process_[traces[t].process] = t;
    for (std::size_t i = 0; i < traces[t].events.size(); ++i) {
      const auto& e = traces[t].events[i];
      if (e.kind == EventKind::recv && e.msg_id) recvs[*e.msg_id] = EventRef{t, i};
    }
  }
  for (std::size_t t = 0; t < traces.size(); ++t) {
    for (std::size_t i = 0; i < traces[t].events.size(); ++i) {
      const auto& e = traces[t].events[i];
      if (e.kind != EventKind::send || !e.msg_id) continue;
      auto it = recvs.find(*e.msg_id);
      if (it != recvs.end()) deliveries_[t].push_back({i, it->second});
    }
  }
}

std::vector<std::size_t> CausalIndex::reach_from(EventRef from) const {
  const auto n = traces_->size();
  std::vector<std::size_t> frontier(n, kUnreached);
  // scanned[t]: lowest event index whose outgoing messages were already followed
  std::vector<std::size_t> scanned(n, kUnreached);
  frontier[from.trace] = from.index + 1;
  std::deque<std::pair<std::size_t, std::size_t>> work;  // (trace, first index to scan)
  work.emplace_back(from.trace, from.index);
  while (!work.empty()) {
    auto [t, start] = work.front();
    work.pop_front();
    if (start >= scanned[t]) continue;
    const auto stop = scanned[t];
    scanned[t] = start;
    for (const auto& d : deliveries_[t]) {
      if (d.send_index < start || d.send_index >= stop) continue;
      if (d.recv.index < frontier[d.recv.trace]) {
        frontier[d.recv.trace] = d.recv.index;
        work.emplace_back(d.recv.trace, d.recv.index);
      }
    }
  }
  return frontier;
}

bool CausalIndex::happens_before(EventRef a, EventRef b) const {
  if (a.trace == b.trace) return a.index < b.index;
  auto frontier = reach_from(a);
  return frontier[b.trace] != kUnreached && b.index >= frontier[b.trace];
}

std::optional<std::size_t> CausalIndex::trace_of(ProcessId process) const {
  auto it = trace_by_process_.find(process);
  if (it == trace_by_process_.end()) return std::nullopt;
  return it->second;
}

std::optional<EventRef> CausalIndex::locate(ProcessId process, std::uint64_t seq) const {
  auto t = trace_of(process);
  if (!t) return std::nullopt;
  const auto& events = (*traces_)[*t].events;
  auto it = std::lower_bound(events.begin(), events.end(), seq,
                             [](const EventRecord& e, std::uint64_t s) { return e.seq < s; });
  if (it == events.end() || it->seq != seq) return std::nullopt;
  return EventRef{*t, static_cast<std::size_t>(it - events.begin())};
}

bool happens_before(const EventRecord& e1, const EventRecord& e2, const TraceSet& traces,
                    const FirstMsgMap& /*first_msgs*/) {
  CausalIndex index(traces);
  auto a = index.locate(e1.process(), e1.seq);
  auto b = index.locate(e2.process(), e2.seq);
  if (!a || !b) return false;
  return index.happens_before(*a, *b);
}

std::map<MethodId, MethodSpan> method_spans(const TraceSet& traces) {
  struct Acc {
    std::optional<std::size_t> first_entry, last_return;
    std::size_t first_any = 0, last_any = 0;
    bool seen = false;
  };
  std::map<MethodId, MethodSpan> spans;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    std::map<MethodId, Acc> acc;
    const auto& events = traces[t].events;
    for (std::size_t i = 0; i < events.size(); ++i) {
      auto& a = acc[events[i].method];
      if (!a.seen) {
        a.first_any = i;
        a.seen = true;
      }
      a.last_any = i;
      if (events[i].kind == EventKind::entry && !a.first_entry) a.first_entry = i;
      if (events[i].kind == EventKind::returned_into) a.last_return = i;
    }
    for (auto& [method, a] : acc) {
      MethodSpan span;
      span.first_entry = EventRef{t, a.first_entry.value_or(a.first_any)};
      span.last_return = EventRef{t, a.last_return.value_or(a.last_any)};
      span.fe = events[span.first_entry.index].ts;
      span.lr = events[span.last_return.index].ts;
      spans.emplace(method, span);
    }
  }
  return spans;
}

std::vector<MethodId> executed_methods(const ProcessTrace& trace) {
  std::vector<MethodId> out;
  for (const auto& e : trace.events) out.push_back(e.method);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace distflow
