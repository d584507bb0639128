#pragma once

// Small hand-built traces shared by several tests.

#include "distflow/trace.hpp"

namespace fixture {

using namespace distflow;

inline EventRecord ev(EventKind kind, ProcessId p, std::string cls, std::string method, std::uint64_t seq) {
  EventRecord e;
  e.kind = kind;
  e.method = MethodId{p, std::move(cls), std::move(method)};
  e.seq = seq;
  return e;
}

inline EventRecord msg(EventKind kind, ProcessId p, std::string cls, std::string method, std::uint64_t seq,
                       MsgId id, ProcessId peer) {
  auto e = ev(kind, p, std::move(cls), std::move(method), seq);
  e.msg_id = id;
  e.peer = peer;
  return e;
}

/// The three-process clock example: A runs a then sends m1 (b); B receives m1
/// (c) and sends m2 (d); C runs e then receives m2 (f).
inline TraceSet lamport_figure() {
  TraceSet t(3);
  t[0].process = 0;
  t[0].events = {ev(EventKind::branch, 0, "A", "run", 1), msg(EventKind::send, 0, "A", "run", 2, 1, 1)};
  t[1].process = 1;
  t[1].events = {msg(EventKind::recv, 1, "B", "run", 1, 1, 0), msg(EventKind::send, 1, "B", "run", 2, 2, 2)};
  t[2].process = 2;
  t[2].events = {ev(EventKind::branch, 2, "C", "run", 1), msg(EventKind::recv, 2, "C", "run", 2, 2, 1)};
  return t;
}

}  // namespace fixture
