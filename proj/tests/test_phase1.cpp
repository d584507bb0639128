#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "distflow/phase1.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "sweep.hpp"

using namespace distflow;
using fixture::ev;
using fixture::msg;

namespace {

// P0: q sends to P1. P1: r relays to P2. P2: x receives inside its span, y
// finishes before anything arrives.
TraceSet relay() {
  TraceSet t(3);
  t[0].process = 0;
  t[0].events = {ev(EventKind::entry, 0, "S", "q", 1), msg(EventKind::send, 0, "S", "q", 2, 1, 1),
                 ev(EventKind::returned_into, 0, "S", "q", 3)};
  t[1].process = 1;
  t[1].events = {ev(EventKind::entry, 1, "R", "r", 1), msg(EventKind::recv, 1, "R", "r", 2, 1, 0),
                 msg(EventKind::send, 1, "R", "r", 3, 2, 2), ev(EventKind::returned_into, 1, "R", "r", 4)};
  t[2].process = 2;
  t[2].events = {ev(EventKind::entry, 2, "T", "y", 1), ev(EventKind::returned_into, 2, "T", "y", 2),
                 ev(EventKind::entry, 2, "T", "x", 3), msg(EventKind::recv, 2, "T", "x", 4, 2, 1),
                 ev(EventKind::returned_into, 2, "T", "x", 5)};
  return stamp_lamport(t).traces;
}

std::vector<MethodId> chain_methods(const StaticDepGraph& g, const std::vector<StmtId>& path) {
  std::vector<MethodId> out;
  for (auto s : path) {
    const auto& m = g.method_of(s);
    if (out.empty() || out.back() != m) out.push_back(m);
  }
  return out;
}

}  // namespace

TEST_CASE("remote members are found through relays") {
  auto t = relay();
  auto fm = first_message_map(t);
  MethodId q{0, "S", "q"}, r{1, "R", "r"}, x{2, "T", "x"}, y{2, "T", "y"};
  auto ds = method_ds(q, t, fm);
  CHECK(ds.members == std::set<MethodId>{q, r, x});

  // the per-pair first-message rule only looks at direct senders
  auto literal = method_ds(q, t, fm, RemoteRule::first_message);
  CHECK(literal.members == std::set<MethodId>{q});

  // nothing flows back to P0
  CHECK(method_ds(x, t, fm).members == std::set<MethodId>{x});
  CHECK(method_ds(y, t, fm).members == std::set<MethodId>{y, x});
}

TEST_CASE("first-message rule within its own reading") {
  // P1 receives from P0 during m, so m joins DS(q) when q's process is the
  // receiver of the recorded first message
  TraceSet t(2);
  t[0].process = 0;
  t[0].events = {ev(EventKind::entry, 0, "S", "q", 1), msg(EventKind::recv, 0, "S", "q", 2, 1, 1),
                 ev(EventKind::returned_into, 0, "S", "q", 3)};
  t[1].process = 1;
  t[1].events = {ev(EventKind::entry, 1, "R", "m", 1), msg(EventKind::send, 1, "R", "m", 2, 1, 0),
                 ev(EventKind::returned_into, 1, "R", "m", 3)};
  auto s = stamp_lamport(t);
  auto ds = method_ds(MethodId{0, "S", "q"}, s.traces, s.first_msgs, RemoteRule::first_message);
  CHECK(ds.members.count(MethodId{1, "R", "m"}));
  CHECK_FALSE(method_ds(MethodId{0, "S", "q"}, s.traces, s.first_msgs).members.count(MethodId{1, "R", "m"}));
}

TEST_CASE("a lone source-sink method is a one-method path") {
  TraceSet t(1);
  t[0].events = {ev(EventKind::entry, 0, "S", "q", 1), ev(EventKind::returned_into, 0, "S", "q", 2)};
  t = stamp_lamport(t).traces;
  MethodId q{0, "S", "q"};
  auto res = method_level_paths(t, first_message_map(t), {q}, {q});
  REQUIRE(res.paths.size() == 1);
  CHECK(res.paths[0].methods == std::vector<MethodId>{q});
}

TEST_CASE("unexecuted query has an empty set") {
  auto t = relay();
  CHECK(method_ds(MethodId{0, "S", "nope"}, t, first_message_map(t)).members.empty());
}

TEST_CASE("paths run source, ordered members, sink") {
  auto t = relay();
  auto fm = first_message_map(t);
  MethodId q{0, "S", "q"}, r{1, "R", "r"}, x{2, "T", "x"};
  auto res = method_level_paths(t, fm, {q}, {x, q});
  REQUIRE(res.paths.size() == 2);
  CHECK(res.paths[0].methods == std::vector<MethodId>{q, r, x});
  CHECK(format_path(res.paths[0]) == "path level=method p0.S.q -> p1.R.r -> p2.T.x");
  // back into the source: everything that started before q last returned
  CHECK(res.paths[1].methods == std::vector<MethodId>{q, r, x, q});
  CHECK(res.path_methods == std::set<MethodId>{q, r, x});
  CHECK_FALSE(res.truncated);

  Phase1Options tight;
  tight.path_limit = 2;
  auto cut = method_level_paths(t, fm, {q}, {x}, tight);
  REQUIRE(cut.paths.size() == 1);
  CHECK(cut.truncated);
  CHECK(cut.paths[0].methods == std::vector<MethodId>{q, x});
  CHECK(format_path(cut.paths[0]).ends_with(" truncated"));
  CHECK(cut.path_methods.count(r));
}

TEST_CASE("dependence sets match the definition on simulated runs") {
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    auto run = sweep::run(seed);
    const auto& traces = run.sim.bundle.traces;
    if (sweep::event_count(traces) > 200) continue;
    auto closure = oracle::closure(traces);
    auto anchors = oracle::anchors(traces);
    Phase1Context ctx(traces, run.sim.first_msgs);
    CHECK(ctx.executed().size() == anchors.size());
    for (const auto& [q, a] : anchors) {
      CHECK(ctx.method_ds(q).members == oracle::ds_by_definition(q, traces, closure, anchors));
      ++checked;
    }
  }
  CHECK(checked > 500);
}

TEST_CASE("emitted paths respect time order and cover ground-truth chains") {
  Phase1Options wide;
  wide.path_limit = 256;
  std::size_t chains = 0;
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    auto run = sweep::run(seed);
    const auto& traces = run.sim.bundle.traces;
    auto g = emit_static_graph(run.model, false, true);
    auto cfg = run.model.source_sink();
    auto res = method_level_paths(traces, run.sim.first_msgs, enclosing_methods(g, cfg.sources),
                                  enclosing_methods(g, cfg.sinks), wide);
    CHECK_FALSE(res.truncated);
    Phase1Context ctx(traces, run.sim.first_msgs);
    for (const auto& p : res.paths) CHECK(satisfies_order(p, ctx.executed()));
    for (const auto& gt : run.sim.truth.dyn_paths) {
      auto chain = chain_methods(g, gt);
      bool covered = false;
      for (const auto& p : res.paths) {
        if (p.methods.front() != chain.front() || p.methods.back() != chain.back()) continue;
        std::set<MethodId> on(p.methods.begin(), p.methods.end());
        covered = covered || std::all_of(chain.begin(), chain.end(), [&](const MethodId& m) { return on.count(m); });
      }
      CHECK(covered);
      ++chains;
    }
  }
  CHECK(chains > 50);
}
