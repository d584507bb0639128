// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "distflow/metrics.hpp"
#include "distflow/netsim.hpp"
#include "distflow/phase1.hpp"
#include "distflow/phase2.hpp"
#include "distflow/qlearn.hpp"
#include "distflow/seads.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "sweep.hpp"

namespace fs = std::filesystem;
using namespace distflow;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failures; a criterion passes only with none.
struct Check {
  std::size_t failures = 0;
  std::string first;

  void operator()(bool ok, const std::string& what) {
    if (ok) return;
    if (failures++ == 0) first = what;
  }
  Outcome done(const std::string& summary) const {
    if (failures == 0) return {true, summary};
    return {false, summary + "; " + std::to_string(failures) + " failures, first: " + first};
  }
};

// Seeds whose runs stay within 200 events; the sweep already caps processes at 5.
const std::vector<std::uint64_t>& small_seeds() {
  static const auto seeds = [] {
    std::vector<std::uint64_t> out;
    for (std::uint64_t seed = 0; out.size() < 1000; ++seed) {
      auto run = sweep::run(seed);
      if (run.model.processes.size() <= 5 && sweep::event_count(run.sim.bundle.traces) <= 200) out.push_back(seed);
    }
    return out;
  }();
  return seeds;
}

std::vector<MethodId> chain_methods(const StaticDepGraph& g, const std::vector<StmtId>& path) {
  std::vector<MethodId> out;
  for (auto s : path) {
    const auto& m = g.method_of(s);
    if (out.empty() || out.back() != m) out.push_back(m);
  }
  return out;
}

Outcome lamport_fixture() {
  auto stamped = stamp_lamport(fixture::lamport_figure()).traces;
  const auto c = stamped[1].events[0].ts, f = stamped[2].events[1].ts;
  Check check;
  check(c == 3, "ts(c) = " + std::to_string(c));
  check(f == 5, "ts(f) = " + std::to_string(f));
  return check.done("ts(c)=" + std::to_string(c) + " ts(f)=" + std::to_string(f));
}

Outcome method_level_oracle() {
  Check check;
  std::size_t sets = 0, chains = 0, covered_capped = 0;
  for (auto seed : small_seeds()) {
    auto run = sweep::run(seed);
    const auto& traces = run.sim.bundle.traces;
    auto closure = oracle::closure(traces);
    auto anchors = oracle::anchors(traces);
    Phase1Context ctx(traces, run.sim.first_msgs);
    check(ctx.executed().size() == anchors.size(), "executed set, seed " + std::to_string(seed));
    for (const auto& [q, a] : anchors) {
      check(ctx.method_ds(q).members == oracle::ds_by_definition(q, traces, closure, anchors),
            "DS(" + q.str() + "), seed " + std::to_string(seed));
      ++sets;
    }

    auto g = emit_static_graph(run.model, false, true);
    auto cfg = run.model.source_sink();
    const auto sources = enclosing_methods(g, cfg.sources), sinks = enclosing_methods(g, cfg.sinks);
    // uncapped: no printed path can be longer than every method plus the repeated endpoint
    Phase1Options uncapped;
    uncapped.path_limit = anchors.size() + 2;
    auto res = method_level_paths(traces, run.sim.first_msgs, sources, sinks, uncapped);
    auto capped = method_level_paths(traces, run.sim.first_msgs, sources, sinks);
    check(!res.truncated, "uncapped run truncated, seed " + std::to_string(seed));
    auto covers = [](const Phase1Result& r, const std::vector<MethodId>& chain) {
      for (const auto& p : r.paths) {
        if (p.methods.front() != chain.front() || p.methods.back() != chain.back()) continue;
        std::set<MethodId> on(p.methods.begin(), p.methods.end());
        if (std::all_of(chain.begin(), chain.end(), [&](const MethodId& m) { return on.count(m) > 0; })) return true;
      }
      return false;
    };
    for (const auto& gt : run.sim.truth.dyn_paths) {
      auto chain = chain_methods(g, gt);
      check(covers(res, chain), "uncovered chain, seed " + std::to_string(seed));
      covered_capped += covers(capped, chain);
      ++chains;
    }
  }
  check(chains > 0, "no ground-truth chains in the sweep");
  return check.done(std::to_string(small_seeds().size()) + " runs, " + std::to_string(sets) + " sets, " +
                    std::to_string(chains) + " chains covered (" + std::to_string(covered_capped) +
                    " with the default 16-method print cap)");
}

Outcome statement_level_soundness() {
  Check check;
  std::size_t truths = 0, paths = 0, junctions = 0;
  for (auto seed : small_seeds()) {
    const auto tag = ", seed " + std::to_string(seed);
    auto run = sweep::run(seed);
    const auto& traces = run.sim.bundle.traces;
    auto g = emit_static_graph(run.model, false, true);
    auto cfg = run.model.source_sink();
    auto es = merge_global(traces);
    auto covered = statement_coverage(g, traces);

    std::set<std::vector<StmtId>> found[3];
    const PipelineMode modes[3] = {PipelineMode::default_mode, PipelineMode::sim, PipelineMode::mul};
    for (int i = 0; i < 3; ++i) {
      FlowOptions o;
      o.mode = modes[i];
      auto rep = run_flowpaths(traces, g, cfg, o);
      check(!rep.phase2.truncated, "search truncated" + tag);
      for (const auto& p : rep.phase2.intra) found[i].insert(p.stmts);
      for (const auto& p : rep.phase2.inter) {
        found[i].insert(p.stmts);
        for (std::size_t k = 0; k + 1 < p.stmts.size(); ++k) {
          auto a = p.stmts[k], b = p.stmts[k + 1];
          auto pa = g.method_of(a).process, pb = g.method_of(b).process;
          if (pa == pb) continue;
          check(oracle::junction(es.merged, a, pa, b, pb), "junction with intervening event" + tag);
          junctions += i == 0;
        }
      }
      for (const auto& p : found[i]) {
        for (auto s : p) check(covered.count(s) > 0, "uncovered statement " + std::to_string(s) + tag);
      }
    }
    paths += found[0].size();
    check(found[0] == found[1], "default and sim modes differ" + tag);
    check(found[0] == found[2], "default and mul modes differ" + tag);
    for (const auto& p : run.sim.truth.dyn_paths) {
      check(found[0].count(p) > 0, "ground-truth path missing" + tag);
      ++truths;
    }
  }
  return check.done(std::to_string(paths) + " paths, " + std::to_string(junctions) + " junctions, " +
                    std::to_string(truths) + " ground-truth paths recovered");
}

Outcome configuration_enumeration() {
  auto matches = [](unsigned bits, const char* mask) {
    for (int i = 0; i < 6; ++i) {
      const bool bit = bits & (1u << (5 - i));
      if (mask[i] != 'x' && (mask[i] == '1') != bit) return false;
    }
    return true;
  };
  const char* masks[] = {"001xxx", "010xxx", "011xxx", "0xxx1x", "xxx0x1", "000000"};
  Check check;
  std::size_t valid = 0;
  for (unsigned b = 0; b < 64; ++b) {
    bool invalid = std::any_of(std::begin(masks), std::end(masks), [&](const char* m) { return matches(b, m); });
    Configuration c{static_cast<std::uint8_t>(b)};
    check(config_valid(c) == !invalid, "encoding " + c.str());
    valid += config_valid(c);
  }
  check(valid == 26, "valid count " + std::to_string(valid));
  check(valid_configurations().size() == 26, "enumeration size");
  return check.done(std::to_string(valid) + " of 64 valid");
}

Outcome subsumption_and_recall() {
  Check check;
  const auto configs = valid_configurations();
  std::size_t queries = 0, truths = 0;
  const std::size_t runs = small_seeds().size();
  for (std::size_t k = 0; k < runs; ++k) {
    const auto seed = small_seeds()[k];
    auto run = sweep::run(seed);
    const auto& traces = run.sim.bundle.traces;
    GraphVariants gv;
    for (bool c : {false, true}) {
      for (bool f : {false, true}) gv[{c, f}] = emit_static_graph(run.model, c, f);
    }
    std::set<MethodId> executed;
    for (const auto& t : traces) {
      for (const auto& e : t.events) {
        if (is_method_event(e.kind)) executed.insert(e.method);
      }
    }
    std::map<Configuration, std::map<MethodId, std::set<MethodId>>> merged;
    for (auto c : configs) {
      std::map<ProcessId, DepMap> intra;
      for (const auto& t : traces) {
        auto cov = statement_coverage(gv.at({c.context(), c.flow()}), {t});
        intra[t.process] = compute_deps(method_events(t), c, gv, cov);
      }
      for (const auto& q : executed) merged[c][q] = merge_query(q, intra, traces).members;
      for (const auto& [from, to] : run.sim.truth.dyn_dep) {
        check(merge_query(from, intra, traces).members.count(to) > 0,
              "lost " + from.str() + " -> " + to.str() + " under " + c.str() + ", seed " + std::to_string(seed));
        truths += c == kMostPrecise;
      }
    }
    for (auto c : configs) {
      for (const auto& q : executed) {
        const auto& big = merged[c][q];
        const auto& small = merged[kMostPrecise][q];
        check(std::includes(big.begin(), big.end(), small.begin(), small.end()),
              c.str() + " misses part of DS(" + q.str() + "), seed " + std::to_string(seed));
        ++queries;
      }
    }
  }
  return check.done(std::to_string(runs) + " runs, " + std::to_string(queries) + " query/config pairs, " +
                    std::to_string(truths) + " ground-truth dependences at 100% recall");
}

Outcome learning_arithmetic() {
  Check check;
  check(reward(60000, 40000) == 0.05, "reward(60000, 40000)");
  QTable q;
  LearnerParams p;
  update(q, kMostPrecise, kMostPrecise, reward(60000, 40000), p);
  const double cell = q.get(kMostPrecise, kMostPrecise);
  check(std::abs(cell - 0.045) < 1e-15, "update gave " + std::to_string(cell));

  // exploitation is visible whenever the random pick differs from the greedy action
  const auto all = valid_configurations();
  QTable t;
  const auto best = Configuration{0b110101};
  t.set(kMostPrecise, best, 1);
  std::ostringstream rates;
  for (double eps : {0.0, 0.2, 1.0}) {
    LearnerParams lp;
    lp.epsilon = eps;
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> any(0, all.size() - 1);
    std::size_t n = 0, exploit = 0;
    for (int i = 0; i < 10000; ++i) {
      const double draw = unit(rng);
      const std::size_t pick = any(rng);
      auto a = select_action(t, kMostPrecise, lp, draw, pick);
      check(config_valid(a), "invalid action");
      if (all[pick] == best) continue;
      ++n;
      exploit += a == best;
    }
    const double rate = static_cast<double>(exploit) / static_cast<double>(n);
    const double sigma = std::sqrt((1 - eps) * eps / static_cast<double>(n));
    check(std::abs(rate - (1 - eps)) <= 3 * sigma, "epsilon " + std::to_string(eps) + " rate " + std::to_string(rate));
    rates << " eps=" << eps << ":" << std::setprecision(4) << rate;
  }
  return check.done("reward 0.05, update " + std::to_string(cell) + ", exploitation" + rates.str());
}

Outcome budget_adherence() {
  Check check;
  const double B = 30;
  ArbiterOptions opt;
  opt.budget = Budget::split(B);
  std::size_t rounds = 0, within = 0, timeouts = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Scenario s = sweep::scenario(seed);
    s.length = 1500;
    auto model = generate_program(s);
    auto sim = simulate(model, s);
    GraphVariants gv;
    for (bool c : {false, true}) {
      for (bool f : {false, true}) gv[{c, f}] = emit_static_graph(model, c, f);
    }
    for (const auto& t : sim.bundle.traces) {
      // the cheapest configuration has to fit, otherwise the run says nothing
      const auto n = method_events(t).size();
      check(opt.costs.deps_cost(Configuration{0b000100}, n) <= opt.budget.deps, "no configuration fits");
      ArbiterState st;
      st.tc = 10;
      LearnerParams lp;
      lp.seed = seed * 31 + t.process;
      QLearningController ctl(lp);
      auto log = arbitrate(st, t, gv, ctl, opt);
      for (const auto& r : log.rounds) {
        if (r.index < 5) continue;  // warm-up
        ++rounds;
        timeouts += r.timeout;
        within += !r.timeout && r.cost <= B;
      }
    }
  }
  const double frac = rounds ? static_cast<double>(within) / static_cast<double>(rounds) : 0;
  check(rounds >= 100, "too few rounds: " + std::to_string(rounds));
  check(frac >= 0.9, "within budget " + std::to_string(frac));
  std::ostringstream s;
  s << within << "/" << rounds << " post-warm-up rounds within B=" << B << " (" << std::fixed << std::setprecision(1)
    << 100 * frac << "%), " << timeouts << " timeouts";
  return check.done(s.str());
}

// Random but consistent dependence data: sets only name executed methods.
DepData random_dep(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> procs(1, 4), classes(1, 3), methods(1, 3), coin(0, 3), count(0, 6);
  std::vector<MethodId> all;
  const int np = procs(rng);
  for (int p = 0; p < np; ++p) {
    const int nc = classes(rng);
    for (int c = 0; c < nc; ++c) {
      const int nm = methods(rng);
      for (int m = 0; m < nm; ++m) {
        all.push_back(MethodId{static_cast<ProcessId>(p), "C" + std::to_string(c), "m" + std::to_string(m)});
      }
    }
  }
  std::map<MethodId, std::set<MethodId>> ds;
  for (const auto& m : all) {
    auto& set = ds[m];
    for (const auto& d : all) {
      if (coin(rng) == 0) set.insert(d);
    }
  }
  auto dep = dep_data({}, ds);
  for (int a = 0; a < np; ++a) {
    for (int b = 0; b < np; ++b) {
      if (a != b) dep.messages[{static_cast<ProcessId>(a), static_cast<ProcessId>(b)}] = count(rng);
    }
  }
  return dep;
}

template <typename Map>
double mean_of(const Map& m) {
  double s = 0;
  for (const auto& [k, v] : m) s += v;
  return m.empty() ? 0 : s / static_cast<double>(m.size());
}

Outcome ipc_fixture() {
  Check check;
  // frozen from tests/oracle/ipc_oracle.py over tests/data/ipc3.deps
  const char* expected[] = {"3.3333333333", "0.4738095238", "0.6111111111",
                            "0.0069444444", "0.7500000000", "0.8333333333"};
  std::ifstream in(DISTFLOW_TEST_DATA "/ipc3.deps");
  std::map<MethodId, std::set<MethodId>> ds;
  std::map<std::pair<ProcessId, ProcessId>, std::size_t> msgs;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string tag;
    if (!(f >> tag) || tag[0] == '#') continue;
    if (tag == "ds") {
      std::string m, colon, d;
      f >> m >> colon;
      auto& set = ds[*parse_method_designator(m)];
      while (f >> d) set.insert(*parse_method_designator(d));
    } else {
      ProcessId a, b;
      std::size_t n;
      f >> a >> b >> n;
      msgs[{a, b}] = n;
    }
  }
  check(!ds.empty(), "fixture not found");
  auto dep = dep_data({}, ds);
  dep.messages = msgs;
  auto values = as_vector(ipc_metrics(dep));
  std::string row;
  for (std::size_t i = 0; i < 6; ++i) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(10) << values[i];
    check(s.str() == expected[i], std::string(kIpcNames[i]) + " = " + s.str());
    row += " " + std::string(kIpcNames[i]) + "=" + s.str();
  }

  std::mt19937_64 rng(99);
  for (int i = 0; i < 500; ++i) {
    auto d = random_dep(rng);
    auto r = ipc_metrics(d);
    for (double v : as_vector(r)) check(std::isfinite(v) && v >= 0, "negative or non-finite metric");
    check(r.ipr <= 1, "IPR above 1");
    check(std::abs(r.rmc - mean_of(r.process_rmc)) < 1e-12, "RMC mean");
    check(std::abs(r.rcc - mean_of(r.process_rcc)) < 1e-12, "RCC mean");
    check(std::abs(r.plc - mean_of(r.process_plc)) < 1e-12, "PLC mean");
    check(std::abs(r.ccc - mean_of(r.class_ccc)) < 1e-12, "CCC mean");
    check(std::abs(r.ccl - mean_of(r.class_ccl)) < 1e-12, "CCL mean");
    double ipr = 0;
    for (const auto& [m, v] : r.method_ipr) ipr += v;
    check(std::abs(r.ipr - ipr / static_cast<double>(d.executed.size())) < 1e-12, "IPR aggregation");
    auto twice = d;
    for (auto& [k, n] : twice.messages) n *= 2;
    check(ipc_metrics(twice).rmc == 2 * r.rmc, "RMC not linear in message counts");
  }
  return check.done(row.substr(1) + "; 500 random invariant cases");
}

Outcome statistics() {
  Check check;
  std::vector<double> x{1, 2, 3, 4, 5, 6, 7};
  check(*spearman(x, {1, 4, 9, 16, 25, 36, 49}).r == 1, "monotone increasing");
  check(*spearman(x, {7, 6, 5, 4, 3, 2, 1}).r == -1, "monotone decreasing");

  // frozen from tests/oracle/spearman_oracle.py
  auto tied = spearman({3.1, 4.7, 2.2, 4.7, 9.0, 5.5, 1.0, 6.3}, {10.0, 12.5, 9.1, 11.0, 20.4, 11.8, 13.3, 15.0});
  check(std::abs(*tied.r - 0.5988131309566295) < 1e-12, "tied r");
  check(std::abs(tied.p - 0.125) < 1e-12, "tied exact p");
  auto ties2 = spearman({1, 1, 2, 3, 3, 3, 4, 5}, {2, 1, 1, 4, 6, 5, 5, 9});
  check(std::abs(*ties2.r - 0.851079440993105) < 1e-12, "second tied r");
  check(std::abs(ties2.p - 0.010714285714285714) < 1e-12, "second tied exact p");

  check(spearman({1, 2, 3, 4, 5}, {4, 1, 2, 3, 5}).significant, "r = 0.4 is significant");
  check(!spearman({1, 2, 3, 4, 5}, {4, 2, 1, 3, 5}).significant, "r = 0.3 is not significant");

  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  std::size_t iterations = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd pts(60, 4);
    for (int i = 0; i < 60; ++i) {
      for (int d = 0; d < 4; ++d) pts(i, d) = nd(rng) + (i % 3 == 0 ? 2.5 : 0);
    }
    auto res = kmeans2(pts, static_cast<std::uint64_t>(trial));
    iterations += res.iterations;
    for (std::size_t k = 1; k < res.objective.size(); ++k) {
      check(res.objective[k] <= res.objective[k - 1], "objective increased");
    }
    for (int k = 0; k < 2; ++k) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(4);
      int n = 0;
      for (int i = 0; i < 60; ++i) {
        if (res.labels[i] == k) {
          sum += pts.row(i);
          ++n;
        }
      }
      check(n > 0, "empty cluster");
      if (n > 0) check((sum / n - res.centers.row(k)).cwiseAbs().maxCoeff() < 1e-9, "center is not the mean");
    }
  }
  return check.done("tied r=" + std::to_string(*tied.r) + " p=" + std::to_string(tied.p) + ", 50 k-means runs, " +
                    std::to_string(iterations) + " iterations");
}

// Runs every command in a scratch directory and returns all bytes produced.
std::map<std::string, std::string> cli_pass(const fs::path& work, Check& check) {
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string cli = DISTFLOW_CLI;
  {
    std::ofstream s(work / "scenario.txt");
    s << "topology n_tier\ntiers 3\nseed 17\nlength 400\n";
    std::ofstream t(work / "table.txt");
    t << "subject RMC PLC exec churn\n"
      << "a 1.0 0.2 10 3\nb 2.5 0.4 12 1\nc 0.3 0.1 30 2\nd 4.0 0.9 11 8\ne 3.1 0.3 25 5\nf 0.7 0.6 14 4\n";
  }
  const std::vector<std::string> commands = {
      "simulate scenario.txt -o run --seed 17 > simulate_stdout.txt",
      "flowpaths run -o flow_default.txt",
      "flowpaths run --mode mul -o flow_mul.txt",
      "seads run --tc 20 --seed 3 -o run > seads_stdout.txt",
      "seads run --tc 20 --pin-config 111111 -o pinned > pinned_stdout.txt",
      "query run p1.Tier1.main > query.txt",
      "metrics run --detail -o metrics.txt",
      "metrics --deps " DISTFLOW_TEST_DATA "/ipc3.deps -o fixture_metrics.txt",
      "correlate table.txt -o correlate.txt",
      "classify table.txt --seed 4 --standardize -o classify.txt",
  };
  for (const auto& c : commands) {
    const auto cmd = "cd '" + work.string() + "' && DISTFLOW_OUT=out '" + cli + "' " + c + " 2> /dev/null";
    check(std::system(cmd.c_str()) == 0, "command failed: " + c);
  }
  std::map<std::string, std::string> bytes;
  for (const auto& e : fs::recursive_directory_iterator(work)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    bytes[fs::relative(e.path(), work).string()] = s.str();
  }
  return bytes;
}

Outcome cli_determinism() {
  Check check;
  const auto work = fs::temp_directory_path() / ("distflow-acceptance-" + std::to_string(::getpid()));
  auto first = cli_pass(work, check);
  auto second = cli_pass(work, check);
  fs::remove_all(work);
  check(first.size() > 20, "too few output files: " + std::to_string(first.size()));
  check(first.size() == second.size(), "file sets differ");
  std::size_t same = 0;
  for (const auto& [name, data] : first) {
    auto it = second.find(name);
    const bool eq = it != second.end() && it->second == data;
    check(eq, name + " differs");
    same += eq;
  }
  return check.done(std::to_string(same) + " files byte-identical across reruns");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "lamport fixture", 1, lamport_fixture},
      {2, "method-level oracle equivalence", 120, method_level_oracle},
      {3, "statement-level structural soundness", 120, statement_level_soundness},
      {4, "configuration enumeration", 1, configuration_enumeration},
      {5, "subsumption and recall", 180, subsumption_and_recall},
      {6, "q-learning arithmetic", 30, learning_arithmetic},
      {7, "budget adherence", 60, budget_adherence},
      {8, "ipc metrics fixture", 30, ipc_fixture},
      {9, "statistics", 30, statistics},
      {10, "cli determinism", 600, cli_determinism},
  };
  const auto start = std::chrono::steady_clock::now();
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= c.limit_s) {
      o.pass = false;
      o.detail += "; took longer than " + std::to_string(static_cast<int>(c.limit_s)) + "s";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << ' ' << std::setw(2) << c.id << ' ' << c.name << ": " << o.detail
              << " [" << std::fixed << std::setprecision(2) << secs << "s]" << std::endl;
    std::cout.unsetf(std::ios::fixed);
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << failed << " of " << criteria.size() << " criteria failed, total " << std::fixed << std::setprecision(1)
            << total << "s" << std::endl;
  return failed == 0 ? 0 : 1;
}
