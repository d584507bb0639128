// distflow: batch front end for simulation, flow paths, online dependence
// analysis, queries and IPC metrics.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "distflow/error.hpp"
#include "distflow/metrics.hpp"
#include "distflow/netsim.hpp"
#include "distflow/phase1.hpp"
#include "distflow/phase2.hpp"
#include "distflow/qlearn.hpp"
#include "distflow/seads.hpp"
#include "distflow/trace_io.hpp"

namespace fs = std::filesystem;
using namespace distflow;

namespace {

fs::path default_out() {
  const char* env = std::getenv("DISTFLOW_OUT");
  return env && *env ? fs::path(env) : fs::path("distflow-out");
}

void require_exists(const fs::path& p) {
  if (!fs::exists(p)) throw UsageError("no such file or directory: " + p.string());
}

std::ifstream open_in(const fs::path& p) {
  require_exists(p);
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError("cannot read " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw UsageError("cannot write " + p.string());
  return out;
}

// Writes to `file` when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& file) {
    if (!file.empty()) file_ = open_out(file);
  }
  std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

TraceSet load_traces(const fs::path& run) {
  require_exists(run);
  const auto dir = fs::exists(run / "traces" / "manifest.txt") ? run / "traces" : run;
  return read_bundle(dir).traces;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a) {
  auto in = open_in(a.scenario);
  auto s = read_scenario(in);
  if (a.seed) s.seed = *a.seed;
  auto model = generate_program(s);
  auto sim = simulate(model, s);
  const fs::path dir = a.out.empty() ? default_out() : fs::path(a.out);
  write_simulation(dir, model, sim);
  std::cout << "wrote " << dir.string() << ": " << sim.bundle.traces.size() << " processes\n";
  return 0;
}

// --------------------------------------------------------------- flowpaths

struct FlowArgs {
  std::string run;
  std::string graph;
  std::string sources;
  std::string mode = "default";
  std::size_t path_limit = 16;
  bool strict_splice = false;
  std::string out;
};

int cmd_flowpaths(const FlowArgs& a) {
  const fs::path run(a.run);
  auto traces = load_traces(run);
  auto gin = open_in(a.graph.empty() ? run / "graphs" / "sdg_c0f1.txt" : fs::path(a.graph));
  auto sdg = read_graph(gin);
  auto sin = open_in(a.sources.empty() ? run / "sources.txt" : fs::path(a.sources));
  auto cfg = read_source_sink(sin);
  if (cfg.sources.empty()) throw UsageError("no sources configured");
  if (cfg.sinks.empty()) throw UsageError("no sinks configured");

  FlowOptions opt;
  auto mode = parse_pipeline_mode(a.mode);
  if (!mode) throw UsageError("unknown mode " + a.mode + " (default, sim, mul)");
  opt.mode = *mode;
  opt.phase1.path_limit = a.path_limit;
  opt.phase2.strict_splice = a.strict_splice;
  auto report = run_flowpaths(traces, sdg, cfg, opt);

  Sink sink(a.out);
  auto& out = sink.out();
  out << "# phase1 method paths: " << report.phase1.paths.size() << (report.phase1.truncated ? " (truncated)" : "")
      << "\n";
  for (const auto& p : report.phase1.paths) out << format_path(p) << '\n';
  std::vector<StmtFlowPath> all(report.phase2.intra.begin(), report.phase2.intra.end());
  all.insert(all.end(), report.phase2.inter.begin(), report.phase2.inter.end());
  out << "# phase2 statement paths: " << all.size() << " (interprocess " << report.phase2.inter.size() << ")"
      << (report.phase2.truncated ? " (truncated)" : "") << "\n";
  for (const auto& p : all) out << format_path(p) << '\n';
  out << "# events phase1 " << report.events_phase1 << " phase2 " << report.events_phase2 << '\n';
  return 0;
}

// ------------------------------------------------------------------- seads

struct SeadsArgs {
  std::string input;
  double budget = 30;
  std::size_t tc = 1000;
  double tt = 0;
  std::string pin;
  std::string start = "111111";
  std::string cost_model = "synthetic";
  std::uint64_t seed = 0;
  double gamma = 0.9, alpha = 0.9, epsilon = 0.2;
  bool final_round = false;
  std::string out;
};

constexpr const char* kMasks = "001xxx 010xxx 011xxx 0xxx1x xxx0x1 000000";

Configuration config_arg(const std::string& text) {
  auto c = Configuration::parse(text);
  if (!c) throw UsageError("configuration must be six bits, got '" + text + "'");
  if (!config_valid(*c)) throw ConfigError("configuration " + text + " is invalid (invalid masks: " + kMasks + ")");
  return *c;
}

CostModel cost_model_arg(const std::string& text) {
  CostModel m;
  if (text == "synthetic") return m;
  if (text == "wallclock") {
    m.mode = CostModel::Mode::wallclock;
    return m;
  }
  auto in = open_in(text);
  std::map<std::string, double*> fields{{"construct_per_unit", &m.construct_per_unit},
                                        {"context_factor", &m.context_factor},
                                        {"flow_factor", &m.flow_factor},
                                        {"load_per_unit", &m.load_per_unit},
                                        {"coverage_load_factor", &m.coverage_load_factor},
                                        {"deps_per_event", &m.deps_per_event},
                                        {"instance_factor", &m.instance_factor}};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string key, value;
    if (!(f >> key) || key[0] == '#') continue;
    if (!(f >> value)) throw UsageError("cost model key without value: " + key);
    if (key == "mode") {
      if (value != "synthetic" && value != "wallclock") throw UsageError("unknown cost mode " + value);
      m.mode = value == "wallclock" ? CostModel::Mode::wallclock : CostModel::Mode::synthetic;
      continue;
    }
    auto it = fields.find(key);
    if (it == fields.end()) throw UsageError("unknown cost model key " + key);
    try {
      *it->second = std::stod(value);
    } catch (const std::logic_error&) {
      throw UsageError("bad cost model value for " + key);
    }
    if (*it->second < 0) throw ConfigError("cost model values must be non-negative");
  }
  return m;
}

void write_depmap(std::ostream& out, const DepMap& deps) {
  for (const auto& [m, set] : deps) out << format_ds(DependenceSet{m, set}) << '\n';
}

DepMap read_depmap(std::istream& in) {
  DepMap deps;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string tag, root, item;
    if (!(f >> tag) || tag[0] == '#') continue;
    if (tag != "ds" || !(f >> root) || root.back() != ':') throw MalformedTrace("bad dependence line: " + line);
    root.pop_back();
    auto m = parse_method_designator(root);
    if (!m) throw MalformedTrace("bad method " + root);
    auto& set = deps[*m];
    while (f >> item) {
      auto d = parse_method_designator(item);
      if (!d) throw MalformedTrace("bad method " + item);
      set.insert(*d);
    }
  }
  return deps;
}

int cmd_seads(const SeadsArgs& a) {
  if (!(a.budget > 0)) throw ConfigError("budget must be positive");
  require_exists(a.input);
  const fs::path input(a.input);
  TraceSet traces;
  GraphVariants graphs;
  if (fs::is_directory(input)) {
    traces = load_traces(input);
    graphs = load_graph_variants(input / "graphs");
  } else {
    // a scenario file: simulate in memory
    auto in = open_in(input);
    auto s = read_scenario(in);
    auto model = generate_program(s);
    traces = simulate(model, s).bundle.traces;
    for (bool c : {false, true}) {
      for (bool f : {false, true}) graphs[{c, f}] = emit_static_graph(model, c, f);
    }
  }

  ArbiterState init;
  init.tc = a.tc;
  init.tt = a.tt;
  init.tcn = init.old_tcn = config_arg(a.pin.empty() ? a.start : a.pin);
  ArbiterOptions opt;
  opt.budget = Budget::split(a.budget);
  opt.costs = cost_model_arg(a.cost_model);
  opt.final_round = a.final_round;

  LearnerParams lp;
  lp.gamma = a.gamma;
  lp.alpha = a.alpha;
  lp.epsilon = a.epsilon;
  lp.validate();
  const std::optional<Configuration> pinned = a.pin.empty() ? std::nullopt : std::optional(init.tcn);
  auto snaps = run_workers(traces, graphs, init,
                           [&](ProcessId p) -> std::unique_ptr<ConfigController> {
                             if (pinned) return std::make_unique<PinnedController>(*pinned);
                             auto params = lp;
                             params.seed = a.seed * 1000003 + p;
                             return std::make_unique<QLearningController>(params);
                           },
                           opt);

  const fs::path dir = (a.out.empty() ? default_out() : fs::path(a.out)) / "seads";
  fs::create_directories(dir);
  for (const auto& s : snaps) {
    const auto tag = "p" + std::to_string(s.process);
    auto rounds = open_out(dir / ("rounds_" + tag + ".txt"));
    rounds << std::setprecision(10);
    for (const auto& r : s.log.rounds) rounds << format_round(r) << '\n';
    auto deps = open_out(dir / ("deps_" + tag + ".txt"));
    write_depmap(deps, s.deps);
    std::size_t timeouts = 0;
    for (const auto& r : s.log.rounds) timeouts += r.timeout;
    std::cout << tag << " rounds " << s.log.rounds.size() << " timeouts " << timeouts << " final "
              << (s.log.rounds.empty() ? init.tcn : s.log.rounds.back().config).str() << '\n';
  }
  std::cout << "wrote " << dir.string() << '\n';
  return 0;
}

// ------------------------------------------------------------------- query

int cmd_query(const std::string& run_arg, const std::string& method, const std::string& seads_dir) {
  const fs::path run(run_arg);
  auto traces = load_traces(run);
  const fs::path dir = seads_dir.empty() ? run / "seads" : fs::path(seads_dir);
  require_exists(dir);
  std::map<ProcessId, DepMap> intra;
  for (const auto& t : traces) {
    const auto file = dir / ("deps_p" + std::to_string(t.process) + ".txt");
    if (!fs::exists(file)) continue;
    std::ifstream in(file, std::ios::binary);
    intra[t.process] = read_depmap(in);
  }

  std::optional<MethodId> q = parse_method_designator(method);
  if (!q) {
    // Class.method: the lowest process that runs it
    for (const auto& t : traces) {
      for (const auto& e : t.events) {
        if (is_method_event(e.kind) && e.method.signature() == method) {
          q = e.method;
          break;
        }
      }
      if (q) break;
    }
  }
  if (!q) {
    if (method.find('.') == std::string::npos) throw UsageError("method must be p<k>.Class.method or Class.method");
    std::cout << "ds " << method << ":\n";
    return 0;
  }
  std::cout << format_ds(merge_query(*q, intra, traces)) << '\n';
  return 0;
}

// ----------------------------------------------------------------- metrics

struct MetricsArgs {
  std::string run;
  std::string deps;
  std::string rcc = "prose";
  std::string label;
  std::string quality;
  bool detail = false;
  std::string out;
};

DepData read_dep_fixture(std::istream& in) {
  std::map<MethodId, std::set<MethodId>> ds;
  std::map<std::pair<ProcessId, ProcessId>, std::size_t> msgs;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string tag;
    if (!(f >> tag) || tag[0] == '#') continue;
    if (tag == "ds") {
      std::string root, item;
      if (!(f >> root)) throw MalformedTrace("bad dependence line: " + line);
      if (root.back() == ':') root.pop_back();
      auto m = parse_method_designator(root);
      if (!m) throw MalformedTrace("bad method " + root);
      auto& set = ds[*m];
      while (f >> item) {
        if (item == ":") continue;
        auto d = parse_method_designator(item);
        if (!d) throw MalformedTrace("bad method " + item);
        set.insert(*d);
      }
    } else if (tag == "msg") {
      ProcessId from = 0, to = 0;
      std::size_t n = 0;
      if (!(f >> from >> to >> n)) throw MalformedTrace("bad message line: " + line);
      msgs[{from, to}] = n;
    } else {
      throw MalformedTrace("unknown dependence record " + tag);
    }
  }
  auto dep = dep_data({}, ds);
  dep.messages = msgs;
  dep.validate();
  return dep;
}

int cmd_metrics(const MetricsArgs& a) {
  if (a.run.empty() == a.deps.empty()) throw UsageError("give either a run directory or --deps");
  RccVariant variant;
  if (a.rcc == "prose") variant = RccVariant::prose;
  else if (a.rcc == "table") variant = RccVariant::table;
  else throw UsageError("unknown RCC variant " + a.rcc);

  DepData dep;
  std::string label = a.label;
  if (!a.deps.empty()) {
    auto in = open_in(a.deps);
    dep = read_dep_fixture(in);
    if (label.empty()) label = fs::path(a.deps).stem().string();
  } else {
    auto traces = load_traces(a.run);
    dep = dep_data(traces, first_message_map(traces));
    if (label.empty()) label = fs::path(a.run).filename().string();
  }
  if (label.empty()) label = "run";
  auto report = ipc_metrics(dep, variant);

  Sink sink(a.out);
  auto& out = sink.out();
  write_ipc_report(out, report, label);
  if (a.detail) {
    out << std::setprecision(10);
    for (const auto& [k, v] : report.process_rmc) out << "rmc p" << k.first << " p" << k.second << ' ' << v << '\n';
    for (const auto& [p, v] : report.process_rcc) out << "rcc p" << p << ' ' << v << '\n';
    for (const auto& [k, v] : report.class_rcc) out << "rcc " << k.first.str() << ' ' << k.second.str() << ' ' << v << '\n';
    for (const auto& [c, v] : report.class_ccc) out << "ccc " << c.str() << ' ' << v << '\n';
    for (const auto& [m, v] : report.method_ipr) out << "ipr " << m.str() << ' ' << v << '\n';
    for (const auto& [c, v] : report.class_ccl) out << "ccl " << c.str() << ' ' << v << '\n';
    for (const auto& [p, v] : report.process_plc) out << "plc p" << p << ' ' << v << '\n';
  }
  if (!a.quality.empty()) {
    auto in = open_in(a.quality);
    auto q = read_quality(in);
    out << "quality(" << q.units << ")";
    for (const char* name : kQualityNames) out << ' ' << name;
    out << '\n' << label << std::setprecision(10);
    for (double v : as_vector(q)) out << ' ' << v;
    out << '\n';
  }
  return 0;
}

// ------------------------------------------------------ correlate/classify

// Whitespace table: a header of column names (the first names the row label
// column), then one row per subject.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<double>> values;  // per column
};

Table read_table(const std::string& path) {
  auto in = open_in(path);
  Table t;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::vector<std::string> cells;
    for (std::string c; f >> c;) cells.push_back(c);
    if (cells.empty() || cells[0][0] == '#') continue;
    if (header) {
      if (cells.size() < 2) throw MalformedTrace("table needs a label column and at least one value column");
      t.columns.assign(cells.begin() + 1, cells.end());
      t.values.resize(t.columns.size());
      header = false;
      continue;
    }
    if (cells.size() != t.columns.size() + 1) throw MalformedTrace("row width differs from header: " + line);
    t.rows.push_back(cells[0]);
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      try {
        std::size_t used = 0;
        t.values[i].push_back(std::stod(cells[i + 1], &used));
        if (used != cells[i + 1].size()) throw std::invalid_argument("trailing");
      } catch (const std::logic_error&) {
        throw MalformedTrace("not a number: " + cells[i + 1]);
      }
    }
  }
  if (header) throw MalformedTrace("empty table " + path);
  return t;
}

int cmd_correlate(const std::string& path, const std::string& out_file) {
  auto t = read_table(path);
  Sink sink(out_file);
  auto& out = sink.out();
  out << "x y n r p significant\n" << std::setprecision(10);
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    for (std::size_t j = i + 1; j < t.columns.size(); ++j) {
      auto c = spearman(t.values[i], t.values[j]);
      out << t.columns[i] << ' ' << t.columns[j] << ' ' << t.rows.size() << ' ';
      if (c.r) out << *c.r << ' ' << c.p << ' ' << (c.significant ? "yes" : "no") << '\n';
      else out << "undefined - no\n";
    }
  }
  return 0;
}

int cmd_classify(const std::string& path, std::uint64_t seed, bool standardize, const std::string& out_file) {
  auto t = read_table(path);
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  const auto d = static_cast<Eigen::Index>(t.columns.size());
  Eigen::MatrixXd pts(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) pts(i, j) = t.values[j][i];
  }
  if (standardize) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double mean = pts.col(j).mean();
      const double sd = std::sqrt((pts.col(j).array() - mean).square().sum() / static_cast<double>(n));
      pts.col(j).array() -= mean;
      if (sd > 0) pts.col(j) /= sd;
    }
  }
  auto res = kmeans2(pts, seed);
  Sink sink(out_file);
  auto& out = sink.out();
  out << std::setprecision(10);
  for (Eigen::Index i = 0; i < n; ++i) out << t.rows[i] << ' ' << res.labels[i] << '\n';
  for (int k = 0; k < 2; ++k) {
    out << "center " << k;
    for (Eigen::Index j = 0; j < d; ++j) out << ' ' << res.centers(k, j);
    out << '\n';
  }
  out << "iterations " << res.iterations << " objective " << (res.objective.empty() ? 0.0 : res.objective.back())
      << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed program dependence and information flow analysis"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "generate and run a simulated distributed program");
  simulate_cmd->add_option("scenario", sim.scenario, "scenario file")->required();
  simulate_cmd->add_option("-o,--out", sim.out, "output directory (default $DISTFLOW_OUT or distflow-out)");
  simulate_cmd->add_option("--seed", sim.seed, "override the scenario seed");

  FlowArgs flow;
  auto* flow_cmd = app.add_subcommand("flowpaths", "method- and statement-level information flow paths");
  flow_cmd->add_option("run", flow.run, "simulation directory or trace bundle")->required();
  flow_cmd->add_option("--graph", flow.graph, "static dependence graph (default graphs/sdg_c0f1.txt)");
  flow_cmd->add_option("--sources", flow.sources, "sources/sinks file (default sources.txt)");
  flow_cmd->add_option("--mode", flow.mode, "default, sim or mul");
  flow_cmd->add_option("--path-limit", flow.path_limit, "longest printed method path");
  flow_cmd->add_flag("--strict-splice", flow.strict_splice, "junctions must be adjacent in the full event order");
  flow_cmd->add_option("-o,--out", flow.out, "report file (default stdout)");

  SeadsArgs seads;
  auto* seads_cmd = app.add_subcommand("seads", "budget-aware online dependence analysis");
  seads_cmd->add_option("input", seads.input, "simulation directory or scenario file")->required();
  seads_cmd->add_option("--budget", seads.budget, "time budget per round");
  seads_cmd->add_option("--tc", seads.tc, "method events between rounds");
  seads_cmd->add_option("--tt", seads.tt, "minimum logical time between rounds");
  seads_cmd->add_option("--pin-config", seads.pin, "fixed configuration, no learning");
  seads_cmd->add_option("--start", seads.start, "initial configuration");
  seads_cmd->add_option("--cost-model", seads.cost_model, "synthetic, wallclock or a key/value file");
  seads_cmd->add_option("--seed", seads.seed, "learner seed");
  seads_cmd->add_option("--gamma", seads.gamma);
  seads_cmd->add_option("--alpha", seads.alpha);
  seads_cmd->add_option("--epsilon", seads.epsilon);
  seads_cmd->add_flag("--final-round", seads.final_round, "analyse events left at the end of the stream");
  seads_cmd->add_option("-o,--out", seads.out, "run directory (default $DISTFLOW_OUT or distflow-out)");

  std::string query_run, query_method, query_dir;
  auto* query_cmd = app.add_subcommand("query", "merged dependence set of a method");
  query_cmd->add_option("run", query_run, "simulation directory")->required();
  query_cmd->add_option("method", query_method, "p<k>.Class.method or Class.method")->required();
  query_cmd->add_option("--seads-dir", query_dir, "per-process dependence maps (default <run>/seads)");

  MetricsArgs metrics;
  auto* metrics_cmd = app.add_subcommand("metrics", "interprocess coupling and cohesion metrics");
  metrics_cmd->add_option("run", metrics.run, "simulation directory or trace bundle");
  metrics_cmd->add_option("--deps", metrics.deps, "dependence-set file instead of traces");
  metrics_cmd->add_option("--rcc", metrics.rcc, "prose or table");
  metrics_cmd->add_option("--label", metrics.label, "row label");
  metrics_cmd->add_option("--quality", metrics.quality, "external quality values file");
  metrics_cmd->add_flag("--detail", metrics.detail, "per process/class/method values");
  metrics_cmd->add_option("-o,--out", metrics.out, "report file (default stdout)");

  std::string corr_table, corr_out;
  auto* corr_cmd = app.add_subcommand("correlate", "Spearman correlation between table columns");
  corr_cmd->add_option("table", corr_table, "whitespace table with a header row")->required();
  corr_cmd->add_option("-o,--out", corr_out, "report file (default stdout)");

  std::string cls_table, cls_out;
  std::uint64_t cls_seed = 0;
  bool cls_standardize = false;
  auto* cls_cmd = app.add_subcommand("classify", "two-cluster k-means over table rows");
  cls_cmd->add_option("table", cls_table, "whitespace table with a header row")->required();
  cls_cmd->add_option("--seed", cls_seed, "initialisation seed");
  cls_cmd->add_flag("--standardize", cls_standardize, "z-score each column first");
  cls_cmd->add_option("-o,--out", cls_out, "report file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ErrorKind::usage);
  }

  try {
    if (*simulate_cmd) return cmd_simulate(sim);
    if (*flow_cmd) return cmd_flowpaths(flow);
    if (*seads_cmd) return cmd_seads(seads);
    if (*query_cmd) return cmd_query(query_run, query_method, query_dir);
    if (*metrics_cmd) return cmd_metrics(metrics);
    if (*corr_cmd) return cmd_correlate(corr_table, corr_out);
    if (*cls_cmd) return cmd_classify(cls_table, cls_seed, cls_standardize, cls_out);
  } catch (const Error& e) {
    std::cerr << "distflow: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "distflow: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::data);
  }
  return 0;
}
