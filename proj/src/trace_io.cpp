#include "distflow/trace_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "distflow/error.hpp"

namespace distflow {

using nlohmann::json;

std::string event_to_json_line(const EventRecord& e) {
  // ordered_json keeps field order stable so files are byte-reproducible
  nlohmann::ordered_json j;
  j["proc"] = e.method.process;
  j["seq"] = e.seq;
  j["kind"] = std::string(to_string(e.kind));
  j["class"] = e.method.class_name;
  j["method"] = e.method.method_name;
  if (e.ts != 0) j["ts"] = e.ts;
  if (e.msg_id) j["msg_id"] = *e.msg_id;
  if (e.peer) j["peer"] = *e.peer;
  if (e.branch_id) j["branch_id"] = *e.branch_id;
  if (e.stmt_id) j["stmt_id"] = *e.stmt_id;
  return j.dump();
}

EventRecord event_from_json_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& ex) {
    throw MalformedTrace(std::string("bad trace record: ") + ex.what());
  }
  if (!j.is_object()) throw MalformedTrace("trace record is not an object");
  try {
    EventRecord e;
    auto kind = parse_event_kind(j.at("kind").get<std::string>());
    if (!kind) throw MalformedTrace("unknown event kind " + j.at("kind").dump());
    e.kind = *kind;
    e.method.process = j.at("proc").get<ProcessId>();
    e.method.class_name = j.at("class").get<std::string>();
    e.method.method_name = j.at("method").get<std::string>();
    e.seq = j.at("seq").get<std::uint64_t>();
    if (j.contains("ts")) e.ts = j["ts"].get<Timestamp>();
    if (j.contains("msg_id")) e.msg_id = j["msg_id"].get<MsgId>();
    if (j.contains("peer")) e.peer = j["peer"].get<ProcessId>();
    if (j.contains("branch_id")) e.branch_id = j["branch_id"].get<BranchId>();
    if (j.contains("stmt_id")) e.stmt_id = j["stmt_id"].get<StmtId>();
    if (e.method.class_name.empty() || e.method.method_name.empty()) {
      throw MalformedTrace("event without enclosing method");
    }
    if ((e.kind == EventKind::send || e.kind == EventKind::recv) && (!e.msg_id || !e.peer)) {
      throw MalformedTrace("message event needs msg_id and peer");
    }
    return e;
  } catch (const json::exception& ex) {
    throw MalformedTrace(std::string("bad trace record: ") + ex.what());
  }
}

void write_trace(std::ostream& out, const ProcessTrace& trace) {
  for (const auto& e : trace.events) out << event_to_json_line(e) << '\n';
}

ProcessTrace read_trace(std::istream& in, ProcessId fallback_process) {
  ProcessTrace trace;
  trace.process = fallback_process;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto e = event_from_json_line(line);
    if (first) {
      trace.process = e.process();
      first = false;
    } else if (e.process() != trace.process) {
      throw MalformedTrace("trace file mixes processes " + std::to_string(trace.process) + " and " +
                           std::to_string(e.process()));
    }
    trace.events.push_back(std::move(e));
  }
  return trace;
}

void write_bundle(const std::filesystem::path& dir, const TraceBundle& bundle) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt", std::ios::binary);
  if (!manifest) throw Error(ErrorKind::data, "cannot write " + (dir / "manifest.txt").string());
  manifest << "scenario " << bundle.scenario << '\n';
  for (const auto& trace : bundle.traces) {
    auto name = "p" + std::to_string(trace.process) + ".jsonl";
    manifest << "process " << trace.process << ' ' << name << '\n';
    std::ofstream out(dir / name, std::ios::binary);
    write_trace(out, trace);
  }
}

TraceBundle read_bundle(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw Error(ErrorKind::data, "no trace bundle manifest in " + dir.string());
  TraceBundle bundle;
  std::string line;
  while (std::getline(manifest, line)) {
    std::istringstream fields(line);
    std::string tag;
    fields >> tag;
    if (tag == "scenario") {
      std::getline(fields >> std::ws, bundle.scenario);
    } else if (tag == "process") {
      ProcessId proc = 0;
      std::string file;
      if (!(fields >> proc >> file)) throw MalformedTrace("bad manifest line: " + line);
      std::ifstream in(dir / file);
      if (!in) throw Error(ErrorKind::data, "missing trace file " + (dir / file).string());
      auto trace = read_trace(in, proc);
      if (trace.process != proc) throw MalformedTrace("manifest process " + std::to_string(proc) + " does not match " + file);
      bundle.traces.push_back(std::move(trace));
    } else if (!tag.empty() && tag[0] != '#') {
      throw MalformedTrace("unknown manifest record: " + tag);
    }
  }
  return bundle;
}

}  // namespace distflow
