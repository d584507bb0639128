#pragma once

// Line-delimited trace files and trace bundles (one file per process plus a
// manifest).

#include <filesystem>
#include <iosfwd>
#include <string>

#include "distflow/trace.hpp"

namespace distflow {

std::string event_to_json_line(const EventRecord& event);
EventRecord event_from_json_line(std::string_view line);

void write_trace(std::ostream& out, const ProcessTrace& trace);
/// Reads one process trace. The process id is taken from the records; an
/// empty stream yields `fallback_process` with no events.
ProcessTrace read_trace(std::istream& in, ProcessId fallback_process);

struct TraceBundle {
  std::string scenario;  // free-form scenario line from the manifest
  TraceSet traces;
};

void write_bundle(const std::filesystem::path& dir, const TraceBundle& bundle);
TraceBundle read_bundle(const std::filesystem::path& dir);

}  // namespace distflow
