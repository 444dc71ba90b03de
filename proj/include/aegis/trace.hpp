#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "aegis/sim.hpp"

namespace aegis {

// One row per (tick, core). Stable column set; the string form is what the
// determinism checks byte-compare, so nothing here may depend on iteration
// order of anything unordered.
inline std::string trace_to_csv(const SimTrace& trace) {
  std::ostringstream out;
  out << "tick,core,task,name,queue,new_dispatch,produced,dropped,consumed,occupancy\n";
  for (const auto& r : trace.records) {
    out << r.tick << ',' << r.core << ',' << r.task << ',';
    if (r.task >= 0) out << trace.task_names.at(static_cast<std::size_t>(r.task));
    out << ',' << r.queue << ',' << (r.new_dispatch ? 1 : 0) << ',' << r.produced << ','
        << r.dropped << ',' << r.consumed << ',' << r.occupancy << '\n';
  }
  return out.str();
}

inline nlohmann::json metrics_to_json(const Metrics& m) {
  nlohmann::json j;
  j["produced"] = m.produced;
  j["consumed"] = m.consumed;
  j["dropped"] = m.dropped;
  j["loss_ratio"] = m.loss_ratio;
  j["idle_ticks"] = m.idle_ticks;
  j["dispatch_cycles"] = m.dispatch_cycles;
  j["decisions"] = m.decisions;
  j["inferences"] = m.inferences;
  j["gate_skips"] = m.gate_skips;
  j["end_tick"] = m.end_tick;
  j["last_finish"] = m.last_finish;
  nlohmann::json finished = nlohmann::json::object();
  for (const auto& [name, tick] : m.finish_ticks) finished[name] = tick;
  j["finish_ticks"] = finished;
  j["unfinished"] = m.unfinished;
  return j;
}

inline nlohmann::json summary_json(const ScenarioSpec& spec, const SimTrace& trace) {
  nlohmann::json j;
  j["scenario"] = spec.name;
  j["scheduler"] = to_string(spec.scheduler);
  j["seed"] = spec.seed;
  j["cores"] = spec.cores;
  j["duration"] = spec.duration;
  j["metrics"] = metrics_to_json(trace.metrics);
  return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Serialized with a fixed indent; nlohmann objects iterate in key order, so
// the bytes are a pure function of the values.
inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace aegis
