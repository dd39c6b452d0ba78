#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "opfvf/jsonio.hpp"
#include "opfvf/version.hpp"

namespace opfvf {

// Provenance record written beside every command output. The wall time is
// informational only and is the one field excluded from byte-reproducibility
// comparisons.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double wall_time_ms = 0.0;
};

inline std::string manifest_to_json(const RunManifest& m) {
  JsonWriter w;
  w.begin_object();
  w.kv("schema_version", kManifestSchemaVersion);
  w.kv("command", m.command);
  w.kv("tool_version", kToolVersion);
  w.kv("config_hash", m.config_hash);
  w.key("seeds");
  w.begin_array();
  for (auto s : m.seeds) w.value(s);
  w.end_array();
  w.key("inputs");
  w.begin_array();
  for (const auto& s : m.inputs) w.value(s);
  w.end_array();
  w.key("outputs");
  w.begin_array();
  for (const auto& s : m.outputs) w.value(s);
  w.end_array();
  w.kv("wall_time_ms", m.wall_time_ms);
  w.end_object();
  return w.str() + "\n";
}

inline void write_manifest(const RunManifest& m, const std::string& path) {
  write_text_file(path, manifest_to_json(m));
}

} // namespace opfvf
