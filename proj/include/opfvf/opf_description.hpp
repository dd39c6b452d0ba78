#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "opfvf/jsonio.hpp"
#include "opfvf/version.hpp"

namespace opfvf {

// Structured, solver-agnostic formulation description. The same shell holds
// DC, SOC and AC formulations; constraint semantics are fixed by the kind
// tag (see README for the evaluation rules per kind).

struct VariableGroup {
  std::string kind;            // "pg", "qg", "theta", "v", "w", "wr", "wi", "pf", "qf"
  std::size_t count = 0;
  std::vector<double> lower;   // +-inf allowed
  std::vector<double> upper;
};

struct ConstraintBlock {
  std::string kind;
  std::vector<int> indices;
  std::vector<std::pair<std::string, double>> coefficients; // named, ordered
};

struct OpfDescription {
  std::string formulation;     // "dc" | "soc" | "ac"
  std::vector<VariableGroup> variables;
  std::vector<ConstraintBlock> constraints;
  std::vector<double> objective; // cost per pg variable

  std::size_t count_kind(const std::string& kind) const {
    std::size_t n = 0;
    for (const auto& c : constraints) n += c.kind == kind;
    return n;
  }

  bool operator==(const OpfDescription& other) const {
    if (formulation != other.formulation || objective != other.objective) return false;
    if (variables.size() != other.variables.size() ||
        constraints.size() != other.constraints.size())
      return false;
    for (std::size_t i = 0; i < variables.size(); ++i) {
      const auto& a = variables[i];
      const auto& b = other.variables[i];
      if (a.kind != b.kind || a.count != b.count || a.lower != b.lower || a.upper != b.upper)
        return false;
    }
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      const auto& a = constraints[i];
      const auto& b = other.constraints[i];
      if (a.kind != b.kind || a.indices != b.indices || a.coefficients != b.coefficients)
        return false;
    }
    return true;
  }
};

inline std::string export_formulation(const OpfDescription& desc) {
  JsonWriter w;
  w.begin_object();
  w.kv("schema_version", kFormulationSchemaVersion);
  w.kv("formulation", desc.formulation);
  w.key("variables");
  w.begin_array();
  for (const auto& group : desc.variables) {
    w.begin_object();
    w.kv("kind", group.kind);
    w.kv("count", group.count);
    auto bound_array = [&w](const std::string& name, const std::vector<double>& vals) {
      w.key(name);
      w.begin_array();
      for (double v : vals) {
        if (std::isfinite(v))
          w.value(v);
        else
          w.null();
      }
      w.end_array();
    };
    bound_array("lower", group.lower);
    bound_array("upper", group.upper);
    w.end_object();
  }
  w.end_array();
  w.key("constraints");
  w.begin_array();
  for (const auto& con : desc.constraints) {
    w.begin_object();
    w.kv("kind", con.kind);
    w.array("indices", con.indices);
    w.key("coefficients");
    w.begin_object();
    for (const auto& [name, value] : con.coefficients) w.kv(name, value);
    w.end_object();
    w.end_object();
  }
  w.end_array();
  w.array("objective", desc.objective);
  w.end_object();
  return w.str() + "\n";
}

inline void export_formulation_file(const OpfDescription& desc, const std::string& path) {
  write_text_file(path, export_formulation(desc));
}

inline OpfDescription import_formulation(const std::string& text) {
  const double inf = std::numeric_limits<double>::infinity();
  const nlohmann::ordered_json j = parse_json(text, "formulation");
  const std::string path = "formulation";
  OpfDescription desc;
  const auto version = require_int(j, "schema_version", path);
  if (version != kFormulationSchemaVersion)
    throw SchemaError("formulation.schema_version: unsupported version " + std::to_string(version));
  desc.formulation = require_string(j, "formulation", path);
  if (desc.formulation != "dc" && desc.formulation != "soc" && desc.formulation != "ac")
    throw SchemaError("formulation.formulation: must be one of dc|soc|ac");

  const auto& vars = require_field(j, "variables", path);
  if (!vars.is_array()) throw SchemaError("formulation.variables: expected array");
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::string vp = path + ".variables[" + std::to_string(i) + "]";
    VariableGroup group;
    group.kind = require_string(vars[i], "kind", vp);
    group.count = static_cast<std::size_t>(require_int(vars[i], "count", vp));
    auto bounds = [&](const char* name, std::vector<double>& out) {
      const auto& arr = require_field(vars[i], name, vp);
      if (!arr.is_array()) throw SchemaError(vp + "." + name + ": expected array");
      for (const auto& v : arr) {
        if (v.is_null())
          out.push_back(std::string(name) == "lower" ? -inf : inf);
        else if (v.is_number())
          out.push_back(v.get<double>());
        else
          throw SchemaError(vp + "." + name + ": expected number or null");
      }
    };
    bounds("lower", group.lower);
    bounds("upper", group.upper);
    if (group.lower.size() != group.count || group.upper.size() != group.count)
      throw SchemaError(vp + ": bound arrays must match count");
    desc.variables.push_back(std::move(group));
  }

  const auto& cons = require_field(j, "constraints", path);
  if (!cons.is_array()) throw SchemaError("formulation.constraints: expected array");
  for (std::size_t i = 0; i < cons.size(); ++i) {
    const std::string cp = path + ".constraints[" + std::to_string(i) + "]";
    ConstraintBlock block;
    block.kind = require_string(cons[i], "kind", cp);
    const auto& idx = require_field(cons[i], "indices", cp);
    if (!idx.is_array()) throw SchemaError(cp + ".indices: expected array");
    for (const auto& v : idx) block.indices.push_back(v.get<int>());
    const auto& coef = require_field(cons[i], "coefficients", cp);
    if (!coef.is_object()) throw SchemaError(cp + ".coefficients: expected object");
    for (auto it = coef.begin(); it != coef.end(); ++it)
      block.coefficients.push_back({it.key(), it.value().get<double>()});
    desc.constraints.push_back(std::move(block));
  }

  desc.objective = require_double_array(j, "objective", path);
  return desc;
}

} // namespace opfvf
