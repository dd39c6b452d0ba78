#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "opfvf/dc_opf.hpp"
#include "opfvf/grid.hpp"
#include "opfvf/jsonio.hpp"
#include "opfvf/rng.hpp"
#include "opfvf/sampling.hpp"
#include "opfvf/version.hpp"

namespace opfvf {

enum class Split { Train, Valid, Test, Excluded };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
    case Split::Excluded: return "excluded";
  }
  return "excluded";
}

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "valid") return Split::Valid;
  if (s == "test") return Split::Test;
  if (s == "excluded") return Split::Excluded;
  throw SchemaError("split: unknown value '" + s + "'");
}

// One labeled OPF instance: the load input b, the optimal value z and the
// dual/sensitivity vector y. For DC the input is pd alone; for SOC/AC it is
// the concatenation (pd, qd).
struct LabeledSample {
  std::int64_t id = 0;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  std::string formulation = "dc";
  std::vector<double> pd;
  std::vector<double> qd;        // empty for dc
  bool labeled = false;          // z and y valid
  double z = 0.0;
  std::vector<double> y;
  std::string status = "optimal";
  Split split = Split::Excluded;

  std::vector<double> input() const {
    std::vector<double> b = pd;
    b.insert(b.end(), qd.begin(), qd.end());
    return b;
  }

  double total_load() const {
    double t = 0.0;
    for (double v : pd) t += v;
    return t;
  }
};

struct Dataset {
  std::string case_name;
  std::string formulation = "dc";
  std::string config_hash;
  std::vector<LabeledSample> samples;

  std::size_t count_split(Split s) const {
    std::size_t n = 0;
    for (const auto& sample : samples) n += sample.split == s;
    return n;
  }

  std::vector<const LabeledSample*> split_view(Split s) const {
    std::vector<const LabeledSample*> out;
    for (const auto& sample : samples)
      if (sample.split == s) out.push_back(&sample);
    return out;
  }

  std::size_t input_dim() const {
    for (const auto& sample : samples)
      if (sample.status == "optimal") return sample.input().size();
    return 0;
  }
};

// Deterministic seeded split with largest-remainder apportionment over the
// feasible samples; infeasible samples stay excluded.
inline void split_dataset(Dataset& ds, const std::vector<double>& fractions, std::uint64_t seed) {
  if (fractions.size() != 3) throw std::invalid_argument("split: need three fractions");
  double sum = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("split: fractions must be nonnegative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split: fractions must sum to 1");

  std::vector<std::size_t> feasible;
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    if (ds.samples[i].status == "optimal") feasible.push_back(i);
  std::size_t positive = 0;
  for (double f : fractions) positive += f > 0.0;
  if (feasible.size() < positive) throw std::invalid_argument("split: fewer samples than splits");

  const std::size_t n = feasible.size();
  std::size_t counts[3];
  double remainders[3];
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = fractions[k] * static_cast<double>(n);
    counts[k] = static_cast<std::size_t>(exact);
    remainders[k] = exact - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  while (assigned < n) {
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (remainders[k] > remainders[best]) best = k;
    ++counts[best];
    remainders[best] = -1.0;
    ++assigned;
  }

  Rng rng(seed ^ 0x5057a5a5a5a5a5ULL);
  rng.shuffle(feasible);
  std::size_t cursor = 0;
  const Split order[3] = {Split::Train, Split::Valid, Split::Test};
  for (int k = 0; k < 3; ++k)
    for (std::size_t c = 0; c < counts[k]; ++c) ds.samples[feasible[cursor++]].split = order[k];
}

inline std::string dataset_config_hash(const std::string& case_name, const PerturbationConfig& cfg) {
  JsonWriter w;
  w.begin_object();
  w.kv("case", case_name);
  w.kv("count", cfg.count);
  w.kv("alpha_min", cfg.alpha_min);
  w.kv("alpha_max", cfg.alpha_max);
  w.kv("eta_std", cfg.eta_std);
  w.kv("seed", cfg.base_seed);
  w.end_object();
  return hex64(fnv1a(w.str()));
}

// Full DC dataset generation: sample loads, solve each instance, label with
// (z, y), exclude infeasible instances, then assign the 40/30/30 split.
inline Dataset generate(const PowerNetwork& net, const PerturbationConfig& cfg,
                        double solver_tol = 1e-8,
                        const std::vector<double>& fractions = {0.4, 0.3, 0.3}) {
  cfg.check_valid();
  Dataset ds;
  ds.case_name = net.name;
  ds.formulation = "dc";
  ds.config_hash = dataset_config_hash(net.name, cfg);

  std::size_t feasible = 0;
  for (std::size_t index = 0; index < cfg.count; ++index) {
    const LoadSample loads = sample_loads(net, cfg, index);
    LabeledSample sample;
    sample.id = static_cast<std::int64_t>(index);
    sample.seed = loads.seed;
    sample.alpha = loads.alpha;
    sample.formulation = "dc";
    sample.pd = loads.pd;

    const ValueGradient vg = value_and_gradient(net, loads.pd, solver_tol);
    sample.status = to_string(vg.status);
    if (vg.status == LpStatus::Optimal) {
      sample.labeled = true;
      sample.z = vg.value;
      sample.y = vg.gradient;
      ++feasible;
    }
    ds.samples.push_back(std::move(sample));
  }

  if (feasible == 0) throw std::runtime_error("generate: every sampled instance was infeasible");
  split_dataset(ds, fractions, cfg.base_seed);
  return ds;
}

// --- JSON-Lines persistence ---
// header: {schema_version, case, config_hash}
// sample: {id, seed, alpha, formulation, pd, qd|null, z|null, y|null, status, split}

inline std::string dataset_to_jsonl(const Dataset& ds) {
  std::string out;
  {
    JsonWriter w;
    w.begin_object();
    w.kv("schema_version", kDatasetSchemaVersion);
    w.kv("case", ds.case_name);
    w.kv("config_hash", ds.config_hash);
    w.end_object();
    out += w.str();
    out += '\n';
  }
  for (const auto& sample : ds.samples) {
    JsonWriter w;
    w.begin_object();
    w.kv("id", sample.id);
    w.kv("seed", sample.seed);
    w.kv("alpha", sample.alpha);
    w.kv("formulation", sample.formulation);
    w.key("pd");
    w.begin_array();
    for (double v : sample.pd) w.value(v);
    w.end_array();
    if (sample.qd.empty()) {
      w.kv_null("qd");
    } else {
      w.key("qd");
      w.begin_array();
      for (double v : sample.qd) w.value(v);
      w.end_array();
    }
    if (sample.labeled) {
      w.kv("z", sample.z);
      w.key("y");
      w.begin_array();
      for (double v : sample.y) w.value(v);
      w.end_array();
    } else {
      w.kv_null("z");
      w.kv_null("y");
    }
    w.kv("status", sample.status);
    w.kv("split", to_string(sample.split));
    w.end_object();
    out += w.str();
    out += '\n';
  }
  return out;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  write_text_file(path, dataset_to_jsonl(ds));
}

inline Dataset dataset_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Dataset ds;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string path = "line " + std::to_string(line_no);
    auto j = parse_json(line, path);
    if (!header_seen) {
      const auto version = require_int(j, "schema_version", path);
      if (version != kDatasetSchemaVersion)
        throw SchemaError(path + ".schema_version: unsupported version " + std::to_string(version));
      ds.case_name = require_string(j, "case", path);
      ds.config_hash = require_string(j, "config_hash", path);
      header_seen = true;
      continue;
    }
    LabeledSample sample;
    sample.id = require_int(j, "id", path);
    sample.seed = static_cast<std::uint64_t>(require_int(j, "seed", path));
    sample.alpha = require_number(j, "alpha", path);
    sample.formulation = require_string(j, "formulation", path);
    if (sample.formulation != "dc" && sample.formulation != "soc" && sample.formulation != "ac")
      throw SchemaError(path + ".formulation: must be one of dc|soc|ac");
    sample.pd = require_double_array(j, "pd", path);
    for (double v : sample.pd)
      if (!std::isfinite(v)) throw SchemaError(path + ".pd: entries must be finite");
    const auto& qd = require_field(j, "qd", path);
    if (!qd.is_null()) {
      sample.qd = require_double_array(j, "qd", path);
      for (double v : sample.qd)
        if (!std::isfinite(v)) throw SchemaError(path + ".qd: entries must be finite");
    }
    sample.status = require_string(j, "status", path);
    const auto& z = require_field(j, "z", path);
    const auto& y = require_field(j, "y", path);
    if (sample.status == "optimal") {
      if (z.is_null()) throw SchemaError(path + ".z: required for an optimal sample");
      if (y.is_null()) throw SchemaError(path + ".y: required for an optimal sample");
      sample.labeled = true;
      sample.z = require_number(j, "z", path);
      sample.y = require_double_array(j, "y", path);
      if (sample.y.size() != sample.input().size())
        throw SchemaError(path + ".y: length must match the input dimension");
    } else {
      if (!z.is_null() || !y.is_null())
        throw SchemaError(path + ".z: labels are only allowed on optimal samples");
    }
    sample.split = split_from_string(require_string(j, "split", path));
    if (sample.split != Split::Excluded && sample.status != "optimal")
      throw SchemaError(path + ".split: non-optimal samples must be excluded");
    ds.samples.push_back(std::move(sample));
  }
  if (!header_seen) throw SchemaError("dataset: missing header line");
  if (!ds.samples.empty()) ds.formulation = ds.samples.front().formulation;
  for (const auto& sample : ds.samples)
    if (sample.formulation != ds.formulation)
      throw SchemaError("dataset: mixed formulation tags");
  return ds;
}

inline Dataset load_dataset(const std::string& path) {
  return dataset_from_jsonl(read_text_file(path));
}

// Importing externally labeled SOC/AC datasets goes through the same
// schema-validated loader; y is the load-sensitivity vector.
inline Dataset import_labeled(const std::string& path) { return load_dataset(path); }

} // namespace opfvf
