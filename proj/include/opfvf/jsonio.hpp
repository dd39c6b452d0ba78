#pragma once

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace opfvf {

// Writer side: every file this library emits goes through JsonWriter so the
// bytes are deterministic. Keys keep insertion order and doubles are printed
// with up to 17 significant digits, which round-trips exactly.
//
// Reader side: nlohmann::json, wrapped with field-path error reporting.

inline std::string format_double(double v) {
  if (std::isnan(v)) throw std::invalid_argument("cannot serialize NaN");
  if (std::isinf(v)) throw std::invalid_argument("cannot serialize Inf");
  if (v == 0.0) v = 0.0; // normalize -0
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

class JsonWriter {
public:
  JsonWriter& begin_object() { separator(); out_ += '{'; stack_.push_back(true); return *this; }
  JsonWriter& end_object() { out_ += '}'; stack_.pop_back(); mark_value(); return *this; }
  JsonWriter& begin_array() { separator(); out_ += '['; stack_.push_back(true); return *this; }
  JsonWriter& end_array() { out_ += ']'; stack_.pop_back(); mark_value(); return *this; }

  JsonWriter& key(const std::string& k) {
    separator();
    out_ += '"';
    out_ += json_escape(k);
    out_ += "\":";
    pending_key_ = true;
    return *this;
  }

  JsonWriter& value(double v) { separator(); out_ += format_double(v); mark_value(); return *this; }
  JsonWriter& value(int v) { separator(); out_ += std::to_string(v); mark_value(); return *this; }
  JsonWriter& value(std::int64_t v) { separator(); out_ += std::to_string(v); mark_value(); return *this; }
  JsonWriter& value(std::uint64_t v) { separator(); out_ += std::to_string(v); mark_value(); return *this; }
  JsonWriter& value(bool v) { separator(); out_ += v ? "true" : "false"; mark_value(); return *this; }
  JsonWriter& value(const std::string& v) {
    separator();
    out_ += '"';
    out_ += json_escape(v);
    out_ += '"';
    mark_value();
    return *this;
  }
  JsonWriter& value(const char* v) { return value(std::string(v)); }
  JsonWriter& null() { separator(); out_ += "null"; mark_value(); return *this; }

  template <typename T>
  JsonWriter& kv(const std::string& k, const T& v) { key(k); return value(v); }

  JsonWriter& kv_null(const std::string& k) { key(k); return null(); }

  JsonWriter& array(const std::string& k, const std::vector<double>& vs) {
    key(k);
    begin_array();
    for (double v : vs) value(v);
    return end_array();
  }

  JsonWriter& array(const std::string& k, const std::vector<int>& vs) {
    key(k);
    begin_array();
    for (int v : vs) value(v);
    return end_array();
  }

  const std::string& str() const { return out_; }

private:
  void separator() {
    if (pending_key_) {
      pending_key_ = false;
      return;
    }
    if (!stack_.empty() && !stack_.back()) out_ += ',';
  }
  void mark_value() {
    if (!stack_.empty()) stack_.back() = false;
  }

  std::string out_;
  std::vector<bool> stack_; // true while the container is still empty
  bool pending_key_ = false;
};

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// Field access with path-carrying errors, e.g. "samples[3].y: expected array".
// Templated so both json and ordered_json work.
template <typename Json>
const Json& require_field(const Json& obj, const std::string& name, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path + ": expected object");
  auto it = obj.find(name);
  if (it == obj.end()) throw SchemaError(path + "." + name + ": missing field");
  return *it;
}

template <typename Json>
double require_number(const Json& obj, const std::string& name, const std::string& path) {
  const auto& f = require_field(obj, name, path);
  if (!f.is_number()) throw SchemaError(path + "." + name + ": expected number");
  return f.template get<double>();
}

template <typename Json>
std::int64_t require_int(const Json& obj, const std::string& name, const std::string& path) {
  const auto& f = require_field(obj, name, path);
  if (!f.is_number_integer()) throw SchemaError(path + "." + name + ": expected integer");
  return f.template get<std::int64_t>();
}

template <typename Json>
std::string require_string(const Json& obj, const std::string& name, const std::string& path) {
  const auto& f = require_field(obj, name, path);
  if (!f.is_string()) throw SchemaError(path + "." + name + ": expected string");
  return f.template get<std::string>();
}

template <typename Json>
bool require_bool(const Json& obj, const std::string& name, const std::string& path) {
  const auto& f = require_field(obj, name, path);
  if (!f.is_boolean()) throw SchemaError(path + "." + name + ": expected bool");
  return f.template get<bool>();
}

template <typename Json>
std::vector<double> require_double_array(const Json& obj, const std::string& name,
                                         const std::string& path) {
  const auto& f = require_field(obj, name, path);
  if (!f.is_array()) throw SchemaError(path + "." + name + ": expected array");
  std::vector<double> out;
  out.reserve(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f[i].is_number())
      throw SchemaError(path + "." + name + "[" + std::to_string(i) + "]: expected number");
    out.push_back(f[i].template get<double>());
  }
  return out;
}

inline nlohmann::ordered_json parse_json(const std::string& text, const std::string& what) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(text, nullptr, false);
  if (j.is_discarded()) throw SchemaError(what + ": invalid JSON");
  return j;
}

// FNV-1a, used for config hashes in manifests and dataset headers.
inline std::uint64_t fnv1a(const std::string& data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

} // namespace opfvf
