#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "opfvf/grid.hpp"

namespace opfvf {

struct CaseParseError : std::runtime_error {
  int line;
  CaseParseError(const std::string& msg, int line_no)
      : std::runtime_error("case parse error, line " + std::to_string(line_no) + ": " + msg),
        line(line_no) {}
};

namespace detail {

struct MatrixRow {
  std::vector<double> values;
  int line = 0;
};

struct RawCase {
  std::string name = "case";
  double base_mva = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, std::vector<MatrixRow>> matrices;
};

inline std::string strip_comment(const std::string& line) {
  auto pos = line.find('%');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

inline bool parse_row_numbers(const std::string& text, int line_no, std::vector<double>& out) {
  out.clear();
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (std::isspace(static_cast<unsigned char>(text[i])) || text[i] == ',' ||
                               text[i] == ';'))
      ++i;
    if (i >= text.size()) break;
    const char* start = text.c_str() + i;
    char* end = nullptr;
    double v = std::strtod(start, &end);
    if (end == start) throw CaseParseError("malformed matrix row near '" + text.substr(i) + "'", line_no);
    out.push_back(v);
    i += static_cast<std::size_t>(end - start);
  }
  return !out.empty();
}

// Scans the MATPOWER text into named numeric matrices plus baseMVA.
inline RawCase scan_case(const std::string& text) {
  RawCase raw;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::string open_matrix;   // matrix currently being read
  std::string pending;       // fragment after '[' on the declaration line

  auto feed_matrix_line = [&](const std::string& body, int ln) {
    std::string chunk = body;
    auto close = chunk.find(']');
    bool closing = close != std::string::npos;
    if (closing) chunk = chunk.substr(0, close);
    std::vector<double> row;
    // a physical line may carry several ';'-terminated rows
    std::size_t begin = 0;
    while (begin <= chunk.size()) {
      auto semi = chunk.find(';', begin);
      std::string piece = semi == std::string::npos ? chunk.substr(begin)
                                                    : chunk.substr(begin, semi - begin);
      if (parse_row_numbers(piece, ln, row)) raw.matrices[open_matrix].push_back({row, ln});
      if (semi == std::string::npos) break;
      begin = semi + 1;
    }
    if (closing) open_matrix.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::string body = strip_comment(line);
    if (body.find_first_not_of(" \t\r\n") == std::string::npos) continue;

    if (!open_matrix.empty()) {
      feed_matrix_line(body, line_no);
      continue;
    }

    auto fn = body.find("function");
    if (fn != std::string::npos) {
      auto eq = body.find('=', fn);
      if (eq != std::string::npos) {
        std::string name = body.substr(eq + 1);
        std::istringstream ns(name);
        ns >> raw.name;
      }
      continue;
    }

    auto mpc = body.find("mpc.");
    if (mpc == std::string::npos) continue;
    auto eq = body.find('=', mpc);
    if (eq == std::string::npos) throw CaseParseError("expected '=' after field name", line_no);
    std::string field = body.substr(mpc + 4, eq - mpc - 4);
    field.erase(field.find_last_not_of(" \t") + 1);

    std::string rhs = body.substr(eq + 1);
    auto bracket = rhs.find('[');
    if (bracket == std::string::npos) {
      // scalar assignment
      if (field == "baseMVA") {
        std::vector<double> v;
        if (!parse_row_numbers(rhs, line_no, v) || v.size() != 1)
          throw CaseParseError("malformed baseMVA", line_no);
        raw.base_mva = v[0];
      }
      // version and other scalars are ignored
      continue;
    }
    open_matrix = field;
    raw.matrices[open_matrix];
    feed_matrix_line(rhs.substr(bracket + 1), line_no);
  }
  return raw;
}

inline const std::vector<MatrixRow>& require_matrix(const RawCase& raw, const std::string& name) {
  auto it = raw.matrices.find(name);
  if (it == raw.matrices.end() || it->second.empty())
    throw CaseParseError("missing required matrix mpc." + name, 0);
  return it->second;
}

inline double at(const MatrixRow& row, std::size_t col, const std::string& what) {
  if (col >= row.values.size())
    throw CaseParseError("malformed " + what + " row: expected at least " +
                             std::to_string(col + 1) + " columns, got " +
                             std::to_string(row.values.size()),
                         row.line);
  return row.values[col];
}

} // namespace detail

// Parses MATPOWER/PGLib case text into a per-unit PowerNetwork.
// Out-of-service branches and generators are dropped. A thermal rating of 0
// means unlimited (stored as +inf), matching the MATPOWER convention.
inline PowerNetwork parse_case(const std::string& text,
                               std::vector<std::string>* warnings = nullptr) {
  const double inf = std::numeric_limits<double>::infinity();
  detail::RawCase raw = detail::scan_case(text);

  if (std::isnan(raw.base_mva)) throw CaseParseError("missing baseMVA", 0);
  if (raw.base_mva <= 0.0) throw CaseParseError("baseMVA must be positive", 0);

  PowerNetwork net;
  net.name = raw.name;
  net.base_mva = raw.base_mva;
  const double base = raw.base_mva;

  int slack_count = 0;
  for (const auto& row : detail::require_matrix(raw, "bus")) {
    Bus bus;
    bus.id = static_cast<int>(detail::at(row, 0, "bus"));
    const int type = static_cast<int>(detail::at(row, 1, "bus"));
    net.pd_ref.push_back(detail::at(row, 2, "bus") / base);
    net.qd_ref.push_back(detail::at(row, 3, "bus") / base);
    bus.gs = detail::at(row, 4, "bus") / base;
    bus.bs = detail::at(row, 5, "bus") / base;
    bus.vmax = detail::at(row, 11, "bus");
    bus.vmin = detail::at(row, 12, "bus");
    if (type == 3) {
      ++slack_count;
      net.slack_bus = bus.id;
    }
    net.buses.push_back(bus);
  }
  if (slack_count == 0) throw CaseParseError("no slack bus (type 3) in bus matrix", 0);
  if (slack_count > 1) throw CaseParseError("multiple slack buses in bus matrix", 0);
  net.rebuild_index();

  const auto& gen_rows = detail::require_matrix(raw, "gen");
  const auto& cost_rows = detail::require_matrix(raw, "gencost");
  if (cost_rows.size() < gen_rows.size())
    throw CaseParseError("gencost has fewer rows than gen", cost_rows.back().line);

  for (std::size_t i = 0; i < gen_rows.size(); ++i) {
    const auto& row = gen_rows[i];
    const int status = static_cast<int>(detail::at(row, 7, "gen"));
    if (status <= 0) continue;

    Generator gen;
    gen.bus = static_cast<int>(detail::at(row, 0, "gen"));
    gen.qmax = detail::at(row, 3, "gen") / base;
    gen.qmin = detail::at(row, 4, "gen") / base;
    gen.pmax = detail::at(row, 8, "gen") / base;
    gen.pmin = detail::at(row, 9, "gen") / base;

    const auto& cost = cost_rows[i];
    const int model = static_cast<int>(detail::at(cost, 0, "gencost"));
    if (model != 2)
      throw CaseParseError("unsupported gencost model " + std::to_string(model) +
                               " (only polynomial model 2)",
                           cost.line);
    const int ncost = static_cast<int>(detail::at(cost, 3, "gencost"));
    // polynomial coefficients, highest order first; cost in $/MWh converts
    // to $/p.u.-h by multiplying with baseMVA per power order
    double c2 = 0.0, c1 = 0.0;
    if (ncost >= 3) {
      c2 = detail::at(cost, 4, "gencost");
      c1 = detail::at(cost, 5, "gencost");
    } else if (ncost == 2) {
      c1 = detail::at(cost, 4, "gencost");
    } else if (ncost == 1) {
      // constant cost only
    } else {
      throw CaseParseError("malformed gencost row: ncost = " + std::to_string(ncost), cost.line);
    }
    gen.cost = c1 * base;
    gen.cost_quad = c2 * base * base;
    if (gen.cost_quad != 0.0 && warnings)
      warnings->push_back("generator at bus " + std::to_string(gen.bus) +
                          " has a quadratic cost term; the DC objective uses only the linear "
                          "coefficient");
    net.generators.push_back(gen);
  }

  for (const auto& row : detail::require_matrix(raw, "branch")) {
    const int status = static_cast<int>(detail::at(row, 10, "branch"));
    if (status <= 0) continue;

    Branch br;
    br.from_bus = static_cast<int>(detail::at(row, 0, "branch"));
    br.to_bus = static_cast<int>(detail::at(row, 1, "branch"));
    const double r = detail::at(row, 2, "branch");
    const double x = detail::at(row, 3, "branch");
    const double z2 = r * r + x * x;
    if (z2 > 0.0) {
      br.g = r / z2;
      br.b = -x / z2;
    }
    const double charge = detail::at(row, 4, "branch");
    br.b_fr = 0.5 * charge;
    br.b_to = 0.5 * charge;
    const double rate_a = detail::at(row, 5, "branch");
    br.s_max = rate_a > 0.0 ? rate_a / base : inf;
    br.tap = detail::at(row, 8, "branch");
    br.shift = detail::at(row, 9, "branch");

    const double ang_min_deg = detail::at(row, 11, "branch");
    const double ang_max_deg = detail::at(row, 12, "branch");
    const double deg = 0.017453292519943295;
    const bool unconstrained = (ang_min_deg == 0.0 && ang_max_deg == 0.0) ||
                               (ang_min_deg <= -360.0 && ang_max_deg >= 360.0);
    br.ang_min = unconstrained || ang_min_deg <= -360.0 ? -inf : ang_min_deg * deg;
    br.ang_max = unconstrained || ang_max_deg >= 360.0 ? inf : ang_max_deg * deg;
    net.branches.push_back(br);
  }

  return net;
}

} // namespace opfvf
