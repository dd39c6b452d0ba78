#pragma once

#include <cstdio>
#include <filesystem>
#include <string>

#include "opfvf/case_parser.hpp"
#include "opfvf/grid.hpp"
#include "opfvf/jsonio.hpp"

namespace testutil {

inline std::string case_path(const std::string& name) {
  return std::string(OPFVF_CASE_DIR) + "/" + name;
}

inline opfvf::PowerNetwork load_case(const std::string& name) {
  return opfvf::parse_case(opfvf::read_text_file(case_path(name)));
}

// Builds the 2-bus toy used across the suites: generator at bus 1
// (configurable cost/capacity), load at bus 2, single line with b = -5.
inline opfvf::PowerNetwork two_bus_toy(double gen_cost = 10.0, double gen_cap = 2.0,
                                       double line_limit = 0.0 /* 0 = unlimited */) {
  opfvf::PowerNetwork net;
  net.name = "twobus";
  net.base_mva = 100.0;
  net.buses = {{1, 0.9, 1.1, 0.0, 0.0}, {2, 0.9, 1.1, 0.0, 0.0}};
  opfvf::Branch br;
  br.from_bus = 1;
  br.to_bus = 2;
  br.b = -5.0;
  br.s_max = line_limit > 0.0 ? line_limit : std::numeric_limits<double>::infinity();
  br.ang_min = -std::numeric_limits<double>::infinity();
  br.ang_max = std::numeric_limits<double>::infinity();
  net.branches = {br};
  opfvf::Generator gen;
  gen.bus = 1;
  gen.pmin = 0.0;
  gen.pmax = gen_cap;
  gen.qmin = -1.0;
  gen.qmax = 1.0;
  gen.cost = gen_cost;
  net.generators = {gen};
  net.pd_ref = {0.0, 1.0};
  net.qd_ref = {0.0, 0.2};
  net.slack_bus = 1;
  net.rebuild_index();
  return net;
}

// scratch directory for files a test writes
inline std::string scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("opfvf_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

} // namespace testutil
