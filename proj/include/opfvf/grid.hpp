#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

namespace opfvf {

// All electrical quantities are stored in per-unit on base_mva. Angles are
// radians. A thermal limit of 0 in the source file means "unlimited" and is
// stored as +infinity.

struct Bus {
  int id = 0;            // external bus number from the case file
  double vmin = 0.0;     // voltage magnitude bounds, p.u.
  double vmax = 0.0;
  double gs = 0.0;       // shunt admittance Y^s = gs + j*bs, p.u.
  double bs = 0.0;
};

struct Branch {
  int from_bus = 0;      // external ids
  int to_bus = 0;
  double g = 0.0;        // series admittance Y = g + j*b, p.u.
  double b = 0.0;
  double g_fr = 0.0;     // shunt admittance Y^c at each end, p.u.
  double b_fr = 0.0;
  double g_to = 0.0;
  double b_to = 0.0;
  double s_max = 0.0;    // thermal limit, p.u.; +inf when unlimited
  double ang_min = 0.0;  // angle-difference limits theta_f - theta_t, rad
  double ang_max = 0.0;  // +-inf when unlimited
  double tap = 1.0;      // parsed but not used in the formulations
  double shift = 0.0;

  bool thermal_limited() const { return std::isfinite(s_max); }
  bool angle_limited() const { return std::isfinite(ang_min) || std::isfinite(ang_max); }
};

struct Generator {
  int bus = 0;           // external id
  double pmin = 0.0;     // active bounds, p.u.
  double pmax = 0.0;
  double qmin = 0.0;     // reactive bounds, p.u.
  double qmax = 0.0;
  double cost = 0.0;     // linear cost, currency per p.u. per hour
  double cost_quad = 0.0; // quadratic term, kept but unused by the DC objective
};

struct PowerNetwork {
  std::string name;
  double base_mva = 0.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<double> pd_ref;  // reference active demand per bus, p.u.
  std::vector<double> qd_ref;  // reference reactive demand per bus, p.u.
  int slack_bus = 0;           // external id

  std::size_t num_buses() const { return buses.size(); }
  std::size_t num_branches() const { return branches.size(); }
  std::size_t num_generators() const { return generators.size(); }

  // dense index of an external bus id, -1 when absent
  int bus_index(int id) const {
    auto it = bus_index_.find(id);
    return it == bus_index_.end() ? -1 : it->second;
  }

  void rebuild_index() {
    bus_index_.clear();
    for (std::size_t i = 0; i < buses.size(); ++i) bus_index_[buses[i].id] = static_cast<int>(i);
  }

  double total_pd_ref() const {
    double t = 0.0;
    for (double v : pd_ref) t += v;
    return t;
  }

private:
  std::map<int, int> bus_index_;
};

struct Violation {
  std::string code;    // machine-readable, e.g. "branch.dangling_bus"
  std::string detail;  // human-readable context
};

// Checks every data-model invariant; violations are data, not exceptions.
inline std::vector<Violation> validate(const PowerNetwork& net) {
  std::vector<Violation> out;
  auto add = [&out](std::string code, std::string detail) {
    out.push_back({std::move(code), std::move(detail)});
  };

  if (!(net.base_mva > 0.0)) add("network.base_mva", "base_mva must be positive");

  int slack_count = 0;
  std::map<int, int> seen_ids;
  for (const auto& bus : net.buses) {
    if (++seen_ids[bus.id] == 2)
      add("bus.duplicate_id", "bus " + std::to_string(bus.id) + " appears more than once");
    if (!(bus.vmin > 0.0) || !(bus.vmin <= bus.vmax))
      add("bus.voltage_bounds", "bus " + std::to_string(bus.id) + " requires 0 < vmin <= vmax");
    if (bus.id == net.slack_bus) ++slack_count;
  }
  if (slack_count != 1)
    add("network.slack_bus", "expected exactly one slack bus, found " + std::to_string(slack_count));

  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto& br = net.branches[k];
    const std::string tag = "branch " + std::to_string(k) + " (" + std::to_string(br.from_bus) +
                            "->" + std::to_string(br.to_bus) + ")";
    if (net.bus_index(br.from_bus) < 0 || net.bus_index(br.to_bus) < 0)
      add("branch.dangling_bus", tag + " references a missing bus");
    if (br.from_bus == br.to_bus) add("branch.self_loop", tag + " is a self loop");
    if (br.s_max < 0.0) add("branch.thermal_limit", tag + " has negative thermal limit");
  }

  for (std::size_t k = 0; k < net.generators.size(); ++k) {
    const auto& gen = net.generators[k];
    const std::string tag = "generator " + std::to_string(k) + " at bus " + std::to_string(gen.bus);
    if (net.bus_index(gen.bus) < 0) add("generator.dangling_bus", tag + ": missing bus");
    if (gen.pmin > gen.pmax) add("generator.active_bounds", tag + ": pmin > pmax");
    if (gen.qmin > gen.qmax) add("generator.reactive_bounds", tag + ": qmin > qmax");
  }

  if (net.pd_ref.size() != net.buses.size() || net.qd_ref.size() != net.buses.size())
    add("network.load_vector", "reference load vectors must have one entry per bus");

  return out;
}

} // namespace opfvf
