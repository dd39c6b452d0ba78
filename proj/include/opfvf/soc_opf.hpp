#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "opfvf/grid.hpp"
#include "opfvf/opf_description.hpp"

namespace opfvf {

// Coefficients of the SOC Ohm constraints. Substituting
//   w_i = v_i^2,  wr = v_i v_j cos(theta_j - theta_i),
//   wi = v_i v_j sin(theta_j - theta_i)
// into the complex branch-flow equations
//   S_ij = (Y + Yc_fr)^* |V_i|^2 - Y^* V_i V_j^*
//   S_ji = (Y + Yc_to)^* |V_j|^2 - Y^* V_i^* V_j
// and collecting terms (note V_i V_j^* = wr - j wi, V_i^* V_j = wr + j wi)
// gives, with Y = g + jb:
//   p_ij = (g + g_fr) w_i - g wr + b wi
//   q_ij = -(b + b_fr) w_i + b wr + g wi
//   p_ji = (g + g_to) w_j - g wr - b wi
//   q_ji = -(b + b_to) w_j + b wr - g wi
// The real-flow coefficient multiplies w at the sending end of each
// direction (w_i forward, w_j reverse); likewise for the reactive flow.

struct BranchGamma {
  double p_w = 0.0;   // multiplies w at the sending end
  double p_wr = 0.0;
  double p_wi = 0.0;
  double q_w = 0.0;
  double q_wr = 0.0;
  double q_wi = 0.0;
};

struct BranchGammaPair {
  BranchGamma fwd; // flow i -> j, w coefficient applies to w_i
  BranchGamma rev; // flow j -> i, w coefficient applies to w_j
};

inline BranchGammaPair soc_branch_coefficients(const Branch& br) {
  if (!std::isfinite(br.g) || !std::isfinite(br.b))
    throw std::invalid_argument("soc_branch_coefficients: non-finite admittance");
  BranchGammaPair gamma;
  gamma.fwd.p_w = br.g + br.g_fr;
  gamma.fwd.p_wr = -br.g;
  gamma.fwd.p_wi = br.b;
  gamma.fwd.q_w = -(br.b + br.b_fr);
  gamma.fwd.q_wr = br.b;
  gamma.fwd.q_wi = br.g;
  gamma.rev.p_w = br.g + br.g_to;
  gamma.rev.p_wr = -br.g;
  gamma.rev.p_wi = -br.b;
  gamma.rev.q_w = -(br.b + br.b_to);
  gamma.rev.q_wr = br.b;
  gamma.rev.q_wi = -br.g;
  return gamma;
}

// flows of one direction from the gamma form
inline std::pair<double, double> soc_flow(const BranchGamma& g, double w_send, double wr,
                                          double wi) {
  return {g.p_w * w_send + g.p_wr * wr + g.p_wi * wi,
          g.q_w * w_send + g.q_wr * wr + g.q_wi * wi};
}

// Builds the SOC-OPF description: active/reactive balance, gamma-form Ohm
// constraints, thermal cones on both directions, one Jabr cone per branch,
// squared voltage bounds, and generator bounds.
inline OpfDescription build_soc(const PowerNetwork& net, const std::vector<double>& pd,
                                const std::vector<double>& qd) {
  if (pd.size() != net.num_buses() || qd.size() != net.num_buses())
    throw std::invalid_argument("build_soc: load vectors must have one entry per bus");

  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t nb = net.num_buses();
  const std::size_t ne = net.num_branches();
  const std::size_t ng = net.num_generators();

  OpfDescription desc;
  desc.formulation = "soc";

  auto free_group = [inf](const std::string& kind, std::size_t count) {
    return VariableGroup{kind, count, std::vector<double>(count, -inf),
                         std::vector<double>(count, inf)};
  };

  VariableGroup pg = free_group("pg", ng);
  VariableGroup qg = free_group("qg", ng);
  for (std::size_t g = 0; g < ng; ++g) {
    pg.lower[g] = net.generators[g].pmin;
    pg.upper[g] = net.generators[g].pmax;
    qg.lower[g] = net.generators[g].qmin;
    qg.upper[g] = net.generators[g].qmax;
  }
  VariableGroup w = free_group("w", nb);
  for (std::size_t i = 0; i < nb; ++i) {
    w.lower[i] = net.buses[i].vmin * net.buses[i].vmin;
    w.upper[i] = net.buses[i].vmax * net.buses[i].vmax;
  }
  desc.variables.push_back(std::move(pg));
  desc.variables.push_back(std::move(qg));
  desc.variables.push_back(std::move(w));
  desc.variables.push_back(free_group("wr", ne));
  desc.variables.push_back(free_group("wi", ne));
  desc.variables.push_back(free_group("pf", 2 * ne)); // forward flows first, then reverse
  desc.variables.push_back(free_group("qf", 2 * ne));

  for (std::size_t i = 0; i < nb; ++i)
    desc.constraints.push_back({"balance_p",
                                {static_cast<int>(i)},
                                {{"gs", net.buses[i].gs}, {"pd", pd[i]}}});
  for (std::size_t i = 0; i < nb; ++i)
    desc.constraints.push_back({"balance_q",
                                {static_cast<int>(i)},
                                {{"bs", net.buses[i].bs}, {"qd", qd[i]}}});

  for (std::size_t k = 0; k < ne; ++k) {
    const Branch& br = net.branches[k];
    const int fi = net.bus_index(br.from_bus);
    const int ti = net.bus_index(br.to_bus);
    const BranchGammaPair gamma = soc_branch_coefficients(br);
    const int ik = static_cast<int>(k);
    desc.constraints.push_back({"ohm_p_fr",
                                {ik, fi, ti},
                                {{"w", gamma.fwd.p_w}, {"wr", gamma.fwd.p_wr}, {"wi", gamma.fwd.p_wi}}});
    desc.constraints.push_back({"ohm_q_fr",
                                {ik, fi, ti},
                                {{"w", gamma.fwd.q_w}, {"wr", gamma.fwd.q_wr}, {"wi", gamma.fwd.q_wi}}});
    desc.constraints.push_back({"ohm_p_to",
                                {ik, fi, ti},
                                {{"w", gamma.rev.p_w}, {"wr", gamma.rev.p_wr}, {"wi", gamma.rev.p_wi}}});
    desc.constraints.push_back({"ohm_q_to",
                                {ik, fi, ti},
                                {{"w", gamma.rev.q_w}, {"wr", gamma.rev.q_wr}, {"wi", gamma.rev.q_wi}}});
  }

  // thermal cones: forward then reverse per branch
  for (std::size_t k = 0; k < ne; ++k) {
    for (int dir = 0; dir < 2; ++dir) {
      const double s = net.branches[k].s_max;
      ConstraintBlock block;
      block.kind = "thermal_soc";
      block.indices = {static_cast<int>(k), dir};
      block.coefficients.push_back({"limited", std::isfinite(s) ? 1.0 : 0.0});
      if (std::isfinite(s)) block.coefficients.push_back({"limit", s});
      desc.constraints.push_back(std::move(block));
    }
  }

  for (std::size_t k = 0; k < ne; ++k) {
    const int fi = net.bus_index(net.branches[k].from_bus);
    const int ti = net.bus_index(net.branches[k].to_bus);
    desc.constraints.push_back({"jabr", {static_cast<int>(k), fi, ti}, {}});
  }

  for (std::size_t g = 0; g < ng; ++g) desc.objective.push_back(net.generators[g].cost);
  return desc;
}

} // namespace opfvf
