#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "opfvf/grid.hpp"
#include "opfvf/opf_description.hpp"

namespace opfvf {

// Direct complex evaluation of the branch-flow equations in polar voltages.
struct AcBranchFlows {
  double p_fr = 0.0, q_fr = 0.0; // flow i -> j measured at the from end
  double p_to = 0.0, q_to = 0.0; // flow j -> i measured at the to end
};

inline AcBranchFlows ac_branch_flow(const Branch& br, double v_i, double theta_i, double v_j,
                                    double theta_j) {
  using cplx = std::complex<double>;
  const cplx y(br.g, br.b);
  const cplx yc_fr(br.g_fr, br.b_fr);
  const cplx yc_to(br.g_to, br.b_to);
  const cplx vi = std::polar(v_i, theta_i);
  const cplx vj = std::polar(v_j, theta_j);
  const cplx s_fr = std::conj(y + yc_fr) * std::norm(vi) - std::conj(y) * vi * std::conj(vj);
  const cplx s_to = std::conj(y + yc_to) * std::norm(vj) - std::conj(y) * std::conj(vi) * vj;
  return {s_fr.real(), s_fr.imag(), s_to.real(), s_to.imag()};
}

// AC-OPF description in polar form: complex power balance split into active
// and reactive rows, Ohm constraints per branch end, thermal limits on both
// flow directions, voltage and dispatch bounds, slack angle reference.
inline OpfDescription build_ac(const PowerNetwork& net, const std::vector<double>& pd,
                               const std::vector<double>& qd) {
  if (pd.size() != net.num_buses() || qd.size() != net.num_buses())
    throw std::invalid_argument("build_ac: load vectors must have one entry per bus");

  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t nb = net.num_buses();
  const std::size_t ne = net.num_branches();
  const std::size_t ng = net.num_generators();

  OpfDescription desc;
  desc.formulation = "ac";

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
  VariableGroup v = free_group("v", nb);
  for (std::size_t i = 0; i < nb; ++i) {
    v.lower[i] = net.buses[i].vmin;
    v.upper[i] = net.buses[i].vmax;
  }
  desc.variables.push_back(std::move(pg));
  desc.variables.push_back(std::move(qg));
  desc.variables.push_back(std::move(v));
  desc.variables.push_back(free_group("theta", nb));
  desc.variables.push_back(free_group("pf", 2 * ne));
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
    const int ik = static_cast<int>(k);
    desc.constraints.push_back({"ohm_fr",
                                {ik, fi, ti},
                                {{"g", br.g}, {"b", br.b}, {"gc", br.g_fr}, {"bc", br.b_fr}}});
    desc.constraints.push_back({"ohm_to",
                                {ik, fi, ti},
                                {{"g", br.g}, {"b", br.b}, {"gc", br.g_to}, {"bc", br.b_to}}});
  }

  for (std::size_t k = 0; k < ne; ++k) {
    for (int dir = 0; dir < 2; ++dir) {
      const double s = net.branches[k].s_max;
      ConstraintBlock block;
      block.kind = "thermal_ac";
      block.indices = {static_cast<int>(k), dir};
      block.coefficients.push_back({"limited", std::isfinite(s) ? 1.0 : 0.0});
      if (std::isfinite(s)) block.coefficients.push_back({"limit", s});
      desc.constraints.push_back(std::move(block));
    }
  }

  desc.constraints.push_back({"slack_ref", {net.bus_index(net.slack_bus)}, {}});

  for (std::size_t g = 0; g < ng; ++g) desc.objective.push_back(net.generators[g].cost);
  return desc;
}

// Feasibility residuals of an operating point against an AC description.
// Point layout: v, theta per bus; pg, qg per generator. Flow variables are
// recovered from the Ohm records. Returns the largest violation over all
// constraint blocks.
struct AcPoint {
  std::vector<double> v;
  std::vector<double> theta;
  std::vector<double> pg;
  std::vector<double> qg;
};

inline double ac_max_violation(const OpfDescription& desc, const PowerNetwork& net,
                               const AcPoint& pt) {
  if (desc.formulation != "ac") throw std::invalid_argument("ac_max_violation: not an ac description");
  const std::size_t nb = net.num_buses();
  const std::size_t ne = net.num_branches();

  // flows from the description's ohm records
  std::vector<double> p_fr(ne), q_fr(ne), p_to(ne), q_to(ne);
  for (const auto& con : desc.constraints) {
    if (con.kind != "ohm_fr" && con.kind != "ohm_to") continue;
    const int k = con.indices[0];
    const int fi = con.indices[1];
    const int ti = con.indices[2];
    Branch br;
    for (const auto& [name, val] : con.coefficients) {
      if (name == "g") br.g = val;
      if (name == "b") br.b = val;
      if (name == "gc") {
        br.g_fr = val;
        br.g_to = val;
      }
      if (name == "bc") {
        br.b_fr = val;
        br.b_to = val;
      }
    }
    const AcBranchFlows flows =
        ac_branch_flow(br, pt.v[fi], pt.theta[fi], pt.v[ti], pt.theta[ti]);
    if (con.kind == "ohm_fr") {
      p_fr[k] = flows.p_fr;
      q_fr[k] = flows.q_fr;
    } else {
      p_to[k] = flows.p_to;
      q_to[k] = flows.q_to;
    }
  }

  // nodal injections
  std::vector<double> p_net(nb, 0.0), q_net(nb, 0.0);
  for (std::size_t g = 0; g < net.num_generators(); ++g) {
    const int bi = net.bus_index(net.generators[g].bus);
    p_net[bi] += pt.pg[g];
    q_net[bi] += pt.qg[g];
  }
  for (std::size_t k = 0; k < ne; ++k) {
    const int fi = net.bus_index(net.branches[k].from_bus);
    const int ti = net.bus_index(net.branches[k].to_bus);
    p_net[fi] -= p_fr[k];
    q_net[fi] -= q_fr[k];
    p_net[ti] -= p_to[k];
    q_net[ti] -= q_to[k];
  }

  double worst = 0.0;
  for (const auto& con : desc.constraints) {
    if (con.kind == "balance_p") {
      const int i = con.indices[0];
      double gs = 0.0, pd = 0.0;
      for (const auto& [name, val] : con.coefficients) {
        if (name == "gs") gs = val;
        if (name == "pd") pd = val;
      }
      worst = std::max(worst, std::abs(p_net[i] - gs * pt.v[i] * pt.v[i] - pd));
    } else if (con.kind == "balance_q") {
      const int i = con.indices[0];
      double bs = 0.0, qd = 0.0;
      for (const auto& [name, val] : con.coefficients) {
        if (name == "bs") bs = val;
        if (name == "qd") qd = val;
      }
      worst = std::max(worst, std::abs(q_net[i] + bs * pt.v[i] * pt.v[i] - qd));
    } else if (con.kind == "thermal_ac") {
      const int k = con.indices[0];
      const bool fwd = con.indices[1] == 0;
      double limited = 0.0, limit = 0.0;
      for (const auto& [name, val] : con.coefficients) {
        if (name == "limited") limited = val;
        if (name == "limit") limit = val;
      }
      if (limited > 0.0) {
        const double p = fwd ? p_fr[k] : p_to[k];
        const double q = fwd ? q_fr[k] : q_to[k];
        worst = std::max(worst, std::sqrt(p * p + q * q) - limit);
      }
    } else if (con.kind == "slack_ref") {
      worst = std::max(worst, std::abs(pt.theta[con.indices[0]]));
    }
  }

  for (const auto& group : desc.variables) {
    const std::vector<double>* vals = nullptr;
    if (group.kind == "v") vals = &pt.v;
    if (group.kind == "theta") vals = &pt.theta;
    if (group.kind == "pg") vals = &pt.pg;
    if (group.kind == "qg") vals = &pt.qg;
    if (!vals) continue;
    for (std::size_t i = 0; i < group.count; ++i) {
      worst = std::max(worst, group.lower[i] - (*vals)[i]);
      worst = std::max(worst, (*vals)[i] - group.upper[i]);
    }
  }
  return worst;
}

} // namespace opfvf
