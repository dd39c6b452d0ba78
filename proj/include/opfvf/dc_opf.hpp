#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "opfvf/grid.hpp"
#include "opfvf/ipm.hpp"
#include "opfvf/lp.hpp"
#include "opfvf/opf_description.hpp"

namespace opfvf {

// DC-OPF as a linear program:
//   min sum_i c_i pg_i
//   s.t. per bus:    pg_i + sum_in pf - sum_out pf = pd_i
//        per branch: pf_ij = b_ij (theta_j - theta_i)
//        |pf_ij| <= s_max where limited, pg bounds, theta_slack = 0,
//        and angle-difference limits where the case declares them.
//
// The branch susceptance b_ij is the imaginary part of the parsed series
// admittance, used with the sign convention written above; the gamma-form
// cross-checks in the test suite pin this convention down.

struct DcOpfProblem {
  LinearProgram lp;
  std::vector<int> gen_col;      // generator -> pg column
  std::vector<int> theta_col;    // bus -> theta column
  std::vector<int> flow_col;     // branch -> pf column
  std::vector<int> balance_row;  // bus -> balance row
  std::vector<int> ohm_row;      // branch -> Ohm row
  int slack_row = -1;
  std::vector<std::pair<int, int>> angle_rows; // branch -> (min row, max row), -1 if absent
};

inline DcOpfProblem build_dc(const PowerNetwork& net, const std::vector<double>& pd) {
  if (pd.size() != net.num_buses())
    throw std::invalid_argument("build_dc: load vector must have one entry per bus");

  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t nb = net.num_buses();
  const std::size_t ng = net.num_generators();
  const std::size_t ne = net.num_branches();

  DcOpfProblem prob;
  prob.gen_col.resize(ng);
  prob.theta_col.resize(nb);
  prob.flow_col.resize(ne);
  prob.balance_row.resize(nb);
  prob.ohm_row.resize(ne);
  prob.angle_rows.assign(ne, {-1, -1});
  LinearProgram& lp = prob.lp;

  for (std::size_t g = 0; g < ng; ++g)
    prob.gen_col[g] = lp.add_variable(net.generators[g].cost, net.generators[g].pmin,
                                      net.generators[g].pmax);
  for (std::size_t i = 0; i < nb; ++i) prob.theta_col[i] = lp.add_variable(0.0, -inf, inf);
  for (std::size_t k = 0; k < ne; ++k) {
    const double s = net.branches[k].s_max;
    const double limit = std::isfinite(s) ? s : inf;
    prob.flow_col[k] = lp.add_variable(0.0, -limit, limit);
  }

  // power balance per bus
  std::vector<std::vector<std::pair<int, double>>> balance(nb);
  for (std::size_t g = 0; g < ng; ++g) {
    const int bi = net.bus_index(net.generators[g].bus);
    if (bi < 0) throw std::invalid_argument("build_dc: generator references a missing bus");
    balance[bi].push_back({prob.gen_col[g], 1.0});
  }
  for (std::size_t k = 0; k < ne; ++k) {
    const int fi = net.bus_index(net.branches[k].from_bus);
    const int ti = net.bus_index(net.branches[k].to_bus);
    if (fi < 0 || ti < 0) throw std::invalid_argument("build_dc: branch references a missing bus");
    balance[fi].push_back({prob.flow_col[k], -1.0}); // flow leaves the from bus
    balance[ti].push_back({prob.flow_col[k], 1.0});
  }
  for (std::size_t i = 0; i < nb; ++i)
    prob.balance_row[i] = lp.add_row(RowKind::Equal, pd[i], balance[i]);

  // Ohm rows: pf - b*(theta_to - theta_from) = 0
  for (std::size_t k = 0; k < ne; ++k) {
    const Branch& br = net.branches[k];
    const int fi = net.bus_index(br.from_bus);
    const int ti = net.bus_index(br.to_bus);
    prob.ohm_row[k] = lp.add_row(RowKind::Equal, 0.0,
                                 {{prob.flow_col[k], 1.0},
                                  {prob.theta_col[ti], -br.b},
                                  {prob.theta_col[fi], br.b}});
  }

  const int slack_idx = net.bus_index(net.slack_bus);
  if (slack_idx < 0) throw std::invalid_argument("build_dc: slack bus missing");
  prob.slack_row = lp.add_row(RowKind::Equal, 0.0, {{prob.theta_col[slack_idx], 1.0}});

  // angle-difference limits: ang_min <= theta_from - theta_to <= ang_max
  for (std::size_t k = 0; k < ne; ++k) {
    const Branch& br = net.branches[k];
    if (!br.angle_limited()) continue;
    const int fi = net.bus_index(br.from_bus);
    const int ti = net.bus_index(br.to_bus);
    int row_min = -1, row_max = -1;
    if (std::isfinite(br.ang_min))
      row_min = lp.add_row(RowKind::GreaterEqual, br.ang_min,
                           {{prob.theta_col[fi], 1.0}, {prob.theta_col[ti], -1.0}});
    if (std::isfinite(br.ang_max))
      row_max = lp.add_row(RowKind::LessEqual, br.ang_max,
                           {{prob.theta_col[fi], 1.0}, {prob.theta_col[ti], -1.0}});
    prob.angle_rows[k] = {row_min, row_max};
  }

  return prob;
}

// The DC problem in the portable description schema, for export alongside
// the SOC and AC formulations.
inline OpfDescription build_dc_description(const PowerNetwork& net, const std::vector<double>& pd) {
  if (pd.size() != net.num_buses())
    throw std::invalid_argument("build_dc_description: load vector must have one entry per bus");

  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t nb = net.num_buses();
  const std::size_t ne = net.num_branches();
  const std::size_t ng = net.num_generators();

  OpfDescription desc;
  desc.formulation = "dc";

  VariableGroup pg{"pg", ng, {}, {}};
  for (std::size_t g = 0; g < ng; ++g) {
    pg.lower.push_back(net.generators[g].pmin);
    pg.upper.push_back(net.generators[g].pmax);
  }
  desc.variables.push_back(std::move(pg));
  desc.variables.push_back({"theta", nb, std::vector<double>(nb, -inf), std::vector<double>(nb, inf)});
  VariableGroup pf{"pf", ne, {}, {}};
  for (std::size_t k = 0; k < ne; ++k) {
    const double s = net.branches[k].s_max;
    pf.lower.push_back(std::isfinite(s) ? -s : -inf);
    pf.upper.push_back(std::isfinite(s) ? s : inf);
  }
  desc.variables.push_back(std::move(pf));

  for (std::size_t i = 0; i < nb; ++i)
    desc.constraints.push_back({"balance", {static_cast<int>(i)}, {{"pd", pd[i]}}});
  for (std::size_t k = 0; k < ne; ++k) {
    const Branch& br = net.branches[k];
    desc.constraints.push_back({"ohm_dc",
                                {static_cast<int>(k), net.bus_index(br.from_bus),
                                 net.bus_index(br.to_bus)},
                                {{"b", br.b}}});
  }
  desc.constraints.push_back({"slack_ref", {net.bus_index(net.slack_bus)}, {}});
  for (std::size_t k = 0; k < ne; ++k) {
    const Branch& br = net.branches[k];
    if (!br.angle_limited()) continue;
    ConstraintBlock block;
    block.kind = "angle_limit";
    block.indices = {static_cast<int>(k), net.bus_index(br.from_bus), net.bus_index(br.to_bus)};
    if (std::isfinite(br.ang_min)) block.coefficients.push_back({"min", br.ang_min});
    if (std::isfinite(br.ang_max)) block.coefficients.push_back({"max", br.ang_max});
    desc.constraints.push_back(std::move(block));
  }

  for (std::size_t g = 0; g < ng; ++g) desc.objective.push_back(net.generators[g].cost);
  return desc;
}

// Value and gradient of the DC value function Phi(pd): the optimal objective
// together with the balance-row duals ordered by bus. Any dual optimum is a
// subgradient of Phi; when it is unique this is the gradient.
struct ValueGradient {
  LpStatus status = LpStatus::IterationLimit;
  double value = 0.0;
  std::vector<double> gradient; // one entry per bus
  int iterations = 0;
};

inline ValueGradient value_and_gradient(const PowerNetwork& net, const std::vector<double>& pd,
                                        double tol = 1e-8) {
  DcOpfProblem prob = build_dc(net, pd);
  IpmOptions opts;
  opts.tol = tol;
  opts.collect_trace = false;
  LpSolution sol = solve(prob.lp, opts);

  ValueGradient out;
  out.status = sol.status;
  out.iterations = sol.iterations;
  if (sol.optimal()) {
    out.value = sol.objective;
    out.gradient.resize(net.num_buses());
    for (std::size_t i = 0; i < net.num_buses(); ++i)
      out.gradient[i] = sol.y[prob.balance_row[i]];
  }
  return out;
}

} // namespace opfvf
