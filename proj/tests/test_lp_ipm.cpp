#include <catch2/catch_amalgamated.hpp>

#include "opfvf/dc_opf.hpp"
#include "opfvf/ipm.hpp"
#include "opfvf/lp.hpp"
#include "opfvf/vertex_enum.hpp"

#include "helpers.hpp"
#include "lp_testgen.hpp"

using namespace opfvf;

namespace {

LinearProgram one_dim_lp() {
  LinearProgram lp;
  lp.add_variable(1.0, -std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity());
  lp.add_row(RowKind::GreaterEqual, 3.0, {{0, 1.0}});
  return lp;
}

} // namespace

TEST_CASE("1-D LP: min x s.t. x >= 3") {
  LinearProgram lp = one_dim_lp();
  LpSolution sol = solve(lp, 1e-9);
  REQUIRE(sol.optimal());
  CHECK(sol.objective == Catch::Approx(3.0).margin(1e-7));
  CHECK(sol.y[0] == Catch::Approx(1.0).margin(1e-7));

  BruteForceResult bf = brute_force_lp(lp);
  REQUIRE(bf.status == LpStatus::Optimal);
  CHECK(bf.objective == Catch::Approx(3.0).margin(1e-12));
}

TEST_CASE("2-bus DC toy: uncongested and congested duals") {
  SECTION("uncongested: objective 10, load-bus price 10") {
    auto net = testutil::two_bus_toy(10.0, 2.0);
    DcOpfProblem prob = build_dc(net, net.pd_ref);
    // structure: 1 gen var, 2 angles, 1 flow, 2 balance rows, 1 Ohm row, slack pin
    CHECK(prob.lp.num_vars() == 4);
    CHECK(prob.lp.num_rows() == 4);

    LpSolution sol = solve(prob.lp, 1e-9);
    REQUIRE(sol.optimal());
    CHECK(sol.objective == Catch::Approx(10.0).margin(1e-6));
    CHECK(sol.y[prob.balance_row[1]] == Catch::Approx(10.0).margin(1e-6));

    BruteForceResult bf = brute_force_lp(prob.lp);
    REQUIRE(bf.status == LpStatus::Optimal);
    CHECK(bf.objective == Catch::Approx(10.0).margin(1e-9));
    REQUIRE(bf.duals_valid);
    CHECK(bf.y[prob.balance_row[1]] == Catch::Approx(10.0).margin(1e-9));
  }

  SECTION("congested: line limit 0.5 and a 50-cost generator at the load bus") {
    auto net = testutil::two_bus_toy(10.0, 2.0, 0.5);
    Generator expensive;
    expensive.bus = 2;
    expensive.pmin = 0.0;
    expensive.pmax = 2.0;
    expensive.cost = 50.0;
    net.generators.push_back(expensive);

    DcOpfProblem prob = build_dc(net, net.pd_ref);
    LpSolution sol = solve(prob.lp, 1e-9);
    REQUIRE(sol.optimal());
    CHECK(sol.objective == Catch::Approx(30.0).margin(1e-6));
    // the optimal vertex is non-degenerate, so the dual is unique here
    CHECK(sol.y[prob.balance_row[1]] == Catch::Approx(50.0).margin(1e-5));

    BruteForceResult bf = brute_force_lp(prob.lp);
    REQUIRE(bf.status == LpStatus::Optimal);
    CHECK(bf.objective == Catch::Approx(30.0).margin(1e-9));
    REQUIRE(bf.duals_valid);
    // load-bus price set by the expensive local generator
    CHECK(bf.y[prob.balance_row[1]] == Catch::Approx(50.0).margin(1e-9));
    CHECK(sol.y[prob.balance_row[1]] == Catch::Approx(bf.y[prob.balance_row[1]]).margin(1e-5));
  }
}

TEST_CASE("brute force: infeasible toy") {
  LinearProgram lp;
  lp.add_variable(1.0, -10.0, 10.0);
  lp.add_row(RowKind::GreaterEqual, 1.0, {{0, 1.0}});
  lp.add_row(RowKind::LessEqual, 0.0, {{0, 1.0}});
  BruteForceResult bf = brute_force_lp(lp);
  CHECK(bf.status == LpStatus::Infeasible);

  LpSolution sol = solve(lp, 1e-8);
  CHECK(sol.status == LpStatus::Infeasible);
}

TEST_CASE("ipm detects an unbounded problem") {
  LinearProgram lp;
  lp.add_variable(-1.0, 0.0, std::numeric_limits<double>::infinity());
  lp.add_variable(1.0, 0.0, 5.0);
  lp.add_row(RowKind::GreaterEqual, -1.0, {{0, 1.0}, {1, 1.0}});
  LpSolution sol = solve(lp, 1e-8);
  CHECK(sol.status == LpStatus::Unbounded);
}

TEST_CASE("oracle equivalence on random small LPs") {
  Rng rng(20240811);
  int solved = 0;
  for (int trial = 0; trial < 40; ++trial) {
    LinearProgram lp = testutil::random_feasible_lp(rng);
    BruteForceResult bf = brute_force_lp(lp);
    REQUIRE(bf.status == LpStatus::Optimal); // feasible by construction
    LpSolution sol = solve(lp, 1e-9);
    REQUIRE(sol.optimal());
    CHECK(sol.objective == Catch::Approx(bf.objective).margin(1e-6 * (1.0 + std::abs(bf.objective))));

    // strong duality and complementary slackness at the reported solution
    double dual_obj = 0.0;
    for (int i = 0; i < lp.num_rows(); ++i) dual_obj += lp.rhs[i] * sol.y[i];
    for (int j = 0; j < lp.num_vars(); ++j) {
      const double rc = sol.reduced_costs[j];
      if (rc > 0.0) dual_obj += lp.lo[j] * rc;
      if (rc < 0.0) dual_obj += lp.hi[j] * rc;
    }
    CHECK(std::abs(sol.objective - dual_obj) <= 1e-8 * (1.0 + std::abs(sol.objective)));
    CHECK(testutil::complementarity_violation(lp, sol) <= 1e-6 * (1.0 + std::abs(sol.objective)));
    ++solved;
  }
  CHECK(solved >= 20);
}

TEST_CASE("weak duality holds along the ipm trace") {
  auto net = testutil::load_case("case14.m");
  DcOpfProblem prob = build_dc(net, net.pd_ref);
  IpmOptions opts;
  opts.tol = 1e-9;
  LpSolution sol = solve(prob.lp, opts);
  REQUIRE(sol.optimal());
  REQUIRE(sol.trace.size() >= 3);
  for (const auto& it : sol.trace) {
    // primal >= dual up to the infeasibility of the current iterate
    const double slack = 10.0 * (it.primal_inf + it.dual_inf) *
                             (1.0 + std::abs(it.primal_obj) + std::abs(it.dual_obj)) +
                         1e-6;
    CHECK(it.primal_obj >= it.dual_obj - slack);
  }
}

TEST_CASE("value_and_gradient on the toy and zero loads") {
  auto net = testutil::two_bus_toy();
  SECTION("uncongested prices equal marginal cost at every bus") {
    ValueGradient vg = value_and_gradient(net, net.pd_ref);
    REQUIRE(vg.status == LpStatus::Optimal);
    CHECK(vg.value == Catch::Approx(10.0).margin(1e-6));
    CHECK(vg.gradient[0] == Catch::Approx(10.0).margin(1e-6));
    CHECK(vg.gradient[1] == Catch::Approx(10.0).margin(1e-6));
  }
  SECTION("zero demand with pmin = 0 costs nothing") {
    ValueGradient vg = value_and_gradient(net, {0.0, 0.0});
    REQUIRE(vg.status == LpStatus::Optimal);
    CHECK(vg.value == Catch::Approx(0.0).margin(1e-8));
  }
}

TEST_CASE("balance duals match finite differences of the value function") {
  auto net = testutil::load_case("case14.m");
  std::vector<double> pd = net.pd_ref;
  ValueGradient base = value_and_gradient(net, pd, 1e-10);
  REQUIRE(base.status == LpStatus::Optimal);

  const double eps = 1e-5;
  int checked = 0;
  for (std::size_t k = 0; k < pd.size(); ++k) {
    auto up = pd, dn = pd;
    up[k] += eps;
    dn[k] -= eps;
    ValueGradient vu = value_and_gradient(net, up, 1e-10);
    ValueGradient vd = value_and_gradient(net, dn, 1e-10);
    REQUIRE(vu.status == LpStatus::Optimal);
    REQUIRE(vd.status == LpStatus::Optimal);
    const double fd = (vu.value - vd.value) / (2.0 * eps);
    const double fd_fwd = (vu.value - base.value) / eps;
    const double fd_bwd = (base.value - vd.value) / eps;
    if (std::abs(fd_fwd - fd_bwd) > 1e-3 * (1.0 + std::abs(fd))) continue; // kink: degenerate
    CHECK(std::abs(fd - base.gradient[k]) <= 1e-4 * (1.0 + std::abs(base.gradient[k])));
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("lp validation rejects malformed input") {
  LinearProgram lp;
  lp.add_variable(1.0, 0.0, -1.0);
  CHECK_THROWS_AS(solve(lp, 1e-8), std::invalid_argument);

  LinearProgram lp2 = one_dim_lp();
  CHECK_THROWS_AS(solve(lp2, -1.0), std::invalid_argument);

  LinearProgram lp3 = one_dim_lp();
  lp3.rows[0][0].first = 7; // column out of range
  CHECK_THROWS_AS(solve(lp3, 1e-8), std::invalid_argument);
}

TEST_CASE("presolve handles fixed and empty columns") {
  // fixed variable, empty objective-bearing column, and an empty row
  LinearProgram lp;
  const int x = lp.add_variable(2.0, 1.5, 1.5);                // fixed at 1.5
  const int u = lp.add_variable(3.0, 0.0, 10.0);               // empty column, c > 0
  const int v = lp.add_variable(1.0, -4.0, 4.0);
  lp.add_row(RowKind::Equal, 0.0, {});                         // empty consistent row
  lp.add_row(RowKind::GreaterEqual, 2.0, {{x, 1.0}, {v, 1.0}});
  LpSolution sol = solve(lp, 1e-9);
  REQUIRE(sol.optimal());
  CHECK(sol.x[x] == Catch::Approx(1.5));
  CHECK(sol.x[u] == Catch::Approx(0.0));
  CHECK(sol.x[v] == Catch::Approx(0.5).margin(1e-7));
  CHECK(sol.objective == Catch::Approx(2.0 * 1.5 + 0.5).margin(1e-6));
}
