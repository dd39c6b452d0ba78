#include <catch2/catch_amalgamated.hpp>

#include "opfvf/ac_opf.hpp"
#include "opfvf/dc_opf.hpp"
#include "opfvf/rng.hpp"
#include "opfvf/soc_opf.hpp"
#include "opfvf/vertex_enum.hpp"

#include "helpers.hpp"

using namespace opfvf;

namespace {

Branch random_branch(Rng& rng) {
  Branch br;
  br.from_bus = 1;
  br.to_bus = 2;
  br.g = rng.uniform(0.0, 5.0);
  br.b = rng.uniform(-15.0, 0.0);
  br.g_fr = rng.uniform(-0.1, 0.1);
  br.b_fr = rng.uniform(-0.3, 0.3);
  br.g_to = rng.uniform(-0.1, 0.1);
  br.b_to = rng.uniform(-0.3, 0.3);
  return br;
}

} // namespace

TEST_CASE("build_dc structure") {
  SECTION("case14 variable count is gens + buses + branches") {
    auto net = testutil::load_case("case14.m");
    DcOpfProblem prob = build_dc(net, net.pd_ref);
    CHECK(prob.lp.num_vars() == static_cast<int>(net.num_generators() + net.num_buses() +
                                                 net.num_branches()));
    // one balance row per bus, one Ohm row per branch, slack pin, angle rows
    int angle_rows = 0;
    for (auto [lo_row, hi_row] : prob.angle_rows) angle_rows += (lo_row >= 0) + (hi_row >= 0);
    CHECK(prob.lp.num_rows() ==
          static_cast<int>(net.num_buses() + net.num_branches()) + 1 + angle_rows);
    CHECK(angle_rows == 4); // two angle-limited branches in the fixture
  }

  SECTION("load vector length is checked") {
    auto net = testutil::two_bus_toy();
    CHECK_THROWS_AS(build_dc(net, {1.0}), std::invalid_argument);
  }
}

TEST_CASE("dc feasibility transfer: total generation equals total load") {
  auto net = testutil::load_case("case14.m");
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> pd = net.pd_ref;
    for (auto& v : pd) v *= rng.uniform(0.8, 1.06);
    DcOpfProblem prob = build_dc(net, pd);
    LpSolution sol = solve(prob.lp, 1e-9);
    REQUIRE(sol.optimal());
    double total_pg = 0.0, total_pd = 0.0;
    for (int col : prob.gen_col) total_pg += sol.x[col];
    for (double v : pd) total_pd += v;
    CHECK(total_pg == Catch::Approx(total_pd).margin(1e-7));
  }
}

TEST_CASE("soc branch coefficients") {
  SECTION("pure series conductance") {
    Branch br;
    br.g = 1.0;
    br.b = 0.0;
    auto gamma = soc_branch_coefficients(br);
    CHECK(gamma.fwd.p_w == Catch::Approx(1.0));
    CHECK(gamma.fwd.p_wr == Catch::Approx(-1.0));
    CHECK(gamma.fwd.p_wi == Catch::Approx(0.0));
  }

  SECTION("zero admittance gives all-zero coefficients") {
    Branch br;
    auto gamma = soc_branch_coefficients(br);
    for (double v : {gamma.fwd.p_w, gamma.fwd.p_wr, gamma.fwd.p_wi, gamma.fwd.q_w, gamma.fwd.q_wr,
                     gamma.fwd.q_wi}) {
      CHECK(v == 0.0);
    }
  }

  SECTION("gamma form equals the complex flow equations at random points") {
    Rng rng(20240811);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      Branch br = random_branch(rng);
      const double vi = rng.uniform(0.9, 1.1);
      const double vj = rng.uniform(0.9, 1.1);
      const double ti = rng.uniform(-0.5, 0.5);
      const double tj = rng.uniform(-0.5, 0.5);

      const AcBranchFlows direct = ac_branch_flow(br, vi, ti, vj, tj);

      const double w_i = vi * vi;
      const double w_j = vj * vj;
      const double wr = vi * vj * std::cos(tj - ti);
      const double wi = vi * vj * std::sin(tj - ti);
      auto gamma = soc_branch_coefficients(br);
      auto [p_fr, q_fr] = soc_flow(gamma.fwd, w_i, wr, wi);
      auto [p_to, q_to] = soc_flow(gamma.rev, w_j, wr, wi);

      worst = std::max({worst, std::abs(p_fr - direct.p_fr), std::abs(q_fr - direct.q_fr),
                        std::abs(p_to - direct.p_to), std::abs(q_to - direct.q_to)});
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("build_soc structure") {
  auto net = testutil::load_case("case14.m");
  OpfDescription desc = build_soc(net, net.pd_ref, net.qd_ref);

  SECTION("cone counts: one Jabr per branch, two thermal per branch") {
    CHECK(desc.count_kind("jabr") == net.num_branches());
    CHECK(desc.count_kind("thermal_soc") == 2 * net.num_branches());
    CHECK(desc.count_kind("balance_p") == net.num_buses());
    CHECK(desc.count_kind("balance_q") == net.num_buses());
    CHECK(desc.count_kind("ohm_p_fr") == net.num_branches());
    CHECK(desc.count_kind("ohm_q_to") == net.num_branches());
  }

  SECTION("every ohm block carries the three named coefficients") {
    for (const auto& con : desc.constraints) {
      if (con.kind.rfind("ohm_", 0) != 0) continue;
      REQUIRE(con.coefficients.size() == 3);
      CHECK(con.coefficients[0].first == "w");
      CHECK(con.coefficients[1].first == "wr");
      CHECK(con.coefficients[2].first == "wi");
    }
  }

  SECTION("lossless branch: active forward coefficients on w and wr vanish") {
    auto toy = testutil::two_bus_toy(); // g = 0, no line charging
    OpfDescription d2 = build_soc(toy, toy.pd_ref, toy.qd_ref);
    for (const auto& con : d2.constraints) {
      if (con.kind != "ohm_p_fr") continue;
      CHECK(con.coefficients[0].second == 0.0); // gamma^p
      CHECK(con.coefficients[1].second == 0.0); // gamma^{p,r}
    }
  }

  SECTION("flat voltage bounds give unit w bounds") {
    auto toy = testutil::two_bus_toy();
    for (auto& bus : toy.buses) bus.vmin = bus.vmax = 1.0;
    OpfDescription d2 = build_soc(toy, toy.pd_ref, toy.qd_ref);
    for (const auto& group : d2.variables) {
      if (group.kind != "w") continue;
      for (std::size_t i = 0; i < group.count; ++i) {
        CHECK(group.lower[i] == 1.0);
        CHECK(group.upper[i] == 1.0);
      }
    }
  }

  SECTION("load vector length is checked") {
    CHECK_THROWS_AS(build_soc(net, {1.0}, net.qd_ref), std::invalid_argument);
  }
}

TEST_CASE("build_ac structure and flat-point feasibility") {
  SECTION("two-bus toy constraint counts") {
    auto toy = testutil::two_bus_toy();
    OpfDescription desc = build_ac(toy, toy.pd_ref, toy.qd_ref);
    CHECK(desc.count_kind("balance_p") == 2);
    CHECK(desc.count_kind("balance_q") == 2);
    CHECK(desc.count_kind("ohm_fr") == 1);
    CHECK(desc.count_kind("ohm_to") == 1);
    CHECK(desc.count_kind("thermal_ac") == 2);
    CHECK(desc.count_kind("slack_ref") == 1);
  }

  SECTION("zero demand, zero shunts: the flat profile is feasible at cost 0") {
    auto toy = testutil::two_bus_toy();
    toy.pd_ref = {0.0, 0.0};
    toy.qd_ref = {0.0, 0.0};
    OpfDescription desc = build_ac(toy, toy.pd_ref, toy.qd_ref);
    AcPoint flat;
    flat.v = {1.0, 1.0};
    flat.theta = {0.0, 0.0};
    flat.pg = {0.0};
    flat.qg = {0.0};
    CHECK(ac_max_violation(desc, toy, flat) <= 1e-12);
    double cost = 0.0;
    for (std::size_t g = 0; g < desc.objective.size(); ++g) cost += desc.objective[g] * flat.pg[g];
    CHECK(cost == 0.0);
  }
}

TEST_CASE("formulation export") {
  auto net = testutil::load_case("case14.m");

  SECTION("deterministic bytes") {
    OpfDescription desc = build_soc(net, net.pd_ref, net.qd_ref);
    CHECK(export_formulation(desc) == export_formulation(desc));
  }

  SECTION("soc export declares the w / wr / wi variable groups") {
    OpfDescription desc = build_soc(net, net.pd_ref, net.qd_ref);
    const std::string text = export_formulation(desc);
    auto j = parse_json(text, "export");
    bool w_seen = false, wr_seen = false, wi_seen = false;
    for (const auto& group : j["variables"]) {
      if (group["kind"] == "w") {
        w_seen = true;
        CHECK(group["count"] == net.num_buses());
      }
      if (group["kind"] == "wr") {
        wr_seen = true;
        CHECK(group["count"] == net.num_branches());
      }
      if (group["kind"] == "wi") {
        wi_seen = true;
        CHECK(group["count"] == net.num_branches());
      }
    }
    CHECK(w_seen);
    CHECK(wr_seen);
    CHECK(wi_seen);
  }

  SECTION("round trip reproduces the description exactly") {
    for (const auto& desc : {build_soc(net, net.pd_ref, net.qd_ref),
                             build_ac(net, net.pd_ref, net.qd_ref),
                             build_dc_description(net, net.pd_ref)}) {
      OpfDescription back = import_formulation(export_formulation(desc));
      CHECK(back == desc);
      // re-export is byte-identical
      CHECK(export_formulation(back) == export_formulation(desc));
    }
  }

  SECTION("dc export dimensions match the solvable problem") {
    OpfDescription desc = build_dc_description(net, net.pd_ref);
    DcOpfProblem prob = build_dc(net, net.pd_ref);
    std::size_t n_vars = 0;
    for (const auto& group : desc.variables) n_vars += group.count;
    CHECK(n_vars == static_cast<std::size_t>(prob.lp.num_vars()));
    CHECK(desc.count_kind("balance") == net.num_buses());
    CHECK(desc.count_kind("ohm_dc") == net.num_branches());
    CHECK(desc.objective.size() == net.num_generators());
  }

  SECTION("unsupported schema version is rejected") {
    OpfDescription desc = build_dc_description(net, net.pd_ref);
    std::string text = export_formulation(desc);
    auto pos = text.find("\"schema_version\":1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 18, "\"schema_version\":9");
    CHECK_THROWS_AS(import_formulation(text), SchemaError);
  }
}

TEST_CASE("dc lp lower-bounds brute-force dispatch enumeration") {
  // lossless congested toy: any grid dispatch meeting load and the line
  // limit costs at least the LP optimum
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

  double best_grid = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 20; ++i) {
    const double p1 = 0.1 * i;
    const double p2 = net.pd_ref[1] - p1; // balance forces the remainder
    if (p2 < 0.0 || p2 > 2.0 || p1 > 2.0) continue;
    if (p1 > 0.5) continue; // line limit binds every unit sent to bus 2
    best_grid = std::min(best_grid, 10.0 * p1 + 50.0 * p2);
  }
  REQUIRE(std::isfinite(best_grid));
  CHECK(sol.objective <= best_grid + 1e-7);
  CHECK(sol.objective == Catch::Approx(30.0).margin(1e-6));
  CHECK(best_grid == Catch::Approx(30.0).margin(1e-12));
}
