#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "opfvf/icnn.hpp"
#include "opfvf/rng.hpp"

#include "helpers.hpp"

using namespace opfvf;

namespace {

// f(x) = relu(x) - x, built by hand: one hidden unit plus the output skip
IcnnModel relu_minus_x() {
  NetConfig cfg;
  cfg.input_dim = 1;
  cfg.hidden = {1};
  cfg.convex = true;
  IcnnModel m = init(cfg);
  m.h[0] << 1.0;
  m.d[0] << 0.0;
  m.w_out << 1.0;
  m.h_out << -1.0;
  m.d_out = 0.0;
  return m;
}

IcnnModel random_model(int input_dim, std::vector<int> widths, bool convex, std::uint64_t seed) {
  NetConfig cfg;
  cfg.input_dim = input_dim;
  cfg.hidden = std::move(widths);
  cfg.convex = convex;
  cfg.seed = seed;
  return init(cfg);
}

double min_abs_preactivation(const IcnnModel& model, const Eigen::VectorXd& x) {
  // distance to the nearest relu kink, measured in preactivation units
  const auto cache = icnn_detail::forward_pass(model, x);
  double m = std::numeric_limits<double>::infinity();
  for (const auto& pre : cache.pre)
    for (Eigen::Index i = 0; i < pre.size(); ++i) m = std::min(m, std::abs(pre[i]));
  return m;
}

} // namespace

TEST_CASE("init") {
  SECTION("convex models start with nonnegative hidden weights") {
    IcnnModel m = random_model(5, {8, 8}, true, 17);
    CHECK(m.min_convex_weight() >= 0.0);
  }

  SECTION("same seed, identical parameters") {
    IcnnModel a = random_model(3, {4, 4}, true, 5);
    IcnnModel b = random_model(3, {4, 4}, true, 5);
    CHECK(model_to_json(a) == model_to_json(b));
    IcnnModel c = random_model(3, {4, 4}, true, 6);
    CHECK(model_to_json(a) != model_to_json(c));
  }

  SECTION("parameter count formula for input 5, widths [8, 8]") {
    IcnnModel m = random_model(5, {8, 8}, true, 1);
    CHECK(m.parameter_count() == (5 * 8 + 8) + (8 * 8 + 5 * 8 + 8) + (8 + 5 + 1));
  }

  SECTION("dnn baseline with identical cfg has identical parameter count") {
    IcnnModel icnn = random_model(7, {16, 16}, true, 2);
    IcnnModel dnn = random_model(7, {16, 16}, false, 2);
    CHECK(icnn.parameter_count() == dnn.parameter_count());
  }

  SECTION("invalid configs are rejected") {
    NetConfig cfg;
    cfg.input_dim = 0;
    cfg.hidden = {4};
    CHECK_THROWS_AS(init(cfg), std::invalid_argument);
    cfg.input_dim = 2;
    cfg.hidden = {};
    CHECK_THROWS_AS(init(cfg), std::invalid_argument);
  }
}

TEST_CASE("forward") {
  SECTION("hand-built relu(x) - x") {
    IcnnModel m = relu_minus_x();
    CHECK(forward(m, Eigen::VectorXd::Constant(1, -2.0)) == Catch::Approx(2.0));
    CHECK(forward(m, Eigen::VectorXd::Constant(1, 3.0)) == Catch::Approx(0.0));
    CHECK(forward(m, Eigen::VectorXd::Constant(1, 0.0)) == Catch::Approx(0.0));
  }

  SECTION("single relu unit") {
    NetConfig cfg;
    cfg.input_dim = 1;
    cfg.hidden = {1};
    IcnnModel m = init(cfg);
    m.h[0] << 1.0;
    m.d[0] << 0.0;
    m.w_out << 1.0;
    m.h_out << 0.0;
    m.d_out = 0.0;
    CHECK(forward(m, Eigen::VectorXd::Constant(1, -1.0)) == Catch::Approx(0.0));
    CHECK(forward(m, Eigen::VectorXd::Constant(1, 2.0)) == Catch::Approx(2.0));
  }

  SECTION("dimension mismatch") {
    IcnnModel m = relu_minus_x();
    CHECK_THROWS_AS(forward(m, Eigen::VectorXd::Zero(3)), std::invalid_argument);
  }
}

TEST_CASE("convexity: midpoint inequality on random convex models") {
  Rng rng(99);
  IcnnModel m = random_model(4, {12, 12}, true, 31);
  double worst = -1.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd a(4), b(4);
    for (int i = 0; i < 4; ++i) {
      a[i] = rng.uniform(-3.0, 3.0);
      b[i] = rng.uniform(-3.0, 3.0);
    }
    const double fa = forward_normalized(m, a);
    const double fb = forward_normalized(m, b);
    const double fm = forward_normalized(m, 0.5 * (a + b));
    worst = std::max(worst, fm - 0.5 * (fa + fb));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("input_gradient") {
  SECTION("hand-built net: piecewise slopes") {
    IcnnModel m = relu_minus_x();
    CHECK(input_gradient(m, Eigen::VectorXd::Constant(1, 3.0))[0] == Catch::Approx(0.0));
    CHECK(input_gradient(m, Eigen::VectorXd::Constant(1, -2.0))[0] == Catch::Approx(-1.0));
  }

  SECTION("matches central differences at differentiable points") {
    Rng rng(7);
    IcnnModel m = random_model(5, {10, 10}, true, 3);
    int checked = 0;
    while (checked < 100) {
      Eigen::VectorXd x(5);
      for (int i = 0; i < 5; ++i) x[i] = rng.uniform(-2.0, 2.0);
      if (min_abs_preactivation(m, x) < 1e-3) continue;
      const Eigen::VectorXd g = input_gradient(m, x);
      for (int j = 0; j < 5; ++j) {
        const double eps = 1e-6 * (1.0 + std::abs(x[j]));
        Eigen::VectorXd up = x, dn = x;
        up[j] += eps;
        dn[j] -= eps;
        const double fd = (forward(m, up) - forward(m, dn)) / (2.0 * eps);
        CHECK(std::abs(fd - g[j]) <= 1e-5 * (1.0 + std::abs(g[j])));
      }
      ++checked;
    }
  }

  SECTION("subgradient inequality on a convex model") {
    Rng rng(13);
    IcnnModel m = random_model(3, {8, 8}, true, 8);
    double worst = -1.0;
    for (int trial = 0; trial < 1000; ++trial) {
      Eigen::VectorXd a(3), b(3);
      for (int i = 0; i < 3; ++i) {
        a[i] = rng.uniform(-2.0, 2.0);
        b[i] = rng.uniform(-2.0, 2.0);
      }
      const Eigen::VectorXd g = input_gradient(m, a);
      worst = std::max(worst, forward(m, a) + g.dot(b - a) - forward(m, b));
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("param_gradients") {
  Rng rng(21);
  IcnnModel m = random_model(3, {6, 6}, true, 4);
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> targets;
  for (int s = 0; s < 8; ++s) {
    Eigen::VectorXd x(3);
    for (int i = 0; i < 3; ++i) x[i] = rng.uniform(-2.0, 2.0);
    xs.push_back(x);
    targets.push_back(rng.uniform(-1.0, 1.0));
  }
  const LossSpec squared;

  SECTION("zero-loss batch has zero gradients") {
    std::vector<double> exact;
    for (const auto& x : xs) exact.push_back(forward_normalized(m, x));
    double loss = -1.0;
    ParamGradients g = param_gradients(m, xs, exact, squared, &loss);
    CHECK(loss == Catch::Approx(0.0).margin(1e-18));
    for (int k = 0; k < m.depth(); ++k) {
      if (g.w[k].size() > 0) CHECK(g.w[k].cwiseAbs().maxCoeff() == 0.0);
      CHECK(g.h[k].cwiseAbs().maxCoeff() == 0.0);
      CHECK(g.d[k].cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(g.w_out.cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("finite-difference probes of individual parameters") {
    double base_loss = 0.0;
    ParamGradients g = param_gradients(m, xs, targets, squared, &base_loss);
    REQUIRE(base_loss > 0.0);

    auto probe = [&](double* param, double analytic) {
      const double eps = 1e-6;
      const double saved = *param;
      double up, dn;
      *param = saved + eps;
      param_gradients(m, xs, targets, squared, &up);
      *param = saved - eps;
      param_gradients(m, xs, targets, squared, &dn);
      *param = saved;
      const double fd = (up - dn) / (2.0 * eps);
      CHECK(std::abs(fd - analytic) <= 1e-5 * (1.0 + std::abs(analytic)));
    };

    probe(&m.h[0](2, 1), g.h[0](2, 1));
    probe(&m.w[1](3, 2), g.w[1](3, 2));
    probe(&m.d[1][4], g.d[1][4]);
    probe(&m.w_out(0, 1), g.w_out(0, 1));
    probe(&m.h_out(0, 0), g.h_out(0, 0));
    probe(&m.d_out, g.d_out);
  }

  SECTION("gradients are linear in the residual under squared loss") {
    std::vector<double> exact, shifted1, shifted2;
    for (const auto& x : xs) exact.push_back(forward_normalized(m, x));
    for (std::size_t i = 0; i < exact.size(); ++i) {
      shifted1.push_back(exact[i] - 0.25);
      shifted2.push_back(exact[i] - 0.50); // doubles every residual
    }
    ParamGradients g1 = param_gradients(m, xs, shifted1, squared);
    ParamGradients g2 = param_gradients(m, xs, shifted2, squared);
    CHECK(g2.h[0].isApprox(2.0 * g1.h[0], 1e-12));
    CHECK(g2.w_out.isApprox(2.0 * g1.w_out, 1e-12));
    CHECK(g2.d_out == Catch::Approx(2.0 * g1.d_out));
  }

  SECTION("empty batch is rejected") {
    CHECK_THROWS_AS(param_gradients(m, {}, {}, squared), std::invalid_argument);
  }
}

TEST_CASE("save / load") {
  Rng rng(3);
  IcnnModel m = random_model(4, {6, 5}, true, 77);
  // non-trivial scalers survive the round trip
  m.input_scaler.shift = Eigen::VectorXd::LinSpaced(4, -0.5, 1.0);
  m.input_scaler.scale = Eigen::VectorXd::LinSpaced(4, 0.5, 2.0);
  m.out_shift = 12.5;
  m.out_scale = 3.25;

  SECTION("forward agrees bitwise after a round trip") {
    IcnnModel back = model_from_json(model_to_json(m));
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd x(4);
      for (int i = 0; i < 4; ++i) x[i] = rng.uniform(-2.0, 2.0);
      CHECK(forward(m, x) == forward(back, x));
    }
  }

  SECTION("tampered convex weight fails to load") {
    IcnnModel bad = m;
    bad.w[1](0, 0) = -0.1; // violates the attested convexity on load
    CHECK_THROWS_AS(model_from_json(model_to_json(bad)), SchemaError);
  }

  SECTION("version mismatch is an explicit error") {
    std::string text = model_to_json(m);
    auto pos = text.find("\"schema_version\":1");
    text.replace(pos, 18, "\"schema_version\":4");
    CHECK_THROWS_WITH(model_from_json(text), Catch::Matchers::ContainsSubstring("unsupported version"));
  }
}

TEST_CASE("affine scalers never break convexity") {
  Rng rng(55);
  for (int trial = 0; trial < 5; ++trial) {
    IcnnModel m = random_model(3, {8}, true, 100 + trial);
    m.input_scaler.shift = Eigen::VectorXd::NullaryExpr(3, [&](Eigen::Index) { return rng.uniform(-2.0, 2.0); });
    m.input_scaler.scale = Eigen::VectorXd::NullaryExpr(3, [&](Eigen::Index) { return rng.uniform(0.1, 3.0); });
    m.out_shift = rng.uniform(-10.0, 10.0);
    m.out_scale = rng.uniform(0.1, 5.0);

    double worst = -1.0;
    for (int t = 0; t < 200; ++t) {
      Eigen::VectorXd a(3), b(3);
      for (int i = 0; i < 3; ++i) {
        a[i] = rng.uniform(-3.0, 3.0);
        b[i] = rng.uniform(-3.0, 3.0);
      }
      const double fa = forward(m, a);
      const double fb = forward(m, b);
      const double fm = forward(m, 0.5 * (a + b));
      worst = std::max(worst, (fm - 0.5 * (fa + fb)) / m.out_scale);
    }
    CHECK(worst <= 1e-9);
  }
}
