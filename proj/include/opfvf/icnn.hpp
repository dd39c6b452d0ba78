#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "opfvf/jsonio.hpp"
#include "opfvf/rng.hpp"
#include "opfvf/version.hpp"

namespace opfvf {

// Input-convex network with skip connections:
//   x^1 = relu(H^1 x^0 + d^1)
//   x^k = relu(W^k x^{k-1} + H^k x^0 + d^k),   k = 2..K
//   out = W^out x^K + H^out x^0 + d^out        (linear head)
// Convexity in x^0 requires W^k >= 0 entrywise (and W^out >= 0); the skip
// weights H^k are unrestricted. The same structure with unrestricted W is
// the DNN baseline. Affine input scaling and positive-affine output scaling
// preserve convexity.

struct NetConfig {
  int input_dim = 0;
  std::vector<int> hidden;
  bool convex = true;
  std::uint64_t seed = 0;
  bool output_skip = true;

  void check_valid() const {
    if (input_dim <= 0) throw std::invalid_argument("net config: input_dim must be positive");
    if (hidden.empty()) throw std::invalid_argument("net config: need at least one hidden layer");
    for (int w : hidden)
      if (w <= 0) throw std::invalid_argument("net config: hidden widths must be positive");
  }
};

struct Scaler {
  Eigen::VectorXd shift;
  Eigen::VectorXd scale; // entrywise positive

  void check_valid() const {
    if (shift.size() != scale.size()) throw std::invalid_argument("scaler: size mismatch");
    for (Eigen::Index i = 0; i < scale.size(); ++i)
      if (!(scale[i] > 0.0)) throw std::invalid_argument("scaler: scale entries must be positive");
  }
};

struct IcnnModel {
  NetConfig cfg;
  std::vector<Eigen::MatrixXd> w; // w[0] is empty (layer 1 has no hidden input)
  std::vector<Eigen::MatrixXd> h; // h[k]: hidden[k] x input_dim
  std::vector<Eigen::VectorXd> d;
  Eigen::RowVectorXd w_out;       // 1 x hidden.back()
  Eigen::RowVectorXd h_out;       // 1 x input_dim, zero rows when !output_skip
  double d_out = 0.0;
  Scaler input_scaler;
  double out_shift = 0.0;
  double out_scale = 1.0;

  int input_dim() const { return cfg.input_dim; }
  int depth() const { return static_cast<int>(cfg.hidden.size()); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (int k = 0; k < depth(); ++k)
      n += static_cast<std::size_t>(w[k].size() + h[k].size() + d[k].size());
    n += static_cast<std::size_t>(w_out.size() + h_out.size()) + 1;
    return n;
  }

  // smallest entry across all convexity-constrained weights
  double min_convex_weight() const {
    double m = w_out.size() > 0 ? w_out.minCoeff() : 0.0;
    for (int k = 1; k < depth(); ++k)
      if (w[k].size() > 0) m = std::min(m, w[k].minCoeff());
    return m;
  }

  void check_valid() const {
    cfg.check_valid();
    const int layers = depth();
    if (static_cast<int>(w.size()) != layers || static_cast<int>(h.size()) != layers ||
        static_cast<int>(d.size()) != layers)
      throw std::invalid_argument("model: layer count mismatch");
    for (int k = 0; k < layers; ++k) {
      const int rows = cfg.hidden[k];
      if (h[k].rows() != rows || h[k].cols() != cfg.input_dim || d[k].size() != rows)
        throw std::invalid_argument("model: bad layer shape");
      if (k == 0) {
        if (w[k].size() != 0) throw std::invalid_argument("model: layer 1 must not carry W");
      } else if (w[k].rows() != rows || w[k].cols() != cfg.hidden[k - 1]) {
        throw std::invalid_argument("model: bad W shape");
      }
    }
    if (w_out.cols() != cfg.hidden.back()) throw std::invalid_argument("model: bad output shape");
    if (cfg.output_skip && h_out.cols() != cfg.input_dim)
      throw std::invalid_argument("model: bad output skip shape");
    if (!cfg.output_skip && h_out.size() != 0)
      throw std::invalid_argument("model: unexpected output skip");
    if (input_scaler.shift.size() != cfg.input_dim)
      throw std::invalid_argument("model: scaler dimension mismatch");
    input_scaler.check_valid();
    if (!(out_scale > 0.0)) throw std::invalid_argument("model: output scale must be positive");
    if (cfg.convex && min_convex_weight() < 0.0)
      throw std::invalid_argument("model: convex flag with negative hidden weights");
  }
};

// Scaled uniform fan-in initialization; the convexity-constrained weights
// take the absolute value of the same draws.
inline IcnnModel init(const NetConfig& cfg) {
  cfg.check_valid();
  IcnnModel model;
  model.cfg = cfg;
  Rng rng(cfg.seed ^ 0x1c99a5f2d7b4e681ULL);

  auto fill = [&rng](Eigen::MatrixXd& m, int rows, int cols, double bound, bool nonneg) {
    m.resize(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const double v = rng.uniform(-bound, bound);
        m(r, c) = nonneg ? std::abs(v) : v;
      }
  };

  const int layers = static_cast<int>(cfg.hidden.size());
  model.w.resize(layers);
  model.h.resize(layers);
  model.d.resize(layers);
  for (int k = 0; k < layers; ++k) {
    const int fan_in = (k == 0 ? 0 : cfg.hidden[k - 1]) + cfg.input_dim;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    if (k > 0) fill(model.w[k], cfg.hidden[k], cfg.hidden[k - 1], bound, cfg.convex);
    fill(model.h[k], cfg.hidden[k], cfg.input_dim, bound, false);
    Eigen::MatrixXd bias;
    fill(bias, cfg.hidden[k], 1, bound, false);
    model.d[k] = bias.col(0);
  }

  const int out_fan = cfg.hidden.back() + (cfg.output_skip ? cfg.input_dim : 0);
  const double bound = 1.0 / std::sqrt(static_cast<double>(out_fan));
  Eigen::MatrixXd tmp;
  fill(tmp, 1, cfg.hidden.back(), bound, cfg.convex);
  model.w_out = tmp.row(0);
  if (cfg.output_skip) {
    fill(tmp, 1, cfg.input_dim, bound, false);
    model.h_out = tmp.row(0);
  } else {
    model.h_out.resize(0);
  }
  model.d_out = rng.uniform(-bound, bound);

  model.input_scaler.shift = Eigen::VectorXd::Zero(cfg.input_dim);
  model.input_scaler.scale = Eigen::VectorXd::Ones(cfg.input_dim);
  return model;
}

namespace icnn_detail {

struct ForwardCache {
  Eigen::VectorXd x0;                    // scaled input
  std::vector<Eigen::VectorXd> pre;      // preactivations per layer
  std::vector<Eigen::VectorXd> act;      // activations per layer
  double out_norm = 0.0;
};

inline ForwardCache forward_pass(const IcnnModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.cfg.input_dim)
    throw std::invalid_argument("forward: input dimension mismatch");
  ForwardCache cache;
  cache.x0 = (x - model.input_scaler.shift).cwiseQuotient(model.input_scaler.scale);
  const int layers = model.depth();
  cache.pre.resize(layers);
  cache.act.resize(layers);
  for (int k = 0; k < layers; ++k) {
    Eigen::VectorXd a = model.h[k] * cache.x0 + model.d[k];
    if (k > 0) a += model.w[k] * cache.act[k - 1];
    cache.pre[k] = a;
    cache.act[k] = a.cwiseMax(0.0); // relu, with relu'(0) treated as 0 downstream
  }
  cache.out_norm = model.w_out.dot(cache.act[layers - 1]) + model.d_out;
  if (model.cfg.output_skip) cache.out_norm += model.h_out.dot(cache.x0);
  return cache;
}

} // namespace icnn_detail

inline double forward_normalized(const IcnnModel& model, const Eigen::VectorXd& x) {
  return icnn_detail::forward_pass(model, x).out_norm;
}

inline double forward(const IcnnModel& model, const Eigen::VectorXd& x) {
  return forward_normalized(model, x) * model.out_scale + model.out_shift;
}

inline double forward(const IcnnModel& model, const std::vector<double>& x) {
  return forward(model, Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<long>(x.size())));
}

// Reverse-mode gradient of forward() with respect to the raw input. With
// relu'(0) := 0 this is a subgradient everywhere for convex models.
inline Eigen::VectorXd input_gradient(const IcnnModel& model, const Eigen::VectorXd& x) {
  using namespace icnn_detail;
  const ForwardCache cache = forward_pass(model, x);
  const int layers = model.depth();

  Eigen::VectorXd grad_x0 = Eigen::VectorXd::Zero(model.cfg.input_dim);
  if (model.cfg.output_skip) grad_x0 = model.h_out.transpose();

  Eigen::VectorXd delta = model.w_out.transpose(); // d out / d act[last]
  for (int k = layers - 1; k >= 0; --k) {
    // through the relu
    for (Eigen::Index i = 0; i < delta.size(); ++i)
      if (!(cache.pre[k][i] > 0.0)) delta[i] = 0.0;
    grad_x0 += model.h[k].transpose() * delta;
    if (k > 0) delta = model.w[k].transpose() * delta;
  }

  return model.out_scale * grad_x0.cwiseQuotient(model.input_scaler.scale);
}

inline std::vector<double> input_gradient(const IcnnModel& model, const std::vector<double>& x) {
  Eigen::VectorXd g = input_gradient(
      model, Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<long>(x.size())));
  return std::vector<double>(g.data(), g.data() + g.size());
}

// asymmetric squared loss on the residual r = prediction - target;
// kappa_under = kappa_over = 1 recovers the plain squared loss
inline double asymmetric_loss(double residual, double kappa_under, double kappa_over) {
  if (kappa_under < 0.0 || kappa_over < 0.0)
    throw std::invalid_argument("asymmetric_loss: kappa must be >= 0");
  const double k = residual > 0.0 ? kappa_over : kappa_under;
  return k * residual * residual;
}

struct LossSpec {
  double kappa_under = 1.0;
  double kappa_over = 1.0;

  double value(double residual) const { return asymmetric_loss(residual, kappa_under, kappa_over); }
  double derivative(double residual) const {
    return 2.0 * (residual > 0.0 ? kappa_over : kappa_under) * residual;
  }
};

struct ParamGradients {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::MatrixXd> h;
  std::vector<Eigen::VectorXd> d;
  Eigen::RowVectorXd w_out;
  Eigen::RowVectorXd h_out;
  double d_out = 0.0;

  static ParamGradients zeros_like(const IcnnModel& model) {
    ParamGradients g;
    const int layers = model.depth();
    g.w.resize(layers);
    g.h.resize(layers);
    g.d.resize(layers);
    for (int k = 0; k < layers; ++k) {
      g.w[k] = Eigen::MatrixXd::Zero(model.w[k].rows(), model.w[k].cols());
      g.h[k] = Eigen::MatrixXd::Zero(model.h[k].rows(), model.h[k].cols());
      g.d[k] = Eigen::VectorXd::Zero(model.d[k].size());
    }
    g.w_out = Eigen::RowVectorXd::Zero(model.w_out.cols());
    g.h_out = Eigen::RowVectorXd::Zero(model.h_out.cols());
    return g;
  }
};

// Exact reverse-mode gradients of the mean loss over a batch, taken on the
// normalized output scale. Targets are normalized z values.
inline ParamGradients param_gradients(const IcnnModel& model,
                                      const std::vector<Eigen::VectorXd>& inputs,
                                      const std::vector<double>& targets_norm,
                                      const LossSpec& loss, double* batch_loss = nullptr) {
  using namespace icnn_detail;
  if (inputs.empty()) throw std::invalid_argument("param_gradients: empty batch");
  if (inputs.size() != targets_norm.size())
    throw std::invalid_argument("param_gradients: batch size mismatch");

  ParamGradients grads = ParamGradients::zeros_like(model);
  const int layers = model.depth();
  const double inv_n = 1.0 / static_cast<double>(inputs.size());
  double total_loss = 0.0;

  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const ForwardCache cache = forward_pass(model, inputs[s]);
    const double residual = cache.out_norm - targets_norm[s];
    total_loss += loss.value(residual) * inv_n;
    const double g_out = loss.derivative(residual) * inv_n;

    grads.w_out += g_out * cache.act[layers - 1].transpose();
    if (model.cfg.output_skip) grads.h_out += g_out * cache.x0.transpose();
    grads.d_out += g_out;

    Eigen::VectorXd delta = g_out * model.w_out.transpose();
    for (int k = layers - 1; k >= 0; --k) {
      for (Eigen::Index i = 0; i < delta.size(); ++i)
        if (!(cache.pre[k][i] > 0.0)) delta[i] = 0.0;
      if (k > 0) grads.w[k] += delta * cache.act[k - 1].transpose();
      grads.h[k] += delta * cache.x0.transpose();
      grads.d[k] += delta;
      if (k > 0) delta = model.w[k].transpose() * delta;
    }
  }

  if (batch_loss) *batch_loss = total_loss;
  return grads;
}

// --- checkpoint persistence ---

inline std::string model_to_json(const IcnnModel& model) {
  JsonWriter w;
  w.begin_object();
  w.kv("schema_version", kCheckpointSchemaVersion);
  w.key("cfg");
  w.begin_object();
  w.kv("input_dim", model.cfg.input_dim);
  w.array("hidden", model.cfg.hidden);
  w.kv("convex", model.cfg.convex);
  w.kv("seed", model.cfg.seed);
  w.kv("output_skip", model.cfg.output_skip);
  w.end_object();
  w.key("input_scaler");
  w.begin_object();
  w.array("shift", std::vector<double>(model.input_scaler.shift.data(),
                                       model.input_scaler.shift.data() +
                                           model.input_scaler.shift.size()));
  w.array("scale", std::vector<double>(model.input_scaler.scale.data(),
                                       model.input_scaler.scale.data() +
                                           model.input_scaler.scale.size()));
  w.end_object();
  w.key("output_scaler");
  w.begin_object();
  w.kv("shift", model.out_shift);
  w.kv("scale", model.out_scale);
  w.end_object();
  auto matrix_rows = [&w](const Eigen::MatrixXd& m) {
    w.begin_array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      w.begin_array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) w.value(m(r, c));
      w.end_array();
    }
    w.end_array();
  };
  w.key("layers");
  w.begin_array();
  for (int k = 0; k < model.depth(); ++k) {
    w.begin_object();
    w.key("w");
    matrix_rows(model.w[k]);
    w.key("h");
    matrix_rows(model.h[k]);
    w.array("d", std::vector<double>(model.d[k].data(), model.d[k].data() + model.d[k].size()));
    w.end_object();
  }
  w.end_array();
  w.array("w_out",
          std::vector<double>(model.w_out.data(), model.w_out.data() + model.w_out.size()));
  w.array("h_out",
          std::vector<double>(model.h_out.data(), model.h_out.data() + model.h_out.size()));
  w.kv("d_out", model.d_out);
  w.kv("convexity_attested", model.cfg.convex);
  w.end_object();
  return w.str() + "\n";
}

inline void save_model(const IcnnModel& model, const std::string& path) {
  write_text_file(path, model_to_json(model));
}

inline IcnnModel model_from_json(const std::string& text) {
  const auto j = parse_json(text, "checkpoint");
  const std::string path = "checkpoint";
  const auto version = require_int(j, "schema_version", path);
  if (version != kCheckpointSchemaVersion)
    throw SchemaError("checkpoint.schema_version: unsupported version " + std::to_string(version));

  IcnnModel model;
  const auto& cfg = require_field(j, "cfg", path);
  model.cfg.input_dim = static_cast<int>(require_int(cfg, "input_dim", path + ".cfg"));
  for (double v : require_double_array(cfg, "hidden", path + ".cfg"))
    model.cfg.hidden.push_back(static_cast<int>(v));
  model.cfg.convex = require_bool(cfg, "convex", path + ".cfg");
  model.cfg.seed = static_cast<std::uint64_t>(require_int(cfg, "seed", path + ".cfg"));
  model.cfg.output_skip = require_bool(cfg, "output_skip", path + ".cfg");

  const auto& iscaler = require_field(j, "input_scaler", path);
  auto shift = require_double_array(iscaler, "shift", path + ".input_scaler");
  auto scale = require_double_array(iscaler, "scale", path + ".input_scaler");
  model.input_scaler.shift = Eigen::Map<Eigen::VectorXd>(shift.data(), static_cast<long>(shift.size()));
  model.input_scaler.scale = Eigen::Map<Eigen::VectorXd>(scale.data(), static_cast<long>(scale.size()));
  const auto& oscaler = require_field(j, "output_scaler", path);
  model.out_shift = require_number(oscaler, "shift", path + ".output_scaler");
  model.out_scale = require_number(oscaler, "scale", path + ".output_scaler");

  auto read_matrix = [](const nlohmann::ordered_json& arr, const std::string& where) {
    if (!arr.is_array()) throw SchemaError(where + ": expected array");
    const Eigen::Index rows = static_cast<Eigen::Index>(arr.size());
    Eigen::Index cols = -1;
    Eigen::MatrixXd m;
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (!arr[r].is_array()) throw SchemaError(where + ": expected array of rows");
      if (cols < 0) {
        cols = static_cast<Eigen::Index>(arr[r].size());
        m.resize(rows, cols);
      }
      if (static_cast<Eigen::Index>(arr[r].size()) != cols)
        throw SchemaError(where + ": ragged rows");
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = arr[r][c].get<double>();
    }
    if (rows == 0) m.resize(0, 0);
    return m;
  };

  const auto& layers = require_field(j, "layers", path);
  if (!layers.is_array()) throw SchemaError("checkpoint.layers: expected array");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const std::string lp = path + ".layers[" + std::to_string(k) + "]";
    model.w.push_back(read_matrix(require_field(layers[k], "w", lp), lp + ".w"));
    model.h.push_back(read_matrix(require_field(layers[k], "h", lp), lp + ".h"));
    auto dvals = require_double_array(layers[k], "d", lp);
    model.d.push_back(Eigen::Map<Eigen::VectorXd>(dvals.data(), static_cast<long>(dvals.size())));
  }

  auto w_out = require_double_array(j, "w_out", path);
  model.w_out = Eigen::Map<Eigen::RowVectorXd>(w_out.data(), static_cast<long>(w_out.size()));
  auto h_out = require_double_array(j, "h_out", path);
  model.h_out = Eigen::Map<Eigen::RowVectorXd>(h_out.data(), static_cast<long>(h_out.size()));
  model.d_out = require_number(j, "d_out", path);

  try {
    model.check_valid();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  }
  return model;
}

inline IcnnModel load_model(const std::string& path) {
  return model_from_json(read_text_file(path));
}

} // namespace opfvf
