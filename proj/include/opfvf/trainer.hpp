#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "opfvf/dataset.hpp"
#include "opfvf/evalkit.hpp"
#include "opfvf/icnn.hpp"
#include "opfvf/rng.hpp"

namespace opfvf {

// Projected gradient training for ICNNs: after every optimizer update, the
// convexity-constrained weights are projected entrywise onto [0, inf). A
// gradient-masking mode (zero out gradient components that would push an
// already-zero weight negative) is available for comparison; projection is
// the default. DNN baselines skip both.

enum class Optimizer { SgdMomentum, AdaptiveMoments };
enum class ProjectionMode { ProjectWeights, MaskGradients };

struct TrainConfig {
  Optimizer optimizer = Optimizer::AdaptiveMoments;
  double learning_rate = 1e-3;
  double momentum = 0.9;   // sgd-momentum
  double beta1 = 0.9;      // adaptive moments
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 32;
  int max_epochs = 200;
  double lr_decay = 1.0;   // exponential factor per epoch
  int plateau_patience = 10;
  double plateau_factor = 0.5;
  int early_stop_patience = 25;
  LossSpec loss;
  std::uint64_t seed = 0;
  ProjectionMode projection = ProjectionMode::ProjectWeights;

  void check_valid() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
    if (!(lr_decay > 0.0) || lr_decay > 1.0)
      throw std::invalid_argument("train: lr_decay must be in (0, 1]");
    if (!(plateau_factor > 0.0) || plateau_factor > 1.0)
      throw std::invalid_argument("train: plateau_factor must be in (0, 1]");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (max_epochs < 0) throw std::invalid_argument("train: max_epochs must be >= 0");
    if (plateau_patience < 1 || early_stop_patience < 1)
      throw std::invalid_argument("train: patience must be >= 1");
    if (loss.kappa_under < 0.0 || loss.kappa_over < 0.0)
      throw std::invalid_argument("train: kappa must be >= 0");
  }
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0; // running mean of batch losses
  double valid_loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_valid_loss = std::numeric_limits<double>::infinity();
  bool diverged = false;
  std::string stop_reason;

  std::string csv() const {
    std::string out = "epoch,train_loss,valid_loss,lr,seconds\n";
    for (const auto& e : epochs)
      out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
             format_double(e.valid_loss) + "," + format_double(e.lr) + "," +
             format_double(e.seconds) + "\n";
    return out;
  }
};

namespace train_detail {

// flat parameter vector <-> model; the mask marks convexity-constrained
// entries (all W with k >= 2 plus the output weights)
struct FlatParams {
  Eigen::VectorXd theta;
  std::vector<char> convex_mask;
};

inline Eigen::Index flat_size(const IcnnModel& m) {
  Eigen::Index n = 0;
  for (int k = 0; k < m.depth(); ++k) n += m.w[k].size() + m.h[k].size() + m.d[k].size();
  return n + m.w_out.size() + m.h_out.size() + 1;
}

inline FlatParams pack(const IcnnModel& m) {
  FlatParams fp;
  fp.theta.resize(flat_size(m));
  fp.convex_mask.assign(static_cast<std::size_t>(fp.theta.size()), 0);
  Eigen::Index at = 0;
  auto put = [&](const double* data, Eigen::Index n, bool convex) {
    for (Eigen::Index i = 0; i < n; ++i) {
      fp.theta[at] = data[i];
      fp.convex_mask[static_cast<std::size_t>(at)] = convex ? 1 : 0;
      ++at;
    }
  };
  for (int k = 0; k < m.depth(); ++k) {
    put(m.w[k].data(), m.w[k].size(), m.cfg.convex);
    put(m.h[k].data(), m.h[k].size(), false);
    put(m.d[k].data(), m.d[k].size(), false);
  }
  put(m.w_out.data(), m.w_out.size(), m.cfg.convex);
  put(m.h_out.data(), m.h_out.size(), false);
  put(&m.d_out, 1, false);
  return fp;
}

inline void unpack(const Eigen::VectorXd& theta, IcnnModel& m) {
  Eigen::Index at = 0;
  auto take = [&](double* data, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) data[i] = theta[at++];
  };
  for (int k = 0; k < m.depth(); ++k) {
    take(m.w[k].data(), m.w[k].size());
    take(m.h[k].data(), m.h[k].size());
    take(m.d[k].data(), m.d[k].size());
  }
  take(m.w_out.data(), m.w_out.size());
  take(m.h_out.data(), m.h_out.size());
  take(&m.d_out, 1);
}

inline Eigen::VectorXd pack_grads(const IcnnModel& m, const ParamGradients& g) {
  Eigen::VectorXd out(flat_size(m));
  Eigen::Index at = 0;
  auto put = [&](const double* data, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) out[at++] = data[i];
  };
  for (int k = 0; k < m.depth(); ++k) {
    put(g.w[k].data(), g.w[k].size());
    put(g.h[k].data(), g.h[k].size());
    put(g.d[k].data(), g.d[k].size());
  }
  put(g.w_out.data(), g.w_out.size());
  put(g.h_out.data(), g.h_out.size());
  put(&g.d_out, 1);
  return out;
}

inline double mean_loss(const IcnnModel& model, const std::vector<Eigen::VectorXd>& xs,
                        const std::vector<double>& targets, const LossSpec& loss) {
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    total += loss.value(forward_normalized(model, xs[i]) - targets[i]);
  return total / static_cast<double>(xs.size());
}

} // namespace train_detail

// Standardization from the training split: zero-mean/unit-std inputs, and a
// positive-affine output map. Both preserve convexity in the raw input.
inline void fit_scalers(IcnnModel& model, const std::vector<Eigen::VectorXd>& inputs,
                        const std::vector<double>& targets) {
  const int dim = model.cfg.input_dim;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& x : inputs) mean += x;
  mean /= static_cast<double>(inputs.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
  for (const auto& x : inputs) var += (x - mean).cwiseAbs2();
  var /= static_cast<double>(inputs.size());

  model.input_scaler.shift = mean;
  model.input_scaler.scale = var.cwiseSqrt();
  for (Eigen::Index j = 0; j < model.input_scaler.scale.size(); ++j) {
    // constant columns (zero-load buses) get unit scale; a tiny floor there
    // would blow up gradients through the scaler
    if (model.input_scaler.scale[j] < 1e-10) model.input_scaler.scale[j] = 1.0;
  }

  double zmean = 0.0;
  for (double z : targets) zmean += z;
  zmean /= static_cast<double>(targets.size());
  double zvar = 0.0;
  for (double z : targets) zvar += (z - zmean) * (z - zmean);
  zvar /= static_cast<double>(targets.size());
  model.out_shift = zmean;
  model.out_scale = std::max(std::sqrt(zvar), 1e-8);
}

struct TrainOutput {
  IcnnModel model;
  TrainReport report;
};

inline TrainOutput train(const IcnnModel& initial, const Dataset& ds, const TrainConfig& cfg) {
  using namespace train_detail;
  cfg.check_valid();

  TrainOutput out;
  out.model = initial;
  if (cfg.max_epochs == 0) {
    out.report.stop_reason = "zero-epochs";
    return out;
  }

  std::vector<Eigen::VectorXd> train_x, valid_x;
  std::vector<double> train_z, valid_z;
  for (const auto& s : ds.samples) {
    if (s.split != Split::Train && s.split != Split::Valid) continue;
    const auto b = s.input();
    if (static_cast<int>(b.size()) != initial.cfg.input_dim)
      throw std::invalid_argument("train: model input dim does not match the dataset");
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<long>(b.size()));
    if (s.split == Split::Train) {
      train_x.push_back(std::move(x));
      train_z.push_back(s.z);
    } else {
      valid_x.push_back(std::move(x));
      valid_z.push_back(s.z);
    }
  }
  if (train_x.empty()) throw std::invalid_argument("train: empty train split");
  if (valid_x.empty()) throw std::invalid_argument("train: empty validation split");

  IcnnModel model = initial;
  fit_scalers(model, train_x, train_z);
  auto normalize = [&model](const std::vector<double>& zs) {
    std::vector<double> out_z;
    out_z.reserve(zs.size());
    for (double z : zs) out_z.push_back((z - model.out_shift) / model.out_scale);
    return out_z;
  };
  const std::vector<double> train_t = normalize(train_z);
  const std::vector<double> valid_t = normalize(valid_z);

  FlatParams fp = pack(model);
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(fp.theta.size());
  Eigen::VectorXd adam_m = Eigen::VectorXd::Zero(fp.theta.size());
  Eigen::VectorXd adam_v = Eigen::VectorXd::Zero(fp.theta.size());
  long step_count = 0;

  std::vector<std::size_t> order(train_x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  IcnnModel best = model;
  TrainReport& report = out.report;
  double plateau_multiplier = 1.0;
  int epochs_since_best = 0;
  int epochs_since_plateau_cut = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, epoch) * plateau_multiplier;

    Rng rng(seed_for_index(cfg.seed, static_cast<std::size_t>(epoch) + 1));
    rng.shuffle(order);

    double train_loss_acc = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Eigen::VectorXd> bx;
      std::vector<double> bt;
      for (std::size_t i = start; i < end; ++i) {
        bx.push_back(train_x[order[i]]);
        bt.push_back(train_t[order[i]]);
      }
      double batch_loss = 0.0;
      const ParamGradients grads = param_gradients(model, bx, bt, cfg.loss, &batch_loss);
      Eigen::VectorXd g = pack_grads(model, grads);
      train_loss_acc += batch_loss;
      ++batches;

      if (model.cfg.convex && cfg.projection == ProjectionMode::MaskGradients) {
        for (Eigen::Index i = 0; i < g.size(); ++i)
          if (fp.convex_mask[static_cast<std::size_t>(i)] && fp.theta[i] <= 0.0 && g[i] > 0.0)
            g[i] = 0.0;
      }

      if (cfg.optimizer == Optimizer::SgdMomentum) {
        velocity = cfg.momentum * velocity - lr * g;
        fp.theta += velocity;
      } else {
        ++step_count;
        adam_m = cfg.beta1 * adam_m + (1.0 - cfg.beta1) * g;
        adam_v = cfg.beta2 * adam_v + (1.0 - cfg.beta2) * g.cwiseAbs2();
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_count));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_count));
        fp.theta -= (lr / bc1) *
                    (adam_m.array() / ((adam_v / bc2).cwiseSqrt().array() + cfg.adam_eps)).matrix();
      }

      if (model.cfg.convex && cfg.projection == ProjectionMode::ProjectWeights) {
        for (Eigen::Index i = 0; i < fp.theta.size(); ++i)
          if (fp.convex_mask[static_cast<std::size_t>(i)] && fp.theta[i] < 0.0) fp.theta[i] = 0.0;
      }
      unpack(fp.theta, model);
    }

    const double valid_loss = mean_loss(model, valid_x, valid_t, cfg.loss);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.epochs.push_back(
        {epoch, train_loss_acc / static_cast<double>(batches), valid_loss, lr, seconds});

    if (!std::isfinite(valid_loss)) {
      report.diverged = true;
      report.stop_reason = "diverged";
      out.model = report.best_epoch >= 0 ? best : initial;
      return out;
    }

    if (valid_loss < report.best_valid_loss) {
      report.best_valid_loss = valid_loss;
      report.best_epoch = epoch;
      best = model;
      epochs_since_best = 0;
      epochs_since_plateau_cut = 0;
    } else {
      ++epochs_since_best;
      ++epochs_since_plateau_cut;
      if (epochs_since_plateau_cut >= cfg.plateau_patience) {
        plateau_multiplier *= cfg.plateau_factor;
        epochs_since_plateau_cut = 0;
      }
      if (epochs_since_best >= cfg.early_stop_patience) {
        report.stop_reason = "early-stop";
        out.model = best;
        return out;
      }
    }
  }

  report.stop_reason = "max-epochs";
  out.model = report.best_epoch >= 0 ? best : model;
  return out;
}

// --- random hyper-parameter search scored by validation geometric-mean gap ---

struct SearchSpace {
  std::vector<double> learning_rates = {3e-2, 1e-2, 3e-3};
  std::vector<double> decays = {1.0, 0.99, 0.97};
  std::vector<int> widths = {32, 64};
  std::vector<int> depths = {2, 3};
  std::vector<int> batch_sizes = {32, 64};
};

struct SearchTrial {
  int index = 0;
  TrainConfig train_cfg;
  NetConfig net_cfg;
  double valid_geo_gap = std::numeric_limits<double>::infinity();
  bool diverged = false;
};

struct SearchResult {
  std::vector<SearchTrial> leaderboard; // sorted by validation gap, ties by index
  SearchTrial best;
};

inline SearchResult hyper_search(const Dataset& ds, const SearchSpace& space, int budget,
                                 std::uint64_t seed, const TrainConfig& base, bool convex) {
  if (budget < 1) throw std::invalid_argument("hyper_search: budget must be >= 1");
  SearchResult result;
  for (int trial = 0; trial < budget; ++trial) {
    Rng rng(seed_for_index(seed, static_cast<std::size_t>(trial)));
    SearchTrial t;
    t.index = trial;
    t.train_cfg = base;
    t.train_cfg.seed = seed_for_index(seed, 1000 + static_cast<std::size_t>(trial));
    t.train_cfg.learning_rate =
        space.learning_rates[rng.next_below(space.learning_rates.size())];
    t.train_cfg.lr_decay = space.decays[rng.next_below(space.decays.size())];
    t.train_cfg.batch_size = space.batch_sizes[rng.next_below(space.batch_sizes.size())];
    const int width = space.widths[rng.next_below(space.widths.size())];
    const int depth = space.depths[rng.next_below(space.depths.size())];
    t.net_cfg.input_dim = static_cast<int>(ds.input_dim());
    t.net_cfg.hidden.assign(static_cast<std::size_t>(depth), width);
    t.net_cfg.convex = convex;
    t.net_cfg.seed = t.train_cfg.seed;

    TrainOutput trained = train(init(t.net_cfg), ds, t.train_cfg);
    t.diverged = trained.report.diverged;
    if (!t.diverged) {
      const EvalResult ev = evaluate(trained.model, ds, Split::Valid, "trial");
      t.valid_geo_gap = ev.summary.geo_mean_gap;
    }
    result.leaderboard.push_back(std::move(t));
  }
  std::stable_sort(result.leaderboard.begin(), result.leaderboard.end(),
                   [](const SearchTrial& a, const SearchTrial& b) {
                     return a.valid_geo_gap < b.valid_geo_gap;
                   });
  result.best = result.leaderboard.front();
  return result;
}

} // namespace opfvf
