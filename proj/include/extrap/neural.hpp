#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "extrap/dataset.hpp"
#include "extrap/errors.hpp"
#include "extrap/random.hpp"

namespace extrap {

/// Fully connected ReLU regressor trained with Adam on MSE.
struct MlpConfig {
  std::vector<int> hidden_widths{512, 448};
  double learning_rate = 0.01;
  int batch_size = 32;
  int max_epochs = 2000;
  int patience = 100;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    for (int w : hidden_widths) detail::require(w >= 1, "MlpConfig: hidden widths must be >= 1");
    detail::require(learning_rate > 0, "MlpConfig: learning_rate must be > 0");
    detail::require(batch_size >= 1, "MlpConfig: batch_size must be >= 1");
    detail::require(max_epochs >= 1, "MlpConfig: max_epochs must be >= 1");
    detail::require(patience >= 1, "MlpConfig: patience must be >= 1");
    detail::require(val_fraction > 0 && val_fraction < 1, "MlpConfig: val_fraction in (0,1)");
  }
};

/// weights[l] maps layer l to layer l+1 and has shape (out, in).
/// Every layer but the last is followed by ReLU.
struct MlpModel {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  std::size_t n_layers() const { return weights.size(); }

  std::vector<int> layer_sizes() const {
    std::vector<int> s;
    if (weights.empty()) return s;
    s.push_back(static_cast<int>(weights.front().cols()));
    for (const auto& w : weights) s.push_back(static_cast<int>(w.rows()));
    return s;
  }

  MlpModel zeros_like() const {
    MlpModel z;
    for (const auto& w : weights) z.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : biases) z.biases.push_back(Eigen::VectorXd::Zero(b.size()));
    return z;
  }

  bool all_finite() const {
    return std::all_of(weights.begin(), weights.end(), [](const auto& w) { return w.allFinite(); }) &&
           std::all_of(biases.begin(), biases.end(), [](const auto& b) { return b.allFinite(); });
  }

  bool operator==(const MlpModel& o) const {
    if (weights.size() != o.weights.size()) return false;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l].rows() != o.weights[l].rows() || weights[l].cols() != o.weights[l].cols() ||
          weights[l] != o.weights[l] || biases[l] != o.biases[l]) {
        return false;
      }
    }
    return true;
  }
};

/// Gradients share the parameter layout.
using MlpGradients = MlpModel;

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  MlpModel m;
  MlpModel v;

  static AdamState for_model(const MlpModel& model) {
    AdamState s;
    s.m = model.zeros_like();
    s.v = model.zeros_like();
    return s;
  }
};

struct TrainTrace {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::infinity();
  bool stopped_early = false;
};

struct TrainedMlp {
  MlpModel model;
  TrainTrace trace;
};

/// He-normal weights (variance 2 / fan_in), zero biases.
inline MlpModel init_mlp(const MlpConfig& cfg, int input_dim) {
  cfg.validate();
  detail::require(input_dim >= 1, "init_mlp: input_dim must be >= 1");
  Rng rng = make_rng(cfg.seed, 1);
  MlpModel model;
  int fan_in = input_dim;
  std::vector<int> outs(cfg.hidden_widths);
  outs.push_back(1);
  for (int fan_out : outs) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    fan_in = fan_out;
  }
  return model;
}

/// Pre-activations z[l] and layer outputs a[l] (a[0] is the input, transposed
/// to one column per sample).
struct ForwardCache {
  std::vector<Eigen::MatrixXd> z;
  std::vector<Eigen::MatrixXd> a;
};

inline Eigen::VectorXd forward(const MlpModel& model, const Eigen::MatrixXd& xs,
                               ForwardCache* cache = nullptr) {
  detail::require(!model.weights.empty() && model.weights.size() == model.biases.size(),
                  "forward: malformed model");
  detail::require(xs.cols() == model.weights.front().cols(), "forward: input width mismatch");
  Eigen::MatrixXd a = xs.transpose();
  if (cache) {
    cache->z.clear();
    cache->a.assign(1, a);
  }
  const std::size_t last = model.n_layers() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    Eigen::MatrixXd z = model.weights[l] * a;
    z.colwise() += model.biases[l];
    if (!z.allFinite()) {
      throw NumericOverflow("forward: non-finite activation in layer " + std::to_string(l));
    }
    a = l == last ? z : Eigen::MatrixXd(z.cwiseMax(0.0));
    if (cache) {
      cache->z.push_back(std::move(z));
      cache->a.push_back(a);
    }
  }
  return a.row(0).transpose();
}

inline double mse_loss(const MlpModel& model, const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys) {
  return (forward(model, xs) - ys).squaredNorm() / static_cast<double>(ys.size());
}

/// Exact gradient of mean((pred - y)^2) over the batch. ReLU'(0) = 0.
inline MlpGradients backward(const MlpModel& model, const Eigen::MatrixXd& xs,
                             const Eigen::VectorXd& ys, double* loss_out = nullptr) {
  detail::require(xs.rows() >= 1 && xs.rows() == ys.size(), "backward: bad batch");
  ForwardCache cache;
  const Eigen::VectorXd pred = forward(model, xs, &cache);
  const double n = static_cast<double>(ys.size());
  const Eigen::VectorXd resid = pred - ys;
  if (loss_out) *loss_out = resid.squaredNorm() / n;

  MlpGradients grads = model.zeros_like();
  Eigen::MatrixXd delta = (2.0 / n) * resid.transpose();  // 1 x n
  for (std::size_t l = model.n_layers(); l-- > 0;) {
    grads.weights[l].noalias() = delta * cache.a[l].transpose();
    grads.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = model.weights[l].transpose() * delta;
    delta = (cache.z[l - 1].array() > 0.0).select(back, 0.0);
  }
  return grads;
}

namespace detail {

inline void adam_update(Eigen::Ref<Eigen::MatrixXd> p, Eigen::Ref<Eigen::MatrixXd> m,
                        Eigen::Ref<Eigen::MatrixXd> v, const Eigen::Ref<const Eigen::MatrixXd>& g,
                        const AdamState& s, double step, double c1, double c2) {
  m = s.beta1 * m + (1.0 - s.beta1) * g;
  v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseProduct(g);
  p.array() -= step * (m.array() / c1) / ((v.array() / c2).sqrt() + s.eps);
}

}  // namespace detail

/// One bias-corrected Adam update, in place.
inline void adam_step(AdamState& state, MlpModel& model, const MlpGradients& grads,
                      double learning_rate) {
  detail::require(state.m.weights.size() == model.weights.size() &&
                      grads.weights.size() == model.weights.size(),
                  "adam_step: shape mismatch");
  state.t += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    detail::adam_update(model.weights[l], state.m.weights[l], state.v.weights[l], grads.weights[l],
                        state, learning_rate, c1, c2);
    detail::adam_update(model.biases[l], state.m.biases[l], state.v.biases[l], grads.biases[l],
                        state, learning_rate, c1, c2);
  }
}

/// Minibatch Adam with a held-out validation split and early stopping.
/// Returns the parameters from the epoch with the lowest validation loss.
inline TrainedMlp train_mlp(const SampleSet& train, const MlpConfig& cfg) {
  cfg.validate();
  train.validate();
  const auto n = static_cast<std::size_t>(train.size());
  const auto n_val = static_cast<std::size_t>(std::ceil(cfg.val_fraction * static_cast<double>(n)));
  if (n_val < 1 || n_val >= n) {
    throw InvalidArgument("train_mlp: cannot carve a validation split from " +
                          std::to_string(n) + " samples");
  }
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  {
    Rng rng = make_rng(cfg.seed, 0);
    std::shuffle(order.begin(), order.end(), rng);
  }
  const std::vector<Eigen::Index> fit_rows(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  const SampleSet fit_set = train.subset(fit_rows);
  const SampleSet val_set =
      train.subset({order.end() - static_cast<std::ptrdiff_t>(n_val), order.end()});

  TrainedMlp out{init_mlp(cfg, static_cast<int>(train.dim())), {}};
  MlpModel model = out.model;
  AdamState adam = AdamState::for_model(model);
  const std::uint64_t epoch_seed = derive_seed(cfg.seed, 2);

  std::vector<Eigen::Index> batch_order(fit_rows.size());
  std::iota(batch_order.begin(), batch_order.end(), Eigen::Index{0});
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  int since_best = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng rng = make_rng(epoch_seed, static_cast<std::uint64_t>(epoch));
    std::shuffle(batch_order.begin(), batch_order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < batch_order.size(); start += bs) {
      const std::size_t stop = std::min(start + bs, batch_order.size());
      const SampleSet batch = fit_set.subset({batch_order.begin() + static_cast<std::ptrdiff_t>(start),
                                              batch_order.begin() + static_cast<std::ptrdiff_t>(stop)});
      double batch_loss = 0.0;
      const MlpGradients g = backward(model, batch.xs, batch.ys, &batch_loss);
      adam_step(adam, model, g, cfg.learning_rate);
      epoch_loss += batch_loss * static_cast<double>(stop - start);
    }
    out.trace.train_loss.push_back(epoch_loss / static_cast<double>(batch_order.size()));
    const double val = mse_loss(model, val_set.xs, val_set.ys);
    out.trace.val_loss.push_back(val);
    if (val < out.trace.best_val_loss) {
      out.trace.best_val_loss = val;
      out.trace.best_epoch = epoch;
      out.model = model;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      out.trace.stopped_early = epoch + 1 < cfg.max_epochs;
      break;
    }
  }
  return out;
}

}  // namespace extrap
