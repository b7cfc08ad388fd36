#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "priorvqa/adam.hpp"
#include "priorvqa/autograd.hpp"
#include "priorvqa/error.hpp"
#include "priorvqa/keyvalue.hpp"
#include "priorvqa/network.hpp"
#include "priorvqa/video_io.hpp"

namespace priorvqa {

struct TrainConfig {
  std::size_t epochs = 10;
  AdamOptions optimizer{};
  // Index 0 weighs the pixel-space term, index k the k-th extractor stage.
  // Empty means 1.0 for every term.
  std::vector<double> loss_layer_weights;
  std::uint64_t seed = 0;

  void validate(std::size_t extractor_stages) const {
    if (epochs == 0) throw ConfigError("epochs must be >= 1");
    optimizer.validate();
    if (loss_layer_weights.empty()) return;
    if (loss_layer_weights.size() != extractor_stages + 1) {
      throw ConfigError("loss_layer_weights needs " +
                        std::to_string(extractor_stages + 1) + " entries, got " +
                        std::to_string(loss_layer_weights.size()));
    }
    bool any_positive = false;
    for (double w : loss_layer_weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw ConfigError("loss_layer_weights must be finite and non-negative");
      }
      any_positive |= w > 0.0;
    }
    if (!any_positive) throw ConfigError("at least one loss weight must be positive");
  }

  std::vector<double> resolved_loss_weights(std::size_t extractor_stages) const {
    if (loss_layer_weights.empty()) return std::vector<double>(extractor_stages + 1, 1.0);
    return loss_layer_weights;
  }
};

// The frozen extractor draws from its own stream, derived from the training
// seed, so it never coincides with the restorer's initialisation.
inline std::uint64_t extractor_seed(std::uint64_t train_seed) {
  return train_seed + 0x9E3779B97F4A7C15ULL;
}

inline NetworkWeights<float> build_extractor(const NetworkConfig& net_cfg,
                                             const TrainConfig& train_cfg) {
  NetworkConfig cfg = net_cfg;
  cfg.seed = extractor_seed(train_cfg.seed);
  return build_network<float>(cfg, NetworkRole::feature_extractor);
}

template <typename T>
std::vector<T> cast_weights(const std::vector<double>& w) {
  return std::vector<T>(w.begin(), w.end());
}

// loss = w_0 * l1_mean(restored, original)
//      + sum_k w_k * l1_mean(F_k(restored), F_k(original)).
// Gradients reach `restored` only; the extractor enters as constants.
template <typename T>
Var<T> perceptual_loss(const Var<T>& restored, const Tensor4<T>& original,
                       const NetworkWeights<T>& f,
                       const std::vector<LayerVars<T>>& f_vars,
                       const std::vector<T>& weights) {
  require_same_shape(restored.shape(), original.shape(), "perceptual_loss");
  if (!f.frozen()) throw ContractError("perceptual_loss needs a frozen extractor");
  if (weights.size() != f.layers.size() + 1) {
    throw DimensionError("perceptual_loss needs " +
                         std::to_string(f.layers.size() + 1) + " weights");
  }
  std::vector<Var<T>> terms;
  std::vector<T> used;
  const Var<T> target = Var<T>::constant(original);
  if (weights[0] != T(0)) {
    terms.push_back(l1_mean(restored, target));
    used.push_back(weights[0]);
  }
  bool need_features = false;
  for (std::size_t k = 1; k < weights.size(); ++k) need_features |= weights[k] != T(0);
  if (need_features) {
    const auto restored_feats = extract_features_graph(f, f_vars, restored);
    const auto original_feats = extract_features(f, original);
    for (std::size_t k = 1; k < weights.size(); ++k) {
      if (weights[k] == T(0)) continue;
      terms.push_back(l1_mean(restored_feats[k - 1],
                              Var<T>::constant(original_feats[k - 1])));
      used.push_back(weights[k]);
    }
  }
  if (terms.empty()) throw ConfigError("all perceptual loss weights are zero");
  return weighted_sum(terms, used);
}

// Value-only form.
template <typename T>
T perceptual_loss(const Tensor4<T>& restored, const Tensor4<T>& original,
                  const NetworkWeights<T>& f, const std::vector<T>& weights) {
  const auto vars = make_layer_vars(f, false);
  return perceptual_loss(Var<T>::constant(restored), original, f, vars, weights)
      .value()
      .item();
}

struct LossRecord {
  std::size_t epoch;  // 1-based
  std::size_t frame;  // 1-based temporal index t
  double loss;

  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

using LossTrace = std::vector<LossRecord>;

inline double epoch_mean_loss(const LossTrace& trace, std::size_t epoch) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : trace) {
    if (r.epoch == epoch) {
      sum += r.loss;
      ++n;
    }
  }
  if (n == 0) throw ContractError("no records for epoch " + std::to_string(epoch));
  return sum / static_cast<double>(n);
}

inline void write_loss_trace_csv(const std::string& path, const LossTrace& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "epoch,frame,loss\n";
  for (const auto& r : trace) {
    out << r.epoch << ',' << r.frame << ',' << format_double(r.loss) << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

struct TrainResult {
  NetworkWeights<float> restorer;
  NetworkWeights<float> extractor;
  LossTrace trace;
};

using TrainProgress = std::function<void(const LossRecord&)>;

inline void check_training_pair(const FrameSequence& original,
                                const FrameSequence& distorted) {
  if (original.frames.empty() || distorted.frames.empty()) {
    throw PairingError("training sequences must hold at least one frame");
  }
  if (original.frame_count() != distorted.frame_count()) {
    throw PairingError("original has " + std::to_string(original.frame_count()) +
                       " frames, distorted has " +
                       std::to_string(distorted.frame_count()));
  }
  if (!(original.frame_shape() == distorted.frame_shape())) {
    throw PairingError("original frames are " + original.frame_shape().to_string() +
                       ", distorted frames are " +
                       distorted.frame_shape().to_string());
  }
}

// One Adam step per frame, frames in temporal order, for train_cfg.epochs
// passes over the pair. The extractor is read-only throughout.
inline TrainResult train_pair(const FrameSequence& original,
                              const FrameSequence& distorted,
                              const NetworkConfig& net_cfg,
                              const TrainConfig& train_cfg,
                              const NetworkWeights<float>& extractor,
                              const TrainProgress& progress = {}) {
  check_training_pair(original, distorted);
  net_cfg.validate();
  train_cfg.validate(extractor.layers.size());
  if (!extractor.frozen()) throw ContractError("extractor must be frozen");
  if (original.frame_shape().c != net_cfg.in_channels) {
    throw PairingError("frames have " + std::to_string(original.frame_shape().c) +
                       " channels, network expects " +
                       std::to_string(net_cfg.in_channels));
  }

  const std::size_t factor = net_cfg.downsample_factor();
  const FrameSequence d = pad_to_divisible(distorted, factor).sequence;
  const FrameSequence o = pad_to_divisible(original, factor).sequence;

  TrainResult result{build_network<float>(net_cfg, NetworkRole::restorer),
                     extractor, {}};
  auto g_vars = make_layer_vars(result.restorer, true);
  auto params = flatten_parameters(g_vars);
  const auto f_vars = make_layer_vars(extractor, false);
  const auto weights =
      cast_weights<float>(train_cfg.resolved_loss_weights(extractor.layers.size()));
  auto state = make_adam_state<float>(params, train_cfg.optimizer);

  result.trace.reserve(train_cfg.epochs * d.frame_count());
  for (std::size_t epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    for (std::size_t t = 0; t < d.frame_count(); ++t) {
      const Var<float> input = Var<float>::constant(d.frames[t]);
      const Var<float> restored = restore_frame_graph(result.restorer, g_vars, input);
      const Var<float> loss =
          perceptual_loss(restored, o.frames[t], extractor, f_vars, weights);
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) +
                              ", frame " + std::to_string(t + 1));
      }
      backward(loss);
      adam_step<float>(params, state);
      for (auto& p : params) p.zero_grad();
      result.trace.push_back({epoch, t + 1, value});
      if (progress) progress(result.trace.back());
    }
  }
  store_layer_vars(g_vars, result.restorer);
  for (const auto& layer : result.restorer.layers) {
    if (!layer.weights.all_finite()) {
      throw DivergenceError("restorer weights became non-finite");
    }
  }
  return result;
}

inline TrainResult train_pair(const FrameSequence& original,
                              const FrameSequence& distorted,
                              const NetworkConfig& net_cfg,
                              const TrainConfig& train_cfg,
                              const TrainProgress& progress = {}) {
  return train_pair(original, distorted, net_cfg, train_cfg,
                    build_extractor(net_cfg, train_cfg), progress);
}

}  // namespace priorvqa
