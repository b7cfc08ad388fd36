#pragma once

// Restoration network G and frozen feature extractor F.
//
// G is a plain encoder-decoder: one stride-2 conv + leaky ReLU per entry of
// encoder_channels, then the mirror image (nearest x2 upsample, stride-1 conv,
// leaky ReLU), then a 1x1 head with no activation. F shares the encoder
// topology and emits the activation after every encoder stage.

#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "priorvqa/autograd.hpp"
#include "priorvqa/error.hpp"
#include "priorvqa/ops.hpp"
#include "priorvqa/rng.hpp"
#include "priorvqa/tensor.hpp"

namespace priorvqa {

struct NetworkConfig {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::vector<std::size_t> encoder_channels{16, 32, 64};
  std::size_t kernel_size = 3;
  double activation_slope = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (in_channels == 0 || out_channels == 0) {
      throw ConfigError("network channel counts must be positive");
    }
    if (encoder_channels.empty()) {
      throw ConfigError("encoder_channels must not be empty");
    }
    for (std::size_t c : encoder_channels) {
      if (c == 0) throw ConfigError("encoder_channels entries must be positive");
    }
    if (kernel_size == 0 || kernel_size % 2 == 0) {
      throw ConfigError("kernel_size must be odd, got " +
                        std::to_string(kernel_size));
    }
    if (!(activation_slope >= 0.0 && activation_slope < 1.0)) {
      throw ConfigError("activation_slope must lie in [0, 1)");
    }
  }

  // Spatial dims fed to G must be multiples of this.
  std::size_t downsample_factor() const {
    return std::size_t{1} << encoder_channels.size();
  }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

enum class NetworkRole { restorer, feature_extractor };

inline const char* to_string(NetworkRole role) {
  return role == NetworkRole::restorer ? "restorer" : "feature_extractor";
}

struct LayerSpec {
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t kernel;
  std::size_t stride;
  std::size_t padding;
  std::size_t upsample_before;  // 1 = none
  bool activation;
};

inline std::vector<LayerSpec> layer_plan(const NetworkConfig& cfg,
                                         NetworkRole role) {
  cfg.validate();
  const std::size_t k = cfg.kernel_size, pad = cfg.kernel_size / 2;
  const auto& enc = cfg.encoder_channels;
  std::vector<LayerSpec> plan;
  std::size_t prev = cfg.in_channels;
  for (std::size_t c : enc) {
    plan.push_back({prev, c, k, 2, pad, 1, true});
    prev = c;
  }
  if (role == NetworkRole::feature_extractor) return plan;
  for (std::size_t i = enc.size(); i-- > 0;) {
    const std::size_t target = i > 0 ? enc[i - 1] : enc[0];
    plan.push_back({prev, target, k, 1, pad, 2, true});
    prev = target;
  }
  plan.push_back({prev, cfg.out_channels, 1, 1, 0, 1, false});
  for (std::size_t i = 1; i < plan.size(); ++i) {
    if (plan[i].in_channels != plan[i - 1].out_channels) {
      throw ConfigError("layer " + std::to_string(i) + " channel chain broken");
    }
  }
  return plan;
}

template <typename T>
struct NetworkWeights {
  NetworkConfig config;
  NetworkRole role = NetworkRole::restorer;
  std::vector<ConvParams<T>> layers;

  bool frozen() const { return role == NetworkRole::feature_extractor; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.parameter_count();
    return n;
  }

  template <typename U>
  NetworkWeights<U> cast() const {
    NetworkWeights<U> out{config, role, {}};
    for (const auto& l : layers) {
      out.layers.push_back(ConvParams<U>{
          l.weights.template cast<U>(),
          std::vector<U>(l.bias.begin(), l.bias.end()), l.stride, l.padding});
    }
    return out;
  }

  friend bool operator==(const NetworkWeights&, const NetworkWeights&) = default;
};

// Weights and biases uniform in [-a, a], a = sqrt(1 / (ic * kh * kw)), drawn
// layer by layer (weights then bias) from one generator seeded by cfg.seed.
template <typename T>
NetworkWeights<T> build_network(const NetworkConfig& cfg, NetworkRole role) {
  const auto plan = layer_plan(cfg, role);
  SeededRng rng(cfg.seed);
  NetworkWeights<T> net{cfg, role, {}};
  for (const auto& spec : plan) {
    const double fan_in =
        static_cast<double>(spec.in_channels * spec.kernel * spec.kernel);
    const double a = std::sqrt(1.0 / fan_in);
    Tensor4<T> w(Shape{spec.out_channels, spec.in_channels, spec.kernel,
                       spec.kernel});
    for (T& v : w.values()) v = static_cast<T>(rng.uniform(-a, a));
    std::vector<T> b(spec.out_channels);
    for (T& v : b) v = static_cast<T>(rng.uniform(-a, a));
    net.layers.push_back(
        ConvParams<T>{std::move(w), std::move(b), spec.stride, spec.padding});
  }
  return net;
}

// Configuration check shared by loaders: the layer list must match the plan.
template <typename T>
void check_layers_match_plan(const NetworkWeights<T>& net) {
  const auto plan = layer_plan(net.config, net.role);
  if (plan.size() != net.layers.size()) {
    throw ConfigError("expected " + std::to_string(plan.size()) +
                      " layers, found " + std::to_string(net.layers.size()));
  }
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& l = net.layers[i];
    const auto& s = plan[i];
    if (l.out_channels() != s.out_channels || l.in_channels() != s.in_channels ||
        l.kernel_h() != s.kernel || l.kernel_w() != s.kernel ||
        l.bias.size() != s.out_channels || l.stride != s.stride ||
        l.padding != s.padding) {
      throw ConfigError("layer " + std::to_string(i) +
                        " does not match configuration");
    }
  }
}

template <typename T>
using FeatureStack = std::vector<Tensor4<T>>;

namespace detail {

inline void check_divisible(const Shape& s, std::size_t factor) {
  if (s.h % factor != 0 || s.w % factor != 0) {
    throw DimensionError("frame " + std::to_string(s.w) + "x" +
                         std::to_string(s.h) + " is not divisible by " +
                         std::to_string(factor) +
                         "; pad the sequence (pad_to_divisible) first");
  }
}

template <typename T>
void check_input_channels(const NetworkWeights<T>& net, const Shape& s) {
  if (s.c != net.config.in_channels) {
    throw DimensionError("input " + s.to_string() + " has " +
                         std::to_string(s.c) + " channels, network expects " +
                         std::to_string(net.config.in_channels));
  }
}

}  // namespace detail

template <typename T>
Tensor4<T> restore_frame(const NetworkWeights<T>& g, const Tensor4<T>& frame) {
  if (g.role != NetworkRole::restorer) {
    throw ContractError("restore_frame needs restorer weights");
  }
  detail::check_input_channels(g, frame.shape());
  detail::check_divisible(frame.shape(), g.config.downsample_factor());
  const auto plan = layer_plan(g.config, g.role);
  const T slope = static_cast<T>(g.config.activation_slope);
  Tensor4<T> x = frame;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (plan[i].upsample_before > 1) x = upsample_nearest(x, plan[i].upsample_before);
    x = conv2d(x, g.layers[i]);
    if (plan[i].activation) x = leaky_relu(x, slope);
  }
  return x;
}

template <typename T>
FeatureStack<T> extract_features(const NetworkWeights<T>& f,
                                 const Tensor4<T>& frame) {
  if (f.role != NetworkRole::feature_extractor) {
    throw ContractError("extract_features needs feature-extractor weights");
  }
  detail::check_input_channels(f, frame.shape());
  const T slope = static_cast<T>(f.config.activation_slope);
  FeatureStack<T> stack;
  Tensor4<T> x = frame;
  for (const auto& layer : f.layers) {
    x = leaky_relu(conv2d(x, layer), slope);
    stack.push_back(x);
  }
  return stack;
}

// Graph-recording counterparts. LayerVars holds one layer's parameters as
// Vars: trainable leaves for G, constants for the frozen F.
template <typename T>
struct LayerVars {
  Var<T> weights;
  Var<T> bias;  // (1, oc, 1, 1)
};

template <typename T>
std::vector<LayerVars<T>> make_layer_vars(const NetworkWeights<T>& net,
                                          bool trainable) {
  std::vector<LayerVars<T>> vars;
  for (const auto& l : net.layers) {
    Tensor4<T> b(Shape{1, l.out_channels(), 1, 1}, l.bias);
    vars.push_back(trainable
                       ? LayerVars<T>{Var<T>::parameter(l.weights),
                                      Var<T>::parameter(std::move(b))}
                       : LayerVars<T>{Var<T>::constant(l.weights),
                                      Var<T>::constant(std::move(b))});
  }
  return vars;
}

// Writes Var values back into the plain weight set.
template <typename T>
void store_layer_vars(const std::vector<LayerVars<T>>& vars,
                      NetworkWeights<T>& net) {
  for (std::size_t i = 0; i < vars.size(); ++i) {
    net.layers[i].weights = vars[i].weights.value();
    const auto b = vars[i].bias.value().values();
    net.layers[i].bias.assign(b.begin(), b.end());
  }
}

template <typename T>
std::vector<Var<T>> flatten_parameters(const std::vector<LayerVars<T>>& vars) {
  std::vector<Var<T>> flat;
  for (const auto& l : vars) {
    flat.push_back(l.weights);
    flat.push_back(l.bias);
  }
  return flat;
}

template <typename T>
Var<T> restore_frame_graph(const NetworkWeights<T>& g,
                           const std::vector<LayerVars<T>>& vars,
                           const Var<T>& frame) {
  detail::check_input_channels(g, frame.shape());
  detail::check_divisible(frame.shape(), g.config.downsample_factor());
  const auto plan = layer_plan(g.config, NetworkRole::restorer);
  const T slope = static_cast<T>(g.config.activation_slope);
  Var<T> x = frame;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (plan[i].upsample_before > 1) x = upsample_nearest(x, plan[i].upsample_before);
    x = conv2d(x, vars[i].weights, vars[i].bias, plan[i].stride, plan[i].padding);
    if (plan[i].activation) x = leaky_relu(x, slope);
  }
  return x;
}

template <typename T>
std::vector<Var<T>> extract_features_graph(const NetworkWeights<T>& f,
                                           const std::vector<LayerVars<T>>& vars,
                                           const Var<T>& frame) {
  detail::check_input_channels(f, frame.shape());
  const T slope = static_cast<T>(f.config.activation_slope);
  std::vector<Var<T>> stack;
  Var<T> x = frame;
  for (std::size_t i = 0; i < f.layers.size(); ++i) {
    x = leaky_relu(conv2d(x, vars[i].weights, vars[i].bias, f.layers[i].stride,
                          f.layers[i].padding),
                   slope);
    stack.push_back(x);
  }
  return stack;
}

}  // namespace priorvqa
