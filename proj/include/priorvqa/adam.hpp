#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "priorvqa/autograd.hpp"
#include "priorvqa/error.hpp"

namespace priorvqa {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw ConfigError("learning_rate must be positive");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ConfigError("adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
  }
};

// Moments are flat arrays laid out parameter after parameter in the order the
// parameters were handed to make_adam_state.
template <typename T>
struct OptimizerState {
  std::uint64_t step_count = 0;
  std::vector<T> first_moment;
  std::vector<T> second_moment;
  AdamOptions options;
};

template <typename T>
std::size_t total_parameter_count(std::span<const Var<T>> params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.value().size();
  return n;
}

template <typename T>
OptimizerState<T> make_adam_state(std::span<const Var<T>> params,
                                  AdamOptions options = {}) {
  options.validate();
  const std::size_t n = total_parameter_count(params);
  return OptimizerState<T>{0, std::vector<T>(n, T(0)), std::vector<T>(n, T(0)),
                           options};
}

// One bias-corrected Adam update. Parameters without a grad are treated as
// having a zero gradient.
template <typename T>
void adam_step(std::span<Var<T>> params, OptimizerState<T>& state) {
  const std::size_t n = total_parameter_count<T>(params);
  if (state.first_moment.size() != n || state.second_moment.size() != n) {
    throw StateError("optimizer moments sized " +
                     std::to_string(state.first_moment.size()) + "/" +
                     std::to_string(state.second_moment.size()) +
                     " for " + std::to_string(n) + " parameters");
  }
  const AdamOptions& o = state.options;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const T b1 = static_cast<T>(o.beta1), b2 = static_cast<T>(o.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(o.beta1, t));
  const T c2 = static_cast<T>(1.0 - std::pow(o.beta2, t));
  const T lr = static_cast<T>(o.learning_rate);
  const T eps = static_cast<T>(o.epsilon);

  std::size_t offset = 0;
  for (auto& p : params) {
    Tensor4<T>& value = p.mutable_value();
    const bool has_grad = p.has_grad();
    for (std::size_t i = 0; i < value.size(); ++i, ++offset) {
      const T g = has_grad ? p.grad()[i] : T(0);
      T& m = state.first_moment[offset];
      T& v = state.second_moment[offset];
      m = b1 * m + (T(1) - b1) * g;
      v = b2 * v + (T(1) - b2) * g * g;
      const T m_hat = m / c1;
      const T v_hat = v / c2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

}  // namespace priorvqa
