#pragma once

// Finite-difference gradient suite. Analytic grads come from backward(); the
// reference perturbs each leaf element by +-h and re-evaluates the forward
// pass, so it never touches the backward kernels.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "priorvqa/autograd.hpp"
#include "priorvqa/network.hpp"
#include "priorvqa/rng.hpp"
#include "priorvqa/trainer.hpp"

namespace priorvqa {

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckTolerance = 1e-4;

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t elements = 0;
  bool passed = false;
};

// Relative error of one component; both near zero counts as agreement.
inline double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  const double diff = std::abs(analytic - numeric);
  if (scale < 1e-10) return diff < 1e-10 ? 0.0 : diff;
  return diff / scale;
}

using ScalarGraph = std::function<Var<double>(const std::vector<Var<double>>&)>;

// Compares d f / d leaf for every element of every leaf.
inline GradCheckResult check_gradients(const std::string& name,
                                       std::vector<Var<double>> leaves,
                                       const ScalarGraph& f,
                                       double step = kGradCheckStep,
                                       double tolerance = kGradCheckTolerance) {
  for (auto& l : leaves) l.zero_grad();
  backward(f(leaves));
  GradCheckResult r{name, 0.0, 0, false};
  for (auto& leaf : leaves) {
    const Tensor4<double> analytic =
        leaf.has_grad() ? leaf.grad() : Tensor4<double>::zeros(leaf.shape());
    for (std::size_t i = 0; i < leaf.value().size(); ++i) {
      const double orig = leaf.value()[i];
      leaf.mutable_value()[i] = orig + step;
      const double up = f(leaves).value().item();
      leaf.mutable_value()[i] = orig - step;
      const double down = f(leaves).value().item();
      leaf.mutable_value()[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic[i], numeric));
      ++r.elements;
    }
  }
  r.passed = r.max_rel_error < tolerance;
  return r;
}

namespace detail {

inline Tensor4<double> random_tensor(Shape s, SeededRng& rng, double lo = -1.0,
                                     double hi = 1.0) {
  Tensor4<double> t(s);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Uniform magnitude in [margin, 1] with random sign, so no element sits on
// the kink of |x| or leaky ReLU.
inline Tensor4<double> random_away_from_zero(Shape s, SeededRng& rng,
                                             double margin = 0.05) {
  Tensor4<double> t(s);
  for (double& v : t.values()) {
    const double mag = rng.uniform(margin, 1.0);
    v = rng.uniform(0.0, 1.0) < 0.5 ? -mag : mag;
  }
  return t;
}

}  // namespace detail

// The gate run by `gradcheck` and the acceptance suite. Every tensor is at
// most 1x2x8x8.
inline std::vector<GradCheckResult> run_gradient_suite(std::uint64_t seed = 1234) {
  SeededRng rng(seed);
  std::vector<GradCheckResult> results;
  using V = Var<double>;
  const Shape in_shape{1, 2, 8, 8};

  {
    auto x = V::parameter(detail::random_tensor(in_shape, rng));
    auto w = V::parameter(detail::random_tensor({2, 2, 3, 3}, rng));
    auto b = V::parameter(detail::random_tensor({1, 2, 1, 1}, rng));
    const auto probe = detail::random_tensor({1, 2, 8, 8}, rng);
    results.push_back(check_gradients("conv2d", {x, w, b}, [&](const auto& v) {
      return inner_product(conv2d(v[0], v[1], v[2], 1, 1), probe);
    }));
  }
  {
    auto x = V::parameter(detail::random_tensor(in_shape, rng));
    auto w = V::parameter(detail::random_tensor({2, 2, 3, 3}, rng));
    auto b = V::parameter(detail::random_tensor({1, 2, 1, 1}, rng));
    const auto probe = detail::random_tensor({1, 2, 4, 4}, rng);
    results.push_back(check_gradients("conv2d_stride2", {x, w, b}, [&](const auto& v) {
      return inner_product(conv2d(v[0], v[1], v[2], 2, 1), probe);
    }));
  }
  {
    auto x = V::parameter(detail::random_away_from_zero(in_shape, rng));
    const auto probe = detail::random_tensor(in_shape, rng);
    results.push_back(check_gradients("leaky_relu", {x}, [&](const auto& v) {
      return inner_product(leaky_relu(v[0], 0.2), probe);
    }));
  }
  {
    auto x = V::parameter(detail::random_tensor({1, 2, 4, 4}, rng));
    const auto probe = detail::random_tensor(in_shape, rng);
    results.push_back(check_gradients("upsample_nearest", {x}, [&](const auto& v) {
      return inner_product(upsample_nearest(v[0], 2), probe);
    }));
  }
  {
    auto a = V::parameter(detail::random_tensor(in_shape, rng));
    Tensor4<double> bt = a.value();
    const auto offset = detail::random_away_from_zero(in_shape, rng);
    for (std::size_t i = 0; i < bt.size(); ++i) bt[i] += offset[i];
    auto b = V::parameter(std::move(bt));
    results.push_back(check_gradients("l1_mean", {a, b}, [](const auto& v) {
      return l1_mean(v[0], v[1]);
    }));
  }
  {
    NetworkConfig cfg;
    cfg.in_channels = 1;
    cfg.encoder_channels = {2, 2};
    cfg.seed = seed + 1;
    const auto f = build_network<double>(cfg, NetworkRole::feature_extractor);
    const auto f_vars = make_layer_vars(f, false);
    const auto original = detail::random_tensor({1, 1, 8, 8}, rng, 0.0, 1.0);
    auto restored = V::parameter(detail::random_tensor({1, 1, 8, 8}, rng, 0.0, 1.0));
    const std::vector<double> weights(f.layers.size() + 1, 1.0);
    results.push_back(
        check_gradients("perceptual_loss", {restored}, [&](const auto& v) {
          return perceptual_loss(v[0], original, f, f_vars, weights);
        }));
  }
  {
    // conv(stride 2) -> lrelu -> upsample -> conv -> lrelu -> 1x1 conv -> l1
    auto x = V::parameter(detail::random_tensor(in_shape, rng));
    auto w1 = V::parameter(detail::random_tensor({2, 2, 3, 3}, rng));
    auto b1 = V::parameter(detail::random_tensor({1, 2, 1, 1}, rng));
    auto w2 = V::parameter(detail::random_tensor({2, 2, 3, 3}, rng));
    auto b2 = V::parameter(detail::random_tensor({1, 2, 1, 1}, rng));
    auto w3 = V::parameter(detail::random_tensor({1, 2, 1, 1}, rng));
    auto b3 = V::parameter(detail::random_tensor({1, 1, 1, 1}, rng));
    const auto target = V::constant(detail::random_tensor({1, 1, 8, 8}, rng, 2.0, 3.0));
    results.push_back(check_gradients(
        "composite_3layer", {x, w1, b1, w2, b2, w3, b3}, [&](const auto& v) {
          auto h = leaky_relu(conv2d(v[0], v[1], v[2], 2, 1), 0.2);
          h = leaky_relu(conv2d(upsample_nearest(h, 2), v[3], v[4], 1, 1), 0.2);
          return l1_mean(conv2d(h, v[5], v[6], 1, 0), target);
        }));
  }
  return results;
}

}  // namespace priorvqa
