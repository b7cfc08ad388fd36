#pragma once

// Reverse-mode differentiation over Tensor4 values. Every op records a node
// holding its value, its parents and a closure that pushes the node's grad to
// the parents. Graphs are rebuilt per step and freed when the last Var drops.

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "priorvqa/ops.hpp"
#include "priorvqa/tensor.hpp"

namespace priorvqa {

template <typename T>
struct Node {
  Tensor4<T> value;
  Tensor4<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  Tensor4<T>& ensure_grad() {
    if (grad.empty()) grad = Tensor4<T>::zeros(value.shape());
    return grad;
  }
};

template <typename T>
class Var {
 public:
  Var() = default;

  static Var parameter(Tensor4<T> value) { return Var(std::move(value), true); }
  static Var constant(Tensor4<T> value) { return Var(std::move(value), false); }

  const Tensor4<T>& value() const { return node_->value; }
  Tensor4<T>& mutable_value() { return node_->value; }
  const Tensor4<T>& grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_->requires_grad; }
  const Shape& shape() const { return node_->value.shape(); }
  void zero_grad() { node_->grad = Tensor4<T>(); }

  // Fresh leaf holding a copy of the value, cut off from the graph.
  Var detach() const { return constant(node_->value); }

  std::shared_ptr<Node<T>> node() const { return node_; }

  template <typename Fn>
  static Var from_op(Tensor4<T> value,
                     std::vector<std::shared_ptr<Node<T>>> parents,
                     Fn&& backward) {
    Var v;
    v.node_ = std::make_shared<Node<T>>();
    v.node_->value = std::move(value);
    for (const auto& p : parents) v.node_->requires_grad |= p->requires_grad;
    if (v.node_->requires_grad) {
      v.node_->parents = std::move(parents);
      v.node_->backward_fn = std::forward<Fn>(backward);
    }
    return v;
  }

 private:
  Var(Tensor4<T> value, bool requires_grad)
      : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  std::shared_ptr<Node<T>> node_;
};

template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weights, const Var<T>& bias,
              std::size_t stride, std::size_t padding) {
  // bias lives in a (1, oc, 1, 1) tensor so it can carry a grad like any node
  ConvParams<T> params{weights.value(),
                       std::vector<T>(bias.value().values().begin(),
                                      bias.value().values().end()),
                       stride, padding};
  Tensor4<T> out = conv2d(input.value(), params);
  auto in_node = input.node();
  auto w_node = weights.node();
  auto b_node = bias.node();
  return Var<T>::from_op(
      std::move(out), {in_node, w_node, b_node},
      [params = std::move(params), in_node, w_node, b_node](Node<T>& self) {
        Tensor4<T>* gi =
            in_node->requires_grad ? &in_node->ensure_grad() : nullptr;
        Tensor4<T>* gw = w_node->requires_grad ? &w_node->ensure_grad() : nullptr;
        std::vector<T> gb;
        if (b_node->requires_grad) gb.assign(params.out_channels(), T(0));
        conv2d_backward(in_node->value, params, self.grad, gi, gw,
                        b_node->requires_grad ? &gb : nullptr);
        if (b_node->requires_grad) {
          Tensor4<T>& g = b_node->ensure_grad();
          for (std::size_t o = 0; o < gb.size(); ++o) g[o] += gb[o];
        }
      });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& input, T slope) {
  auto in_node = input.node();
  return Var<T>::from_op(leaky_relu(input.value(), slope), {in_node},
                         [in_node, slope](Node<T>& self) {
                           leaky_relu_backward(in_node->value, slope, self.grad,
                                               in_node->ensure_grad());
                         });
}

template <typename T>
Var<T> upsample_nearest(const Var<T>& input, std::size_t factor) {
  auto in_node = input.node();
  return Var<T>::from_op(upsample_nearest(input.value(), factor), {in_node},
                         [in_node, factor](Node<T>& self) {
                           upsample_nearest_backward(factor, self.grad,
                                                     in_node->ensure_grad());
                         });
}

template <typename T>
Var<T> l1_mean(const Var<T>& a, const Var<T>& b) {
  auto an = a.node();
  auto bn = b.node();
  return Var<T>::from_op(
      Tensor4<T>::scalar(l1_mean(a.value(), b.value())), {an, bn},
      [an, bn](Node<T>& self) {
        l1_mean_backward(an->value, bn->value, self.grad[0],
                         an->requires_grad ? &an->ensure_grad() : nullptr,
                         bn->requires_grad ? &bn->ensure_grad() : nullptr);
      });
}

// Weighted sum of scalar nodes: sum_i weights[i] * terms[i].
template <typename T>
Var<T> weighted_sum(const std::vector<Var<T>>& terms,
                    const std::vector<T>& weights) {
  if (terms.size() != weights.size() || terms.empty()) {
    throw DimensionError("weighted_sum needs one weight per term");
  }
  T total = 0;
  std::vector<std::shared_ptr<Node<T>>> parents;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    total += weights[i] * terms[i].value().item();
    parents.push_back(terms[i].node());
  }
  return Var<T>::from_op(
      Tensor4<T>::scalar(total), parents,
      [parents, weights](Node<T>& self) {
        for (std::size_t i = 0; i < parents.size(); ++i) {
          if (parents[i]->requires_grad) {
            parents[i]->ensure_grad()[0] += weights[i] * self.grad[0];
          }
        }
      });
}

// Scalar <x, coeffs>: a fixed linear read-out, handy for probing gradients.
template <typename T>
Var<T> inner_product(const Var<T>& x, const Tensor4<T>& coeffs) {
  require_same_shape(x.shape(), coeffs.shape(), "inner_product");
  T acc = 0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) acc += x.value()[i] * coeffs[i];
  auto xn = x.node();
  return Var<T>::from_op(Tensor4<T>::scalar(acc), {xn},
                         [xn, coeffs](Node<T>& self) {
                           Tensor4<T>& g = xn->ensure_grad();
                           for (std::size_t i = 0; i < coeffs.size(); ++i) {
                             g[i] += coeffs[i] * self.grad[0];
                           }
                         });
}

// Populates grads of every requires_grad node reachable from a scalar loss.
// Grads accumulate; call zero_grad on parameters between steps.
template <typename T>
void backward(const Var<T>& loss) {
  if (loss.value().size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        loss.shape().to_string());
  }
  auto root = loss.node();
  if (!root->requires_grad) return;

  // iterative post-order DFS gives a topological order
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
  // intermediate grads are no longer needed; leaves keep theirs
  for (Node<T>* node : order) {
    if (node->backward_fn) node->grad = Tensor4<T>();
  }
}

}  // namespace priorvqa
