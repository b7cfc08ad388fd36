#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "priorvqa/error.hpp"

namespace priorvqa {

struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  constexpr std::size_t size() const { return n * c * h * w; }
  constexpr std::size_t plane() const { return h * w; }
  friend constexpr bool operator==(const Shape&, const Shape&) = default;

  std::string to_string() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" +
           std::to_string(h) + "x" + std::to_string(w);
  }
};

// Dense 4D array in row-major (n, c, h, w) order. Value semantic.
template <typename T>
class Tensor4 {
 public:
  using value_type = T;

  Tensor4() = default;
  explicit Tensor4(Shape shape, T fill = T(0))
      : shape_(shape), data_(shape.size(), fill) {}
  Tensor4(Shape shape, std::vector<T> values)
      : shape_(shape), data_(std::move(values)) {
    if (data_.size() != shape_.size()) {
      throw DimensionError("tensor of shape " + shape_.to_string() +
                           " needs " + std::to_string(shape_.size()) +
                           " values, got " + std::to_string(data_.size()));
    }
  }

  static Tensor4 zeros(Shape shape) { return Tensor4(shape, T(0)); }
  static Tensor4 filled(Shape shape, T v) { return Tensor4(shape, v); }
  static Tensor4 scalar(T v) { return Tensor4(Shape{1, 1, 1, 1}, v); }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  std::size_t index(std::size_t n, std::size_t c, std::size_t y,
                    std::size_t x) const {
    return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data_[index(n, c, y, x)];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t y,
              std::size_t x) const {
    return data_[index(n, c, y, x)];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T item() const {
    if (data_.size() != 1) {
      throw ContractError("item() on non-scalar tensor " + shape_.to_string());
    }
    return data_[0];
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](T v) { return std::isfinite(v); });
  }

  template <typename U>
  Tensor4<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor4<U>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  Shape shape_{};
  std::vector<T> data_;
};

inline void require_same_shape(const Shape& a, const Shape& b,
                               const char* what) {
  if (!(a == b)) {
    throw DimensionError(std::string(what) + ": shape " + a.to_string() +
                         " does not match " + b.to_string());
  }
}

}  // namespace priorvqa
