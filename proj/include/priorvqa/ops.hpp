#pragma once

// Plain (non-recording) forward kernels and their vector-Jacobian products.
// The autograd layer wires these together; inference calls them directly.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "priorvqa/error.hpp"
#include "priorvqa/tensor.hpp"

namespace priorvqa {

template <typename T>
struct ConvParams {
  Tensor4<T> weights;  // (oc, ic, kh, kw)
  std::vector<T> bias;  // oc
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_channels() const { return weights.shape().n; }
  std::size_t in_channels() const { return weights.shape().c; }
  std::size_t kernel_h() const { return weights.shape().h; }
  std::size_t kernel_w() const { return weights.shape().w; }
  std::size_t parameter_count() const { return weights.size() + bias.size(); }

  friend bool operator==(const ConvParams&, const ConvParams&) = default;
};

// Output extent along one axis. Partial windows at the far edge are dropped
// (floor), matching the usual convolution shape law.
inline std::size_t conv_output_extent(std::size_t in, std::size_t kernel,
                                      std::size_t stride,
                                      std::size_t padding) {
  if (stride == 0) throw ConfigError("convolution stride must be >= 1");
  if (in + 2 * padding < kernel) {
    throw ConfigError("kernel " + std::to_string(kernel) +
                      " larger than padded input " +
                      std::to_string(in + 2 * padding));
  }
  return (in + 2 * padding - kernel) / stride + 1;
}

inline Shape conv_output_shape(const Shape& in, std::size_t out_channels,
                               std::size_t kh, std::size_t kw,
                               std::size_t stride, std::size_t padding) {
  return Shape{in.n, out_channels,
               conv_output_extent(in.h, kh, stride, padding),
               conv_output_extent(in.w, kw, stride, padding)};
}

namespace detail {

// Range [lo, hi) of output positions o for which o*stride - padding + k lands
// inside [0, extent).
inline void valid_output_range(std::size_t extent, std::size_t out_extent,
                               std::size_t stride, std::size_t padding,
                               std::size_t k, std::size_t& lo,
                               std::size_t& hi) {
  const long p = static_cast<long>(padding) - static_cast<long>(k);
  const long s = static_cast<long>(stride);
  long first = p > 0 ? (p + s - 1) / s : 0;
  long last_excl = (static_cast<long>(extent) - 1 + p) >= 0
                       ? (static_cast<long>(extent) - 1 + p) / s + 1
                       : 0;
  if (last_excl > static_cast<long>(out_extent)) last_excl = out_extent;
  if (first > last_excl) first = last_excl;
  lo = static_cast<std::size_t>(first);
  hi = static_cast<std::size_t>(last_excl);
}

template <typename T>
void check_conv(const Shape& in, const ConvParams<T>& params) {
  const Shape& ws = params.weights.shape();
  if (in.c != ws.c) {
    throw DimensionError("conv2d input " + in.to_string() +
                         " incompatible with weights " + ws.to_string());
  }
  if (params.bias.size() != ws.n) {
    throw DimensionError("conv2d bias length " +
                         std::to_string(params.bias.size()) +
                         " != out_channels " + std::to_string(ws.n));
  }
}

}  // namespace detail

template <typename T>
Tensor4<T> conv2d(const Tensor4<T>& input, const ConvParams<T>& params) {
  detail::check_conv(input.shape(), params);
  const Shape in = input.shape();
  const std::size_t oc = params.out_channels(), ic = params.in_channels();
  const std::size_t kh = params.kernel_h(), kw = params.kernel_w();
  const std::size_t s = params.stride, p = params.padding;
  const Shape os = conv_output_shape(in, oc, kh, kw, s, p);
  Tensor4<T> out(os);

  for (std::size_t n = 0; n < in.n; ++n) {
    for (std::size_t o = 0; o < oc; ++o) {
      T* dst = &out.at(n, o, 0, 0);
      std::fill(dst, dst + os.plane(), params.bias[o]);
      for (std::size_t i = 0; i < ic; ++i) {
        const T* src = &input.at(n, i, 0, 0);
        for (std::size_t ky = 0; ky < kh; ++ky) {
          std::size_t oy0, oy1;
          detail::valid_output_range(in.h, os.h, s, p, ky, oy0, oy1);
          for (std::size_t kx = 0; kx < kw; ++kx) {
            std::size_t ox0, ox1;
            detail::valid_output_range(in.w, os.w, s, p, kx, ox0, ox1);
            const T wv = params.weights.at(o, i, ky, kx);
            for (std::size_t oy = oy0; oy < oy1; ++oy) {
              const T* row = src + (oy * s + ky - p) * in.w;
              T* drow = dst + oy * os.w;
              for (std::size_t ox = ox0; ox < ox1; ++ox) {
                drow[ox] += wv * row[ox * s + kx - p];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

// Accumulates (+=) into whichever of grad_input / grad_weights / grad_bias is
// non-null; each must already have the matching shape.
template <typename T>
void conv2d_backward(const Tensor4<T>& input, const ConvParams<T>& params,
                     const Tensor4<T>& grad_out, Tensor4<T>* grad_input,
                     Tensor4<T>* grad_weights, std::vector<T>* grad_bias) {
  const Shape in = input.shape();
  const Shape os = grad_out.shape();
  const std::size_t oc = params.out_channels(), ic = params.in_channels();
  const std::size_t kh = params.kernel_h(), kw = params.kernel_w();
  const std::size_t s = params.stride, p = params.padding;

  for (std::size_t n = 0; n < in.n; ++n) {
    for (std::size_t o = 0; o < oc; ++o) {
      const T* g = &grad_out.at(n, o, 0, 0);
      if (grad_bias) {
        T acc = 0;
        for (std::size_t k = 0; k < os.plane(); ++k) acc += g[k];
        (*grad_bias)[o] += acc;
      }
      for (std::size_t i = 0; i < ic; ++i) {
        const T* src = &input.at(n, i, 0, 0);
        T* gsrc = grad_input ? &grad_input->at(n, i, 0, 0) : nullptr;
        for (std::size_t ky = 0; ky < kh; ++ky) {
          std::size_t oy0, oy1;
          detail::valid_output_range(in.h, os.h, s, p, ky, oy0, oy1);
          for (std::size_t kx = 0; kx < kw; ++kx) {
            std::size_t ox0, ox1;
            detail::valid_output_range(in.w, os.w, s, p, kx, ox0, ox1);
            const T wv = params.weights.at(o, i, ky, kx);
            T wacc = 0;
            for (std::size_t oy = oy0; oy < oy1; ++oy) {
              const std::size_t base = (oy * s + ky - p) * in.w + kx - p;
              const T* grow = g + oy * os.w;
              for (std::size_t ox = ox0; ox < ox1; ++ox) {
                wacc += src[base + ox * s] * grow[ox];
                if (gsrc) gsrc[base + ox * s] += wv * grow[ox];
              }
            }
            if (grad_weights) grad_weights->at(o, i, ky, kx) += wacc;
          }
        }
      }
    }
  }
}

template <typename T>
Tensor4<T> leaky_relu(const Tensor4<T>& input, T slope) {
  if (!(slope >= T(0) && slope < T(1))) {
    throw ConfigError("leaky_relu slope must lie in [0, 1)");
  }
  Tensor4<T> out = input;
  for (T& v : out.values()) v = v >= T(0) ? v : slope * v;
  return out;
}

template <typename T>
void leaky_relu_backward(const Tensor4<T>& input, T slope,
                         const Tensor4<T>& grad_out, Tensor4<T>& grad_input) {
  for (std::size_t i = 0; i < input.size(); ++i) {
    grad_input[i] += input[i] >= T(0) ? grad_out[i] : slope * grad_out[i];
  }
}

template <typename T>
Tensor4<T> upsample_nearest(const Tensor4<T>& input, std::size_t factor) {
  if (factor == 0) throw ConfigError("upsample factor must be >= 1");
  const Shape in = input.shape();
  Tensor4<T> out(Shape{in.n, in.c, in.h * factor, in.w * factor});
  const std::size_t ow = in.w * factor;
  for (std::size_t nc = 0; nc < in.n * in.c; ++nc) {
    const T* src = input.data() + nc * in.plane();
    T* dst = out.data() + nc * in.plane() * factor * factor;
    for (std::size_t y = 0; y < in.h * factor; ++y) {
      const T* srow = src + (y / factor) * in.w;
      T* drow = dst + y * ow;
      for (std::size_t x = 0; x < ow; ++x) drow[x] = srow[x / factor];
    }
  }
  return out;
}

template <typename T>
void upsample_nearest_backward(std::size_t factor, const Tensor4<T>& grad_out,
                               Tensor4<T>& grad_input) {
  const Shape in = grad_input.shape();
  const std::size_t ow = in.w * factor;
  for (std::size_t nc = 0; nc < in.n * in.c; ++nc) {
    T* gsrc = grad_input.data() + nc * in.plane();
    const T* gdst = grad_out.data() + nc * in.plane() * factor * factor;
    for (std::size_t y = 0; y < in.h * factor; ++y) {
      T* srow = gsrc + (y / factor) * in.w;
      const T* drow = gdst + y * ow;
      for (std::size_t x = 0; x < ow; ++x) srow[x / factor] += drow[x];
    }
  }
}

// Mean absolute difference. Accumulated in double regardless of T.
template <typename T>
T l1_mean(const Tensor4<T>& a, const Tensor4<T>& b) {
  require_same_shape(a.shape(), b.shape(), "l1_mean");
  if (a.empty()) throw DimensionError("l1_mean of empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  }
  return static_cast<T>(acc / static_cast<double>(a.size()));
}

// d l1_mean / d a = sign(a - b) / N (0 where equal); d/d b is the negation.
template <typename T>
void l1_mean_backward(const Tensor4<T>& a, const Tensor4<T>& b, T grad_out,
                      Tensor4<T>* grad_a, Tensor4<T>* grad_b) {
  const T scale = grad_out / static_cast<T>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T d = a[i] - b[i];
    const T sgn = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
    if (grad_a) (*grad_a)[i] += sgn * scale;
    if (grad_b) (*grad_b)[i] -= sgn * scale;
  }
}

}  // namespace priorvqa
