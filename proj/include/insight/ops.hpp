/*
 * Copyright 2026 The Insight Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Differentiable primitives with hand-written backward passes. Feature maps are
// rank-3 tensors (channels x height x width); convolutions are stride 1 with
// same-padding so spatial extents never change.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <type_traits>

#include "insight/tensor.hpp"

namespace insight {

template <Real T>
struct ConvLayer {
  GradPair<T> kernel;  // out_ch x in_ch x k x k
  GradPair<T> bias;    // out_ch
  std::size_t padding = 0;

  ConvLayer() = default;

  ConvLayer(std::size_t in_ch, std::size_t out_ch, std::size_t k)
      : kernel(Tensor<T>({out_ch, in_ch, k, k})), bias(Tensor<T>({out_ch})) {
    if (k % 2 == 0) throw ConfigError("convolution kernel size must be odd, got " + std::to_string(k));
    padding = (k - 1) / 2;
  }

  std::size_t in_channels() const { return kernel.value.dim(1); }
  std::size_t out_channels() const { return kernel.value.dim(0); }
  std::size_t kernel_size() const { return kernel.value.dim(2); }

  void zero_grad() {
    kernel.zero_grad();
    bias.zero_grad();
  }
};

namespace detail {

inline void require_feature_map(std::size_t rank, const char* where) {
  if (rank != 3) throw DimensionError(std::string(where) + ": expected a rank-3 feature map");
}

template <Real T>
void check_conv(const Tensor<T>& input, const ConvLayer<T>& layer) {
  require_feature_map(input.rank(), "conv2d");
  const auto& ks = layer.kernel.value.shape();
  if (ks.size() != 4 || ks[2] != ks[3]) throw DimensionError("conv2d: kernel must be out x in x k x k");
  if (ks[2] % 2 == 0) throw ConfigError("conv2d: kernel size must be odd");
  if (input.dim(0) != ks[1]) {
    throw DimensionError("conv2d: input has " + std::to_string(input.dim(0)) +
                         " channels, kernel expects " + std::to_string(ks[1]));
  }
  if (layer.bias.value.size() != ks[0]) throw DimensionError("conv2d: bias length != out channels");
}

// Unfolds a c x h x w map into a (c*k*k) x (h*w) column matrix with zero
// padding, so a convolution becomes a dense matrix product.
template <Real T>
std::vector<T> im2col(const Tensor<T>& input, std::size_t k, std::size_t pad) {
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2), hw = h * w;
  std::vector<T> col(cin * k * k * hw, T(0));
  const auto sh = static_cast<std::ptrdiff_t>(h), sw = static_cast<std::ptrdiff_t>(w);
  for (std::size_t i = 0; i < cin; ++i) {
    const T* ip = input.data().data() + i * hw;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* row = col.data() + ((i * k + ky) * k + kx) * hw;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - static_cast<std::ptrdiff_t>(pad);
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(pad);
        for (std::ptrdiff_t y = 0; y < sh; ++y) {
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= sh) continue;
          for (std::ptrdiff_t x = 0; x < sw; ++x) {
            const std::ptrdiff_t sx = x + dx;
            if (sx >= 0 && sx < sw) row[y * sw + x] = ip[sy * sw + sx];
          }
        }
      }
    }
  }
  return col;
}

// Adds a (c*k*k) x (h*w) column-gradient matrix back onto a c x h x w map.
template <Real T>
void col2im_add(std::span<const T> col, std::size_t k, std::size_t pad, Tensor<T>& out) {
  const std::size_t cin = out.dim(0), h = out.dim(1), w = out.dim(2), hw = h * w;
  const auto sh = static_cast<std::ptrdiff_t>(h), sw = static_cast<std::ptrdiff_t>(w);
  for (std::size_t i = 0; i < cin; ++i) {
    T* op = out.data().data() + i * hw;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* row = col.data() + ((i * k + ky) * k + kx) * hw;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - static_cast<std::ptrdiff_t>(pad);
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(pad);
        for (std::ptrdiff_t y = 0; y < sh; ++y) {
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= sh) continue;
          for (std::ptrdiff_t x = 0; x < sw; ++x) {
            const std::ptrdiff_t sx = x + dx;
            if (sx >= 0 && sx < sw) op[sy * sw + sx] += row[y * sw + x];
          }
        }
      }
    }
  }
}

}  // namespace detail

template <Real T>
Tensor<T> conv2d(const Tensor<T>& input, const ConvLayer<T>& layer) {
  detail::check_conv(input, layer);
  const std::size_t h = input.dim(1), w = input.dim(2), hw = h * w;
  const std::size_t cout = layer.out_channels(), k = layer.kernel_size();
  const std::size_t taps = input.dim(0) * k * k;
  std::vector<T> unfolded;
  const T* col = input.data().data();
  if (k > 1) {
    unfolded = detail::im2col(input, k, layer.padding);
    col = unfolded.data();
  }
  const T* kern = layer.kernel.value.data().data();
  Tensor<T> out({cout, h, w});
  for (std::size_t o = 0; o < cout; ++o) {
    T* op = out.data().data() + o * hw;
    std::fill(op, op + hw, layer.bias.value[o]);
    for (std::size_t j = 0; j < taps; ++j) {
      const T wgt = kern[o * taps + j];
      const T* row = col + j * hw;
      for (std::size_t s = 0; s < hw; ++s) op[s] += wgt * row[s];
    }
  }
  return out;
}

/// Accumulates kernel and bias gradients into `layer`; when `grad_input` is
/// non-null it is overwritten with dL/d(input).
template <Real T>
void conv2d_backward(const Tensor<T>& input, ConvLayer<T>& layer, const Tensor<T>& grad_out,
                     std::type_identity_t<Tensor<T>>* grad_input) {
  detail::check_conv(input, layer);
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2), hw = h * w;
  const std::size_t cout = layer.out_channels(), k = layer.kernel_size();
  if (grad_out.shape() != std::vector<std::size_t>{cout, h, w}) {
    throw DimensionError("conv2d_backward: grad_out shape mismatch");
  }
  const std::size_t taps = cin * k * k;
  std::vector<T> unfolded;
  const T* col = input.data().data();
  if (k > 1) {
    unfolded = detail::im2col(input, k, layer.padding);
    col = unfolded.data();
  }
  const T* kern = layer.kernel.value.data().data();
  T* kgrad = layer.kernel.grad.data().data();
  const T* gout = grad_out.data().data();
  for (std::size_t o = 0; o < cout; ++o) {
    const T* gp = gout + o * hw;
    T bsum = 0;
    for (std::size_t s = 0; s < hw; ++s) bsum += gp[s];
    layer.bias.grad[o] += bsum;
    for (std::size_t j = 0; j < taps; ++j) {
      const T* row = col + j * hw;
      T acc = 0;
      for (std::size_t s = 0; s < hw; ++s) acc += gp[s] * row[s];
      kgrad[o * taps + j] += acc;
    }
  }
  if (!grad_input) return;
  std::vector<T> gcol(taps * hw, T(0));
  for (std::size_t o = 0; o < cout; ++o) {
    const T* gp = gout + o * hw;
    for (std::size_t j = 0; j < taps; ++j) {
      const T wgt = kern[o * taps + j];
      T* row = gcol.data() + j * hw;
      for (std::size_t s = 0; s < hw; ++s) row[s] += wgt * gp[s];
    }
  }
  if (k == 1) {
    *grad_input = Tensor<T>({cin, h, w}, std::move(gcol));
  } else {
    *grad_input = Tensor<T>({cin, h, w});
    detail::col2im_add(std::span<const T>(gcol), k, layer.padding, *grad_input);
  }
}

// GELU, tanh approximation.
template <Real T>
T gelu(T x) {
  constexpr T kC = T(0.7978845608028654);  // sqrt(2/pi)
  const T u = kC * (x + T(0.044715) * x * x * x);
  return T(0.5) * x * (T(1) + std::tanh(u));
}

template <Real T>
T gelu_derivative(T x) {
  constexpr T kC = T(0.7978845608028654);
  const T x2 = x * x;
  const T t = std::tanh(kC * (x + T(0.044715) * x2 * x));
  return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * kC * (T(1) + T(3) * T(0.044715) * x2);
}

/// Elementwise GELU. When `derivative` is non-null it receives gelu'(x), which
/// gelu_backward_from_derivative consumes without recomputing tanh.
template <Real T>
Tensor<T> gelu(const Tensor<T>& x, Tensor<T>* derivative = nullptr) {
  constexpr T kC = T(0.7978845608028654);
  Tensor<T> out = x;
  if (derivative) *derivative = Tensor<T>(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = x[i];
    const T x2 = v * v;
    const T t = std::tanh(kC * (v + T(0.044715) * x2 * v));
    out[i] = T(0.5) * v * (T(1) + t);
    if (derivative) {
      (*derivative)[i] = T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * kC * (T(1) + T(3) * T(0.044715) * x2);
    }
  }
  return out;
}

template <Real T>
Tensor<T> gelu_backward_from_derivative(const Tensor<T>& derivative, const Tensor<T>& grad_out) {
  Tensor<T>::require_same_shape(derivative, grad_out, "gelu_backward");
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= derivative[i];
  return g;
}

/// grad_in = grad_out * gelu'(x)
template <Real T>
Tensor<T> gelu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  Tensor<T>::require_same_shape(x, grad_out, "gelu_backward");
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= gelu_derivative(x[i]);
  return g;
}

/// Numerically stable logistic function, clamped so the result stays strictly
/// inside (0, 1) for every finite input.
template <Real T>
T sigmoid(T x) {
  T s;
  if (x >= 0) {
    s = T(1) / (T(1) + std::exp(-x));
  } else {
    const T e = std::exp(x);
    s = e / (T(1) + e);
  }
  constexpr T lo = std::numeric_limits<T>::min();
  constexpr T hi = T(1) - std::numeric_limits<T>::epsilon() / 2;
  return std::clamp(s, lo, hi);
}

template <Real T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> out = x;
  for (auto& v : out.data()) v = sigmoid(v);
  return out;
}

/// Backward from the forward output s = sigmoid(x): grad_in = grad_out * s(1-s).
template <Real T>
Tensor<T> sigmoid_backward(const Tensor<T>& s, const Tensor<T>& grad_out) {
  Tensor<T>::require_same_shape(s, grad_out, "sigmoid_backward");
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= s[i] * (T(1) - s[i]);
  return g;
}

inline constexpr double kLayerNormEpsilon = 1e-5;

template <Real T>
struct LayerNorm {
  GradPair<T> gain;   // c
  GradPair<T> shift;  // c

  LayerNorm() = default;
  explicit LayerNorm(std::size_t channels)
      : gain(Tensor<T>({channels}, T(1))), shift(Tensor<T>({channels})) {}

  void zero_grad() {
    gain.zero_grad();
    shift.zero_grad();
  }
};

/// Saved state of a layer-norm forward pass.
template <Real T>
struct LayerNormCache {
  Tensor<T> normalized;          // pre-affine output, c x h x w
  std::vector<T> inv_std;        // per spatial site
};

/// Normalizes over the channel axis independently at every spatial site.
template <Real T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& shift,
                     LayerNormCache<T>* cache = nullptr) {
  detail::require_feature_map(x.rank(), "layer_norm");
  const std::size_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  if (gain.size() != c || shift.size() != c) throw DimensionError("layer_norm: affine length != channels");
  Tensor<T> out(x.shape());
  Tensor<T> norm(x.shape());
  std::vector<T> inv_std(hw);
  const T eps = T(kLayerNormEpsilon);
  for (std::size_t s = 0; s < hw; ++s) {
    T mean = 0;
    for (std::size_t ch = 0; ch < c; ++ch) mean += x[ch * hw + s];
    mean /= T(c);
    T var = 0;
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T d = x[ch * hw + s] - mean;
      var += d * d;
    }
    var /= T(c);
    const T is = T(1) / std::sqrt(var + eps);
    inv_std[s] = is;
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T n = (x[ch * hw + s] - mean) * is;
      norm[ch * hw + s] = n;
      out[ch * hw + s] = gain[ch] * n + shift[ch];
    }
  }
  if (cache) {
    cache->normalized = std::move(norm);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

template <Real T>
Tensor<T> layer_norm(const Tensor<T>& x, LayerNorm<T>& ln, LayerNormCache<T>* cache = nullptr) {
  return layer_norm(x, ln.gain.value, ln.shift.value, cache);
}

/// Accumulates gain/shift gradients into `ln` and returns dL/dx.
template <Real T>
Tensor<T> layer_norm_backward(const LayerNormCache<T>& cache, LayerNorm<T>& ln,
                              const Tensor<T>& grad_out) {
  const auto& xhat = cache.normalized;
  Tensor<T>::require_same_shape(xhat, grad_out, "layer_norm_backward");
  const std::size_t c = xhat.dim(0), hw = xhat.dim(1) * xhat.dim(2);
  const auto& gain = ln.gain.value;
  Tensor<T> gx(xhat.shape());
  std::vector<T> dxhat(c);
  for (std::size_t s = 0; s < hw; ++s) {
    T mean_d = 0, mean_dx = 0;
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t idx = ch * hw + s;
      const T g = grad_out[idx];
      ln.gain.grad[ch] += g * xhat[idx];
      ln.shift.grad[ch] += g;
      dxhat[ch] = g * gain[ch];
      mean_d += dxhat[ch];
      mean_dx += dxhat[ch] * xhat[idx];
    }
    mean_d /= T(c);
    mean_dx /= T(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t idx = ch * hw + s;
      gx[idx] = cache.inv_std[s] * (dxhat[ch] - mean_d - xhat[idx] * mean_dx);
    }
  }
  return gx;
}

}  // namespace insight
