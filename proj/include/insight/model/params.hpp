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

#include <array>
#include <cmath>
#include <random>
#include <string>

#include "insight/model/config.hpp"
#include "insight/ops.hpp"

namespace insight {

/// Three convolutions with GELU + layer norm between them:
/// conv0 -> gelu -> norm0 -> conv1 -> gelu -> norm1 -> conv2.
template <Real T>
struct ConvStack {
  std::array<ConvLayer<T>, 3> conv;
  std::array<LayerNorm<T>, 2> norm;

  ConvStack() = default;
  ConvStack(std::size_t in_ch, std::size_t hidden, std::size_t out_ch, std::size_t k)
      : conv{ConvLayer<T>(in_ch, hidden, k), ConvLayer<T>(hidden, hidden, k), ConvLayer<T>(hidden, out_ch, k)},
        norm{LayerNorm<T>(hidden), LayerNorm<T>(hidden)} {}

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    for (std::size_t i = 0; i < 3; ++i) {
      const std::string p = prefix + ".conv" + std::to_string(i);
      f(p + ".kernel", conv[i].kernel);
      f(p + ".bias", conv[i].bias);
      if (i < 2) {
        const std::string n = prefix + ".norm" + std::to_string(i);
        f(n + ".gain", norm[i].gain);
        f(n + ".shift", norm[i].shift);
      }
    }
  }
};

/// Every learnable tensor of the network, each paired with its gradient buffer.
template <Real T>
struct ModelParams {
  ConvLayer<T> projection;
  ConvStack<T> detection;
  ConvStack<T> context;

  ModelParams() = default;

  /// Zero kernels and biases, unit layer-norm gains.
  explicit ModelParams(const ModelConfig& cfg)
      : projection(cfg.embed_dim, cfg.proj_dim, 1),
        detection(cfg.proj_dim, cfg.hidden_dim, cfg.num_labels, cfg.detection_kernel),
        context(cfg.proj_dim, cfg.hidden_dim, cfg.num_labels, cfg.context_kernel) {
    cfg.validate();
  }

  /// Visits (name, GradPair&) in a fixed order shared by the optimizer,
  /// checkpoint format and gradient checks.
  template <typename F>
  void visit(F&& f) {
    f(std::string("projection.kernel"), projection.kernel);
    f(std::string("projection.bias"), projection.bias);
    detection.visit("detection", f);
    context.visit("context", f);
  }

  template <typename F>
  void visit(F&& f) const {
    const_cast<ModelParams*>(this)->visit([&](const std::string& name, GradPair<T>& p) {
      f(name, static_cast<const GradPair<T>&>(p));
    });
  }

  void zero_grad() {
    visit([](const std::string&, GradPair<T>& p) { p.zero_grad(); });
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    visit([&](const std::string&, const GradPair<T>& p) { n += p.size(); });
    return n;
  }

  template <Real U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    out.projection = cast_layer<U>(projection);
    out.detection = cast_stack<U>(detection);
    out.context = cast_stack<U>(context);
    return out;
  }

 private:
  template <Real U>
  static GradPair<U> cast_pair(const GradPair<T>& p) {
    return GradPair<U>(Tensor<U>::cast(p.value));
  }
  template <Real U>
  static ConvLayer<U> cast_layer(const ConvLayer<T>& l) {
    ConvLayer<U> out;
    out.kernel = cast_pair<U>(l.kernel);
    out.bias = cast_pair<U>(l.bias);
    out.padding = l.padding;
    return out;
  }
  template <Real U>
  static ConvStack<U> cast_stack(const ConvStack<T>& s) {
    ConvStack<U> out;
    for (std::size_t i = 0; i < 3; ++i) out.conv[i] = cast_layer<U>(s.conv[i]);
    for (std::size_t i = 0; i < 2; ++i) {
      out.norm[i].gain = cast_pair<U>(s.norm[i].gain);
      out.norm[i].shift = cast_pair<U>(s.norm[i].shift);
    }
    return out;
  }
};

/// Closed-form parameter count for a configuration.
inline std::size_t expected_parameter_count(const ModelConfig& c) {
  auto conv = [](std::size_t in, std::size_t out, std::size_t k) { return out * in * k * k + out; };
  auto stack = [&](std::size_t k) {
    return conv(c.proj_dim, c.hidden_dim, k) + conv(c.hidden_dim, c.hidden_dim, k) +
           conv(c.hidden_dim, c.num_labels, k) + 4 * c.hidden_dim;
  };
  return conv(c.embed_dim, c.proj_dim, 1) + stack(c.detection_kernel) + stack(c.context_kernel);
}

/// Fan-in scaled uniform kernels in [-sqrt(1/fan_in), sqrt(1/fan_in)], zero
/// biases, layer-norm gain 1 and shift 0.
template <Real T>
ModelParams<T> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams<T> params(cfg);
  std::mt19937_64 rng(seed);
  params.visit([&](const std::string& name, GradPair<T>& p) {
    if (!name.ends_with(".kernel")) return;
    const auto& s = p.value.shape();
    const double fan_in = static_cast<double>(s[1] * s[2] * s[3]);
    std::uniform_real_distribution<double> dist(-std::sqrt(1.0 / fan_in), std::sqrt(1.0 / fan_in));
    for (auto& v : p.value.data()) v = static_cast<T>(dist(rng));
  });
  return params;
}

}  // namespace insight
