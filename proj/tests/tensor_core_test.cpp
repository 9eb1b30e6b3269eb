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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

namespace insight {
namespace {

using testing::random_tensor;

TEST(Tensor, RejectsBadShapes) {
  EXPECT_THROW(Tensor<float>(std::vector<std::size_t>{}), DimensionError);
  EXPECT_THROW(Tensor<float>({1, 1, 1, 1, 1}), DimensionError);
  EXPECT_THROW(Tensor<float>({2, 0}), DimensionError);
  EXPECT_THROW(Tensor<float>({2, 2}, std::vector<float>(3)), DimensionError);
}

TEST(Tensor, IndexingIsRowMajor) {
  Tensor<double> t({2, 3, 4});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  EXPECT_EQ(t.at(1, 2, 3), 23.0);
  EXPECT_EQ(t.slice(1)[0], 12.0);
  EXPECT_EQ(t.slice(1).size(), 12u);
}

TEST(Tensor, CastAndCompare) {
  Tensor<double> t({2, 2}, std::vector<double>{0.5, -1, 2, 3});
  auto f = Tensor<float>::cast(t);
  EXPECT_EQ(Tensor<double>::cast(f), t);
  Tensor<double> u = t;
  u += t;
  u *= 0.5;
  EXPECT_EQ(u, t);
  EXPECT_THROW(Tensor<double>::require_same_shape(t, Tensor<double>({4}), "test"), DimensionError);
}

// ---------------------------------------------------------------- conv2d

TEST(Conv2d, IdentityKernel) {
  std::mt19937_64 rng(1);
  ConvLayer<double> layer(1, 1, 1);
  layer.kernel.value[0] = 1;
  auto x = random_tensor({1, 5, 4}, rng);
  EXPECT_EQ(conv2d(x, layer), x);
}

TEST(Conv2d, OnesKernelCountsNeighbours) {
  ConvLayer<double> layer(1, 1, 3);
  layer.kernel.value.fill(1);
  Tensor<double> x({1, 3, 3}, 1.0);
  auto y = conv2d(x, layer);
  EXPECT_EQ(y.at(0, 1, 1), 9);
  EXPECT_EQ(y.at(0, 0, 1), 6);
  EXPECT_EQ(y.at(0, 1, 0), 6);
  EXPECT_EQ(y.at(0, 0, 0), 4);
  EXPECT_EQ(y.at(0, 2, 2), 4);
}

TEST(Conv2d, RejectsEvenKernelAndChannelMismatch) {
  EXPECT_THROW(ConvLayer<double>(1, 1, 2), ConfigError);
  ConvLayer<double> layer(2, 1, 3);
  EXPECT_THROW(conv2d(Tensor<double>({3, 4, 4}), layer), DimensionError);
  EXPECT_THROW(conv2d(Tensor<double>({4, 4}), layer), DimensionError);
}

TEST(Conv2d, MatchesDirectSum) {
  std::mt19937_64 rng(2);
  ConvLayer<double> layer(2, 3, 3);
  layer.kernel.value = random_tensor({3, 2, 3, 3}, rng);
  layer.bias.value = random_tensor({3}, rng);
  auto x = random_tensor({2, 4, 5}, rng);
  auto y = conv2d(x, layer);
  for (std::size_t o = 0; o < 3; ++o) {
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 5; ++c) {
        double s = layer.bias.value[o];
        for (std::size_t i = 0; i < 2; ++i) {
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int yy = static_cast<int>(r) + dy, xx = static_cast<int>(c) + dx;
              if (yy < 0 || yy >= 4 || xx < 0 || xx >= 5) continue;
              s += layer.kernel.value[((o * 2 + i) * 3 + (dy + 1)) * 3 + (dx + 1)] * x.at(i, yy, xx);
            }
          }
        }
        EXPECT_NEAR(y.at(o, r, c), s, 1e-12);
      }
    }
  }
}

TEST(Conv2d, LinearInInputAndKernel) {
  std::mt19937_64 rng(3);
  for (std::size_t k : {1u, 3u}) {
    ConvLayer<double> layer(2, 2, k);
    layer.kernel.value = random_tensor({2, 2, k, k}, rng);
    auto x = random_tensor({2, 5, 5}, rng);
    const double a = 2.75;
    Tensor<double> ax = x;
    ax *= a;
    auto lhs = conv2d(ax, layer);
    auto rhs = conv2d(x, layer);
    rhs *= a;
    for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-6);
    ConvLayer<double> scaled = layer;
    scaled.kernel.value *= a;
    auto lk = conv2d(x, scaled);
    for (std::size_t i = 0; i < lk.size(); ++i) EXPECT_NEAR(lk[i], rhs[i], 1e-6);
  }
}

TEST(Conv2d, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  ConvLayer<double> layer(2, 2, 3);
  layer.kernel.value = random_tensor({2, 2, 3, 3}, rng);
  layer.bias.value = random_tensor({2}, rng);
  auto x = random_tensor({2, 5, 5}, rng);
  auto w = random_tensor({2, 5, 5}, rng);  // loss = <w, conv(x)>
  auto loss = [&](const Tensor<double>& in, const ConvLayer<double>& l) {
    auto y = conv2d(in, l);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
    return s;
  };
  Tensor<double> gx;
  conv2d_backward(x, layer, w, &gx);
  auto nx = finite_difference_gradient([&](const Tensor<double>& v) { return loss(v, layer); }, x, 1e-5);
  EXPECT_TRUE(compare_gradients(gx.data(), nx.data()).ok());
  auto nk = finite_difference_gradient(
      [&](const Tensor<double>& v) {
        auto l = layer;
        l.kernel.value = v;
        return loss(x, l);
      },
      layer.kernel.value, 1e-5);
  EXPECT_TRUE(compare_gradients(layer.kernel.grad.data(), nk.data()).ok());
  auto nb = finite_difference_gradient(
      [&](const Tensor<double>& v) {
        auto l = layer;
        l.bias.value = v;
        return loss(x, l);
      },
      layer.bias.value, 1e-5);
  EXPECT_TRUE(compare_gradients(layer.bias.grad.data(), nb.data()).ok());
}

// ---------------------------------------------------------------- gelu / sigmoid

TEST(Gelu, KnownValues) {
  EXPECT_EQ(gelu(0.0), 0.0);
  EXPECT_NEAR(gelu(10.0), 10.0, 1e-6);
  EXPECT_NEAR(gelu(-10.0), 0.0, 1e-6);
}

TEST(Gelu, DerivativeMatchesFiniteDifferences) {
  for (double x : {-3.0, -1.2, -0.3, 0.0, 0.4, 1.1, 2.5, 5.0}) {
    const double fd = (gelu(x + 1e-5) - gelu(x - 1e-5)) / 2e-5;
    const double an = gelu_derivative(x);
    EXPECT_LT(std::abs(fd - an), 1e-5 * std::max(1.0, std::abs(an))) << x;
  }
  std::mt19937_64 rng(5);
  auto x = random_tensor({2, 3, 3}, rng, -3, 3);
  auto g = random_tensor({2, 3, 3}, rng);
  Tensor<double> deriv;
  gelu(x, &deriv);
  EXPECT_EQ(gelu_backward(x, g), gelu_backward_from_derivative(deriv, g));
}

TEST(Sigmoid, KnownValues) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(2.0), 0.880797, 1e-6);
  const double tiny = sigmoid(-1000.0);
  EXPECT_FALSE(std::isnan(tiny));
  EXPECT_GT(tiny, 0.0);
  EXPECT_LE(tiny, 1e-300);
}

TEST(Sigmoid, StrictlyInsideUnitInterval) {
  for (double x : {-1e308, -745.0, -50.0, 0.0, 37.0, 50.0, 1000.0, 1e308}) {
    EXPECT_GT(sigmoid(x), 0.0) << x;
    EXPECT_LT(sigmoid(x), 1.0) << x;
    EXPECT_GT(sigmoid(static_cast<float>(x)), 0.0f) << x;
    EXPECT_LT(sigmoid(static_cast<float>(x)), 1.0f) << x;
  }
}

TEST(Sigmoid, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  auto x = random_tensor({1, 3, 4}, rng, -4, 4);
  auto w = random_tensor({1, 3, 4}, rng);
  auto g = sigmoid_backward(sigmoid(x), w);
  auto n = finite_difference_gradient(
      [&](const Tensor<double>& v) {
        auto s = sigmoid(v);
        double acc = 0;
        for (std::size_t i = 0; i < s.size(); ++i) acc += w[i] * s[i];
        return acc;
      },
      x, 1e-5);
  EXPECT_TRUE(compare_gradients(g.data(), n.data()).ok());
}

// ---------------------------------------------------------------- layer norm

TEST(LayerNorm, ConstantInputGivesZero) {
  LayerNorm<double> ln(4);
  Tensor<double> x({4, 2, 2}, 3.25);
  auto y = layer_norm(x, ln);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, UnitVariancePairPreserved) {
  LayerNorm<double> ln(2);
  Tensor<double> x({2, 1, 3});
  for (std::size_t s = 0; s < 3; ++s) {
    x.at(0, 0, s) = -1;
    x.at(1, 0, s) = 1;
  }
  auto y = layer_norm(x, ln);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_NEAR(y.at(0, 0, s), -1.0, 1e-5);
    EXPECT_NEAR(y.at(1, 0, s), 1.0, 1e-5);
  }
}

TEST(LayerNorm, ShiftInvariantPerSite) {
  std::mt19937_64 rng(7);
  LayerNorm<double> ln(5);
  ln.gain.value = random_tensor({5}, rng, 0.5, 1.5);
  ln.shift.value = random_tensor({5}, rng);
  auto x = random_tensor({5, 3, 3}, rng);
  auto shifted = x;
  for (std::size_t s = 0; s < 9; ++s) {
    const double k = static_cast<double>(s) * 1.7 - 4;
    for (std::size_t c = 0; c < 5; ++c) shifted[c * 9 + s] += k;
  }
  auto a = layer_norm(x, ln), b = layer_norm(shifted, ln);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-5);
}

TEST(LayerNorm, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(8);
  LayerNorm<double> ln(4);
  ln.gain.value = random_tensor({4}, rng, 0.5, 1.5);
  ln.shift.value = random_tensor({4}, rng);
  auto x = random_tensor({4, 2, 3}, rng);
  auto w = random_tensor({4, 2, 3}, rng);
  auto loss = [&](const Tensor<double>& in, const Tensor<double>& gain, const Tensor<double>& shift) {
    auto y = layer_norm(in, gain, shift);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
    return s;
  };
  LayerNormCache<double> cache;
  layer_norm(x, ln, &cache);
  auto gx = layer_norm_backward(cache, ln, w);
  auto nx = finite_difference_gradient([&](const Tensor<double>& v) { return loss(v, ln.gain.value, ln.shift.value); },
                                       x, 1e-5);
  auto ng = finite_difference_gradient([&](const Tensor<double>& v) { return loss(x, v, ln.shift.value); },
                                       ln.gain.value, 1e-5);
  auto ns = finite_difference_gradient([&](const Tensor<double>& v) { return loss(x, ln.gain.value, v); },
                                       ln.shift.value, 1e-5);
  EXPECT_TRUE(compare_gradients(gx.data(), nx.data()).ok());
  EXPECT_TRUE(compare_gradients(ln.gain.grad.data(), ng.data()).ok());
  EXPECT_TRUE(compare_gradients(ln.shift.grad.data(), ns.data()).ok());
}

// ---------------------------------------------------------------- gradient checker

TEST(GradCheck, LinearAndQuadratic) {
  std::mt19937_64 rng(9);
  auto x = random_tensor({7}, rng);
  auto g = finite_difference_gradient(
      [](const Tensor<double>& v) {
        double s = 0;
        for (double e : v.data()) s += e;
        return s;
      },
      x, 1e-5);
  for (double v : g.data()) EXPECT_NEAR(v, 1.0, 1e-9);
  auto q = finite_difference_gradient(
      [](const Tensor<double>& v) {
        double s = 0;
        for (double e : v.data()) s += e * e / 2;
        return s;
      },
      x, 1e-5);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(q[i], x[i], 1e-9);
}

TEST(GradCheck, NonFiniteFunctionIsOracleError) {
  Tensor<double> x({2}, 1.0);
  EXPECT_THROW(finite_difference_gradient([](const Tensor<double>&) { return std::nan(""); }, x, 1e-5), OracleError);
}

TEST(GradCheck, ToleranceRules) {
  const std::vector<double> a{1.0, 0.0, 1e-9}, b{1.00001, 5e-9, 0.0};
  auto r = compare_gradients(a, b);
  EXPECT_TRUE(r.ok());
  const std::vector<double> c{1.0}, d{1.01};
  EXPECT_FALSE(compare_gradients(c, d).ok());
}

}  // namespace
}  // namespace insight
