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

#include <algorithm>
#include <cmath>
#include <random>

#include "support.hpp"

namespace insight {
namespace {

using testing::random_bag;
using testing::random_params;
using testing::random_tensor;
using testing::random_values;
using testing::tiny_config;

using Coords = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

// ---------------------------------------------------------------- config

TEST(ModelConfig, ValidatesAndRoundTrips) {
  ModelConfig c;
  EXPECT_NO_THROW(c.validate());
  c.alpha = 3.5;
  c.pooling_mode = PoolingMode::kLp;
  c.context_enabled = false;
  ModelConfig back = nlohmann::json(c).get<ModelConfig>();
  EXPECT_EQ(back, c);
  ModelConfig bad;
  bad.detection_kernel = 2;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ModelConfig{};
  bad.alpha = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ModelConfig{};
  bad.pooling_mode = PoolingMode::kLp;
  bad.lp_p = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(parse_pooling_mode("mean"), ConfigError);
}

TEST(ModelParams, CountMatchesClosedForm) {
  for (std::size_t labels : {1u, 3u}) {
    ModelConfig c = tiny_config(labels);
    c.hidden_dim = 5;
    EXPECT_EQ(init_params<float>(c, 1).parameter_count(), expected_parameter_count(c));
  }
  ModelConfig d;  // 1024 -> 128, hidden 64, one label, kernels 1 and 3
  EXPECT_EQ(expected_parameter_count(d), 1024u * 128 + 128 + (128 * 64 + 64) + (64 * 64 + 64) + (64 + 1) + 4 * 64 +
                                             (128 * 64 * 9 + 64) + (64 * 64 * 9 + 64) + (64 * 9 + 1) + 4 * 64);
}

// ---------------------------------------------------------------- projection and stacks

TEST(Projection, IdentityBlockAndZero) {
  ModelConfig c = tiny_config(1);
  c.embed_dim = 4;
  c.proj_dim = 2;
  ModelParams<double> p(c);
  std::mt19937_64 rng(1);
  auto x = random_tensor({4, 3, 3}, rng);
  EXPECT_EQ(project(x, p), Tensor<double>({2, 3, 3}));
  for (std::size_t i = 0; i < 2; ++i) p.projection.kernel.value[i * 4 + i] = 1;
  auto y = project(x, p);
  for (std::size_t i = 0; i < 18; ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Projection, KernelGradientMatchesFiniteDifferences) {
  ModelConfig c = tiny_config(1);
  std::mt19937_64 rng(2);
  auto p = random_params(c, rng);
  auto x = random_tensor({3, 3, 3}, rng);
  auto w = random_tensor({2, 3, 3}, rng);
  auto loss = [&](const ModelParams<double>& q) {
    auto y = project(x, q);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
    return s;
  };
  p.zero_grad();
  conv2d_backward(x, p.projection, w, nullptr);
  auto n = finite_difference_gradient(
      [&](const Tensor<double>& v) {
        auto q = p;
        q.projection.kernel.value = v;
        return loss(q);
      },
      p.projection.kernel.value, 1e-5);
  EXPECT_TRUE(compare_gradients(p.projection.kernel.grad.data(), n.data()).ok());
}

TEST(Stack, ZeroInitialisedGivesZeroMap) {
  ModelConfig c = tiny_config(2);
  ModelParams<double> p(c);
  std::mt19937_64 rng(3);
  auto x = random_tensor({2, 4, 4}, rng);
  const auto det = detection_forward(x, p), con = context_forward(x, p);
  for (double v : det.values.data()) EXPECT_EQ(v, 0.0);
  for (double v : con.values.data()) EXPECT_EQ(v, 0.0);
}

TEST(Stack, MatchesCompositionalReplay) {
  ModelConfig c = tiny_config(2);
  std::mt19937_64 rng(4);
  auto p = random_params(c, rng);
  auto x = random_tensor({2, 5, 5}, rng);
  for (auto* stack : {&p.detection, &p.context}) {
    auto h = conv2d(x, stack->conv[0]);
    h = layer_norm(gelu(h), stack->norm[0]);
    h = conv2d(h, stack->conv[1]);
    h = layer_norm(gelu(h), stack->norm[1]);
    h = conv2d(h, stack->conv[2]);
    EXPECT_EQ(stack_forward(*stack, x), h);
  }
}

TEST(Stack, SingleByOneLayerIsPerPixelLinear) {
  std::mt19937_64 rng(5);
  ConvLayer<double> l(2, 1, 1);
  l.kernel.value = random_tensor({1, 2, 1, 1}, rng);
  l.bias.value[0] = 0.3;
  auto x = random_tensor({2, 3, 4}, rng);
  auto y = conv2d(x, l);
  for (std::size_t s = 0; s < 12; ++s) {
    EXPECT_NEAR(y[s], l.kernel.value[0] * x[s] + l.kernel.value[1] * x[12 + s] + 0.3, 1e-14);
  }
}

TEST(Stack, ContextIsTranslationEquivariantInTheInterior) {
  ModelConfig c = tiny_config(1);
  std::mt19937_64 rng(6);
  auto p = random_params(c, rng);
  const std::size_t n = 12;
  auto x = random_tensor({2, n, n}, rng);
  Tensor<double> shifted({2, n, n});
  for (std::size_t ch = 0; ch < 2; ++ch) {
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t xx = 1; xx < n; ++xx) shifted.at(ch, y, xx) = x.at(ch, y, xx - 1);
    }
  }
  auto a = context_forward(x, p).values, b = context_forward(shifted, p).values;
  // Three 3x3 layers: radius 3. Stay that far from every border.
  for (std::size_t y = 3; y + 3 < n; ++y) {
    for (std::size_t xx = 4; xx + 3 < n; ++xx) EXPECT_NEAR(b.at(0, y, xx), a.at(0, y, xx - 1), 1e-12);
  }
}

TEST(Stack, ReceptiveFieldRadius) {
  ModelConfig c = tiny_config(1);
  std::mt19937_64 rng(7);
  auto p = random_params(c, rng);
  const std::size_t n = 11, cy = 5, cx = 5;
  auto x = random_tensor({2, n, n}, rng);
  auto probe = x;
  probe.at(0, cy, cx) += 0.75;
  for (int radius : {0, 3}) {
    const auto& stack = radius == 0 ? p.detection : p.context;
    auto a = stack_forward(stack, x), b = stack_forward(stack, probe);
    bool changed_inside = false;
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t xx = 0; xx < n; ++xx) {
        const int d = std::max(std::abs(static_cast<int>(y) - static_cast<int>(cy)),
                               std::abs(static_cast<int>(xx) - static_cast<int>(cx)));
        if (d > radius) {
          EXPECT_EQ(a.at(0, y, xx), b.at(0, y, xx)) << radius << " " << y << "," << xx;
        } else if (a.at(0, y, xx) != b.at(0, y, xx)) {
          changed_inside = true;
        }
      }
    }
    EXPECT_TRUE(changed_inside);
  }
}

TEST(Stack, BackwardMatchesFiniteDifferences) {
  ModelConfig c = tiny_config(2);
  std::mt19937_64 rng(8);
  auto p = random_params(c, rng);
  auto x = random_tensor({2, 4, 4}, rng);
  auto w = random_tensor({2, 4, 4}, rng);
  auto loss = [&](const Tensor<double>& in) {
    auto y = stack_forward(p.context, in);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
    return s;
  };
  StackTrace<double> trace;
  stack_forward(p.context, x, &trace);
  auto g = stack_backward(p.context, trace, w);
  auto n = finite_difference_gradient(loss, x, 1e-5);
  EXPECT_TRUE(compare_gradients(g.data(), n.data()).ok());
}

// ---------------------------------------------------------------- fusion

TEST(Fuse, KnownValues) {
  Heatmap<double> det{Tensor<double>({1, 1, 3}, std::vector<double>{0, 3, 4})};
  Heatmap<double> con{Tensor<double>({1, 1, 3}, std::vector<double>{-7, 40, 0})};
  auto h = fuse(det, con);
  EXPECT_EQ(h.values[0], 0.5);
  EXPECT_NEAR(h.values[1], 0.5, 1e-12);
  EXPECT_NEAR(h.values[2], 0.880797, 1e-6);
  auto off = fuse(det, con, false);
  EXPECT_NEAR(off.values[2], sigmoid(4.0), 1e-15);
}

TEST(Fuse, RangeAndSuppressionMonotonicity) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    Heatmap<double> det{random_tensor({1, 4, 4}, rng, 1e-3, 6)};
    Heatmap<double> lo{random_tensor({1, 4, 4}, rng, -6, 6)};
    Heatmap<double> hi = lo;
    for (auto& v : hi.values.data()) v += std::uniform_real_distribution<double>(0, 3)(rng);
    auto a = fuse(det, lo), b = fuse(det, hi);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      EXPECT_GT(a.values[i], 0.0);
      EXPECT_LT(a.values[i], 1.0);
      EXPECT_LE(b.values[i], a.values[i]);
    }
  }
}

TEST(Fuse, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(10);
  Heatmap<double> det{random_tensor({2, 3, 3}, rng, -3, 3)};
  Heatmap<double> con{random_tensor({2, 3, 3}, rng, -3, 3)};
  auto w = random_tensor({2, 3, 3}, rng);
  for (bool ctx : {true, false}) {
    auto h = fuse(det, con, ctx);
    auto [gd, gc] = fuse_backward(det, con, h, w, ctx);
    auto loss = [&](const Tensor<double>& d, const Tensor<double>& cc) {
      auto f = fuse(Heatmap<double>{d}, Heatmap<double>{cc}, ctx);
      double s = 0;
      for (std::size_t i = 0; i < f.values.size(); ++i) s += w[i] * f.values[i];
      return s;
    };
    auto nd = finite_difference_gradient([&](const Tensor<double>& v) { return loss(v, con.values); }, det.values, 1e-5);
    auto nc = finite_difference_gradient([&](const Tensor<double>& v) { return loss(det.values, v); }, con.values, 1e-5);
    EXPECT_TRUE(compare_gradients(gd.data(), nd.data()).ok());
    EXPECT_TRUE(compare_gradients(gc.data(), nc.data()).ok());
  }
}

// ---------------------------------------------------------------- otsu and masking

TEST(Otsu, ConstantInputIsDegenerate) {
  std::vector<double> v(37, 0.42);
  auto r = otsu_threshold(v);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.threshold, 0.42);
  EXPECT_THROW(otsu_threshold(std::vector<double>{}), ArgumentError);
}

TEST(Otsu, TwoClusters) {
  std::vector<double> v(50, 0.1);
  v.insert(v.end(), 50, 0.9);
  auto r = otsu_threshold(v);
  EXPECT_FALSE(r.degenerate);
  EXPECT_GT(r.threshold, 0.1);
  EXPECT_LT(r.threshold, 0.9);
  auto m = apply_mask<double>(v, r.threshold);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(m[i], i < 50 ? 0.0 : 0.9);
}

TEST(Otsu, MatchesBruteForceScan) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 300;
    auto v = random_values(n, rng);
    if (trial % 3 == 0) {
      for (auto& x : v) x = x < 0.5 ? x * 0.2 : 0.7 + x * 0.3;
    }
    auto r = otsu_threshold(v);
    auto b = testing::brute_otsu(v);
    EXPECT_NEAR(r.intra_class_variance, b.within, 1e-9);
    const double bin = (*std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end())) / 256;
    EXPECT_LE(testing::brute_value_cut_within(v), r.intra_class_variance + 1e-12);
    EXPECT_NEAR(r.threshold, b.threshold, bin + 1e-12);
  }
}

TEST(Mask, ZeroesAtOrBelowThreshold) {
  const std::vector<double> h{0.2, 0.8, 0.5};
  EXPECT_EQ(apply_mask<double>(h, 0.5), (std::vector<double>{0, 0.8, 0}));
}

// ---------------------------------------------------------------- pooling

TEST(Pooling, KnownValues) {
  const std::vector<double> c(9, 0.37);
  EXPECT_NEAR(smoothmax_pool<double>(c, 8), 0.37, 1e-15);
  const std::vector<double> two{0, 1};
  EXPECT_NEAR(smoothmax_pool<double>(two, 8), std::exp(8.0) / (1 + std::exp(8.0)), 1e-12);
  EXPECT_NEAR(smoothmax_pool<double>(two, 8), 0.999665, 1e-6);
  const std::vector<double> mm{0.2, 0.8};
  EXPECT_EQ(max_pool<double>(mm), 0.8);
  const std::vector<double> half{0.5, 0.5};
  EXPECT_NEAR(lp_pool<double>(half, 2), 0.5, 1e-15);
  EXPECT_NEAR(lp_pool<double>(two, 2), std::sqrt(0.5), 1e-15);
  EXPECT_THROW(lp_pool<double>(two, 1), ConfigError);
}

TEST(Pooling, SmoothMaxLimitIsMax) {
  std::mt19937_64 rng(12);
  auto v = random_values(50, rng);
  EXPECT_NEAR(smoothmax_pool<double>(v, 1e6), *std::max_element(v.begin(), v.end()), 1e-6);
}

TEST(Pooling, SmoothMaxBoundedAndMonotoneInAlpha) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    auto v = random_values(1 + rng() % 40, rng);
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    double prev = -1;
    for (double a : {1.0, 2.0, 4.0, 8.0, 16.0}) {
      const double y = smoothmax_pool<double>(v, a);
      EXPECT_GE(y, *mn - 1e-15);
      EXPECT_LE(y, *mx + 1e-15);
      EXPECT_GE(y, prev - 1e-15);
      prev = y;
    }
  }
}

TEST(Pooling, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(14);
  auto v = random_values(12, rng, 0.05, 0.95);
  Tensor<double> x({v.size()}, v);
  auto sm = smoothmax_pool_grad<double>(v, 8);
  auto nsm = finite_difference_gradient([](const Tensor<double>& t) { return smoothmax_pool<double>(t.data(), 8); }, x,
                                        1e-5);
  EXPECT_TRUE(compare_gradients(sm, nsm.data()).ok());
  auto lp = lp_pool_grad<double>(v, 4);
  auto nlp = finite_difference_gradient([](const Tensor<double>& t) { return lp_pool<double>(t.data(), 4); }, x, 1e-5);
  EXPECT_TRUE(compare_gradients(lp, nlp.data()).ok());
}

TEST(Pooling, MaxTiesGoToFirst) {
  const std::vector<double> v{0.1, 0.9, 0.9, 0.3};
  EXPECT_EQ(argmax_index<double>(v), 1u);
}

// ---------------------------------------------------------------- stitching

TEST(Stitch, SinglePatchAndConstantGrid) {
  std::mt19937_64 rng(15);
  Heatmap<double> h{random_tensor({2, 3, 4}, rng)};
  auto one = stitch<double>({{h, 0, 0}});
  EXPECT_EQ(one.map.values, h.values);
  EXPECT_EQ(one.covered_count(), 12u);

  Heatmap<double> c{Tensor<double>({1, 2, 2}, 0.3)};
  auto grid = stitch<double>({{c, 0, 0}, {c, 0, 1}, {c, 1, 0}, {c, 1, 1}});
  EXPECT_EQ(grid.height(), 4u);
  EXPECT_EQ(grid.width(), 4u);
  for (double v : grid.map.values.data()) EXPECT_EQ(v, 0.3);
}

TEST(Stitch, CheckerboardOffsetsAndCoverage) {
  Heatmap<double> a{Tensor<double>({1, 2, 3}, 0.25)}, b{Tensor<double>({1, 2, 3}, 0.75)};
  std::vector<PlacedHeatmap<double>> placed;
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      if (r == 2 && c == 2) continue;  // hole
      placed.push_back({(r + c) % 2 ? b : a, r, c});
    }
  }
  auto full = stitch(placed);
  ASSERT_EQ(full.height(), 6u);
  ASSERT_EQ(full.width(), 9u);
  for (std::size_t y = 0; y < 6; ++y) {
    for (std::size_t x = 0; x < 9; ++x) {
      const std::size_t r = y / 2, c = x / 3;
      const bool hole = r == 2 && c == 2;
      EXPECT_EQ(full.coverage[y * 9 + x], hole ? 0 : 1);
      EXPECT_EQ(full.map.values.at(0, y, x), hole ? 0.0 : ((r + c) % 2 ? 0.75 : 0.25));
    }
  }
  placed.push_back({a, 0, 0});
  EXPECT_THROW(stitch(placed), LayoutError);
}

// ---------------------------------------------------------------- forward_bag

TEST(ForwardBag, ZeroParamsGiveHalfEverywhere) {
  ModelConfig c = tiny_config(3);
  std::mt19937_64 rng(16);
  auto bag = random_bag(c, 3, 3, Coords{{0, 0}, {0, 1}, {2, 1}}, rng);
  ModelParams<double> p(c);
  auto out = forward_bag(bag, p, c);
  for (std::size_t i = 0; i < out.prediction.fused.coverage.size(); ++i) {
    if (out.prediction.fused.coverage[i]) {
      for (std::size_t l = 0; l < 3; ++l) EXPECT_EQ(out.prediction.fused.map.values.slice(l)[i], 0.5);
    }
  }
  for (const auto& lt : out.trace.labels) EXPECT_TRUE(lt.otsu.degenerate);
  EXPECT_EQ(out.prediction.masked.map.values, out.prediction.fused.map.values);
  for (double y : out.prediction.y_hat) EXPECT_NEAR(y, 0.5, 1e-15);
}

TEST(ForwardBag, PatchOrderInvariance) {
  ModelConfig c = tiny_config(2);
  std::mt19937_64 rng(17);
  auto bag = random_bag(c, 3, 4, Coords{{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 0}}, rng);
  auto p = init_params<float>(c, 3);
  auto ref = forward_bag(bag, p, c);
  for (int t = 0; t < 5; ++t) {
    auto shuffled = bag;
    std::shuffle(shuffled.patches.begin(), shuffled.patches.end(), rng);
    auto out = forward_bag(shuffled, p, c);
    EXPECT_EQ(out.prediction.y_hat, ref.prediction.y_hat);
    EXPECT_EQ(out.prediction.fused.map.values, ref.prediction.fused.map.values);
    EXPECT_EQ(out.prediction.masked.map.values, ref.prediction.masked.map.values);
  }
}

TEST(ForwardBag, UncoveredSitesStayOutOfPooling) {
  ModelConfig c = tiny_config(1, PoolingMode::kMax);
  c.threshold_enabled = false;
  std::mt19937_64 rng(18);
  auto bag = random_bag(c, 2, 2, Coords{{0, 0}, {1, 1}}, rng);
  auto p = random_params(c, rng);
  auto out = forward_bag(bag, p, c);
  auto v = out.prediction.fused.covered_values(0);
  EXPECT_EQ(v.size(), 8u);
  EXPECT_EQ(out.prediction.y_hat[0], *std::max_element(v.begin(), v.end()));
}

TEST(ForwardBag, MaskedEntriesHaveZeroGradientKeptEntriesUnchanged) {
  ModelConfig c = tiny_config(1);
  std::mt19937_64 rng(19);
  auto bag = random_bag(c, 3, 3, Coords{{0, 0}, {0, 1}}, rng);
  auto p = random_params(c, rng);
  auto out = forward_bag(bag, p, c);
  const auto& lt = out.trace.labels[0];
  ASSERT_TRUE(lt.mask_applied);
  auto kept = smoothmax_pool_grad<double>(lt.pooled_input, c.alpha);
  std::size_t zeroed = 0;
  for (std::size_t i = 0; i < lt.keep.size(); ++i) {
    if (!lt.keep[i]) {
      ++zeroed;
      EXPECT_EQ(lt.pooled_input[i], 0.0);
    }
  }
  EXPECT_GT(zeroed, 0u);
  // dL/dH at site i through the mask: dpool_i if kept, exactly 0 otherwise.
  std::vector<double> g(lt.keep.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = lt.keep[i] ? kept[i] : 0.0;
  auto numeric = [&](std::size_t i) {
    auto vals = lt.pooled_input;
    vals[i] += 1e-6;
    const double up = smoothmax_pool<double>(vals, c.alpha);
    vals[i] -= 2e-6;
    return (up - smoothmax_pool<double>(vals, c.alpha)) / 2e-6;
  };
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (lt.keep[i]) {
      EXPECT_NEAR(g[i], numeric(i), 1e-8);
    }
  }
}

TEST(ForwardBag, InstanceMilEquivalence) {
  ModelConfig c = tiny_config(2, PoolingMode::kMax);
  c.context_enabled = false;
  c.threshold_enabled = false;
  std::mt19937_64 rng(20);
  auto bag = random_bag(c, 3, 3, Coords{{0, 0}, {0, 1}, {1, 0}}, rng);
  auto p = random_params(c, rng);
  auto out = forward_bag(bag, p, c);
  for (std::size_t l = 0; l < 2; ++l) {
    double best = -1;
    for (const auto& patch : bag.patches) {
      auto score = stack_forward(p.detection, project(Tensor<double>::cast(patch.embedding), p));
      for (double s : score.slice(l)) best = std::max(best, sigmoid(s));
    }
    EXPECT_EQ(out.prediction.y_hat[l], best);
  }
}

TEST(ForwardBag, RejectsBadInput) {
  ModelConfig c = tiny_config(1);
  std::mt19937_64 rng(21);
  auto p = init_params<double>(c, 1);
  BagOfPatches empty;
  empty.labels = {0};
  EXPECT_THROW(forward_bag(empty, p, c), ArgumentError);
  auto bag = random_bag(c, 2, 2, Coords{{0, 0}}, rng);
  ModelConfig wide = c;
  wide.embed_dim = 5;
  EXPECT_THROW(forward_bag(bag, init_params<double>(wide, 1), wide), DimensionError);
  auto dup = random_bag(c, 2, 2, Coords{{0, 0}, {0, 0}}, rng);
  EXPECT_THROW(forward_bag(dup, p, c), LayoutError);
}

class BagGradient : public ::testing::TestWithParam<PoolingMode> {};

TEST_P(BagGradient, EndToEndMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    ModelConfig c = tiny_config(2, GetParam());
    std::mt19937_64 rng(100 + seed);
    auto bag = random_bag(c, 3, 3, Coords{{0, 0}, {0, 1}}, rng);
    auto p = random_params(c, rng);
    LossConfig loss;
    loss.lambda_sd = 0.05;
    loss.label_smoothing = 0.1;
    auto r = testing::check_bag_loss_gradient(bag, p, c, loss);
    EXPECT_TRUE(r.ok()) << "seed " << seed << " max rel " << r.max_rel_error << " failures " << r.failures;
  }
}

INSTANTIATE_TEST_SUITE_P(AllPooling, BagGradient,
                         ::testing::Values(PoolingMode::kSmoothMax, PoolingMode::kMax, PoolingMode::kLp),
                         [](const auto& info) { return to_string(info.param); });

TEST(BagGradient, ContextDisabledAndSingleKernelEntry) {
  ModelConfig c = tiny_config(1);
  c.context_enabled = false;
  std::mt19937_64 rng(22);
  auto bag = random_bag(c, 3, 3, Coords{{0, 0}, {1, 0}}, rng);
  auto p = random_params(c, rng);
  EXPECT_TRUE(testing::check_bag_loss_gradient(bag, p, c, LossConfig{}).ok());
}

// ---------------------------------------------------------------- checkpoint

TEST(Checkpoint, RoundTripAndDeterminism) {
  ModelConfig c = tiny_config(2);
  c.alpha = 6;
  auto p = init_params<float>(c, 9);
  const auto bytes = encode_checkpoint(c, p);
  EXPECT_EQ(bytes, encode_checkpoint(c, init_params<float>(c, 9)));
  auto ck = decode_checkpoint(bytes);
  EXPECT_EQ(ck.config, c);
  EXPECT_EQ(encode_checkpoint(ck.config, ck.params), bytes);
}

TEST(Checkpoint, RejectsMalformed) {
  ModelConfig c = tiny_config(1);
  const auto bytes = encode_checkpoint(c, init_params<float>(c, 1));
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), FormatError);
  EXPECT_THROW(decode_checkpoint(bytes + "x"), FormatError);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  bad = bytes;
  bad[4] = 2;  // version
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  try {
    decode_checkpoint(bytes.substr(0, 10));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_LE(e.offset(), 10u);
  }
}

}  // namespace
}  // namespace insight
