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

// Library use without the CLI: generate a small synthetic set in memory,
// train, then score the test split and print one heatmap as ASCII.

#include <cstdio>

#include "insight/insight.hpp"

int main() {
  using namespace insight;
  RunConfig cfg = default_run_config();
  cfg.synth.num_train = 32;
  cfg.synth.num_val = 8;
  cfg.synth.num_test = 16;
  cfg.synth.grid_rows = 6;
  cfg.synth.grid_cols = 6;
  cfg.train.max_epochs = 10;
  cfg.validate();

  const Dataset ds = generate_synthetic(cfg.synth);
  TrainOptions opts;
  opts.on_epoch = [](const EpochRecord& r) { std::printf("epoch %2zu  loss %.4f  val %.4f\n", r.epoch, r.train_loss, r.val_metric); };
  const auto result = train(init_params<float>(cfg.model, cfg.train.seed), cfg.model, ds.train, ds.val, cfg.train,
                            cfg.effective_loss(), opts);

  const EvalReport report = evaluate_dataset(result.best, cfg.model, ds.test);
  std::printf("test AUC %.4f\n", report.auc_mean.value_or(0));
  if (report.dice_positive) std::printf("test Dice %.4f over %zu positive bags\n", report.dice_positive->mean, report.dice_positive->n);

  for (const auto& bag : ds.test) {
    if (!bag.labels[0]) continue;
    const auto fwd = forward_bag(bag, result.best, cfg.model);
    const auto& h = fwd.prediction.fused.map.values;
    std::printf("\n%s  y_hat %.3f  (# predicted, o lesion, * both)\n", bag.bag_id.c_str(), fwd.prediction.y_hat[0]);
    const BinaryMask pred = binarize_heatmap(fwd.prediction.fused, 0, Binarization::otsu());
    for (std::size_t y = 0; y < h.shape()[1]; y += 2) {
      for (std::size_t x = 0; x < h.shape()[2]; ++x) {
        const bool p = pred.at(y, x), g = bag.masks[0].at(y, x);
        std::putchar(p && g ? '*' : p ? '#' : g ? 'o' : '.');
      }
      std::putchar('\n');
    }
    break;
  }
  return 0;
}
