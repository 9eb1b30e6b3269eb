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

// insight: synth / train / eval / heatmap / ablate.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "insight/cli/commands.hpp"

namespace {

using insight::RunConfig;

struct Common {
  std::string config_path;
  std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "JSON run config (flags override it)");
  cmd->add_option("-j,--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? insight::default_run_config() : insight::load_run_config(c.config_path);
  if (c.jobs) cfg.jobs = *c.jobs;
  return cfg;
}

template <typename V>
void override_with(const std::optional<V>& flag, V& field) {
  if (flag) field = *flag;
}

void print_epoch(const insight::EpochRecord& r) {
  std::printf("epoch %3zu  loss %.4f  val %.4f%s\n", r.epoch, r.train_loss, r.val_metric, r.selected ? "  *" : "");
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"INSIGHT weakly supervised heatmap aggregator"};
  app.require_subcommand(1);

  // synth
  Common synth_common;
  std::string synth_out;
  bool synth_force = false;
  std::optional<std::uint64_t> synth_seed;
  std::optional<double> synth_strength;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth, synth_common);
  synth->add_option("-o,--out", synth_out, "output dataset directory")->required();
  synth->add_flag("--force", synth_force, "replace a non-empty output directory");
  synth->add_option("--seed", synth_seed, "dataset seed");
  synth->add_option("--signal-strength", synth_strength, "lesion signal strength (0 = null control)");

  // train
  Common train_common;
  std::string train_data, train_out, grid_path;
  bool grid = false;
  std::optional<std::size_t> max_epochs, patience;
  std::optional<double> lr, alpha;
  std::optional<std::uint64_t> train_seed;
  auto* trainc = app.add_subcommand("train", "train a model on a dataset directory");
  add_common(trainc, train_common);
  trainc->add_option("-d,--data", train_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  trainc->add_option("-o,--out", train_out, "output run directory")->required();
  trainc->add_option("--max-epochs", max_epochs, "epoch cap");
  trainc->add_option("--patience", patience, "early-stopping patience");
  trainc->add_option("--lr", lr, "learning rate");
  trainc->add_option("--alpha", alpha, "SmoothMax temperature");
  trainc->add_option("--seed", train_seed, "initialization and shuffle seed");
  trainc->add_flag("--grid", grid, "grid search alpha x lr x lambda and write a leaderboard");
  trainc->add_option("--grid-spec", grid_path, "JSON grid axes (alphas, learning_rates, lambdas)")
      ->check(CLI::ExistingFile);

  // eval
  Common eval_common;
  insight::EvalRequest eval_req;
  std::string comparator;
  bool gradcam = false;
  std::optional<std::string> binarization;
  std::optional<double> threshold;
  std::optional<std::size_t> permutations;
  auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(evalc, eval_common);
  evalc->add_option("-m,--checkpoint", eval_req.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  evalc->add_option("-d,--data", eval_req.dataset, "dataset directory")->required()->check(CLI::ExistingDirectory);
  evalc->add_option("-o,--out", eval_req.out_dir, "output directory")->required();
  evalc->add_option("--split", eval_req.split, "dataset split")->capture_default_str();
  evalc->add_option("--comparator", comparator, "report.json of a competing model")->check(CLI::ExistingFile);
  evalc->add_flag("--gradcam", gradcam, "score Grad-CAM saliency instead of the built-in heatmap");
  evalc->add_option("--binarization", binarization, "otsu or fixed");
  evalc->add_option("--threshold", threshold, "fixed binarization threshold");
  evalc->add_option("--permutations", permutations, "permutation test iterations");

  // heatmap
  insight::HeatmapRequest hm;
  auto* heat = app.add_subcommand("heatmap", "export one heatmap channel as PGM");
  heat->add_option("-m,--checkpoint", hm.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  heat->add_option("-b,--bag", hm.bag, "IEB1 bag file")->required()->check(CLI::ExistingFile);
  heat->add_option("-l,--label", hm.label, "label index")->capture_default_str();
  heat->add_option("-k,--upsample", hm.upsample, "integer upsampling factor")->capture_default_str();
  heat->add_flag("--masked", hm.masked, "export the Otsu-masked map");
  heat->add_option("-o,--out", hm.out, "output .pgm path")->required();

  // ablate
  Common ablate_common;
  std::string ablate_data, ablate_out, ablate_split = "test";
  auto* ablate = app.add_subcommand("ablate", "train and evaluate the CS/SM/Rg ablation rows");
  add_common(ablate, ablate_common);
  ablate->add_option("-d,--data", ablate_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  ablate->add_option("-o,--out", ablate_out, "output directory")->required();
  ablate->add_option("--split", ablate_split, "evaluation split")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return insight::kExitUsage;
  }

  try {
    if (*synth) {
      RunConfig cfg = resolve(synth_common);
      override_with(synth_seed, cfg.synth.seed);
      override_with(synth_strength, cfg.synth.signal_strength);
      const auto ds = insight::cmd_synth(cfg, synth_out, synth_force);
      std::printf("wrote %zu/%zu/%zu bags to %s\n", ds.train.size(), ds.val.size(), ds.test.size(), synth_out.c_str());
    } else if (*trainc) {
      RunConfig cfg = resolve(train_common);
      override_with(max_epochs, cfg.train.max_epochs);
      override_with(patience, cfg.train.patience);
      override_with(lr, cfg.train.learning_rate);
      override_with(alpha, cfg.model.alpha);
      override_with(train_seed, cfg.train.seed);
      if (grid) {
        insight::GridSpec spec;
        if (!grid_path.empty()) {
          try {
            insight::from_json(nlohmann::json::parse(insight::read_file(grid_path)), spec);
          } catch (const nlohmann::json::exception& e) {
            throw insight::ConfigError(grid_path + ": " + e.what());
          }
        }
        const auto g = insight::cmd_train_grid(cfg, spec, train_data, train_out);
        std::printf("best: alpha %g  lr %g  lambda %g  metric %.4f\n", g.best.alpha, g.best.learning_rate,
                    g.best.lambda_sd, g.best.metric);
      } else {
        const auto r = insight::cmd_train(cfg, train_data, train_out, print_epoch);
        std::printf("best epoch %zu  %s %.4f\n", r.best_epoch, insight::to_string(r.metric).c_str(), r.best_metric);
      }
    } else if (*evalc) {
      RunConfig cfg = resolve(eval_common);
      override_with(binarization, cfg.eval.binarization);
      override_with(threshold, cfg.eval.threshold);
      override_with(permutations, cfg.eval.permutation_iterations);
      if (!comparator.empty()) eval_req.comparator = comparator;
      if (gradcam) eval_req.saliency = insight::SaliencySource::kGradCam;
      const auto rep = insight::cmd_eval(cfg, eval_req);
      if (rep.auc_mean) std::printf("auc %.4f\n", *rep.auc_mean);
      if (rep.dice_positive) std::printf("dice %.4f (n=%zu)\n", rep.dice_positive->mean, rep.dice_positive->n);
      if (rep.permutation_p_overall) std::printf("permutation p %.4g\n", *rep.permutation_p_overall);
    } else if (*heat) {
      const auto img = insight::cmd_heatmap(hm);
      std::printf("wrote %zux%zu image to %s\n", img.width, img.height, hm.out.string().c_str());
    } else if (*ablate) {
      const RunConfig cfg = resolve(ablate_common);
      const auto rows = insight::cmd_ablate(cfg, ablate_data, ablate_out, ablate_split);
      std::fputs(insight::ablation_markdown(rows).c_str(), stdout);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "insight: error: %s\n", e.what());
    return insight::exit_code_for(e);
  }
  return insight::kExitOk;
}
