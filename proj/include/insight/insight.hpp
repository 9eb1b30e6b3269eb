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

#include "insight/common.hpp"
#include "insight/data/bag.hpp"
#include "insight/cli/commands.hpp"
#include "insight/cli/run_config.hpp"
#include "insight/data/bag_io.hpp"
#include "insight/data/dataset_io.hpp"
#include "insight/data/heatmap_export.hpp"
#include "insight/data/pgm.hpp"
#include "insight/data/synth.hpp"
#include "insight/eval/evaluate.hpp"
#include "insight/eval/gradcam.hpp"
#include "insight/eval/metrics.hpp"
#include "insight/eval/permutation.hpp"
#include "insight/eval/report.hpp"
#include "insight/eval/stratify.hpp"
#include "insight/gradcheck.hpp"
#include "insight/model/checkpoint.hpp"
#include "insight/model/config.hpp"
#include "insight/model/forward.hpp"
#include "insight/model/heatmap.hpp"
#include "insight/model/otsu.hpp"
#include "insight/model/params.hpp"
#include "insight/model/pooling.hpp"
#include "insight/ops.hpp"
#include "insight/tensor.hpp"
#include "insight/train/adamw.hpp"
#include "insight/train/grid.hpp"
#include "insight/train/loss.hpp"
#include "insight/train/trainer.hpp"
