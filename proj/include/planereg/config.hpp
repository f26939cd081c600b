// Copyright 2026 The planereg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Experiment configuration: a flat `key = value` text format, `--set`
// overrides, and the fully resolved dump written to run.lock.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "planereg/augmentation.hpp"
#include "planereg/geometry.hpp"
#include "planereg/loss_metrics.hpp"
#include "planereg/model.hpp"
#include "planereg/phantom.hpp"

namespace planereg {

struct SearchSpace {
  double lr_lo = 1e-4;
  double lr_hi = 5e-2;  // log-uniform
  double decay_lo = 0.1;
  double decay_hi = 1.0;
  int step_lo = 20;
  int step_hi = 200;
  double momentum_lo = 0.8;
  double momentum_hi = 0.99;
  int batch_lo = 1;
  int batch_hi = 8;

  void validate() const;
};

struct ExperimentConfig {
  AnatomyMode mode = AnatomyMode::kAnkle;
  RotationKind kind = RotationKind::kSixD;
  Dims dims{72, 72, 72};
  double spacing_mm = 2.2;
  bool combined = true;
  std::vector<int> channels{8, 16, 32, 64, 128};
  std::vector<int> fc_widths{1024, 256};
  std::string loss_preset;  // empty: use weights as given
  LossWeights weights;
  OrthoForm ortho_form = OrthoForm::kOneMinusCross;

  int epochs = 400;
  double lr = 0.01;
  double lr_decay = 0.5;
  int lr_step = 100;
  double momentum = 0.9;
  int batch_size = 4;

  int k = 5;
  int fold = 0;
  std::uint64_t seed = 0;

  double aug_rot_deg = 45.0;
  double aug_scale_lo = 0.95;
  double aug_scale_hi = 1.05;
  double aug_trans_mm = 12.0;
  double aug_mirror_prob = 0.5;
  double aug_intensity_lo = 0.95;
  double aug_intensity_hi = 1.05;
  WindowConfig window;

  std::string manifest;

  int phantom_n_volumes = 20;
  int phantom_per_patient = 2;
  Dims phantom_dims{64, 64, 64};
  double phantom_spacing_mm = 2.5;
  std::array<double, 3> phantom_proportions{0.4, 0.3, 0.3};

  SearchSpace search;
  int search_trials = 10;
  double grid_step = 0.1;
  std::string ablation = "representation";

  int n_planes() const { return 3; }
  GridSpec input_grid() const;
  double extent_mm() const { return input_grid().extent_mm(); }
  AugmentConfig augment_config() const;
  NetworkConfig network_config() const;
  /// Loss weights seen by one network; per-plane networks use (alpha, 1 - alpha, 0).
  LossWeights effective_weights() const;
  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string description;
};

/// Every recognized key, in dump order.
const std::vector<ConfigKey>& config_keys();

/// `key = value` lines, `#` comments. Unknown keys and bad values raise
/// ValidationError naming `source:line` and the key.
void apply_config_text(ExperimentConfig& cfg, std::string_view text, const std::string& source);
ExperimentConfig load_config(const std::filesystem::path& path);
/// One `key=value` assignment, as given to `--set`.
void apply_override(ExperimentConfig& cfg, std::string_view assignment);
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);
std::string get_config_value(const ExperimentConfig& cfg, std::string_view key);

/// All keys with their resolved values; parses back to an identical config.
std::string dump_config(const ExperimentConfig& cfg);

/// `run.lock`: the resolved config plus the invocation line.
void write_run_lock(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                    const std::string& invocation);

}  // namespace planereg
