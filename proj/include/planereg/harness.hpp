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

// Cross-validation, training, evaluation, searches and ablation drivers.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "planereg/config.hpp"
#include "planereg/loss_metrics.hpp"
#include "planereg/model.hpp"
#include "planereg/phantom.hpp"

namespace planereg {

struct Sample {
  std::string id;  // manifest path or generated name
  int patient_id = 0;
  OriginClass origin = OriginClass::kNoMetal;
  Volume volume;
  std::vector<NamedPlane> planes;
};

std::vector<Sample> load_samples(const std::filesystem::path& manifest);
std::vector<Sample> samples_from_dataset(const Dataset& ds);

struct FoldAssignment {
  int k = 0;
  std::vector<int> fold_of;  // per sample / manifest entry

  std::vector<int> members(int fold) const;
  std::vector<int> complement(int fold) const;
};

struct GroupKey {
  int patient_id;
  OriginClass origin;
};

/// Patients are grouped; within each origin class they are shuffled and dealt
/// round-robin, the dealing offset carrying over from class to class. Throws
/// ValidationError when there are fewer patients than folds.
FoldAssignment split_kfold_grouped(const std::vector<GroupKey>& volumes, int k, std::uint64_t seed);
FoldAssignment split_kfold_grouped(const std::vector<ManifestEntry>& manifest, int k, std::uint64_t seed);
FoldAssignment split_kfold_grouped(const std::vector<Sample>& samples, int k, std::uint64_t seed);

/// Throws std::logic_error if any patient or sample id is shared.
void check_partition(const std::vector<Sample>& samples, const std::vector<int>& train,
                     const std::vector<int>& test);

struct TrainedModel {
  std::vector<Network<float>> networks;
  std::vector<std::vector<int>> planes;  // plane indices predicted by each network
  std::vector<std::string> plane_names;
  RotationKind kind = RotationKind::kSixD;
  GridSpec grid;
  WindowConfig window;
  std::vector<std::vector<double>> loss_curves;  // per network, per epoch mean loss
  std::uint64_t degenerate_pairs = 0;
};

struct TrainLog {
  std::function<void(int net, int epoch, double loss, double lr)> on_epoch;
};

/// Deterministic in cfg (seed included). Throws NumericalError on a
/// non-finite loss naming epoch, batch and learning rate.
TrainedModel train(const ExperimentConfig& cfg, const std::vector<Sample>& samples,
                   const std::vector<int>& train_idx, const TrainLog& log = {});

/// Writes one checkpoint per network: `model.ckpt` or `model_<plane>.ckpt`.
std::vector<std::filesystem::path> save_model(const TrainedModel& m, const ExperimentConfig& cfg,
                                              const std::filesystem::path& dir);
TrainedModel load_model(const std::vector<std::filesystem::path>& checkpoints);

/// Center resample without augmentation into the network input tensor.
std::vector<float> prepare_input(const Volume& v, const GridSpec& grid, const WindowConfig& window);

/// Planes predicted for one volume, in model plane order. A degenerate
/// rotation output falls back to the identity rotation and bumps *degenerate.
std::vector<NamedPlane> predict_planes(const TrainedModel& m, const Volume& v,
                                       int* degenerate = nullptr);

struct EvalResult {
  std::vector<ReportRow> rows;  // per plane + mean
  std::vector<std::vector<PlaneErrors>> errors;
  double mean_inference_s = 0.0;
  int degenerate_predictions = 0;
};

EvalResult evaluate(const TrainedModel& m, const ExperimentConfig& cfg,
                    const std::vector<Sample>& samples, const std::vector<int>& test_idx);

/// Errors of given predictions against ground truth, aggregated.
EvalResult evaluate_predictions(const std::vector<std::vector<PlaneFrame>>& predicted,
                                const std::vector<std::vector<PlaneFrame>>& truth,
                                const std::vector<std::string>& plane_names);

struct FoldResult {
  int fold = 0;
  EvalResult eval;
  std::vector<std::vector<double>> loss_curves;
};

/// Trains on all folds but `fold` and evaluates on `fold`. Writes
/// `<dir>/report.csv`, `loss.csv` and checkpoints when dir is non-empty.
FoldResult run_fold(const ExperimentConfig& cfg, const std::vector<Sample>& samples,
                    const FoldAssignment& folds, int fold, const std::filesystem::path& dir = {});

/// Mean and sample standard deviation across folds of each report row.
struct SummaryRow {
  std::string name;
  double mean[4] = {0, 0, 0, 0};  // d, eps_n, eps_i, score
  double std[4] = {0, 0, 0, 0};
};

std::vector<SummaryRow> summarize_folds(const std::vector<std::vector<ReportRow>>& fold_rows);
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows,
                       const std::string& first_column = "plane");

/// All folds in cfg, `jobs` at a time. Writes `<dir>/fold_<i>/...` and
/// `<dir>/summary.csv`.
std::vector<FoldResult> cross_validate(const ExperimentConfig& cfg, const std::vector<Sample>& samples,
                                       const std::filesystem::path& dir, int jobs = 1,
                                       const std::vector<int>& only_folds = {});

struct Hyperparams {
  double lr = 0.01;
  double lr_decay = 0.5;
  int lr_step = 100;
  double momentum = 0.9;
  int batch_size = 4;
};

Hyperparams draw_hyperparams(const SearchSpace& space, std::uint64_t seed, int trial);

struct Trial {
  Hyperparams params;
  LossWeights weights;
  double score = 0.0;
};

struct SearchResult {
  std::vector<Trial> trials;
  int best = 0;
};

/// Training part of cfg.fold with a held-out quarter of its patients used
/// for validation.
struct SearchSplit {
  std::vector<int> train;
  std::vector<int> validation;
};
SearchSplit search_split(const ExperimentConfig& cfg, const std::vector<Sample>& samples);

SearchResult hyperparam_search(const ExperimentConfig& cfg, const std::vector<Sample>& samples,
                               int n_trials, std::uint64_t seed);

/// Combined: alpha, beta on the grid within [0.1, 0.9], alpha + beta <= 1,
/// gamma = 1 - alpha - beta. Per-plane: (alpha, 1 - alpha, 0).
std::vector<LossWeights> weight_grid(double step, bool combined);

SearchResult weight_grid_search(const ExperimentConfig& cfg, const std::vector<Sample>& samples);

struct AblationVariant {
  std::string name;
  ExperimentConfig cfg;
};

/// representation: quaternion, euler, sixd. resolution: 64/2.5, 72/2.2,
/// 128/1.2. combined_vs_separate: three (per plane), comb (equal weights,
/// gamma 0), opt_comb (base weights). Throws ValidationError otherwise.
std::vector<AblationVariant> ablation_variants(const std::string& which, const ExperimentConfig& base);

struct AblationResult {
  std::vector<AblationVariant> variants;
  std::vector<SummaryRow> rows;  // one per variant, from each fold's mean row
  std::vector<std::vector<FoldResult>> folds;
};

AblationResult ablation_driver(const std::string& which, const ExperimentConfig& base,
                               const std::vector<Sample>& samples, const std::filesystem::path& dir,
                               int jobs = 1, const std::vector<int>& only_folds = {});

}  // namespace planereg
