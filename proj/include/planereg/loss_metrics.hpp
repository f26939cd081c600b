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

// Training loss L = a L_rot + b L_trans + g L_orth and the evaluation score
// P = 0.2 d + 0.6 eps_n + 0.2 eps_i with its per-plane error components.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "planereg/geometry.hpp"

namespace planereg {

struct LossWeights {
  double alpha = 0.5;  // rotation
  double beta = 0.5;   // translation
  double gamma = 0.0;  // orthogonality

  /// Throws PreconditionError unless all >= 0 and alpha + beta + gamma = 1.
  void validate() const;

  /// Presets named `<region>.<scheme>[.<plane>]`, e.g. "calcaneus.opt_comb",
  /// "ankle.comb", "ankle.three.sagittal". Throws ValidationError.
  static LossWeights preset(std::string_view name);
  static std::vector<std::string> preset_names();
};

enum class OrthoForm {
  kOneMinusCross,  // 1 - |n_i x n_j|
  kAbsDot,         // |n_i . n_j|
};

OrthoForm parse_ortho_form(std::string_view s);
std::string_view to_string(OrthoForm f);

struct LossResult {
  double total = 0.0;
  double rotation = 0.0;
  double translation = 0.0;
  double orthogonality = 0.0;
  std::vector<double> grad;  // dL/dprediction
  int degenerate_pairs = 0;  // parallel or undecodable normals; they add 1 without gradient
};

/// Predictions and targets laid out per plane as (normalized A, encoding).
/// L_trans and L_rot are per-plane Euclidean distances averaged over planes;
/// L_orth averages over unordered pairs of decoded predicted normals.
LossResult compute_loss(std::span<const double> pred, std::span<const double> target,
                        const LossWeights& w, RotationKind kind, int n_planes,
                        OrthoForm form = OrthoForm::kOneMinusCross);

struct PlaneErrors {
  double d_mm = 0.0;       // |(A_pred - A_gt) . n_gt|
  double eps_n_deg = 0.0;  // angle between normals
  double eps_i_deg = 0.0;  // mean of the e_u and e_v angles
};

PlaneErrors plane_errors(const PlaneFrame& pred, const PlaneFrame& gt);

double score(double d_mm, double eps_n_deg, double eps_i_deg);

struct ReportRow {
  std::string plane;
  double d_mm = 0.0;
  double eps_n_deg = 0.0;
  double eps_i_deg = 0.0;
  double score = 0.0;
};

double median(std::vector<double> values);

/// samples[s][p] holds the errors of plane p in test sample s. Each component
/// is aggregated by median over samples; with `per_plane` one row per plane is
/// emitted followed by a "mean" row (mean of the per-plane components).
std::vector<ReportRow> aggregate_errors(const std::vector<std::vector<PlaneErrors>>& samples,
                                        const std::vector<std::string>& plane_names,
                                        bool per_plane = true);

/// Mean row from already aggregated per-plane rows.
ReportRow mean_row(std::span<const ReportRow> rows);

/// `plane,d_mm,eps_n_deg,eps_i_deg,score`
void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);
void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report_csv(const std::filesystem::path& path);

}  // namespace planereg
