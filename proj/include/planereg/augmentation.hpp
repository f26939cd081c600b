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

// Online augmentation: one random composite transform per sample, a single
// resampling pass, the intensity pipeline, and plane labels carried along
// with the same transform.

#include <cstdint>
#include <span>
#include <vector>

#include "planereg/geometry.hpp"
#include "planereg/rng.hpp"
#include "planereg/volume.hpp"

namespace planereg {

struct AugmentConfig {
  double rot_deg = 45.0;  // per axis, symmetric
  double scale_lo = 0.95;
  double scale_hi = 1.05;
  double trans_mm = 12.0;  // per axis, symmetric
  double mirror_prob = 0.5;
  double intensity_lo = 0.95;
  double intensity_hi = 1.05;
  GridSpec out{{72, 72, 72}, Vec3::Constant(2.2)};
  WindowConfig window;

  /// No spatial or intensity randomness; used at evaluation time.
  static AugmentConfig none(const GridSpec& out, const WindowConfig& window = {});
  void validate() const;
};

struct AugmentationDraw {
  RigidTransform transform;
  bool mirror = false;
  double intensity_factor = 1.0;
  Vec3 euler_rad = Vec3::Zero();  // (yaw z, pitch y, roll x)
  double scale = 1.0;
  Vec3 translation_mm = Vec3::Zero();
};

/// transform = compose([mirror_x?, Rz Ry Rx, scale, translation]).
AugmentationDraw sample_augmentation(const AugmentConfig& cfg, SeededRng& rng);

struct AugmentedSample {
  std::vector<float> input;       // out.dims voxels in [0, 1]
  std::vector<PlaneFrame> targets;
  std::vector<double> target_vector;
  AugmentationDraw draw;
  int planes_outside_cube = 0;
};

/// Per plane: normalized center (3 values) followed by the rotation encoding.
std::vector<double> encode_targets(std::span<const PlaneFrame> planes, double extent_mm,
                                   RotationKind kind);
/// Inverse of encode_targets; also used to turn network outputs into planes.
std::vector<PlaneFrame> decode_targets(std::span<const double> values, int n_planes,
                                       double extent_mm, RotationKind kind);

/// Applies a given draw (resample once, intensity pipeline, label transport).
AugmentedSample apply_augmentation(const Volume& v, std::span<const PlaneFrame> planes,
                                   const AugmentConfig& cfg, const AugmentationDraw& draw,
                                   RotationKind kind);

AugmentedSample augment_sample(const Volume& v, std::span<const PlaneFrame> planes,
                               const AugmentConfig& cfg, SeededRng& rng, RotationKind kind);

/// Process-wide count of plane centers that ended up outside [-0.5, 0.5]^3.
std::uint64_t out_of_cube_warning_count();

}  // namespace planereg
