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

#include "planereg/augmentation.hpp"

#include <atomic>
#include <cmath>
#include <numbers>

namespace planereg {
namespace {

std::atomic<std::uint64_t> g_out_of_cube{0};

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

AugmentConfig AugmentConfig::none(const GridSpec& out, const WindowConfig& window) {
  AugmentConfig cfg;
  cfg.rot_deg = 0.0;
  cfg.scale_lo = cfg.scale_hi = 1.0;
  cfg.trans_mm = 0.0;
  cfg.mirror_prob = 0.0;
  cfg.intensity_lo = cfg.intensity_hi = 1.0;
  cfg.out = out;
  cfg.window = window;
  return cfg;
}

void AugmentConfig::validate() const {
  if (!(rot_deg >= 0.0 && rot_deg <= 180.0)) throw PreconditionError("rot_deg must be in [0, 180]");
  if (!(scale_lo <= scale_hi && scale_lo >= 0.9 && scale_hi <= 1.1))
    throw PreconditionError("scale range must lie within [0.9, 1.1]");
  if (!(trans_mm >= 0.0)) throw PreconditionError("trans_mm must be non-negative");
  if (!(mirror_prob >= 0.0 && mirror_prob <= 1.0))
    throw PreconditionError("mirror_prob must be in [0, 1]");
  if (!(intensity_lo <= intensity_hi && intensity_lo > 0.0))
    throw PreconditionError("intensity factor range must be positive and ordered");
  for (int d : out.dims)
    if (d < 2) throw PreconditionError("output dims must be >= 2");
  if (!(out.spacing.minCoeff() > 0.0)) throw PreconditionError("output spacing must be positive");
  window.validate();
}

AugmentationDraw sample_augmentation(const AugmentConfig& cfg, SeededRng& rng) {
  cfg.validate();
  AugmentationDraw d;
  d.mirror = cfg.mirror_prob > 0.0 &&
             std::bernoulli_distribution(cfg.mirror_prob)(rng.mirror());
  auto& g = rng.spatial();
  const double roll = uniform(g, -cfg.rot_deg, cfg.rot_deg) * kDeg;
  const double pitch = uniform(g, -cfg.rot_deg, cfg.rot_deg) * kDeg;
  const double yaw = uniform(g, -cfg.rot_deg, cfg.rot_deg) * kDeg;
  d.euler_rad = Vec3(yaw, pitch, roll);
  d.scale = uniform(g, cfg.scale_lo, cfg.scale_hi);
  for (int a = 0; a < 3; ++a) d.translation_mm[a] = uniform(g, -cfg.trans_mm, cfg.trans_mm);
  d.intensity_factor = uniform(rng.intensity(), cfg.intensity_lo, cfg.intensity_hi);

  d.transform = compose_transforms({
      d.mirror ? RigidTransform::mirror_x() : RigidTransform::identity(),
      RigidTransform::rotation(euler_zyx(yaw, pitch, roll)),
      RigidTransform::scale(d.scale),
      RigidTransform::translation(d.translation_mm),
  });
  return d;
}

std::vector<double> encode_targets(std::span<const PlaneFrame> planes, double extent_mm,
                                   RotationKind kind) {
  std::vector<double> out;
  out.reserve(planes.size() * (3 + encoding_length(kind)));
  for (const auto& p : planes) {
    const Vec3 a = normalize_translation(p.center, extent_mm);
    out.insert(out.end(), {a.x(), a.y(), a.z()});
    const RotationEncoding enc = encode_rotation(frame_to_rotation(p), kind);
    out.insert(out.end(), enc.values.begin(), enc.values.end());
  }
  return out;
}

std::vector<PlaneFrame> decode_targets(std::span<const double> values, int n_planes,
                                       double extent_mm, RotationKind kind) {
  const int stride = 3 + encoding_length(kind);
  if (static_cast<int>(values.size()) != n_planes * stride)
    throw PreconditionError("target vector length does not match plane count");
  std::vector<PlaneFrame> planes;
  planes.reserve(n_planes);
  for (int p = 0; p < n_planes; ++p) {
    const double* v = values.data() + p * stride;
    const Vec3 center = denormalize_translation(Vec3(v[0], v[1], v[2]), extent_mm);
    RotationEncoding enc{kind, std::vector<double>(v + 3, v + stride)};
    planes.push_back(rotation_to_frame(decode_rotation(enc), center));
  }
  return planes;
}

AugmentedSample apply_augmentation(const Volume& v, std::span<const PlaneFrame> planes,
                                   const AugmentConfig& cfg, const AugmentationDraw& draw,
                                   RotationKind kind) {
  AugmentedSample s;
  s.draw = draw;
  const std::vector<double> hu = resample_values(v, draw.transform, cfg.out);
  s.input = intensity_pipeline(hu, draw.intensity_factor, cfg.window);

  const double extent = cfg.out.extent_mm();
  s.targets.reserve(planes.size());
  for (const auto& p : planes) {
    p.validate(1e-6);
    PlaneFrame t = transform_plane(draw.transform, p);
    const Vec3 n = normalize_translation(t.center, extent);
    if (n.cwiseAbs().maxCoeff() > 0.5) {
      ++s.planes_outside_cube;
      g_out_of_cube.fetch_add(1, std::memory_order_relaxed);
    }
    s.targets.push_back(t);
  }
  s.target_vector = encode_targets(s.targets, extent, kind);
  return s;
}

AugmentedSample augment_sample(const Volume& v, std::span<const PlaneFrame> planes,
                               const AugmentConfig& cfg, SeededRng& rng, RotationKind kind) {
  return apply_augmentation(v, planes, cfg, sample_augmentation(cfg, rng), kind);
}

std::uint64_t out_of_cube_warning_count() { return g_out_of_cube.load(std::memory_order_relaxed); }

}  // namespace planereg
