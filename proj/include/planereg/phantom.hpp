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

// Procedural bone-like phantoms with exactly known standard planes.
//
// Canonical anatomy (millimetres, centered at the origin): an elliptical
// "shaft" along +z, two unequal "condyle" spheres on the x axis below it, and
// a flat posterior "plate" at +y. Bone is 700 HU inside a 40 HU soft-tissue
// shell over -1000 HU air. The scene is placed by a rigid pose and the plane
// labels are carried along with the same transform.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "planereg/geometry.hpp"
#include "planereg/plane_io.hpp"
#include "planereg/rng.hpp"
#include "planereg/volume.hpp"

namespace planereg {

inline constexpr std::int16_t kAirHu = -1000;
inline constexpr std::int16_t kTissueHu = 40;
inline constexpr std::int16_t kBoneHu = 700;
inline constexpr std::int16_t kMetalHu = 3000;

enum class AnatomyMode { kAnkle, kCalcaneus };
enum class OriginClass { kMetal, kMetalOutside, kNoMetal };

std::string_view to_string(AnatomyMode mode);
std::string_view to_string(OriginClass c);
AnatomyMode parse_anatomy_mode(std::string_view s);
OriginClass parse_origin_class(std::string_view s);

struct AnatomyParams {
  Vec3 shaft_semi_axes_mm{11.0, 9.0, 40.0};
  double shaft_center_z_mm = 14.0;
  double condyle_large_radius_mm = 14.0;
  double condyle_small_radius_mm = 10.0;
  double condyle_offset_x_mm = 17.0;
  double condyle_center_z_mm = -24.0;
  double plate_thickness_mm = 6.0;
  double plate_half_width_mm = 24.0;
  double plate_offset_y_mm = 15.0;
  double tissue_margin_mm = 7.0;
  double semi_coronal_tilt_deg = 25.0;  // calcaneus mode only

  void validate() const;
};

struct MetalRod {
  Vec3 a;  // canonical frame endpoints
  Vec3 b;
  double radius_mm;
};

struct PhantomSpec {
  int patient_id = 0;
  AnatomyMode mode = AnatomyMode::kAnkle;
  OriginClass origin = OriginClass::kNoMetal;
  RigidTransform pose;
  AnatomyParams anatomy;
  std::vector<MetalRod> metal;  // empty unless origin has metal
  double truncation = 1.0;      // retained fraction of the z extent, (0, 1]

  void validate() const;
};

struct Phantom {
  Volume volume;
  std::vector<NamedPlane> planes;  // axial, (semi)coronal, sagittal
};

/// Plane labels in the canonical frame.
std::vector<NamedPlane> canonical_planes(AnatomyMode mode, const AnatomyParams& anatomy);

/// Canonical-frame tissue label: 0 air, 1 tissue, 2 bone, 3 metal.
int canonical_label(const PhantomSpec& spec, const Vec3& p);

/// Throws PreconditionError when no bone voxel lands inside the volume.
Phantom generate_phantom(const PhantomSpec& spec, const Dims& dims, const Vec3& spacing);

struct PhantomSampling {
  double pose_rot_deg = 45.0;
  double pose_trans_mm = 10.0;
  double anatomy_jitter = 0.1;  // relative, per length
  double tilt_lo_deg = 20.0;
  double tilt_hi_deg = 30.0;
  double truncation_lo = 0.75;
  double truncation_prob = 0.3;
};

/// Per-patient anatomy comes from (seed, patient_id); per-volume pose, metal
/// and truncation from (seed, patient_id, acquisition).
PhantomSpec random_phantom_spec(std::uint64_t seed, int patient_id, int acquisition,
                                AnatomyMode mode, OriginClass origin,
                                const PhantomSampling& sampling = {});

struct DatasetEntry {
  std::string name;
  int patient_id = 0;
  OriginClass origin = OriginClass::kNoMetal;
  AnatomyMode mode = AnatomyMode::kAnkle;
};

struct DatasetRequest {
  int n_patients = 10;
  int volumes_per_patient = 2;
  AnatomyMode mode = AnatomyMode::kAnkle;
  std::uint64_t seed = 0;
  Dims dims{64, 64, 64};
  Vec3 spacing = Vec3::Constant(2.5);
  std::array<double, 3> class_proportions{0.4, 0.3, 0.3};  // metal, metal_outside, no_metal
  PhantomSampling sampling;
};

struct Dataset {
  std::vector<DatasetEntry> entries;
  std::vector<Phantom> phantoms;
};

/// Patient-level class counts by largest remainder (exact for divisible n),
/// shuffled across patients with the seed.
std::vector<OriginClass> assign_patient_classes(int n_patients,
                                                const std::array<double, 3>& proportions,
                                                std::uint64_t seed);

Dataset generate_dataset(const DatasetRequest& req);

/// Manifest: one line per volume, `path patient_id class mode`, paths relative
/// to the manifest's directory.
struct ManifestEntry {
  std::filesystem::path path;  // volume header (.vhdr)
  int patient_id = 0;
  OriginClass origin = OriginClass::kNoMetal;
  AnatomyMode mode = AnatomyMode::kAnkle;
};

/// Writes volumes, `<name>.planes` annotation files and `manifest.txt`.
std::filesystem::path write_dataset(const Dataset& ds, const std::filesystem::path& dir);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestEntry>& entries);
/// Annotation path belonging to a manifest volume.
std::filesystem::path planes_path_for(const std::filesystem::path& volume_header);

}  // namespace planereg
