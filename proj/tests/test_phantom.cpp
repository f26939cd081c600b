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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "planereg/phantom.hpp"
#include "planereg/volume_io.hpp"
#include "test_util.hpp"

using namespace planereg;

namespace {

const Dims kSmall{24, 24, 24};
const Vec3 kSmallSpacing = Vec3::Constant(6.0);

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fraction of bone voxels that still land on bone after rotating them about
// `pivot` by `r`, using nearest-voxel lookup in the rendered volume.
double bone_overlap(const Volume& v, const std::vector<Vec3>& bone, const Vec3& pivot, const RotMat3& r) {
  const Dims d = v.dims();
  const Vec3 sp = v.spacing();
  std::size_t hit = 0;
  for (const Vec3& p : bone) {
    const Vec3 q = r * (p - pivot) + pivot;
    const Vec3 idx = (q.array() / sp.array()).matrix() + 0.5 * Vec3(d[0] - 1, d[1] - 1, d[2] - 1);
    const int i = int(std::lround(idx.x())), j = int(std::lround(idx.y())), k = int(std::lround(idx.z()));
    if (i < 0 || j < 0 || k < 0 || i >= d[0] || j >= d[1] || k >= d[2]) continue;
    hit += v.at(i, j, k) == kBoneHu;
  }
  return double(hit) / double(bone.size());
}

}  // namespace

TEST_CASE("ankle planes are pairwise orthogonal under identity pose") {
  const auto planes = canonical_planes(AnatomyMode::kAnkle, AnatomyParams{});
  REQUIRE(planes.size() == 3);
  CHECK(planes[0].name == "axial");
  CHECK(planes[1].name == "coronal");
  CHECK(planes[2].name == "sagittal");
  for (int a = 0; a < 3; ++a) {
    planes[a].frame.validate(1e-12);
    for (int b = a + 1; b < 3; ++b)
      CHECK(std::abs(planes[a].frame.normal().dot(planes[b].frame.normal())) < 1e-9);
  }
}

TEST_CASE("calcaneus tilt of 25 degrees puts the semicoronal normal 65 degrees from axial") {
  AnatomyParams an;
  an.semi_coronal_tilt_deg = 25.0;
  const auto planes = canonical_planes(AnatomyMode::kCalcaneus, an);
  REQUIRE(planes.size() == 3);
  CHECK(planes[1].name == "semicoronal");
  CHECK(angle_deg(planes[0].frame.normal(), planes[1].frame.normal()) == doctest::Approx(65.0).epsilon(1e-8));
  // Only the tilted pair deviates from orthogonality.
  CHECK(std::abs(planes[0].frame.normal().dot(planes[2].frame.normal())) < 1e-9);
  CHECK(std::abs(planes[1].frame.normal().dot(planes[2].frame.normal())) < 1e-9);
}

TEST_CASE("rendered phantom: labels follow the pose and voxels take the expected HU") {
  PhantomSpec spec = random_phantom_spec(11, 3, 0, AnatomyMode::kAnkle, OriginClass::kMetal);
  spec.truncation = 1.0;
  const Phantom ph = generate_phantom(spec, {40, 40, 40}, Vec3::Constant(3.0));
  const auto canon = canonical_planes(spec.mode, spec.anatomy);
  std::set<int> values;
  for (int k = 0; k < 40; ++k)
    for (int j = 0; j < 40; ++j)
      for (int i = 0; i < 40; ++i) values.insert(ph.volume.at(i, j, k));
  CHECK(values.count(kAirHu) == 1);
  CHECK(values.count(kTissueHu) == 1);
  CHECK(values.count(kBoneHu) == 1);
  CHECK(values.count(kMetalHu) == 1);
  for (std::size_t p = 0; p < 3; ++p) {
    const PlaneFrame expect = transform_plane(spec.pose, canon[p].frame);
    CHECK(testing::max_abs_diff(ph.planes[p].frame.center, expect.center) < 1e-12);
    CHECK(testing::max_abs_diff(ph.planes[p].frame.normal(), expect.normal()) < 1e-12);
    ph.planes[p].frame.validate();
  }
  // The axial plane passes through bone at its center.
  const Vec3 c = ph.planes[0].frame.center;
  CHECK(canonical_label(spec, spec.pose.inverse().apply_point(c)) == 2);
}

TEST_CASE("truncation fills the removed slabs and metal_outside keeps metal off the bone") {
  PhantomSpec spec = random_phantom_spec(2, 0, 0, AnatomyMode::kAnkle, OriginClass::kNoMetal);
  spec.truncation = 0.5;
  const Phantom ph = generate_phantom(spec, kSmall, kSmallSpacing);
  for (int j = 0; j < kSmall[1]; ++j)
    for (int i = 0; i < kSmall[0]; ++i) {
      CHECK(ph.volume.at(i, j, 0) == -1024);
      CHECK(ph.volume.at(i, j, kSmall[2] - 1) == -1024);
    }
  const PhantomSpec outside = random_phantom_spec(2, 1, 0, AnatomyMode::kAnkle, OriginClass::kMetalOutside);
  REQUIRE(outside.metal.size() >= 2);
  REQUIRE(outside.metal.size() <= 6);
  for (const auto& rod : outside.metal)
    for (double t = 0.0; t <= 1.0; t += 0.05) {
      const Vec3 p = rod.a + t * (rod.b - rod.a);
      PhantomSpec bare = outside;
      bare.metal.clear();
      CHECK(canonical_label(bare, p) != 2);
    }
}

TEST_CASE("same spec renders bitwise identical volumes") {
  const auto s1 = random_phantom_spec(99, 4, 1, AnatomyMode::kCalcaneus, OriginClass::kMetal);
  const auto s2 = random_phantom_spec(99, 4, 1, AnatomyMode::kCalcaneus, OriginClass::kMetal);
  const auto a = generate_phantom(s1, kSmall, kSmallSpacing);
  const auto b = generate_phantom(s2, kSmall, kSmallSpacing);
  CHECK(std::ranges::equal(a.volume.values(), b.volume.values()));
  // Acquisitions of one patient share anatomy but not pose.
  const auto s3 = random_phantom_spec(99, 4, 2, AnatomyMode::kCalcaneus, OriginClass::kMetal);
  CHECK(s3.anatomy.shaft_semi_axes_mm == s1.anatomy.shaft_semi_axes_mm);
  CHECK(s3.anatomy.semi_coronal_tilt_deg == s1.anatomy.semi_coronal_tilt_deg);
  CHECK(s3.pose.matrix() != s1.pose.matrix());
}

TEST_CASE("anatomy placed fully outside the volume is rejected") {
  PhantomSpec spec;
  spec.pose = RigidTransform::translation(Vec3(1000, 0, 0));
  CHECK_THROWS_AS(generate_phantom(spec, kSmall, kSmallSpacing), PreconditionError);
  spec = PhantomSpec{};
  spec.anatomy.condyle_small_radius_mm = -1.0;
  CHECK_THROWS_AS(generate_phantom(spec, kSmall, kSmallSpacing), PreconditionError);
  spec = PhantomSpec{};
  spec.anatomy.semi_coronal_tilt_deg = 50.0;
  CHECK_THROWS_AS(spec.validate(), PreconditionError);
}

TEST_CASE("dataset of 10 patients with 2 volumes each") {
  DatasetRequest req;
  req.n_patients = 10;
  req.volumes_per_patient = 2;
  req.dims = kSmall;
  req.spacing = kSmallSpacing;
  req.seed = 5;
  const Dataset ds = generate_dataset(req);
  REQUIRE(ds.entries.size() == 20);
  REQUIRE(ds.phantoms.size() == 20);
  std::map<int, std::set<OriginClass>> classes;
  for (const auto& e : ds.entries) classes[e.patient_id].insert(e.origin);
  CHECK(classes.size() == 10);
  std::map<OriginClass, int> counts;
  for (const auto& [pid, cs] : classes) {
    CHECK(cs.size() == 1);
    ++counts[*cs.begin()];
  }
  CHECK(counts[OriginClass::kMetal] == 4);
  CHECK(counts[OriginClass::kMetalOutside] == 3);
  CHECK(counts[OriginClass::kNoMetal] == 3);

  const auto dir1 = testing::temp_dir("dataset_a");
  const auto dir2 = testing::temp_dir("dataset_b");
  const auto m1 = write_dataset(ds, dir1);
  const auto m2 = write_dataset(generate_dataset(req), dir2);
  CHECK(slurp(m1) == slurp(m2));

  const auto entries = read_manifest(m1);
  REQUIRE(entries.size() == 20);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    CHECK(entries[i].patient_id == ds.entries[i].patient_id);
    CHECK(entries[i].origin == ds.entries[i].origin);
    CHECK(std::filesystem::exists(entries[i].path));
    CHECK(std::filesystem::exists(planes_path_for(entries[i].path)));
    CHECK(slurp(entries[i].path) == slurp(dir2 / std::filesystem::relative(entries[i].path, dir1)));
  }
  const Volume back = read_volume(entries[3].path);
  CHECK(std::ranges::equal(back.values(), ds.phantoms[3].volume.values()));
}

TEST_CASE("class assignment is exact for divisible counts") {
  for (int n : {10, 20, 50, 100}) {
    const auto cls = assign_patient_classes(n, {0.4, 0.3, 0.3}, 1);
    CHECK(std::count(cls.begin(), cls.end(), OriginClass::kMetal) == n * 4 / 10);
    CHECK(std::count(cls.begin(), cls.end(), OriginClass::kMetalOutside) == n * 3 / 10);
    CHECK(std::count(cls.begin(), cls.end(), OriginClass::kNoMetal) == n * 3 / 10);
  }
  const auto odd = assign_patient_classes(7, {1, 1, 1}, 3);
  CHECK(odd.size() == 7);
  CHECK_THROWS_AS(assign_patient_classes(5, {-1, 1, 1}, 0), PreconditionError);
}

TEST_CASE("rotation grid search over the rendered volume recovers a unique pose") {
  // Axes on a Fibonacci sphere times angles 30..180 degrees. Every grid
  // rotation is at least 30 degrees from the identity, so a unique optimum
  // within 5 degrees means all of them overlap clearly worse than identity.
  std::vector<RotMat3> grid;
  const int n_axes = 40;
  for (int a = 0; a < n_axes; ++a) {
    const double z = 1.0 - 2.0 * (a + 0.5) / n_axes;
    const double phi = a * std::numbers::pi * (3.0 - std::sqrt(5.0));
    const Vec3 axis(std::sqrt(1 - z * z) * std::cos(phi), std::sqrt(1 - z * z) * std::sin(phi), z);
    for (int deg = 30; deg <= 180; deg += 30) grid.push_back(axis_angle(axis, deg * std::numbers::pi / 180.0));
  }
  PhantomSampling sampling;
  sampling.truncation_prob = 0.0;
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const AnatomyMode mode = n % 2 ? AnatomyMode::kCalcaneus : AnatomyMode::kAnkle;
    const auto spec = random_phantom_spec(1234, n, 0, mode, OriginClass::kNoMetal, sampling);
    const auto ph = generate_phantom(spec, {36, 36, 36}, Vec3::Constant(3.5));
    std::vector<Vec3> bone;
    for (int k = 0; k < 36; ++k)
      for (int j = 0; j < 36; ++j)
        for (int i = 0; i < 36; ++i)
          if (ph.volume.at(i, j, k) == kBoneHu) bone.push_back(ph.volume.voxel_center(i, j, k));
    REQUIRE(bone.size() > 200);
    const Vec3 pivot = spec.pose.offset();
    CHECK(bone_overlap(ph.volume, bone, pivot, RotMat3::Identity()) == 1.0);
    for (const auto& r : grid) worst = std::max(worst, bone_overlap(ph.volume, bone, pivot, r));
  }
  MESSAGE("best non-identity overlap: " << worst);
  CHECK(worst < 0.8);
}
