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

#include "planereg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>

#include "planereg/fileutil.hpp"
#include "planereg/volume_io.hpp"

namespace planereg {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

// Inside tests with an outward margin (0 for bone, tissue_margin for the shell).
bool inside_anatomy(const AnatomyParams& an, const Vec3& p, double margin) {
  const Vec3 ax = an.shaft_semi_axes_mm + Vec3::Constant(margin);
  const Vec3 q(p.x(), p.y(), p.z() - an.shaft_center_z_mm);
  if ((q.cwiseQuotient(ax)).squaredNorm() <= 1.0) return true;

  const Vec3 big(-an.condyle_offset_x_mm, 0.0, an.condyle_center_z_mm);
  const Vec3 small(an.condyle_offset_x_mm, 0.0, an.condyle_center_z_mm);
  const double rb = an.condyle_large_radius_mm + margin;
  const double rs = an.condyle_small_radius_mm + margin;
  if ((p - big).squaredNorm() <= rb * rb) return true;
  if ((p - small).squaredNorm() <= rs * rs) return true;

  const double z_lo = an.condyle_center_z_mm - 6.0 - margin;
  const double z_hi = an.shaft_center_z_mm - 8.0 + margin;
  return std::abs(p.x()) <= an.plate_half_width_mm + margin &&
         std::abs(p.y() - an.plate_offset_y_mm) <= 0.5 * an.plate_thickness_mm + margin &&
         p.z() >= z_lo && p.z() <= z_hi;
}

}  // namespace

std::string_view to_string(AnatomyMode mode) {
  return mode == AnatomyMode::kAnkle ? "ankle" : "calcaneus";
}

std::string_view to_string(OriginClass c) {
  switch (c) {
    case OriginClass::kMetal:
      return "metal";
    case OriginClass::kMetalOutside:
      return "metal_outside";
    case OriginClass::kNoMetal:
      return "no_metal";
  }
  return "unknown";
}

AnatomyMode parse_anatomy_mode(std::string_view s) {
  if (s == "ankle") return AnatomyMode::kAnkle;
  if (s == "calcaneus") return AnatomyMode::kCalcaneus;
  throw ValidationError("unknown mode '" + std::string(s) + "' (expected ankle or calcaneus)");
}

OriginClass parse_origin_class(std::string_view s) {
  if (s == "metal") return OriginClass::kMetal;
  if (s == "metal_outside") return OriginClass::kMetalOutside;
  if (s == "no_metal") return OriginClass::kNoMetal;
  throw ValidationError("unknown origin class '" + std::string(s) + "'");
}

void AnatomyParams::validate() const {
  const double lengths[] = {shaft_semi_axes_mm.x(), shaft_semi_axes_mm.y(), shaft_semi_axes_mm.z(),
                            condyle_large_radius_mm, condyle_small_radius_mm, plate_thickness_mm,
                            plate_half_width_mm};
  for (double l : lengths)
    if (!(l > 0.0)) throw PreconditionError("anatomy lengths must be positive");
  if (!(tissue_margin_mm >= 0.0)) throw PreconditionError("tissue margin must be non-negative");
  if (!(semi_coronal_tilt_deg >= 0.0 && semi_coronal_tilt_deg <= 45.0))
    throw PreconditionError("semi-coronal tilt must be in [0, 45] degrees");
}

void PhantomSpec::validate() const {
  anatomy.validate();
  if (!(truncation > 0.0 && truncation <= 1.0)) throw PreconditionError("truncation must be in (0, 1]");
  for (const auto& rod : metal)
    if (!(rod.radius_mm > 0.0)) throw PreconditionError("metal rod radius must be positive");
}

std::vector<NamedPlane> canonical_planes(AnatomyMode mode, const AnatomyParams& anatomy) {
  const Vec3 center = Vec3::Zero();
  std::vector<NamedPlane> planes;
  planes.push_back({"axial", PlaneFrame{center, Vec3::UnitX(), Vec3::UnitY()}});
  if (mode == AnatomyMode::kAnkle) {
    planes.push_back({"coronal", PlaneFrame{center, Vec3::UnitY(), Vec3::UnitZ()}});
  } else {
    // Coronal frame tilted about its own e_u (canonical y) so that the normal
    // leans towards the shaft axis: n = (cos t, 0, sin t).
    const RotMat3 tilt = axis_angle(Vec3::UnitY(), -anatomy.semi_coronal_tilt_deg * kDeg);
    planes.push_back({"semicoronal", PlaneFrame{center, Vec3::UnitY(), tilt * Vec3::UnitZ()}});
  }
  planes.push_back({"sagittal", PlaneFrame{center, Vec3::UnitX(), Vec3::UnitZ()}});
  return planes;
}

int canonical_label(const PhantomSpec& spec, const Vec3& p) {
  for (const auto& rod : spec.metal)
    if (segment_distance(p, rod.a, rod.b) <= rod.radius_mm) return 3;
  if (inside_anatomy(spec.anatomy, p, 0.0)) return 2;
  if (inside_anatomy(spec.anatomy, p, spec.anatomy.tissue_margin_mm)) return 1;
  return 0;
}

Phantom generate_phantom(const PhantomSpec& spec, const Dims& dims, const Vec3& spacing) {
  spec.validate();
  static constexpr std::int16_t kLabelHu[] = {kAirHu, kTissueHu, kBoneHu, kMetalHu};

  Volume shape(dims, spacing, kAirHu);  // validates the grid
  std::vector<std::int16_t> values(voxel_count(dims), kAirHu);
  const RigidTransform to_canonical = spec.pose.inverse();
  const double z_keep = 0.5 * spec.truncation * dims[2] * spacing.z();
  std::size_t bone_voxels = 0;
  std::size_t idx = 0;
  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i, ++idx) {
        const Vec3 w = shape.voxel_center(i, j, k);
        if (std::abs(w.z()) > z_keep) {
          values[idx] = static_cast<std::int16_t>(kAirFillHu);
          continue;
        }
        const int label = canonical_label(spec, to_canonical.apply_point(w));
        values[idx] = kLabelHu[label];
        if (label == 2) ++bone_voxels;
      }
    }
  }
  if (bone_voxels == 0) throw PreconditionError("phantom anatomy lies entirely outside the volume");

  Phantom ph{Volume(dims, spacing, std::move(values)), canonical_planes(spec.mode, spec.anatomy)};
  for (auto& p : ph.planes) p.frame = transform_plane(spec.pose, p.frame);
  return ph;
}

PhantomSpec random_phantom_spec(std::uint64_t seed, int patient_id, int acquisition,
                                AnatomyMode mode, OriginClass origin,
                                const PhantomSampling& s) {
  PhantomSpec spec;
  spec.patient_id = patient_id;
  spec.mode = mode;
  spec.origin = origin;

  std::mt19937_64 anat(derive_seed(seed, "phantom-anatomy", static_cast<std::uint64_t>(patient_id)));
  auto jit = [&](double v) { return v * uniform(anat, 1.0 - s.anatomy_jitter, 1.0 + s.anatomy_jitter); };
  AnatomyParams& an = spec.anatomy;
  an.shaft_semi_axes_mm = Vec3(jit(an.shaft_semi_axes_mm.x()), jit(an.shaft_semi_axes_mm.y()),
                               jit(an.shaft_semi_axes_mm.z()));
  an.shaft_center_z_mm = jit(an.shaft_center_z_mm);
  an.condyle_large_radius_mm = jit(an.condyle_large_radius_mm);
  an.condyle_small_radius_mm = jit(an.condyle_small_radius_mm);
  an.condyle_offset_x_mm = jit(an.condyle_offset_x_mm);
  an.condyle_center_z_mm = jit(an.condyle_center_z_mm);
  an.plate_thickness_mm = jit(an.plate_thickness_mm);
  an.plate_half_width_mm = jit(an.plate_half_width_mm);
  an.plate_offset_y_mm = jit(an.plate_offset_y_mm);
  an.semi_coronal_tilt_deg =
      mode == AnatomyMode::kCalcaneus ? uniform(anat, s.tilt_lo_deg, s.tilt_hi_deg) : 0.0;

  const std::uint64_t vol_index =
      (static_cast<std::uint64_t>(patient_id) << 16) ^ static_cast<std::uint64_t>(acquisition);
  std::mt19937_64 g(derive_seed(seed, "phantom-volume", vol_index));
  const double r = s.pose_rot_deg * kDeg;
  const double yaw = uniform(g, -r, r), pitch = uniform(g, -r, r), roll = uniform(g, -r, r);
  Vec3 t;
  for (int a = 0; a < 3; ++a) t[a] = uniform(g, -s.pose_trans_mm, s.pose_trans_mm);
  spec.pose = compose_transforms(
      {RigidTransform::rotation(euler_zyx(yaw, pitch, roll)), RigidTransform::translation(t)});

  if (origin != OriginClass::kNoMetal) {
    const int n_rods = std::uniform_int_distribution<int>(2, 6)(g);
    for (int i = 0; i < n_rods; ++i) {
      MetalRod rod;
      rod.radius_mm = uniform(g, 1.2, 2.5);
      const double len = uniform(g, 15.0, 35.0);
      Vec3 dir(uniform(g, -1, 1), uniform(g, -1, 1), uniform(g, -1, 1));
      if (dir.norm() < 1e-3) dir = Vec3::UnitX();
      dir.normalize();
      Vec3 mid;
      if (origin == OriginClass::kMetal) {
        // Implants: screws through shaft or condyles.
        mid = Vec3(uniform(g, -15, 15), uniform(g, -6, 6), uniform(g, -28, 30));
      } else {
        // Instruments laid on top of the limb, outside the soft tissue.
        mid = Vec3(uniform(g, -35, 35), uniform(g, 42, 55), uniform(g, -35, 35));
        dir.y() *= 0.2;
        dir.normalize();
      }
      rod.a = mid - 0.5 * len * dir;
      rod.b = mid + 0.5 * len * dir;
      spec.metal.push_back(rod);
    }
  }
  if (uniform(g, 0.0, 1.0) < s.truncation_prob) spec.truncation = uniform(g, s.truncation_lo, 1.0);
  return spec;
}

std::vector<OriginClass> assign_patient_classes(int n_patients,
                                                const std::array<double, 3>& proportions,
                                                std::uint64_t seed) {
  const double total = proportions[0] + proportions[1] + proportions[2];
  if (!(total > 0.0) || *std::min_element(proportions.begin(), proportions.end()) < 0.0)
    throw PreconditionError("class proportions must be non-negative with a positive sum");
  std::array<int, 3> counts{};
  std::array<double, 3> rem{};
  int assigned = 0;
  for (int c = 0; c < 3; ++c) {
    const double exact = n_patients * proportions[c] / total;
    counts[c] = static_cast<int>(std::floor(exact + 1e-9));
    rem[c] = exact - counts[c];
    assigned += counts[c];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (int i = 0; assigned < n_patients; ++i, ++assigned) ++counts[order[i % 3]];

  std::vector<OriginClass> classes;
  for (int c = 0; c < 3; ++c) classes.insert(classes.end(), counts[c], static_cast<OriginClass>(c));
  std::mt19937_64 g(derive_seed(seed, "patient-classes"));
  std::shuffle(classes.begin(), classes.end(), g);
  return classes;
}

Dataset generate_dataset(const DatasetRequest& req) {
  if (req.n_patients < 1 || req.volumes_per_patient < 1)
    throw PreconditionError("dataset needs at least one patient and one volume per patient");
  const auto classes = assign_patient_classes(req.n_patients, req.class_proportions, req.seed);
  Dataset ds;
  for (int pid = 0; pid < req.n_patients; ++pid) {
    for (int a = 0; a < req.volumes_per_patient; ++a) {
      const PhantomSpec spec = random_phantom_spec(req.seed, pid, a, req.mode, classes[pid], req.sampling);
      ds.phantoms.push_back(generate_phantom(spec, req.dims, req.spacing));
      std::ostringstream name;
      name << "p" << std::setw(4) << std::setfill('0') << pid << "_v" << a;
      ds.entries.push_back({name.str(), pid, classes[pid], req.mode});
    }
  }
  return ds;
}

std::filesystem::path planes_path_for(const std::filesystem::path& volume_header) {
  std::filesystem::path p = volume_header;
  p.replace_extension(".planes");
  return p;
}

void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestEntry>& entries) {
  std::ostringstream out;
  out << "# path patient_id class mode\n";
  for (const auto& e : entries)
    out << e.path.generic_string() << ' ' << e.patient_id << ' ' << to_string(e.origin) << ' '
        << to_string(e.mode) << '\n';
  write_file_atomic(manifest, out.str());
}

std::filesystem::path write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> manifest;
  for (std::size_t i = 0; i < ds.entries.size(); ++i) {
    const auto& e = ds.entries[i];
    const auto hdr = write_volume(dir / e.name, ds.phantoms[i].volume);
    write_planes(planes_path_for(hdr), ds.phantoms[i].planes);
    manifest.push_back({hdr.filename(), e.patient_id, e.origin, e.mode});
  }
  const auto path = dir / "manifest.txt";
  write_manifest(path, manifest);
  return path;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
  std::istringstream in(read_file(manifest));
  const auto base = manifest.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string path, cls, mode;
    ManifestEntry e;
    if (!(ls >> path)) continue;
    if (!(ls >> e.patient_id >> cls >> mode))
      throw ValidationError(manifest.string() + ":" + std::to_string(lineno) +
                            ": expected 'path patient_id class mode'");
    e.origin = parse_origin_class(cls);
    e.mode = parse_anatomy_mode(mode);
    std::filesystem::path p(path);
    e.path = p.is_absolute() ? p : base / p;
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace planereg
