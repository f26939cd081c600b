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

#include "planereg/volume.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace planereg {
namespace {

std::atomic<std::uint64_t> g_interpolation_passes{0};

void check_grid(const Dims& dims, const Vec3& spacing) {
  for (int d : dims)
    if (d < 2) throw PreconditionError("volume dims must be >= 2 per axis");
  if (!(spacing.x() > 0 && spacing.y() > 0 && spacing.z() > 0) || !spacing.allFinite())
    throw PreconditionError("volume spacing must be positive");
}

// Continuous voxel index, snapped to the integer when within rounding noise so
// that sampling at a voxel center returns the stored value exactly.
inline double continuous_index(double world, double spacing, int n) {
  const double u = world / spacing + 0.5 * (n - 1);
  const double r = std::nearbyint(u);
  return std::abs(u - r) < 1e-9 ? r : u;
}

}  // namespace

Volume::Volume(Dims dims, Vec3 spacing, std::vector<std::int16_t> values)
    : dims_(dims), spacing_(spacing), values_(std::move(values)) {
  check_grid(dims_, spacing_);
  if (values_.size() != voxel_count(dims_))
    throw PreconditionError("volume value count does not match dims");
  for (auto v : values_)
    if (v < kMinHu || v > kMaxHu) throw PreconditionError("volume value outside [-1024, 3071] HU");
}

Volume::Volume(Dims dims, Vec3 spacing, std::int16_t fill)
    : Volume(dims, spacing, std::vector<std::int16_t>(voxel_count(dims), fill)) {}

Vec3 Volume::voxel_center(int i, int j, int k) const {
  return {(i - 0.5 * (dims_[0] - 1)) * spacing_.x(), (j - 0.5 * (dims_[1] - 1)) * spacing_.y(),
          (k - 0.5 * (dims_[2] - 1)) * spacing_.z()};
}

Vec3 Volume::extent() const {
  return {dims_[0] * spacing_.x(), dims_[1] * spacing_.y(), dims_[2] * spacing_.z()};
}

Vec3 GridSpec::voxel_center(int i, int j, int k) const {
  return {(i - 0.5 * (dims[0] - 1)) * spacing.x(), (j - 0.5 * (dims[1] - 1)) * spacing.y(),
          (k - 0.5 * (dims[2] - 1)) * spacing.z()};
}

double GridSpec::extent_mm() const {
  return (dims[0] * spacing.x() + dims[1] * spacing.y() + dims[2] * spacing.z()) / 3.0;
}

double trilinear_sample(const Volume& v, const Vec3& p) {
  const Dims& n = v.dims();
  const double u = continuous_index(p.x(), v.spacing().x(), n[0]);
  const double w = continuous_index(p.y(), v.spacing().y(), n[1]);
  const double s = continuous_index(p.z(), v.spacing().z(), n[2]);
  if (!(u > -1.0 && u < n[0] && w > -1.0 && w < n[1] && s > -1.0 && s < n[2])) return kAirFillHu;

  const int i0 = static_cast<int>(std::floor(u));
  const int j0 = static_cast<int>(std::floor(w));
  const int k0 = static_cast<int>(std::floor(s));
  const double fx = u - i0, fy = w - j0, fz = s - k0;
  auto value = [&](int i, int j, int k) -> double {
    if (i < 0 || j < 0 || k < 0 || i >= n[0] || j >= n[1] || k >= n[2]) return kAirFillHu;
    return v.at(i, j, k);
  };
  // Exact hits skip the neighbours so boundary voxels don't blend with air.
  if (fx == 0.0 && fy == 0.0 && fz == 0.0) return value(i0, j0, k0);

  const double c000 = value(i0, j0, k0), c100 = value(i0 + 1, j0, k0);
  const double c010 = value(i0, j0 + 1, k0), c110 = value(i0 + 1, j0 + 1, k0);
  const double c001 = value(i0, j0, k0 + 1), c101 = value(i0 + 1, j0, k0 + 1);
  const double c011 = value(i0, j0 + 1, k0 + 1), c111 = value(i0 + 1, j0 + 1, k0 + 1);
  const double c00 = c000 + fx * (c100 - c000);
  const double c10 = c010 + fx * (c110 - c010);
  const double c01 = c001 + fx * (c101 - c001);
  const double c11 = c011 + fx * (c111 - c011);
  const double c0 = c00 + fy * (c10 - c00);
  const double c1 = c01 + fy * (c11 - c01);
  return c0 + fz * (c1 - c0);
}

std::vector<double> resample_values(const Volume& v, const RigidTransform& t, const GridSpec& out) {
  check_grid(out.dims, out.spacing);
  const RigidTransform inv = t.inverse();
  const Eigen::Matrix3d lin = inv.linear();
  const Vec3 off = inv.offset();
  g_interpolation_passes.fetch_add(1, std::memory_order_relaxed);

  std::vector<double> result(voxel_count(out.dims));
  std::size_t idx = 0;
  for (int k = 0; k < out.dims[2]; ++k) {
    for (int j = 0; j < out.dims[1]; ++j) {
      for (int i = 0; i < out.dims[0]; ++i) {
        const Vec3 q = out.voxel_center(i, j, k);
        result[idx++] = trilinear_sample(v, lin * q + off);
      }
    }
  }
  return result;
}

Volume resample(const Volume& v, const RigidTransform& t, const GridSpec& out) {
  const std::vector<double> vals = resample_values(v, t, out);
  std::vector<std::int16_t> hu(vals.size());
  std::transform(vals.begin(), vals.end(), hu.begin(), [](double x) {
    return static_cast<std::int16_t>(std::clamp(std::nearbyint(x), double(kMinHu), double(kMaxHu)));
  });
  return Volume(out.dims, out.spacing, std::move(hu));
}

std::uint64_t interpolation_pass_count() {
  return g_interpolation_passes.load(std::memory_order_relaxed);
}

double WindowConfig::default_window_gain() { return 2.0 * std::log(99.0); }

void WindowConfig::validate() const {
  if (!(clip_lo < clip_hi)) throw PreconditionError("window clip_lo must be below clip_hi");
  if (!(gain > 0.0)) throw PreconditionError("window gain must be positive");
}

double intensity_jitter(double hu, double factor) { return (hu + 1000.0) * factor - 1000.0; }

double clip_rescale(double hu, const WindowConfig& cfg) {
  const double c = std::clamp(hu, cfg.clip_lo, cfg.clip_hi);
  return (c - cfg.clip_lo) / (cfg.clip_hi - cfg.clip_lo);
}

double window(double x, double gain) { return 1.0 / (1.0 + std::exp(gain * (0.5 - x))); }

std::vector<float> intensity_pipeline(std::span<const double> hu, double factor,
                                      const WindowConfig& cfg) {
  std::vector<float> out(hu.size());
  for (std::size_t i = 0; i < hu.size(); ++i)
    out[i] = static_cast<float>(window(clip_rescale(intensity_jitter(hu[i], factor), cfg), cfg.gain));
  return out;
}

Image8 extract_mpr_slice(const Volume& v, const PlaneFrame& plane, int width, int height,
                         double px_spacing, const WindowConfig& cfg) {
  if (width <= 0 || height <= 0 || !(px_spacing > 0.0))
    throw PreconditionError("slice size and pixel spacing must be positive");
  plane.validate(1e-6);
  Image8 img{width, height, std::vector<std::uint8_t>(std::size_t(width) * height)};
  for (int j = 0; j < height; ++j) {
    const int row = height - 1 - j;
    for (int i = 0; i < width; ++i) {
      const Vec3 p = plane.center + (i - 0.5 * (width - 1)) * px_spacing * plane.e_u +
                     (j - 0.5 * (height - 1)) * px_spacing * plane.e_v;
      const double g = window(clip_rescale(trilinear_sample(v, p), cfg), cfg.gain);
      img.pixels[std::size_t(row) * width + i] =
          static_cast<std::uint8_t>(std::clamp(std::nearbyint(255.0 * g), 0.0, 255.0));
    }
  }
  return img;
}

}  // namespace planereg
