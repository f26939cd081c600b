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

// Voxel grids of Hounsfield units, trilinear resampling, the intensity
// pipeline (jitter, clip, rescale, logistic window) and MPR slice rendering.
//
// Voxel (i, j, k) has its center at world ((i - (nx-1)/2) sx, ...), so the
// world origin is the grid center. Samples are stored x-fastest.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "planereg/geometry.hpp"

namespace planereg {

inline constexpr double kAirFillHu = -1024.0;
inline constexpr int kMinHu = -1024;
inline constexpr int kMaxHu = 3071;

using Dims = std::array<int, 3>;

inline std::size_t voxel_count(const Dims& d) {
  return std::size_t(d[0]) * std::size_t(d[1]) * std::size_t(d[2]);
}

class Volume {
 public:
  /// Throws PreconditionError unless dims >= 2, spacing > 0 and every value
  /// lies in [-1024, 3071].
  Volume(Dims dims, Vec3 spacing, std::vector<std::int16_t> values);
  Volume(Dims dims, Vec3 spacing, std::int16_t fill);

  const Dims& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  std::span<const std::int16_t> values() const { return values_; }

  std::size_t index(int i, int j, int k) const {
    return (std::size_t(k) * dims_[1] + j) * dims_[0] + i;
  }
  std::int16_t at(int i, int j, int k) const { return values_[index(i, j, k)]; }
  Vec3 voxel_center(int i, int j, int k) const;
  /// Physical edge lengths n * spacing per axis.
  Vec3 extent() const;

 private:
  Dims dims_;
  Vec3 spacing_;
  std::vector<std::int16_t> values_;
};

/// Output grid description for resampling.
struct GridSpec {
  Dims dims{};
  Vec3 spacing = Vec3::Ones();

  Vec3 voxel_center(int i, int j, int k) const;
  /// Edge length used to normalize plane centers (mean over axes).
  double extent_mm() const;
};

/// Trilinear interpolation at a world point. Neighbours outside the grid
/// contribute the air fill value, so points one voxel or more beyond the last
/// voxel center return exactly -1024.
double trilinear_sample(const Volume& v, const Vec3& p);

/// Output voxel at world point q takes trilinear_sample(v, T^-1 q). One
/// interpolation pass regardless of how many transforms were composed into T.
std::vector<double> resample_values(const Volume& v, const RigidTransform& t, const GridSpec& out);

/// As resample_values, rounded and clamped into an int16 volume.
Volume resample(const Volume& v, const RigidTransform& t, const GridSpec& out);

/// Number of resample passes performed by this process (all threads).
std::uint64_t interpolation_pass_count();

struct WindowConfig {
  double clip_lo = -490.0;
  double clip_hi = 1040.0;
  double gain = default_window_gain();

  /// 2 ln 99: maps the clip range endpoints to 0.01 and 0.99.
  static double default_window_gain();
  void validate() const;
};

double intensity_jitter(double hu, double factor);
double clip_rescale(double hu, const WindowConfig& cfg);
double window(double x, double gain);

/// jitter -> clip -> rescale -> window, applied elementwise.
std::vector<float> intensity_pipeline(std::span<const double> hu, double factor,
                                      const WindowConfig& cfg);

/// 8-bit grayscale, row 0 at the top.
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int x, int row) const { return pixels[std::size_t(row) * width + x]; }
};

/// Pixel (i, j) samples A + (i - (w-1)/2) s e_u + (j - (h-1)/2) s e_v, with j
/// counting upward from the bottom row of the image.
Image8 extract_mpr_slice(const Volume& v, const PlaneFrame& plane, int width, int height,
                         double px_spacing, const WindowConfig& cfg = {});

}  // namespace planereg
