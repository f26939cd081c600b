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

// Plane parameterization, rotation encodings and homogeneous transforms.
//
// A standard plane is stored as its center A and the in-plane unit vectors
// e_u (screen right) and e_v (screen up). The normal is e_w = e_u x e_v and
// R = [e_u, e_v, e_w] is the rotation from volume to plane coordinates.
//
// World coordinates are right-handed in millimetres with the origin at the
// volume center and axes aligned with the voxel axes.

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "planereg/error.hpp"

namespace planereg {

using Vec3 = Eigen::Vector3d;
using RotMat3 = Eigen::Matrix3d;

enum class RotationKind { kQuaternion, kEulerSinCos, kSixD };

/// Number of values in the wire encoding: 4, 6 or 6.
int encoding_length(RotationKind kind);
std::string_view to_string(RotationKind kind);
/// Accepts "quaternion", "euler", "sixd" (and "6d"). Throws ValidationError.
RotationKind parse_rotation_kind(std::string_view name);

struct RotationEncoding {
  RotationKind kind = RotationKind::kSixD;
  std::vector<double> values;
};

struct PlaneFrame {
  Vec3 center = Vec3::Zero();
  Vec3 e_u = Vec3::UnitX();
  Vec3 e_v = Vec3::UnitY();

  Vec3 normal() const { return e_u.cross(e_v); }

  /// Throws PreconditionError unless e_u, e_v are orthonormal within `tol`.
  void validate(double tol = 1e-9) const;
};

Vec3 plane_normal(const Vec3& e_u, const Vec3& e_v);

RotMat3 frame_to_rotation(const PlaneFrame& plane);
PlaneFrame rotation_to_frame(const RotMat3& rotation, const Vec3& center);

/// Quaternions are (w, x, y, z) with w >= 0. Euler values are
/// (sin a, cos a, sin b, cos b, sin g, cos g) for intrinsic Z-Y-X angles, i.e.
/// R = Rz(a) Ry(b) Rx(g). SixD is the first two columns of R, column by column.
RotationEncoding encode_rotation(const RotMat3& rotation, RotationKind kind);

/// Always returns a proper rotation; unnormalized inputs are projected.
/// Throws DegenerateEncodingError when the encoding carries no rotation.
RotMat3 decode_rotation(const RotationEncoding& encoding);

/// Intrinsic Z-Y-X composition Rz(yaw) Ry(pitch) Rx(roll), radians.
RotMat3 euler_zyx(double yaw, double pitch, double roll);
RotMat3 axis_angle(const Vec3& axis, double angle_rad);

/// Unsigned angle between two vectors in degrees, in [0, 180].
double angle_deg(const Vec3& a, const Vec3& b);

Vec3 normalize_translation(const Vec3& center_mm, double extent_mm);
Vec3 denormalize_translation(const Vec3& normalized, double extent_mm);

/// 4x4 homogeneous transform: rotation or reflection, uniform scale and
/// translation. The bottom row is always exactly (0, 0, 0, 1).
class RigidTransform {
 public:
  RigidTransform() : m_(Eigen::Matrix4d::Identity()) {}

  /// Throws PreconditionError if the bottom row is not (0,0,0,1) or the
  /// linear part is not an orthogonal matrix times a scale in [0.9, 1.1].
  static RigidTransform from_matrix(const Eigen::Matrix4d& m);

  static RigidTransform identity() { return {}; }
  static RigidTransform translation(const Vec3& t);
  static RigidTransform rotation(const RotMat3& r);
  static RigidTransform scale(double s);
  /// Reflection x -> -x.
  static RigidTransform mirror_x();

  const Eigen::Matrix4d& matrix() const { return m_; }
  Eigen::Matrix3d linear() const { return m_.topLeftCorner<3, 3>(); }
  Vec3 offset() const { return m_.topRightCorner<3, 1>(); }
  double linear_determinant() const { return linear().determinant(); }

  Vec3 apply_point(const Vec3& p) const { return linear() * p + offset(); }
  Vec3 apply_direction(const Vec3& d) const { return linear() * d; }

  /// Throws PreconditionError when the linear part is singular.
  RigidTransform inverse() const;

 private:
  explicit RigidTransform(const Eigen::Matrix4d& m) : m_(m) {}
  friend RigidTransform compose_transforms(std::span<const RigidTransform> ts);
  Eigen::Matrix4d m_;
};

/// Product that applies ts[0] first and ts.back() last. Empty -> identity.
RigidTransform compose_transforms(std::span<const RigidTransform> ts);
inline RigidTransform compose_transforms(std::initializer_list<RigidTransform> ts) {
  return compose_transforms(std::span<const RigidTransform>(ts.begin(), ts.size()));
}

/// Moves a plane label along with a transform of the volume. Directions are
/// re-normalized and the normal is always recomputed as e_u' x e_v', so a
/// mirrored frame stays right-handed.
PlaneFrame transform_plane(const RigidTransform& t, const PlaneFrame& plane);

namespace detail {

inline double value_of(double x) { return x; }
template <typename Der>
double value_of(const Eigen::AutoDiffScalar<Der>& x) {
  return x.value();
}

inline constexpr double kDegenerateEps = 1e-8;

}  // namespace detail

/// Decode shared by the double path and the automatic differentiation used by
/// the loss. `values` must hold encoding_length(kind) entries.
template <typename S>
Eigen::Matrix<S, 3, 3> decode_rotation_t(RotationKind kind, const S* values) {
  using std::atan2;
  using std::cos;
  using std::sin;
  using std::sqrt;
  using Mat = Eigen::Matrix<S, 3, 3>;
  using V3 = Eigen::Matrix<S, 3, 1>;
  for (int i = 0; i < encoding_length(kind); ++i)
    if (!std::isfinite(detail::value_of(values[i])))
      throw DegenerateEncodingError("rotation encoding has non-finite values");

  Mat r;
  switch (kind) {
    case RotationKind::kQuaternion: {
      const S n2 = values[0] * values[0] + values[1] * values[1] + values[2] * values[2] +
                   values[3] * values[3];
      if (!(detail::value_of(n2) > detail::kDegenerateEps * detail::kDegenerateEps))
        throw DegenerateEncodingError("quaternion norm below 1e-8");
      const S n = sqrt(n2);
      const S w = values[0] / n, x = values[1] / n, y = values[2] / n, z = values[3] / n;
      r(0, 0) = S(1) - S(2) * (y * y + z * z);
      r(0, 1) = S(2) * (x * y - w * z);
      r(0, 2) = S(2) * (x * z + w * y);
      r(1, 0) = S(2) * (x * y + w * z);
      r(1, 1) = S(1) - S(2) * (x * x + z * z);
      r(1, 2) = S(2) * (y * z - w * x);
      r(2, 0) = S(2) * (x * z - w * y);
      r(2, 1) = S(2) * (y * z + w * x);
      r(2, 2) = S(1) - S(2) * (x * x + y * y);
      return r;
    }
    case RotationKind::kEulerSinCos: {
      S ang[3];
      for (int i = 0; i < 3; ++i) {
        const S s = values[2 * i];
        const S c = values[2 * i + 1];
        if (!(detail::value_of(s * s + c * c) > detail::kDegenerateEps))
          throw DegenerateEncodingError("euler sin/cos pair has vanishing norm");
        ang[i] = atan2(s, c);
      }
      const S ca = cos(ang[0]), sa = sin(ang[0]);
      const S cb = cos(ang[1]), sb = sin(ang[1]);
      const S cg = cos(ang[2]), sg = sin(ang[2]);
      r(0, 0) = ca * cb;
      r(0, 1) = ca * sb * sg - sa * cg;
      r(0, 2) = ca * sb * cg + sa * sg;
      r(1, 0) = sa * cb;
      r(1, 1) = sa * sb * sg + ca * cg;
      r(1, 2) = sa * sb * cg - ca * sg;
      r(2, 0) = -sb;
      r(2, 1) = cb * sg;
      r(2, 2) = cb * cg;
      return r;
    }
    case RotationKind::kSixD: {
      V3 c1(values[0], values[1], values[2]);
      V3 c2(values[3], values[4], values[5]);
      const S n1 = sqrt(c1.dot(c1));
      if (!(detail::value_of(n1) > detail::kDegenerateEps))
        throw DegenerateEncodingError("6D first column norm below 1e-8");
      c1 /= n1;
      V3 resid = c2 - c2.dot(c1) * c1;
      const S n2 = sqrt(resid.dot(resid));
      if (!(detail::value_of(n2) > detail::kDegenerateEps))
        throw DegenerateEncodingError("6D columns are parallel");
      resid /= n2;
      r.col(0) = c1;
      r.col(1) = resid;
      r.col(2) = c1.cross(resid);
      return r;
    }
  }
  throw DegenerateEncodingError("unknown rotation kind");
}

}  // namespace planereg
