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

#include "planereg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace planereg {

int encoding_length(RotationKind kind) { return kind == RotationKind::kQuaternion ? 4 : 6; }

std::string_view to_string(RotationKind kind) {
  switch (kind) {
    case RotationKind::kQuaternion:
      return "quaternion";
    case RotationKind::kEulerSinCos:
      return "euler";
    case RotationKind::kSixD:
      return "sixd";
  }
  return "unknown";
}

RotationKind parse_rotation_kind(std::string_view name) {
  if (name == "quaternion" || name == "quat") return RotationKind::kQuaternion;
  if (name == "euler" || name == "euler_sincos") return RotationKind::kEulerSinCos;
  if (name == "sixd" || name == "6d") return RotationKind::kSixD;
  throw ValidationError("unknown rotation representation '" + std::string(name) +
                        "' (expected quaternion, euler or sixd)");
}

void PlaneFrame::validate(double tol) const {
  if (!center.allFinite() || !e_u.allFinite() || !e_v.allFinite())
    throw PreconditionError("plane frame has non-finite components");
  if (std::abs(e_u.norm() - 1.0) > tol || std::abs(e_v.norm() - 1.0) > tol)
    throw PreconditionError("plane frame axes are not unit vectors");
  if (std::abs(e_u.dot(e_v)) > tol) throw PreconditionError("plane frame axes are not orthogonal");
}

Vec3 plane_normal(const Vec3& e_u, const Vec3& e_v) {
  constexpr double kTol = 1e-6;
  if (std::abs(e_u.norm() - 1.0) > kTol || std::abs(e_v.norm() - 1.0) > kTol)
    throw PreconditionError("plane_normal: inputs must be unit vectors");
  if (std::abs(e_u.dot(e_v)) > kTol) throw PreconditionError("plane_normal: inputs must be orthogonal");
  return e_u.cross(e_v);
}

RotMat3 frame_to_rotation(const PlaneFrame& plane) {
  RotMat3 r;
  r.col(0) = plane.e_u;
  r.col(1) = plane.e_v;
  r.col(2) = plane.e_u.cross(plane.e_v);
  return r;
}

PlaneFrame rotation_to_frame(const RotMat3& rotation, const Vec3& center) {
  return PlaneFrame{center, rotation.col(0), rotation.col(1)};
}

namespace {

// Shepperd's method: pick the largest of the four diagonal combinations to
// keep the square root well conditioned.
Eigen::Vector4d quaternion_from_matrix(const RotMat3& r) {
  const double tr = r.trace();
  Eigen::Vector4d q;  // w, x, y, z
  if (tr >= r(0, 0) && tr >= r(1, 1) && tr >= r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + tr);
    q << 0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) >= r(1, 1) && r(0, 0) >= r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    q << (r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) >= r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
    q << (r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s;
  } else {
    const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
    q << (r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s;
  }
  q.normalize();
  if (q[0] < 0.0) q = -q;
  return q;
}

}  // namespace

RotationEncoding encode_rotation(const RotMat3& r, RotationKind kind) {
  RotationEncoding enc{kind, {}};
  switch (kind) {
    case RotationKind::kQuaternion: {
      const Eigen::Vector4d q = quaternion_from_matrix(r);
      enc.values = {q[0], q[1], q[2], q[3]};
      break;
    }
    case RotationKind::kEulerSinCos: {
      // R = Rz(a) Ry(b) Rx(g): R20 = -sin b, R21 = cos b sin g, R22 = cos b cos g,
      // R10 = sin a cos b, R00 = cos a cos b. Gimbal lock at cos b = 0.
      const double cb = std::hypot(r(0, 0), r(1, 0));
      const double b = std::atan2(-r(2, 0), cb);
      double a = 0.0, g = 0.0;
      if (cb > 1e-12) {
        a = std::atan2(r(1, 0), r(0, 0));
        g = std::atan2(r(2, 1), r(2, 2));
      } else {
        // Only a -/+ g is observable; put everything into a.
        a = std::atan2(-r(0, 1), r(1, 1));
      }
      enc.values = {std::sin(a), std::cos(a), std::sin(b), std::cos(b), std::sin(g), std::cos(g)};
      break;
    }
    case RotationKind::kSixD:
      enc.values = {r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)};
      break;
  }
  return enc;
}

RotMat3 decode_rotation(const RotationEncoding& enc) {
  if (static_cast<int>(enc.values.size()) != encoding_length(enc.kind))
    throw DegenerateEncodingError("rotation encoding has wrong length");
  return decode_rotation_t<double>(enc.kind, enc.values.data());
}

RotMat3 euler_zyx(double yaw, double pitch, double roll) {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

RotMat3 axis_angle(const Vec3& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

double angle_deg(const Vec3& a, const Vec3& b) {
  // atan2 form stays accurate near 0 and 180 degrees.
  const double s = a.cross(b).norm();
  const double c = a.dot(b);
  return std::atan2(s, c) * 180.0 / std::numbers::pi;
}

Vec3 normalize_translation(const Vec3& center_mm, double extent_mm) {
  if (!(extent_mm > 0.0)) throw PreconditionError("extent must be positive");
  return center_mm / extent_mm;
}

Vec3 denormalize_translation(const Vec3& normalized, double extent_mm) {
  if (!(extent_mm > 0.0)) throw PreconditionError("extent must be positive");
  return normalized * extent_mm;
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m) {
  if (!m.allFinite()) throw PreconditionError("transform has non-finite entries");
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0)
    throw PreconditionError("transform bottom row must be (0, 0, 0, 1)");
  const Eigen::Matrix3d lin = m.topLeftCorner<3, 3>();
  const double s = std::cbrt(std::abs(lin.determinant()));
  if (!(s >= 0.9 - 1e-12 && s <= 1.1 + 1e-12))
    throw PreconditionError("transform scale outside [0.9, 1.1] or singular");
  const Eigen::Matrix3d gram = lin.transpose() * lin / (s * s);
  if (!gram.isApprox(Eigen::Matrix3d::Identity(), 1e-6))
    throw PreconditionError("transform linear part is not a scaled orthogonal matrix");
  return RigidTransform(m);
}

RigidTransform RigidTransform::translation(const Vec3& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topRightCorner<3, 1>() = t;
  return RigidTransform(m);
}

RigidTransform RigidTransform::rotation(const RotMat3& r) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = r;
  return RigidTransform(m);
}

RigidTransform RigidTransform::scale(double s) {
  if (!(s >= 0.9 - 1e-12 && s <= 1.1 + 1e-12)) throw PreconditionError("scale outside [0.9, 1.1]");
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = m(1, 1) = m(2, 2) = s;
  return RigidTransform(m);
}

RigidTransform RigidTransform::mirror_x() {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = -1.0;
  return RigidTransform(m);
}

RigidTransform RigidTransform::inverse() const {
  const Eigen::Matrix3d lin = linear();
  if (std::abs(lin.determinant()) < 1e-12) throw PreconditionError("transform is singular");
  const Eigen::Matrix3d inv = lin.inverse();
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = inv;
  m.topRightCorner<3, 1>() = -inv * offset();
  return RigidTransform(m);
}

RigidTransform compose_transforms(std::span<const RigidTransform> ts) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  for (const auto& t : ts) m = t.matrix() * m;
  m.row(3) << 0.0, 0.0, 0.0, 1.0;
  return RigidTransform(m);
}

PlaneFrame transform_plane(const RigidTransform& t, const PlaneFrame& plane) {
  PlaneFrame out;
  out.center = t.apply_point(plane.center);
  out.e_u = t.apply_direction(plane.e_u).normalized();
  out.e_v = t.apply_direction(plane.e_v).normalized();
  return out;
}

}  // namespace planereg
