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

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "planereg/geometry.hpp"
#include "planereg/plane_io.hpp"
#include "test_util.hpp"

using namespace planereg;
using planereg::testing::max_abs_diff;
using planereg::testing::random_frame;
using planereg::testing::random_rotation;

namespace {
constexpr double kPi = std::numbers::pi;

RotMat3 rot_z(double deg) {
  const double t = deg * kPi / 180.0;
  RotMat3 r;
  r << std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t), 0, 0, 0, 1;
  return r;
}

void check_rotation(const RotMat3& r, double tol) {
  CHECK(max_abs_diff(r.transpose() * r, RotMat3::Identity()) < tol);
  CHECK(std::abs(r.determinant() - 1.0) < tol);
}
}  // namespace

TEST_CASE("plane_normal") {
  CHECK(max_abs_diff(plane_normal(Vec3::UnitX(), Vec3::UnitY()), Vec3::UnitZ()) == 0.0);
  CHECK(max_abs_diff(plane_normal(Vec3::UnitY(), Vec3::UnitZ()), Vec3::UnitX()) == 0.0);
  CHECK(max_abs_diff(plane_normal(Vec3::UnitX(), Vec3::UnitZ()), -Vec3::UnitY()) == 0.0);
  CHECK_THROWS_AS(plane_normal(Vec3(2, 0, 0), Vec3::UnitY()), PreconditionError);
  CHECK_THROWS_AS(plane_normal(Vec3::UnitX(), Vec3(1, 1, 0).normalized()), PreconditionError);
}

TEST_CASE("frame_to_rotation assembles columns") {
  CHECK(max_abs_diff(frame_to_rotation({Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY()}), RotMat3::Identity()) == 0.0);
  const RotMat3 r = frame_to_rotation({Vec3::Zero(), Vec3::UnitY(), -Vec3::UnitX()});
  CHECK(max_abs_diff(r, rot_z(90)) < 1e-15);

  std::mt19937_64 g(11);
  for (int i = 0; i < 100; ++i) {
    const PlaneFrame f = random_frame(g);
    const PlaneFrame back = rotation_to_frame(frame_to_rotation(f), f.center);
    CHECK(max_abs_diff(back.e_u, f.e_u) == 0.0);
    CHECK(max_abs_diff(back.e_v, f.e_v) == 0.0);
    CHECK(max_abs_diff(back.center, f.center) == 0.0);
  }
}

TEST_CASE("encode_rotation examples") {
  const auto six = encode_rotation(RotMat3::Identity(), RotationKind::kSixD).values;
  CHECK(six == std::vector<double>{1, 0, 0, 0, 1, 0});
  const auto q = encode_rotation(RotMat3::Identity(), RotationKind::kQuaternion).values;
  CHECK(q == std::vector<double>{1, 0, 0, 0});
  const auto qz = encode_rotation(rot_z(90), RotationKind::kQuaternion).values;
  const double h = std::sqrt(2.0) / 2.0;
  CHECK(qz[0] == doctest::Approx(h).epsilon(1e-15));
  CHECK(std::abs(qz[1]) < 1e-15);
  CHECK(std::abs(qz[2]) < 1e-15);
  CHECK(qz[3] == doctest::Approx(h).epsilon(1e-15));
  const auto e = encode_rotation(RotMat3::Identity(), RotationKind::kEulerSinCos).values;
  CHECK(e == std::vector<double>{0, 1, 0, 1, 0, 1});
}

TEST_CASE("encodings stay in their documented ranges") {
  std::mt19937_64 g(12);
  for (int i = 0; i < 2000; ++i) {
    const RotMat3 r = random_rotation(g);
    const auto q = encode_rotation(r, RotationKind::kQuaternion).values;
    CHECK(q[0] >= 0.0);
    CHECK(std::abs(std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]) - 1.0) < 1e-12);
    for (RotationKind k : {RotationKind::kEulerSinCos, RotationKind::kSixD})
      for (double v : encode_rotation(r, k).values) CHECK(std::abs(v) <= 1.0 + 1e-15);
  }
}

TEST_CASE("decode_rotation examples") {
  CHECK(max_abs_diff(decode_rotation({RotationKind::kSixD, {1, 0, 0, 1, 1, 0}}), RotMat3::Identity()) < 1e-15);
  CHECK(max_abs_diff(decode_rotation({RotationKind::kQuaternion, {2, 0, 0, 0}}), RotMat3::Identity()) == 0.0);
  const RotMat3 r = decode_rotation({RotationKind::kEulerSinCos, {0.2, 0.2, 0, 1, 0, 1}});
  CHECK(max_abs_diff(r, rot_z(45)) < 1e-15);
}

TEST_CASE("decode_rotation rejects degenerate encodings") {
  CHECK_THROWS_AS(decode_rotation({RotationKind::kQuaternion, {0, 0, 0, 0}}), DegenerateEncodingError);
  CHECK_THROWS_AS(decode_rotation({RotationKind::kSixD, {0, 0, 0, 0, 1, 0}}), DegenerateEncodingError);
  CHECK_THROWS_AS(decode_rotation({RotationKind::kSixD, {1, 0, 0, 2, 0, 0}}), DegenerateEncodingError);
  CHECK_THROWS_AS(decode_rotation({RotationKind::kEulerSinCos, {0, 0, 0, 1, 0, 1}}), DegenerateEncodingError);
  CHECK_THROWS_AS(decode_rotation({RotationKind::kSixD, {NAN, 0, 0, 0, 1, 0}}), DegenerateEncodingError);
  CHECK_THROWS(decode_rotation({RotationKind::kSixD, {1, 0, 0}}));
}

TEST_CASE("round trip encode -> decode for all kinds") {
  std::mt19937_64 g(13);
  for (int i = 0; i < 20000; ++i) {
    const RotMat3 r = random_rotation(g);
    for (RotationKind k : {RotationKind::kQuaternion, RotationKind::kEulerSinCos, RotationKind::kSixD})
      CHECK(max_abs_diff(decode_rotation(encode_rotation(r, k)), r) < 1e-9);
  }
}

TEST_CASE("euler round trip through gimbal lock") {
  for (double pitch : {kPi / 2, -kPi / 2}) {
    const RotMat3 r = euler_zyx(0.3, pitch, -0.7);
    CHECK(max_abs_diff(decode_rotation(encode_rotation(r, RotationKind::kEulerSinCos)), r) < 1e-9);
  }
}

TEST_CASE("quaternion double cover and atan2 scale invariance") {
  std::mt19937_64 g(14);
  std::uniform_real_distribution<double> u(-1, 1), s(0.1, 10);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> q{u(g), u(g), u(g), u(g)};
    std::vector<double> nq{-q[0], -q[1], -q[2], -q[3]};
    CHECK(max_abs_diff(decode_rotation({RotationKind::kQuaternion, q}), decode_rotation({RotationKind::kQuaternion, nq})) == 0.0);

    std::vector<double> e{u(g), u(g), u(g), u(g), u(g), u(g)};
    std::vector<double> scaled = e;
    for (int p = 0; p < 3; ++p) {
      const double f = s(g);
      scaled[2 * p] *= f;
      scaled[2 * p + 1] *= f;
    }
    CHECK(max_abs_diff(decode_rotation({RotationKind::kEulerSinCos, e}),
                       decode_rotation({RotationKind::kEulerSinCos, scaled})) < 1e-12);
  }
}

TEST_CASE("sixd decode is a proper rotation under noise") {
  std::mt19937_64 g(15);
  std::uniform_real_distribution<double> noise(-0.3, 0.3);
  for (int i = 0; i < 5000; ++i) {
    auto v = encode_rotation(random_rotation(g), RotationKind::kSixD).values;
    for (auto& x : v) x += noise(g);
    check_rotation(decode_rotation({RotationKind::kSixD, v}), 1e-6);
  }
}

TEST_CASE("sixd decode follows classical Gram-Schmidt") {
  const std::vector<double> v{3, 0, 4, 1, 2, 0};
  const RotMat3 r = decode_rotation({RotationKind::kSixD, v});
  const Vec3 a(3, 0, 4), b(1, 2, 0);
  const Vec3 c1 = a / 5.0;
  const Vec3 c2 = (b - b.dot(c1) * c1).normalized();
  CHECK(max_abs_diff(r.col(0), c1) < 1e-15);
  CHECK(max_abs_diff(r.col(1), c2) < 1e-15);
  CHECK(max_abs_diff(r.col(2), c1.cross(c2)) < 1e-15);
}

TEST_CASE("translation normalization") {
  CHECK(max_abs_diff(normalize_translation(Vec3::Zero(), 160.25), Vec3::Zero()) == 0.0);
  CHECK(max_abs_diff(normalize_translation(Vec3(80.125, 0, 0), 160.25), Vec3(0.5, 0, 0)) == 0.0);
  CHECK(max_abs_diff(denormalize_translation(Vec3(0.5, 0, 0), 160.25), Vec3(80.125, 0, 0)) == 0.0);
  CHECK(max_abs_diff(denormalize_translation(Vec3::Zero(), 3.0), Vec3::Zero()) == 0.0);
  std::mt19937_64 g(16);
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = testing::random_vec(g, -100, 100);
    CHECK(max_abs_diff(denormalize_translation(normalize_translation(a, 158.4), 158.4), a) < 1e-12);
  }
  CHECK_THROWS_AS(normalize_translation(Vec3::Zero(), 0.0), PreconditionError);
}

TEST_CASE("compose_transforms") {
  const auto t = RigidTransform::translation(Vec3(1, 2, 3));
  CHECK(max_abs_diff(compose_transforms({t}).matrix(), t.matrix()) == 0.0);
  CHECK(max_abs_diff(compose_transforms({}).matrix(), Eigen::Matrix4d::Identity()) == 0.0);
  const auto inv = compose_transforms({RigidTransform::rotation(rot_z(45)), RigidTransform::rotation(rot_z(-45))});
  CHECK(max_abs_diff(inv.matrix(), Eigen::Matrix4d::Identity()) < 1e-12);

  const auto s = RigidTransform::scale(1.05), tx = RigidTransform::translation(Vec3(12, 0, 0));
  CHECK(max_abs_diff(compose_transforms({s, tx}).apply_point(Vec3::Zero()), Vec3(12, 0, 0)) < 1e-12);
  CHECK(max_abs_diff(compose_transforms({tx, s}).apply_point(Vec3::Zero()), Vec3(12.6, 0, 0)) < 1e-12);

  std::mt19937_64 g(17);
  for (int i = 0; i < 100; ++i) {
    const auto a = RigidTransform::rotation(random_rotation(g));
    const auto b = RigidTransform::translation(testing::random_vec(g, -10, 10));
    const auto c = compose_transforms({RigidTransform::scale(0.97), RigidTransform::rotation(random_rotation(g))});
    const auto lhs = compose_transforms({a, b, c});
    const auto rhs = compose_transforms({compose_transforms({a, b}), c});
    CHECK(max_abs_diff(lhs.matrix(), rhs.matrix()) < 1e-12);
    const Vec3 p = testing::random_vec(g, -50, 50);
    CHECK(max_abs_diff(lhs.apply_point(p), c.apply_point(b.apply_point(a.apply_point(p)))) < 1e-12);
  }
}

TEST_CASE("RigidTransform validation and inverse") {
  Eigen::Matrix4d bad = Eigen::Matrix4d::Identity();
  bad(3, 0) = 1e-3;
  CHECK_THROWS_AS(RigidTransform::from_matrix(bad), PreconditionError);
  CHECK_THROWS_AS(RigidTransform::scale(1.2), PreconditionError);
  Eigen::Matrix4d shear = Eigen::Matrix4d::Identity();
  shear(0, 1) = 0.2;
  CHECK_THROWS_AS(RigidTransform::from_matrix(shear), PreconditionError);

  const auto m = RigidTransform::mirror_x();
  CHECK(m.linear_determinant() == doctest::Approx(-1.0));
  CHECK(max_abs_diff(compose_transforms({m, m}).matrix(), Eigen::Matrix4d::Identity()) < 1e-12);

  std::mt19937_64 g(18);
  const auto t = compose_transforms({RigidTransform::rotation(random_rotation(g)), RigidTransform::scale(1.04),
                                     RigidTransform::translation(Vec3(3, -4, 5))});
  CHECK(max_abs_diff(compose_transforms({t, t.inverse()}).matrix(), Eigen::Matrix4d::Identity()) < 1e-12);
}

TEST_CASE("transform_plane") {
  std::mt19937_64 g(19);
  const PlaneFrame p = random_frame(g);
  const PlaneFrame same = transform_plane(RigidTransform::identity(), p);
  CHECK(max_abs_diff(same.center, p.center) == 0.0);
  CHECK(max_abs_diff(same.e_u, p.e_u) == 0.0);

  const PlaneFrame r = transform_plane(RigidTransform::rotation(rot_z(90)), {Vec3::Zero(), Vec3::UnitX(), Vec3::UnitZ()});
  CHECK(max_abs_diff(r.e_u, Vec3::UnitY()) < 1e-15);

  const PlaneFrame t = transform_plane(RigidTransform::translation(Vec3(1, 2, 3)), p);
  CHECK(max_abs_diff(t.e_u, p.e_u) == 0.0);
  CHECK(max_abs_diff(t.e_v, p.e_v) == 0.0);
  CHECK(max_abs_diff(t.center, p.center + Vec3(1, 2, 3)) < 1e-12);

  // Mirrored frames stay right-handed and orthonormal.
  const PlaneFrame m = transform_plane(RigidTransform::mirror_x(), p);
  m.validate(1e-12);
  CHECK(max_abs_diff(m.normal(), m.e_u.cross(m.e_v)) == 0.0);
  CHECK(max_abs_diff(m.e_u, Vec3(-p.e_u.x(), p.e_u.y(), p.e_u.z())) < 1e-15);
}

TEST_CASE("transform_plane preserves dihedral angles under rigid transforms") {
  std::mt19937_64 g(20);
  for (int i = 0; i < 200; ++i) {
    const PlaneFrame a = random_frame(g), b = random_frame(g);
    const auto t = compose_transforms({RigidTransform::rotation(random_rotation(g)), RigidTransform::scale(0.95),
                                       RigidTransform::translation(testing::random_vec(g, -12, 12))});
    const double before = angle_deg(a.normal(), b.normal());
    const double after = angle_deg(transform_plane(t, a).normal(), transform_plane(t, b).normal());
    CHECK(std::abs(before - after) < 1e-9);
  }
}

TEST_CASE("angle_deg") {
  CHECK(angle_deg(Vec3::UnitX(), Vec3::UnitX()) == 0.0);
  CHECK(angle_deg(Vec3::UnitX(), -Vec3::UnitX()) == doctest::Approx(180.0));
  CHECK(angle_deg(Vec3::UnitX(), Vec3(1, 1, 0)) == doctest::Approx(45.0).epsilon(1e-14));
  CHECK(angle_deg(Vec3::UnitX(), Vec3(1, 1e-9, 0)) == doctest::Approx(1e-9 * 180.0 / kPi).epsilon(1e-6));
}

TEST_CASE("rotation kind names") {
  CHECK(parse_rotation_kind("quaternion") == RotationKind::kQuaternion);
  CHECK(parse_rotation_kind("euler") == RotationKind::kEulerSinCos);
  CHECK(parse_rotation_kind("sixd") == RotationKind::kSixD);
  CHECK(parse_rotation_kind("6d") == RotationKind::kSixD);
  CHECK_THROWS_AS(parse_rotation_kind("5d"), ValidationError);
  CHECK(encoding_length(RotationKind::kQuaternion) == 4);
  CHECK(encoding_length(RotationKind::kEulerSinCos) == 6);
  CHECK(encoding_length(RotationKind::kSixD) == 6);
}

TEST_CASE("plane annotation text format") {
  std::istringstream in(
      "# header\n"
      "axial 1 2 3  1 0 0  0 1 0\n"
      "\n"
      "sagittal 0 0 0 1 0 0 0 0 1  # trailing comment\n");
  const auto planes = parse_planes(in, "mem");
  REQUIRE(planes.size() == 2);
  CHECK(planes[0].name == "axial");
  CHECK(max_abs_diff(planes[0].frame.center, Vec3(1, 2, 3)) == 0.0);
  CHECK(max_abs_diff(planes[1].frame.normal(), -Vec3::UnitY()) == 0.0);

  std::ostringstream out;
  std::mt19937_64 g(21);
  std::vector<NamedPlane> rnd{{"a", random_frame(g)}, {"b", random_frame(g)}};
  write_planes(out, rnd);
  std::istringstream back(out.str());
  const auto parsed = parse_planes(back);
  REQUIRE(parsed.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(parsed[i].name == rnd[i].name);
    CHECK(max_abs_diff(parsed[i].frame.e_u, rnd[i].frame.e_u) == 0.0);
    CHECK(max_abs_diff(parsed[i].frame.center, rnd[i].frame.center) == 0.0);
  }

  std::istringstream short_line("axial 1 2 3 1 0 0 0 1\n");
  CHECK_THROWS_WITH_AS(parse_planes(short_line, "f.planes"), doctest::Contains("f.planes:1"), ValidationError);
  std::istringstream skew("axial 0 0 0 1 0 0 0.5 0.5 0\n");
  CHECK_THROWS_AS(parse_planes(skew, "f"), ValidationError);
}
