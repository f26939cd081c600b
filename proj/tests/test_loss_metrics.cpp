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

#include "planereg/augmentation.hpp"
#include "planereg/loss_metrics.hpp"
#include "planereg/phantom.hpp"
#include "test_util.hpp"

using namespace planereg;
using testing::random_frame;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::vector<double> encode(const std::vector<PlaneFrame>& planes, RotationKind kind, double extent = 100.0) {
  return encode_targets(planes, extent, kind);
}

PlaneFrame rotated_about(const PlaneFrame& f, const Vec3& axis, double deg) {
  const RotMat3 r = axis_angle(axis, deg * kDeg);
  return {f.center, r * f.e_u, r * f.e_v};
}

}  // namespace

TEST_CASE("loss examples") {
  const LossWeights w{0.3, 0.3, 0.4};
  const std::vector<PlaneFrame> ortho{{Vec3(1, 2, 3), Vec3::UnitX(), Vec3::UnitY()},
                                      {Vec3(0, 0, 0), Vec3::UnitY(), Vec3::UnitZ()},
                                      {Vec3(-3, 1, 0), Vec3::UnitX(), Vec3::UnitZ()}};
  for (RotationKind k : {RotationKind::kQuaternion, RotationKind::kEulerSinCos, RotationKind::kSixD}) {
    const auto t = encode(ortho, k);
    const auto r = compute_loss(t, t, w, k, 3);
    CHECK(r.total < 1e-12);
    CHECK(r.degenerate_pairs == 0);
  }

  // 3-4-5 translation error on one plane.
  auto target = encode({PlaneFrame{}}, RotationKind::kSixD);
  auto pred = target;
  pred[0] += 0.3;
  pred[2] += 0.4;
  const auto r1 = compute_loss(pred, target, {0.0, 1.0, 0.0}, RotationKind::kSixD, 1);
  CHECK(r1.total == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r1.translation == doctest::Approx(0.5).epsilon(1e-12));

  // Two predicted normals 45 degrees apart.
  const PlaneFrame a{};
  const PlaneFrame b = rotated_about(a, Vec3::UnitX(), 45.0);
  const auto two = encode({a, b}, RotationKind::kSixD);
  const auto r2 = compute_loss(two, two, {0.0, 0.0, 1.0}, RotationKind::kSixD, 2);
  CHECK(r2.total == doctest::Approx(1.0 - std::sqrt(2.0) / 2.0).epsilon(1e-12));
  const auto r3 = compute_loss(two, two, {0.0, 0.0, 1.0}, RotationKind::kSixD, 2, OrthoForm::kAbsDot);
  CHECK(r3.total == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("parallel predicted normals count as a degenerate pair") {
  const auto t = encode({PlaneFrame{}, PlaneFrame{}}, RotationKind::kSixD);
  const auto r = compute_loss(t, t, {0.0, 0.0, 1.0}, RotationKind::kSixD, 2);
  CHECK(r.degenerate_pairs == 1);
  CHECK(r.orthogonality == 1.0);
  for (double g : r.grad) CHECK(g == 0.0);
}

TEST_CASE("calcaneus ground truth is penalized by the orthogonality term") {
  for (double tilt : {20.0, 25.0, 30.0}) {
    AnatomyParams an;
    an.semi_coronal_tilt_deg = tilt;
    std::vector<PlaneFrame> gt;
    for (const auto& p : canonical_planes(AnatomyMode::kCalcaneus, an)) gt.push_back(p.frame);
    const auto t = encode(gt, RotationKind::kSixD);
    const auto r = compute_loss(t, t, {0.0, 0.0, 1.0}, RotationKind::kSixD, 3);
    CHECK(r.total > 0.0);
    CHECK(r.total == doctest::Approx((1.0 - std::cos(tilt * kDeg)) / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("loss gradient matches central differences, including the 6D decode") {
  std::mt19937_64 g(8);
  std::normal_distribution<double> nd(0.0, 0.2);
  for (RotationKind k : {RotationKind::kQuaternion, RotationKind::kEulerSinCos, RotationKind::kSixD}) {
    for (OrthoForm form : {OrthoForm::kOneMinusCross, OrthoForm::kAbsDot}) {
      for (int trial = 0; trial < 20; ++trial) {
        std::vector<PlaneFrame> gt{random_frame(g, 30), random_frame(g, 30), random_frame(g, 30)};
        const auto target = encode(gt, k);
        auto pred = target;
        for (auto& v : pred) v += nd(g);
        const LossWeights w{0.4, 0.3, 0.3};
        const auto r = compute_loss(pred, target, w, k, 3, form);
        REQUIRE(r.grad.size() == pred.size());
        for (std::size_t i = 0; i < pred.size(); ++i) {
          const double h = 1e-6;
          auto p = pred;
          p[i] += h;
          const double lp = compute_loss(p, target, w, k, 3, form).total;
          p[i] -= 2 * h;
          const double lm = compute_loss(p, target, w, k, 3, form).total;
          const double fd = (lp - lm) / (2 * h);
          INFO(to_string(k) << " " << to_string(form) << " coord " << i);
          CHECK(std::abs(fd - r.grad[i]) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
        CHECK(r.total >= 0.0);
      }
    }
  }
}

TEST_CASE("loss weights: validation and presets") {
  CHECK_THROWS_AS((LossWeights{0.5, 0.6, 0.0}.validate()), PreconditionError);
  CHECK_THROWS_AS((LossWeights{-0.1, 1.1, 0.0}.validate()), PreconditionError);
  const auto opt = LossWeights::preset("calcaneus.opt_comb");
  CHECK(opt.alpha == 0.6);
  CHECK(opt.beta == 0.3);
  CHECK(opt.gamma == 0.1);
  const auto sag = LossWeights::preset("calcaneus.three.sagittal");
  CHECK(sag.alpha == 0.6);
  CHECK(sag.beta == 0.4);
  CHECK(LossWeights::preset("ankle.opt_comb").alpha == 0.2);
  CHECK(LossWeights::preset("ankle.three.sagittal").alpha == 0.8);
  CHECK_THROWS_AS(LossWeights::preset("knee.comb"), ValidationError);
  for (const auto& name : LossWeights::preset_names()) LossWeights::preset(name).validate();
  CHECK(parse_ortho_form("dot") == OrthoForm::kAbsDot);
}

TEST_CASE("plane error examples") {
  std::mt19937_64 g(3);
  for (int i = 0; i < 50; ++i) {
    const PlaneFrame gt = random_frame(g);
    const auto same = plane_errors(gt, gt);
    CHECK(same.d_mm == doctest::Approx(0.0).scale(1e-9));
    CHECK(same.eps_n_deg == doctest::Approx(0.0).scale(1e-5));
    CHECK(same.eps_i_deg == doctest::Approx(0.0).scale(1e-5));

    const auto tilt = plane_errors(rotated_about(gt, gt.e_u, 10.0), gt);
    CHECK(tilt.eps_n_deg == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(tilt.d_mm == doctest::Approx(0.0).scale(1e-9));

    PlaneFrame shifted = gt;
    shifted.center += 5.0 * gt.normal() + 7.0 * gt.e_u - 3.0 * gt.e_v;
    CHECK(plane_errors(shifted, gt).d_mm == doctest::Approx(5.0).epsilon(1e-12));
  }
}

TEST_CASE("eps_n is symmetric and d is not") {
  const PlaneFrame gt{Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY()};
  PlaneFrame pred = rotated_about(gt, Vec3::UnitX(), 30.0);
  pred.center = Vec3(0, 10, 0);
  const auto ab = plane_errors(pred, gt);
  const auto ba = plane_errors(gt, pred);
  CHECK(ab.eps_n_deg == doctest::Approx(ba.eps_n_deg).epsilon(1e-12));
  // Measured along the gt normal: (0,10,0).z = 0 versus 10 sin 30 = 5.
  CHECK(ab.d_mm == doctest::Approx(0.0).scale(1e-12));
  CHECK(ba.d_mm == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("score examples and linearity") {
  CHECK(std::abs(score(9.94, 8.77, 8.34) - 8.92) <= 0.01);
  CHECK(std::abs(score(5.43, 7.11, 6.58) - 6.67) <= 0.01);
  CHECK(score(0, 0, 0) == 0.0);
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(0, 20);
  for (int i = 0; i < 100; ++i) {
    const double a[3] = {u(g), u(g), u(g)}, b[3] = {u(g), u(g), u(g)};
    CHECK(score(a[0] + b[0], a[1] + b[1], a[2] + b[2]) ==
          doctest::Approx(score(a[0], a[1], a[2]) + score(b[0], b[1], b[2])).epsilon(1e-12));
  }
}

TEST_CASE("median and aggregation") {
  CHECK(median({1, 2, 9}) == 2.0);
  CHECK(median({9, 1, 2}) == 2.0);
  CHECK(median({1, 2, 3, 10}) == 2.5);
  CHECK_THROWS_AS(median({}), PreconditionError);

  const std::vector<std::string> names{"axial", "semicoronal", "sagittal"};
  const std::vector<std::vector<PlaneErrors>> one{{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}}};
  const auto rows1 = aggregate_errors(one, names);
  REQUIRE(rows1.size() == 4);
  CHECK(rows1[1].plane == "semicoronal");
  CHECK(rows1[1].d_mm == 4);
  CHECK(rows1[1].eps_n_deg == 5);
  CHECK(rows1[1].eps_i_deg == 6);
  CHECK(rows1[3].plane == "mean");

  std::vector<std::vector<PlaneErrors>> three;
  for (double d : {1.0, 9.0, 2.0}) three.push_back({{d, 0, 0}, {d, 1, 1}, {d, 2, 2}});
  const auto rows3 = aggregate_errors(three, names);
  CHECK(rows3[0].d_mm == 2.0);
  const auto only_mean = aggregate_errors(three, names, false);
  REQUIRE(only_mean.size() == 1);
  CHECK(only_mean[0].plane == "mean");
  CHECK(only_mean[0].eps_n_deg == doctest::Approx(1.0));

  CHECK_THROWS_AS(aggregate_errors({}, names), PreconditionError);
}

TEST_CASE("mean row from reference per-plane components") {
  // Calcaneus, 6D, combined model with optimized weights.
  const std::vector<std::vector<PlaneErrors>> per_plane{
      {{10.35, 7.38, 7.69}, {13.11, 8.71, 7.49}, {7.77, 8.65, 8.34}}};
  const auto rows = aggregate_errors(per_plane, {"axial", "semicoronal", "sagittal"});
  REQUIRE(rows.size() == 4);
  const double reference[3] = {8.04, 9.35, 8.41};
  for (int p = 0; p < 3; ++p) CHECK(std::abs(rows[p].score - reference[p]) <= 0.01);
  const double mean_of_scores = (reference[0] + reference[1] + reference[2]) / 3.0;
  CHECK(std::abs(rows[3].score - mean_of_scores) <= 0.01);
  CHECK(rows[3].d_mm == doctest::Approx((10.35 + 13.11 + 7.77) / 3.0));
  CHECK(rows[3].eps_n_deg == doctest::Approx((7.38 + 8.71 + 8.65) / 3.0));
}

TEST_CASE("report csv round trip") {
  const std::vector<ReportRow> rows{{"axial", 1.5, 2.25, 3.125, score(1.5, 2.25, 3.125)},
                                    {"mean", 4, 5, 6, score(4, 5, 6)}};
  std::ostringstream ss;
  write_report_csv(ss, rows);
  CHECK(ss.str().rfind("plane,d_mm,eps_n_deg,eps_i_deg,score\n", 0) == 0);
  const auto dir = testing::temp_dir("report");
  write_report_csv(dir / "r.csv", rows);
  const auto back = read_report_csv(dir / "r.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].plane == "axial");
  CHECK(back[0].eps_i_deg == doctest::Approx(3.125));
  CHECK(back[1].score == doctest::Approx(rows[1].score).epsilon(1e-6));
}
