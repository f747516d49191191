/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "voxplane/registration.hpp"
#include "voxplane/synth.hpp"

using namespace voxplane;
using support::Gen;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double rotation_angle(const Mat3& a, const Mat3& b) { return so3_log(a.transpose() * b).norm(); }

Pose shifted(const Pose& p, const Vec3& t) {
  Pose out = p;
  out.translation += t;
  return out;
}

/// Map built from scans taken at known poses.
VoxelMap build_map(const Scene& scene, const std::vector<Pose>& poses, ScanSpec spec) {
  VoxelMap map;
  for (std::size_t k = 0; k < poses.size(); ++k) {
    spec.stream = 1000 + k;
    const Scan scan = simulate_scan(scene, poses[k], spec);
    for (std::size_t i = 0; i < scan.size(); ++i) {
      map.insert_point(poses[k].apply(scan.points[i]), point_world_covariance(scan.points[i], poses[k], spec.noise));
    }
  }
  return map;
}

const Scene& box_room() {
  static const Scene scene = generate_scene(SceneKind::BoxRoom, Vec3(10, 8, 3));
  return scene;
}

/// Box faces trimmed so that no 3 m root voxel holds returns from two faces.
/// Every plane in a map built from exact returns is then exact.
const Scene& separated_faces() {
  static const Scene scene = [] {
    Scene s;
    s.name = "separated-faces";
    auto add = [&s](Vec3 c, Vec3 n, Vec3 a, double w, double h) { s.planes.push_back(Rect{c, n, a, w, h}); };
    add({1.5, 0, -1.2}, Vec3::UnitZ(), Vec3::UnitX(), 8.8, 5.8);
    add({1.5, 0, 1.8}, -Vec3::UnitZ(), Vec3::UnitX(), 8.8, 5.8);
    add({-3.3, 0, 0.3}, Vec3::UnitX(), Vec3::UnitY(), 5.8, 3.0);
    add({6.7, 0, 0.3}, -Vec3::UnitX(), Vec3::UnitY(), 5.8, 3.0);
    add({1.5, -3.1, 0.3}, Vec3::UnitY(), Vec3::UnitX(), 8.8, 3.0);
    add({1.5, 4.9, 0.3}, -Vec3::UnitY(), Vec3::UnitX(), 8.8, 3.0);
    s.validate();
    return s;
  }();
  return scene;
}

std::vector<Pose> survey_poses() {
  return constant_velocity_trajectory(10, default_motion_step());
}

}  // namespace

TEST(Predict, StationaryHistoryHolds) {
  Pose a;
  a.translation = Vec3(1, 2, 3);
  a.rotation = so3_exp(Vec3(0.1, 0.2, 0.3));
  Pose b = a;
  b.timestamp = 0.1;
  const Pose p = predict(b, a);
  EXPECT_LT((p.translation - a.translation).norm(), 1e-12);
  EXPECT_LT((p.rotation - a.rotation).norm(), 1e-12);
  EXPECT_NEAR(p.timestamp, 0.2, 1e-12);
}

TEST(Predict, ConstantTranslationAdvances) {
  Pose a, b;
  b.translation = Vec3(1, 0, 0);
  b.timestamp = 0.1;
  const Pose p = predict(b, a);
  EXPECT_LT((p.translation - Vec3(2, 0, 0)).norm(), 1e-12);
  EXPECT_EQ(predict(std::span<const Pose>{}).translation, Vec3::Zero());
  const std::vector<Pose> one{b};
  EXPECT_EQ(predict(one).translation, b.translation);
  EXPECT_THROW(predict(a, b), InvalidInputError);
}

TEST(Predict, CircularTrajectoryBeatsHoldingStill) {
  Pose step;
  step.translation = Vec3(0.5, 0, 0);
  step.rotation = so3_exp(Vec3(0, 0, 0.05));
  const auto poses = constant_velocity_trajectory(30, step);
  for (std::size_t k = 2; k < poses.size(); ++k) {
    const Pose p = predict(poses[k - 1], poses[k - 2]);
    const double err = (p.translation - poses[k].translation).norm();
    const double motion = (poses[k].translation - poses[k - 1].translation).norm();
    EXPECT_LT(err, 1e-9);
    EXPECT_LT(err, motion);
    EXPECT_LT(rotation_angle(p.rotation, poses[k].rotation), 1e-9);
  }
}

TEST(Residual, JacobianMatchesFiniteDifferences) {
  Gen g(71);
  for (int trial = 0; trial < 200; ++trial) {
    Pose pose;
    pose.rotation = g.rotation();
    pose.translation = g.vec(3.0);
    PlaneEstimate plane;
    plane.normal = g.unit();
    plane.center = g.vec(3.0);
    const Vec3 p = g.vec(5.0);
    const Residual res = make_residual(p, g.psd(1e-4), pose, Mat6::Zero(), plane, 0);
    const double h = 1e-6;
    for (int k = 0; k < 6; ++k) {
      Vec6 d = Vec6::Zero();
      d[k] = h;
      auto r_at = [&](const Vec6& delta) {
        Pose q = pose;
        q.rotation = pose.rotation * so3_exp(delta.head<3>());
        q.translation = pose.translation + delta.tail<3>();
        return plane.normal.dot(q.apply(p) - plane.center);
      };
      EXPECT_NEAR(res.jacobian[k], (r_at(d) - r_at(-d)) / (2 * h), 1e-7);
    }
  }
}

TEST(Residual, InflatedPlaneCovarianceLowersWeight) {
  Gen g(72);
  for (int trial = 0; trial < 100; ++trial) {
    PlaneEstimate plane;
    plane.normal = g.unit();
    plane.center = g.vec();
    Eigen::Matrix<double, 6, 6> L = Eigen::Matrix<double, 6, 6>::Random();
    plane.covariance.sigma = 1e-6 * (L * L.transpose() + Mat6::Identity());
    Pose pose;
    pose.rotation = g.rotation();
    const Vec3 p = g.vec(4.0);
    const Mat3 c = g.psd(1e-4);
    const Residual base = make_residual(p, c, pose, prior_covariance(SolverConfig{}), plane, 0);
    plane.covariance.sigma *= 3.0;
    const Residual inflated = make_residual(p, c, pose, prior_covariance(SolverConfig{}), plane, 0);
    EXPECT_GT(inflated.variance, base.variance);
    EXPECT_LT(1.0 / inflated.variance, 1.0 / base.variance);
    EXPECT_EQ(inflated.r, base.r);
  }
}

TEST(Registration, TruthInitConvergesImmediately) {
  ScanSpec spec;
  spec.noise_scale = 0.0;
  const VoxelMap map = build_map(separated_faces(), survey_poses(), spec);
  Pose truth;
  truth.translation = Vec3(0.1, 0.05, 0.0);
  spec.stream = 1;
  const Scan scan = simulate_scan(separated_faces(), truth, spec);
  const RegistrationResult r = estimate_pose(map, scan.points, scan.covs, truth);
  EXPECT_EQ(r.report.iterations, 1);
  EXPECT_TRUE(r.report.converged);
  EXPECT_LT((r.pose.translation - truth.translation).norm(), 1e-6);
  EXPECT_LT(rotation_angle(r.pose.rotation, truth.rotation), 1e-6);
}

TEST(Registration, RecoversPerturbedInit) {
  const ScanSpec spec;
  const VoxelMap map = build_map(box_room(), survey_poses(), spec);
  Gen g(73);
  for (int trial = 0; trial < 5; ++trial) {
    Pose truth;
    truth.translation = Vec3(g.uniform(-0.2, 0.2), g.uniform(-0.2, 0.2), 0.0);
    truth.rotation = so3_exp(Vec3(0, 0, g.uniform(-0.05, 0.05)));
    ScanSpec query = spec;
    query.stream = static_cast<std::uint64_t>(trial);
    const Scan scan = simulate_scan(box_room(), truth, query);

    Pose init = shifted(truth, 0.1 * g.unit());
    init.rotation = truth.rotation * so3_exp(1.0 * kDeg * g.unit());
    const RegistrationResult r = estimate_pose(map, scan.points, scan.covs, init);
    EXPECT_LT((r.pose.translation - truth.translation).norm(), 0.005) << "trial " << trial;
    EXPECT_LT(rotation_angle(r.pose.rotation, truth.rotation), 0.1 * kDeg) << "trial " << trial;
    EXPECT_FALSE(r.report.rank_deficient);
    EXPECT_TRUE(r.pose.is_valid());
  }
}

// Each iteration re-weights with the latest posterior, so costs are compared
// within an iteration, before and after its accepted step.
TEST(Registration, AcceptedCostsNeverIncrease) {
  const ScanSpec spec;
  const VoxelMap map = build_map(box_room(), survey_poses(), spec);
  Gen g(74);
  for (int trial = 0; trial < 10; ++trial) {
    ScanSpec query = spec;
    query.stream = 50 + static_cast<std::uint64_t>(trial);
    const Scan scan = simulate_scan(box_room(), Pose{}, query);
    Pose init = shifted(Pose{}, 0.08 * g.unit());
    init.rotation = so3_exp(0.8 * kDeg * g.unit());
    const RegistrationResult r = estimate_pose(map, scan.points, scan.covs, init);
    ASSERT_EQ(r.report.accepted_costs.size() % 2, 0u);
    for (std::size_t i = 0; i < r.report.accepted_costs.size(); i += 2) {
      EXPECT_LE(r.report.accepted_costs[i + 1], r.report.accepted_costs[i]);
    }
  }
}

TEST(Registration, SinglePlaneIsRankDeficient) {
  Scene floor;
  floor.name = "floor";
  Rect r;
  r.center = Vec3(0, 0, -1.2);
  r.width = r.height = 20.0;
  floor.planes.push_back(r);
  // Exact returns keep every voxel normal identical, so the null space is exact.
  ScanSpec spec;
  spec.noise_scale = 0.0;
  const std::vector<Pose> poses{Pose{}};
  const VoxelMap map = build_map(floor, poses, spec);
  spec.noise_scale = 1.0;
  spec.stream = 3;
  const Scan scan = simulate_scan(floor, Pose{}, spec);
  const RegistrationResult res = estimate_pose(map, scan.points, scan.covs, Pose{});
  EXPECT_TRUE(res.report.rank_deficient);
  EXPECT_EQ(res.report.rank, 3);
  Eigen::JacobiSVD<Mat6> svd(res.information);
  EXPECT_LT(svd.singularValues()[3], 1e-6 * svd.singularValues()[0]);
  // The in-plane translation stays at the initial guess.
  EXPECT_LT(res.pose.translation.head<2>().norm(), 1e-9);
}

TEST(Registration, TooFewResidualsThrows) {
  const VoxelMap map = build_map(box_room(), survey_poses(), ScanSpec{});
  ScanSpec spec;
  spec.rays_per_scan = 5;
  const Scan scan = simulate_scan(box_room(), Pose{}, spec);
  EXPECT_THROW(estimate_pose(map, scan.points, scan.covs, Pose{}), DegenerateRegistrationError);
  const VoxelMap empty;
  const Scan full = simulate_scan(box_room(), Pose{}, ScanSpec{});
  EXPECT_THROW(estimate_pose(empty, full.points, full.covs, Pose{}), DegenerateRegistrationError);
}

TEST(Registration, GatesAtThreeSigma) {
  const VoxelMap map = build_map(box_room(), survey_poses(), ScanSpec{});
  ScanSpec spec;
  spec.stream = 9;
  Scan scan = simulate_scan(box_room(), Pose{}, spec);
  Gen g(75);
  for (std::size_t i = 0; i < scan.size(); i += 7) scan.points[i] *= g.uniform(0.7, 0.95);

  SolverConfig cfg;
  cfg.max_iters = 1;
  const RegistrationResult r = estimate_pose(map, scan.points, scan.covs, Pose{}, cfg);
  std::size_t expected = 0, gated = 0;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const auto match = map.query_plane(scan.points[i]);
    if (!match) continue;
    const Residual res = make_residual(scan.points[i], scan.covs[i], Pose{}, prior_covariance(cfg), *match->plane, i);
    if (res.r * res.r <= 9.0 * res.variance) ++expected;
    else ++gated;
  }
  EXPECT_GT(gated, 0u);
  EXPECT_EQ(r.report.residuals, expected);
}
