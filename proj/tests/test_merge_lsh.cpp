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
#include "voxplane/merge_lsh.hpp"
#include "voxplane/synth.hpp"

using namespace voxplane;
using support::Gen;

namespace {

PlaneEstimate plane_at(const Vec3& normal, const Vec3& center, std::uint64_t n_points = 100) {
  PlaneEstimate p;
  p.normal = canonical_normal(normal.normalized(), center);
  p.center = center;
  p.d = -p.normal.dot(center);
  p.n_points = n_points;
  return p;
}

Vec3 normal_from_angles(double theta, double phi) {
  return {std::sin(phi) * std::cos(theta), std::sin(phi) * std::sin(theta), std::cos(phi)};
}

struct RetainedMap {
  VoxelMap map;
  std::vector<Vec3> points;
  std::vector<Mat3> covs;

  void insert(const Vec3& p, const Mat3& c) {
    map.insert_point(p, c);
    points.push_back(p);
    covs.push_back(c);
  }
};

/// Noisy returns on z = 1.3 (d = 1.3 sits mid-bucket for delta_d = 0.15) inside the root cell with min corner (x0, y0).
void fill_floor_cell(Gen& g, RetainedMap& m, double x0, double y0, int count, double sigma = 0.01) {
  for (int i = 0; i < count; ++i) {
    const Mat3 c = g.psd(sigma * sigma);
    m.insert(Vec3(x0 + g.uniform(0.05, 2.95), y0 + g.uniform(0.05, 2.95), 1.3 + sigma * g.normal()), c);
  }
}

}  // namespace

TEST(LshKey, DistanceFromCenter) {
  const PlaneCoordinates c = plane_coordinates(Vec3(0, 0, 1), Vec3(0, 0, -2), 0.087);
  EXPECT_DOUBLE_EQ(c.d, 2.0);
  EXPECT_EQ(plane_lsh_key(Vec3(0, 0, 1), Vec3(0, 0, -2), MergeConfig{}).k[2], 13);  // floor(2 / 0.15)
}

TEST(LshKey, AzimuthFloorAndWrap) {
  MergeConfig cfg;
  cfg.delta_theta = 0.1;
  const double phi = 1.2;
  // 0.30 / 0.1 is 2.9999999999999996 in binary floating point, so probe inside the bucket.
  const Vec3 n1 = normal_from_angles(0.35, phi);
  const Vec3 q1 = -3.0 * n1;
  EXPECT_EQ(plane_lsh_key(n1, q1, cfg).k[0], 3);

  const Vec3 n2 = normal_from_angles(-0.01, phi);
  const PlaneCoordinates c = plane_coordinates(n2, -3.0 * n2, cfg.delta_phi);
  EXPECT_NEAR(c.theta, 2 * std::numbers::pi - 0.01, 1e-12);
  EXPECT_EQ(plane_lsh_key(n2, -3.0 * n2, cfg).k[0], static_cast<std::int64_t>(std::floor((2 * std::numbers::pi - 0.01) / 0.1)));
}

TEST(LshKey, RotationSendsNormalToFirstAxis) {
  Gen g(61);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 n = g.unit();
    const PlaneCoordinates c = plane_coordinates(n, g.vec(5.0), 0.0);
    EXPECT_LT((c.R * n - Vec3::UnitX()).norm(), 1e-12);
    EXPECT_LT((c.R.transpose() * c.R - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(c.R.determinant(), 1.0, 1e-12);
  }
}

TEST(LshKey, IdenticalPlanesAndFlippedNormalsShareKeys) {
  Gen g(62);
  const MergeConfig cfg;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 n = g.unit(), q = g.vec(10.0);
    EXPECT_EQ(plane_lsh_key(n, q, cfg), plane_lsh_key(n, q, cfg));
    EXPECT_EQ(plane_lsh_key(n, q, cfg), plane_lsh_key(-n, q, cfg));
  }
}

TEST(LshKey, NearPolarNormalsShareAzimuthBucket) {
  const MergeConfig cfg;
  const Vec3 q(0.5, 0.5, -2.0);
  EXPECT_EQ(plane_lsh_key(normal_from_angles(0.1, 0.01), q, cfg), plane_lsh_key(normal_from_angles(3.0, 0.01), q, cfg));
}

TEST(LshKey, ZeroNormalRejected) {
  EXPECT_THROW(plane_lsh_key(Vec3::Zero(), Vec3(1, 2, 3), MergeConfig{}), InvalidInputError);
}

TEST(LshKey, CoplanarVoxelsOneMeterApartCollide) {
  const MergeConfig cfg = MergeConfig::for_root_size(3.0);
  EXPECT_EQ(cfg.delta_u, 6.0);
  const Vec3 n(0, 0, 1);
  EXPECT_EQ(plane_lsh_key(n, Vec3(0.5, 0.5, -2.0), cfg), plane_lsh_key(n, Vec3(1.5, 0.5, -2.0), cfg));
  EXPECT_EQ(plane_lsh_key(n, Vec3(0.5, 0.5, -2.0), cfg), plane_lsh_key(n, Vec3(0.5, 1.5, -2.0), cfg));
}

TEST(Buckets, TriggerOnThirdRegistration) {
  const MergeConfig cfg;
  LshBuckets buckets;
  const Vec3 n(0, 0, 1);
  EXPECT_FALSE(buckets.register_plane(1, plane_at(n, Vec3(0.5, 0.5, -2.0)), cfg));
  EXPECT_FALSE(buckets.register_plane(2, plane_at(n, Vec3(1.5, 0.5, -2.0)), cfg));
  const auto trigger = buckets.register_plane(3, plane_at(n, Vec3(2.5, 0.5, -2.0)), cfg);
  ASSERT_TRUE(trigger.has_value());
  EXPECT_EQ(*trigger, plane_lsh_key(n, Vec3(0.5, 0.5, -2.0), cfg));
  EXPECT_EQ(buckets.live_members(*trigger).size(), 3u);
}

TEST(Buckets, ReRegisteringSameVoxelIsNotAMember) {
  const MergeConfig cfg;
  LshBuckets buckets;
  const PlaneEstimate p = plane_at(Vec3(0, 0, 1), Vec3(0.5, 0.5, -2.0));
  for (int i = 0; i < 5; ++i) EXPECT_FALSE(buckets.register_plane(7, p, cfg));
  EXPECT_EQ(buckets.bucket(plane_lsh_key(p, cfg))->live_count, 1u);
}

TEST(Buckets, DriftTombstonesOldEntry) {
  const MergeConfig cfg;
  LshBuckets buckets;
  const Vec3 n(0, 0, 1);
  const PlaneEstimate before = plane_at(n, Vec3(0.5, 0.5, -2.0));
  buckets.register_plane(4, before, cfg);
  const LshKey k0 = plane_lsh_key(before, cfg);
  PlaneEstimate after = before;
  double z = -2.0;
  while (plane_lsh_key(after, cfg) == k0) {
    z -= 0.01;
    after = plane_at(n, Vec3(0.5, 0.5, z));
  }
  buckets.register_plane(4, after, cfg);
  const LshKey k1 = plane_lsh_key(after, cfg);
  EXPECT_EQ(buckets.bucket(k0)->live_count, 0u);
  EXPECT_TRUE(buckets.live_members(k0).empty());
  EXPECT_EQ(buckets.live_members(k1), std::vector<VoxelId>{4});
  EXPECT_EQ(*buckets.key_of(4), k1);
}

TEST(Buckets, EachVoxelLiveUnderAtMostOneKey) {
  Gen g(63);
  const MergeConfig cfg;
  LshBuckets buckets;
  std::vector<LshKey> seen;
  for (int i = 0; i < 2000; ++i) {
    const VoxelId v = static_cast<VoxelId>(g.index(20));
    const PlaneEstimate p = plane_at(Vec3(0, 0, 1) + 0.1 * g.vec(), Vec3(0, 0, -2) + g.vec(0.5));
    buckets.register_plane(v, p, cfg);
    seen.push_back(plane_lsh_key(p, cfg));
  }
  for (VoxelId v = 0; v < 20; ++v) {
    std::size_t live = 0;
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (std::find(seen.begin(), seen.begin() + static_cast<std::ptrdiff_t>(i), seen[i]) !=
          seen.begin() + static_cast<std::ptrdiff_t>(i)) {
        continue;
      }
      const auto members = buckets.live_members(seen[i]);
      live += static_cast<std::size_t>(std::count(members.begin(), members.end(), v));
    }
    EXPECT_LE(live, 1u) << "voxel " << v;
  }
}

TEST(Merge, CoplanarVoxelsCollapseIntoReference) {
  Gen g(64);
  RetainedMap m;
  fill_floor_cell(g, m, 0, 0, 80);
  fill_floor_cell(g, m, 3, 0, 60);
  fill_floor_cell(g, m, 0, 3, 40);
  const VoxelId a = m.map.locate(Vec3(1, 1, 1.3));
  ASSERT_EQ(m.map.memory_stats().count(VoxelState::Planar), 3u);

  const MergeConfig cfg = MergeConfig::for_root_size(3.0);
  LshBuckets buckets;
  const MergeReport r = register_and_merge(buckets, m.map, cfg);
  EXPECT_EQ(r.buckets_triggered, 1u);
  EXPECT_EQ(r.commits, 2u);
  EXPECT_EQ(r.rejects, 0u);
  const MemoryReport mem = m.map.memory_stats();
  EXPECT_EQ(mem.count(VoxelState::Planar), 1u);
  EXPECT_EQ(mem.count(VoxelState::MergedRedirect), 2u);

  const PlanarState* ref = m.map.planar(a);
  ASSERT_NE(ref, nullptr);
  EXPECT_EQ(ref->plane.n_points, 180u);
  EXPECT_EQ(m.map.query_plane(Vec3(4, 1, 1.3))->voxel, a);
  EXPECT_EQ(m.map.query_plane(Vec3(1, 4, 1.3))->voxel, a);

  // Retained-points oracle over the union.
  EXPECT_LT((ref->plane.center - support::batch_mean(m.points)).norm(), 1e-8);
  EXPECT_LT(support::angle_between_lines(ref->plane.normal, support::tls_normal(m.points)), 1e-8);
  EXPECT_LT((ref->plane.normal - support::canonical(support::tls_normal(m.points), support::batch_mean(m.points))).norm(), 1e-8);
  EXPECT_LT(support::rel_frobenius(ref->plane.covariance.sigma, plane_covariance_direct(m.points, m.covs).sigma), 1e-8);
  EXPECT_LT(support::rel_frobenius(ref->plane.covariance.sigma, support::covariance_oracle(m.points, m.covs)), 1e-8);
  Eigen::SelfAdjointEigenSolver<Mat3> es(ref->moments.scatter());
  EXPECT_TRUE(is_planar(es.eigenvalues().reverse(), cfg.eta));
}

TEST(Merge, PerpendicularCandidateFailsEigencheck) {
  Gen g(65);
  RetainedMap m;
  fill_floor_cell(g, m, 0, 0, 80);
  fill_floor_cell(g, m, 3, 0, 60);
  // Wall x = 7.2 in the root cell [6, 9) x [0, 3) x [0, 3).
  for (int i = 0; i < 50; ++i) {
    m.insert(Vec3(7.2 + 0.01 * g.normal(), g.uniform(0.05, 2.95), g.uniform(0.05, 2.95)), g.psd(1e-4));
  }
  const VoxelId wall = m.map.locate(Vec3(7.2, 1, 1));
  ASSERT_EQ(m.map.memory_stats().count(VoxelState::Planar), 3u);

  MergeConfig cfg;
  cfg.delta_theta = cfg.delta_phi = 10.0;  // every orientation shares a bucket
  cfg.delta_d = cfg.delta_u = cfg.delta_v = 100.0;
  LshBuckets buckets;
  const MergeReport r = register_and_merge(buckets, m.map, cfg);
  EXPECT_EQ(r.candidates_tested, 2u);
  EXPECT_EQ(r.commits, 1u);
  EXPECT_EQ(r.rejects, 1u);
  EXPECT_EQ(m.map.voxel(wall).kind(), VoxelState::Planar);
  EXPECT_EQ(m.map.memory_stats().count(VoxelState::Planar), 2u);
}

TEST(Merge, NoTriggerNoChange) {
  Gen g(66);
  RetainedMap m;
  fill_floor_cell(g, m, 0, 0, 80);
  fill_floor_cell(g, m, 3, 0, 60);
  LshBuckets buckets;
  const MergeReport r = register_and_merge(buckets, m.map, MergeConfig::for_root_size(3.0));
  EXPECT_EQ(r.buckets_triggered, 0u);
  EXPECT_EQ(m.map.memory_stats().count(VoxelState::Planar), 2u);
}

TEST(Merge, LaterPointsLandInReference) {
  Gen g(67);
  RetainedMap m;
  fill_floor_cell(g, m, 0, 0, 80);
  fill_floor_cell(g, m, 3, 0, 60);
  fill_floor_cell(g, m, 0, 3, 40);
  LshBuckets buckets;
  register_and_merge(buckets, m.map, MergeConfig::for_root_size(3.0));
  fill_floor_cell(g, m, 3, 0, 25);
  const PlanarState* ref = m.map.planar(m.map.locate(Vec3(1, 1, 1.3)));
  EXPECT_EQ(ref->moments.count(), m.points.size());
  EXPECT_LT((ref->moments.mean() - support::batch_mean(m.points)).norm(), 1e-10);
}

TEST(Merge, AttemptsBoundedByRegistrations) {
  const Scene scene = generate_scene(SceneKind::BoxRoom, Vec3(10, 8, 3));
  ScanSpec spec;
  const MergeConfig cfg = MergeConfig::for_root_size(3.0);
  VoxelMap map;
  LshBuckets buckets;
  std::size_t attempts = 0;
  const auto poses = constant_velocity_trajectory(20, default_motion_step());
  for (std::size_t k = 0; k < poses.size(); ++k) {
    spec.stream = k;
    const Scan scan = simulate_scan(scene, poses[k], spec);
    for (std::size_t i = 0; i < scan.size(); ++i) {
      map.insert_point(poses[k].apply(scan.points[i]), point_world_covariance(scan.points[i], poses[k], spec.noise));
    }
    attempts += register_and_merge(buckets, map, cfg).buckets_triggered;
  }
  EXPECT_GT(attempts, 0u);
  EXPECT_LE(attempts, buckets.registrations());
}
