/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>

#include "test_support.hpp"
#include "voxplane/moments.hpp"

using namespace voxplane;
using voxplane::support::Gen;

namespace {

MomentAccumulator accumulate_all(const std::vector<Vec3>& pts) {
  MomentAccumulator acc;
  for (const Vec3& p : pts) acc.add(p);
  return acc;
}

double rel(const Mat3& a, const Mat3& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }
double rel(const Vec3& a, const Vec3& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

TEST(Moments, EmptyIsExactlyZero) {
  const MomentAccumulator acc;
  EXPECT_EQ(acc.count(), 0u);
  EXPECT_TRUE(acc.empty());
  EXPECT_EQ(acc.sum1(), Vec3::Zero());
  EXPECT_TRUE(acc.sum2().is_zero());
  EXPECT_EQ(acc.scatter(), Mat3::Zero());
}

TEST(Moments, TwoPointMidpointAndScatter) {
  MomentAccumulator acc;
  acc.add(Vec3(0, 0, 0));
  acc = accumulate_point(acc, Vec3(2, 0, 0));
  EXPECT_EQ(acc.count(), 2u);
  EXPECT_TRUE(acc.mean().isApprox(Vec3(1, 0, 0)));
  const Mat3 expected = Vec3(1, 0, 0).asDiagonal();
  EXPECT_LT((acc.scatter() - expected).norm(), 1e-15);
}

TEST(Moments, RejectsNonFinite) {
  MomentAccumulator acc;
  EXPECT_THROW(acc.add(Vec3(std::numeric_limits<double>::quiet_NaN(), 0, 0)), InvalidInputError);
  EXPECT_THROW(acc.add(Vec3(0, std::numeric_limits<double>::infinity(), 0)), InvalidInputError);
  EXPECT_EQ(acc.count(), 0u);
}

TEST(Moments, IncrementalMatchesBatchAndRecursiveForms) {
  Gen g(11);
  std::vector<Vec3> pts;
  for (int i = 0; i < 50; ++i) pts.push_back(g.vec(2.0) + Vec3(5, -3, 1));
  const MomentAccumulator acc = accumulate_all(pts);
  EXPECT_LT(rel(acc.mean(), support::batch_mean(pts)), 1e-12);
  EXPECT_LT(rel(acc.scatter(), support::batch_scatter(pts)), 1e-12);

  // Recursive mean and scatter updates, run alongside the raw sums.
  Vec3 q = pts[0];
  Mat3 A = Mat3::Zero();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double N = static_cast<double>(i);
    const Vec3 q_next = N / (N + 1) * q + pts[i] / (N + 1);
    A = N / (N + 1) * (A + (q - q_next) * (q - q_next).transpose()) +
        (pts[i] - q_next) * (pts[i] - q_next).transpose() / (N + 1);
    q = q_next;
  }
  EXPECT_LT(rel(acc.mean(), q), 1e-12);
  EXPECT_LT(rel(acc.scatter(), A), 1e-12);
}

TEST(Moments, ScatterIsSymmetricPsd) {
  Gen g(12);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec3> pts;
    const std::size_t n = g.range(1, 40);
    const Vec3 offset = g.vec(100.0);
    for (std::size_t i = 0; i < n; ++i) pts.push_back(offset + g.vec(g.uniform(1e-3, 3.0)));
    const Mat3 A = accumulate_all(pts).scatter();
    EXPECT_EQ(A, A.transpose());
    Eigen::SelfAdjointEigenSolver<Mat3> es(A);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(PlaneBasis, PlaneZ0GivesVerticalNormal) {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {3, 1, 0}, {-1, 4, 0}};
  const PlaneBasis b = plane_basis(accumulate_all(pts));
  EXPECT_NEAR(std::abs(b.normal().z()), 1.0, 1e-12);
  EXPECT_NEAR(b.lambda[2], 0.0, 1e-12);
}

TEST(PlaneBasis, IsotropicCubeCornersHaveEqualEigenvalues) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 8; ++i) pts.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  const PlaneBasis b = plane_basis(accumulate_all(pts));
  EXPECT_NEAR(b.lambda[0], 0.25, 1e-12);
  EXPECT_NEAR(b.lambda[1], 0.25, 1e-12);
  EXPECT_NEAR(b.lambda[2], 0.25, 1e-12);
  EXPECT_LE((b.U.transpose() * b.U - Mat3::Identity()).norm(), 1e-10);
}

TEST(PlaneBasis, FewerThanThreePointsThrows) {
  MomentAccumulator acc;
  acc.add(Vec3(1, 2, 3));
  acc.add(Vec3(2, 2, 3));
  EXPECT_THROW(plane_basis(acc), InsufficientPointsError);
}

TEST(PlaneBasis, MatchesTotalLeastSquaresFit) {
  Gen g(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 n = g.unit();
    const std::vector<Vec3> pts = support::plane_points(g, 100, g.vec(5.0), n, 1.5, 0.8, 0.01);
    const PlaneBasis b = plane_basis(accumulate_all(pts));
    EXPECT_LT(support::angle_between_lines(b.normal(), support::tls_normal(pts)), 1e-6);
  }
}

TEST(PlaneBasis, InvariantsHoldOnRandomClouds) {
  Gen g(14);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Vec3> pts;
    const std::size_t n = g.range(3, 60);
    const Vec3 offset = g.vec(20.0);
    const Vec3 scale(g.uniform(0.01, 3), g.uniform(0.01, 3), g.uniform(1e-4, 3));
    const Mat3 R = g.rotation();
    for (std::size_t i = 0; i < n; ++i) pts.push_back(offset + R * g.vec().cwiseProduct(scale));
    const MomentAccumulator acc = accumulate_all(pts);
    const PlaneBasis b = plane_basis(acc);
    EXPECT_LE((b.U.transpose() * b.U - Mat3::Identity()).norm(), 1e-10);
    EXPECT_GE(b.lambda[0], b.lambda[1]);
    EXPECT_GE(b.lambda[1], b.lambda[2]);
    EXPECT_GE(b.lambda[2], -1e-12);
    EXPECT_NEAR(b.normal().norm(), 1.0, 1e-12);
    EXPECT_LE(b.normal().dot(acc.mean()), 0.0);  // d = -n^T q >= 0
  }
}

TEST(PlaneBasis, CanonicalNormalTieBreak) {
  // Plane through the origin: d = 0, first nonzero component must be positive.
  EXPECT_EQ(canonical_normal(Vec3(0, -1, 0), Vec3(5, 0, 7)), Vec3(0, 1, 0));
  EXPECT_EQ(canonical_normal(Vec3(0, 0, 1), Vec3(0, 0, -2)), Vec3(0, 0, 1));
  EXPECT_EQ(canonical_normal(Vec3(0, 0, 1), Vec3(0, 0, 2)), Vec3(0, 0, -1));
}

TEST(IsPlanar, RatioThresholds) {
  EXPECT_TRUE(is_planar(Vec3(1.0, 0.5, 0.004), 0.01));
  EXPECT_FALSE(is_planar(Vec3(1.0, 0.3, 0.004), 0.01));  // lambda3/lambda2 = 0.0133
  EXPECT_FALSE(is_planar(Vec3(1.0, 1.0, 1.0), 0.01));
  EXPECT_FALSE(is_planar(Vec3(1.0, 0.0, 0.0), 0.01));  // collinear
}

TEST(MergeMoments, EqualWeightsGiveMidpoint) {
  MomentAccumulator a, b;
  for (int i = 0; i < 5; ++i) {
    a.add(Vec3(i, 0, 0));
    b.add(Vec3(i, 10, 0));
  }
  const MomentAccumulator m = merge_moments(a, b);
  EXPECT_EQ(m.count(), 10u);
  EXPECT_LT((m.mean() - 0.5 * (a.mean() + b.mean())).norm(), 1e-14);
}

TEST(MergeMoments, EmptyIsIdentity) {
  Gen g(15);
  MomentAccumulator a;
  for (int i = 0; i < 7; ++i) a.add(g.vec());
  EXPECT_EQ(merge_moments(a, MomentAccumulator{}), a);
  EXPECT_EQ(merge_moments(MomentAccumulator{}, a), a);
}

TEST(MergeMoments, PooledScatterAndRankOneIdentity) {
  Gen g(16);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec3> p, q;
    const Vec3 op = g.vec(4.0), oq = g.vec(4.0);
    const std::size_t M = g.range(1, 40), N = g.range(1, 40);
    for (std::size_t i = 0; i < M; ++i) p.push_back(op + g.vec());
    for (std::size_t i = 0; i < N; ++i) q.push_back(oq + g.vec(0.5));
    std::vector<Vec3> pooled = p;
    pooled.insert(pooled.end(), q.begin(), q.end());

    const MomentAccumulator a = accumulate_all(p), b = accumulate_all(q);
    const MomentAccumulator m = merge_moments(a, b);
    EXPECT_EQ(m.count(), M + N);
    EXPECT_LT(rel(m.scatter(), support::batch_scatter(pooled)), 1e-12);

    const double t = static_cast<double>(M) / static_cast<double>(M + N);
    EXPECT_LT(rel(m.mean(), t * a.mean() + (1 - t) * b.mean()), 1e-12);
    const Vec3 dmu = a.mean() - b.mean();
    const Mat3 eq27 = t * a.scatter() + (1 - t) * b.scatter() + t * (1 - t) * dmu * dmu.transpose();
    EXPECT_LT(rel(m.scatter(), eq27), 1e-12);
  }
}

TEST(MergeMoments, AnyPartitionEqualsWhole) {
  Gen g(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec3> pts;
    const std::size_t n = g.range(2, 80);
    for (std::size_t i = 0; i < n; ++i) pts.push_back(g.vec(3.0));
    const std::size_t cut = g.range(0, n);
    const MomentAccumulator whole = accumulate_all(pts);
    const MomentAccumulator left = accumulate_all({pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(cut)});
    const MomentAccumulator right = accumulate_all({pts.begin() + static_cast<std::ptrdiff_t>(cut), pts.end()});
    const MomentAccumulator m = merge_moments(left, right);
    EXPECT_EQ(m.count(), whole.count());
    EXPECT_LT(rel(m.sum1(), whole.sum1()), 1e-12);
    EXPECT_LT(rel(m.sum2().matrix(), whole.sum2().matrix()), 1e-12);
  }
}

TEST(Moments, InsertionOrderPermutation) {
  Gen g(18);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec3> pts;
    const Vec3 offset = g.vec(50.0);
    for (int i = 0; i < 200; ++i) pts.push_back(offset + g.vec());
    const MomentAccumulator a = accumulate_all(pts);
    for (std::size_t i = pts.size(); i > 1; --i) std::swap(pts[i - 1], pts[g.index(i)]);
    const MomentAccumulator b = accumulate_all(pts);
    EXPECT_LT(rel(b.mean(), a.mean()), 1e-10);
    EXPECT_LT(rel(b.scatter(), a.scatter()), 1e-10);
  }
}
