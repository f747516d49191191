/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "voxplane/moments.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace voxplane {

void MomentAccumulator::add(const Vec3& p) {
  if (!all_finite(p)) throw InvalidInputError("accumulate_point: non-finite coordinates");
  ++n_points_;
  sum1_ += p;
  sum2_.add_outer(p);
}

Vec3 MomentAccumulator::mean() const {
  if (n_points_ == 0) return Vec3::Zero();
  return sum1_ / static_cast<double>(n_points_);
}

Mat3 MomentAccumulator::scatter() const {
  if (n_points_ == 0) return Mat3::Zero();
  const double n = static_cast<double>(n_points_);
  const Vec3 q = sum1_ / n;
  Mat3 a = sum2_.matrix() / n - q * q.transpose();
  return 0.5 * (a + a.transpose());
}

MomentAccumulator& MomentAccumulator::operator+=(const MomentAccumulator& other) {
  n_points_ += other.n_points_;
  sum1_ += other.sum1_;
  sum2_ += other.sum2_;
  return *this;
}

MomentAccumulator accumulate_point(MomentAccumulator acc, const Vec3& p) {
  acc.add(p);
  return acc;
}

MomentAccumulator merge_moments(const MomentAccumulator& a, const MomentAccumulator& b) {
  MomentAccumulator out = a;
  out += b;
  return out;
}

Vec3 canonical_normal(const Vec3& n, const Vec3& q) {
  const double d = -n.dot(q);
  if (d > 0.0) return n;
  if (d < 0.0) return -n;
  for (int i = 0; i < 3; ++i) {
    if (n[i] > 0.0) return n;
    if (n[i] < 0.0) return -n;
  }
  return n;
}

PlaneBasis eigen_basis(const Mat3& scatter, const Vec3& center) {
  Eigen::SelfAdjointEigenSolver<Mat3> solver(scatter);
  // Eigen sorts ascending; reverse into (u1, u2, u3).
  PlaneBasis basis;
  for (int m = 0; m < 3; ++m) {
    basis.U.col(m) = solver.eigenvectors().col(2 - m);
    basis.lambda[m] = solver.eigenvalues()[2 - m];
  }
  const Vec3 n = basis.U.col(2);
  basis.U.col(2) = canonical_normal(n, center).normalized();
  return basis;
}

PlaneBasis plane_basis(const MomentAccumulator& acc) {
  if (acc.count() < 3) throw InsufficientPointsError("plane_basis: fewer than 3 points");
  return eigen_basis(acc.scatter(), acc.mean());
}

bool is_planar(const Vec3& lambda, double eta) {
  const double l3 = std::max(lambda[2], 0.0);
  if (!(lambda[1] > 0.0) || !(lambda[0] > 0.0)) return false;
  return l3 / lambda[0] < eta && l3 / lambda[1] < eta;
}

}  // namespace voxplane
