/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include "voxplane/common.hpp"

namespace voxplane {

/// Count, first and second raw moments of a point population.
///
/// Raw sums make pooling two populations an exact componentwise addition.
/// The mean q and scatter A = sum2 / N - q q^T are derived on demand and are
/// algebraically identical to the recursive per-point updates.
class MomentAccumulator {
 public:
  MomentAccumulator() = default;

  /// Throws InvalidInputError on non-finite coordinates.
  void add(const Vec3& p);

  std::uint64_t count() const { return n_points_; }
  bool empty() const { return n_points_ == 0; }
  const Vec3& sum1() const { return sum1_; }
  const Sym3& sum2() const { return sum2_; }

  /// Mean q; zero for an empty accumulator.
  Vec3 mean() const;
  /// Scatter A = (1/N) sum p p^T - q q^T; zero for an empty accumulator.
  Mat3 scatter() const;

  MomentAccumulator& operator+=(const MomentAccumulator& other);

  friend bool operator==(const MomentAccumulator&, const MomentAccumulator&) = default;

 private:
  std::uint64_t n_points_ = 0;
  Vec3 sum1_ = Vec3::Zero();
  Sym3 sum2_;
};

MomentAccumulator accumulate_point(MomentAccumulator acc, const Vec3& p);
MomentAccumulator merge_moments(const MomentAccumulator& a, const MomentAccumulator& b);

/// Eigen-decomposition of a scatter matrix, eigenvalues descending.
/// Columns of U are u1, u2, u3; the plane normal is u3.
struct PlaneBasis {
  Mat3 U = Mat3::Identity();
  Vec3 lambda = Vec3::Zero();

  Vec3 normal() const { return U.col(2); }
  Vec3 axis(int m) const { return U.col(m); }
};

/// Throws InsufficientPointsError when fewer than 3 points were accumulated.
/// The normal sign is canonical: -n^T q >= 0, ties broken by making the first
/// nonzero component of n positive.
PlaneBasis plane_basis(const MomentAccumulator& acc);

/// Same decomposition for an explicit scatter matrix about center q.
PlaneBasis eigen_basis(const Mat3& scatter, const Vec3& center);

/// Flips n so that -n^T q >= 0 (first nonzero component positive on a tie).
Vec3 canonical_normal(const Vec3& n, const Vec3& q);

/// lambda3 / lambda1 < eta and lambda3 / lambda2 < eta.
bool is_planar(const Vec3& lambda, double eta);

}  // namespace voxplane
