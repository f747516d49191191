/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <span>
#include <utility>

#include "voxplane/common.hpp"
#include "voxplane/moments.hpp"

namespace voxplane {

/// Point-free sufficient statistics of a plane's uncertainty.
///
///   X_{j,k} = sum_i (e_j^T S_i e_k) p_i p_i^T   (6 symmetric blocks, j <= k)
///   Y_j     = sum_i S_i e_j p_i^T               (3 general blocks)
///   Z       = sum_i S_i                         (1 symmetric block)
///
/// where S_i is the world covariance of point p_i. 36 + 27 + 6 = 69 scalars;
/// every family is a plain sum, so two populations pool by addition.
class UncertaintyStats {
 public:
  static constexpr std::size_t kScalarCount = 69;

  UncertaintyStats() = default;

  /// Throws InvalidInputError if cov is asymmetric beyond 1e-9 or inputs are
  /// non-finite.
  void add(const Vec3& p, const Mat3& cov);

  /// X_{j,k} for j, k in {0, 1, 2}; X_{j,k} == X_{k,j}.
  const Sym3& X(int j, int k) const { return x_[pair_index(j, k)]; }
  const Mat3& Y(int j) const { return y_[j]; }
  const Sym3& Z() const { return z_; }

  UncertaintyStats& operator+=(const UncertaintyStats& other);

  std::array<double, kScalarCount> serialize() const;
  static UncertaintyStats deserialize(std::span<const double, kScalarCount> payload);

  friend bool operator==(const UncertaintyStats&, const UncertaintyStats&) = default;

  static constexpr int pair_index(int j, int k) {
    if (j > k) std::swap(j, k);
    constexpr int kRowStart[3] = {0, 3, 5};
    return kRowStart[j] + (k - j);
  }

 private:
  std::array<Sym3, 6> x_{};
  std::array<Mat3, 3> y_{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  Sym3 z_{};
};

UncertaintyStats accumulate_uncertainty(UncertaintyStats stats, const Vec3& p, const Mat3& cov_p);

/// F_m = (u_m n^T + n u_m^T) / (N (lambda_3 - lambda_m)) for m = 1, 2; F_3 = 0.
struct ShapeFactors {
  std::array<Mat3, 3> F{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
};

/// Throws SpectralDegeneracyError when lambda_m - lambda_3 falls below
/// 1e-9 * max(lambda_1, 1e-12) for m in {1, 2}, InsufficientPointsError for
/// fewer than 3 points.
ShapeFactors shape_factors(std::uint64_t n_points, const PlaneBasis& basis);

/// 6x6 covariance over [n; q], blocks [S_nn S_nq; S_nq^T S_qq].
struct PlaneCovariance {
  Mat6 sigma = Mat6::Zero();

  Mat3 nn() const { return sigma.topLeftCorner<3, 3>(); }
  Mat3 nq() const { return sigma.topRightCorner<3, 3>(); }
  Mat3 qq() const { return sigma.bottomRightCorner<3, 3>(); }
};

/// Assembles the plane covariance from {X, Y, Z, N, q, U, lambda} only.
/// Cost does not depend on the number of accumulated points.
PlaneCovariance plane_covariance(const UncertaintyStats& stats, const MomentAccumulator& acc,
                                 const PlaneBasis& basis);

/// Reference computation iterating over every point: SVD of the centered
/// scatter, per-point Jacobians, sum of J_i S_i J_i^T.
PlaneCovariance plane_covariance_direct(std::span<const Vec3> points, std::span<const Mat3> covs);

}  // namespace voxplane
