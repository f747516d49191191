/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "voxplane/uncertainty.hpp"

#include <Eigen/SVD>

#include <algorithm>

namespace voxplane {

static_assert(sizeof(Sym3) == 6 * sizeof(double));
static_assert(sizeof(Mat3) == 9 * sizeof(double));

namespace {

constexpr double kAsymmetryTolerance = 1e-9;
constexpr double kGapRelative = 1e-9;

}  // namespace

void UncertaintyStats::add(const Vec3& p, const Mat3& cov) {
  if (!all_finite(p) || !cov.allFinite()) {
    throw InvalidInputError("accumulate_uncertainty: non-finite input");
  }
  if (asymmetry(cov) > kAsymmetryTolerance) {
    throw InvalidInputError("accumulate_uncertainty: point covariance is not symmetric");
  }
  for (int j = 0; j < 3; ++j) {
    for (int k = j; k < 3; ++k) {
      x_[pair_index(j, k)].add_outer(p, cov(j, k));
    }
    y_[j].noalias() += cov.col(j) * p.transpose();
  }
  z_.add(cov);
}

UncertaintyStats& UncertaintyStats::operator+=(const UncertaintyStats& other) {
  for (int i = 0; i < 6; ++i) x_[i] += other.x_[i];
  for (int j = 0; j < 3; ++j) y_[j] += other.y_[j];
  z_ += other.z_;
  return *this;
}

std::array<double, UncertaintyStats::kScalarCount> UncertaintyStats::serialize() const {
  std::array<double, kScalarCount> out{};
  std::size_t at = 0;
  for (const Sym3& x : x_) {
    for (double v : x.v) out[at++] = v;
  }
  for (const Mat3& y : y_) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out[at++] = y(r, c);
    }
  }
  for (double v : z_.v) out[at++] = v;
  return out;
}

UncertaintyStats UncertaintyStats::deserialize(std::span<const double, kScalarCount> payload) {
  UncertaintyStats s;
  std::size_t at = 0;
  for (Sym3& x : s.x_) {
    for (double& v : x.v) v = payload[at++];
  }
  for (Mat3& y : s.y_) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) y(r, c) = payload[at++];
    }
  }
  for (double& v : s.z_.v) v = payload[at++];
  return s;
}

UncertaintyStats accumulate_uncertainty(UncertaintyStats stats, const Vec3& p, const Mat3& cov_p) {
  stats.add(p, cov_p);
  return stats;
}

ShapeFactors shape_factors(std::uint64_t n_points, const PlaneBasis& basis) {
  if (n_points < 3) throw InsufficientPointsError("shape_factors: fewer than 3 points");
  const double eps_gap = kGapRelative * std::max(basis.lambda[0], 1e-12);
  const Vec3 n = basis.normal();
  const double count = static_cast<double>(n_points);
  ShapeFactors out;
  for (int m = 0; m < 2; ++m) {
    const double gap = basis.lambda[m] - basis.lambda[2];
    if (!(gap >= eps_gap)) {
      throw SpectralDegeneracyError("shape_factors: lambda_m too close to lambda_3");
    }
    const Vec3 um = basis.axis(m);
    out.F[m] = (um * n.transpose() + n * um.transpose()) / (count * (basis.lambda[2] - basis.lambda[m]));
  }
  return out;
}

PlaneCovariance plane_covariance(const UncertaintyStats& stats, const MomentAccumulator& acc,
                                 const PlaneBasis& basis) {
  const ShapeFactors sf = shape_factors(acc.count(), basis);
  const double count = static_cast<double>(acc.count());
  const Vec3 q = acc.mean();
  const Mat3 Z = stats.Z().matrix();

  Mat3 X_full[3][3];
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) X_full[j][k] = stats.X(j, k).matrix();
  }

  // Per shape factor m (only m = 1, 2 are nonzero):
  //   Fq_m      = F_m q
  //   YF_m      = sum_j F_m e_j^T Y_j^T        (row vector, as 1x3)
  //   YFq_m[n]  = sum_j (F_m e_j)^T Y_j^T F_n q
  Vec3 Fq[2];
  Eigen::RowVector3d YF[2];
  for (int m = 0; m < 2; ++m) {
    const Mat3& F = sf.F[m];
    Fq[m] = F * q;
    YF[m].setZero();
    for (int j = 0; j < 3; ++j) YF[m] += F.col(j).transpose() * stats.Y(j).transpose();
  }

  Mat3 B = Mat3::Zero();
  for (int m = 0; m < 2; ++m) {
    for (int n = m; n < 2; ++n) {
      double pp = 0.0;
      for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
          pp += sf.F[m].col(j).dot(X_full[j][k] * sf.F[n].col(k));
        }
      }
      const double cross_mn = YF[m].dot(Fq[n].transpose());
      const double cross_nm = YF[n].dot(Fq[m].transpose());
      const double qq = Fq[m].dot(Z * Fq[n]);
      B(m, n) = pp - cross_mn - cross_nm + qq;
      B(n, m) = B(m, n);
    }
  }

  Mat3 inner_nq = Mat3::Zero();
  for (int m = 0; m < 2; ++m) {
    inner_nq.row(m) = YF[m] - Fq[m].transpose() * Z;
  }

  PlaneCovariance out;
  const Mat3 nn = basis.U * B * basis.U.transpose();
  const Mat3 nq = basis.U * inner_nq / count;
  out.sigma.topLeftCorner<3, 3>() = 0.5 * (nn + nn.transpose());
  out.sigma.topRightCorner<3, 3>() = nq;
  out.sigma.bottomLeftCorner<3, 3>() = nq.transpose();
  out.sigma.bottomRightCorner<3, 3>() = Z / (count * count);
  return out;
}

PlaneCovariance plane_covariance_direct(std::span<const Vec3> points, std::span<const Mat3> covs) {
  if (points.size() != covs.size()) {
    throw InvalidInputError("plane_covariance_direct: points and covariances differ in length");
  }
  if (points.size() < 3) throw InsufficientPointsError("plane_covariance_direct: fewer than 3 points");
  const double count = static_cast<double>(points.size());

  Vec3 q = Vec3::Zero();
  for (const Vec3& p : points) q += p;
  q /= count;
  Mat3 A = Mat3::Zero();
  for (const Vec3& p : points) A += (p - q) * (p - q).transpose();
  A /= count;

  Eigen::JacobiSVD<Mat3> svd(A, Eigen::ComputeFullU);
  PlaneBasis basis;
  basis.U = svd.matrixU();
  basis.lambda = svd.singularValues();
  basis.U.col(2) = canonical_normal(basis.U.col(2), q);

  const ShapeFactors sf = shape_factors(points.size(), basis);

  PlaneCovariance out;
  Eigen::Matrix<double, 6, 3> J;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 r = points[i] - q;
    Mat3 rows;
    for (int m = 0; m < 3; ++m) rows.row(m) = r.transpose() * sf.F[m];
    J.topRows<3>() = basis.U * rows;
    J.bottomRows<3>() = Mat3::Identity() / count;
    out.sigma.noalias() += J * covs[i] * J.transpose();
  }
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();
  return out;
}

}  // namespace voxplane
