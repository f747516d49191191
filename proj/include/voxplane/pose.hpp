/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <Eigen/Geometry>

#include "voxplane/common.hpp"

namespace voxplane {

/// Rigid transform sensor -> world with a timestamp in seconds.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double timestamp = 0.0;

  static Pose identity(double stamp = 0.0) {
    Pose p;
    p.timestamp = stamp;
    return p;
  }

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }

  Pose inverse() const {
    Pose out;
    out.rotation = rotation.transpose();
    out.translation = -(out.rotation * translation);
    out.timestamp = timestamp;
    return out;
  }

  /// (*this) * other; the result carries other's timestamp.
  Pose compose(const Pose& other) const {
    Pose out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    out.timestamp = other.timestamp;
    return out;
  }

  Eigen::Isometry3d isometry() const {
    Eigen::Isometry3d iso = Eigen::Isometry3d::Identity();
    iso.linear() = rotation;
    iso.translation() = translation;
    return iso;
  }

  /// ||R^T R - I||_F <= tol and |det R - 1| <= tol.
  bool is_valid(double tol = 1e-9) const {
    return (rotation.transpose() * rotation - Mat3::Identity()).norm() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

/// SO(3) exponential map.
inline Mat3 so3_exp(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-12) return Mat3::Identity() + skew(w);
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

/// SO(3) logarithm as a rotation vector.
inline Vec3 so3_log(const Mat3& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

/// Projects a near-rotation back onto SO(3).
inline Mat3 orthonormalize(const Mat3& R) { return Eigen::Quaterniond(R).normalized().toRotationMatrix(); }

}  // namespace voxplane
