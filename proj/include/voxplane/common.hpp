/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace voxplane {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

// Error hierarchy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class InsufficientPointsError : public Error {
 public:
  using Error::Error;
};

class SpectralDegeneracyError : public Error {
 public:
  using Error::Error;
};

class DegenerateRegistrationError : public Error {
 public:
  using Error::Error;
};

class MalformedFileError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Packed symmetric 3x3 matrix: six scalars in the order xx, xy, xz, yy, yz, zz.
struct Sym3 {
  std::array<double, 6> v{};

  static Sym3 from_matrix(const Mat3& m) {
    return Sym3{{m(0, 0), m(0, 1), m(0, 2), m(1, 1), m(1, 2), m(2, 2)}};
  }

  Mat3 matrix() const {
    Mat3 m;
    m << v[0], v[1], v[2],  //
        v[1], v[3], v[4],   //
        v[2], v[4], v[5];
    return m;
  }

  /// this += scale * p p^T
  void add_outer(const Vec3& p, double scale = 1.0) {
    v[0] += scale * p.x() * p.x();
    v[1] += scale * p.x() * p.y();
    v[2] += scale * p.x() * p.z();
    v[3] += scale * p.y() * p.y();
    v[4] += scale * p.y() * p.z();
    v[5] += scale * p.z() * p.z();
  }

  void add(const Mat3& m) {
    v[0] += m(0, 0);
    v[1] += 0.5 * (m(0, 1) + m(1, 0));
    v[2] += 0.5 * (m(0, 2) + m(2, 0));
    v[3] += m(1, 1);
    v[4] += 0.5 * (m(1, 2) + m(2, 1));
    v[5] += m(2, 2);
  }

  Sym3& operator+=(const Sym3& o) {
    for (int i = 0; i < 6; ++i) v[i] += o.v[i];
    return *this;
  }

  bool is_zero() const {
    for (double x : v) {
      if (x != 0.0) return false;
    }
    return true;
  }

  friend bool operator==(const Sym3&, const Sym3&) = default;
};

inline bool all_finite(const Vec3& p) { return p.allFinite(); }

/// Max absolute asymmetry |m - m^T|.
inline double asymmetry(const Mat3& m) { return (m - m.transpose()).cwiseAbs().maxCoeff(); }

inline Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0.0, -w.z(), w.y(),  //
      w.z(), 0.0, -w.x(),   //
      -w.y(), w.x(), 0.0;
  return s;
}

}  // namespace voxplane
