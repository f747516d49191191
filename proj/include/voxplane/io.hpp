/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "voxplane/pose.hpp"
#include "voxplane/voxel_map.hpp"

namespace voxplane {

/// Poses ordered by strictly increasing timestamp.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<Pose> poses);

  /// Throws InvalidInputError unless pose.timestamp exceeds the last one.
  void push_back(const Pose& pose);

  std::size_t size() const { return poses_.size(); }
  bool empty() const { return poses_.empty(); }
  const Pose& operator[](std::size_t i) const { return poses_[i]; }
  const std::vector<Pose>& poses() const { return poses_; }

 private:
  std::vector<Pose> poses_;
};

/// KITTI velodyne scan: little-endian float32 (x, y, z, intensity) records.
/// Intensity is dropped. Throws MalformedFileError if the size is not a
/// multiple of 16 bytes or the file cannot be read.
std::vector<Vec3> read_kitti_bin(const std::string& path);
void write_kitti_bin(const std::string& path, const std::vector<Vec3>& points, float intensity = 0.0f);

/// One row-major 3x4 [R|t] per line. Timestamps are index * dt.
Trajectory read_kitti_poses(std::istream& in, double dt = 0.1);
Trajectory read_kitti_poses(const std::string& path, double dt = 0.1);
void write_kitti_poses(std::ostream& out, const Trajectory& traj);
/// "timestamp tx ty tz qx qy qz qw" per line.
void write_tum(std::ostream& out, const Trajectory& traj);

/// Reads the "Tr:" velodyne-to-camera extrinsic of a KITTI calib.txt, if present.
std::optional<Pose> read_kitti_calib_tr(const std::string& path);

/// ASCII PLY with one colored quad (two triangles) per Planar voxel. Quad edges
/// follow the two in-plane axes with half-extents sqrt(3 lambda).
void write_plane_ply(std::ostream& out, const VoxelMap& map);
void write_points_ply(std::ostream& out, const std::vector<Vec3>& points);

}  // namespace voxplane
