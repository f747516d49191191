/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "voxplane/pose.hpp"
#include "voxplane/voxel_map.hpp"

namespace voxplane {

/// Bounded planar rectangle. `axis` is a unit in-plane direction; the
/// rectangle spans `width` along axis and `height` along normal x axis.
struct Rect {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 axis = Vec3::UnitX();
  double width = 1.0;
  double height = 1.0;

  Vec3 second_axis() const { return normal.cross(axis); }
  /// Ray parameter of the hit, or a negative value on a miss.
  double intersect(const Vec3& origin, const Vec3& dir) const;
};

struct Scene {
  std::string name;
  std::vector<Rect> planes;

  void validate() const;
};

enum class SceneKind { BoxRoom, Corridor, TwoPlanes };

SceneKind parse_scene_kind(const std::string& name);

/// Where the generated geometry is centered. The default keeps the origin
/// (the first sensor pose of the bundled trajectories) off every octree
/// boundary of a 3 m root grid.
inline const Vec3 kDefaultSceneCenter{1.7, 0.9, 0.3};

/// box-room: 6 faces of an axis-aligned dims.x x dims.y x dims.z box.
/// corridor: floor, ceiling and two side walls, running along x.
/// two-planes: a floor and a wall meeting at 90 degrees.
Scene generate_scene(SceneKind kind, const Vec3& dims, const Vec3& center = kDefaultSceneCenter);

/// Plain-text scene description:
///   name <label>
///   rect cx cy cz  nx ny nz  ax ay az  width height
/// Blank lines and '#' comments are ignored.
Scene parse_scene(std::istream& in);
Scene load_scene(const std::string& path);
void write_scene(std::ostream& out, const Scene& scene);

struct ScanSpec {
  std::size_t rays_per_scan = 3000;
  double fov = 1.6;  // total vertical field of view, rad; azimuth covers 360 deg
  double min_range = 0.3;
  double max_range = 30.0;
  SensorNoiseModel noise;
  double noise_scale = 1.0;  // 0 gives exact returns; covariances still follow `noise`
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
};

struct Scan {
  std::vector<Vec3> points;  // sensor frame
  std::vector<Mat3> covs;    // sensor frame
  std::vector<Vec3> truth;   // noiseless returns, sensor frame
  std::vector<int> surface;  // index of the hit rectangle

  std::size_t size() const { return points.size(); }
};

Scan simulate_scan(const Scene& scene, const Pose& pose, const ScanSpec& spec);

/// Constant body-frame motion: pose_{k+1} = pose_k * step, timestamps dt apart.
std::vector<Pose> constant_velocity_trajectory(std::size_t frames, const Pose& step, const Pose& start = {},
                                               double dt = 0.1);

/// Default motion for the box-room benchmark: 2.2 cm and 0.23 deg of yaw per frame.
Pose default_motion_step();

}  // namespace voxplane
