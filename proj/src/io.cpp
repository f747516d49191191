/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "voxplane/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace voxplane {

static_assert(std::endian::native == std::endian::little, "KITTI readers assume a little-endian host");

Trajectory::Trajectory(std::vector<Pose> poses) {
  poses_.reserve(poses.size());
  for (const Pose& p : poses) push_back(p);
}

void Trajectory::push_back(const Pose& pose) {
  if (!poses_.empty() && !(pose.timestamp > poses_.back().timestamp)) {
    throw InvalidInputError("trajectory timestamps must be strictly increasing");
  }
  poses_.push_back(pose);
}

std::vector<Vec3> read_kitti_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw MalformedFileError("cannot open " + path);
  const std::streamsize bytes = in.tellg();
  if (bytes % 16 != 0) {
    throw MalformedFileError(path + ": size " + std::to_string(bytes) + " is not a multiple of 16 bytes");
  }
  in.seekg(0);
  std::vector<float> raw(static_cast<std::size_t>(bytes / 4));
  if (bytes > 0 && !in.read(reinterpret_cast<char*>(raw.data()), bytes)) {
    throw MalformedFileError(path + ": short read");
  }
  std::vector<Vec3> points;
  points.reserve(raw.size() / 4);
  for (std::size_t i = 0; i + 3 < raw.size(); i += 4) points.emplace_back(raw[i], raw[i + 1], raw[i + 2]);
  return points;
}

void write_kitti_bin(const std::string& path, const std::vector<Vec3>& points, float intensity) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MalformedFileError("cannot write " + path);
  for (const Vec3& p : points) {
    const float rec[4] = {static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z()), intensity};
    out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
  }
  if (!out) throw MalformedFileError("write failed: " + path);
}

namespace {

Pose parse_3x4(const std::string& line, int line_no) {
  std::istringstream ls(line);
  double v[12];
  for (double& x : v) {
    if (!(ls >> x)) throw MalformedFileError("pose line " + std::to_string(line_no) + ": expected 12 numbers");
  }
  std::string extra;
  if (ls >> extra) throw MalformedFileError("pose line " + std::to_string(line_no) + ": more than 12 tokens");
  Pose p;
  p.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
  p.translation << v[3], v[7], v[11];
  return p;
}

}  // namespace

Trajectory read_kitti_poses(std::istream& in, double dt) {
  Trajectory traj;
  std::string line;
  int line_no = 0;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Pose p = parse_3x4(line, line_no);
    p.timestamp = dt * static_cast<double>(index++);
    traj.push_back(p);
  }
  return traj;
}

Trajectory read_kitti_poses(const std::string& path, double dt) {
  std::ifstream in(path);
  if (!in) throw MalformedFileError("cannot open " + path);
  return read_kitti_poses(in, dt);
}

void write_kitti_poses(std::ostream& out, const Trajectory& traj) {
  out << std::setprecision(17);
  for (const Pose& p : traj.poses()) {
    const Mat3& R = p.rotation;
    const Vec3& t = p.translation;
    out << R(0, 0) << ' ' << R(0, 1) << ' ' << R(0, 2) << ' ' << t.x() << ' ' << R(1, 0) << ' ' << R(1, 1) << ' '
        << R(1, 2) << ' ' << t.y() << ' ' << R(2, 0) << ' ' << R(2, 1) << ' ' << R(2, 2) << ' ' << t.z() << '\n';
  }
}

void write_tum(std::ostream& out, const Trajectory& traj) {
  out << std::setprecision(17);
  for (const Pose& p : traj.poses()) {
    const Eigen::Quaterniond q(p.rotation);
    out << p.timestamp << ' ' << p.translation.x() << ' ' << p.translation.y() << ' ' << p.translation.z() << ' '
        << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
}

std::optional<Pose> read_kitti_calib_tr(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind("Tr:", 0) == 0) return parse_3x4(line.substr(3), line_no);
  }
  return std::nullopt;
}

namespace {

struct Rgb {
  int r, g, b;
};

// Deterministic, well spread colors per voxel id.
Rgb color_of(VoxelId id) {
  std::uint32_t h = id * 2654435761u;
  h ^= h >> 15;
  return {64 + static_cast<int>(h & 0x7f) + 64 * static_cast<int>((h >> 7) & 1),
          64 + static_cast<int>((h >> 8) & 0x7f) + 64 * static_cast<int>((h >> 15) & 1),
          64 + static_cast<int>((h >> 16) & 0x7f) + 64 * static_cast<int>((h >> 23) & 1)};
}

}  // namespace

void write_plane_ply(std::ostream& out, const VoxelMap& map) {
  std::vector<std::pair<VoxelId, const PlaneEstimate*>> planes;
  for (VoxelId id = 0; id < map.size(); ++id) {
    if (const PlanarState* s = map.planar(id)) planes.emplace_back(id, &s->plane);
  }
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << 4 * planes.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "element face " << 2 * planes.size() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  for (const auto& [id, plane] : planes) {
    const Vec3 a1 = plane->basis.axis(0) * std::sqrt(3.0 * std::max(plane->basis.lambda[0], 0.0));
    const Vec3 a2 = plane->basis.axis(1) * std::sqrt(3.0 * std::max(plane->basis.lambda[1], 0.0));
    const Rgb c = color_of(id);
    const std::array<Vec3, 4> corners{Vec3(plane->center - a1 - a2), Vec3(plane->center + a1 - a2),
                                      Vec3(plane->center + a1 + a2), Vec3(plane->center - a1 + a2)};
    for (const Vec3& corner : corners) {
      out << corner.x() << ' ' << corner.y() << ' ' << corner.z() << ' ' << c.r << ' ' << c.g << ' ' << c.b << '\n';
    }
  }
  for (std::size_t k = 0; k < planes.size(); ++k) {
    const std::size_t b = 4 * k;
    out << "3 " << b << ' ' << b + 1 << ' ' << b + 2 << '\n' << "3 " << b << ' ' << b + 2 << ' ' << b + 3 << '\n';
  }
}

void write_points_ply(std::ostream& out, const std::vector<Vec3>& points) {
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << points.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\nend_header\n";
  for (const Vec3& p : points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
}

}  // namespace voxplane
