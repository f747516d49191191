/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "voxplane/synth.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "voxplane/random.hpp"

namespace voxplane {

double Rect::intersect(const Vec3& origin, const Vec3& dir) const {
  const double denom = normal.dot(dir);
  if (std::abs(denom) < 1e-12) return -1.0;
  const double t = normal.dot(center - origin) / denom;
  if (t <= 0.0) return -1.0;
  const Vec3 rel = origin + t * dir - center;
  if (std::abs(rel.dot(axis)) > 0.5 * width || std::abs(rel.dot(second_axis())) > 0.5 * height) return -1.0;
  return t;
}

void Scene::validate() const {
  for (const Rect& r : planes) {
    if (std::abs(r.normal.norm() - 1.0) > 1e-9 || std::abs(r.axis.norm() - 1.0) > 1e-9) {
      throw InvalidInputError("scene: rectangle normal and axis must be unit vectors");
    }
    if (std::abs(r.normal.dot(r.axis)) > 1e-9) throw InvalidInputError("scene: axis must lie in the plane");
    if (!(r.width > 0.0) || !(r.height > 0.0)) throw InvalidInputError("scene: extents must be positive");
  }
}

SceneKind parse_scene_kind(const std::string& name) {
  if (name == "box-room") return SceneKind::BoxRoom;
  if (name == "corridor") return SceneKind::Corridor;
  if (name == "two-planes") return SceneKind::TwoPlanes;
  throw InvalidInputError("unknown scene kind '" + name + "'");
}

namespace {

Rect make_rect(const Vec3& center, const Vec3& normal, const Vec3& axis, double width, double height) {
  return Rect{center, normal.normalized(), axis.normalized(), width, height};
}

}  // namespace

Scene generate_scene(SceneKind kind, const Vec3& dims, const Vec3& c) {
  if (!(dims.array() > 0.0).all()) throw InvalidInputError("generate_scene: dims must be positive");
  const double hx = 0.5 * dims.x(), hy = 0.5 * dims.y(), hz = 0.5 * dims.z();
  const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
  Scene s;
  switch (kind) {
    case SceneKind::BoxRoom:
      s.name = "box-room";
      s.planes = {
          make_rect(c - hz * ez, ez, ex, dims.x(), dims.y()),   // floor
          make_rect(c + hz * ez, -ez, ex, dims.x(), dims.y()),  // ceiling
          make_rect(c - hx * ex, ex, ey, dims.y(), dims.z()),
          make_rect(c + hx * ex, -ex, ey, dims.y(), dims.z()),
          make_rect(c - hy * ey, ey, ex, dims.x(), dims.z()),
          make_rect(c + hy * ey, -ey, ex, dims.x(), dims.z()),
      };
      break;
    case SceneKind::Corridor:
      s.name = "corridor";
      s.planes = {
          make_rect(c - hz * ez, ez, ex, dims.x(), dims.y()),
          make_rect(c + hz * ez, -ez, ex, dims.x(), dims.y()),
          make_rect(c - hy * ey, ey, ex, dims.x(), dims.z()),
          make_rect(c + hy * ey, -ey, ex, dims.x(), dims.z()),
      };
      break;
    case SceneKind::TwoPlanes:
      s.name = "two-planes";
      s.planes = {
          make_rect(c - hz * ez, ez, ex, dims.x(), dims.y()),
          make_rect(c + hx * ex, -ex, ey, dims.y(), dims.z()),
      };
      break;
  }
  s.validate();
  return s;
}

Scene parse_scene(std::istream& in) {
  Scene s;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word == "name") {
      ls >> s.name;
    } else if (word == "rect") {
      double v[11];
      for (double& x : v) {
        if (!(ls >> x)) throw MalformedFileError("scene line " + std::to_string(line_no) + ": rect needs 11 numbers");
      }
      std::string extra;
      if (ls >> extra) throw MalformedFileError("scene line " + std::to_string(line_no) + ": trailing tokens");
      s.planes.push_back(make_rect({v[0], v[1], v[2]}, {v[3], v[4], v[5]}, {v[6], v[7], v[8]}, v[9], v[10]));
    } else {
      throw MalformedFileError("scene line " + std::to_string(line_no) + ": unknown directive '" + word + "'");
    }
  }
  s.validate();
  return s;
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedFileError("cannot open scene file " + path);
  return parse_scene(in);
}

void write_scene(std::ostream& out, const Scene& scene) {
  out << "name " << scene.name << "\n" << std::setprecision(17);
  for (const Rect& r : scene.planes) {
    out << "rect " << r.center.x() << ' ' << r.center.y() << ' ' << r.center.z() << "  " << r.normal.x() << ' '
        << r.normal.y() << ' ' << r.normal.z() << "  " << r.axis.x() << ' ' << r.axis.y() << ' ' << r.axis.z()
        << "  " << r.width << ' ' << r.height << "\n";
  }
}

Scan simulate_scan(const Scene& scene, const Pose& pose, const ScanSpec& spec) {
  Philox4x32 rng(spec.seed, spec.stream);
  Scan scan;
  scan.points.reserve(spec.rays_per_scan);
  scan.covs.reserve(spec.rays_per_scan);
  const double max_sin = std::sin(0.5 * std::min(spec.fov, std::numbers::pi));
  for (std::size_t i = 0; i < spec.rays_per_scan; ++i) {
    // Random directions, uniform over the spherical band; draws are consumed
    // for every ray so the stream layout does not depend on the scene.
    const double azimuth = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double z = rng.uniform(-max_sin, max_sin);
    const double n_range = rng.normal();
    const double n_b1 = rng.normal();
    const double n_b2 = rng.normal();

    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 dir(rho * std::cos(azimuth), rho * std::sin(azimuth), z);
    const Vec3 dir_world = pose.rotation * dir;

    double best = std::numeric_limits<double>::infinity();
    int hit = -1;
    for (std::size_t k = 0; k < scene.planes.size(); ++k) {
      const double t = scene.planes[k].intersect(pose.translation, dir_world);
      if (t > 0.0 && t < best) {
        best = t;
        hit = static_cast<int>(k);
      }
    }
    if (hit < 0 || best < spec.min_range || best > spec.max_range) continue;

    Vec3 b1 = dir.unitOrthogonal();
    Vec3 b2 = dir.cross(b1);
    const double s = spec.noise_scale;
    const Vec3 noisy_dir = (dir + s * spec.noise.sigma_bearing * (n_b1 * b1 + n_b2 * b2)).normalized();
    const double noisy_range = best + s * spec.noise.sigma_range * n_range;
    if (noisy_range <= 0.0) continue;

    const Vec3 p = noisy_range * noisy_dir;
    scan.points.push_back(p);
    scan.covs.push_back(sensor_covariance(p, spec.noise));
    scan.truth.push_back(best * dir);
    scan.surface.push_back(hit);
  }
  return scan;
}

std::vector<Pose> constant_velocity_trajectory(std::size_t frames, const Pose& step, const Pose& start, double dt) {
  std::vector<Pose> out;
  out.reserve(frames);
  Pose current = start;
  for (std::size_t k = 0; k < frames; ++k) {
    current.timestamp = start.timestamp + dt * static_cast<double>(k);
    out.push_back(current);
    const double stamp = current.timestamp;
    current = current.compose(step);
    current.rotation = orthonormalize(current.rotation);
    current.timestamp = stamp;
  }
  return out;
}

Pose default_motion_step() {
  Pose step;
  step.rotation = so3_exp(Vec3(0.0, 0.0, 0.004));
  step.translation = Vec3(0.02, 0.01, 0.0);
  return step;
}

}  // namespace voxplane
