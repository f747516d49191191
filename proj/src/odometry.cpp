/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "voxplane/odometry.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <unordered_map>

#include "voxplane/random.hpp"
#include "voxplane/registration.hpp"

namespace voxplane {

SynthSource::SynthSource(Scene scene, std::vector<Pose> trajectory, ScanSpec spec)
    : scene_(std::move(scene)), trajectory_(std::move(trajectory)), spec_(spec) {
  scene_.validate();
  Trajectory check(trajectory_);  // validates timestamp order
}

SynthSource SynthSource::from_config(const RunConfig& cfg) {
  const SynthConfig& sc = cfg.synth;
  Scene scene;
  if (sc.scene == "box-room" || sc.scene == "corridor" || sc.scene == "two-planes") {
    scene = generate_scene(parse_scene_kind(sc.scene), sc.dims);
  } else {
    scene = load_scene(sc.scene);
  }
  ScanSpec spec;
  spec.rays_per_scan = sc.rays;
  spec.fov = sc.fov;
  spec.max_range = sc.max_range;
  spec.noise = cfg.noise;
  spec.noise_scale = sc.noise_scale;
  spec.seed = cfg.seed;
  return SynthSource(std::move(scene), constant_velocity_trajectory(sc.frames, default_motion_step()), spec);
}

Frame SynthSource::frame(std::size_t k) const {
  ScanSpec spec = spec_;
  spec.stream = k;
  Scan scan = simulate_scan(scene_, trajectory_.at(k), spec);
  return Frame{trajectory_[k].timestamp, std::move(scan.points), std::move(scan.covs)};
}

KittiSource::KittiSource(const std::string& bin_dir, const RunConfig& cfg, std::optional<Trajectory> gt)
    : pre_(cfg.preprocess), noise_(cfg.noise), gt_(std::move(gt)) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(bin_dir)) throw InvalidInputError("not a directory: " + bin_dir);
  for (const auto& entry : fs::directory_iterator(bin_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bin") files_.push_back(entry.path().string());
  }
  std::sort(files_.begin(), files_.end());
  if (files_.empty()) throw InvalidInputError("no .bin scans in " + bin_dir);
  if (gt_ && gt_->size() < files_.size()) {
    throw InvalidInputError("ground truth has fewer poses than there are scans");
  }
  if (gt_ && gt_->size() > files_.size()) {
    std::vector<Pose> head(gt_->poses().begin(), gt_->poses().begin() + static_cast<std::ptrdiff_t>(files_.size()));
    gt_ = Trajectory(std::move(head));
  }
}

Frame KittiSource::frame(std::size_t k) const {
  Frame f;
  f.timestamp = 0.1 * static_cast<double>(k);
  f.points = preprocess(read_kitti_bin(files_.at(k)), pre_);
  f.covs.reserve(f.points.size());
  for (const Vec3& p : f.points) f.covs.push_back(sensor_covariance(p, noise_));
  return f;
}

std::vector<Vec3> preprocess(const std::vector<Vec3>& points, const PreprocessConfig& cfg) {
  std::vector<Vec3> kept;
  kept.reserve(points.size());
  for (const Vec3& p : points) {
    const double r = p.norm();
    if (std::isfinite(r) && r >= cfg.min_range && r <= cfg.max_range) kept.push_back(p);
  }
  if (cfg.downsample <= 0.0) return kept;

  struct Cell {
    Vec3 sum = Vec3::Zero();
    std::size_t n = 0;
    std::size_t order = 0;
  };
  struct KeyHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const noexcept {
      return static_cast<std::size_t>(k[0] * 73856093LL ^ k[1] * 19349663LL ^ k[2] * 83492791LL);
    }
  };
  std::unordered_map<std::array<std::int64_t, 3>, Cell, KeyHash> cells;
  for (const Vec3& p : kept) {
    const std::array<std::int64_t, 3> key{static_cast<std::int64_t>(std::floor(p.x() / cfg.downsample)),
                                          static_cast<std::int64_t>(std::floor(p.y() / cfg.downsample)),
                                          static_cast<std::int64_t>(std::floor(p.z() / cfg.downsample))};
    auto [it, inserted] = cells.try_emplace(key);
    if (inserted) it->second.order = cells.size() - 1;
    it->second.sum += p;
    ++it->second.n;
  }
  // Output ordered by first occurrence so the result does not depend on hashing.
  std::vector<Vec3> out(cells.size());
  for (const auto& [key, cell] : cells) out[cell.order] = cell.sum / static_cast<double>(cell.n);
  return out;
}

StatsWriter::StatsWriter(std::ostream& out) : out_(out) { out_ << header() << '\n'; }

const char* StatsWriter::header() {
  return "frame,timestamp,estimation_ms,map_update_ms,points,residuals,iterations,degenerate,"
         "buffering,planar,subdivided,merged_redirect,degenerate_voxels,"
         "buckets_triggered,candidates_tested,merge_commits,merge_rejects,merge_aborted,map_bytes";
}

void StatsWriter::write(const FrameStats& s) {
  out_ << s.frame << ',' << std::setprecision(17) << s.timestamp << ',' << std::setprecision(6) << s.estimation_ms
       << ',' << s.map_update_ms << ',' << s.points << ',' << s.residuals << ',' << s.iterations << ','
       << (s.degenerate ? 1 : 0);
  for (std::size_t c : s.voxels) out_ << ',' << c;
  out_ << ',' << s.merge.buckets_triggered << ',' << s.merge.candidates_tested << ',' << s.merge.commits << ','
       << s.merge.rejects << ',' << s.merge.aborted << ',' << s.map_bytes << '\n';
  out_.flush();
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Fisher-Yates over a per-frame stream. Sensors emit points in scan order, so
// without this the first init_points returns of a voxel form a thin sliver.
std::vector<std::size_t> insertion_order(std::size_t n, std::uint64_t seed, std::size_t frame) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Philox4x32 rng(seed, (std::uint64_t{1} << 32) + frame);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
  return order;
}

}  // namespace

OdometryResult run_odometry(const RunConfig& cfg, const FrameSource& source, StatsWriter* stats_out) {
  cfg.validate();
  OdometryResult result;
  result.map = std::make_unique<VoxelMap>(cfg.map);
  VoxelMap& map = *result.map;
  LshBuckets buckets;
  std::vector<Pose> history;

  for (std::size_t k = 0; k < source.size(); ++k) {
    const Frame frame = source.frame(k);
    FrameStats stats;
    stats.frame = k;
    stats.timestamp = frame.timestamp;
    stats.points = frame.points.size();

    const auto t0 = Clock::now();
    Pose pose = predict(history);
    Mat6 pose_cov = Mat6::Zero();
    if (k > 0) {
      try {
        const RegistrationResult reg = estimate_pose(map, frame.points, frame.covs, pose, cfg.solver);
        pose = reg.pose;
        pose_cov = reg.covariance;
        stats.residuals = reg.report.residuals;
        stats.iterations = reg.report.iterations;
      } catch (const DegenerateRegistrationError& e) {
        std::cerr << "frame " << k << ": " << e.what() << "; using the prediction\n";
        stats.degenerate = true;
        pose_cov = prior_covariance(cfg.solver);
        ++result.degenerate_frames;
      }
    }
    pose.timestamp = frame.timestamp;
    stats.estimation_ms = ms_since(t0);

    const auto t1 = Clock::now();
    SensorNoiseModel model = cfg.noise;
    if (k > 0) model.pose_cov = pose_cov;
    for (std::size_t i : insertion_order(frame.points.size(), cfg.seed, k)) {
      const Vec3& p = frame.points[i];
      Mat3 cov = pose.rotation * frame.covs[i] * pose.rotation.transpose();
      if (model.pose_cov) {
        Eigen::Matrix<double, 3, 6> J;
        J.leftCols<3>() = -pose.rotation * skew(p);
        J.rightCols<3>() = Mat3::Identity();
        cov += J * (*model.pose_cov) * J.transpose();
      }
      map.insert_point(pose.apply(p), 0.5 * (cov + cov.transpose()));
    }
    if (cfg.merge.enabled) {
      stats.merge = register_and_merge(buckets, map, cfg.merge);
    } else {
      map.take_updated_planes();
    }
    stats.map_update_ms = ms_since(t1);

    const MemoryReport mem = map.memory_stats();
    stats.voxels = mem.per_state;
    stats.map_bytes = mem.estimated_bytes;
    if (stats_out) stats_out->write(stats);
    result.stats.push_back(stats);
    result.trajectory.push_back(pose);
    history.push_back(pose);
    if (history.size() > 2) history.erase(history.begin());
  }
  return result;
}

double ate(const Trajectory& estimated, const Trajectory& ground_truth) {
  if (estimated.size() != ground_truth.size()) {
    throw InvalidInputError("ate: trajectories have " + std::to_string(estimated.size()) + " and " +
                            std::to_string(ground_truth.size()) + " poses");
  }
  if (estimated.empty()) throw InvalidInputError("ate: empty trajectories");
  const auto n = static_cast<Eigen::Index>(estimated.size());
  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(estimated[i].timestamp - ground_truth[i].timestamp) > 1e-6) {
      throw InvalidInputError("ate: timestamps differ at pose " + std::to_string(i));
    }
    src.col(i) = estimated[i].translation;
    dst.col(i) = ground_truth[i].translation;
  }
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  if (n >= 3) T = Eigen::umeyama(src, dst, false);
  else T.topRightCorner<3, 1>() = dst.rowwise().mean() - src.rowwise().mean();
  const Eigen::Matrix3Xd aligned = (T.topLeftCorner<3, 3>() * src).colwise() + T.topRightCorner<3, 1>();
  return std::sqrt((aligned - dst).colwise().squaredNorm().mean());
}

Trajectory change_frame(const Trajectory& traj, const Pose& extrinsic) {
  Trajectory out;
  const Pose inv = extrinsic.inverse();
  for (const Pose& p : traj.poses()) {
    Pose q = extrinsic.compose(p).compose(inv);
    q.timestamp = p.timestamp;
    out.push_back(q);
  }
  return out;
}

}  // namespace voxplane
