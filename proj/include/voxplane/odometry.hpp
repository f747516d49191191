/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "voxplane/config.hpp"
#include "voxplane/io.hpp"
#include "voxplane/merge_lsh.hpp"
#include "voxplane/synth.hpp"

namespace voxplane {

struct Frame {
  double timestamp = 0.0;
  std::vector<Vec3> points;  // sensor frame
  std::vector<Mat3> covs;    // sensor frame
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t size() const = 0;
  virtual Frame frame(std::size_t k) const = 0;
  /// Ground truth sensor poses, one per frame, if known.
  virtual std::optional<Trajectory> ground_truth() const { return std::nullopt; }
};

/// Simulated scans along a constant-velocity trajectory through a scene.
class SynthSource final : public FrameSource {
 public:
  SynthSource(Scene scene, std::vector<Pose> trajectory, ScanSpec spec);
  /// Scene and motion from cfg.synth; the scene is a kind name or a scene file.
  static SynthSource from_config(const RunConfig& cfg);

  std::size_t size() const override { return trajectory_.size(); }
  Frame frame(std::size_t k) const override;
  std::optional<Trajectory> ground_truth() const override { return Trajectory(trajectory_); }
  const Scene& scene() const { return scene_; }

 private:
  Scene scene_;
  std::vector<Pose> trajectory_;
  ScanSpec spec_;
};

/// A directory of KITTI velodyne .bin files, read in lexicographic order.
class KittiSource final : public FrameSource {
 public:
  KittiSource(const std::string& bin_dir, const RunConfig& cfg, std::optional<Trajectory> gt = std::nullopt);

  std::size_t size() const override { return files_.size(); }
  Frame frame(std::size_t k) const override;
  std::optional<Trajectory> ground_truth() const override { return gt_; }

 private:
  std::vector<std::string> files_;
  PreprocessConfig pre_;
  SensorNoiseModel noise_;
  std::optional<Trajectory> gt_;
};

/// Range crop then voxel-grid centroid downsampling (leaf 0 keeps every point).
std::vector<Vec3> preprocess(const std::vector<Vec3>& points, const PreprocessConfig& cfg);

struct FrameStats {
  std::size_t frame = 0;
  double timestamp = 0.0;
  double estimation_ms = 0.0;
  double map_update_ms = 0.0;
  std::size_t points = 0;
  std::size_t residuals = 0;
  int iterations = 0;
  bool degenerate = false;
  std::array<std::size_t, kVoxelStateCount> voxels{};
  MergeReport merge;
  std::size_t map_bytes = 0;
};

/// Appends one CSV row per frame under a fixed header written on construction.
class StatsWriter {
 public:
  explicit StatsWriter(std::ostream& out);
  void write(const FrameStats& s);
  static const char* header();

 private:
  std::ostream& out_;
};

struct OdometryResult {
  Trajectory trajectory;
  std::vector<FrameStats> stats;
  std::unique_ptr<VoxelMap> map;
  std::size_t degenerate_frames = 0;
};

/// Sequential frame loop: predict, register, transform to world with
/// per-point covariances, insert, register and merge planes, record stats.
/// A degenerate registration falls back to the prediction. If `stats_out` is
/// given, each frame's row is written as soon as it is produced.
OdometryResult run_odometry(const RunConfig& cfg, const FrameSource& source, StatsWriter* stats_out = nullptr);

/// RMSE of translations after the closed-form rigid alignment (no scale) of
/// `estimated` onto `ground_truth`. Throws InvalidInputError on length mismatch.
double ate(const Trajectory& estimated, const Trajectory& ground_truth);

/// Expresses body poses in another body frame: T_k -> E T_k E^-1.
Trajectory change_frame(const Trajectory& traj, const Pose& extrinsic);

}  // namespace voxplane
