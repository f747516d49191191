/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <iosfwd>
#include <string>

#include "voxplane/merge_lsh.hpp"
#include "voxplane/registration.hpp"
#include "voxplane/synth.hpp"
#include "voxplane/voxel_map.hpp"

namespace voxplane {

struct SynthConfig {
  std::string scene = "box-room";  // scene kind or path to a scene file
  Vec3 dims{10.0, 8.0, 3.0};
  std::size_t frames = 200;
  std::size_t rays = 3000;
  double fov = 1.6;
  double max_range = 30.0;
  double noise_scale = 1.0;
};

struct PreprocessConfig {
  double downsample = 0.0;  // voxel-grid leaf size in meters, 0 disables
  double min_range = 0.5;
  double max_range = 100.0;
};

/// Everything a run needs. Defaults: 3 m root voxels, 3 octree layers.
struct RunConfig {
  MapConfig map;
  MergeConfig merge = MergeConfig::for_root_size(3.0);
  SensorNoiseModel noise;
  SolverConfig solver;
  SynthConfig synth;
  PreprocessConfig preprocess;
  std::string rng = "philox4x32-10";
  std::uint64_t seed = 1;

  void validate() const;
};

/// Parses `section.key = value` lines; '#' starts a comment. Unknown keys,
/// malformed values and duplicate keys throw ConfigError. merge.delta_u and
/// merge.delta_v default to twice the root voxel size; merge eta follows map.eta.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
void write_config(std::ostream& out, const RunConfig& cfg);

}  // namespace voxplane
