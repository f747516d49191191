/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "voxplane/voxel_map.hpp"

namespace voxplane {

/// Bucket index over (theta, phi, d, u, v).
struct LshKey {
  std::array<std::int64_t, 5> k{};

  friend bool operator==(const LshKey&, const LshKey&) = default;
};

struct LshKeyHash {
  std::size_t operator()(const LshKey& key) const noexcept;
};

struct MergeConfig {
  bool enabled = true;
  std::size_t trigger_count = 3;
  double eta = 0.01;
  double delta_theta = 0.087;  // rad
  double delta_phi = 0.087;    // rad
  double delta_d = 0.15;       // m
  double delta_u = 6.0;        // m, 2x root voxel size by default
  double delta_v = 6.0;        // m

  void validate() const;
  static MergeConfig for_root_size(double root_voxel_size);
};

/// Continuous plane coordinates that feed the key.
struct PlaneCoordinates {
  double theta = 0.0;  // azimuth of n in [0, 2 pi)
  double phi = 0.0;    // polar angle of n in [0, pi]
  double d = 0.0;      // -n^T q
  double u = 0.0;      // in-plane coordinates of q
  double v = 0.0;
  Mat3 R = Mat3::Identity();  // global -> plane frame, R n = e1
};

/// Azimuth is undefined on the poles; normals within one polar bucket of
/// either pole get theta = 0 so that near-vertical normals share a key.
PlaneCoordinates plane_coordinates(const Vec3& normal, const Vec3& center, double polar_cap);

/// Throws InvalidInputError for a zero normal.
LshKey plane_lsh_key(const PlaneEstimate& plane, const MergeConfig& cfg);
LshKey plane_lsh_key(const Vec3& normal, const Vec3& center, const MergeConfig& cfg);

/// Key -> voxels whose last registered plane hashed there.
class LshBuckets {
 public:
  struct Entry {
    VoxelId voxel = kNoVoxel;
    Vec3 normal = Vec3::Zero();
    double d = 0.0;
    std::uint64_t n_points = 0;
    bool live = true;
  };

  struct Bucket {
    std::vector<Entry> entries;
    std::size_t live_count = 0;
    // A bucket re-triggers only after new voxels joined since its last attempt.
    std::size_t joined_since_attempt = 0;
  };

  /// Registers (or re-registers) a Planar voxel. Returns the key of a bucket
  /// that reached the merge trigger.
  std::optional<LshKey> register_plane(VoxelId voxel, const PlaneEstimate& plane, const MergeConfig& cfg);

  /// Tombstones the voxel's live entry, if any.
  void unregister(VoxelId voxel);

  const Bucket* bucket(const LshKey& key) const;
  Bucket* bucket(const LshKey& key);
  std::optional<LshKey> key_of(VoxelId voxel) const;
  std::vector<VoxelId> live_members(const LshKey& key) const;

  std::size_t bucket_count() const { return buckets_.size(); }
  std::size_t registrations() const { return registrations_; }

 private:
  void compact(Bucket& b);

  std::unordered_map<LshKey, Bucket, LshKeyHash> buckets_;
  std::unordered_map<VoxelId, LshKey> current_;
  std::size_t registrations_ = 0;
};

struct MergeReport {
  std::size_t buckets_triggered = 0;
  std::size_t candidates_tested = 0;
  std::size_t commits = 0;
  std::size_t rejects = 0;
  std::size_t aborted = 0;

  MergeReport& operator+=(const MergeReport& o);
};

/// Merges live members of a bucket into its most-populated voxel. Each
/// candidate is tentatively pooled with the reference and committed only if
/// the pooled scatter passes the planarity check. If the final reference
/// covariance cannot be assembled the whole bucket is left unchanged.
/// Returns any further trigger raised by re-registering the reference.
MergeReport try_merge_bucket(LshBuckets& buckets, VoxelMap& map, const LshKey& key, const MergeConfig& cfg,
                             std::optional<LshKey>* follow_up = nullptr);

/// Registers every plane the map refreshed since the last call and runs any
/// merges they trigger.
MergeReport register_and_merge(LshBuckets& buckets, VoxelMap& map, const MergeConfig& cfg);

}  // namespace voxplane
