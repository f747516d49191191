/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <optional>
#include <unordered_map>
#include <variant>
#include <vector>

#include "voxplane/common.hpp"
#include "voxplane/moments.hpp"
#include "voxplane/pose.hpp"
#include "voxplane/uncertainty.hpp"

namespace voxplane {

using VoxelId = std::uint32_t;
inline constexpr VoxelId kNoVoxel = 0xffffffffu;

/// Integer cell of the root grid plus the octant path below it.
/// The path packs one octant digit (3 bits) per layer, layer 1 in the lowest bits.
struct VoxelKey {
  std::int64_t ix = 0;
  std::int64_t iy = 0;
  std::int64_t iz = 0;
  int layer = 0;
  std::uint32_t path = 0;

  friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
};

/// Root cell containing p: componentwise floor(p / root_size).
VoxelKey voxel_key(const Vec3& p, double root_size);

/// Range/bearing noise of a single LiDAR return plus optional pose noise.
struct SensorNoiseModel {
  double sigma_range = 0.02;       // meters
  double sigma_bearing = 0.0009;   // radians
  std::optional<Mat6> pose_cov;  // over [rotation; translation], right perturbation

  void validate() const;
};

/// sigma_r^2 w w^T + r^2 sigma_b^2 (I - w w^T), w = p / |p|.
Mat3 sensor_covariance(const Vec3& p_sensor, const SensorNoiseModel& model);

/// World-frame covariance R S R^T, plus J P J^T with J = [-R [p]x, I] when the
/// model carries a pose covariance P. Throws InvalidInputError for a zero-range point.
Mat3 point_world_covariance(const Vec3& p_sensor, const Pose& pose, const SensorNoiseModel& model);

struct PlaneEstimate {
  Vec3 normal = Vec3::UnitZ();
  Vec3 center = Vec3::Zero();
  double d = 0.0;  // -normal^T center, >= 0 by sign convention
  PlaneCovariance covariance;
  std::uint64_t n_points = 0;
  PlaneBasis basis;
};

struct MapConfig {
  double root_voxel_size = 3.0;
  int max_layer = 3;
  std::size_t init_points = 10;
  double eta = 0.01;
  // Eigen-decomposition and covariance are refreshed on every k-th insertion.
  std::uint32_t refresh_every = 5;
  // Once a voxel has absorbed more than this many points its covariance is frozen.
  std::optional<std::uint64_t> max_updates;
  // A plane is served only while its thickness lambda_3 stays below this
  // multiple of the mean point variance along the normal. 0 disables.
  double consistency_factor = 4.0;

  void validate() const;
  double voxel_size(int layer) const { return root_voxel_size / static_cast<double>(1u << layer); }
};

struct BufferedPoint {
  Vec3 p;
  Mat3 cov;
};

struct BufferingState {
  std::vector<BufferedPoint> points;
};

struct PlanarState {
  MomentAccumulator moments;
  UncertaintyStats stats;
  PlaneEstimate plane;
  std::uint32_t since_refresh = 0;
  bool uncertainty_frozen = false;
  // Result of the planarity check at the last refresh. Planes failing it stay
  // in the map but are not served to queries or merging.
  bool usable = true;
};

struct SubdividedState {
  std::array<VoxelId, 8> children{};
};

struct MergedRedirectState {
  VoxelId reference = kNoVoxel;
};

struct DegenerateState {
  MomentAccumulator moments;
};

enum class VoxelState { Buffering = 0, Planar, Subdivided, MergedRedirect, Degenerate };
inline constexpr std::size_t kVoxelStateCount = 5;
const char* to_string(VoxelState s);

struct Voxel {
  VoxelKey key;
  Vec3 origin = Vec3::Zero();  // min corner
  double size = 0.0;
  std::uint64_t update_count = 0;
  std::variant<BufferingState, PlanarState, SubdividedState, MergedRedirectState, DegenerateState> state;

  VoxelState kind() const { return static_cast<VoxelState>(state.index()); }
  bool contains(const Vec3& p) const;
  /// Fixed record size of the current state; buffering voxels are charged
  /// their full init_points capacity.
  std::size_t storage_bytes(std::size_t init_points) const;
};

struct InsertionReport {
  VoxelId addressed = kNoVoxel;  // leaf cell containing the point
  VoxelId target = kNoVoxel;     // voxel that absorbed it (after redirects)
  VoxelState state_before = VoxelState::Buffering;
  VoxelState state_after = VoxelState::Buffering;
  bool created = false;
};

enum class Transition { None, Planar, Subdivided, Degenerate };

struct PlaneMatch {
  const PlaneEstimate* plane = nullptr;
  VoxelId voxel = kNoVoxel;  // the voxel holding the plane (after redirects)
};

struct MemoryReport {
  std::array<std::size_t, kVoxelStateCount> per_state{};
  std::size_t redirect_count = 0;
  std::size_t root_count = 0;
  std::size_t estimated_bytes = 0;

  std::size_t count(VoxelState s) const { return per_state[static_cast<std::size_t>(s)]; }
  std::size_t total_voxels() const;
};

/// Hashed root grid with a bounded octree below every root cell.
///
/// Writers (insert, finalize, merge) need exclusive access; const queries may
/// run concurrently with each other.
class VoxelMap {
 public:
  explicit VoxelMap(MapConfig config = {});

  const MapConfig& config() const { return config_; }

  InsertionReport insert_point(const Vec3& p_world, const Mat3& cov);

  /// Buffering voxel with >= init_points points: Planar, Subdivided or Degenerate.
  Transition try_finalize(VoxelId id);

  std::optional<PlaneMatch> query_plane(const Vec3& p_world) const;

  MemoryReport memory_stats() const;

  std::size_t size() const { return voxels_.size(); }
  const Voxel& voxel(VoxelId id) const { return voxels_.at(id); }
  Voxel& voxel(VoxelId id) { return voxels_.at(id); }

  /// Follows redirects. The const overload does not compress paths.
  VoxelId resolve(VoxelId id) const;
  VoxelId resolve(VoxelId id);

  /// Leaf voxel addressed by p (before redirects); kNoVoxel when the root cell is absent.
  VoxelId locate(const Vec3& p_world) const;

  PlanarState* planar(VoxelId id);
  const PlanarState* planar(VoxelId id) const;

  /// Turns a Planar voxel into a redirect to `reference`, releasing its plane record.
  void redirect(VoxelId from, VoxelId reference);

  /// Recomputes basis, plane parameters and (unless frozen) covariance from the
  /// accumulated statistics. Returns false and leaves the plane untouched when
  /// the spectrum is degenerate.
  bool refresh_plane(VoxelId id);

  /// Planar voxels whose plane changed since the last call, each listed once.
  std::vector<VoxelId> take_updated_planes();
  void mark_updated(VoxelId id);

 private:
  struct RootHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const noexcept;
  };

  VoxelId new_voxel(const VoxelKey& key, const Vec3& origin, double size);
  VoxelId descend(VoxelId id, const Vec3& p) const;
  static int octant(const Voxel& v, const Vec3& p);
  bool finalize_to_planar(VoxelId id, std::vector<BufferedPoint>& points);
  void absorb(VoxelId id, const Vec3& p, const Mat3& cov);

  MapConfig config_;
  std::vector<Voxel> voxels_;
  std::unordered_map<std::array<std::int64_t, 3>, VoxelId, RootHash> roots_;
  std::vector<VoxelId> updated_;
  std::vector<bool> updated_flag_;
};

/// Builds plane parameters from raw statistics. Throws SpectralDegeneracyError
/// when the covariance cannot be assembled.
/// Planarity ratio test plus, if factor > 0, lambda_3 <= factor * n^T (Z / N) n.
bool plane_usable(const PlaneEstimate& plane, const UncertaintyStats& stats, double eta, double factor);

PlaneEstimate build_plane(const MomentAccumulator& moments, const UncertaintyStats& stats);

}  // namespace voxplane
