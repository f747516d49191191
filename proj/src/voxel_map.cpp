/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "voxplane/voxel_map.hpp"

#include <cmath>

namespace voxplane {

VoxelKey voxel_key(const Vec3& p, double root_size) {
  if (!(root_size > 0.0)) throw InvalidInputError("voxel_key: root size must be positive");
  VoxelKey key;
  key.ix = static_cast<std::int64_t>(std::floor(p.x() / root_size));
  key.iy = static_cast<std::int64_t>(std::floor(p.y() / root_size));
  key.iz = static_cast<std::int64_t>(std::floor(p.z() / root_size));
  return key;
}

void SensorNoiseModel::validate() const {
  if (!(sigma_range > 0.0) || !(sigma_bearing > 0.0)) {
    throw ConfigError("sensor noise sigmas must be positive");
  }
}

Mat3 sensor_covariance(const Vec3& p_sensor, const SensorNoiseModel& model) {
  const double range = p_sensor.norm();
  if (!(range > 0.0) || !std::isfinite(range)) {
    throw InvalidInputError("point_world_covariance: zero-range point");
  }
  const Vec3 w = p_sensor / range;
  const Mat3 radial = w * w.transpose();
  const double sr2 = model.sigma_range * model.sigma_range;
  const double st2 = range * range * model.sigma_bearing * model.sigma_bearing;
  return sr2 * radial + st2 * (Mat3::Identity() - radial);
}

Mat3 point_world_covariance(const Vec3& p_sensor, const Pose& pose, const SensorNoiseModel& model) {
  const Mat3 local = sensor_covariance(p_sensor, model);
  Mat3 world = pose.rotation * local * pose.rotation.transpose();
  if (model.pose_cov) {
    Eigen::Matrix<double, 3, 6> J;
    J.leftCols<3>() = -pose.rotation * skew(p_sensor);
    J.rightCols<3>() = Mat3::Identity();
    world += J * (*model.pose_cov) * J.transpose();
  }
  return 0.5 * (world + world.transpose());
}

void MapConfig::validate() const {
  if (!(root_voxel_size > 0.0)) throw ConfigError("map.root_voxel_size must be positive");
  if (max_layer < 0 || max_layer > 10) throw ConfigError("map.max_layer must be in [0, 10]");
  if (init_points < 3) throw ConfigError("map.init_points must be at least 3");
  if (!(eta > 0.0)) throw ConfigError("map.eta must be positive");
  if (refresh_every == 0) throw ConfigError("map.refresh_every must be at least 1");
  if (!(consistency_factor >= 0.0)) throw ConfigError("map.consistency_factor must be non-negative");
}

bool plane_usable(const PlaneEstimate& plane, const UncertaintyStats& stats, double eta, double factor) {
  if (!is_planar(plane.basis.lambda, eta)) return false;
  if (factor <= 0.0 || plane.n_points == 0) return true;
  const double expected = plane.normal.dot(stats.Z().matrix() * plane.normal) / static_cast<double>(plane.n_points);
  return plane.basis.lambda[2] <= factor * expected;
}

const char* to_string(VoxelState s) {
  switch (s) {
    case VoxelState::Buffering: return "buffering";
    case VoxelState::Planar: return "planar";
    case VoxelState::Subdivided: return "subdivided";
    case VoxelState::MergedRedirect: return "merged";
    case VoxelState::Degenerate: return "degenerate";
  }
  return "?";
}

bool Voxel::contains(const Vec3& p) const {
  const Vec3 rel = p - origin;
  return (rel.array() >= 0.0).all() && (rel.array() < size).all();
}

namespace {

// Header shared by every state: key, box and counters.
constexpr std::size_t kHeaderBytes = sizeof(VoxelKey) + sizeof(Vec3) + sizeof(double) + sizeof(std::uint64_t);

PlaneEstimate plane_from_basis(const MomentAccumulator& moments, const PlaneBasis& basis) {
  PlaneEstimate plane;
  plane.basis = basis;
  plane.normal = basis.normal();
  plane.center = moments.mean();
  plane.d = -plane.normal.dot(plane.center);
  plane.n_points = moments.count();
  return plane;
}

}  // namespace

std::size_t Voxel::storage_bytes(std::size_t init_points) const {
  switch (kind()) {
    case VoxelState::Buffering: return kHeaderBytes + init_points * sizeof(BufferedPoint);
    case VoxelState::Planar: return kHeaderBytes + sizeof(PlanarState);
    case VoxelState::Subdivided: return kHeaderBytes + sizeof(SubdividedState);
    case VoxelState::MergedRedirect: return kHeaderBytes + sizeof(MergedRedirectState);
    case VoxelState::Degenerate: return kHeaderBytes + sizeof(DegenerateState);
  }
  return kHeaderBytes;
}

std::size_t MemoryReport::total_voxels() const {
  std::size_t total = 0;
  for (std::size_t c : per_state) total += c;
  return total;
}

PlaneEstimate build_plane(const MomentAccumulator& moments, const UncertaintyStats& stats) {
  const PlaneBasis basis = plane_basis(moments);
  PlaneEstimate plane = plane_from_basis(moments, basis);
  plane.covariance = plane_covariance(stats, moments, basis);
  return plane;
}

std::size_t VoxelMap::RootHash::operator()(const std::array<std::int64_t, 3>& k) const noexcept {
  // Teschner et al. spatial hash primes.
  return static_cast<std::size_t>((k[0] * 73856093) ^ (k[1] * 19349669) ^ (k[2] * 83492791));
}

VoxelMap::VoxelMap(MapConfig config) : config_(config) { config_.validate(); }

VoxelId VoxelMap::new_voxel(const VoxelKey& key, const Vec3& origin, double size) {
  const auto id = static_cast<VoxelId>(voxels_.size());
  Voxel v;
  v.key = key;
  v.origin = origin;
  v.size = size;
  v.state = BufferingState{};
  std::get<BufferingState>(v.state).points.reserve(config_.init_points);
  voxels_.push_back(std::move(v));
  updated_flag_.push_back(false);
  return id;
}

int VoxelMap::octant(const Voxel& v, const Vec3& p) {
  const Vec3 center = v.origin + Vec3::Constant(0.5 * v.size);
  return (p.x() >= center.x() ? 1 : 0) | (p.y() >= center.y() ? 2 : 0) | (p.z() >= center.z() ? 4 : 0);
}

VoxelId VoxelMap::descend(VoxelId id, const Vec3& p) const {
  while (const auto* sub = std::get_if<SubdividedState>(&voxels_[id].state)) {
    id = sub->children[octant(voxels_[id], p)];
  }
  return id;
}

VoxelId VoxelMap::locate(const Vec3& p_world) const {
  const VoxelKey key = voxel_key(p_world, config_.root_voxel_size);
  const auto it = roots_.find({key.ix, key.iy, key.iz});
  if (it == roots_.end()) return kNoVoxel;
  return descend(it->second, p_world);
}

VoxelId VoxelMap::resolve(VoxelId id) const {
  for (std::size_t hops = 0; hops <= voxels_.size(); ++hops) {
    const auto* redirect = std::get_if<MergedRedirectState>(&voxels_.at(id).state);
    if (redirect == nullptr) return id;
    id = redirect->reference;
  }
  throw std::logic_error("VoxelMap::resolve: redirect cycle");
}

VoxelId VoxelMap::resolve(VoxelId id) {
  const VoxelId root = static_cast<const VoxelMap&>(*this).resolve(id);
  while (auto* redirect = std::get_if<MergedRedirectState>(&voxels_[id].state)) {
    const VoxelId next = redirect->reference;
    redirect->reference = root;
    id = next;
  }
  return root;
}

PlanarState* VoxelMap::planar(VoxelId id) { return std::get_if<PlanarState>(&voxels_.at(id).state); }

const PlanarState* VoxelMap::planar(VoxelId id) const {
  return std::get_if<PlanarState>(&voxels_.at(id).state);
}

void VoxelMap::mark_updated(VoxelId id) {
  if (!updated_flag_[id]) {
    updated_flag_[id] = true;
    updated_.push_back(id);
  }
}

std::vector<VoxelId> VoxelMap::take_updated_planes() {
  std::vector<VoxelId> out;
  out.swap(updated_);
  for (VoxelId id : out) updated_flag_[id] = false;
  std::erase_if(out, [this](VoxelId id) {
    const PlanarState* ps = planar(id);
    return ps == nullptr || !ps->usable;
  });
  return out;
}

bool VoxelMap::refresh_plane(VoxelId id) {
  PlanarState* ps = planar(id);
  if (ps == nullptr) return false;
  ps->since_refresh = 0;
  PlaneBasis basis;
  try {
    basis = plane_basis(ps->moments);
  } catch (const InsufficientPointsError&) {
    return false;
  }
  PlaneEstimate plane = plane_from_basis(ps->moments, basis);
  if (ps->uncertainty_frozen) {
    plane.covariance = ps->plane.covariance;
  } else {
    try {
      plane.covariance = plane_covariance(ps->stats, ps->moments, basis);
    } catch (const SpectralDegeneracyError&) {
      return false;
    }
  }
  ps->plane = plane;
  ps->usable = plane_usable(plane, ps->stats, config_.eta, config_.consistency_factor);
  mark_updated(id);
  return true;
}

void VoxelMap::redirect(VoxelId from, VoxelId reference) {
  if (from == reference) throw std::logic_error("VoxelMap::redirect: self redirect");
  if (resolve(reference) == from) throw std::logic_error("VoxelMap::redirect: would create a cycle");
  voxels_.at(from).state = MergedRedirectState{reference};
}

bool VoxelMap::finalize_to_planar(VoxelId id, std::vector<BufferedPoint>& points) {
  PlanarState ps;
  for (const BufferedPoint& bp : points) {
    ps.moments.add(bp.p);
    ps.stats.add(bp.p, bp.cov);
  }
  try {
    ps.plane = build_plane(ps.moments, ps.stats);
  } catch (const SpectralDegeneracyError&) {
    voxels_[id].state = DegenerateState{ps.moments};
    return false;
  }
  Voxel& v = voxels_[id];
  ps.uncertainty_frozen = config_.max_updates && v.update_count > *config_.max_updates;
  ps.usable = plane_usable(ps.plane, ps.stats, config_.eta, config_.consistency_factor);
  v.state = std::move(ps);
  mark_updated(id);
  return true;
}

Transition VoxelMap::try_finalize(VoxelId id) {
  auto* buffering = std::get_if<BufferingState>(&voxels_.at(id).state);
  if (buffering == nullptr || buffering->points.size() < config_.init_points) return Transition::None;

  std::vector<BufferedPoint> points = std::move(buffering->points);
  MomentAccumulator moments;
  for (const BufferedPoint& bp : points) moments.add(bp.p);
  const PlaneBasis basis = plane_basis(moments);

  if (is_planar(basis.lambda, config_.eta)) {
    return finalize_to_planar(id, points) ? Transition::Planar : Transition::Degenerate;
  }

  const int layer = voxels_[id].key.layer;
  if (layer >= config_.max_layer) {
    voxels_[id].state = DegenerateState{moments};
    return Transition::Degenerate;
  }

  SubdividedState sub;
  const double child_size = 0.5 * voxels_[id].size;
  for (int o = 0; o < 8; ++o) {
    VoxelKey key = voxels_[id].key;
    key.layer = layer + 1;
    key.path |= static_cast<std::uint32_t>(o) << (3 * layer);
    const Vec3 origin = voxels_[id].origin + child_size * Vec3((o & 1) ? 1 : 0, (o & 2) ? 1 : 0, (o & 4) ? 1 : 0);
    sub.children[o] = new_voxel(key, origin, child_size);  // may reallocate voxels_
  }
  for (const BufferedPoint& bp : points) {
    Voxel& child = voxels_[sub.children[octant(voxels_[id], bp.p)]];
    std::get<BufferingState>(child.state).points.push_back(bp);
    ++child.update_count;
  }
  voxels_[id].state = sub;
  for (VoxelId child : sub.children) try_finalize(child);
  return Transition::Subdivided;
}

void VoxelMap::absorb(VoxelId id, const Vec3& p, const Mat3& cov) {
  Voxel& v = voxels_[id];
  ++v.update_count;
  if (auto* ps = std::get_if<PlanarState>(&v.state)) {
    ps->moments.add(p);
    if (!ps->uncertainty_frozen) ps->stats.add(p, cov);
    if (config_.max_updates && v.update_count > *config_.max_updates) ps->uncertainty_frozen = true;
    if (++ps->since_refresh >= config_.refresh_every) refresh_plane(id);
  } else if (auto* deg = std::get_if<DegenerateState>(&v.state)) {
    deg->moments.add(p);
  } else if (auto* buf = std::get_if<BufferingState>(&v.state)) {
    buf->points.push_back({p, cov});
    if (buf->points.size() >= config_.init_points) try_finalize(id);
  }
}

InsertionReport VoxelMap::insert_point(const Vec3& p_world, const Mat3& cov) {
  if (!all_finite(p_world) || !cov.allFinite()) throw InvalidInputError("insert_point: non-finite input");
  InsertionReport report;
  const VoxelKey key = voxel_key(p_world, config_.root_voxel_size);
  const std::array<std::int64_t, 3> root_key{key.ix, key.iy, key.iz};
  auto it = roots_.find(root_key);
  if (it == roots_.end()) {
    const Vec3 origin = config_.root_voxel_size * Vec3(key.ix, key.iy, key.iz);
    it = roots_.emplace(root_key, new_voxel(key, origin, config_.root_voxel_size)).first;
    report.created = true;
  }
  report.addressed = descend(it->second, p_world);
  report.target = resolve(report.addressed);
  report.state_before = voxels_[report.target].kind();
  absorb(report.target, p_world, cov);
  report.state_after = voxels_[report.target].kind();
  return report;
}

std::optional<PlaneMatch> VoxelMap::query_plane(const Vec3& p_world) const {
  const VoxelId leaf = locate(p_world);
  if (leaf == kNoVoxel) return std::nullopt;
  const VoxelId target = resolve(leaf);
  const auto* ps = std::get_if<PlanarState>(&voxels_[target].state);
  if (ps == nullptr || !ps->usable) return std::nullopt;
  return PlaneMatch{&ps->plane, target};
}

MemoryReport VoxelMap::memory_stats() const {
  MemoryReport report;
  report.root_count = roots_.size();
  for (const Voxel& v : voxels_) {
    ++report.per_state[static_cast<std::size_t>(v.kind())];
    report.estimated_bytes += v.storage_bytes(config_.init_points);
  }
  report.redirect_count = report.count(VoxelState::MergedRedirect);
  return report;
}

}  // namespace voxplane
