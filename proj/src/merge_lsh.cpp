/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "voxplane/merge_lsh.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

namespace voxplane {

std::size_t LshKeyHash::operator()(const LshKey& key) const noexcept {
  std::size_t h = 0xcbf29ce484222325ull;
  for (std::int64_t c : key.k) {
    h ^= static_cast<std::size_t>(c) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

void MergeConfig::validate() const {
  if (trigger_count < 2) throw ConfigError("merge.trigger_count must be at least 2");
  if (!(eta > 0.0)) throw ConfigError("merge eta must be positive");
  if (!(delta_theta > 0.0) || !(delta_phi > 0.0) || !(delta_d > 0.0) || !(delta_u > 0.0) || !(delta_v > 0.0)) {
    throw ConfigError("merge bucket widths must be positive");
  }
}

MergeConfig MergeConfig::for_root_size(double root_voxel_size) {
  MergeConfig cfg;
  cfg.delta_u = 2.0 * root_voxel_size;
  cfg.delta_v = 2.0 * root_voxel_size;
  return cfg;
}

MergeReport& MergeReport::operator+=(const MergeReport& o) {
  buckets_triggered += o.buckets_triggered;
  candidates_tested += o.candidates_tested;
  commits += o.commits;
  rejects += o.rejects;
  aborted += o.aborted;
  return *this;
}

PlaneCoordinates plane_coordinates(const Vec3& normal, const Vec3& center, double polar_cap) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const double norm = normal.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidInputError("plane_lsh_key: zero normal");
  const Vec3 n = normal / norm;

  PlaneCoordinates c;
  c.phi = std::acos(std::clamp(n.z(), -1.0, 1.0));
  c.theta = std::atan2(n.y(), n.x());
  if (c.theta < 0.0) c.theta += kTwoPi;
  if (c.theta >= kTwoPi) c.theta -= kTwoPi;
  if (c.phi < polar_cap || c.phi > std::numbers::pi - polar_cap) c.theta = 0.0;
  c.d = -n.dot(center);

  // Plane frame -> global is Rz(theta) Ry(phi - pi/2), which sends e1 to n.
  const double ct = std::cos(c.theta), st = std::sin(c.theta);
  const double a = c.phi - 0.5 * std::numbers::pi;
  const double ca = std::cos(a), sa = std::sin(a);
  Mat3 Rz, Ry;
  Rz << ct, -st, 0.0, st, ct, 0.0, 0.0, 0.0, 1.0;
  Ry << ca, 0.0, sa, 0.0, 1.0, 0.0, -sa, 0.0, ca;
  c.R = (Rz * Ry).transpose();
  const Vec3 local = c.R * center;
  c.u = local.y();
  c.v = local.z();
  return c;
}

LshKey plane_lsh_key(const Vec3& normal, const Vec3& center, const MergeConfig& cfg) {
  const Vec3 n = canonical_normal(normal, center);
  const PlaneCoordinates c = plane_coordinates(n, center, cfg.delta_phi);
  LshKey key;
  key.k = {static_cast<std::int64_t>(std::floor(c.theta / cfg.delta_theta)),
           static_cast<std::int64_t>(std::floor(c.phi / cfg.delta_phi)),
           static_cast<std::int64_t>(std::floor(c.d / cfg.delta_d)),
           static_cast<std::int64_t>(std::floor(c.u / cfg.delta_u)),
           static_cast<std::int64_t>(std::floor(c.v / cfg.delta_v))};
  return key;
}

LshKey plane_lsh_key(const PlaneEstimate& plane, const MergeConfig& cfg) {
  return plane_lsh_key(plane.normal, plane.center, cfg);
}

const LshBuckets::Bucket* LshBuckets::bucket(const LshKey& key) const {
  const auto it = buckets_.find(key);
  return it == buckets_.end() ? nullptr : &it->second;
}

LshBuckets::Bucket* LshBuckets::bucket(const LshKey& key) {
  const auto it = buckets_.find(key);
  return it == buckets_.end() ? nullptr : &it->second;
}

std::optional<LshKey> LshBuckets::key_of(VoxelId voxel) const {
  const auto it = current_.find(voxel);
  if (it == current_.end()) return std::nullopt;
  return it->second;
}

std::vector<VoxelId> LshBuckets::live_members(const LshKey& key) const {
  std::vector<VoxelId> out;
  if (const Bucket* b = bucket(key)) {
    for (const Entry& e : b->entries) {
      if (e.live) out.push_back(e.voxel);
    }
  }
  return out;
}

void LshBuckets::compact(Bucket& b) {
  if (b.entries.size() > 2 * b.live_count + 8) {
    std::erase_if(b.entries, [](const Entry& e) { return !e.live; });
  }
}

void LshBuckets::unregister(VoxelId voxel) {
  const auto it = current_.find(voxel);
  if (it == current_.end()) return;
  Bucket& b = buckets_.at(it->second);
  for (Entry& e : b.entries) {
    if (e.live && e.voxel == voxel) {
      e.live = false;
      --b.live_count;
    }
  }
  compact(b);
  current_.erase(it);
}

std::optional<LshKey> LshBuckets::register_plane(VoxelId voxel, const PlaneEstimate& plane,
                                                 const MergeConfig& cfg) {
  ++registrations_;
  const LshKey key = plane_lsh_key(plane, cfg);
  const auto it = current_.find(voxel);
  if (it != current_.end() && it->second == key) {
    for (Entry& e : buckets_.at(key).entries) {
      if (e.live && e.voxel == voxel) {
        e.normal = plane.normal;
        e.d = plane.d;
        e.n_points = plane.n_points;
      }
    }
    return std::nullopt;
  }
  if (it != current_.end()) unregister(voxel);

  Bucket& b = buckets_[key];
  b.entries.push_back(Entry{voxel, plane.normal, plane.d, plane.n_points, true});
  ++b.live_count;
  ++b.joined_since_attempt;
  current_[voxel] = key;
  if (b.live_count >= cfg.trigger_count && b.joined_since_attempt > 0) return key;
  return std::nullopt;
}

MergeReport try_merge_bucket(LshBuckets& buckets, VoxelMap& map, const LshKey& key, const MergeConfig& cfg,
                             std::optional<LshKey>* follow_up) {
  MergeReport report;
  if (follow_up != nullptr) follow_up->reset();
  LshBuckets::Bucket* b = buckets.bucket(key);
  if (b == nullptr) return report;
  report.buckets_triggered = 1;
  b->joined_since_attempt = 0;

  std::vector<VoxelId> members;
  for (const LshBuckets::Entry& e : b->entries) {
    if (e.live && map.planar(e.voxel) != nullptr && map.resolve(e.voxel) == e.voxel) members.push_back(e.voxel);
  }
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  if (members.size() < 2) return report;

  std::stable_sort(members.begin(), members.end(), [&map](VoxelId a, VoxelId c) {
    return map.planar(a)->moments.count() > map.planar(c)->moments.count();
  });
  const VoxelId reference = members.front();

  MomentAccumulator pooled = map.planar(reference)->moments;
  UncertaintyStats pooled_stats = map.planar(reference)->stats;
  bool frozen = map.planar(reference)->uncertainty_frozen;
  std::vector<VoxelId> committed;
  for (std::size_t i = 1; i < members.size(); ++i) {
    const PlanarState* cand = map.planar(members[i]);
    ++report.candidates_tested;
    const MomentAccumulator trial = merge_moments(pooled, cand->moments);
    if (is_planar(plane_basis(trial).lambda, cfg.eta)) {
      pooled = trial;
      pooled_stats += cand->stats;
      frozen = frozen || cand->uncertainty_frozen;
      committed.push_back(members[i]);
    } else {
      ++report.rejects;
    }
  }
  if (committed.empty()) return report;

  PlaneEstimate merged;
  try {
    merged = build_plane(pooled, pooled_stats);
  } catch (const SpectralDegeneracyError&) {
    ++report.aborted;
    report.rejects += committed.size();
    return report;
  }

  PlanarState& ref = *map.planar(reference);
  ref.moments = pooled;
  ref.stats = pooled_stats;
  ref.plane = merged;
  ref.since_refresh = 0;
  ref.uncertainty_frozen = frozen;
  for (VoxelId c : committed) {
    map.voxel(reference).update_count += map.voxel(c).update_count;
    buckets.unregister(c);
    map.redirect(c, reference);
  }
  report.commits = committed.size();

  const std::optional<LshKey> next = buckets.register_plane(reference, merged, cfg);
  if (LshBuckets::Bucket* same = buckets.bucket(key)) same->joined_since_attempt = 0;
  if (follow_up != nullptr && next && !(*next == key)) *follow_up = next;
  return report;
}

MergeReport register_and_merge(LshBuckets& buckets, VoxelMap& map, const MergeConfig& cfg) {
  MergeReport report;
  std::deque<LshKey> pending;
  for (VoxelId id : map.take_updated_planes()) {
    if (const PlanarState* ps = map.planar(id)) {
      if (auto trigger = buckets.register_plane(id, ps->plane, cfg)) pending.push_back(*trigger);
    }
  }
  while (!pending.empty()) {
    const LshKey key = pending.front();
    pending.pop_front();
    std::optional<LshKey> follow;
    report += try_merge_bucket(buckets, map, key, cfg, &follow);
    if (follow) pending.push_back(*follow);
  }
  return report;
}

}  // namespace voxplane
