/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "voxplane/common.hpp"

namespace voxplane {

/// Points near a random plane with random PSD covariances.
struct PlaneSample {
  std::vector<Vec3> points;
  std::vector<Mat3> covs;
};

/// `n` points on a randomly oriented plane patch (spread 0.5..1.5 m, offset
/// up to 10 m), with isotropic out-of-plane noise and random PSD covariances.
PlaneSample random_plane_sample(std::size_t n, std::uint64_t seed, std::uint64_t stream);

struct BenchConfig {
  std::vector<std::size_t> cumulative_counts{100, 1000, 10000, 100000};
  std::vector<std::size_t> oracle_counts{100, 1000, 10000};
  std::size_t batch = 200;        // timed insertions per repetition, cumulative path
  std::size_t oracle_batch = 10;  // timed insertions per repetition, oracle path
  int repetitions = 7;
  std::size_t equivalence_count = 1000;
  std::uint64_t seed = 1;
};

struct BenchRow {
  std::size_t n = 0;
  double cumulative_ns = 0.0;  // median per-point latency
  double oracle_ns = -1.0;     // negative when not measured
};

struct BenchResult {
  std::vector<BenchRow> rows;
  double cumulative_ratio = 0.0;  // latency at the largest count over the smallest
  double oracle_slope = 0.0;      // least-squares log-log slope
  double equivalence_error = 0.0; // relative Frobenius difference of the two covariances
};

/// Per-point update latency of a single Planar voxel at increasing accumulated
/// counts: cumulative statistics versus recomputation from retained points.
/// Each update re-fits the plane and its covariance.
BenchResult bench_update(const BenchConfig& cfg = {});
void print_bench(std::ostream& out, const BenchResult& r);

struct OracleCheckResult {
  std::size_t instances = 0;
  std::size_t failures = 0;
  double max_error = 0.0;  // relative Frobenius
  double seconds = 0.0;
};

/// Compares the cumulative covariance with the direct computation on random
/// instances of 3..500 points.
OracleCheckResult oracle_check(std::size_t instances, std::uint64_t seed, double tolerance = 1e-8);

}  // namespace voxplane
