/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "voxplane/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <span>

#include "voxplane/moments.hpp"
#include "voxplane/random.hpp"
#include "voxplane/uncertainty.hpp"

namespace voxplane {

PlaneSample random_plane_sample(std::size_t n, std::uint64_t seed, std::uint64_t stream) {
  Philox4x32 rng(seed, stream);
  Vec3 normal(rng.normal(), rng.normal(), rng.normal());
  normal.normalize();
  const Vec3 a1 = normal.unitOrthogonal();
  const Vec3 a2 = normal.cross(a1);
  const Vec3 origin(rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0));
  const double s1 = rng.uniform(0.5, 1.5);
  const double s2 = rng.uniform(0.5, 1.5);
  const double sigma = rng.uniform(0.01, 0.05);

  PlaneSample out;
  out.points.reserve(n);
  out.covs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.points.push_back(origin + rng.uniform(-s1, s1) * a1 + rng.uniform(-s2, s2) * a2 + sigma * rng.normal() * normal);
    Mat3 L;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) L(r, c) = rng.normal();
    }
    const double scale = rng.uniform(1e-4, 2.5e-3);
    out.covs.push_back(scale * (L * L.transpose() / 3.0 + 0.05 * Mat3::Identity()));
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

struct CumulativeState {
  MomentAccumulator moments;
  UncertaintyStats stats;
  PlaneCovariance cov;

  void update(const Vec3& p, const Mat3& c) {
    moments.add(p);
    stats.add(p, c);
    cov = plane_covariance(stats, moments, plane_basis(moments));
  }
};

double relative_frobenius(const Mat6& a, const Mat6& b) { return (a - b).norm() / b.norm(); }

}  // namespace

BenchResult bench_update(const BenchConfig& cfg) {
  BenchResult result;
  const std::size_t max_n = std::max(*std::max_element(cfg.cumulative_counts.begin(), cfg.cumulative_counts.end()),
                                     *std::max_element(cfg.oracle_counts.begin(), cfg.oracle_counts.end()));
  const std::size_t extra = std::max(cfg.batch, cfg.oracle_batch);
  const PlaneSample sample = random_plane_sample(std::max(max_n + extra, cfg.equivalence_count), cfg.seed, 0);
  volatile double sink = 0.0;

  std::vector<std::size_t> counts = cfg.cumulative_counts;
  counts.insert(counts.end(), cfg.oracle_counts.begin(), cfg.oracle_counts.end());
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());

  CumulativeState state;
  std::size_t filled = 0;
  for (std::size_t n : counts) {
    for (; filled < n; ++filled) {
      state.moments.add(sample.points[filled]);
      state.stats.add(sample.points[filled], sample.covs[filled]);
    }
    BenchRow row;
    row.n = n;

    if (std::find(cfg.cumulative_counts.begin(), cfg.cumulative_counts.end(), n) != cfg.cumulative_counts.end()) {
      std::vector<double> per_point;
      for (int rep = 0; rep < cfg.repetitions; ++rep) {
        CumulativeState s = state;
        const auto t0 = Clock::now();
        for (std::size_t i = 0; i < cfg.batch; ++i) s.update(sample.points[n + i], sample.covs[n + i]);
        const double ns = std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
        sink = sink + s.cov.sigma(0, 0);
        per_point.push_back(ns / static_cast<double>(cfg.batch));
      }
      row.cumulative_ns = median(per_point);
    }

    if (std::find(cfg.oracle_counts.begin(), cfg.oracle_counts.end(), n) != cfg.oracle_counts.end()) {
      std::vector<double> per_point;
      for (int rep = 0; rep < cfg.repetitions; ++rep) {
        std::vector<Vec3> pts(sample.points.begin(), sample.points.begin() + static_cast<std::ptrdiff_t>(n));
        std::vector<Mat3> covs(sample.covs.begin(), sample.covs.begin() + static_cast<std::ptrdiff_t>(n));
        pts.reserve(n + cfg.oracle_batch);
        covs.reserve(n + cfg.oracle_batch);
        const auto t0 = Clock::now();
        for (std::size_t i = 0; i < cfg.oracle_batch; ++i) {
          pts.push_back(sample.points[n + i]);
          covs.push_back(sample.covs[n + i]);
          sink = sink + plane_covariance_direct(pts, covs).sigma(0, 0);
        }
        const double ns = std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
        per_point.push_back(ns / static_cast<double>(cfg.oracle_batch));
      }
      row.oracle_ns = median(per_point);
    }
    result.rows.push_back(row);
  }

  const auto& front = *std::find_if(result.rows.begin(), result.rows.end(), [](const BenchRow& r) { return r.cumulative_ns > 0; });
  const auto& back = *std::find_if(result.rows.rbegin(), result.rows.rend(), [](const BenchRow& r) { return r.cumulative_ns > 0; });
  result.cumulative_ratio = back.cumulative_ns / front.cumulative_ns;

  double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
  for (const BenchRow& r : result.rows) {
    if (r.oracle_ns <= 0.0) continue;
    const double x = std::log(static_cast<double>(r.n)), y = std::log(r.oracle_ns);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    m += 1;
  }
  result.oracle_slope = m >= 2 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : 0.0;

  const std::span<const Vec3> pts(sample.points.data(), cfg.equivalence_count);
  const std::span<const Mat3> covs(sample.covs.data(), cfg.equivalence_count);
  MomentAccumulator moments;
  UncertaintyStats stats;
  for (std::size_t i = 0; i < cfg.equivalence_count; ++i) {
    moments.add(pts[i]);
    stats.add(pts[i], covs[i]);
  }
  const Mat6 cumulative = plane_covariance(stats, moments, plane_basis(moments)).sigma;
  result.equivalence_error = relative_frobenius(cumulative, plane_covariance_direct(pts, covs).sigma);
  return result;
}

void print_bench(std::ostream& out, const BenchResult& r) {
  out << std::left << std::setw(10) << "N" << std::setw(18) << "cumulative_ns" << "oracle_ns\n";
  for (const BenchRow& row : r.rows) {
    out << std::setw(10) << row.n << std::setw(18) << std::fixed << std::setprecision(1) << row.cumulative_ns;
    if (row.oracle_ns > 0) out << row.oracle_ns;
    else out << "-";
    out << '\n';
  }
  out << std::defaultfloat << std::setprecision(4) << "cumulative latency ratio (largest/smallest N): "
      << r.cumulative_ratio << "\noracle log-log slope: " << r.oracle_slope
      << "\nrelative covariance difference: " << std::scientific << r.equivalence_error << std::defaultfloat << '\n';
}

OracleCheckResult oracle_check(std::size_t instances, std::uint64_t seed, double tolerance) {
  const auto t0 = Clock::now();
  OracleCheckResult res;
  Philox4x32 sizes(seed, 0xffffffffull);
  for (std::size_t k = 0; k < instances; ++k) {
    const auto n = 3 + static_cast<std::size_t>(sizes.uniform() * 498.0);
    const PlaneSample s = random_plane_sample(std::min<std::size_t>(n, 500), seed, k + 1);
    MomentAccumulator moments;
    UncertaintyStats stats;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      moments.add(s.points[i]);
      stats.add(s.points[i], s.covs[i]);
    }
    const Mat6 cumulative = plane_covariance(stats, moments, plane_basis(moments)).sigma;
    const Mat6 direct = plane_covariance_direct(s.points, s.covs).sigma;
    const double err = relative_frobenius(cumulative, direct);
    res.max_error = std::max(res.max_error, err);
    if (!(err <= tolerance)) ++res.failures;
    ++res.instances;
  }
  res.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

}  // namespace voxplane
