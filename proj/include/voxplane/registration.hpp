/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <span>
#include <vector>

#include "voxplane/pose.hpp"
#include "voxplane/voxel_map.hpp"

namespace voxplane {

/// Constant-motion extrapolation of prev2 -> prev one step forward.
/// Throws InvalidInputError if prev2 is newer than prev.
Pose predict(const Pose& prev, const Pose& prev2);
/// Empty history gives identity, a single pose is held.
Pose predict(std::span<const Pose> history);

struct SolverConfig {
  int max_iters = 10;
  double convergence_norm = 1e-6;
  double gate_sigma = 3.0;
  std::size_t min_residuals = 10;
  int max_halvings = 8;
  // Uncertainty of the initial guess, fed into the point covariances of the
  // first iteration. Later iterations use the posterior of the previous one.
  double prior_rotation_sigma = 0.02;    // rad
  double prior_translation_sigma = 0.1;  // m
  // Relative eigenvalue threshold of the information matrix for rank.
  double rank_tolerance = 1e-6;

  void validate() const;
};

/// Point-to-plane residual and its 1x6 Jacobian over [d_rotation, d_translation]
/// for the update R <- R Exp(d_rotation), t <- t + d_translation.
struct Residual {
  double r = 0.0;
  double variance = 0.0;
  Eigen::Matrix<double, 1, 6> jacobian = Eigen::Matrix<double, 1, 6>::Zero();
  std::size_t point_index = 0;
  const PlaneEstimate* plane = nullptr;
};

/// r = n^T (p_w - q); variance = n^T S_w n + J S_nq J^T with J = [(p_w - q)^T, -n^T],
/// where S_w is the world point covariance including pose_cov.
Residual make_residual(const Vec3& p_sensor, const Mat3& cov_sensor, const Pose& pose, const Mat6& pose_cov,
                       const PlaneEstimate& plane, std::size_t index);

struct RegistrationReport {
  int iterations = 0;
  bool converged = false;
  std::size_t residuals = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int step_halvings = 0;
  int rank = 6;
  bool rank_deficient = false;
  Vec6 information_eigenvalues = Vec6::Zero();  // ascending
  std::vector<double> accepted_costs;           // cost before and after each accepted step
};

struct RegistrationResult {
  Pose pose;
  Mat6 information = Mat6::Zero();
  Mat6 covariance = Mat6::Zero();  // posterior including the prior
  RegistrationReport report;
};

/// Uncertainty-weighted point-to-plane Gauss-Newton against the map's planes.
/// Scan points and covariances are in the sensor frame. Throws
/// DegenerateRegistrationError when fewer than cfg.min_residuals survive gating.
RegistrationResult estimate_pose(const VoxelMap& map, std::span<const Vec3> points, std::span<const Mat3> covs,
                                 const Pose& init, const SolverConfig& cfg = {});

Mat6 prior_covariance(const SolverConfig& cfg);

}  // namespace voxplane
