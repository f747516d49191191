/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "voxplane/registration.hpp"

#include <Eigen/Eigenvalues>

namespace voxplane {

Pose predict(const Pose& prev, const Pose& prev2) {
  if (prev2.timestamp > prev.timestamp) throw InvalidInputError("predict: timestamps out of order");
  const Pose delta = prev2.inverse().compose(prev);
  Pose out = prev.compose(delta);
  out.rotation = orthonormalize(out.rotation);
  out.timestamp = prev.timestamp + (prev.timestamp - prev2.timestamp);
  return out;
}

Pose predict(std::span<const Pose> history) {
  if (history.empty()) return Pose::identity();
  if (history.size() == 1) return history.back();
  return predict(history[history.size() - 1], history[history.size() - 2]);
}

void SolverConfig::validate() const {
  if (max_iters < 1) throw ConfigError("solver.max_iters must be at least 1");
  if (!(gate_sigma > 0.0)) throw ConfigError("solver.gate_sigma must be positive");
  if (!(prior_rotation_sigma > 0.0) || !(prior_translation_sigma > 0.0)) {
    throw ConfigError("solver prior sigmas must be positive");
  }
}

Mat6 prior_covariance(const SolverConfig& cfg) {
  Vec6 diag;
  diag.head<3>().setConstant(cfg.prior_rotation_sigma * cfg.prior_rotation_sigma);
  diag.tail<3>().setConstant(cfg.prior_translation_sigma * cfg.prior_translation_sigma);
  return diag.asDiagonal();
}

Residual make_residual(const Vec3& p_sensor, const Mat3& cov_sensor, const Pose& pose, const Mat6& pose_cov,
                       const PlaneEstimate& plane, std::size_t index) {
  const Vec3 p_world = pose.apply(p_sensor);
  const Vec3& n = plane.normal;

  Eigen::Matrix<double, 3, 6> J_pose;
  J_pose.leftCols<3>() = -pose.rotation * skew(p_sensor);
  J_pose.rightCols<3>() = Mat3::Identity();
  const Mat3 cov_world = pose.rotation * cov_sensor * pose.rotation.transpose() + J_pose * pose_cov * J_pose.transpose();

  Eigen::Matrix<double, 1, 6> J_plane;
  J_plane.leftCols<3>() = (p_world - plane.center).transpose();
  J_plane.rightCols<3>() = -n.transpose();

  Residual res;
  res.r = n.dot(p_world - plane.center);
  res.variance = n.dot(cov_world * n) + (J_plane * plane.covariance.sigma * J_plane.transpose())(0, 0);
  res.jacobian = n.transpose() * J_pose;
  res.point_index = index;
  res.plane = &plane;
  return res;
}

namespace {

Pose retract(const Pose& pose, const Vec6& delta) {
  Pose out = pose;
  out.rotation = orthonormalize(pose.rotation * so3_exp(delta.head<3>()));
  out.translation = pose.translation + delta.tail<3>();
  return out;
}

double weighted_cost(std::span<const Residual> residuals, std::span<const Vec3> points, const Pose& pose) {
  double cost = 0.0;
  for (const Residual& res : residuals) {
    const PlaneEstimate& plane = *res.plane;
    const double r = plane.normal.dot(pose.apply(points[res.point_index]) - plane.center);
    cost += r * r / res.variance;
  }
  return cost;
}

std::vector<Residual> build_residuals(const VoxelMap& map, std::span<const Vec3> points, std::span<const Mat3> covs,
                                      const Pose& pose, const Mat6& pose_cov, double gate_sigma) {
  std::vector<Residual> out;
  out.reserve(points.size());
  const double gate2 = gate_sigma * gate_sigma;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto match = map.query_plane(pose.apply(points[i]));
    if (!match) continue;
    Residual res = make_residual(points[i], covs[i], pose, pose_cov, *match->plane, i);
    if (!(res.variance > 0.0) || res.r * res.r > gate2 * res.variance) continue;
    out.push_back(res);
  }
  return out;
}

}  // namespace

RegistrationResult estimate_pose(const VoxelMap& map, std::span<const Vec3> points, std::span<const Mat3> covs,
                                 const Pose& init, const SolverConfig& cfg) {
  if (points.size() != covs.size()) throw InvalidInputError("estimate_pose: points and covariances differ in length");
  const Mat6 prior = prior_covariance(cfg);
  const Mat6 prior_info = prior.inverse();

  RegistrationResult result;
  result.pose = init;
  Mat6 pose_cov = prior;
  RegistrationReport& report = result.report;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const std::vector<Residual> residuals = build_residuals(map, points, covs, result.pose, pose_cov, cfg.gate_sigma);
    if (residuals.size() < cfg.min_residuals) {
      throw DegenerateRegistrationError("estimate_pose: only " + std::to_string(residuals.size()) +
                                        " valid residuals");
    }
    report.iterations = iter + 1;
    report.residuals = residuals.size();

    Mat6 H = Mat6::Zero();
    Vec6 g = Vec6::Zero();
    double cost0 = 0.0;
    for (const Residual& res : residuals) {
      const double w = 1.0 / res.variance;
      H.noalias() += w * res.jacobian.transpose() * res.jacobian;
      g.noalias() += w * res.r * res.jacobian.transpose();
      cost0 += w * res.r * res.r;
    }
    if (iter == 0) report.initial_cost = cost0;

    Eigen::SelfAdjointEigenSolver<Mat6> eig(H);
    const Vec6 ev = eig.eigenvalues();
    const double cutoff = cfg.rank_tolerance * std::max(ev[5], 1e-300);
    Vec6 inv_ev = Vec6::Zero();
    int rank = 0;
    for (int k = 0; k < 6; ++k) {
      if (ev[k] > cutoff) {
        inv_ev[k] = 1.0 / ev[k];
        ++rank;
      }
    }
    report.rank = rank;
    report.rank_deficient = rank < 6;
    report.information_eigenvalues = ev;
    result.information = H;

    const Vec6 delta = -(eig.eigenvectors() * inv_ev.asDiagonal() * eig.eigenvectors().transpose() * g);

    double step = 1.0;
    bool accepted = false;
    Pose candidate;
    double cost1 = cost0;
    for (int h = 0; h <= cfg.max_halvings; ++h) {
      candidate = retract(result.pose, step * delta);
      cost1 = weighted_cost(residuals, points, candidate);
      if (cost1 <= cost0) {
        accepted = true;
        break;
      }
      step *= 0.5;
      ++report.step_halvings;
    }
    report.final_cost = accepted ? cost1 : cost0;
    pose_cov = (H + prior_info).inverse();
    result.covariance = pose_cov;
    if (!accepted) {
      report.converged = true;
      break;
    }
    report.accepted_costs.push_back(cost0);
    report.accepted_costs.push_back(cost1);
    result.pose = candidate;
    if ((step * delta).norm() < cfg.convergence_norm) {
      report.converged = true;
      break;
    }
  }
  result.pose.timestamp = init.timestamp;
  return result;
}

}  // namespace voxplane
