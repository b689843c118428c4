#include "herw/planar.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

namespace herw {

PlaneFit fit_plane_up(const std::vector<Vec3>& positions) {
  if (positions.size() < 3) {
    throw Error(ErrorCategory::DegenerateMotion, "plane fit needs at least three positions");
  }
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : positions) centroid += p;
  centroid /= static_cast<double>(positions.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : positions) cov += (p - centroid) * (p - centroid).transpose();
  cov /= static_cast<double>(positions.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Eigen::Vector3d evals = eig.eigenvalues();  // ascending
  if (evals[1] <= 1e-12 * std::max(1.0, evals[2])) {
    throw Error(ErrorCategory::DegenerateMotion, "positions are colinear or coincident");
  }
  PlaneFit fit;
  fit.up = eig.eigenvectors().col(0);
  fit.centroid = centroid;
  fit.out_of_plane_rms = std::sqrt(std::max(0.0, evals[0]));
  return fit;
}

double height_offset(const Pose& X_est, const Vec3& u_v) { return u_v.dot(X_est.translation); }

namespace {

Pose translated(const Vec3& shift, const Pose& pose) {
  return Pose{Quaternion::identity(), shift} * pose;
}

}  // namespace

CorrectedSolution correct_solution(const Pose& X, const std::vector<Pose>& Ys, const Vec3& u_v,
                                   const Vec3& u_w, double gamma) {
  CorrectedSolution out{X, Ys, {}};
  out.record.gamma = gamma;
  if (gamma >= 0.0) return out;

  out.record.applied = true;
  out.record.shift_x = -2.0 * gamma * u_v;
  out.record.shift_y = -2.0 * gamma * u_w;
  out.X = translated(out.record.shift_x, X);
  for (auto& y : out.Y) y = translated(out.record.shift_y, y);
  return out;
}

CalibrationResult calibrate_infrastructure(const HERWProblem& problem,
                                           const std::vector<double>& target_norms,
                                           const InfrastructureOptions& options) {
  if (static_cast<int>(target_norms.size()) != problem.num_targets) {
    throw Error(ErrorCategory::DegenerateMotion,
                "translation-norm prior required for every target");
  }
  for (double a : target_norms) {
    if (!(a > 0.0)) {
      throw Error(ErrorCategory::DegenerateMotion, "translation-norm prior must be positive");
    }
  }
  if (!options.target_above_origin.empty() &&
      static_cast<int>(options.target_above_origin.size()) != problem.num_targets) {
    throw Error(ErrorCategory::InvalidInput, "target_above_origin size mismatch");
  }

  HERWProblem with_priors = problem;
  with_priors.norm_priors.clear();
  for (const auto& np : problem.norm_priors) {
    if (np.index >= problem.num_targets) with_priors.norm_priors.push_back(np);
  }
  for (int t = 0; t < problem.num_targets; ++t) {
    with_priors.norm_priors.push_back({t, target_norms[t]});
  }

  CalibrationResult result = calibrate(with_priors, options.calibrate);

  // Per-target up vectors from the carrier poses; gather unique steps so that
  // shared detections do not double-weight the fit.
  std::vector<std::vector<Pose>> a_by_target(problem.num_targets);
  for (int t = 0; t < problem.num_targets; ++t) {
    std::set<int> steps;
    for (const auto& d : problem.detections) {
      if (d.target == t && steps.insert(d.step).second) a_by_target[t].push_back(d.A);
    }
  }

  std::vector<bool> updated(problem.num_targets, false);
  std::vector<Vec3> u_w_by_target(problem.num_targets, Vec3::UnitZ());
  std::vector<double> gamma_by_target(problem.num_targets, 0.0);

  for (int t = 0; t < problem.num_targets; ++t) {
    const auto& a_poses = a_by_target[t];
    std::vector<Vec3> world_positions, vehicle_positions;
    for (const auto& a : a_poses) {
      world_positions.push_back(a.translation);
      vehicle_positions.push_back(a.inverse().translation);
    }
    Vec3 u_w = fit_plane_up(world_positions).up;
    if (u_w.z() < 0.0 || (u_w.z() == 0.0 && (u_w.y() < 0.0 || (u_w.y() == 0.0 && u_w.x() < 0.0)))) {
      u_w = -u_w;
    }
    Vec3 u_v = fit_plane_up(vehicle_positions).up;
    Vec3 mean_mapped = Vec3::Zero();
    for (const auto& a : a_poses) mean_mapped += a.rotation.rotate(u_v);
    if (mean_mapped.dot(u_w) < 0.0) u_v = -u_v;

    double gamma = height_offset(result.X[t], u_v);
    const bool above = options.target_above_origin.empty() || options.target_above_origin[t];
    // A below-origin mount flips the desired half-space.
    if (!above) gamma = -gamma;
    Vec3 u_v_signed = above ? u_v : -u_v;
    Vec3 u_w_signed = above ? u_w : -u_w;

    auto corrected = correct_solution(result.X[t], {}, u_v_signed, u_w_signed, gamma);
    corrected.record.target = t;
    result.X[t] = corrected.X;
    result.corrections.push_back(corrected.record);
    updated[t] = corrected.record.applied;
    u_w_by_target[t] = u_w_signed;
    gamma_by_target[t] = gamma;
  }

  for (int s = 0; s < problem.num_sensors; ++s) {
    std::set<int> targets_seen;
    for (const auto& d : problem.detections) {
      if (d.sensor == s) targets_seen.insert(d.target);
    }
    if (targets_seen.empty()) continue;
    bool all_updated = true;
    for (int t : targets_seen) all_updated = all_updated && updated[t];
    if (!all_updated) continue;

    Vec3 shift = Vec3::Zero();
    for (int t : targets_seen) shift += -2.0 * gamma_by_target[t] * u_w_by_target[t];
    shift /= static_cast<double>(targets_seen.size());
    result.Y[s] = translated(shift, result.Y[s]);
  }

  result.planar_corrected = std::any_of(updated.begin(), updated.end(), [](bool u) { return u; });
  return result;
}

}  // namespace herw
