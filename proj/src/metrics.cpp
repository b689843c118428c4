#include "herw/metrics.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace herw {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

CalibError error_from_dq(DualQuaternion q) {
  q = canonicalize(q);
  const double w = std::clamp(q.real.w, -1.0, 1.0);
  // 2*acos(w) evaluated via atan2, which stays well-conditioned near w = 1.
  const double angle = 2.0 * std::atan2(q.real.imag().norm(), w);
  const Quaternion t = (q.dual * q.real.conjugate()).scaled(2.0);
  return {std::sqrt(t.x * t.x + t.y * t.y + t.z * t.z), angle * kRadToDeg};
}

}  // namespace

CalibError calib_error(const Pose& truth, const Pose& est) {
  const DualQuaternion q_err =
      DualQuaternion::from_pose(truth).inverse() * DualQuaternion::from_pose(est);
  return error_from_dq(q_err);
}

CalibError cycle_error(const Pose& A, const Pose& X, const Pose& B, const Pose& Y) {
  return error_from_dq(DualQuaternion::from_pose(A * X * B.inverse() * Y.inverse()));
}

CalibError rms(const std::vector<CalibError>& errors) {
  if (errors.empty()) return {};
  double st = 0.0, sr = 0.0;
  for (const auto& e : errors) {
    st += e.translation_m * e.translation_m;
    sr += e.rotation_deg * e.rotation_deg;
  }
  const double n = static_cast<double>(errors.size());
  return {std::sqrt(st / n), std::sqrt(sr / n)};
}

namespace {

// Axes of the relative rotations between consecutive poses. Axes are
// hemisphere-normalized so that +-a count as the same direction.
std::vector<Vec3> relative_axes(const std::vector<Pose>& poses) {
  std::vector<Vec3> axes;
  for (size_t i = 0; i + 1 < poses.size(); ++i) {
    const Quaternion rel = poses[i].rotation.conjugate() * poses[i + 1].rotation;
    const Quaternion c = canonicalize(rel);
    const double angle = 2.0 * std::acos(std::clamp(c.w, -1.0, 1.0)) * kRadToDeg;
    if (angle < kMinMotionAngleDeg) continue;
    Vec3 axis = c.imag();
    const double n = axis.norm();
    if (n == 0.0) continue;
    axis /= n;
    if (axis.z() < 0.0 || (axis.z() == 0.0 && (axis.y() < 0.0 || (axis.y() == 0.0 && axis.x() < 0.0)))) {
      axis = -axis;
    }
    axes.push_back(axis);
  }
  return axes;
}

struct AxisStats {
  double spread = 0.0;
  double dev_deg = 0.0;
};

AxisStats axis_stats(const std::vector<Vec3>& axes) {
  AxisStats st;
  if (axes.empty()) return st;
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& a : axes) scatter += a * a.transpose();
  scatter /= static_cast<double>(axes.size());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  st.spread = eig.eigenvalues()[1];  // zero iff all axes colinear
  const Vec3 common = eig.eigenvectors().col(2);
  for (const auto& a : axes) {
    const double dev = std::acos(std::clamp(std::abs(a.dot(common)), 0.0, 1.0)) * kRadToDeg;
    st.dev_deg = std::max(st.dev_deg, dev);
  }
  return st;
}

}  // namespace

ObservabilityReport check_observability(const std::vector<PairMotions>& pairs) {
  ObservabilityReport report;
  std::vector<Vec3> pooled_axes;
  std::vector<Vec3> pooled_positions;
  int pooled_measurements = 0;

  for (const auto& pair : pairs) {
    const auto axes = relative_axes(pair.a_poses);
    const auto st = axis_stats(axes);
    report.pairs.push_back({pair.target, pair.sensor, static_cast<int>(axes.size()), st.spread,
                            st.dev_deg});
    pooled_axes.insert(pooled_axes.end(), axes.begin(), axes.end());
    for (const auto& p : pair.a_poses) pooled_positions.push_back(p.translation);
    pooled_measurements += static_cast<int>(pair.a_poses.size());
  }

  const auto pooled = axis_stats(pooled_axes);
  report.collective_effective_motions = static_cast<int>(pooled_axes.size());
  report.collective_axis_spread = pooled.spread;
  report.common_axis_dev_deg = pooled.dev_deg;

  if (pooled_positions.size() >= 3) {
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : pooled_positions) centroid += p;
    centroid /= static_cast<double>(pooled_positions.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : pooled_positions) cov += (p - centroid) * (p - centroid).transpose();
    cov /= static_cast<double>(pooled_positions.size());
    const double min_eig =
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(cov, Eigen::EigenvaluesOnly)
            .eigenvalues()
            .minCoeff();
    report.out_of_plane_rms = std::sqrt(std::max(0.0, min_eig));
  }

  const double spread_min = std::pow(std::sin(kPlanarAxisDevMaxDeg / kRadToDeg), 2);
  const bool axes_common = !pooled_axes.empty() && pooled.dev_deg <= kPlanarAxisDevMaxDeg;
  report.planar = report.out_of_plane_rms < kPlanarRmsMax && axes_common;
  report.observable = pooled_measurements >= 3 && report.collective_effective_motions >= 2 &&
                      pooled.spread > spread_min;
  report.norm_prior_required = !report.observable;
  return report;
}

}  // namespace herw
