#pragma once

#include <Eigen/Geometry>
#include <random>

#include "herw/dq.hpp"

namespace herwtest {

inline herw::Quaternion random_quat(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u1 = uni(rng), u2 = uni(rng), u3 = uni(rng);
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double t2 = 2.0 * M_PI * u2, t3 = 2.0 * M_PI * u3;
  return {a * std::cos(t2), a * std::sin(t2), b * std::cos(t3), b * std::sin(t3)};
}

inline herw::Pose random_pose(std::mt19937_64& rng, double span = 1.0) {
  std::uniform_real_distribution<double> uni(-span, span);
  return {random_quat(rng), herw::Vec3(uni(rng), uni(rng), uni(rng))};
}

inline herw::DualQuaternion random_unit_dq(std::mt19937_64& rng, double span = 1.0) {
  return herw::DualQuaternion::from_pose(random_pose(rng, span));
}

// Independent homogeneous-transform oracle built on Eigen's own quaternion.
inline Eigen::Isometry3d iso(const herw::Pose& p) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() =
      Eigen::Quaterniond(p.rotation.w, p.rotation.x, p.rotation.y, p.rotation.z).toRotationMatrix();
  t.translation() = p.translation;
  return t;
}

inline double pose_vs_iso(const herw::Pose& p, const Eigen::Isometry3d& ref) {
  const Eigen::Isometry3d got = iso(p);
  return (got.matrix() - ref.matrix()).cwiseAbs().maxCoeff();
}

}  // namespace herwtest
