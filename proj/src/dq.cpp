#include "herw/dq.hpp"

#include <cmath>

namespace herw {

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle_rad) {
  const double n = axis.norm();
  if (n == 0.0) return Quaternion::identity();
  const double half = 0.5 * angle_rad;
  const double s = std::sin(half) / n;
  return {std::cos(half), s * axis.x(), s * axis.y(), s * axis.z()};
}

double Quaternion::norm() const { return std::sqrt(squared_norm()); }

Quaternion Quaternion::normalized() const {
  const double n = norm();
  if (n == 0.0) throw Error(ErrorCategory::InvalidInput, "cannot normalize zero quaternion");
  return scaled(1.0 / n);
}

Quaternion Quaternion::operator*(const Quaternion& o) const {
  return {
      w * o.w - x * o.x - y * o.y - z * o.z,
      w * o.x + x * o.w + y * o.z - z * o.y,
      w * o.y - x * o.z + y * o.w + z * o.x,
      w * o.z + x * o.y - y * o.x + z * o.w,
  };
}

Vec3 Quaternion::rotate(const Vec3& v) const {
  const Quaternion p{0.0, v.x(), v.y(), v.z()};
  const Quaternion r = (*this) * p * conjugate();
  return {r.x, r.y, r.z};
}

Eigen::Matrix3d Quaternion::rotation_matrix() const {
  Eigen::Matrix3d m;
  const double ww = w * w, xx = x * x, yy = y * y, zz = z * z;
  m << ww + xx - yy - zz, 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), ww - xx + yy - zz, 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), ww - xx - yy + zz;
  return m;
}

Mat4 quat_left(const Quaternion& q) {
  Mat4 m;
  m << q.w, -q.x, -q.y, -q.z,
       q.x,  q.w, -q.z,  q.y,
       q.y,  q.z,  q.w, -q.x,
       q.z, -q.y,  q.x,  q.w;
  return m;
}

Mat4 quat_right(const Quaternion& q) {
  Mat4 m;
  m << q.w, -q.x, -q.y, -q.z,
       q.x,  q.w,  q.z, -q.y,
       q.y, -q.z,  q.w,  q.x,
       q.z,  q.y, -q.x,  q.w;
  return m;
}

Pose Pose::operator*(const Pose& o) const {
  return {rotation * o.rotation, rotation.rotate(o.translation) + translation};
}

Pose Pose::inverse() const {
  const Quaternion rinv = rotation.conjugate();
  return {rinv, -rinv.rotate(translation)};
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation.rotation_matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

DualQuaternion DualQuaternion::from_pose(const Pose& pose) {
  if (std::abs(pose.rotation.squared_norm() - 1.0) > kUnitTol) {
    throw Error(ErrorCategory::InvalidInput, "pose rotation is not a unit quaternion");
  }
  const Quaternion t{0.0, pose.translation.x(), pose.translation.y(), pose.translation.z()};
  return {pose.rotation, (t * pose.rotation).scaled(0.5)};
}

DualQuaternion DualQuaternion::from_vec(const Vec8& v) {
  return {Quaternion::from_vec(v.head<4>()), Quaternion::from_vec(v.tail<4>())};
}

Pose DualQuaternion::to_pose() const {
  if (!is_unit()) {
    throw Error(ErrorCategory::InvalidInput, "dual quaternion is not unit");
  }
  const Quaternion t = (dual * real.conjugate()).scaled(2.0);
  return {canonicalize(real), {t.x, t.y, t.z}};
}

Vec8 DualQuaternion::vec() const {
  Vec8 v;
  v << real.w, real.x, real.y, real.z, dual.w, dual.x, dual.y, dual.z;
  return v;
}

DualQuaternion DualQuaternion::operator*(const DualQuaternion& o) const {
  return {real * o.real, real * o.dual + dual * o.real};
}

DualQuaternion DualQuaternion::inverse() const {
  const double n2 = real.squared_norm();
  if (n2 == 0.0) throw Error(ErrorCategory::InvalidInput, "dual quaternion has zero real part");
  const Quaternion rinv = real.conjugate().scaled(1.0 / n2);
  return {rinv, (rinv * dual * rinv).scaled(-1.0)};
}

double DualQuaternion::unit_violation() const {
  return std::max(std::abs(real.squared_norm() - 1.0), 2.0 * std::abs(real.dot(dual)));
}

Mat8 left_matrix(const DualQuaternion& q) {
  Mat8 m = Mat8::Zero();
  const Mat4 lr = quat_left(q.real);
  m.topLeftCorner<4, 4>() = lr;
  m.bottomRightCorner<4, 4>() = lr;
  m.bottomLeftCorner<4, 4>() = quat_left(q.dual);
  return m;
}

Mat8 right_matrix(const DualQuaternion& q) {
  Mat8 m = Mat8::Zero();
  const Mat4 rr = quat_right(q.real);
  m.topLeftCorner<4, 4>() = rr;
  m.bottomRightCorner<4, 4>() = rr;
  m.bottomLeftCorner<4, 4>() = quat_right(q.dual);
  return m;
}

Quaternion canonicalize(const Quaternion& q) {
  const double c[4] = {q.w, q.x, q.y, q.z};
  for (double v : c) {
    if (v != 0.0) return v > 0.0 ? q : -q;
  }
  throw Error(ErrorCategory::InvalidInput, "cannot canonicalize zero quaternion");
}

DualQuaternion canonicalize(const DualQuaternion& q) {
  const double c[4] = {q.real.w, q.real.x, q.real.y, q.real.z};
  for (double v : c) {
    if (v != 0.0) return v > 0.0 ? q : -q;
  }
  throw Error(ErrorCategory::InvalidInput, "cannot canonicalize: zero real part");
}

}  // namespace herw
