#pragma once

#include <Eigen/Core>

#include "herw/error.hpp"

namespace herw {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat4 = Eigen::Matrix4d;
using Mat8 = Eigen::Matrix<double, 8, 8>;

// Unit-norm checks run at 1e-9, exact algebraic identities at 1e-12.
inline constexpr double kUnitTol = 1e-9;
inline constexpr double kAlgebraTol = 1e-12;

// Hamilton quaternion, stored (w, x, y, z). This component order is a
// repo-wide contract shared with the 8-vector layout of DualQuaternion.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }
  static Quaternion from_axis_angle(const Vec3& axis, double angle_rad);
  static Quaternion from_vec(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

  Vec4 vec() const { return {w, x, y, z}; }
  Vec3 imag() const { return {x, y, z}; }

  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  double squared_norm() const { return w * w + x * x + y * y + z * z; }
  double norm() const;
  double dot(const Quaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
  Quaternion scaled(double s) const { return {s * w, s * x, s * y, s * z}; }
  Quaternion normalized() const;

  Quaternion operator*(const Quaternion& o) const;
  Quaternion operator+(const Quaternion& o) const { return {w + o.w, x + o.x, y + o.y, z + o.z}; }
  Quaternion operator-() const { return {-w, -x, -y, -z}; }

  // Rotate a 3-vector (requires unit norm).
  Vec3 rotate(const Vec3& v) const;
  Eigen::Matrix3d rotation_matrix() const;
};

// 4x4 left/right quaternion multiplication matrices:
// vec(q p) = quat_left(q) vec(p) = quat_right(p) vec(q).
Mat4 quat_left(const Quaternion& q);
Mat4 quat_right(const Quaternion& q);

// Rigid transform as rotation + translation, frame-forward.
struct Pose {
  Quaternion rotation;
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {Quaternion::identity(), Vec3::Zero()}; }

  Pose operator*(const Pose& o) const;  // composition this ∘ o
  Pose inverse() const;
  Vec3 apply(const Vec3& p) const { return rotation.rotate(p) + translation; }
  Eigen::Matrix4d matrix() const;  // homogeneous 4x4
};

// Unit dual quaternion q = real + eps * dual representing a rigid transform.
// vec() order: (r_w, r_x, r_y, r_z, d_w, d_x, d_y, d_z).
struct DualQuaternion {
  Quaternion real;
  Quaternion dual{0.0, 0.0, 0.0, 0.0};

  static DualQuaternion identity() { return {Quaternion::identity(), {0, 0, 0, 0}}; }
  static DualQuaternion from_pose(const Pose& pose);
  static DualQuaternion from_vec(const Vec8& v);

  Pose to_pose() const;
  Vec8 vec() const;

  DualQuaternion operator*(const DualQuaternion& o) const;
  DualQuaternion operator-() const { return {-real, -dual}; }

  // Quaternion-conjugates both parts; equals the inverse for unit DQs.
  DualQuaternion conjugate() const { return {real.conjugate(), dual.conjugate()}; }
  DualQuaternion inverse() const;

  // Residuals of the two unit constraints: |norm(r)^2 - 1| and |2 r.d|.
  double unit_violation() const;
  bool is_unit(double tol = kUnitTol) const { return unit_violation() <= tol; }
};

// 8x8 left/right DQ multiplication matrices:
// vec(a b) = left_matrix(a) vec(b) = right_matrix(b) vec(a).
Mat8 left_matrix(const DualQuaternion& q);
Mat8 right_matrix(const DualQuaternion& q);

// Sign-canonical representative: first nonzero real-part component positive.
// Idempotent; throws InvalidInput on a zero real part.
DualQuaternion canonicalize(const DualQuaternion& q);
Quaternion canonicalize(const Quaternion& q);

}  // namespace herw
