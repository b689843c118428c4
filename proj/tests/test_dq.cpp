#include <doctest.h>

#include "helpers.hpp"
#include "herw/dq.hpp"

using namespace herw;
using herwtest::iso;
using herwtest::pose_vs_iso;
using herwtest::random_pose;
using herwtest::random_quat;
using herwtest::random_unit_dq;

TEST_CASE("dq_from_pose identity and pure translation") {
  const DualQuaternion id = DualQuaternion::from_pose(Pose::identity());
  CHECK(id.real.w == 1.0);
  CHECK(id.dual.squared_norm() == 0.0);

  const DualQuaternion tr = DualQuaternion::from_pose({Quaternion::identity(), {2, 0, 0}});
  CHECK(tr.real.w == doctest::Approx(1.0));
  CHECK(tr.dual.w == doctest::Approx(0.0));
  CHECK(tr.dual.x == doctest::Approx(1.0));
  CHECK(tr.dual.y == doctest::Approx(0.0));
  CHECK(tr.dual.z == doctest::Approx(0.0));
  CHECK(tr.is_unit());
}

TEST_CASE("dq_from_pose rejects non-unit rotation") {
  Pose p;
  p.rotation = {1.1, 0, 0, 0};
  CHECK_THROWS_AS(DualQuaternion::from_pose(p), Error);
}

TEST_CASE("dq_to_pose inverts dq_from_pose") {
  DualQuaternion tr;
  tr.dual = {0, 1, 0, 0};
  const Pose p = tr.to_pose();
  CHECK(p.translation.isApprox(Vec3(2, 0, 0), 1e-15));

  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Pose pose = random_pose(rng);
    const Pose back = DualQuaternion::from_pose(pose).to_pose();
    CHECK(pose_vs_iso(back, iso(pose)) < 1e-12);
  }
}

TEST_CASE("dq_to_pose rejects non-unit input") {
  DualQuaternion q;
  q.real = {1, 0, 0, 0};
  q.dual = {0.5, 0, 0, 0};  // r . d != 0
  CHECK_THROWS_AS(q.to_pose(), Error);
}

TEST_CASE("dq_mul matches the homogeneous-matrix oracle") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Pose pa = random_pose(rng), pb = random_pose(rng);
    const DualQuaternion ab = DualQuaternion::from_pose(pa) * DualQuaternion::from_pose(pb);
    CHECK(pose_vs_iso(ab.to_pose(), iso(pa) * iso(pb)) < 1e-10);
  }

  // Composition chain of 5 transforms.
  Eigen::Isometry3d ref = Eigen::Isometry3d::Identity();
  DualQuaternion chain = DualQuaternion::identity();
  for (int i = 0; i < 5; ++i) {
    const Pose p = random_pose(rng);
    ref = ref * iso(p);
    chain = chain * DualQuaternion::from_pose(p);
  }
  CHECK(pose_vs_iso(chain.to_pose(), ref) < 1e-10);
}

TEST_CASE("dq_mul with identity and inverse") {
  std::mt19937_64 rng(13);
  const DualQuaternion a = random_unit_dq(rng);
  const DualQuaternion ai = a * DualQuaternion::identity();
  CHECK((ai.vec() - a.vec()).norm() == 0.0);

  const DualQuaternion prod = a * a.inverse();
  const Vec8 id = DualQuaternion::identity().vec();
  CHECK(std::min((prod.vec() - id).norm(), (prod.vec() + id).norm()) < 1e-12);
}

TEST_CASE("conjugate and inverse") {
  CHECK((DualQuaternion::identity().inverse().vec() - DualQuaternion::identity().vec()).norm() ==
        0.0);

  const DualQuaternion tr = DualQuaternion::from_pose({Quaternion::identity(), {2, 0, 0}});
  const Pose back = tr.inverse().to_pose();
  CHECK(back.translation.isApprox(Vec3(-2, 0, 0), 1e-15));

  std::mt19937_64 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const DualQuaternion q = random_unit_dq(rng);
    const DualQuaternion prod = q * q.inverse();
    CHECK((prod.vec() - DualQuaternion::identity().vec()).norm() < 1e-12);
    // For unit DQs the inverse is the quaternion-conjugate of both parts.
    CHECK((q.inverse().vec() - q.conjugate().vec()).norm() < 1e-12);
  }
}

TEST_CASE("left and right matrices reproduce multiplication") {
  CHECK((left_matrix(DualQuaternion::identity()) - Mat8::Identity()).norm() == 0.0);
  CHECK((right_matrix(DualQuaternion::identity()) - Mat8::Identity()).norm() == 0.0);

  std::mt19937_64 rng(19);
  for (int i = 0; i < 1000; ++i) {
    const DualQuaternion a = random_unit_dq(rng), b = random_unit_dq(rng);
    const Vec8 prod = (a * b).vec();
    CHECK((left_matrix(a) * b.vec() - prod).norm() < 1e-12);
    CHECK((right_matrix(b) * a.vec() - prod).norm() < 1e-12);
    // L(a) and R(b) commute (associativity of the product).
    CHECK((left_matrix(a) * right_matrix(b) - right_matrix(b) * left_matrix(a)).norm() < 1e-12);
  }
}

// Strict orthogonality M'M = I holds only for zero translation; what unit DQ
// matrices preserve are the two unit-constraint forms and the unit
// determinant. A pure 2 m translation is a counterexample to M'M = I.
TEST_CASE("unit DQ matrices preserve the constraint forms") {
  Mat8 p_r = Mat8::Zero();
  p_r.topLeftCorner<4, 4>() = -Mat4::Identity();
  Mat8 p_d = Mat8::Zero();
  p_d.topRightCorner<4, 4>() = Mat4::Identity();
  p_d.bottomLeftCorner<4, 4>() = Mat4::Identity();

  const DualQuaternion shift = DualQuaternion::from_pose({Quaternion::identity(), {2, 0, 0}});
  const Mat8 ms = left_matrix(shift);
  CHECK((ms.transpose() * ms - Mat8::Identity()).norm() > 1.0);

  std::mt19937_64 rng(23);
  for (int i = 0; i < 1000; ++i) {
    const DualQuaternion q = random_unit_dq(rng);
    for (const Mat8& M : {left_matrix(q), right_matrix(q)}) {
      CHECK((M.transpose() * (-p_r) * M - (-p_r)).norm() < 1e-9);
      CHECK((M.transpose() * p_d * M - p_d).norm() < 1e-9);
      // Rotation sub-block is orthogonal.
      const Mat4 r = M.topLeftCorner<4, 4>();
      CHECK((r.transpose() * r - Mat4::Identity()).norm() < 1e-9);
      CHECK(M.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("canonicalize") {
  DualQuaternion neg;
  neg.real = {-1, 0, 0, 0};
  const DualQuaternion canon = canonicalize(neg);
  CHECK(canon.real.w == 1.0);

  std::mt19937_64 rng(29);
  for (int i = 0; i < 1000; ++i) {
    const DualQuaternion q = random_unit_dq(rng);
    const DualQuaternion c1 = canonicalize(q);
    const DualQuaternion c2 = canonicalize(-q);
    CHECK(c1.vec() == c2.vec());  // bit-identical
    CHECK(canonicalize(c1).vec() == c1.vec());
  }

  DualQuaternion zero;
  zero.real = {0, 0, 0, 0};
  CHECK_THROWS_AS(canonicalize(zero), Error);
}

TEST_CASE("unit property survives long multiplication chains") {
  std::mt19937_64 rng(31);
  DualQuaternion acc = DualQuaternion::identity();
  for (int i = 0; i < 100; ++i) {
    acc = acc * random_unit_dq(rng);
    CHECK(acc.is_unit(1e-9));
  }
}
