#include <doctest.h>

#include <Eigen/Dense>

#include "build_helpers.hpp"
#include "helpers.hpp"
#include "herw/metrics.hpp"
#include "herw/qcqp.hpp"
#include "herw/synth.hpp"

using namespace herw;
using herwtest::problem_with_truth_signs;
using herwtest::random_pose;
using herwtest::random_unit_dq;
using herwtest::truth_vector;

TEST_CASE("constraint set layout") {
  const ConstraintSet cs1 = build_constraint_set(1);
  Mat8 p_r = Mat8::Zero();
  p_r.topLeftCorner<4, 4>() = -Mat4::Identity();
  Mat8 p_d = Mat8::Zero();
  p_d.topRightCorner<4, 4>() = Mat4::Identity();
  p_d.bottomLeftCorner<4, 4>() = Mat4::Identity();
  CHECK((cs1.matrix(0) - p_r).norm() == 0.0);
  CHECK((cs1.matrix(1) - p_d).norm() == 0.0);
  CHECK(cs1.constant(0) == 1.0);
  CHECK(cs1.constant(1) == 0.0);

  const ConstraintSet cs2 = build_constraint_set(2);
  const Eigen::MatrixXd pr2 = cs2.matrix(2);
  CHECK((pr2.block<8, 8>(8, 8) - p_r).norm() == 0.0);
  CHECK(pr2.topLeftCorner<8, 8>().norm() == 0.0);
  CHECK(pr2.topRightCorner<8, 8>().norm() == 0.0);

  CHECK_THROWS_AS(build_constraint_set(1, {{0, 1.0}, {0, 2.0}}), Error);
  CHECK_THROWS_AS(build_constraint_set(1, {{0, -1.0}}), Error);
  CHECK_THROWS_AS(build_constraint_set(1, {{3, 1.0}}), Error);
}

TEST_CASE("norm constraint holds on 1.88 m translations") {
  const ConstraintSet cs = build_constraint_set(1, {{0, 1.88}});
  const Eigen::MatrixXd p_norm = cs.matrix(2);
  std::mt19937_64 rng(41);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 200; ++i) {
    Pose p = random_pose(rng);
    p.translation = 1.88 * Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
    const Vec8 z = DualQuaternion::from_pose(p).vec();
    CHECK(std::abs(cs.constant(2) + z.dot(p_norm * z)) < 1e-12);
    CHECK(cs.violations(z).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("solve_dual on the zero cost problem") {
  CostMatrix cost{Eigen::MatrixXd::Zero(8, 8), 1};
  const auto res = solve_dual(cost, build_constraint_set(1));
  CHECK(std::abs(res.certificate.dual_value) < 1e-8);
  CHECK(res.certificate.lambda.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(res.certificate.min_eig_Z > -1e-8);
}

TEST_CASE("noiseless single pair: zero gap and exact recovery") {
  const Scenario sc = generate_general(15, 1, 1, 42);
  const HERWProblem problem = problem_with_truth_signs(sc);
  const CostMatrix cost = accumulate_cost(problem);
  const Eigen::VectorXd z_truth = truth_vector(sc);
  REQUIRE(herwtest::residual_cost(problem, z_truth) < 1e-18);

  const ConstraintSet cs = build_constraint_set(2);
  const auto dual = solve_dual(cost, cs);
  CHECK(std::abs(dual.certificate.dual_value) < 1e-8);

  const PrimalSolution primal = recover_primal(dual.Z, cost, cs, &dual.X);
  CHECK(primal.recovery_mode == RecoveryMode::Nullspace2);
  CHECK(cs.violations(primal.z).cwiseAbs().maxCoeff() < 1e-8);

  const Vec8 x = primal.z.head<8>(), xt = z_truth.head<8>();
  const Vec8 y = primal.z.tail<8>(), yt = z_truth.tail<8>();
  CHECK(std::min((x - xt).norm(), (x + xt).norm()) < 1e-6);
  CHECK(std::min((y - yt).norm(), (y + yt).norm()) < 1e-6);

  const GapCheck gap = duality_gap(cost, primal.z, dual.certificate);
  CHECK(gap.certified_global);
  CHECK(gap.gap < 1e-8);
}

TEST_CASE("weak duality on noisy instances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scenario sc = add_noise(generate_general(10, 1, 1, 100 + seed), 0.01, 0.1, 200 + seed);
    const CostMatrix cost = accumulate_cost(problem_with_truth_signs(sc));
    const ConstraintSet cs = build_constraint_set(2);
    const auto dual = solve_dual(cost, cs);
    const PrimalSolution primal = recover_primal(dual.Z, cost, cs, &dual.X);
    const GapCheck gap = duality_gap(cost, primal.z, dual.certificate);
    CHECK(gap.gap >= -1e-10 * std::max(1.0, primal.cost));
    CHECK(dual.certificate.min_eig_Z >= -psd_tolerance(cost.Q));
    // Any feasible point upper-bounds the dual value.
    std::mt19937_64 rng(300 + seed);
    for (int i = 0; i < 10; ++i) {
      Eigen::VectorXd zf(16);
      zf.head<8>() = random_unit_dq(rng).vec();
      zf.tail<8>() = random_unit_dq(rng).vec();
      CHECK(zf.dot(cost.Q * zf) >= dual.certificate.dual_value - 1e-10);
    }
  }
}

TEST_CASE("recover_primal from an exact rank-deficient certificate") {
  std::mt19937_64 rng(43);
  const Vec8 z0 = random_unit_dq(rng).vec();
  const Eigen::VectorXd zn = z0.normalized();
  Eigen::MatrixXd W = Eigen::MatrixXd::Random(8, 8);
  W = (W * W.transpose()).eval();
  const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(8, 8) - zn * zn.transpose();
  const Eigen::MatrixXd Z = proj * W * proj;

  CostMatrix cost{Z, 1};  // any PSD matrix with z0 in its null space works here
  const PrimalSolution primal = recover_primal(Z, cost, build_constraint_set(1));
  CHECK(primal.recovery_mode == RecoveryMode::Nullspace1);
  CHECK(std::min((primal.z - z0).norm(), (primal.z + z0).norm()) < 1e-9);
}

TEST_CASE("solver is pluggable through the interface") {
  const Scenario sc = add_noise(generate_general(10, 1, 1, 311), 0.01, 0.1, 312);
  InteriorPointSolver::Options tight;
  tight.max_iterations = 200;
  const InteriorPointSolver solver(tight);
  CalibrateOptions opt;
  opt.solver = &solver;
  const CalibrationResult with_custom = calibrate(sc.problem(), opt);
  const CalibrationResult with_default = calibrate(sc.problem(), {});
  CHECK(calib_error(with_custom.X[0], with_default.X[0]).translation_m < 1e-9);
  CHECK(with_custom.certified_global);
}

TEST_CASE("recovery fails cleanly on an inconsistent null space") {
  // Null vector with a vanishing real part cannot be a stacked unit DQ.
  Eigen::VectorXd v = Eigen::VectorXd::Zero(8);
  v[4] = 1.0;
  Eigen::MatrixXd W = Eigen::MatrixXd::Random(8, 8);
  W = (W * W.transpose()).eval();
  const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(8, 8) - v * v.transpose();
  const Eigen::MatrixXd Z = proj * W * proj;
  CostMatrix cost{Z, 1};
  try {
    recover_primal(Z, cost, build_constraint_set(1));
    FAIL("expected recovery failure");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::RecoveryFailure);
  }
}

TEST_CASE("norm prior equal to the unconstrained norm leaves the solution") {
  const Scenario sc = generate_general(12, 1, 1, 77);
  const CostMatrix cost = accumulate_cost(problem_with_truth_signs(sc));
  const ConstraintSet cs_free = build_constraint_set(2);
  const auto dual_free = solve_dual(cost, cs_free);
  const PrimalSolution free_sol = recover_primal(dual_free.Z, cost, cs_free, &dual_free.X);

  const double alpha = 2.0 * free_sol.z.segment<4>(4).norm();  // ||t_x|| of the solution
  const ConstraintSet cs_pinned = build_constraint_set(2, {{0, alpha}});
  const auto dual_pinned = solve_dual(cost, cs_pinned);
  const PrimalSolution pinned = recover_primal(dual_pinned.Z, cost, cs_pinned, &dual_pinned.X);

  CHECK(std::min((free_sol.z - pinned.z).norm(), (free_sol.z + pinned.z).norm()) < 1e-6);
}

TEST_CASE("perturbing the solution grows the gap monotonically in scale") {
  const Scenario sc = generate_general(15, 1, 1, 91);
  const CostMatrix cost = accumulate_cost(problem_with_truth_signs(sc));
  const ConstraintSet cs = build_constraint_set(2);
  const auto dual = solve_dual(cost, cs);
  const PrimalSolution primal = recover_primal(dual.Z, cost, cs, &dual.X);
  const GapCheck base = duality_gap(cost, primal.z, dual.certificate);

  double prev = base.gap;
  for (double eps : {1e-4, 1e-3, 1e-2, 1e-1}) {
    Pose px = DualQuaternion::from_vec(primal.z.head<8>()).to_pose();
    px.rotation = (Quaternion::from_axis_angle(Vec3::UnitX(), eps) * px.rotation).normalized();
    px.translation += Vec3(eps, 0, 0);
    Eigen::VectorXd zp = primal.z;
    zp.head<8>() = DualQuaternion::from_pose(px).vec();
    const GapCheck g = duality_gap(cost, zp, dual.certificate);
    CHECK(g.gap > prev);
    prev = g.gap;
  }
}

TEST_CASE("planar cost without prior recovers via local refinement") {
  PlanarSceneSpec spec;
  spec.detections_per_sensor = {24};
  spec.target_heights = {1.7};
  spec.seed = 5;
  const Scenario sc = generate_planar(spec);
  const CostMatrix cost = accumulate_cost(problem_with_truth_signs(sc));
  const ConstraintSet cs = build_constraint_set(2);

  // lambda = 0 is dual-optimal on noiseless data, so Q itself certifies; its
  // null space is larger than two because the translation is indefinite.
  const PrimalSolution primal = recover_primal(cost.Q, cost, cs);
  CHECK(primal.recovery_mode == RecoveryMode::LocalRefined);
  CHECK(cs.violations(primal.z).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(primal.cost < 1e-10);
}

namespace {

// Mirror solution of an exactly planar scene: shift X by -2 gamma u_v and Y
// by -2 gamma u_w (the motion plane here is z = 0, so both ups are +z).
Eigen::VectorXd mirrored_truth(const Scenario& sc) {
  const Vec3 u(0, 0, 1);
  const double gamma = sc.X[0].translation.z();
  Pose xm = sc.X[0];
  xm.translation -= 2.0 * gamma * u;
  Pose ym = sc.Y[0];
  ym.translation -= 2.0 * gamma * u;
  Eigen::VectorXd z(16);
  z.head<8>() = DualQuaternion::from_pose(xm).vec();
  z.tail<8>() = DualQuaternion::from_pose(ym).vec();
  return z;
}

}  // namespace

TEST_CASE("planar problem with norm prior admits exactly two solutions") {
  PlanarSceneSpec spec;
  spec.detections_per_sensor = {30};
  spec.target_heights = {1.7};
  spec.target_inplane_offset = 0.4;
  spec.seed = 9;
  const Scenario sc = generate_planar(spec);
  const CostMatrix cost = accumulate_cost(problem_with_truth_signs(sc));
  const double alpha = sc.target_norms[0];
  const ConstraintSet cs = build_constraint_set(2, {{0, alpha}});

  const Eigen::VectorXd z_truth = truth_vector(sc);
  const Eigen::VectorXd z_mirror = mirrored_truth(sc);

  // Both solutions are feasible and cost-equivalent.
  CHECK(cs.violations(z_truth).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(cs.violations(z_mirror).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(std::abs(z_truth.dot(cost.Q * z_truth) - z_mirror.dot(cost.Q * z_mirror)) < 1e-10);

  // Brute-force grid over the up-vector shift: the norm constraint admits
  // exactly two shifts (0 and -2 gamma) along the degenerate direction.
  const Vec3 u(0, 0, 1);
  int zero_crossings = 0;
  double prev = 0.0;
  const double gamma = sc.X[0].translation.z();
  for (int i = 0; i <= 800; ++i) {
    const double s = -3.0 * gamma + i * (5.0 * gamma) / 800.0;
    Pose xs = sc.X[0];
    xs.translation += s * u;
    const double v = xs.translation.norm() - alpha;
    if (i > 0 && std::signbit(v) != std::signbit(prev)) ++zero_crossings;
    prev = v;
  }
  CHECK(zero_crossings == 2);

  // The certified solve recovers one of the two.
  const auto dual = solve_dual(cost, cs);
  const PrimalSolution primal = recover_primal(dual.Z, cost, cs, &dual.X);
  double dist = 1e9;
  for (const auto* cand : {&z_truth, &z_mirror}) {
    dist = std::min({dist, (primal.z - *cand).norm(), (primal.z + *cand).norm()});
  }
  CHECK(dist < 1e-6);
  CHECK(duality_gap(cost, primal.z, dual.certificate).certified_global);
}

// With noise the optimizer favors one of the two planar solutions; recovery
// must still certify and land near the truth or its mirror.
TEST_CASE("noisy planar problem with norm prior certifies one of the two") {
  PlanarSceneSpec spec;
  spec.detections_per_sensor = {40};
  spec.target_heights = {1.7};
  spec.target_inplane_offset = 0.4;
  spec.seed = 10;
  const Scenario sc = add_noise(generate_planar(spec), 0.005, 0.05, 99);
  const CostMatrix cost = accumulate_cost(problem_with_truth_signs(sc));
  const ConstraintSet cs = build_constraint_set(2, {{0, sc.target_norms[0]}});

  const auto dual = solve_dual(cost, cs);
  const PrimalSolution primal = recover_primal(dual.Z, cost, cs, &dual.X);
  CHECK(cs.violations(primal.z).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(duality_gap(cost, primal.z, dual.certificate).certified_global);

  const Eigen::VectorXd z_truth = truth_vector(sc);
  const Eigen::VectorXd z_mirror = mirrored_truth(sc);
  double dist = 1e9;
  for (const auto* cand : {&z_truth, &z_mirror}) {
    dist = std::min({dist, (primal.z - *cand).norm(), (primal.z + *cand).norm()});
  }
  CHECK(dist < 0.1);
}
