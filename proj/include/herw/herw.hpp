#pragma once

#include <cstdint>
#include <vector>

#include "herw/dq.hpp"
#include "herw/metrics.hpp"
#include "herw/qcqp.hpp"

namespace herw {

// One detection: target t carried at reference pose A (step k) is seen by
// sensor s at pose B. sign_b is the resolved sign of the B dual quaternion.
struct Measurement {
  int step = 0;
  int target = 0;
  int sensor = 0;
  Pose A;
  Pose B;
  int sign_b = 1;
};

// Unknown layout is x_0..x_{mX-1}, y_0..y_{mY-1}; norm priors index into it.
struct HERWProblem {
  int num_targets = 1;
  int num_sensors = 1;
  std::vector<Measurement> detections;
  std::vector<NormPrior> norm_priors;

  int num_unknowns() const { return num_targets + num_sensors; }
};

struct SignAssignment {
  int target = 0;
  int sensor = 0;
  std::vector<int> signs;  // +-1 per measurement of the pair, in (k) order
};

// Record of the planar two-solution adjustment applied to one target.
struct PlanarCorrection {
  int target = 0;
  double gamma = 0.0;  // signed height offset, meters
  bool applied = false;
  Vec3 shift_x = Vec3::Zero();  // translation applied to X (vehicle frame up)
  Vec3 shift_y = Vec3::Zero();  // translation applied to Y (world frame up)
};

struct CalibrationResult {
  std::vector<Pose> X;  // per target
  std::vector<Pose> Y;  // per sensor
  double residual_cost = 0.0;
  DualCertificate certificate;
  bool certified_global = false;
  bool planar_corrected = false;
  RecoveryMode recovery_mode = RecoveryMode::Nullspace1;
  ObservabilityReport observability;
  std::vector<SignAssignment> sign_assignments;
  std::vector<PlanarCorrection> corrections;
  // Constraint-feasible solutions found during recovery (two when the
  // problem carries the planar two-solution ambiguity).
  std::vector<Eigen::VectorXd> solution_candidates;
};

// C = left(dq(A)^-1) * right(dq(B)), so that vec(x) = C vec(y) closes the
// cycle A * X = Y * B.
Mat8 cycle_matrix(const Pose& A, const Pose& B);

// M = [e_t' (x) I8 | -e_s' (x) C], an 8 x 8m row block of the stacked system.
Eigen::MatrixXd measurement_matrix(const Measurement& meas, int num_targets, int num_sensors);

// Q = sum over detections (sorted by step, target, sensor) of M'M.
CostMatrix accumulate_cost(const HERWProblem& problem);

struct SignSelection {
  std::vector<int> signs;  // anchored: signs[0] = +1
  double cost = 0.0;       // sum of the two smallest eigenvalues of the pair cost
  int combinations_checked = 0;
};

// Pair cost matrix (16x16, one target + one sensor) under a sign assignment.
Eigen::MatrixXd pair_cost_matrix(const std::vector<Mat8>& cycles, const std::vector<int>& signs);

// Sum of the two smallest eigenvalues of the pair cost; zero iff the signed
// cycle system is consistent.
double sign_assignment_cost(const std::vector<Mat8>& cycles, const std::vector<int>& signs);

// Exhaustive search over the 2^(n-1) sign combinations. Guarded to n <= 16.
SignSelection select_signs_bruteforce(const std::vector<Mat8>& cycles);

// Consensus search: repeatedly solve a random 3-sample subproblem over its
// four sign combinations, classify the remaining measurements against the
// sample solution, and keep the cheapest full assignment.
SignSelection select_signs_ransac(const std::vector<Mat8>& cycles, int iterations,
                                  std::uint64_t seed);

struct CalibrateOptions {
  int ransac_iterations = 10;
  std::uint64_t seed = 1;
  double gap_tolerance = 1e-8;  // relative, certifies global optimality
  const DualSdpSolver* solver = nullptr;
  bool skip_observability_check = false;
};

// End-to-end certified calibration: sign selection per pair, cross-pair
// alignment, dual solve, primal recovery, gap certification.
CalibrationResult calibrate(const HERWProblem& problem, const CalibrateOptions& options = {});

// Observability diagnostics for a measurement set (pooled over pairs).
ObservabilityReport check_observability(const HERWProblem& problem);

}  // namespace herw
