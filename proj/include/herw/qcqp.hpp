#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <vector>

#include "herw/dq.hpp"

namespace herw {

// Cost of the quadratic program J(z) = z' Q z over m stacked unit DQs.
struct CostMatrix {
  Eigen::MatrixXd Q;  // 8m x 8m, symmetric PSD
  int m = 0;

  int dim() const { return 8 * m; }
};

// A-priori translation norm ||t_j|| = alpha on unknown j (0-based).
struct NormPrior {
  int index = 0;
  double alpha = 0.0;  // meters
};

// Quadratic constraints c_i + z' P_i z = 0 for the stacked problem.
// Multiplier order: (P_r_0, P_d_0, ..., P_r_{m-1}, P_d_{m-1}, norm...).
struct ConstraintSet {
  int m = 0;
  std::vector<NormPrior> norms;

  int dim() const { return 8 * m; }
  int count() const { return 2 * m + static_cast<int>(norms.size()); }

  // Constraint matrix P_i (8m x 8m) for multiplier slot i.
  Eigen::MatrixXd matrix(int i) const;
  // Constant term c_i: 1 for real-part slots, 0 for orthogonality slots,
  // alpha^2/4 for norm slots.
  double constant(int i) const;

  // Residuals c_i + z' P_i z for all constraints.
  Eigen::VectorXd violations(const Eigen::VectorXd& z) const;
};

ConstraintSet build_constraint_set(int m, const std::vector<NormPrior>& norms = {});

// Lagrangian dual solution with the optimality certificate.
struct DualCertificate {
  Eigen::VectorXd lambda;
  double dual_value = 0.0;
  double min_eig_Z = 0.0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  bool certified_global = false;
};

enum class RecoveryMode { Nullspace1, Nullspace2, LocalRefined };

const char* to_string(RecoveryMode mode);

struct PrimalSolution {
  Eigen::VectorXd z;  // 8m, m unit DQ blocks
  double cost = 0.0;
  RecoveryMode recovery_mode = RecoveryMode::Nullspace1;
  // All constraint-feasible candidates found during recovery (>= 1 entry;
  // two entries when the null space carries a two-solution ambiguity).
  std::vector<Eigen::VectorXd> candidates;
};

// max  b'y  s.t.  Z(y) = C0 + sum_i y_i G_i  >= 0  (PSD)
struct SdpProblem {
  Eigen::MatrixXd C0;
  std::vector<Eigen::MatrixXd> G;
  Eigen::VectorXd b;
};

struct SdpSolution {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;  // solution of the primal SDP relaxation
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  int iterations = 0;
  bool converged = false;
  double rel_gap = 0.0;
  double primal_res = 0.0;
  double dual_res = 0.0;
};

class DualSdpSolver {
 public:
  virtual ~DualSdpSolver() = default;
  virtual SdpSolution solve(const SdpProblem& problem) const = 0;
};

// Dense primal-dual interior-point solver (HKM direction, Mehrotra
// predictor-corrector). Sized for the small dense problems here.
class InteriorPointSolver : public DualSdpSolver {
 public:
  struct Options {
    double tol_gap = 1e-11;
    double tol_feas = 1e-10;
    int max_iterations = 150;
  };

  InteriorPointSolver() = default;
  explicit InteriorPointSolver(const Options& options) : options_(options) {}

  SdpSolution solve(const SdpProblem& problem) const override;

 private:
  Options options_;
};

struct DualSolveResult {
  DualCertificate certificate;
  Eigen::MatrixXd Z;  // Q + sum lambda_i P_i, rebuilt from the multipliers
  Eigen::MatrixXd X;  // SDP relaxation primal, used to seed local refinement
};

// PSD slack tolerance for certification: 1e-8 * max(1, ||Q||_F).
double psd_tolerance(const Eigen::MatrixXd& Q);

DualSolveResult solve_dual(const CostMatrix& cost, const ConstraintSet& constraints,
                           const DualSdpSolver* solver = nullptr);

PrimalSolution recover_primal(const Eigen::MatrixXd& Z_star, const CostMatrix& cost,
                              const ConstraintSet& constraints,
                              const Eigen::MatrixXd* X_hint = nullptr);

// Feasible stacked-unit-DQ candidates within the span of two null-space
// basis vectors, from the coefficient quadratic of the orthogonality
// constraint. Returns zero, one, or two candidates.
std::vector<Eigen::VectorXd> recover_candidates_2d(const Eigen::VectorXd& v0,
                                                   const Eigen::VectorXd& v1,
                                                   const ConstraintSet& constraints);

struct GapCheck {
  double gap = 0.0;
  bool certified_global = false;
};

// gap = z'Qz - dual_value; certified when gap <= 1e-8 * max(1, z'Qz).
GapCheck duality_gap(const CostMatrix& cost, const Eigen::VectorXd& z,
                     const DualCertificate& certificate);

}  // namespace herw
