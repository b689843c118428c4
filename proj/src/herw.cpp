#include "herw/herw.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <map>
#include <optional>
#include <random>

namespace herw {

Mat8 cycle_matrix(const Pose& A, const Pose& B) {
  return left_matrix(DualQuaternion::from_pose(A).inverse()) *
         right_matrix(DualQuaternion::from_pose(B));
}

Eigen::MatrixXd measurement_matrix(const Measurement& meas, int num_targets, int num_sensors) {
  if (meas.target < 0 || meas.target >= num_targets || meas.sensor < 0 ||
      meas.sensor >= num_sensors) {
    throw Error(ErrorCategory::InvalidInput, "measurement indices out of range");
  }
  const int m = num_targets + num_sensors;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(8, 8 * m);
  M.block<8, 8>(0, 8 * meas.target) = Mat8::Identity();
  M.block<8, 8>(0, 8 * (num_targets + meas.sensor)) =
      -static_cast<double>(meas.sign_b) * cycle_matrix(meas.A, meas.B);
  return M;
}

namespace {

// Detection order fixed to sorted (step, target, sensor) so that summation is
// bit-reproducible under input permutation.
std::vector<int> sorted_detection_order(const HERWProblem& problem) {
  std::vector<int> order(problem.detections.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ma = problem.detections[a];
    const auto& mb = problem.detections[b];
    return std::tie(ma.step, ma.target, ma.sensor) < std::tie(mb.step, mb.target, mb.sensor);
  });
  for (size_t i = 0; i + 1 < order.size(); ++i) {
    const auto& ma = problem.detections[order[i]];
    const auto& mb = problem.detections[order[i + 1]];
    if (std::tie(ma.step, ma.target, ma.sensor) == std::tie(mb.step, mb.target, mb.sensor)) {
      throw Error(ErrorCategory::ConsistencyError, "duplicate detection (step, target, sensor)");
    }
  }
  return order;
}

void validate_problem(const HERWProblem& problem) {
  if (problem.detections.empty()) {
    throw Error(ErrorCategory::InvalidInput, "empty detection set");
  }
  if (problem.num_targets < 1 || problem.num_sensors < 1) {
    throw Error(ErrorCategory::InvalidInput, "need at least one target and one sensor");
  }
  std::vector<bool> seen_t(problem.num_targets, false), seen_s(problem.num_sensors, false);
  for (const auto& d : problem.detections) {
    if (d.target < 0 || d.target >= problem.num_targets || d.sensor < 0 ||
        d.sensor >= problem.num_sensors) {
      throw Error(ErrorCategory::InvalidInput, "measurement indices out of range");
    }
    if (d.sign_b != 1 && d.sign_b != -1) {
      throw Error(ErrorCategory::InvalidInput, "sign_b must be +-1");
    }
    seen_t[d.target] = true;
    seen_s[d.sensor] = true;
  }
  for (int t = 0; t < problem.num_targets; ++t) {
    if (!seen_t[t]) throw Error(ErrorCategory::InvalidInput, "target without detections");
  }
  for (int s = 0; s < problem.num_sensors; ++s) {
    if (!seen_s[s]) throw Error(ErrorCategory::InvalidInput, "sensor without detections");
  }
}

}  // namespace

CostMatrix accumulate_cost(const HERWProblem& problem) {
  validate_problem(problem);
  const int m = problem.num_unknowns();
  CostMatrix cost;
  cost.m = m;
  cost.Q = Eigen::MatrixXd::Zero(8 * m, 8 * m);
  for (int idx : sorted_detection_order(problem)) {
    const auto& d = problem.detections[idx];
    const int it = 8 * d.target;
    const int is = 8 * (problem.num_targets + d.sensor);
    const Mat8 C = static_cast<double>(d.sign_b) * cycle_matrix(d.A, d.B);
    cost.Q.block<8, 8>(it, it) += Mat8::Identity();
    cost.Q.block<8, 8>(it, is) -= C;
    cost.Q.block<8, 8>(is, it) -= C.transpose();
    cost.Q.block<8, 8>(is, is) += C.transpose() * C;
  }
  return cost;
}

// ---------------------------------------------------------------------------
// Sign selection
// ---------------------------------------------------------------------------

Eigen::MatrixXd pair_cost_matrix(const std::vector<Mat8>& cycles, const std::vector<int>& signs) {
  if (cycles.size() != signs.size()) {
    throw Error(ErrorCategory::InvalidInput, "sign count does not match measurement count");
  }
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(16, 16);
  for (size_t k = 0; k < cycles.size(); ++k) {
    const Mat8 C = static_cast<double>(signs[k]) * cycles[k];
    Q.topLeftCorner<8, 8>() += Mat8::Identity();
    Q.topRightCorner<8, 8>() -= C;
    Q.bottomLeftCorner<8, 8>() -= C.transpose();
    Q.bottomRightCorner<8, 8>() += C.transpose() * C;
  }
  return Q;
}

double sign_assignment_cost(const std::vector<Mat8>& cycles, const std::vector<int>& signs) {
  const Eigen::VectorXd evals =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(pair_cost_matrix(cycles, signs),
                                                     Eigen::EigenvaluesOnly)
          .eigenvalues();
  return evals[0] + evals[1];
}

namespace {

SignSelection enumerate_all_signs(const std::vector<Mat8>& cycles) {
  const int n = static_cast<int>(cycles.size());
  SignSelection best;
  best.cost = std::numeric_limits<double>::infinity();
  std::vector<int> signs(n, 1);
  const std::uint64_t total = 1ull << (n - 1);
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    for (int k = 1; k < n; ++k) signs[k] = (mask >> (k - 1)) & 1 ? -1 : 1;
    const double cost = sign_assignment_cost(cycles, signs);
    ++best.combinations_checked;
    if (cost < best.cost) {
      best.cost = cost;
      best.signs = signs;
    }
  }
  return best;
}

struct TripleEval {
  double cost = std::numeric_limits<double>::infinity();
  std::optional<Eigen::VectorXd> z;
};

TripleEval evaluate_triple(const std::vector<Mat8>& cycles, const std::vector<int>& signs,
                           const ConstraintSet& cs_pair) {
  TripleEval out;
  const Eigen::MatrixXd Q = pair_cost_matrix(cycles, signs);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q);
  out.cost = eig.eigenvalues()[0] + eig.eigenvalues()[1];
  const auto candidates =
      recover_candidates_2d(eig.eigenvectors().col(0), eig.eigenvectors().col(1), cs_pair);
  double best_cost = std::numeric_limits<double>::infinity();
  for (const auto& cand : candidates) {
    const double c = cand.dot(Q * cand);
    if (c < best_cost) {
      best_cost = c;
      out.z = cand;
    }
  }
  return out;
}

}  // namespace

SignSelection select_signs_bruteforce(const std::vector<Mat8>& cycles) {
  const int n = static_cast<int>(cycles.size());
  if (n < 1) throw Error(ErrorCategory::InvalidInput, "no measurements");
  if (n > 16) {
    throw Error(ErrorCategory::InvalidInput,
                "brute-force sign search refused beyond 16 measurements");
  }
  return enumerate_all_signs(cycles);
}

SignSelection select_signs_ransac(const std::vector<Mat8>& cycles, int iterations,
                                  std::uint64_t seed) {
  const int n = static_cast<int>(cycles.size());
  if (n < 1) throw Error(ErrorCategory::InvalidInput, "no measurements");
  // Up to three measurements the sample IS the problem: the exhaustive check
  // of the four (or fewer) combinations is the same computation.
  if (n <= 3) return enumerate_all_signs(cycles);

  const ConstraintSet cs_pair = build_constraint_set(2);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);

  SignSelection best;
  best.cost = std::numeric_limits<double>::infinity();
  int combos = 0;
  bool any_success = false;

  const int iters = std::max(1, iterations);
  for (int it = 0; it < iters; ++it) {
    std::array<int, 3> triple{0, 1, 2};
    std::optional<Eigen::VectorXd> sample_z;
    std::array<int, 3> sample_signs{1, 1, 1};

    for (int redraw = 0; redraw < 4 && !sample_z; ++redraw) {
      triple[0] = pick(rng);
      do triple[1] = pick(rng); while (triple[1] == triple[0]);
      do triple[2] = pick(rng); while (triple[2] == triple[0] || triple[2] == triple[1]);
      std::sort(triple.begin(), triple.end());
      const std::vector<Mat8> sub{cycles[triple[0]], cycles[triple[1]], cycles[triple[2]]};

      double best_sub = std::numeric_limits<double>::infinity();
      double worst_sub = -std::numeric_limits<double>::infinity();
      std::optional<Eigen::VectorXd> z;
      std::array<int, 3> win{1, 1, 1};
      for (int s1 : {1, -1}) {
        for (int s2 : {1, -1}) {
          const TripleEval ev = evaluate_triple(sub, {1, s1, s2}, cs_pair);
          ++combos;
          worst_sub = std::max(worst_sub, ev.cost);
          if (ev.z && ev.cost < best_sub) {
            best_sub = ev.cost;
            z = ev.z;
            win = {1, s1, s2};
          }
        }
      }
      // Degenerate sample: nothing recoverable, or no combination separates
      // from the rest.
      if (!z || worst_sub - best_sub <= 1e-9 * (1.0 + std::abs(worst_sub))) continue;
      sample_z = z;
      sample_signs = win;
    }
    if (!sample_z) continue;
    any_success = true;

    const Eigen::Matrix<double, 8, 1> x = sample_z->head<8>();
    const Eigen::Matrix<double, 8, 1> y = sample_z->tail<8>();
    std::vector<int> signs(n, 1);
    for (int k = 0; k < n; ++k) {
      const double rp = (x - cycles[k] * y).norm();
      const double rm = (x + cycles[k] * y).norm();
      signs[k] = rp <= rm ? 1 : -1;
    }
    if (signs[0] < 0) {
      for (auto& s : signs) s = -s;
    }
    const double cost = sign_assignment_cost(cycles, signs);
    if (cost < best.cost) {
      best.cost = cost;
      best.signs = signs;
    }
  }
  if (!any_success) {
    // Every sampled triple was degenerate. Exhaustive search still resolves
    // the signs exactly when it is affordable.
    if (n <= 16) {
      SignSelection brute = enumerate_all_signs(cycles);
      brute.combinations_checked += combos;
      return brute;
    }
    throw Error(ErrorCategory::DegenerateMotion,
                "sign selection failed: degenerate samples after retries");
  }
  best.combinations_checked = combos;
  return best;
}

// ---------------------------------------------------------------------------
// Calibration pipeline
// ---------------------------------------------------------------------------

namespace {

struct PairData {
  int target = 0;
  int sensor = 0;
  std::vector<int> detection_index;  // into problem.detections, sorted by step
  std::vector<Mat8> cycles;          // with the measurement sign_b baked in
  std::vector<int> signs;            // selection output
};

std::vector<PairData> group_pairs(const HERWProblem& problem) {
  std::map<std::pair<int, int>, PairData> pairs;
  for (int idx : sorted_detection_order(problem)) {
    const auto& d = problem.detections[idx];
    auto& pd = pairs[{d.target, d.sensor}];
    pd.target = d.target;
    pd.sensor = d.sensor;
    pd.detection_index.push_back(idx);
    pd.cycles.push_back(static_cast<double>(d.sign_b) * cycle_matrix(d.A, d.B));
  }
  std::vector<PairData> out;
  out.reserve(pairs.size());
  for (auto& [key, pd] : pairs) out.push_back(std::move(pd));
  return out;
}

// Joint cost matrix from per-pair cycles with per-pair flips applied.
Eigen::MatrixXd joint_cost(const std::vector<PairData>& pairs, const std::vector<int>& include,
                           const std::vector<int>& flips, int num_targets, int m) {
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(8 * m, 8 * m);
  for (int p : include) {
    const auto& pd = pairs[p];
    const int it = 8 * pd.target;
    const int is = 8 * (num_targets + pd.sensor);
    for (size_t k = 0; k < pd.cycles.size(); ++k) {
      const Mat8 C = static_cast<double>(flips[p] * pd.signs[k]) * pd.cycles[k];
      Q.block<8, 8>(it, it) += Mat8::Identity();
      Q.block<8, 8>(it, is) -= C;
      Q.block<8, 8>(is, it) -= C.transpose();
      Q.block<8, 8>(is, is) += C.transpose() * C;
    }
  }
  return Q;
}

double two_smallest_eigsum(const Eigen::MatrixXd& Q) {
  const Eigen::VectorXd evals =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q, Eigen::EigenvaluesOnly).eigenvalues();
  return evals[0] + evals[1];
}

// Per-pair sign selection fixes signs only up to a global flip per pair; the
// joint problem shares unknowns across pairs, so pair orientations must agree.
// Walk the pair graph breadth-first and pick each flip by joint-cost descent.
void align_pair_orientations(std::vector<PairData>& pairs, int num_targets, int m) {
  const int P = static_cast<int>(pairs.size());
  if (P <= 1) return;

  std::vector<int> flips(P, 1);
  std::vector<bool> placed(P, false);
  std::vector<int> include;

  auto shares_unknown = [&](int a, int b) {
    return pairs[a].target == pairs[b].target || pairs[a].sensor == pairs[b].sensor;
  };

  for (int root = 0; root < P; ++root) {
    if (placed[root]) continue;
    placed[root] = true;
    include.push_back(root);
    std::vector<int> frontier{root};
    while (!frontier.empty()) {
      std::vector<int> next;
      for (int p : frontier) {
        for (int q = 0; q < P; ++q) {
          if (placed[q] || !shares_unknown(p, q)) continue;
          placed[q] = true;
          include.push_back(q);
          flips[q] = 1;
          const double cost_pos = two_smallest_eigsum(
              joint_cost(pairs, include, flips, num_targets, m));
          flips[q] = -1;
          const double cost_neg = two_smallest_eigsum(
              joint_cost(pairs, include, flips, num_targets, m));
          flips[q] = cost_pos <= cost_neg ? 1 : -1;
          next.push_back(q);
        }
      }
      frontier = std::move(next);
    }
  }
  for (int p = 0; p < P; ++p) {
    if (flips[p] < 0) {
      for (auto& s : pairs[p].signs) s = -s;
    }
  }
}

}  // namespace

ObservabilityReport check_observability(const HERWProblem& problem) {
  validate_problem(problem);
  std::vector<PairMotions> motions;
  for (const auto& pd : group_pairs(problem)) {
    PairMotions pm;
    pm.target = pd.target;
    pm.sensor = pd.sensor;
    for (int idx : pd.detection_index) pm.a_poses.push_back(problem.detections[idx].A);
    motions.push_back(std::move(pm));
  }
  return check_observability(motions);
}

CalibrationResult calibrate(const HERWProblem& problem, const CalibrateOptions& options) {
  validate_problem(problem);

  CalibrationResult result;
  result.observability = check_observability(problem);
  if (!options.skip_observability_check && result.observability.norm_prior_required &&
      problem.norm_priors.empty()) {
    throw Error(ErrorCategory::DegenerateMotion,
                result.observability.planar
                    ? "planar-only motion: supply a translation-norm prior "
                      "(infrastructure calibration path)"
                    : "fewer than three measurements with non-colinear rotation axes");
  }

  auto pairs = group_pairs(problem);
  std::uint64_t pair_seed = options.seed;
  for (auto& pd : pairs) {
    pair_seed = pair_seed * 0x9e3779b97f4a7c15ull + 0xda942042e4dd58b5ull;
    auto selection = select_signs_ransac(pd.cycles, options.ransac_iterations, pair_seed);
    pd.signs = std::move(selection.signs);
  }
  align_pair_orientations(pairs, problem.num_targets, problem.num_unknowns());

  // Fold the selected signs back into a copy of the problem.
  HERWProblem solved = problem;
  for (const auto& pd : pairs) {
    SignAssignment sa{pd.target, pd.sensor, pd.signs};
    for (size_t k = 0; k < pd.detection_index.size(); ++k) {
      solved.detections[pd.detection_index[k]].sign_b *= pd.signs[k];
    }
    result.sign_assignments.push_back(std::move(sa));
  }

  const CostMatrix cost = accumulate_cost(solved);
  const ConstraintSet constraints =
      build_constraint_set(problem.num_unknowns(), problem.norm_priors);

  const DualSolveResult dual = solve_dual(cost, constraints, options.solver);
  PrimalSolution primal = recover_primal(dual.Z, cost, constraints, &dual.X);

  result.certificate = dual.certificate;
  const GapCheck gap = duality_gap(cost, primal.z, dual.certificate);
  result.certificate.gap = gap.gap;
  result.certificate.certified_global =
      gap.gap <= options.gap_tolerance * std::max(1.0, primal.cost);
  result.certified_global = result.certificate.certified_global;
  result.residual_cost = primal.cost;
  result.recovery_mode = primal.recovery_mode;
  result.solution_candidates = primal.candidates;

  for (int t = 0; t < problem.num_targets; ++t) {
    result.X.push_back(DualQuaternion::from_vec(primal.z.segment<8>(8 * t)).to_pose());
  }
  for (int s = 0; s < problem.num_sensors; ++s) {
    result.Y.push_back(
        DualQuaternion::from_vec(primal.z.segment<8>(8 * (problem.num_targets + s))).to_pose());
  }
  return result;
}

}  // namespace herw
