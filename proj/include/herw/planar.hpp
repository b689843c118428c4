#pragma once

#include <vector>

#include "herw/herw.hpp"

namespace herw {

// Plane through a position cloud, least-variance direction as up vector.
struct PlaneFit {
  Vec3 up = Vec3::UnitZ();
  Vec3 centroid = Vec3::Zero();
  double out_of_plane_rms = 0.0;
};

// PCA plane fit; throws DegenerateMotion when the positions are colinear or
// coincident. The up-vector sign is unspecified here, callers orient it.
PlaneFit fit_plane_up(const std::vector<Vec3>& positions);

// Signed height of the estimated target calibration along the vehicle-frame
// plane up vector: gamma = u_v . t_X.
double height_offset(const Pose& X_est, const Vec3& u_v);

struct CorrectedSolution {
  Pose X;
  std::vector<Pose> Y;
  PlanarCorrection record;
};

// Two-solution disambiguation: a negative gamma means the mirrored solution
// was recovered; shift X by -2 gamma u_v and every Y by -2 gamma u_w.
CorrectedSolution correct_solution(const Pose& X, const std::vector<Pose>& Ys, const Vec3& u_v,
                                   const Vec3& u_w, double gamma);

struct InfrastructureOptions {
  CalibrateOptions calibrate;
  // Per-target mount side; empty means every target sits above the vehicle
  // origin (the usual case).
  std::vector<bool> target_above_origin;
};

// Planar-capable calibration: solves with translation-norm priors for every
// target, fits the motion-plane up vectors from the positions of A_k^-1 and
// A_k, and adjusts mirrored targets. A sensor is adjusted only when all
// targets it detects were adjusted.
CalibrationResult calibrate_infrastructure(const HERWProblem& problem,
                                           const std::vector<double>& target_norms,
                                           const InfrastructureOptions& options = {});

}  // namespace herw
