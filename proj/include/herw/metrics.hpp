#pragma once

#include <vector>

#include "herw/dq.hpp"

namespace herw {

// Pose error split into translation (meters) and rotation (degrees).
struct CalibError {
  double translation_m = 0.0;
  double rotation_deg = 0.0;
};

// Error between a ground-truth pose and an estimate, measured on the error
// transform truth^-1 * est with the real-part sign canonicalized.
CalibError calib_error(const Pose& truth, const Pose& est);

// Error of the transformation cycle A * X * B^-1 * Y^-1 against identity.
CalibError cycle_error(const Pose& A, const Pose& X, const Pose& B, const Pose& Y);

// Root-mean-square aggregation of per-measurement cycle errors.
CalibError rms(const std::vector<CalibError>& errors);

// Motion data of one target-sensor pair for the observability diagnostics.
struct PairMotions {
  int target = 0;
  int sensor = 0;
  std::vector<Pose> a_poses;
};

struct PairObservability {
  int target = 0;
  int sensor = 0;
  int effective_motions = 0;    // relative motions with usable rotation
  double axis_spread = 0.0;     // second eigenvalue of the axis scatter
  double axis_dev_deg = 0.0;    // max deviation from the common axis
};

struct ObservabilityReport {
  std::vector<PairObservability> pairs;
  int collective_effective_motions = 0;
  double collective_axis_spread = 0.0;
  double common_axis_dev_deg = 0.0;
  double out_of_plane_rms = 0.0;  // of the pooled carrier positions
  bool planar = false;
  bool observable = false;
  bool norm_prior_required = false;
};

// Planarity verdict thresholds.
inline constexpr double kPlanarRmsMax = 0.05;      // meters
inline constexpr double kPlanarAxisDevMaxDeg = 2.0;
// Relative rotations below this angle carry no usable axis.
inline constexpr double kMinMotionAngleDeg = 0.1;

// Rotation-axis and planarity diagnostics over the pooled pair motions.
// Uniqueness needs three measurements whose inter-pose rotation axes are not
// colinear; the requirement applies to the pooled data, not per sensor.
ObservabilityReport check_observability(const std::vector<PairMotions>& pairs);

}  // namespace herw
