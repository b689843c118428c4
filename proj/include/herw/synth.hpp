#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "herw/herw.hpp"

namespace herw {

struct NoiseSpec {
  double sigma_t = 0.0;      // meters, i.i.d. per translation component
  double sigma_r_deg = 0.0;  // degrees, random-axis angle
  bool apply_to_a = false;   // default: detections (B) only
};

// Ground-truth scene: calibrations, carrier trajectories, and the exact
// detections B = Y^-1 * A * X for every scheduled (step, target, sensor).
struct Scenario {
  std::vector<Pose> X;                  // per target
  std::vector<Pose> Y;                  // per sensor
  std::vector<std::vector<Pose>> A;     // [target][step]
  std::vector<Measurement> detections;  // B filled in
  std::vector<double> target_norms;     // ||t_X|| per target
  NoiseSpec noise;
  std::uint64_t seed = 0;

  int num_targets() const { return static_cast<int>(X.size()); }
  int num_sensors() const { return static_cast<int>(Y.size()); }

  HERWProblem problem() const;  // no priors attached
};

// General-motion scene: poses in a desk-scale cube with orientation spread
// that satisfies the three-measurement non-colinear-axis requirement.
Scenario generate_general(int n, int num_targets, int num_sensors, std::uint64_t seed);

struct PlanarSceneSpec {
  std::vector<int> detections_per_sensor;            // disjoint windows
  std::vector<double> target_heights;                // mount height above origin, meters
  double target_inplane_offset = 0.3;                // meters, xy offset of the mount
  double extent_m = 60.0;                            // trajectory span
  double max_detection_range = 20.0;                 // along-path detection reach per sensor
  double tilt_deg = 0.0;                             // road slope about the x axis
  std::vector<std::pair<int, int>> visibility;       // (target, sensor); empty = all pairs
  std::uint64_t seed = 1;
};

// Intersection-style scene: lane-following arc on a plane, yaw-only carrier
// rotation, elevated sensors with non-overlapping detection windows.
Scenario generate_planar(const PlanarSceneSpec& spec);

// Gaussian perturbation of the detections (and optionally the carrier poses).
// sigma == 0 returns a bit-identical copy.
Scenario add_noise(const Scenario& scenario, double sigma_t, double sigma_r_deg,
                   std::uint64_t seed, bool apply_to_a = false);

// Uniform random rotation (Shoemake), shared by the generators and tests.
Quaternion random_rotation(std::mt19937_64& rng);

}  // namespace herw
