#pragma once

#include <Eigen/Dense>

#include "herw/herw.hpp"
#include "herw/synth.hpp"

namespace herwtest {

// Stacked ground-truth vector (targets then sensors).
inline Eigen::VectorXd truth_vector(const herw::Scenario& sc) {
  const int m = sc.num_targets() + sc.num_sensors();
  Eigen::VectorXd z(8 * m);
  for (int t = 0; t < sc.num_targets(); ++t) {
    z.segment<8>(8 * t) = herw::DualQuaternion::from_pose(sc.X[t]).vec();
  }
  for (int s = 0; s < sc.num_sensors(); ++s) {
    z.segment<8>(8 * (sc.num_targets() + s)) = herw::DualQuaternion::from_pose(sc.Y[s]).vec();
  }
  return z;
}

// Residual-sum evaluation of the cost, numerically exact near zero where the
// assembled z'Qz form floors out at eps * ||Q||.
inline double residual_cost(const herw::HERWProblem& p, const Eigen::VectorXd& z) {
  double sum = 0.0;
  for (const auto& d : p.detections) {
    sum += (herw::measurement_matrix(d, p.num_targets, p.num_sensors) * z).squaredNorm();
  }
  return sum;
}

// Problem with every measurement sign resolved against the ground truth,
// bypassing the sign-selection machinery.
inline herw::HERWProblem problem_with_truth_signs(const herw::Scenario& sc) {
  herw::HERWProblem p = sc.problem();
  const Eigen::VectorXd z = truth_vector(sc);
  for (auto& d : p.detections) {
    const herw::Mat8 C = herw::cycle_matrix(d.A, d.B);
    const Eigen::Matrix<double, 8, 1> x = z.segment<8>(8 * d.target);
    const Eigen::Matrix<double, 8, 1> y = z.segment<8>(8 * (p.num_targets + d.sensor));
    d.sign_b = ((x - C * y).norm() <= (x + C * y).norm()) ? 1 : -1;
  }
  return p;
}

}  // namespace herwtest
