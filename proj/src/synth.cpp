#include "herw/synth.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "herw/metrics.hpp"

namespace herw {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

Vec3 random_unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(gauss(rng), gauss(rng), gauss(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

Pose noisy(const Pose& pose, double sigma_t, double sigma_r_deg, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Vec3 axis = random_unit_vector(rng);
  const double angle = gauss(rng) * sigma_r_deg * kDegToRad;
  const Vec3 dt(gauss(rng) * sigma_t, gauss(rng) * sigma_t, gauss(rng) * sigma_t);
  Pose out;
  out.rotation = Quaternion::from_axis_angle(axis, angle) * pose.rotation;
  out.translation = pose.translation + dt;
  return out;
}

Pose exact_detection(const Pose& Y, const Pose& A, const Pose& X) {
  return Y.inverse() * A * X;
}

}  // namespace

Quaternion random_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u1 = uni(rng), u2 = uni(rng), u3 = uni(rng);
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double t2 = 2.0 * std::numbers::pi * u2, t3 = 2.0 * std::numbers::pi * u3;
  return {a * std::cos(t2), a * std::sin(t2), b * std::cos(t3), b * std::sin(t3)};
}

HERWProblem Scenario::problem() const {
  HERWProblem p;
  p.num_targets = num_targets();
  p.num_sensors = num_sensors();
  p.detections = detections;
  return p;
}

Scenario generate_general(int n, int num_targets, int num_sensors, std::uint64_t seed) {
  if (n < 3) throw Error(ErrorCategory::InvalidInput, "general scenario needs n >= 3");
  if (num_targets < 1 || num_sensors < 1) {
    throw Error(ErrorCategory::InvalidInput, "need at least one target and one sensor");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  Scenario sc;
  sc.seed = seed;
  for (int t = 0; t < num_targets; ++t) {
    Pose x;
    x.rotation = random_rotation(rng);
    x.translation = (0.3 + 0.4 * uni(rng)) * random_unit_vector(rng);
    sc.X.push_back(x);
    sc.target_norms.push_back(x.translation.norm());
  }
  for (int s = 0; s < num_sensors; ++s) {
    Pose y;
    y.rotation = random_rotation(rng);
    y.translation = (0.8 + 0.8 * uni(rng)) * random_unit_vector(rng);
    sc.Y.push_back(y);
  }

  // Carrier poses in a 2 m cube; orientations stay inside a viewing cone
  // around a base attitude, the way a target kept in a sensor's field of
  // view does. Redraw until the inter-pose rotation axes are well spread.
  const double spread_min = 0.5 * (1.0 - std::cos(15.0 * kDegToRad));
  const double cone_deg = 15.0;
  for (int attempt = 0; attempt < 200; ++attempt) {
    sc.A.assign(num_targets, {});
    for (int t = 0; t < num_targets; ++t) {
      const Quaternion base = random_rotation(rng);
      for (int k = 0; k < n; ++k) {
        const double angle = (0.3 + 0.7 * uni(rng)) * cone_deg * kDegToRad;
        Pose a;
        a.rotation = base * Quaternion::from_axis_angle(random_unit_vector(rng), angle);
        a.translation = Vec3(2.0 * uni(rng) - 1.0, 2.0 * uni(rng) - 1.0, 2.0 * uni(rng) - 1.0);
        sc.A[t].push_back(a);
      }
    }
    std::vector<PairMotions> motions;
    for (int t = 0; t < num_targets; ++t) motions.push_back({t, 0, sc.A[t]});
    const auto report = check_observability(motions);
    bool per_target_ok = report.observable && report.collective_axis_spread > spread_min;
    for (const auto& pm : report.pairs) {
      per_target_ok = per_target_ok && pm.axis_spread > spread_min;
    }
    if (per_target_ok) break;
    if (attempt == 199) {
      throw Error(ErrorCategory::DegenerateMotion, "could not draw a well-spread trajectory");
    }
  }

  for (int k = 0; k < n; ++k) {
    for (int t = 0; t < num_targets; ++t) {
      for (int s = 0; s < num_sensors; ++s) {
        Measurement m;
        m.step = k;
        m.target = t;
        m.sensor = s;
        m.A = sc.A[t][k];
        m.B = exact_detection(sc.Y[s], m.A, sc.X[t]);
        sc.detections.push_back(m);
      }
    }
  }
  return sc;
}

Scenario generate_planar(const PlanarSceneSpec& spec) {
  const int num_sensors = static_cast<int>(spec.detections_per_sensor.size());
  const int num_targets = static_cast<int>(spec.target_heights.size());
  if (num_sensors < 1 || num_targets < 1) {
    throw Error(ErrorCategory::InvalidInput, "planar scene needs sensors and targets");
  }
  for (double h : spec.target_heights) {
    if (!(h > 0.0)) throw Error(ErrorCategory::InvalidInput, "target heights must be positive");
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  Scenario sc;
  sc.seed = spec.seed;

  const Pose tilt{Quaternion::from_axis_angle(Vec3::UnitX(), spec.tilt_deg * kDegToRad),
                  Vec3::Zero()};

  for (int t = 0; t < num_targets; ++t) {
    Pose x;
    x.rotation = random_rotation(rng);
    const double phi = 2.0 * std::numbers::pi * uni(rng);
    x.translation = Vec3(spec.target_inplane_offset * std::cos(phi),
                         spec.target_inplane_offset * std::sin(phi), spec.target_heights[t]);
    sc.X.push_back(x);
    sc.target_norms.push_back(x.translation.norm());
  }

  int total_steps = 0;
  for (int c : spec.detections_per_sensor) {
    if (c < 1) throw Error(ErrorCategory::InvalidInput, "empty detection window");
    total_steps += c;
  }

  // Left turn through the intersection: straight approach, 90-degree arc,
  // straight exit. The varying curvature matters; a pure circle is a
  // one-parameter motion subgroup and leaves a twist about its center
  // unobservable even with the norm prior.
  const double path_len = spec.extent_m;
  const double arc_start = 0.35 * path_len, arc_end = 0.65 * path_len;
  const double radius = (arc_end - arc_start) / (0.5 * std::numbers::pi);
  auto road_point = [&](double s) -> std::pair<Vec3, double> {
    if (s < arc_start) return {Vec3(s, 0.0, 0.0), 0.0};
    if (s < arc_end) {
      const double theta = (s - arc_start) / radius;
      return {Vec3(arc_start + radius * std::sin(theta), radius * (1.0 - std::cos(theta)), 0.0),
              theta};
    }
    const double theta = 0.5 * std::numbers::pi;
    const Vec3 corner(arc_start + radius, radius, 0.0);
    return {corner + Vec3(0.0, s - arc_end, 0.0), theta};
  };
  auto road_pose = [&](double t) {
    const auto [p, psi] = road_point(t * path_len);
    const auto [pc, psi_c] = road_point(0.5 * path_len);
    Pose a;
    a.rotation = Quaternion::from_axis_angle(Vec3::UnitZ(), psi);
    a.translation = p - pc;
    return a;
  };

  // Each sensor observes the stretch of road within its detection range, so
  // its window samples a centered slice of its share of the path.
  const double path_frac =
      std::min(1.0 / num_sensors, 2.0 * spec.max_detection_range / spec.extent_m);

  std::vector<Pose> trajectory(total_steps);
  {
    int start = 0;
    for (int s = 0; s < num_sensors; ++s) {
      const int n_s = spec.detections_per_sensor[s];
      const double center = (s + 0.5) / num_sensors;
      for (int j = 0; j < n_s; ++j) {
        const double local = n_s == 1 ? 0.5 : static_cast<double>(j) / (n_s - 1);
        trajectory[start + j] = tilt * road_pose(center + (local - 0.5) * path_frac);
      }
      start += n_s;
    }
  }
  sc.A.assign(num_targets, trajectory);

  for (int s = 0; s < num_sensors; ++s) {
    Pose y;
    y.rotation = random_rotation(rng);
    const double center = (s + 0.5) / num_sensors;
    const Pose road = road_pose(center);
    const double side = (s % 2 == 0 ? 1.0 : -1.0) * std::min(6.0, 0.15 * spec.extent_m);
    y.translation = road.translation + Vec3(0.0, side, 5.0 + 2.0 * uni(rng));
    sc.Y.push_back(tilt * y);
  }

  auto visible = [&](int t, int s) {
    if (spec.visibility.empty()) return true;
    for (const auto& [vt, vs] : spec.visibility) {
      if (vt == t && vs == s) return true;
    }
    return false;
  };

  int start = 0;
  for (int s = 0; s < num_sensors; ++s) {
    for (int k = start; k < start + spec.detections_per_sensor[s]; ++k) {
      for (int t = 0; t < num_targets; ++t) {
        if (!visible(t, s)) continue;
        Measurement m;
        m.step = k;
        m.target = t;
        m.sensor = s;
        m.A = trajectory[k];
        m.B = exact_detection(sc.Y[s], m.A, sc.X[t]);
        sc.detections.push_back(m);
      }
    }
    start += spec.detections_per_sensor[s];
  }
  return sc;
}

Scenario add_noise(const Scenario& scenario, double sigma_t, double sigma_r_deg,
                   std::uint64_t seed, bool apply_to_a) {
  if (sigma_t < 0.0 || sigma_r_deg < 0.0) {
    throw Error(ErrorCategory::InvalidInput, "noise sigma must be non-negative");
  }
  Scenario out = scenario;
  out.noise = {sigma_t, sigma_r_deg, apply_to_a};
  if (sigma_t == 0.0 && sigma_r_deg == 0.0) return out;

  std::mt19937_64 rng(seed);
  if (apply_to_a) {
    // Perturb each carrier pose once so that shared (step, target) detections
    // stay consistent across sensors.
    std::map<std::pair<int, int>, Pose> noisy_a;
    for (const auto& d : scenario.detections) {
      const auto key = std::make_pair(d.step, d.target);
      if (!noisy_a.count(key)) noisy_a[key] = noisy(d.A, sigma_t, sigma_r_deg, rng);
    }
    for (auto& d : out.detections) d.A = noisy_a[{d.step, d.target}];
  }
  for (auto& d : out.detections) d.B = noisy(d.B, sigma_t, sigma_r_deg, rng);
  return out;
}

}  // namespace herw
