#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "herw/io.hpp"
#include "herw/metrics.hpp"
#include "herw/planar.hpp"
#include "herw/synth.hpp"

namespace {

int exit_code_for(herw::ErrorCategory c) {
  using EC = herw::ErrorCategory;
  switch (c) {
    case EC::ParseError:
    case EC::ConsistencyError:
    case EC::EmptyProblem:
    case EC::InvalidInput:
      return 2;
    case EC::DegenerateMotion:
      return 3;
    case EC::SolverFailure:
    case EC::RecoveryFailure:
      return 4;
    case EC::Uncertified:
      return 5;
  }
  return 1;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

// --norm entries look like target0=1.88 or sensor1=2.5.
herw::NormPrior parse_norm(const std::string& entry, int num_targets) {
  const auto eq = entry.find('=');
  if (eq == std::string::npos) {
    throw herw::Error(herw::ErrorCategory::InvalidInput, "--norm expects <unknown>=<meters>");
  }
  const std::string name = entry.substr(0, eq);
  const double alpha = std::stod(entry.substr(eq + 1));
  if (name.rfind("target", 0) == 0) {
    return {std::stoi(name.substr(6)), alpha};
  }
  if (name.rfind("sensor", 0) == 0) {
    return {num_targets + std::stoi(name.substr(6)), alpha};
  }
  throw herw::Error(herw::ErrorCategory::InvalidInput,
                    "--norm unknown must be target<i> or sensor<j>");
}

void print_result(const herw::CalibrationResult& r) {
  auto show = [](const char* tag, int i, const herw::Pose& p) {
    std::printf("%s%d: t = [% .6f % .6f % .6f]  q = [% .6f % .6f % .6f % .6f]\n", tag, i,
                p.translation.x(), p.translation.y(), p.translation.z(), p.rotation.w,
                p.rotation.x, p.rotation.y, p.rotation.z);
  };
  for (size_t t = 0; t < r.X.size(); ++t) show("X", static_cast<int>(t), r.X[t]);
  for (size_t s = 0; s < r.Y.size(); ++s) show("Y", static_cast<int>(s), r.Y[s]);
  std::printf("residual cost   %.3e\n", r.residual_cost);
  std::printf("duality gap     %.3e\n", r.certificate.gap);
  std::printf("certified       %s\n", r.certified_global ? "yes" : "no");
  std::printf("recovery        %s\n", herw::to_string(r.recovery_mode));
  std::printf("planar corrected %s\n", r.planar_corrected ? "yes" : "no");
}

int run_simulate(const std::string& type, const std::string& n_csv, int targets, int sensors,
                 const std::string& heights_csv, double tilt, double noise_t, double noise_r,
                 bool noise_on_a, std::uint64_t seed, const std::string& out_poses,
                 const std::string& out_truth) {
  herw::Scenario sc;
  if (type == "general") {
    const auto n = parse_int_list(n_csv);
    sc = herw::generate_general(n.at(0), targets, sensors, seed);
  } else if (type == "planar") {
    herw::PlanarSceneSpec spec;
    spec.detections_per_sensor = parse_int_list(n_csv);
    spec.target_heights =
        heights_csv.empty() ? std::vector<double>{1.8} : parse_double_list(heights_csv);
    spec.tilt_deg = tilt;
    spec.seed = seed;
    sc = herw::generate_planar(spec);
  } else {
    throw herw::Error(herw::ErrorCategory::InvalidInput, "--type must be general or planar");
  }
  if (noise_t > 0.0 || noise_r > 0.0) {
    sc = herw::add_noise(sc, noise_t, noise_r, seed + 1, noise_on_a);
  }
  herw::write_pose_file(out_poses, sc);
  if (!out_truth.empty()) {
    herw::save_truth(out_truth, {sc.X, sc.Y, sc.target_norms});
  }
  std::printf("wrote %zu detections to %s\n", sc.detections.size(), out_poses.c_str());
  return 0;
}

int run_calibrate(const std::string& pose_path, const std::vector<std::string>& norm_entries,
                  std::uint64_t seed, int ransac_iters, bool planar_auto, double gap_tol,
                  const std::string& out_report) {
  auto parsed = herw::parse_pose_file(pose_path);
  for (const auto& w : parsed.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  herw::HERWProblem problem = parsed.problem;
  for (const auto& entry : norm_entries) {
    problem.norm_priors.push_back(parse_norm(entry, problem.num_targets));
  }

  herw::CalibrateOptions opts;
  opts.seed = seed;
  opts.ransac_iterations = ransac_iters;
  opts.gap_tolerance = gap_tol;

  std::vector<double> target_norms(problem.num_targets, 0.0);
  int targets_with_prior = 0;
  for (const auto& np : problem.norm_priors) {
    if (np.index < problem.num_targets) {
      target_norms[np.index] = np.alpha;
      ++targets_with_prior;
    }
  }
  const bool infrastructure = planar_auto || targets_with_prior == problem.num_targets;

  herw::CalibrationResult result;
  if (infrastructure) {
    herw::InfrastructureOptions iopts;
    iopts.calibrate = opts;
    result = herw::calibrate_infrastructure(problem, target_norms, iopts);
  } else {
    result = herw::calibrate(problem, opts);
  }

  print_result(result);
  if (!out_report.empty()) {
    herw::CalibReport report;
    report.input_digest = herw::fnv1a_hex(herw::read_file(pose_path));
    report.seed = seed;
    report.result = result;
    report.pair_metrics = herw::compute_pair_metrics(parsed.problem, result);
    herw::save_report(out_report, report);
    std::printf("report written to %s\n", out_report.c_str());
  }
  if (!result.certified_global) {
    std::fprintf(stderr, "%s: duality gap %.3e above tolerance\n",
                 herw::to_string(herw::ErrorCategory::Uncertified), result.certificate.gap);
    return 5;
  }
  return 0;
}

int run_evaluate(const std::string& report_path, const std::string& truth_path) {
  const herw::CalibReport report = herw::load_report(report_path);
  const herw::GroundTruth truth = herw::load_truth(truth_path);
  if (truth.X.size() != report.result.X.size() || truth.Y.size() != report.result.Y.size()) {
    throw herw::Error(herw::ErrorCategory::ConsistencyError,
                      "report and truth have different unknown counts");
  }
  std::printf("%-10s %14s %14s\n", "unknown", "eps_t [mm]", "eps_r [deg]");
  for (size_t t = 0; t < truth.X.size(); ++t) {
    const auto e = herw::calib_error(truth.X[t], report.result.X[t]);
    std::printf("target%-4zu %14.3f %14.4f\n", t, 1e3 * e.translation_m, e.rotation_deg);
  }
  for (size_t s = 0; s < truth.Y.size(); ++s) {
    const auto e = herw::calib_error(truth.Y[s], report.result.Y[s]);
    std::printf("sensor%-4zu %14.3f %14.4f\n", s, 1e3 * e.translation_m, e.rotation_deg);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified hand-eye robot-world calibration for multiple sensors and targets"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic scenario");
  std::string type = "general", n_csv = "15", heights_csv, out_poses = "poses.txt", out_truth;
  int targets = 1, sensors = 1;
  double tilt = 0.0, noise_t = 0.0, noise_r = 0.0;
  bool noise_on_a = false;
  std::uint64_t seed = 1;
  sim->add_option("--type", type, "general | planar");
  sim->add_option("--n", n_csv, "steps (general) or per-sensor window sizes (planar)");
  sim->add_option("--targets", targets, "target count (general)");
  sim->add_option("--sensors", sensors, "sensor count (general)");
  sim->add_option("--heights", heights_csv, "target mount heights, meters (planar)");
  sim->add_option("--tilt", tilt, "road slope in degrees (planar)");
  sim->add_option("--noise-t", noise_t, "translation noise sigma, meters");
  sim->add_option("--noise-r", noise_r, "rotation noise sigma, degrees");
  sim->add_flag("--noise-on-a", noise_on_a, "also perturb the carrier poses");
  sim->add_option("--seed", seed, "rng seed");
  sim->add_option("--out-poses", out_poses, "pose file to write");
  sim->add_option("--out-truth", out_truth, "ground-truth JSON to write");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "solve a pose file");
  std::string pose_path, out_report;
  std::vector<std::string> norm_entries;
  std::uint64_t cal_seed = 1;
  int ransac_iters = 10;
  bool planar_auto = false;
  double gap_tol = 1e-8;
  cal->add_option("poses", pose_path, "pose file")->required();
  cal->add_option("--norm", norm_entries, "translation norm prior, e.g. target0=1.88");
  cal->add_option("--seed", cal_seed, "rng seed");
  cal->add_option("--ransac-iters", ransac_iters, "sign selection iterations");
  cal->add_flag("--planar-auto", planar_auto, "run the infrastructure (planar) pipeline");
  cal->add_option("--gap-tol", gap_tol, "relative duality-gap certification threshold");
  cal->add_option("--out", out_report, "report JSON to write");

  // evaluate
  auto* eva = app.add_subcommand("evaluate", "compare a report against ground truth");
  std::string report_path, truth_path;
  eva->add_option("--report", report_path, "report JSON")->required();
  eva->add_option("--truth", truth_path, "ground-truth JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      return run_simulate(type, n_csv, targets, sensors, heights_csv, tilt, noise_t, noise_r,
                          noise_on_a, seed, out_poses, out_truth);
    }
    if (cal->parsed()) {
      return run_calibrate(pose_path, norm_entries, cal_seed, ransac_iters, planar_auto, gap_tol,
                           out_report);
    }
    if (eva->parsed()) {
      return run_evaluate(report_path, truth_path);
    }
  } catch (const herw::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
