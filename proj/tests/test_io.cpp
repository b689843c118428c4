#include <doctest.h>

#include <sstream>

#include "herw/io.hpp"
#include "herw/metrics.hpp"
#include "herw/synth.hpp"

using namespace herw;

TEST_CASE("pose file round-trips to the identical problem") {
  const Scenario sc = generate_general(15, 2, 1, 201);
  std::ostringstream out;
  write_poses(out, pose_records(sc));

  std::istringstream in(out.str());
  const ParsedPoses parsed = parse_poses(in);
  CHECK(parsed.warnings.empty());
  CHECK(parsed.problem.num_targets == 2);
  CHECK(parsed.problem.num_sensors == 1);
  REQUIRE(parsed.problem.detections.size() == sc.detections.size());

  const HERWProblem original = sc.problem();
  for (const auto& d : parsed.problem.detections) {
    bool found = false;
    for (const auto& o : original.detections) {
      if (o.step == d.step && o.target == d.target && o.sensor == d.sensor) {
        found = true;
        CHECK(o.A.translation == d.A.translation);
        CHECK(o.A.rotation.vec() == d.A.rotation.vec());
        CHECK(o.B.translation == d.B.translation);
        CHECK(o.B.rotation.vec() == d.B.rotation.vec());
      }
    }
    CHECK(found);
  }
}

TEST_CASE("pose file error handling") {
  {
    std::istringstream in("");
    CHECK_THROWS_AS(parse_poses(in), Error);
  }
  {
    std::istringstream in("# herw-poses v1\n");
    try {
      parse_poses(in);
      FAIL("expected empty-problem");
    } catch (const Error& e) {
      CHECK(e.category() == ErrorCategory::EmptyProblem);
    }
  }
  {
    std::istringstream in("# herw-poses v1\nA 0 0 - 1 2 3 1 0 0\n");
    try {
      parse_poses(in);
      FAIL("expected parse error with position");
    } catch (const Error& e) {
      CHECK(e.category() == ErrorCategory::ParseError);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  {
    // Detection without a matching carrier pose.
    std::istringstream in("# herw-poses v1\nB 0 0 0 1 2 3 1 0 0 0\n");
    try {
      parse_poses(in);
      FAIL("expected consistency error");
    } catch (const Error& e) {
      CHECK(e.category() == ErrorCategory::ConsistencyError);
    }
  }
  {
    // Non-unit quaternion: renormalized with a warning.
    std::istringstream in(
        "# herw-poses v1\n"
        "A 0 0 - 0 0 0 1.01 0 0 0\n"
        "B 0 0 0 1 2 3 1 0 0 0\n");
    const ParsedPoses parsed = parse_poses(in);
    REQUIRE(parsed.warnings.size() == 1);
    CHECK(parsed.warnings[0].find("renormalized") != std::string::npos);
    CHECK(parsed.problem.detections[0].A.rotation.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    // Missing header.
    std::istringstream in("A 0 0 - 0 0 0 1 0 0 0\n");
    CHECK_THROWS_AS(parse_poses(in), Error);
  }
}

TEST_CASE("calibration report round-trips losslessly") {
  const Scenario sc = add_noise(generate_general(10, 1, 1, 203), 0.005, 0.05, 204);
  CalibReport report;
  report.input_digest = fnv1a_hex("some input bytes");
  report.seed = 7;
  report.result = calibrate(sc.problem(), {});
  report.pair_metrics = compute_pair_metrics(sc.problem(), report.result);
  REQUIRE(report.pair_metrics.size() == 1);

  const std::string first = to_json(report);
  const CalibReport parsed = report_from_json(first);
  const std::string second = to_json(parsed);
  CHECK(first == second);

  CHECK(parsed.result.certified_global == report.result.certified_global);
  CHECK(parsed.result.residual_cost == report.result.residual_cost);
  CHECK(parsed.result.certificate.gap == report.result.certificate.gap);
  CHECK(parsed.result.X[0].translation == report.result.X[0].translation);
}

TEST_CASE("truth files round-trip") {
  const Scenario sc = generate_general(5, 2, 2, 205);
  const std::string path = "/tmp/herw_truth_test.json";
  save_truth(path, {sc.X, sc.Y, sc.target_norms});
  const GroundTruth loaded = load_truth(path);
  REQUIRE(loaded.X.size() == 2);
  REQUIRE(loaded.Y.size() == 2);
  for (int t = 0; t < 2; ++t) {
    CHECK(calib_error(sc.X[t], loaded.X[t]).translation_m < 1e-15);
  }
  CHECK(loaded.target_norms == sc.target_norms);
}

TEST_CASE("fnv1a digest is stable") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") != fnv1a_hex("b"));
}

TEST_CASE("write-parse-calibrate pipeline stays certified") {
  const Scenario sc = generate_general(15, 1, 1, 207);
  const std::string path = "/tmp/herw_poses_test.txt";
  write_pose_file(path, sc);
  const ParsedPoses parsed = parse_pose_file(path);
  const CalibrationResult r = calibrate(parsed.problem, {});
  CHECK(r.certified_global);
  CHECK(calib_error(sc.X[0], r.X[0]).translation_m < 1e-6);
  CHECK(calib_error(sc.Y[0], r.Y[0]).translation_m < 1e-6);
}
