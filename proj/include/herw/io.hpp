#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "herw/herw.hpp"
#include "herw/synth.hpp"

namespace herw {

inline constexpr const char* kPoseFileHeader = "# herw-poses v1";
inline constexpr const char* kReportFormatVersion = "herw-report v1";
inline constexpr const char* kToolVersion = "0.1.0";

// One line of a pose file. Frame A carries the geo-referenced pose of the
// target's carrier (no sensor id); frame B carries a detection.
struct PoseRecord {
  char kind = 'A';  // 'A' or 'B'
  int step = 0;
  int target = 0;
  int sensor = -1;  // absent for A records
  Vec3 translation = Vec3::Zero();
  Quaternion rotation;
  std::optional<double> timestamp;
};

struct ParsedPoses {
  HERWProblem problem;
  std::vector<std::string> warnings;
};

// Line-delimited pose file with a versioned header. A records are matched to
// B records by (step, target); a B without its A is a consistency error.
ParsedPoses parse_poses(std::istream& in);
ParsedPoses parse_pose_file(const std::string& path);

void write_poses(std::ostream& out, const std::vector<PoseRecord>& records);
std::vector<PoseRecord> pose_records(const Scenario& scenario);
void write_pose_file(const std::string& path, const Scenario& scenario);

// Per-pair RMS of the transformation-cycle error under the estimate.
struct PairCycleRms {
  int target = 0;
  int sensor = 0;
  double translation_m = 0.0;
  double rotation_deg = 0.0;
};

// Machine-readable calibration report (JSON).
struct CalibReport {
  std::string format_version = kReportFormatVersion;
  std::string tool_version = kToolVersion;
  std::string input_digest;  // fnv1a-64 of the input bytes, hex
  std::uint64_t seed = 0;
  CalibrationResult result;
  std::vector<PairCycleRms> pair_metrics;
};

std::vector<PairCycleRms> compute_pair_metrics(const HERWProblem& problem,
                                               const CalibrationResult& result);

std::string to_json(const CalibReport& report);
CalibReport report_from_json(const std::string& text);
void save_report(const std::string& path, const CalibReport& report);
CalibReport load_report(const std::string& path);

// Ground-truth file (JSON) with the X and Y poses, written by `simulate`.
struct GroundTruth {
  std::vector<Pose> X;
  std::vector<Pose> Y;
  std::vector<double> target_norms;
};

void save_truth(const std::string& path, const GroundTruth& truth);
GroundTruth load_truth(const std::string& path);

std::string fnv1a_hex(const std::string& bytes);
std::string read_file(const std::string& path);

}  // namespace herw
