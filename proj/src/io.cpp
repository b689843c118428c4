#include "herw/io.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "herw/metrics.hpp"

namespace herw {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void parse_fail(int line, const std::string& what) {
  std::ostringstream msg;
  msg << "line " << line << ": " << what;
  throw Error(ErrorCategory::ParseError, msg.str());
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::ParseError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ParsedPoses parse_poses(std::istream& in) {
  ParsedPoses out;
  std::string line;
  int line_no = 0;
  bool header_seen = false;

  std::map<std::pair<int, int>, Pose> a_poses;                 // (step, target)
  std::map<std::tuple<int, int, int>, std::pair<Pose, int>> b_poses;  // (step, target, sensor)

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!header_seen) {
      std::string trimmed = line;
      while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == ' ')) {
        trimmed.pop_back();
      }
      if (trimmed != kPoseFileHeader) parse_fail(line_no, "missing pose file header");
      header_seen = true;
      continue;
    }
    if (line[0] == '#') continue;

    std::istringstream ss(line);
    std::string kind, sensor_tok;
    int step = 0, target = 0;
    double tx, ty, tz, qw, qx, qy, qz;
    if (!(ss >> kind >> step >> target >> sensor_tok >> tx >> ty >> tz >> qw >> qx >> qy >> qz)) {
      parse_fail(line_no, "malformed record");
    }
    double ts;
    ss >> ts;  // optional timestamp, ignored for the problem itself
    if (kind != "A" && kind != "B") parse_fail(line_no, "unknown frame kind '" + kind + "'");
    if (step < 0 || target < 0) parse_fail(line_no, "negative index");

    Quaternion q{qw, qx, qy, qz};
    const double n = q.norm();
    if (n < 1e-9) parse_fail(line_no, "zero rotation quaternion");
    if (std::abs(n - 1.0) > 1e-3) {
      std::ostringstream w;
      w << "line " << line_no << ": rotation norm " << n << " renormalized";
      out.warnings.push_back(w.str());
    }
    // Keep already-unit inputs bit-exact so written files round-trip.
    if (std::abs(n - 1.0) > 1e-12) q = q.scaled(1.0 / n);
    const Pose pose{q, Vec3(tx, ty, tz)};

    if (kind == "A") {
      if (sensor_tok != "-") parse_fail(line_no, "A record must not carry a sensor id");
      if (!a_poses.emplace(std::make_pair(step, target), pose).second) {
        throw Error(ErrorCategory::ConsistencyError,
                    "line " + std::to_string(line_no) + ": duplicate A record");
      }
    } else {
      int sensor = -1;
      try {
        sensor = std::stoi(sensor_tok);
      } catch (...) {
        parse_fail(line_no, "B record needs a sensor id");
      }
      if (sensor < 0) parse_fail(line_no, "negative sensor id");
      if (!b_poses.emplace(std::make_tuple(step, target, sensor), std::make_pair(pose, line_no))
               .second) {
        throw Error(ErrorCategory::ConsistencyError,
                    "line " + std::to_string(line_no) + ": duplicate B record");
      }
    }
  }
  if (!header_seen) throw Error(ErrorCategory::EmptyProblem, "empty pose file");
  if (b_poses.empty()) throw Error(ErrorCategory::EmptyProblem, "pose file has no detections");

  int max_target = -1, max_sensor = -1;
  for (const auto& [key, value] : b_poses) {
    const auto [step, target, sensor] = key;
    const auto a = a_poses.find({step, target});
    if (a == a_poses.end()) {
      throw Error(ErrorCategory::ConsistencyError,
                  "line " + std::to_string(value.second) + ": detection without matching A at step " +
                      std::to_string(step));
    }
    Measurement m;
    m.step = step;
    m.target = target;
    m.sensor = sensor;
    m.A = a->second;
    m.B = value.first;
    out.problem.detections.push_back(m);
    max_target = std::max(max_target, target);
    max_sensor = std::max(max_sensor, sensor);
  }
  for (const auto& [key, pose] : a_poses) {
    max_target = std::max(max_target, key.second);
  }
  out.problem.num_targets = max_target + 1;
  out.problem.num_sensors = max_sensor + 1;
  return out;
}

ParsedPoses parse_pose_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::ParseError, "cannot open " + path);
  return parse_poses(in);
}

void write_poses(std::ostream& out, const std::vector<PoseRecord>& records) {
  out << kPoseFileHeader << "\n";
  out << "# kind step target sensor tx ty tz qw qx qy qz [timestamp]\n";
  for (const auto& r : records) {
    out << r.kind << ' ' << r.step << ' ' << r.target << ' ';
    if (r.kind == 'A') {
      out << '-';
    } else {
      out << r.sensor;
    }
    out << ' ' << fmt_double(r.translation.x()) << ' ' << fmt_double(r.translation.y()) << ' '
        << fmt_double(r.translation.z()) << ' ' << fmt_double(r.rotation.w) << ' '
        << fmt_double(r.rotation.x) << ' ' << fmt_double(r.rotation.y) << ' '
        << fmt_double(r.rotation.z);
    if (r.timestamp) out << ' ' << fmt_double(*r.timestamp);
    out << "\n";
  }
}

std::vector<PoseRecord> pose_records(const Scenario& scenario) {
  std::vector<PoseRecord> records;
  std::map<std::pair<int, int>, Pose> a_seen;
  for (const auto& d : scenario.detections) {
    a_seen.emplace(std::make_pair(d.step, d.target), d.A);
  }
  for (const auto& [key, pose] : a_seen) {
    PoseRecord r;
    r.kind = 'A';
    r.step = key.first;
    r.target = key.second;
    r.translation = pose.translation;
    r.rotation = pose.rotation;
    records.push_back(r);
  }
  for (const auto& d : scenario.detections) {
    PoseRecord r;
    r.kind = 'B';
    r.step = d.step;
    r.target = d.target;
    r.sensor = d.sensor;
    r.translation = d.B.translation;
    r.rotation = d.B.rotation;
    records.push_back(r);
  }
  return records;
}

void write_pose_file(const std::string& path, const Scenario& scenario) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::ParseError, "cannot write " + path);
  write_poses(out, pose_records(scenario));
}

// ---------------------------------------------------------------------------
// JSON report
// ---------------------------------------------------------------------------

namespace {

json pose_to_json(const Pose& p) {
  return json{{"t", {p.translation.x(), p.translation.y(), p.translation.z()}},
              {"q", {p.rotation.w, p.rotation.x, p.rotation.y, p.rotation.z}}};
}

Pose pose_from_json(const json& j) {
  Pose p;
  p.translation = Vec3(j.at("t")[0], j.at("t")[1], j.at("t")[2]);
  p.rotation = {j.at("q")[0], j.at("q")[1], j.at("q")[2], j.at("q")[3]};
  return p;
}

json vec3_to_json(const Vec3& v) { return json{v.x(), v.y(), v.z()}; }

Vec3 vec3_from_json(const json& j) { return Vec3(j[0], j[1], j[2]); }

RecoveryMode recovery_mode_from_string(const std::string& s) {
  if (s == "nullspace-1") return RecoveryMode::Nullspace1;
  if (s == "nullspace-2") return RecoveryMode::Nullspace2;
  if (s == "local-refined") return RecoveryMode::LocalRefined;
  throw Error(ErrorCategory::ParseError, "unknown recovery mode " + s);
}

}  // namespace

std::vector<PairCycleRms> compute_pair_metrics(const HERWProblem& problem,
                                               const CalibrationResult& result) {
  std::map<std::pair<int, int>, std::vector<CalibError>> by_pair;
  for (const auto& d : problem.detections) {
    by_pair[{d.target, d.sensor}].push_back(
        cycle_error(d.A, result.X[d.target], d.B, result.Y[d.sensor]));
  }
  std::vector<PairCycleRms> out;
  for (const auto& [key, errors] : by_pair) {
    const CalibError r = rms(errors);
    out.push_back({key.first, key.second, r.translation_m, r.rotation_deg});
  }
  return out;
}

std::string to_json(const CalibReport& report) {
  const auto& r = report.result;
  json j;
  j["format"] = report.format_version;
  j["tool_version"] = report.tool_version;
  j["input_digest"] = report.input_digest;
  j["seed"] = report.seed;

  json jr;
  jr["X"] = json::array();
  for (const auto& p : r.X) jr["X"].push_back(pose_to_json(p));
  jr["Y"] = json::array();
  for (const auto& p : r.Y) jr["Y"].push_back(pose_to_json(p));
  jr["residual_cost"] = r.residual_cost;
  jr["certified_global"] = r.certified_global;
  jr["planar_corrected"] = r.planar_corrected;
  jr["recovery_mode"] = to_string(r.recovery_mode);

  json cert;
  cert["lambda"] = std::vector<double>(r.certificate.lambda.data(),
                                       r.certificate.lambda.data() + r.certificate.lambda.size());
  cert["dual_value"] = r.certificate.dual_value;
  cert["min_eig_Z"] = r.certificate.min_eig_Z;
  cert["gap"] = r.certificate.gap;
  cert["certified_global"] = r.certificate.certified_global;
  jr["certificate"] = cert;

  jr["sign_assignments"] = json::array();
  for (const auto& sa : r.sign_assignments) {
    jr["sign_assignments"].push_back(
        json{{"target", sa.target}, {"sensor", sa.sensor}, {"signs", sa.signs}});
  }
  jr["corrections"] = json::array();
  for (const auto& c : r.corrections) {
    jr["corrections"].push_back(json{{"target", c.target},
                                     {"gamma", c.gamma},
                                     {"applied", c.applied},
                                     {"shift_x", vec3_to_json(c.shift_x)},
                                     {"shift_y", vec3_to_json(c.shift_y)}});
  }

  j["pair_metrics"] = json::array();
  for (const auto& pm : report.pair_metrics) {
    j["pair_metrics"].push_back(json{{"target", pm.target},
                                     {"sensor", pm.sensor},
                                     {"cycle_rms_t", pm.translation_m},
                                     {"cycle_rms_r", pm.rotation_deg}});
  }

  json obs;
  obs["planar"] = r.observability.planar;
  obs["observable"] = r.observability.observable;
  obs["norm_prior_required"] = r.observability.norm_prior_required;
  obs["out_of_plane_rms"] = r.observability.out_of_plane_rms;
  obs["collective_axis_spread"] = r.observability.collective_axis_spread;
  obs["collective_effective_motions"] = r.observability.collective_effective_motions;
  obs["common_axis_dev_deg"] = r.observability.common_axis_dev_deg;
  jr["observability"] = obs;

  j["result"] = jr;
  return j.dump(2);
}

CalibReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCategory::ParseError, std::string("report JSON: ") + e.what());
  }
  CalibReport report;
  try {
    report.format_version = j.at("format");
    report.tool_version = j.at("tool_version");
    report.input_digest = j.at("input_digest");
    report.seed = j.at("seed");
    const json& jr = j.at("result");
    auto& r = report.result;
    for (const auto& p : jr.at("X")) r.X.push_back(pose_from_json(p));
    for (const auto& p : jr.at("Y")) r.Y.push_back(pose_from_json(p));
    r.residual_cost = jr.at("residual_cost");
    r.certified_global = jr.at("certified_global");
    r.planar_corrected = jr.at("planar_corrected");
    r.recovery_mode = recovery_mode_from_string(jr.at("recovery_mode"));
    const json& cert = jr.at("certificate");
    const std::vector<double> lambda = cert.at("lambda");
    r.certificate.lambda = Eigen::Map<const Eigen::VectorXd>(lambda.data(), lambda.size());
    r.certificate.dual_value = cert.at("dual_value");
    r.certificate.min_eig_Z = cert.at("min_eig_Z");
    r.certificate.gap = cert.at("gap");
    r.certificate.certified_global = cert.at("certified_global");
    for (const auto& sa : jr.at("sign_assignments")) {
      r.sign_assignments.push_back(
          {sa.at("target"), sa.at("sensor"), sa.at("signs").get<std::vector<int>>()});
    }
    for (const auto& c : jr.at("corrections")) {
      r.corrections.push_back({c.at("target"), c.at("gamma"), c.at("applied"),
                               vec3_from_json(c.at("shift_x")), vec3_from_json(c.at("shift_y"))});
    }
    for (const auto& pm : j.at("pair_metrics")) {
      report.pair_metrics.push_back(
          {pm.at("target"), pm.at("sensor"), pm.at("cycle_rms_t"), pm.at("cycle_rms_r")});
    }
    const json& obs = jr.at("observability");
    r.observability.planar = obs.at("planar");
    r.observability.observable = obs.at("observable");
    r.observability.norm_prior_required = obs.at("norm_prior_required");
    r.observability.out_of_plane_rms = obs.at("out_of_plane_rms");
    r.observability.collective_axis_spread = obs.at("collective_axis_spread");
    r.observability.collective_effective_motions = obs.at("collective_effective_motions");
    r.observability.common_axis_dev_deg = obs.at("common_axis_dev_deg");
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::ParseError, std::string("report JSON: ") + e.what());
  }
  return report;
}

void save_report(const std::string& path, const CalibReport& report) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::ParseError, "cannot write " + path);
  out << to_json(report) << "\n";
}

CalibReport load_report(const std::string& path) { return report_from_json(read_file(path)); }

void save_truth(const std::string& path, const GroundTruth& truth) {
  json j;
  j["X"] = json::array();
  for (const auto& p : truth.X) j["X"].push_back(pose_to_json(p));
  j["Y"] = json::array();
  for (const auto& p : truth.Y) j["Y"].push_back(pose_to_json(p));
  j["target_norms"] = truth.target_norms;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::ParseError, "cannot write " + path);
  out << j.dump(2) << "\n";
}

GroundTruth load_truth(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw Error(ErrorCategory::ParseError, std::string("truth JSON: ") + e.what());
  }
  GroundTruth truth;
  try {
    for (const auto& p : j.at("X")) truth.X.push_back(pose_from_json(p));
    for (const auto& p : j.at("Y")) truth.Y.push_back(pose_from_json(p));
    truth.target_norms = j.at("target_norms").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::ParseError, std::string("truth JSON: ") + e.what());
  }
  return truth;
}

}  // namespace herw
