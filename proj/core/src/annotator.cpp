#include "handgen/annotator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "handgen/file_util.hpp"
#include "handgen/parallel.hpp"

namespace handgen {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;
constexpr double kMinPalmArea = 1e-9;
constexpr double kMinBone = 1e-9;

double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)) * kDeg; }

}  // namespace

Vec3 palm_normal(const Skeleton& sk) {
  const Vec3 up = sk.joint(joint_index(Finger::kMiddle, FingerJoint::kMcp)) - sk.joint(kWrist);
  const Vec3 across = sk.joint(joint_index(Finger::kIndex, FingerJoint::kMcp)) -
                      sk.joint(joint_index(Finger::kRing, FingerJoint::kMcp));
  const Vec3 n = up.cross(across);
  const double len = n.norm();
  if (!(len >= kMinPalmArea)) throw DegeneratePalm();
  return n / len;
}

Viewpoint viewpoint_from_normal(const Vec3& n) {
  Viewpoint v;
  v.elevation_deg = std::asin(std::clamp(n.y(), -1.0, 1.0)) * kDeg;
  if (std::hypot(n.x(), n.z()) < 1e-12) {
    v.azimuth_deg = 0.0;
  } else {
    double az = std::atan2(n.x(), n.z()) * kDeg;
    if (az >= 180.0) az -= 360.0;
    v.azimuth_deg = az;
  }
  return v;
}

Viewpoint viewpoint(const Skeleton& sk) { return viewpoint_from_normal(palm_normal(sk)); }

std::pair<int, int> viewpoint_bins(double azimuth_deg, double elevation_deg) {
  if (!std::isfinite(azimuth_deg) || !std::isfinite(elevation_deg)) {
    throw ValidationError("viewpoint angles must be finite");
  }
  // Out-of-range azimuths are wrapped so every finite angle lands in one bin.
  double az = std::remainder(azimuth_deg, 360.0);
  if (az >= 180.0) az -= 360.0;
  const int az_bin = std::clamp(static_cast<int>(std::floor((az + 180.0) / kBinWidthDeg)), 0, kAzimuthBins - 1);
  const double el = std::clamp(elevation_deg, -90.0, 90.0);
  const int el_bin = std::clamp(static_cast<int>(std::floor((el + 90.0) / kBinWidthDeg)), 0, kElevationBins - 1);
  return {az_bin, el_bin};
}

double finger_curl(const Skeleton& sk, int finger) {
  if (finger < 0 || finger >= kNumFingers) throw ValidationError("finger index out of range");
  std::array<Vec3, 3> seg;
  for (int i = 0; i < 3; ++i) {
    seg[static_cast<std::size_t>(i)] = sk.joint(joint_index(finger, i + 1)) - sk.joint(joint_index(finger, i));
    if (!(seg[static_cast<std::size_t>(i)].norm() >= kMinBone)) throw DegenerateBone(finger);
  }
  return angle_between(seg[0], seg[1]) + angle_between(seg[1], seg[2]);
}

int articulation_cluster(const Skeleton& sk, double closed_threshold_deg) {
  int code = 0;
  for (int f = 0; f < kNumFingers; ++f) {
    const bool open = !(finger_curl(sk, f) > closed_threshold_deg);
    code = (code << 1) | (open ? 1 : 0);
  }
  return code;
}

std::string cluster_code(int cluster) {
  if (cluster < 0 || cluster >= kArticulationClusters) throw ValidationError("cluster id out of range");
  std::string s(kNumFingers, '0');
  for (int f = 0; f < kNumFingers; ++f) {
    if ((cluster >> (kNumFingers - 1 - f)) & 1) s[static_cast<std::size_t>(f)] = '1';
  }
  return s;
}

AxisLabels annotate_frame(const Frame& frame, double closed_threshold_deg) {
  AxisLabels l;
  const Viewpoint v = viewpoint(frame.skeleton);
  l.azimuth_deg = v.azimuth_deg;
  l.elevation_deg = v.elevation_deg;
  std::tie(l.azimuth_bin, l.elevation_bin) = viewpoint_bins(v.azimuth_deg, v.elevation_deg);
  l.articulation_cluster = articulation_cluster(frame.skeleton, closed_threshold_deg);
  l.shape_id = frame.subject_id;
  l.object_id = frame.object_id;
  return l;
}

AnnotationResult annotate(std::span<const Frame> frames, double closed_threshold_deg, int threads) {
  std::vector<std::optional<AxisLabels>> labels(frames.size());
  std::vector<std::string> errors(frames.size());
  parallel_for(frames.size(), threads, [&](std::size_t i) {
    try {
      labels[i] = annotate_frame(frames[i], closed_threshold_deg);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  AnnotationResult out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (labels[i]) {
      out.labels.push_back({frames[i].frame_id, std::move(*labels[i])});
    } else {
      out.failures.push_back({frames[i].frame_id, std::move(errors[i])});
    }
  }
  return out;
}

using nlohmann::ordered_json;

std::string labels_to_json_line(const LabeledFrame& lf) {
  ordered_json j;
  j["frame_id"] = lf.frame_id;
  j["azimuth_deg"] = lf.labels.azimuth_deg;
  j["elevation_deg"] = lf.labels.elevation_deg;
  j["azimuth_bin"] = lf.labels.azimuth_bin;
  j["elevation_bin"] = lf.labels.elevation_bin;
  j["articulation_cluster"] = lf.labels.articulation_cluster;
  j["shape_id"] = lf.labels.shape_id;
  j["object_id"] = lf.labels.object_id ? ordered_json(*lf.labels.object_id) : ordered_json(nullptr);
  return j.dump();
}

std::vector<LabeledFrame> parse_labels(std::istream& in, const std::string& source) {
  std::vector<LabeledFrame> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LabeledFrame lf;
      lf.frame_id = j.at("frame_id").get<std::string>();
      auto& l = lf.labels;
      l.azimuth_deg = j.at("azimuth_deg").get<double>();
      l.elevation_deg = j.at("elevation_deg").get<double>();
      l.azimuth_bin = j.at("azimuth_bin").get<int>();
      l.elevation_bin = j.at("elevation_bin").get<int>();
      l.articulation_cluster = j.at("articulation_cluster").get<int>();
      l.shape_id = j.at("shape_id").get<std::string>();
      if (auto it = j.find("object_id"); it != j.end() && !it->is_null()) l.object_id = it->get<std::string>();
      if (l.azimuth_bin < 0 || l.azimuth_bin >= kAzimuthBins || l.elevation_bin < 0 ||
          l.elevation_bin >= kElevationBins || l.articulation_cluster < 0 ||
          l.articulation_cluster >= kArticulationClusters) {
        throw ParseError(source, line_no, "label id out of range");
      }
      out.push_back(std::move(lf));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  return out;
}

std::vector<LabeledFrame> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_labels(in, path.string());
}

void save_labels(std::span<const LabeledFrame> labels, const std::filesystem::path& path) {
  std::string buf;
  for (const auto& l : labels) {
    buf += labels_to_json_line(l);
    buf += '\n';
  }
  write_file_atomic(path, buf);
}

}  // namespace handgen
