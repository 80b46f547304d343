#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "handgen/errors.hpp"
#include "handgen/skeleton.hpp"

namespace handgen {

inline constexpr int kAzimuthBins = 12;
inline constexpr int kElevationBins = 6;
inline constexpr int kArticulationClusters = 32;
inline constexpr double kBinWidthDeg = 30.0;
inline constexpr double kDefaultClosedThresholdDeg = 90.0;

class DegeneratePalm : public ValidationError {
 public:
  DegeneratePalm() : ValidationError("palm triangle is degenerate") {}
};

class DegenerateBone : public ValidationError {
 public:
  explicit DegenerateBone(int finger)
      : ValidationError(std::string("zero-length bone in the ") + finger_name(finger) + " chain"),
        finger_(finger) {}
  int finger() const noexcept { return finger_; }

 private:
  int finger_;
};

struct Viewpoint {
  double azimuth_deg = 0.0;    // [-180, 180)
  double elevation_deg = 0.0;  // [-90, 90]
};

struct AxisLabels {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
  int azimuth_bin = 0;
  int elevation_bin = 0;
  int articulation_cluster = 0;
  std::string shape_id;
  std::optional<std::string> object_id;

  friend bool operator==(const AxisLabels&, const AxisLabels&) = default;
};

struct LabeledFrame {
  std::string frame_id;
  AxisLabels labels;

  friend bool operator==(const LabeledFrame&, const LabeledFrame&) = default;
};

/// Unit palm normal (middle_MCP - wrist) x (index_MCP - ring_MCP).
/// Throws DegeneratePalm when the cross product is shorter than 1e-9 mm^2.
Vec3 palm_normal(const Skeleton& sk);

/// Azimuth atan2(n_x, n_z), elevation asin(n_y), camera +z forward. The
/// azimuth is 0 at the poles.
Viewpoint viewpoint(const Skeleton& sk);
Viewpoint viewpoint_from_normal(const Vec3& unit_normal);

/// 30-degree bins; elevation +90 belongs to the top bin.
std::pair<int, int> viewpoint_bins(double azimuth_deg, double elevation_deg);

/// Sum of the two bend angles along MCP-PIP-DIP-TIP, in degrees.
double finger_curl(const Skeleton& sk, int finger);

/// 5-bit code, thumb in the most significant bit; 1 = open, 0 = closed
/// (curl above the threshold).
int articulation_cluster(const Skeleton& sk, double closed_threshold_deg = kDefaultClosedThresholdDeg);

/// "10111" style rendering of a cluster id.
std::string cluster_code(int cluster);

AxisLabels annotate_frame(const Frame& frame, double closed_threshold_deg = kDefaultClosedThresholdDeg);

struct AnnotationFailure {
  std::string frame_id;
  std::string error;
};

struct AnnotationResult {
  std::vector<LabeledFrame> labels;  // input order, failed frames omitted
  std::vector<AnnotationFailure> failures;
};

/// Per-frame failures are collected, never thrown.
AnnotationResult annotate(std::span<const Frame> frames, double closed_threshold_deg = kDefaultClosedThresholdDeg,
                          int threads = 1);

std::string labels_to_json_line(const LabeledFrame& lf);
std::vector<LabeledFrame> load_labels(const std::filesystem::path& path);
std::vector<LabeledFrame> parse_labels(std::istream& in, const std::string& source = "<stream>");
void save_labels(std::span<const LabeledFrame> labels, const std::filesystem::path& path);

}  // namespace handgen
