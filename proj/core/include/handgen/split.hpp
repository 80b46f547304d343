#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "handgen/annotator.hpp"

namespace handgen {

enum class Axis { kViewpoint, kArticulation, kShape, kObject };
enum class Criterion { kExtrapolation, kInterpolation, kViewpoint, kArticulation, kShape, kObject };

inline constexpr std::array<Axis, 4> kAllAxes = {Axis::kViewpoint, Axis::kArticulation, Axis::kShape, Axis::kObject};
inline constexpr std::array<Criterion, 6> kAllCriteria = {Criterion::kExtrapolation, Criterion::kInterpolation,
                                                          Criterion::kViewpoint,     Criterion::kArticulation,
                                                          Criterion::kShape,         Criterion::kObject};

const char* axis_name(Axis a);          // "viewpoint", ...
const char* criterion_name(Criterion c);  // "Extrapolation", ...
Axis parse_axis(const std::string& name);
Criterion parse_criterion(const std::string& name);
Criterion axis_criterion(Axis a);

class InvalidSpec : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Which label values count as present in training. The viewpoint axis is
/// seen when both the azimuth and the elevation bin are.
struct SeenSpec {
  std::set<int> seen_azimuth_bins;
  std::set<int> seen_elevation_bins;
  std::set<int> seen_articulation_clusters;
  std::set<std::string> seen_shape_ids;
  std::set<std::string> seen_object_ids;
  std::set<Axis> active_axes;

  bool active(Axis a) const { return active_axes.count(a) != 0; }
  /// Throws InvalidSpec for no active axes, an empty seen set on an active
  /// axis, or ids outside their range.
  void validate() const;
  /// Whether the label on axis `a` is seen. Throws ValidationError for the
  /// object axis when the frame has no object.
  bool seen(const AxisLabels& l, Axis a) const;
  std::vector<Axis> unseen_axes(const AxisLabels& l) const;

  friend bool operator==(const SeenSpec&, const SeenSpec&) = default;
};

struct DiscardedFrame {
  std::string frame_id;
  std::string reason;
  friend bool operator==(const DiscardedFrame&, const DiscardedFrame&) = default;
};

struct Split {
  SeenSpec spec;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  std::vector<std::string> train;  // sorted
  std::map<Criterion, std::vector<std::string>> subsets;  // applicable criteria only, ids sorted
  std::vector<DiscardedFrame> discarded;
  /// Applicable criteria that ended up empty.
  std::vector<Criterion> empty_criteria;
  /// Non-fatal notes about the spec, e.g. a seen set covering every label.
  std::vector<std::string> warnings;

  std::size_t test_size() const;
  friend bool operator==(const Split&, const Split&) = default;
};

/// Criteria that exist for a spec: Extrapolation, Interpolation and one per
/// active axis.
std::vector<Criterion> applicable_criteria(const SeenSpec& spec);

/// All-seen frames are shuffled with `seed` (after sorting by id) and the first
/// round(train_fraction * n) go to train, the rest to Interpolation. One unseen
/// axis sends a frame to that axis's subset, two or more to Extrapolation.
/// Frames with no object on an active object axis are discarded.
Split build_split(std::span<const LabeledFrame> labels, const SeenSpec& spec, double train_fraction = 0.8,
                  std::uint64_t seed = 0);

struct SplitViolation {
  std::string frame_id;
  std::string rule;
};

std::vector<SplitViolation> verify_split(const Split& split, std::span<const LabeledFrame> labels,
                                         const SeenSpec& spec);

std::string seen_spec_to_json(const SeenSpec& spec);
/// Unknown keys are rejected.
SeenSpec seen_spec_from_json(const std::string& text);
SeenSpec load_seen_spec(const std::filesystem::path& path);

std::string split_to_json(const Split& split);
Split split_from_json(const std::string& text);
void save_split(const Split& split, const std::filesystem::path& path);
Split load_split(const std::filesystem::path& path);

}  // namespace handgen
