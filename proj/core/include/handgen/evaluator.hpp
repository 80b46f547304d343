#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "handgen/split.hpp"

namespace handgen {

class EmptySubset : public ValidationError {
 public:
  EmptySubset() : ValidationError("cannot evaluate an empty subset") {}
};

class MissingCriterion : public ValidationError {
 public:
  explicit MissingCriterion(std::string method)
      : ValidationError("method \"" + method + "\" has no Extrapolation result"), method_(std::move(method)) {}
  const std::string& method() const noexcept { return method_; }

 private:
  std::string method_;
};

class UnknownFrameId : public ValidationError {
 public:
  explicit UnknownFrameId(const std::string& id) : ValidationError("unknown frame_id \"" + id + "\"") {}
};

/// Threshold grid in mm, 0..max step `step` inclusive.
std::vector<double> threshold_grid(double max_mm = 80.0, double step_mm = 1.0);

struct SuccessCurve {
  std::vector<double> thresholds;
  std::vector<double> rates;

  friend bool operator==(const SuccessCurve&, const SuccessCurve&) = default;
};

struct SubsetScore {
  std::optional<double> mje_mm;  // empty when no prediction matched
  SuccessCurve frame_curve;
  SuccessCurve joint_curve;
  std::size_t frames = 0;
  std::size_t matched = 0;
  std::size_t missing = 0;

  friend bool operator==(const SubsetScore&, const SubsetScore&) = default;
};

double mje(const Prediction& pred, const Skeleton& truth);

/// Predictions and ground truth indexed by frame id. Building the index
/// rejects duplicate ids.
class ScoringIndex {
 public:
  ScoringIndex(std::span<const Frame> truth, std::span<const Prediction> preds);

  const Frame* frame(const std::string& id) const;
  const Prediction* prediction(const std::string& id) const;
  /// Prediction ids without a ground-truth frame, sorted.
  const std::vector<std::string>& unresolved() const { return unresolved_; }

 private:
  std::unordered_map<std::string, const Frame*> frames_;
  std::unordered_map<std::string, const Prediction*> preds_;
  std::vector<std::string> unresolved_;
};

/// A frame succeeds at d when its largest joint error is < d (or exactly 0),
/// a joint when its error is. Missing predictions fail at every threshold and
/// are left out of the MJE. Frames are reduced in sorted id order.
SubsetScore evaluate(const ScoringIndex& index, std::span<const std::string> subset,
                     const std::vector<double>& thresholds = threshold_grid());
SubsetScore evaluate(std::span<const Prediction> preds, std::span<const Frame> frames,
                     std::span<const std::string> subset, const std::vector<double>& thresholds = threshold_grid());

enum class LabelKind { kAzimuthBin, kElevationBin, kArticulationCluster, kShape, kObject };
const char* label_kind_name(LabelKind k);
/// Tables reported for an active axis (viewpoint gives azimuth and elevation).
std::vector<LabelKind> label_kinds(Axis a);

struct LabelRow {
  std::string label;
  std::optional<double> mje_mm;  // empty when count is 0
  bool seen = false;
  std::size_t frames = 0;
  std::size_t count = 0;  // frames with a prediction

  friend bool operator==(const LabelRow&, const LabelRow&) = default;
};

/// One row per label value present among `subset`, in label order (numeric
/// for bins and clusters).
std::vector<LabelRow> per_label_breakdown(const ScoringIndex& index, std::span<const LabeledFrame> labels,
                                          std::span<const std::string> subset, LabelKind kind,
                                          const SeenSpec& spec);

struct CriterionReport {
  SubsetScore score;
  std::map<std::string, std::vector<LabelRow>> breakdowns;  // label kind name -> rows

  friend bool operator==(const CriterionReport&, const CriterionReport&) = default;
};

struct MethodReport {
  std::map<std::string, CriterionReport> criteria;  // criterion name -> report
  std::size_t predictions = 0;

  friend bool operator==(const MethodReport&, const MethodReport&) = default;
};

struct RankEntry {
  std::string method;
  double extrapolation_mje = 0.0;
  std::optional<double> interpolation_mje;

  friend bool operator==(const RankEntry&, const RankEntry&) = default;
};

/// Ascending Extrapolation MJE, then Interpolation MJE (missing sorts last),
/// then name. Throws MissingCriterion.
std::vector<RankEntry> rank_methods(const std::map<std::string, MethodReport>& reports);

struct EvalReport {
  std::map<std::string, MethodReport> methods;
  std::vector<RankEntry> ranking;
  std::vector<double> thresholds;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Scores every applicable criterion of the split. Empty criteria get an
/// empty score. Labels are optional; without them no breakdowns are built.
/// Throws UnknownFrameId when a prediction does not resolve.
MethodReport evaluate_method(std::span<const Prediction> preds, std::span<const Frame> frames, const Split& split,
                             std::span<const LabeledFrame> labels = {},
                             const std::vector<double>& thresholds = threshold_grid());

}  // namespace handgen
