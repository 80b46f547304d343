#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "handgen/errors.hpp"
#include "handgen/skeleton.hpp"

namespace handgen {

class InsufficientData : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnorderedSequence : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class MismatchedFrameIds : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

using ComponentMatrix = Eigen::Matrix<double, Eigen::Dynamic, kPoseDim, Eigen::RowMajor>;

/// Principal directions of flattened skeletons. Rows of `components` are
/// orthonormal and ordered by non-increasing singular value; there are always
/// 63 of them (directions past the data rank complete the basis).
struct PoseBasis {
  PoseVector mean = PoseVector::Zero();
  ComponentMatrix components;
  Eigen::VectorXd singular_values;

  int size() const { return static_cast<int>(components.rows()); }
  /// mean + projection of (pose - mean) onto the first n components.
  PoseVector project(const PoseVector& pose, int n) const;
};

/// Mean-centred SVD of the K x 63 matrix. Throws InsufficientData for K < 2.
PoseBasis fit_pose_basis(std::span<const Skeleton> train);

struct SvdRefineConfig {
  std::vector<int> component_counts = {10, 15, 20, 25, 30, 35, 40, 45, 50};
  std::vector<double> weights = {0.1 / 4.7, 0.1 / 4.7, 0.2 / 4.7, 0.2 / 4.7,
                                 0.4 / 4.7, 0.8 / 4.7, 1.0 / 4.7, 1.8 / 4.7};

  /// Throws ValidationError unless counts are strictly increasing in [1, 63],
  /// weights are nonnegative and the used weights have a positive sum.
  void validate() const;
  /// Candidates actually combined: min(#counts, #weights).
  std::size_t candidates() const { return std::min(component_counts.size(), weights.size()); }
};

/// Weighted mean of the truncated reconstructions, weights renormalized to 1.
PoseVector svd_refine(const PoseVector& pose, const PoseBasis& basis, const SvdRefineConfig& cfg = {});
Prediction svd_refine(const Prediction& pred, const PoseBasis& basis, const SvdRefineConfig& cfg = {});

/// Centred moving average over up to k neighbours on each side; the window is
/// truncated at the ends. `time_index` must be strictly increasing
/// (UnorderedSequence otherwise) and match `seq` in length.
std::vector<Prediction> temporal_smooth(std::span<const Prediction> seq, std::span<const long long> time_index, int k);

/// Smooths each sequence of `frames` separately; predictions of frames
/// without a sequence pass through. Output keeps the input order.
std::vector<Prediction> smooth_by_sequence(std::span<const Prediction> preds, std::span<const Frame> frames, int k);

/// Per-joint weighted mean; uniform when `weights` is empty.
Prediction average_predictions(std::span<const Prediction> preds, std::span<const double> weights = {});

using Predictor = std::function<Prediction(const Frame&)>;

/// n angles evenly spaced over a full turn, starting at 0 (radians).
std::vector<double> evenly_spaced_angles(int n);

/// For each angle the input joints are rotated about the camera z-axis, passed
/// to the predictor and the output rotated back; the results are averaged.
/// Angles whose prediction throws are skipped; at least one must succeed.
Prediction rotation_ensemble(const Predictor& predictor, const Frame& frame, std::span<const double> angles_rad);

std::string pose_basis_to_json(const PoseBasis& basis);
PoseBasis pose_basis_from_json(const std::string& text);
void save_pose_basis(const PoseBasis& basis, const std::filesystem::path& path);
PoseBasis load_pose_basis(const std::filesystem::path& path);

}  // namespace handgen
