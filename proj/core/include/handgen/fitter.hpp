#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "handgen/errors.hpp"
#include "handgen/hand_model.hpp"

namespace handgen {

/// How the fixed-step update scales each coordinate of the gradient.
enum class DescentMetric {
  /// x <- x - step * grad, literally.
  kIdentity,
  /// x <- x - step * M * grad with diagonal M_ii = r / max(h_i, r). h_i is
  /// the curvature of coordinate i at the neutral pose, raised to a
  /// pose-independent lever-arm bound for rotational coordinates, and r is a
  /// fixed reference. Equivalent to the literal update in a fixed linear change
  /// of variables; low-curvature coordinates keep unit scale.
  kNeutralCurvature,
};

struct FitConfig {
  double step_size = 1e-3;
  int iterations = 3000;
  double shape_reg_weight = 1.0;
  double laplacian_weight = 1.0;
  double fd_step = 1e-5;
  DescentMetric metric = DescentMetric::kNeutralCurvature;

  /// Throws ValidationError when a field is out of range.
  void validate() const;
};

struct ObjectiveTerms {
  double skeleton = 0.0;
  double shape = 0.0;
  double laplacian = 0.0;

  double total() const { return skeleton + shape + laplacian; }
};

struct FitResult {
  HandParams params;                   // best-objective iterate
  std::vector<double> objective_trace;  // iterations + 1 values
  double final_skeleton_error = 0.0;   // MJE (mm) of params against the target
  int best_iteration = 0;
};

class NonFiniteObjective : public ValidationError {
 public:
  explicit NonFiniteObjective(int iteration)
      : ValidationError("objective became non-finite at iteration " + std::to_string(iteration) +
                        " (step size too large for this template?)"),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// Squared skeleton distance + weighted squared shape norm + weighted
/// Laplacian energy of the posed mesh.
ObjectiveTerms objective_terms(const HandParams& params, const Skeleton& target, const TemplateMesh& tpl,
                               const FitConfig& cfg);
double objective(const HandParams& params, const Skeleton& target, const TemplateMesh& tpl,
                 const FitConfig& cfg);

/// Analytic gradient over the flat (s, c, a) vector, by reverse accumulation
/// through the global pose, skinning, kinematic chain, joint pivots and shape
/// blend. The quaternion block is projected onto the unit-sphere tangent.
ParamVector gradient(const HandParams& params, const Skeleton& target, const TemplateMesh& tpl,
                     const FitConfig& cfg);

/// Central differences of `objective` with step cfg.fd_step. Perturbed
/// vectors go through HandParams construction, so the quaternion block
/// differentiates the normalized rotation.
ParamVector central_difference_gradient(const HandParams& params, const Skeleton& target,
                                        const TemplateMesh& tpl, const FitConfig& cfg);

using MetricMatrix = Eigen::Matrix<double, kParamDim, kParamDim>;

/// Fixed symmetric positive-definite matrix applied to the gradient in `fit`.
MetricMatrix descent_metric(const TemplateMesh& tpl, const FitConfig& cfg);

/// Neutral shape and articulation, identity rotation, unit scale, translation
/// at the target wrist.
HandParams neutral_init(const Skeleton& target);

/// Neutral shape and articulation with the rigid motion that best maps the
/// template's wrist and five finger-root joints onto the target's (least
/// squares, unit scale). Useful when the target is far from upright.
HandParams palm_aligned_init(const Skeleton& target, const TemplateMesh& tpl);

enum class InitMode { kNeutral, kPalmAligned };

/// Fixed-step descent for cfg.iterations steps. The quaternion is renormalized
/// after each step. Returns the iterate with the lowest objective.
FitResult fit(const Skeleton& target, const HandParams& init, const TemplateMesh& tpl, const FitConfig& cfg);

struct BatchFitEntry {
  std::string frame_id;
  std::optional<FitResult> result;
  std::string error;  // set when result is empty
};

/// Independent fits from the chosen initialization, in input order. Per-frame failures are
/// recorded, not thrown. Results do not depend on `threads`.
std::vector<BatchFitEntry> batch_fit(std::span<const Frame> frames, const TemplateMesh& tpl,
                                     const FitConfig& cfg, int threads = 1, InitMode init = InitMode::kNeutral);

struct FittedParams {
  std::string frame_id;
  HandParams params;
  double final_error_mm = 0.0;
};

std::string fitted_params_to_json_line(const FittedParams& fp);
std::vector<FittedParams> load_fitted_params(const std::filesystem::path& path);
void save_fitted_params(std::span<const FittedParams> records, const std::filesystem::path& path);

}  // namespace handgen
