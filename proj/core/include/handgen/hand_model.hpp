#pragma once

#include <Eigen/SparseCore>

#include <array>
#include <filesystem>
#include <vector>

#include "handgen/rotation.hpp"
#include "handgen/skeleton.hpp"

namespace handgen {

inline constexpr int kShapeDim = 10;
inline constexpr int kGlobalDim = 8;
inline constexpr int kNumArticulated = 15;
inline constexpr int kArticulationDim = 3 * kNumArticulated;
inline constexpr int kParamDim = kShapeDim + kGlobalDim + kArticulationDim;
/// Skinning bones: the wrist root plus one per articulated joint.
inline constexpr int kNumBones = 1 + kNumArticulated;

// Offsets into the flat 63-vector (shape, global pose, articulation).
inline constexpr int kShapeOffset = 0;
inline constexpr int kQuatOffset = kShapeDim;
inline constexpr int kTranslationOffset = kShapeDim + 4;
inline constexpr int kLogScaleOffset = kShapeDim + 7;
inline constexpr int kArticulationOffset = kShapeDim + kGlobalDim;

using ShapeVector = Eigen::Matrix<double, kShapeDim, 1>;
using GlobalVector = Eigen::Matrix<double, kGlobalDim, 1>;
using ArticulationVector = Eigen::Matrix<double, kArticulationDim, 1>;
using ParamVector = Eigen::Matrix<double, kParamDim, 1>;

/// Skeleton joint driven by articulated bone `bone` (1..15).
constexpr int bone_joint(int bone) { return joint_index((bone - 1) / 3, (bone - 1) % 3); }
/// Articulated bone whose rotation sits at skeleton joint `joint`, or 0 for
/// the wrist. Tips have no bone and return -1.
constexpr int joint_bone(int joint) {
  if (joint == kWrist) return 0;
  int seg = (joint - 1) % kJointsPerFinger;
  if (seg == 3) return -1;
  return 1 + 3 * ((joint - 1) / kJointsPerFinger) + seg;
}
constexpr int bone_parent(int bone) { return (bone - 1) % 3 == 0 ? 0 : bone - 1; }

/// Fitting variables. The global block is a (w, x, y, z) quaternion, a
/// translation in mm and a log scale. Construction normalizes the quaternion
/// and wraps each articulation component into [-pi, pi].
class HandParams {
 public:
  HandParams();
  HandParams(const ShapeVector& shape, const GlobalVector& global, const ArticulationVector& articulation);

  static HandParams from_vector(const ParamVector& v);
  ParamVector to_vector() const;

  const ShapeVector& shape() const { return shape_; }
  const GlobalVector& global() const { return global_; }
  const ArticulationVector& articulation() const { return articulation_; }

  Vec4 quaternion() const { return global_.head<4>(); }
  Vec3 translation() const { return global_.segment<3>(4); }
  double log_scale() const { return global_(7); }
  Vec3 joint_rotation(int bone) const { return articulation_.segment<3>(3 * (bone - 1)); }

  HandParams with_translation(const Vec3& t) const;
  HandParams with_quaternion(const Vec4& q) const;

  friend bool operator==(const HandParams& a, const HandParams& b) {
    return a.shape_ == b.shape_ && a.global_ == b.global_ && a.articulation_ == b.articulation_;
  }

 private:
  void normalize();

  ShapeVector shape_;
  GlobalVector global_;
  ArticulationVector articulation_;
};

using VertexMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using FaceMatrix = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Immutable parametric template. The Laplacian is derived from the faces.
class TemplateMesh {
 public:
  /// Validates the invariants (weights and regressor rows nonnegative and
  /// summing to one, consistent sizes, face indices in range) and builds the
  /// uniform graph Laplacian. Throws ValidationError.
  TemplateMesh(VertexMatrix vertices, FaceMatrix faces, std::array<VertexMatrix, kShapeDim> shape_basis,
               SparseRowMatrix skinning, SparseRowMatrix regressor);

  int vertex_count() const { return static_cast<int>(vertices_.rows()); }
  const VertexMatrix& vertices() const { return vertices_; }
  const FaceMatrix& faces() const { return faces_; }
  const std::array<VertexMatrix, kShapeDim>& shape_basis() const { return shape_basis_; }
  /// The basis stacked as 3N x 10, row-major vertex coordinates per column.
  const Eigen::MatrixXd& shape_matrix() const { return shape_matrix_; }
  const SparseRowMatrix& skinning() const { return skinning_; }
  const SparseRowMatrix& regressor() const { return regressor_; }
  const SparseRowMatrix& laplacian() const { return laplacian_; }
  const SparseRowMatrix& laplacian_transpose() const { return laplacian_t_; }
  const SparseRowMatrix& regressor_transpose() const { return regressor_t_; }

 private:
  VertexMatrix vertices_;
  FaceMatrix faces_;
  std::array<VertexMatrix, kShapeDim> shape_basis_;
  Eigen::MatrixXd shape_matrix_;
  SparseRowMatrix skinning_;
  SparseRowMatrix regressor_;
  SparseRowMatrix regressor_t_;
  SparseRowMatrix laplacian_;
  SparseRowMatrix laplacian_t_;
};

/// Vertices only; faces are those of the template the mesh came from.
struct Mesh {
  VertexMatrix vertices;
};

/// Every intermediate of the forward pass, kept for reverse-mode gradients.
struct ForwardState {
  VertexMatrix shaped;                        // V0 + B s
  std::array<Vec3, kNumBones> rest_joints;    // bone pivots regressed from `shaped`
  std::array<Mat3, kNumBones> local_rotations;
  std::array<Mat3, kNumBones> world_rotations;
  std::array<Vec3, kNumBones> posed_joints;
  VertexMatrix skinned;                       // hand-local, before the global pose
  Mat3 global_rotation;
  double scale = 1.0;
  Vec3 translation;
  VertexMatrix vertices;                      // final, camera frame
};

/// Flat-hand rest skeleton of the default template (wrist at the origin,
/// fingers along +y, palm normal facing -z).
Skeleton canonical_skeleton();

/// Procedural capsule hand with `n_ring_segments` vertices per ring (>= 4).
TemplateMesh build_default_template(int n_ring_segments = 28);

ForwardState forward_state(const HandParams& params, const TemplateMesh& tpl);
Mesh forward(const HandParams& params, const TemplateMesh& tpl);
Skeleton regress_skeleton(const Mesh& mesh, const TemplateMesh& tpl);
Skeleton regress_skeleton(const VertexMatrix& vertices, const TemplateMesh& tpl);
/// Sum over vertices and coordinates of (L * V)^2.
double laplacian_energy(const Mesh& mesh, const TemplateMesh& tpl);
double laplacian_energy(const VertexMatrix& vertices, const TemplateMesh& tpl);

/// Skeleton of the posed model: regress_skeleton(forward(params)).
Skeleton model_skeleton(const HandParams& params, const TemplateMesh& tpl);

/// Single-file JSON (vertices, faces, shape basis, skinning weights, regressor).
void save_template(const TemplateMesh& tpl, const std::filesystem::path& path);
TemplateMesh load_template(const std::filesystem::path& path);
std::string template_to_json(const TemplateMesh& tpl);
TemplateMesh template_from_json(const std::string& text);

// Canonical open/closed finger poses of the default template, used by the
// demo corpus and the articulation taxonomy checks.
inline constexpr double kOpenFlexion = 0.05;
inline constexpr std::array<double, 3> kClosedFlexion = {0.5, 1.5, 1.1};

/// Flexion axis (hand-local) of `finger` in the rest pose.
Vec3 flexion_axis(int finger);

/// Articulation with each finger flexed open or closed per the 5-bit code
/// (bit 4 = thumb ... bit 0 = pinky; 1 = open).
ArticulationVector canonical_articulation(int code);

}  // namespace handgen
