#include "handgen/hand_model.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <utility>

#include "handgen/errors.hpp"

namespace handgen {

HandParams::HandParams()
    : shape_(ShapeVector::Zero()), global_(GlobalVector::Zero()), articulation_(ArticulationVector::Zero()) {
  global_(0) = 1.0;
}

HandParams::HandParams(const ShapeVector& shape, const GlobalVector& global,
                       const ArticulationVector& articulation)
    : shape_(shape), global_(global), articulation_(articulation) {
  normalize();
}

void HandParams::normalize() {
  if (!shape_.allFinite() || !global_.allFinite() || !articulation_.allFinite()) {
    throw ValidationError("hand parameters must be finite");
  }
  const double qn = global_.head<4>().norm();
  if (!(qn > 0.0)) throw ValidationError("global rotation quaternion has zero norm");
  global_.head<4>() /= qn;
  for (int i = 0; i < kArticulationDim; ++i) {
    articulation_(i) = std::remainder(articulation_(i), 2.0 * std::numbers::pi);
  }
}

HandParams HandParams::from_vector(const ParamVector& v) {
  return HandParams(v.segment<kShapeDim>(kShapeOffset), v.segment<kGlobalDim>(kQuatOffset),
                    v.segment<kArticulationDim>(kArticulationOffset));
}

ParamVector HandParams::to_vector() const {
  ParamVector v;
  v << shape_, global_, articulation_;
  return v;
}

HandParams HandParams::with_translation(const Vec3& t) const {
  HandParams out = *this;
  out.global_.segment<3>(4) = t;
  return out;
}

HandParams HandParams::with_quaternion(const Vec4& q) const {
  GlobalVector g = global_;
  g.head<4>() = q;
  return HandParams(shape_, g, articulation_);
}

namespace {

void check_rows_stochastic(const SparseRowMatrix& m, const char* name) {
  for (int r = 0; r < m.outerSize(); ++r) {
    double sum = 0.0;
    int nonzero = 0;
    for (SparseRowMatrix::InnerIterator it(m, r); it; ++it) {
      if (!(it.value() >= 0.0) || !std::isfinite(it.value())) {
        throw ValidationError(std::string(name) + " has a negative or non-finite entry in row " +
                              std::to_string(r));
      }
      sum += it.value();
      if (it.value() > 0.0) ++nonzero;
    }
    if (nonzero == 0 || std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError(std::string(name) + " row " + std::to_string(r) + " does not sum to 1");
    }
  }
}

SparseRowMatrix uniform_laplacian(int n, const FaceMatrix& faces) {
  std::vector<std::set<int>> nbrs(static_cast<std::size_t>(n));
  for (int f = 0; f < faces.rows(); ++f) {
    for (int e = 0; e < 3; ++e) {
      const int a = faces(f, e);
      const int b = faces(f, (e + 1) % 3);
      nbrs[static_cast<std::size_t>(a)].insert(b);
      nbrs[static_cast<std::size_t>(b)].insert(a);
    }
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i) {
    const auto& ni = nbrs[static_cast<std::size_t>(i)];
    if (ni.empty()) continue;
    trip.emplace_back(i, i, 1.0);
    const double w = 1.0 / static_cast<double>(ni.size());
    for (int j : ni) trip.emplace_back(i, j, -w);
  }
  SparseRowMatrix lap(n, n);
  lap.setFromTriplets(trip.begin(), trip.end());
  return lap;
}

}  // namespace

TemplateMesh::TemplateMesh(VertexMatrix vertices, FaceMatrix faces,
                           std::array<VertexMatrix, kShapeDim> shape_basis, SparseRowMatrix skinning,
                           SparseRowMatrix regressor)
    : vertices_(std::move(vertices)),
      faces_(std::move(faces)),
      shape_basis_(std::move(shape_basis)),
      skinning_(std::move(skinning)),
      regressor_(std::move(regressor)) {
  const auto n = vertices_.rows();
  if (n == 0 || !vertices_.allFinite()) throw ValidationError("template vertices empty or non-finite");
  for (const auto& b : shape_basis_) {
    if (b.rows() != n || !b.allFinite()) throw ValidationError("shape basis size mismatch");
  }
  if (skinning_.rows() != n || skinning_.cols() != kNumBones) {
    throw ValidationError("skinning weights must be N x 16");
  }
  if (regressor_.rows() != kNumJoints || regressor_.cols() != n) {
    throw ValidationError("joint regressor must be 21 x N");
  }
  if (faces_.size() > 0 && (faces_.minCoeff() < 0 || faces_.maxCoeff() >= n)) {
    throw ValidationError("face index out of range");
  }
  skinning_.makeCompressed();
  regressor_.makeCompressed();
  check_rows_stochastic(skinning_, "skinning weights");
  check_rows_stochastic(regressor_, "joint regressor");
  regressor_t_ = regressor_.transpose();
  shape_matrix_.resize(3 * n, kShapeDim);
  for (int j = 0; j < kShapeDim; ++j) {
    shape_matrix_.col(j) = Eigen::Map<const Eigen::VectorXd>(shape_basis_[static_cast<std::size_t>(j)].data(), 3 * n);
  }
  laplacian_ = uniform_laplacian(static_cast<int>(n), faces_);
  laplacian_t_ = laplacian_.transpose();
}

ForwardState forward_state(const HandParams& params, const TemplateMesh& tpl) {
  ForwardState st;
  st.shaped = tpl.vertices();
  const auto& s = params.shape();
  if (!s.isZero(0.0)) {
    Eigen::Map<Eigen::VectorXd>(st.shaped.data(), st.shaped.size()).noalias() += tpl.shape_matrix() * s;
  }

  const auto& reg = tpl.regressor();
  for (int b = 0; b < kNumBones; ++b) {
    const int joint = b == 0 ? kWrist : bone_joint(b);
    Vec3 p = Vec3::Zero();
    for (SparseRowMatrix::InnerIterator it(reg, joint); it; ++it) {
      p += it.value() * st.shaped.row(it.col()).transpose();
    }
    st.rest_joints[static_cast<std::size_t>(b)] = p;
  }

  // Posed pivots are tracked as displacements from the rest pivots so the
  // identity pose reproduces the template bit-exactly.
  std::array<Vec3, kNumBones> delta;
  delta[0] = Vec3::Zero();
  st.local_rotations[0] = Mat3::Identity();
  st.world_rotations[0] = Mat3::Identity();
  st.posed_joints[0] = st.rest_joints[0];
  for (int b = 1; b < kNumBones; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    const auto up = static_cast<std::size_t>(bone_parent(b));
    st.local_rotations[ub] = rodrigues(params.joint_rotation(b));
    st.world_rotations[ub] = st.world_rotations[up] * st.local_rotations[ub];
    delta[ub] = delta[up] + (st.world_rotations[up] - Mat3::Identity()) *
                                (st.rest_joints[ub] - st.rest_joints[up]);
    st.posed_joints[ub] = st.rest_joints[ub] + delta[ub];
  }

  std::array<Vec3, kNumBones> offsets;
  for (std::size_t b = 0; b < kNumBones; ++b) {
    offsets[b] = delta[b] + (st.rest_joints[b] - st.world_rotations[b] * st.rest_joints[b]);
  }

  const auto n = tpl.vertex_count();
  st.skinned.resize(n, 3);
  const auto& w = tpl.skinning();
  for (int v = 0; v < n; ++v) {
    const Vec3 x = st.shaped.row(v).transpose();
    Vec3 acc = Vec3::Zero();
    for (SparseRowMatrix::InnerIterator it(w, v); it; ++it) {
      const auto b = static_cast<std::size_t>(it.col());
      acc += it.value() * (st.world_rotations[b] * x + offsets[b]);
    }
    st.skinned.row(v) = acc.transpose();
  }

  st.global_rotation = quaternion_matrix(params.quaternion());
  st.scale = std::exp(params.log_scale());
  st.translation = params.translation();
  const Mat3 sr = st.scale * st.global_rotation;
  st.vertices = (st.skinned * sr.transpose()).rowwise() + st.translation.transpose();
  return st;
}

Mesh forward(const HandParams& params, const TemplateMesh& tpl) {
  return Mesh{forward_state(params, tpl).vertices};
}

Skeleton regress_skeleton(const VertexMatrix& vertices, const TemplateMesh& tpl) {
  Skeleton sk;
  sk.joints = tpl.regressor() * vertices;
  return sk;
}

Skeleton regress_skeleton(const Mesh& mesh, const TemplateMesh& tpl) {
  return regress_skeleton(mesh.vertices, tpl);
}

double laplacian_energy(const VertexMatrix& vertices, const TemplateMesh& tpl) {
  const VertexMatrix lv = tpl.laplacian() * vertices;
  return lv.squaredNorm();
}

double laplacian_energy(const Mesh& mesh, const TemplateMesh& tpl) {
  return laplacian_energy(mesh.vertices, tpl);
}

Skeleton model_skeleton(const HandParams& params, const TemplateMesh& tpl) {
  return regress_skeleton(forward(params, tpl), tpl);
}

}  // namespace handgen
