#include "handgen/fitter.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "handgen/file_util.hpp"
#include "handgen/parallel.hpp"

namespace handgen {

void FitConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ValidationError("step_size must be > 0");
  if (iterations < 1) throw ValidationError("iterations must be >= 1");
  if (!(shape_reg_weight >= 0.0) || !(laplacian_weight >= 0.0)) {
    throw ValidationError("regularizer weights must be >= 0");
  }
  if (!(fd_step > 0.0)) throw ValidationError("fd_step must be > 0");
}

namespace {

ObjectiveTerms terms_from_state(const ForwardState& st, const HandParams& params, const Skeleton& target,
                                const TemplateMesh& tpl, const FitConfig& cfg) {
  ObjectiveTerms t;
  const JointMatrix resid = tpl.regressor() * st.vertices - target.joints;
  t.skeleton = resid.squaredNorm();
  t.shape = cfg.shape_reg_weight * params.shape().squaredNorm();
  if (cfg.laplacian_weight != 0.0) t.laplacian = cfg.laplacian_weight * laplacian_energy(st.vertices, tpl);
  return t;
}

}  // namespace

ObjectiveTerms objective_terms(const HandParams& params, const Skeleton& target, const TemplateMesh& tpl,
                               const FitConfig& cfg) {
  return terms_from_state(forward_state(params, tpl), params, target, tpl, cfg);
}

double objective(const HandParams& params, const Skeleton& target, const TemplateMesh& tpl,
                 const FitConfig& cfg) {
  return objective_terms(params, target, tpl, cfg).total();
}

namespace {

// Objective and gradient in one pass, with buffers reused across calls.
// The Laplacian term is evaluated on the hand-local skinned mesh U: the final
// mesh is X = s R U + t and L annihilates constants, so ||L X||^2 equals
// s^2 ||L U||^2. That term is invariant to R and t and contributes nothing
// to their gradients.
class Evaluator {
 public:
  Evaluator(const TemplateMesh& tpl, const FitConfig& cfg) : tpl_(tpl), cfg_(cfg) {
    const auto n = tpl.vertex_count();
    shaped_.resize(n, 3);
    skinned_.resize(n, 3);
    lu_.resize(n, 3);
    gu_.resize(n, 3);
    g_shaped_.resize(n, 3);
  }

  ObjectiveTerms run(const HandParams& params, const Skeleton& target, ParamVector& g);

 private:
  // out = m * in for row-major N x 3 dense operands.
  static void multiply(const SparseRowMatrix& m, const VertexMatrix& in, VertexMatrix& out, double scale,
                       bool accumulate) {
    const int* outer = m.outerIndexPtr();
    const int* inner = m.innerIndexPtr();
    const double* val = m.valuePtr();
    const double* src = in.data();
    double* dst = out.data();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      double a0 = 0.0;
      double a1 = 0.0;
      double a2 = 0.0;
      for (int k = outer[r]; k < outer[r + 1]; ++k) {
        const double* p = src + 3 * inner[k];
        a0 += val[k] * p[0];
        a1 += val[k] * p[1];
        a2 += val[k] * p[2];
      }
      double* o = dst + 3 * r;
      if (accumulate) {
        o[0] += scale * a0;
        o[1] += scale * a1;
        o[2] += scale * a2;
      } else {
        o[0] = scale * a0;
        o[1] = scale * a1;
        o[2] = scale * a2;
      }
    }
  }

  const TemplateMesh& tpl_;
  const FitConfig& cfg_;
  VertexMatrix shaped_;
  VertexMatrix skinned_;
  VertexMatrix lu_;
  VertexMatrix gu_;
  VertexMatrix g_shaped_;
};

ObjectiveTerms Evaluator::run(const HandParams& params, const Skeleton& target, ParamVector& g) {
  const auto n = tpl_.vertex_count();
  const auto& s = params.shape();
  shaped_ = tpl_.vertices();
  if (!s.isZero(0.0)) {
    Eigen::Map<Eigen::VectorXd>(shaped_.data(), shaped_.size()).noalias() += tpl_.shape_matrix() * s;
  }

  // Bone pivots, kinematic chain and per-bone affine maps, as in forward_state.
  const auto& reg = tpl_.regressor();
  std::array<Vec3, kNumBones> rest;
  for (int b = 0; b < kNumBones; ++b) {
    const int joint = b == 0 ? kWrist : bone_joint(b);
    Vec3 p = Vec3::Zero();
    for (SparseRowMatrix::InnerIterator it(reg, joint); it; ++it) p += it.value() * shaped_.row(it.col()).transpose();
    rest[static_cast<std::size_t>(b)] = p;
  }
  std::array<Mat3, kNumBones> local;
  std::array<Mat3, kNumBones> world;
  std::array<Vec3, kNumBones> delta;
  std::array<Vec3, kNumBones> offsets;
  local[0].setIdentity();
  world[0].setIdentity();
  delta[0].setZero();
  for (int b = 1; b < kNumBones; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    const auto up = static_cast<std::size_t>(bone_parent(b));
    local[ub] = rodrigues(params.joint_rotation(b));
    world[ub] = world[up] * local[ub];
    delta[ub] = delta[up] + (world[up] - Mat3::Identity()) * (rest[ub] - rest[up]);
  }
  for (std::size_t b = 0; b < kNumBones; ++b) offsets[b] = delta[b] + (rest[b] - world[b] * rest[b]);

  const auto& weights = tpl_.skinning();
  const int* w_outer = weights.outerIndexPtr();
  const int* w_inner = weights.innerIndexPtr();
  const double* w_val = weights.valuePtr();
  for (Eigen::Index v = 0; v < n; ++v) {
    const Vec3 x = shaped_.row(v).transpose();
    Vec3 acc = Vec3::Zero();
    for (int k = w_outer[v]; k < w_outer[v + 1]; ++k) {
      const auto b = static_cast<std::size_t>(w_inner[k]);
      acc += w_val[k] * (world[b] * x + offsets[b]);
    }
    skinned_.row(v) = acc.transpose();
  }

  const Mat3 rot = quaternion_matrix(params.quaternion());
  const double scale = std::exp(params.log_scale());
  const Vec3 trans = params.translation();

  ObjectiveTerms terms;
  const JointMatrix ju = reg * skinned_;
  const JointMatrix joints = (scale * (ju * rot.transpose())).rowwise() + trans.transpose();
  const JointMatrix resid = joints - target.joints;
  terms.skeleton = resid.squaredNorm();
  terms.shape = cfg_.shape_reg_weight * s.squaredNorm();
  const bool lap = cfg_.laplacian_weight != 0.0;
  if (lap) {
    multiply(tpl_.laplacian(), skinned_, lu_, 1.0, false);
    terms.laplacian = cfg_.laplacian_weight * scale * scale * lu_.squaredNorm();
  }

  g.setZero();
  const JointMatrix gj = 2.0 * resid;
  g.segment<3>(kTranslationOffset) = gj.colwise().sum().transpose();
  g(kLogScaleOffset) = gj.cwiseProduct(joints.rowwise() - trans.transpose()).sum() + 2.0 * terms.laplacian;
  const Mat3 g_rot = scale * (gj.transpose() * ju);
  const Vec4 q = params.quaternion();
  const auto dq = quaternion_matrix_jacobian(q);
  Vec4 g_q;
  for (int i = 0; i < 4; ++i) g_q(i) = g_rot.cwiseProduct(dq[static_cast<std::size_t>(i)]).sum();
  g.segment<4>(kQuatOffset) = g_q - q * q.dot(g_q);

  // dE/dU.
  if (lap) {
    multiply(tpl_.laplacian_transpose(), lu_, gu_, 2.0 * cfg_.laplacian_weight * scale * scale, false);
  } else {
    gu_.setZero();
  }
  const JointMatrix gju = scale * (gj * rot);
  for (int j = 0; j < kNumJoints; ++j) {
    for (SparseRowMatrix::InnerIterator it(reg, j); it; ++it) gu_.row(it.col()) += it.value() * gju.row(j);
  }

  // Skinning: u_v = sum_b w_vb (W_b (x_v - r_b) + p_b).
  std::array<Mat3, kNumBones> g_world;
  std::array<Vec3, kNumBones> g_posed;
  std::array<Vec3, kNumBones> g_rest;
  for (std::size_t b = 0; b < kNumBones; ++b) {
    g_world[b].setZero();
    g_posed[b].setZero();
    g_rest[b].setZero();
  }
  for (Eigen::Index v = 0; v < n; ++v) {
    const Vec3 x = shaped_.row(v).transpose();
    const Vec3 guv = gu_.row(v).transpose();
    Vec3 gs = Vec3::Zero();
    for (int k = w_outer[v]; k < w_outer[v + 1]; ++k) {
      const auto b = static_cast<std::size_t>(w_inner[k]);
      const Vec3 gw = w_val[k] * guv;
      g_world[b].noalias() += gw * (x - rest[b]).transpose();
      g_posed[b] += gw;
      const Vec3 back = world[b].transpose() * gw;
      gs += back;
      g_rest[b] -= back;
    }
    g_shaped_.row(v) = gs.transpose();
  }

  // Kinematic chain, children before parents.
  std::array<Mat3, kNumBones> g_local;
  for (int b = kNumBones - 1; b >= 1; --b) {
    const auto ub = static_cast<std::size_t>(b);
    const auto up = static_cast<std::size_t>(bone_parent(b));
    const Mat3& wp = world[up];
    // p_b = p_p + W_p (r_b - r_p)
    g_posed[up] += g_posed[ub];
    g_world[up].noalias() += g_posed[ub] * (rest[ub] - rest[up]).transpose();
    const Vec3 t = wp.transpose() * g_posed[ub];
    g_rest[ub] += t;
    g_rest[up] -= t;
    // W_b = W_p L_b
    g_local[ub] = wp.transpose() * g_world[ub];
    g_world[up].noalias() += g_world[ub] * local[ub].transpose();
  }
  g_rest[0] += g_posed[0];

  for (int b = 1; b < kNumBones; ++b) {
    const auto jac = rodrigues_jacobian(params.joint_rotation(b));
    for (int i = 0; i < 3; ++i) {
      g(kArticulationOffset + 3 * (b - 1) + i) =
          g_local[static_cast<std::size_t>(b)].cwiseProduct(jac[static_cast<std::size_t>(i)]).sum();
    }
  }

  // Joint pivots are regressed from the shaped template.
  for (int b = 0; b < kNumBones; ++b) {
    const int joint = b == 0 ? kWrist : bone_joint(b);
    const Vec3& gr = g_rest[static_cast<std::size_t>(b)];
    for (SparseRowMatrix::InnerIterator it(reg, joint); it; ++it) g_shaped_.row(it.col()) += it.value() * gr.transpose();
  }

  g.segment<kShapeDim>(kShapeOffset).noalias() =
      tpl_.shape_matrix().transpose() * Eigen::Map<const Eigen::VectorXd>(g_shaped_.data(), g_shaped_.size());
  g.segment<kShapeDim>(kShapeOffset) += 2.0 * cfg_.shape_reg_weight * s;
  return terms;
}

}  // namespace

ParamVector gradient(const HandParams& params, const Skeleton& target, const TemplateMesh& tpl,
                     const FitConfig& cfg) {
  ParamVector g;
  Evaluator(tpl, cfg).run(params, target, g);
  return g;
}

ParamVector central_difference_gradient(const HandParams& params, const Skeleton& target,
                                        const TemplateMesh& tpl, const FitConfig& cfg) {
  const ParamVector x = params.to_vector();
  ParamVector g;
  for (int i = 0; i < kParamDim; ++i) {
    ParamVector xp = x;
    ParamVector xm = x;
    xp(i) += cfg.fd_step;
    xm(i) -= cfg.fd_step;
    const double fp = objective(HandParams::from_vector(xp), target, tpl, cfg);
    const double fm = objective(HandParams::from_vector(xm), target, tpl, cfg);
    g(i) = (fp - fm) / (2.0 * cfg.fd_step);
  }
  return g;
}

MetricMatrix descent_metric(const TemplateMesh& tpl, const FitConfig& cfg) {
  if (cfg.metric == DescentMetric::kIdentity) return MetricMatrix::Identity();

  // Coordinates flatter than this keep the literal step. It sits a few times
  // above the translation curvature (2 per joint and axis) so the weakly
  // coupled blocks are not slowed down along with the stiff ones.
  constexpr double kReferenceGain = 5.0;
  const double reference = kReferenceGain * 2.0 * kNumJoints;
  const ParamVector x0 = HandParams().to_vector();
  const ForwardState rest = forward_state(HandParams(), tpl);
  const JointMatrix joints = tpl.regressor() * rest.vertices;

  // Central differences at the neutral pose give the exact curvature of the
  // linear blocks (shape, translation) and of the Laplacian term.
  constexpr double kStep = 1e-6;
  ParamVector curvature;
  for (int i = 0; i < kParamDim; ++i) {
    ParamVector xp = x0;
    ParamVector xm = x0;
    xp(i) += kStep;
    xm(i) -= kStep;
    const VertexMatrix dv = (forward(HandParams::from_vector(xp), tpl).vertices -
                             forward(HandParams::from_vector(xm), tpl).vertices) /
                            (2.0 * kStep);
    double h = 2.0 * (tpl.regressor() * dv).squaredNorm();
    if (cfg.laplacian_weight != 0.0) h += 2.0 * cfg.laplacian_weight * (tpl.laplacian() * dv).squaredNorm();
    if (i < kShapeDim) h += 2.0 * cfg.shape_reg_weight;
    curvature(i) = h;
  }

  // Rotational coordinates: the skeleton curvature depends on the pose, so it
  // is bounded by the squared lever arms, which no rotation changes.
  double wrist_lever = 0.0;
  for (int j = 0; j < kNumJoints; ++j) wrist_lever += (joints.row(j) - joints.row(kWrist)).squaredNorm();
  const double quat_bound = 2.0 * 4.0 * wrist_lever;
  for (int i = 0; i < 4; ++i) curvature(kQuatOffset + i) = std::max(curvature.segment<3>(kQuatOffset + 1).maxCoeff(), quat_bound);
  curvature(kLogScaleOffset) = std::max(curvature(kLogScaleOffset), 2.0 * wrist_lever);
  for (int b = 1; b < kNumBones; ++b) {
    const int pivot = bone_joint(b);
    double lever = 0.0;
    for (int j = pivot + 1; j < kNumJoints && parent_joint(j) == j - 1; ++j) {
      lever += (joints.row(j) - joints.row(pivot)).squaredNorm();
    }
    for (int i = 0; i < 3; ++i) {
      const int k = kArticulationOffset + 3 * (b - 1) + i;
      curvature(k) = std::max(curvature(k), 2.0 * lever);
    }
  }

  ParamVector diag;
  for (int i = 0; i < kParamDim; ++i) diag(i) = reference / std::max(curvature(i), reference);
  return diag.asDiagonal();
}

HandParams neutral_init(const Skeleton& target) { return HandParams().with_translation(target.joint(kWrist)); }

HandParams palm_aligned_init(const Skeleton& target, const TemplateMesh& tpl) {
  // The wrist and finger roots do not move with articulation.
  const Skeleton rest = model_skeleton(HandParams(), tpl);
  Eigen::Matrix<double, 3, 1 + kNumFingers> src;
  Eigen::Matrix<double, 3, 1 + kNumFingers> dst;
  src.col(0) = rest.joint(kWrist);
  dst.col(0) = target.joint(kWrist);
  for (int f = 0; f < kNumFingers; ++f) {
    src.col(1 + f) = rest.joint(joint_index(f, 0));
    dst.col(1 + f) = target.joint(joint_index(f, 0));
  }
  const Eigen::Matrix4d m = Eigen::umeyama(src, dst, false);
  const Eigen::Quaterniond q(Mat3(m.topLeftCorner<3, 3>()));
  return HandParams().with_quaternion(Vec4(q.w(), q.x(), q.y(), q.z())).with_translation(m.topRightCorner<3, 1>());
}

FitResult fit(const Skeleton& target, const HandParams& init, const TemplateMesh& tpl, const FitConfig& cfg) {
  cfg.validate();
  const MetricMatrix metric = descent_metric(tpl, cfg);

  FitResult result;
  result.objective_trace.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  Evaluator eval(tpl, cfg);
  HandParams current = init;
  ParamVector grad;
  double value = eval.run(current, target, grad).total();
  if (!std::isfinite(value)) throw NonFiniteObjective(0);
  result.objective_trace.push_back(value);
  result.params = current;
  double best = value;

  for (int t = 1; t <= cfg.iterations; ++t) {
    const ParamVector next = current.to_vector() - cfg.step_size * (metric * grad);
    if (!next.allFinite() || !(next.segment<4>(kQuatOffset).norm() > 0.0)) throw NonFiniteObjective(t);
    current = HandParams::from_vector(next);
    value = eval.run(current, target, grad).total();
    if (!std::isfinite(value) || !grad.allFinite()) throw NonFiniteObjective(t);
    result.objective_trace.push_back(value);
    if (value < best) {
      best = value;
      result.params = current;
      result.best_iteration = t;
    }
  }
  result.final_skeleton_error = mean_joint_error(model_skeleton(result.params, tpl).joints, target.joints);
  return result;
}

std::vector<BatchFitEntry> batch_fit(std::span<const Frame> frames, const TemplateMesh& tpl,
                                     const FitConfig& cfg, int threads, InitMode init) {
  if (frames.empty()) throw ValidationError("batch_fit needs at least one frame");
  cfg.validate();
  std::vector<BatchFitEntry> out(frames.size());
  parallel_for(frames.size(), threads, [&](std::size_t i) {
    const Frame& f = frames[i];
    out[i].frame_id = f.frame_id;
    try {
      const HandParams start =
          init == InitMode::kNeutral ? neutral_init(f.skeleton) : palm_aligned_init(f.skeleton, tpl);
      out[i].result = fit(f.skeleton, start, tpl, cfg);
    } catch (const std::exception& e) {
      out[i].error = e.what();
    }
  });
  return out;
}

using nlohmann::json;

std::string fitted_params_to_json_line(const FittedParams& fp) {
  auto to_array = [](const auto& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
  };
  json j;
  j["frame_id"] = fp.frame_id;
  j["s"] = to_array(fp.params.shape());
  j["c"] = to_array(fp.params.global());
  j["a"] = to_array(fp.params.articulation());
  j["final_error_mm"] = fp.final_error_mm;
  return j.dump();
}

std::vector<FittedParams> load_fitted_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<FittedParams> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      auto read = [&](const char* key, auto& vec) {
        const json& a = j.at(key);
        if (a.size() != static_cast<std::size_t>(vec.size())) {
          throw ParseError(path.string(), line_no, std::string("field \"") + key + "\" has wrong length");
        }
        for (Eigen::Index i = 0; i < vec.size(); ++i) vec(i) = a.at(static_cast<std::size_t>(i)).get<double>();
      };
      ShapeVector s;
      GlobalVector c;
      ArticulationVector a;
      read("s", s);
      read("c", c);
      read("a", a);
      FittedParams fp{j.at("frame_id").get<std::string>(), HandParams(s, c, a),
                      j.value("final_error_mm", 0.0)};
      out.push_back(std::move(fp));
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
  return out;
}

void save_fitted_params(std::span<const FittedParams> records, const std::filesystem::path& path) {
  std::string buf;
  for (const auto& r : records) {
    buf += fitted_params_to_json_line(r);
    buf += '\n';
  }
  write_file_atomic(path, buf);
}

}  // namespace handgen
