#include "handgen/refinement.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <json.hpp>

#include "handgen/file_util.hpp"

namespace handgen {

PoseVector PoseBasis::project(const PoseVector& pose, int n) const {
  if (n < 0 || n > size()) throw ValidationError("component count exceeds the basis size");
  const PoseVector d = pose - mean;
  const auto top = components.topRows(n);
  return mean + top.transpose() * (top * d);
}

PoseBasis fit_pose_basis(std::span<const Skeleton> train) {
  if (train.size() < 2) throw InsufficientData("pose basis needs at least two skeletons");
  const auto k = static_cast<Eigen::Index>(train.size());
  Eigen::MatrixXd x(k, kPoseDim);
  for (Eigen::Index i = 0; i < k; ++i) x.row(i) = train[static_cast<std::size_t>(i)].flat().transpose();
  if (!x.allFinite()) throw ValidationError("training skeletons must be finite");

  PoseBasis b;
  b.mean = x.colwise().mean().transpose();
  x.rowwise() -= b.mean.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeFullV);
  b.components = svd.matrixV().transpose();
  b.singular_values = Eigen::VectorXd::Zero(kPoseDim);
  b.singular_values.head(svd.singularValues().size()) = svd.singularValues();
  return b;
}

void SvdRefineConfig::validate() const {
  if (component_counts.empty() || weights.empty()) throw ValidationError("svd refine needs counts and weights");
  for (std::size_t i = 0; i < component_counts.size(); ++i) {
    if (component_counts[i] < 1 || component_counts[i] > kPoseDim) {
      throw ValidationError("component counts must lie in [1, 63]");
    }
    if (i > 0 && component_counts[i] <= component_counts[i - 1]) {
      throw ValidationError("component counts must be strictly increasing");
    }
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw ValidationError("weights must be nonnegative");
    if (i < candidates()) sum += weights[i];
  }
  if (!(sum > 0.0)) throw ValidationError("weights of the combined candidates sum to zero");
}

PoseVector svd_refine(const PoseVector& pose, const PoseBasis& basis, const SvdRefineConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.candidates();
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) wsum += cfg.weights[i];
  PoseVector out = PoseVector::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    if (cfg.weights[i] == 0.0) continue;
    out += (cfg.weights[i] / wsum) * basis.project(pose, cfg.component_counts[i]);
  }
  return out;
}

Prediction svd_refine(const Prediction& pred, const PoseBasis& basis, const SvdRefineConfig& cfg) {
  const PoseVector flat = Eigen::Map<const PoseVector>(pred.joints.data());
  Prediction out{pred.frame_id, {}};
  Eigen::Map<PoseVector>(out.joints.data()) = svd_refine(flat, basis, cfg);
  return out;
}

std::vector<Prediction> temporal_smooth(std::span<const Prediction> seq, std::span<const long long> time_index, int k) {
  if (k < 0) throw ValidationError("context size must be >= 0");
  if (time_index.size() != seq.size()) throw ValidationError("one time index per prediction is required");
  for (std::size_t i = 1; i < time_index.size(); ++i) {
    if (time_index[i] <= time_index[i - 1]) {
      throw UnorderedSequence("time_index " + std::to_string(time_index[i]) + " does not follow " +
                              std::to_string(time_index[i - 1]));
    }
  }
  std::vector<Prediction> out(seq.begin(), seq.end());
  if (k == 0) return out;
  const auto n = static_cast<std::ptrdiff_t>(seq.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - k);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + k);
    JointMatrix acc = JointMatrix::Zero();
    for (std::ptrdiff_t j = lo; j <= hi; ++j) acc += seq[static_cast<std::size_t>(j)].joints;
    out[static_cast<std::size_t>(i)].joints = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

std::vector<Prediction> smooth_by_sequence(std::span<const Prediction> preds, std::span<const Frame> frames, int k) {
  std::map<std::string, const Frame*> by_id;
  for (const auto& f : frames) by_id.emplace(f.frame_id, &f);

  // sequence id -> (time index, position in preds)
  std::map<std::string, std::vector<std::pair<long long, std::size_t>>> sequences;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto it = by_id.find(preds[i].frame_id);
    if (it == by_id.end()) throw ValidationError("unknown frame_id \"" + preds[i].frame_id + "\"");
    const Frame& f = *it->second;
    if (f.sequence_id && f.time_index) sequences[*f.sequence_id].emplace_back(*f.time_index, i);
  }
  std::vector<Prediction> out(preds.begin(), preds.end());
  for (auto& [name, members] : sequences) {
    std::sort(members.begin(), members.end());
    std::vector<Prediction> seq;
    std::vector<long long> times;
    for (const auto& [t, i] : members) {
      seq.push_back(preds[i]);
      times.push_back(t);
    }
    const auto smoothed = temporal_smooth(seq, times, k);
    for (std::size_t j = 0; j < members.size(); ++j) out[members[j].second] = smoothed[j];
  }
  return out;
}

Prediction average_predictions(std::span<const Prediction> preds, std::span<const double> weights) {
  if (preds.empty()) throw ValidationError("nothing to average");
  for (const auto& p : preds) {
    if (p.frame_id != preds.front().frame_id) {
      throw MismatchedFrameIds("cannot average \"" + p.frame_id + "\" with \"" + preds.front().frame_id + "\"");
    }
  }
  if (!weights.empty() && weights.size() != preds.size()) throw ValidationError("one weight per prediction is required");
  double wsum = 0.0;
  JointMatrix acc = JointMatrix::Zero();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("weights must be nonnegative");
    acc += w * preds[i].joints;
    wsum += w;
  }
  if (!(wsum > 0.0)) throw ValidationError("weights sum to zero");
  return Prediction{preds.front().frame_id, acc / wsum};
}

std::vector<double> evenly_spaced_angles(int n) {
  if (n < 1) throw ValidationError("need at least one rotation");
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(2.0 * std::numbers::pi * i / n);
  return out;
}

Prediction rotation_ensemble(const Predictor& predictor, const Frame& frame, std::span<const double> angles_rad) {
  if (angles_rad.empty()) throw ValidationError("rotation set is empty");
  std::vector<Prediction> results;
  std::string last_error;
  for (double theta : angles_rad) {
    const Mat3 r = axis_rotation(2, theta);
    Frame rotated = frame;
    rotated.skeleton = frame.skeleton.transformed(r, Vec3::Zero());
    try {
      Prediction p = predictor(rotated);
      p.frame_id = frame.frame_id;
      p.joints = p.joints * r;  // rows rotated by r^T
      results.push_back(std::move(p));
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  if (results.empty()) throw ValidationError("every rotated prediction failed: " + last_error);
  return average_predictions(results);
}

using nlohmann::json;

std::string pose_basis_to_json(const PoseBasis& basis) {
  json comps = json::array();
  for (int i = 0; i < basis.size(); ++i) {
    comps.push_back(std::vector<double>(basis.components.row(i).data(), basis.components.row(i).data() + kPoseDim));
  }
  const json j{{"components", comps},
               {"mean", std::vector<double>(basis.mean.data(), basis.mean.data() + kPoseDim)},
               {"singular_values", std::vector<double>(basis.singular_values.data(),
                                                       basis.singular_values.data() + basis.singular_values.size())}};
  return j.dump() + "\n";
}

PoseBasis pose_basis_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    PoseBasis b;
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto sv = j.at("singular_values").get<std::vector<double>>();
    const auto& comps = j.at("components");
    if (mean.size() != kPoseDim || comps.size() != sv.size() || sv.size() > kPoseDim) {
      throw ValidationError("pose basis has inconsistent sizes");
    }
    b.mean = Eigen::Map<const PoseVector>(mean.data());
    b.singular_values = Eigen::Map<const Eigen::VectorXd>(sv.data(), static_cast<Eigen::Index>(sv.size()));
    b.components.resize(static_cast<Eigen::Index>(comps.size()), kPoseDim);
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const auto row = comps[i].get<std::vector<double>>();
      if (row.size() != kPoseDim) throw ValidationError("pose basis component has wrong length");
      b.components.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const PoseVector>(row.data()).transpose();
    }
    return b;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad pose basis: ") + e.what());
  }
}

void save_pose_basis(const PoseBasis& basis, const std::filesystem::path& path) {
  write_file_atomic(path, pose_basis_to_json(basis));
}

PoseBasis load_pose_basis(const std::filesystem::path& path) { return pose_basis_from_json(read_file(path)); }

}  // namespace handgen
