#include "handgen/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace handgen {

std::vector<double> threshold_grid(double max_mm, double step_mm) {
  if (!(step_mm > 0.0) || !(max_mm >= 0.0) || !std::isfinite(max_mm)) {
    throw ValidationError("threshold grid needs step > 0 and a finite max >= 0");
  }
  std::vector<double> out;
  const auto n = static_cast<long long>(std::floor(max_mm / step_mm + 1e-9));
  for (long long i = 0; i <= n; ++i) out.push_back(static_cast<double>(i) * step_mm);
  return out;
}

double mje(const Prediction& pred, const Skeleton& truth) { return mean_joint_error(pred.joints, truth.joints); }

ScoringIndex::ScoringIndex(std::span<const Frame> truth, std::span<const Prediction> preds) {
  for (const auto& f : truth) {
    if (!frames_.emplace(f.frame_id, &f).second) throw DuplicateFrameId(f.frame_id);
  }
  for (const auto& p : preds) {
    if (!preds_.emplace(p.frame_id, &p).second) throw DuplicateFrameId(p.frame_id);
    if (!frames_.count(p.frame_id)) unresolved_.push_back(p.frame_id);
  }
  std::sort(unresolved_.begin(), unresolved_.end());
}

const Frame* ScoringIndex::frame(const std::string& id) const {
  auto it = frames_.find(id);
  return it == frames_.end() ? nullptr : it->second;
}

const Prediction* ScoringIndex::prediction(const std::string& id) const {
  auto it = preds_.find(id);
  return it == preds_.end() ? nullptr : it->second;
}

namespace {

SuccessCurve success_curve(std::vector<double> errors, std::size_t total, const std::vector<double>& thresholds) {
  std::sort(errors.begin(), errors.end());
  const auto exact = static_cast<std::size_t>(std::upper_bound(errors.begin(), errors.end(), 0.0) - errors.begin());
  SuccessCurve c;
  c.thresholds = thresholds;
  c.rates.reserve(thresholds.size());
  for (double d : thresholds) {
    auto hits = static_cast<std::size_t>(std::lower_bound(errors.begin(), errors.end(), d) - errors.begin());
    if (!(d > 0.0)) hits = exact;
    c.rates.push_back(total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total));
  }
  return c;
}

std::vector<std::string> sorted_ids(std::span<const std::string> ids) {
  std::vector<std::string> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

SubsetScore evaluate(const ScoringIndex& index, std::span<const std::string> subset,
                     const std::vector<double>& thresholds) {
  if (subset.empty()) throw EmptySubset();
  const auto ids = sorted_ids(subset);
  SubsetScore s;
  s.frames = ids.size();
  std::vector<double> frame_errors;
  std::vector<double> joint_errors;
  double sum = 0.0;
  for (const auto& id : ids) {
    const Frame* f = index.frame(id);
    if (!f) throw UnknownFrameId(id);
    const Prediction* p = index.prediction(id);
    if (!p) {
      ++s.missing;
      continue;
    }
    ++s.matched;
    const Eigen::Matrix<double, kNumJoints, 1> err = (p->joints - f->skeleton.joints).rowwise().norm();
    sum += err.sum() / kNumJoints;
    frame_errors.push_back(err.maxCoeff());
    for (int j = 0; j < kNumJoints; ++j) joint_errors.push_back(err(j));
  }
  if (s.matched > 0) s.mje_mm = sum / static_cast<double>(s.matched);
  s.frame_curve = success_curve(std::move(frame_errors), s.frames, thresholds);
  s.joint_curve = success_curve(std::move(joint_errors), s.frames * kNumJoints, thresholds);
  return s;
}

SubsetScore evaluate(std::span<const Prediction> preds, std::span<const Frame> frames,
                     std::span<const std::string> subset, const std::vector<double>& thresholds) {
  return evaluate(ScoringIndex(frames, preds), subset, thresholds);
}

const char* label_kind_name(LabelKind k) {
  switch (k) {
    case LabelKind::kAzimuthBin: return "azimuth_bin";
    case LabelKind::kElevationBin: return "elevation_bin";
    case LabelKind::kArticulationCluster: return "articulation_cluster";
    case LabelKind::kShape: return "shape_id";
    case LabelKind::kObject: return "object_id";
  }
  return "";
}

std::vector<LabelKind> label_kinds(Axis a) {
  switch (a) {
    case Axis::kViewpoint: return {LabelKind::kAzimuthBin, LabelKind::kElevationBin};
    case Axis::kArticulation: return {LabelKind::kArticulationCluster};
    case Axis::kShape: return {LabelKind::kShape};
    case Axis::kObject: return {LabelKind::kObject};
  }
  return {};
}

namespace {

// Sort key: numeric labels order by value, string labels lexicographically.
using LabelKey = std::pair<int, std::string>;

std::optional<LabelKey> label_key(const AxisLabels& l, LabelKind kind) {
  switch (kind) {
    case LabelKind::kAzimuthBin: return LabelKey{l.azimuth_bin, std::to_string(l.azimuth_bin)};
    case LabelKind::kElevationBin: return LabelKey{l.elevation_bin, std::to_string(l.elevation_bin)};
    case LabelKind::kArticulationCluster:
      return LabelKey{l.articulation_cluster, std::to_string(l.articulation_cluster)};
    case LabelKind::kShape: return LabelKey{0, l.shape_id};
    case LabelKind::kObject:
      if (!l.object_id) return std::nullopt;
      return LabelKey{0, *l.object_id};
  }
  return std::nullopt;
}

bool label_seen(const AxisLabels& l, LabelKind kind, const SeenSpec& spec) {
  switch (kind) {
    case LabelKind::kAzimuthBin: return spec.seen_azimuth_bins.count(l.azimuth_bin) != 0;
    case LabelKind::kElevationBin: return spec.seen_elevation_bins.count(l.elevation_bin) != 0;
    case LabelKind::kArticulationCluster: return spec.seen_articulation_clusters.count(l.articulation_cluster) != 0;
    case LabelKind::kShape: return spec.seen_shape_ids.count(l.shape_id) != 0;
    case LabelKind::kObject: return l.object_id && spec.seen_object_ids.count(*l.object_id) != 0;
  }
  return false;
}

}  // namespace

std::vector<LabelRow> per_label_breakdown(const ScoringIndex& index, std::span<const LabeledFrame> labels,
                                          std::span<const std::string> subset, LabelKind kind,
                                          const SeenSpec& spec) {
  std::unordered_map<std::string, const AxisLabels*> by_id;
  for (const auto& lf : labels) by_id.emplace(lf.frame_id, &lf.labels);

  struct Acc {
    LabelRow row;
    double sum = 0.0;
  };
  std::map<LabelKey, Acc> table;
  for (const auto& id : sorted_ids(subset)) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw UnknownFrameId(id);
    const auto key = label_key(*it->second, kind);
    if (!key) continue;
    Acc& acc = table[*key];
    acc.row.label = key->second;
    acc.row.seen = label_seen(*it->second, kind, spec);
    ++acc.row.frames;
    const Frame* f = index.frame(id);
    if (!f) throw UnknownFrameId(id);
    if (const Prediction* p = index.prediction(id)) {
      ++acc.row.count;
      acc.sum += mje(*p, f->skeleton);
    }
  }
  std::vector<LabelRow> out;
  out.reserve(table.size());
  for (auto& [key, acc] : table) {
    if (acc.row.count > 0) acc.row.mje_mm = acc.sum / static_cast<double>(acc.row.count);
    out.push_back(std::move(acc.row));
  }
  return out;
}

std::vector<RankEntry> rank_methods(const std::map<std::string, MethodReport>& reports) {
  const std::string extrap = criterion_name(Criterion::kExtrapolation);
  const std::string interp = criterion_name(Criterion::kInterpolation);
  std::vector<RankEntry> out;
  for (const auto& [name, rep] : reports) {
    auto it = rep.criteria.find(extrap);
    if (it == rep.criteria.end() || !it->second.score.mje_mm) throw MissingCriterion(name);
    RankEntry e{name, *it->second.score.mje_mm, std::nullopt};
    if (auto jt = rep.criteria.find(interp); jt != rep.criteria.end()) e.interpolation_mje = jt->second.score.mje_mm;
    out.push_back(std::move(e));
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::sort(out.begin(), out.end(), [&](const RankEntry& a, const RankEntry& b) {
    return std::make_tuple(a.extrapolation_mje, a.interpolation_mje.value_or(kInf), a.method) <
           std::make_tuple(b.extrapolation_mje, b.interpolation_mje.value_or(kInf), b.method);
  });
  return out;
}

MethodReport evaluate_method(std::span<const Prediction> preds, std::span<const Frame> frames, const Split& split,
                             std::span<const LabeledFrame> labels, const std::vector<double>& thresholds) {
  const ScoringIndex index(frames, preds);
  if (!index.unresolved().empty()) throw UnknownFrameId(index.unresolved().front());
  MethodReport rep;
  rep.predictions = preds.size();
  for (const auto& [c, ids] : split.subsets) {
    CriterionReport cr;
    if (ids.empty()) {
      cr.score.frame_curve.thresholds = thresholds;
      cr.score.joint_curve.thresholds = thresholds;
    } else {
      cr.score = evaluate(index, ids, thresholds);
      if (!labels.empty()) {
        for (Axis a : kAllAxes) {
          if (!split.spec.active(a)) continue;
          for (LabelKind k : label_kinds(a)) {
            cr.breakdowns[label_kind_name(k)] = per_label_breakdown(index, labels, ids, k, split.spec);
          }
        }
      }
    }
    rep.criteria[criterion_name(c)] = std::move(cr);
  }
  return rep;
}

}  // namespace handgen
