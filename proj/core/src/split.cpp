#include "handgen/split.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "handgen/file_util.hpp"

namespace handgen {

namespace {

constexpr std::array<const char*, 4> kAxisNames = {"viewpoint", "articulation", "shape", "object"};
constexpr std::array<const char*, 6> kCriterionNames = {"Extrapolation", "Interpolation", "Viewpoint",
                                                        "Articulation",  "Shape",         "Object"};

template <typename T>
bool contains(const std::set<T>& s, const T& v) {
  return s.find(v) != s.end();
}

}  // namespace

const char* axis_name(Axis a) { return kAxisNames[static_cast<std::size_t>(a)]; }
const char* criterion_name(Criterion c) { return kCriterionNames[static_cast<std::size_t>(c)]; }

Axis parse_axis(const std::string& name) {
  for (Axis a : kAllAxes) {
    if (name == axis_name(a)) return a;
  }
  throw InvalidSpec("unknown axis \"" + name + "\"");
}

Criterion parse_criterion(const std::string& name) {
  for (Criterion c : kAllCriteria) {
    if (name == criterion_name(c)) return c;
  }
  throw ValidationError("unknown criterion \"" + name + "\"");
}

Criterion axis_criterion(Axis a) {
  switch (a) {
    case Axis::kViewpoint: return Criterion::kViewpoint;
    case Axis::kArticulation: return Criterion::kArticulation;
    case Axis::kShape: return Criterion::kShape;
    case Axis::kObject: return Criterion::kObject;
  }
  throw ValidationError("bad axis");
}

void SeenSpec::validate() const {
  if (active_axes.empty()) throw InvalidSpec("no active axes");
  auto in_range = [](const std::set<int>& s, int hi, const char* what) {
    for (int v : s) {
      if (v < 0 || v >= hi) throw InvalidSpec(std::string(what) + " id " + std::to_string(v) + " out of range");
    }
  };
  in_range(seen_azimuth_bins, kAzimuthBins, "azimuth bin");
  in_range(seen_elevation_bins, kElevationBins, "elevation bin");
  in_range(seen_articulation_clusters, kArticulationClusters, "articulation cluster");
  if (active(Axis::kViewpoint) && (seen_azimuth_bins.empty() || seen_elevation_bins.empty())) {
    throw InvalidSpec("viewpoint axis is active but a seen bin set is empty");
  }
  if (active(Axis::kArticulation) && seen_articulation_clusters.empty()) {
    throw InvalidSpec("articulation axis is active but no cluster is seen");
  }
  if (active(Axis::kShape) && seen_shape_ids.empty()) throw InvalidSpec("shape axis is active but no shape is seen");
  if (active(Axis::kObject) && seen_object_ids.empty()) {
    throw InvalidSpec("object axis is active but no object is seen");
  }
}

bool SeenSpec::seen(const AxisLabels& l, Axis a) const {
  switch (a) {
    case Axis::kViewpoint:
      return contains(seen_azimuth_bins, l.azimuth_bin) && contains(seen_elevation_bins, l.elevation_bin);
    case Axis::kArticulation: return contains(seen_articulation_clusters, l.articulation_cluster);
    case Axis::kShape: return contains(seen_shape_ids, l.shape_id);
    case Axis::kObject:
      if (!l.object_id) throw ValidationError("frame has no object_id but the object axis is active");
      return contains(seen_object_ids, *l.object_id);
  }
  return false;
}

std::vector<Axis> SeenSpec::unseen_axes(const AxisLabels& l) const {
  std::vector<Axis> out;
  for (Axis a : kAllAxes) {
    if (active(a) && !seen(l, a)) out.push_back(a);
  }
  return out;
}

std::size_t Split::test_size() const {
  std::size_t n = 0;
  for (const auto& [c, ids] : subsets) n += ids.size();
  return n;
}

std::vector<Criterion> applicable_criteria(const SeenSpec& spec) {
  std::vector<Criterion> out = {Criterion::kExtrapolation, Criterion::kInterpolation};
  for (Axis a : kAllAxes) {
    if (spec.active(a)) out.push_back(axis_criterion(a));
  }
  return out;
}

namespace {

std::vector<std::string> full_cover_warnings(std::span<const LabeledFrame> labels, const SeenSpec& spec) {
  std::set<int> az;
  std::set<int> el;
  std::set<int> art;
  std::set<std::string> shape;
  std::set<std::string> object;
  for (const auto& lf : labels) {
    az.insert(lf.labels.azimuth_bin);
    el.insert(lf.labels.elevation_bin);
    art.insert(lf.labels.articulation_cluster);
    shape.insert(lf.labels.shape_id);
    if (lf.labels.object_id) object.insert(*lf.labels.object_id);
  }
  auto covers = [](const auto& seen, const auto& universe) {
    return std::includes(seen.begin(), seen.end(), universe.begin(), universe.end());
  };
  std::vector<std::string> out;
  auto note = [&](Axis a) {
    out.push_back(std::string("seen set covers every observed ") + axis_name(a) + " label");
  };
  if (spec.active(Axis::kViewpoint) && covers(spec.seen_azimuth_bins, az) && covers(spec.seen_elevation_bins, el)) {
    note(Axis::kViewpoint);
  }
  if (spec.active(Axis::kArticulation) && covers(spec.seen_articulation_clusters, art)) note(Axis::kArticulation);
  if (spec.active(Axis::kShape) && covers(spec.seen_shape_ids, shape)) note(Axis::kShape);
  if (spec.active(Axis::kObject) && covers(spec.seen_object_ids, object)) note(Axis::kObject);
  return out;
}

}  // namespace

Split build_split(std::span<const LabeledFrame> labels, const SeenSpec& spec, double train_fraction,
                  std::uint64_t seed) {
  if (labels.empty()) throw ValidationError("build_split needs at least one labeled frame");
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw ValidationError("train_fraction must be in [0, 1]");
  spec.validate();
  {
    std::unordered_set<std::string> ids;
    for (const auto& lf : labels) {
      if (!ids.insert(lf.frame_id).second) throw DuplicateFrameId(lf.frame_id);
    }
  }

  Split split;
  split.spec = spec;
  split.seed = seed;
  split.train_fraction = train_fraction;
  split.warnings = full_cover_warnings(labels, spec);
  for (Criterion c : applicable_criteria(spec)) split.subsets[c];

  std::vector<std::string> all_seen;
  for (const auto& lf : labels) {
    if (spec.active(Axis::kObject) && !lf.labels.object_id) {
      split.discarded.push_back({lf.frame_id, "no object_id while the object axis is active"});
      continue;
    }
    const auto unseen = spec.unseen_axes(lf.labels);
    if (unseen.empty()) {
      all_seen.push_back(lf.frame_id);
    } else if (unseen.size() == 1) {
      split.subsets[axis_criterion(unseen.front())].push_back(lf.frame_id);
    } else {
      split.subsets[Criterion::kExtrapolation].push_back(lf.frame_id);
    }
  }

  // Sorting first makes the partition independent of the input order.
  std::sort(all_seen.begin(), all_seen.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = all_seen.size(); i > 1; --i) {
    std::swap(all_seen[i - 1], all_seen[static_cast<std::size_t>(rng() % i)]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(all_seen.size())));
  split.train.assign(all_seen.begin(), all_seen.begin() + static_cast<std::ptrdiff_t>(n_train));
  auto& interp = split.subsets[Criterion::kInterpolation];
  interp.assign(all_seen.begin() + static_cast<std::ptrdiff_t>(n_train), all_seen.end());

  std::sort(split.train.begin(), split.train.end());
  for (auto& [c, ids] : split.subsets) {
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) split.empty_criteria.push_back(c);
  }
  return split;
}

std::vector<SplitViolation> verify_split(const Split& split, std::span<const LabeledFrame> labels,
                                         const SeenSpec& spec) {
  std::vector<SplitViolation> out;
  std::unordered_map<std::string, const AxisLabels*> by_id;
  for (const auto& lf : labels) by_id.emplace(lf.frame_id, &lf.labels);

  std::unordered_map<std::string, std::string> placed;  // frame id -> where
  auto place = [&](const std::string& id, const std::string& where) {
    auto [it, fresh] = placed.emplace(id, where);
    if (!fresh) out.push_back({id, "frame appears in both " + it->second + " and " + where});
  };

  auto check = [&](const std::string& id, const std::string& where, auto&& rule) {
    place(id, where);
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      out.push_back({id, where + " references an unlabeled frame"});
      return;
    }
    if (spec.active(Axis::kObject) && !it->second->object_id) {
      out.push_back({id, where + " contains a frame without object_id"});
      return;
    }
    rule(spec.unseen_axes(*it->second));
  };

  for (const auto& id : split.train) {
    check(id, "train", [&](const std::vector<Axis>& unseen) {
      if (!unseen.empty()) out.push_back({id, "train contains unseen label"});
    });
  }
  for (const auto& [c, ids] : split.subsets) {
    const std::string where = criterion_name(c);
    for (const auto& id : ids) {
      check(id, where, [&, c = c](const std::vector<Axis>& unseen) {
        switch (c) {
          case Criterion::kInterpolation:
            if (!unseen.empty()) out.push_back({id, "Interpolation contains unseen label"});
            break;
          case Criterion::kExtrapolation:
            if (unseen.size() < 2) out.push_back({id, "Extrapolation frame has fewer than two unseen axes"});
            break;
          default:
            if (unseen.size() != 1 || axis_criterion(unseen.front()) != c) {
              out.push_back({id, where + " frame does not have exactly that axis unseen"});
            }
        }
      });
    }
  }
  for (const auto& d : split.discarded) place(d.frame_id, "discard list");
  for (const auto& lf : labels) {
    if (!placed.count(lf.frame_id)) out.push_back({lf.frame_id, "labeled frame missing from split"});
  }
  return out;
}

using nlohmann::json;
using nlohmann::ordered_json;

std::string seen_spec_to_json(const SeenSpec& spec) {
  ordered_json j;
  json axes = json::array();
  for (Axis a : spec.active_axes) axes.push_back(axis_name(a));
  j["active_axes"] = axes;
  j["seen_articulation_clusters"] = spec.seen_articulation_clusters;
  j["seen_azimuth_bins"] = spec.seen_azimuth_bins;
  j["seen_elevation_bins"] = spec.seen_elevation_bins;
  j["seen_object_ids"] = spec.seen_object_ids;
  j["seen_shape_ids"] = spec.seen_shape_ids;
  return j.dump();
}

namespace {

SeenSpec spec_from(const json& j) {
  static const std::set<std::string> kKeys = {"active_axes",     "seen_articulation_clusters", "seen_azimuth_bins",
                                              "seen_elevation_bins", "seen_object_ids",        "seen_shape_ids"};
  if (!j.is_object()) throw InvalidSpec("seen spec must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!kKeys.count(k)) throw InvalidSpec("unknown seen-spec key \"" + k + "\"");
  }
  SeenSpec s;
  try {
    for (const auto& a : j.at("active_axes")) s.active_axes.insert(parse_axis(a.get<std::string>()));
    s.seen_azimuth_bins = j.value("seen_azimuth_bins", std::set<int>{});
    s.seen_elevation_bins = j.value("seen_elevation_bins", std::set<int>{});
    s.seen_articulation_clusters = j.value("seen_articulation_clusters", std::set<int>{});
    s.seen_shape_ids = j.value("seen_shape_ids", std::set<std::string>{});
    s.seen_object_ids = j.value("seen_object_ids", std::set<std::string>{});
  } catch (const json::exception& e) {
    throw InvalidSpec(std::string("bad seen spec: ") + e.what());
  }
  return s;
}

}  // namespace

SeenSpec seen_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidSpec(std::string("seen spec is not valid JSON: ") + e.what());
  }
  return spec_from(j);
}

SeenSpec load_seen_spec(const std::filesystem::path& path) { return seen_spec_from_json(read_file(path)); }

std::string split_to_json(const Split& split) {
  ordered_json j;
  j["spec"] = ordered_json::parse(seen_spec_to_json(split.spec));
  j["seed"] = split.seed;
  j["train_fraction"] = split.train_fraction;
  j["train"] = split.train;
  ordered_json subsets = ordered_json::object();
  for (const auto& [c, ids] : split.subsets) subsets[criterion_name(c)] = ids;
  j["subsets"] = subsets;
  ordered_json discarded = ordered_json::array();
  for (const auto& d : split.discarded) discarded.push_back({{"frame_id", d.frame_id}, {"reason", d.reason}});
  j["discarded"] = discarded;
  ordered_json empty = ordered_json::array();
  for (Criterion c : split.empty_criteria) empty.push_back(criterion_name(c));
  j["empty_criteria"] = empty;
  j["warnings"] = split.warnings;
  return j.dump(2) + "\n";
}

Split split_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    Split s;
    s.spec = spec_from(j.at("spec"));
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train_fraction = j.value("train_fraction", 0.8);
    s.train = j.at("train").get<std::vector<std::string>>();
    for (const auto& [name, ids] : j.at("subsets").items()) {
      s.subsets[parse_criterion(name)] = ids.get<std::vector<std::string>>();
    }
    for (const auto& d : j.value("discarded", json::array())) {
      s.discarded.push_back({d.at("frame_id").get<std::string>(), d.at("reason").get<std::string>()});
    }
    for (const auto& c : j.value("empty_criteria", json::array())) {
      s.empty_criteria.push_back(parse_criterion(c.get<std::string>()));
    }
    s.warnings = j.value("warnings", std::vector<std::string>{});
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad split manifest: ") + e.what());
  }
}

void save_split(const Split& split, const std::filesystem::path& path) { write_file_atomic(path, split_to_json(split)); }

Split load_split(const std::filesystem::path& path) { return split_from_json(read_file(path)); }

}  // namespace handgen
