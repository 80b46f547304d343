#include "handgen/demo_corpus.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>

#include "handgen/annotator.hpp"
#include "handgen/random.hpp"

namespace handgen {

namespace {

constexpr int kSeenAzimuth = 9;
constexpr int kSeenClusters = 24;
constexpr int kSeenSubjects = 4;
constexpr int kSubjects = 6;
constexpr double kDeg = std::numbers::pi / 180.0;

struct Cell {
  int azimuth_bin;
  int elevation_bin;
  int cluster;
  int subject;
};

std::string subject_name(int s) { return "s" + std::to_string(s); }

int seen_az(int i) { return i % kSeenAzimuth; }
int unseen_az(int i) { return kSeenAzimuth + i % (kAzimuthBins - kSeenAzimuth); }
int seen_cluster(int i) { return i % kSeenClusters; }
int unseen_cluster(int i) { return kSeenClusters + i % (kArticulationClusters - kSeenClusters); }
int seen_subject(int i) { return i % kSeenSubjects; }
int unseen_subject(int i) { return kSeenSubjects + i % (kSubjects - kSeenSubjects); }

std::vector<Cell> plan(const DemoCounts& counts) {
  std::vector<Cell> cells;
  for (int i = 0; i < counts.all_seen; ++i) {
    cells.push_back({seen_az(i), (i / kSeenAzimuth) % kElevationBins, seen_cluster(i), seen_subject(i / 3)});
  }
  for (int i = 0; i < counts.viewpoint; ++i) {
    cells.push_back({unseen_az(i), (i / 3) % kElevationBins, seen_cluster(7 * i), seen_subject(i)});
  }
  for (int i = 0; i < counts.articulation; ++i) {
    cells.push_back({seen_az(i), (i / kSeenAzimuth) % kElevationBins, unseen_cluster(i), seen_subject(i / 2)});
  }
  for (int i = 0; i < counts.shape; ++i) {
    cells.push_back({seen_az(i), (i / kSeenAzimuth) % kElevationBins, seen_cluster(5 * i), unseen_subject(i)});
  }
  // Two or more unseen axes, cycling through the four combinations.
  for (int i = 0; i < counts.extrapolation; ++i) {
    const int k = i / 4;
    switch (i % 4) {
      case 0: cells.push_back({unseen_az(k), k % kElevationBins, unseen_cluster(k), seen_subject(k)}); break;
      case 1: cells.push_back({unseen_az(k), k % kElevationBins, seen_cluster(k), unseen_subject(k)}); break;
      case 2: cells.push_back({seen_az(k), k % kElevationBins, unseen_cluster(k), unseen_subject(k)}); break;
      default: cells.push_back({unseen_az(k), (k + 3) % kElevationBins, unseen_cluster(k + 3), unseen_subject(k)});
    }
  }
  return cells;
}

Vec3 bin_normal(int az_bin, int el_bin, Rng& rng) {
  // Bin centre plus up to 10 degrees of jitter keeps 5 degrees from every edge.
  const double az = (-180.0 + kBinWidthDeg * az_bin + 15.0 + rng.uniform(-10.0, 10.0)) * kDeg;
  const double el = (-90.0 + kBinWidthDeg * el_bin + 15.0 + rng.uniform(-10.0, 10.0)) * kDeg;
  return {std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az)};
}

}  // namespace

SeenSpec demo_seen_spec() {
  SeenSpec s;
  for (int i = 0; i < kSeenAzimuth; ++i) s.seen_azimuth_bins.insert(i);
  for (int i = 0; i < kElevationBins; ++i) s.seen_elevation_bins.insert(i);
  for (int i = 0; i < kSeenClusters; ++i) s.seen_articulation_clusters.insert(i);
  for (int i = 0; i < kSeenSubjects; ++i) s.seen_shape_ids.insert(subject_name(i));
  s.active_axes = {Axis::kViewpoint, Axis::kArticulation, Axis::kShape};
  return s;
}

CameraIntrinsics demo_intrinsics() { return {475.0, 475.0, 320.0, 240.0, 640, 480}; }

DemoCorpus make_demo_corpus(const TemplateMesh& tpl, std::uint64_t seed, const DemoCounts& counts) {
  Rng rng(seed);
  std::array<ShapeVector, kSubjects> shapes;
  for (auto& s : shapes) {
    for (int i = 0; i < kShapeDim; ++i) s(i) = rng.normal();
  }

  DemoCorpus corpus;
  corpus.spec = demo_seen_spec();
  std::map<int, long long> clock;
  const auto cells = plan(counts);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& cell = cells[i];
    const ArticulationVector art = canonical_articulation(cell.cluster);
    const HandParams local(shapes[static_cast<std::size_t>(cell.subject)], HandParams().global(), art);
    const Vec3 n0 = palm_normal(model_skeleton(local, tpl));

    const Vec3 target = bin_normal(cell.azimuth_bin, cell.elevation_bin, rng);
    const double roll = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Eigen::Quaterniond q =
        Eigen::Quaterniond(Eigen::AngleAxisd(roll, target)) * Eigen::Quaterniond::FromTwoVectors(n0, target);
    GlobalVector g;
    g << q.w(), q.x(), q.y(), q.z(), rng.normal(15.0), rng.normal(15.0), 450.0 + rng.normal(25.0), 0.0;
    const HandParams params(local.shape(), g, art);

    Frame f;
    char id[32];
    std::snprintf(id, sizeof id, "demo_%04zu", i);
    f.frame_id = id;
    f.skeleton = model_skeleton(params, tpl);
    f.subject_id = subject_name(cell.subject);
    f.intrinsics = demo_intrinsics();
    f.sequence_id = "seq_" + f.subject_id;
    f.time_index = clock[cell.subject]++;

    const AxisLabels l = annotate_frame(f);
    if (l.azimuth_bin != cell.azimuth_bin || l.elevation_bin != cell.elevation_bin ||
        l.articulation_cluster != cell.cluster) {
      throw ValidationError("demo frame " + f.frame_id + " does not annotate to its planned labels");
    }
    corpus.frames.push_back(std::move(f));
    corpus.params.push_back(params);
  }
  return corpus;
}

}  // namespace handgen
