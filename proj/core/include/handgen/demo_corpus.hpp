#pragma once

#include <cstdint>
#include <vector>

#include "handgen/hand_model.hpp"
#include "handgen/split.hpp"

namespace handgen {

/// Frames per category. The defaults give a 500-frame test side split
/// 20/16/16/32/16 % (Extrapolation, Interpolation, Articulation, Viewpoint,
/// Shape) once the 400 all-seen frames are cut at train fraction 0.8.
struct DemoCounts {
  int all_seen = 400;
  int viewpoint = 160;
  int articulation = 80;
  int shape = 80;
  int extrapolation = 100;

  int total() const { return all_seen + viewpoint + articulation + shape + extrapolation; }
};

struct DemoCorpus {
  std::vector<Frame> frames;
  std::vector<HandParams> params;  // ground truth per frame
  SeenSpec spec;
  double train_fraction = 0.8;
};

/// Seen labels of the demo: azimuth bins 0..8, every elevation bin,
/// articulation clusters 0..23, subjects s0..s3. Unseen values are azimuth bins
/// 9..11, clusters 24..31 and subjects s4, s5.
SeenSpec demo_seen_spec();

CameraIntrinsics demo_intrinsics();

/// Skeletons come from the hand model with a canonical open/closed
/// articulation and a global rotation that puts the palm normal at the centre
/// of the requested viewpoint bin, so every frame's labels are known by
/// construction. Subjects, object-free, cycle through all 32 clusters and all
/// 72 viewpoint cells.
DemoCorpus make_demo_corpus(const TemplateMesh& tpl, std::uint64_t seed, const DemoCounts& counts = {});

}  // namespace handgen
