#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "handgen/annotator.hpp"
#include "handgen/fitter.hpp"
#include "handgen/random.hpp"

namespace fixtures {

using namespace handgen;

inline const TemplateMesh& default_template() {
  static const TemplateMesh tpl = build_default_template();
  return tpl;
}

inline const TemplateMesh& coarse_template() {
  static const TemplateMesh tpl = build_default_template(8);
  return tpl;
}

// Moderate random parameters in front of the camera.
inline HandParams random_params(Rng& rng, double spread = 0.3) {
  ParamVector x;
  for (int i = 0; i < kParamDim; ++i) x(i) = rng.normal(spread);
  x.segment<4>(kQuatOffset) = Vec4(1.0, rng.normal(0.2), rng.normal(0.2), rng.normal(0.2));
  x.segment<3>(kTranslationOffset) = Vec3(rng.normal(20.0), rng.normal(20.0), 400.0 + rng.normal(20.0));
  x(kLogScaleOffset) = rng.normal(0.05);
  return HandParams::from_vector(x);
}

// The self-fit distribution: flexion-dominated articulation, mild global pose.
inline HandParams self_fit_params(Rng& rng) {
  ShapeVector s;
  for (int i = 0; i < kShapeDim; ++i) s(i) = rng.normal(0.5);
  GlobalVector g;
  const Vec3 aa(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
  g.head<4>() = axis_angle_quaternion(aa);
  g.segment<3>(4) = Vec3(rng.uniform(-30.0, 30.0), rng.uniform(-30.0, 30.0), 400.0 + rng.uniform(-30.0, 30.0));
  g(7) = rng.uniform(-0.05, 0.05);
  ArticulationVector a;
  for (int f = 0; f < kNumFingers; ++f) {
    for (int seg = 0; seg < 3; ++seg) {
      const double flex = rng.uniform(0.0, 1.2);
      a.segment<3>(3 * (3 * f + seg)) = flex * flexion_axis(f) + Vec3(rng.normal(0.1), rng.normal(0.1), rng.normal(0.1));
    }
  }
  return HandParams(s, g, a);
}

// Random skeleton with every bone of positive length: a jittered, randomly
// rotated copy of the flat hand.
inline Skeleton random_skeleton(Rng& rng, double jitter = 8.0) {
  Skeleton sk = canonical_skeleton();
  for (int j = 0; j < kNumJoints; ++j) {
    sk.set_joint(j, sk.joint(j) + Vec3(rng.normal(jitter), rng.normal(jitter), rng.normal(jitter)));
  }
  const Vec3 aa(rng.normal(), rng.normal(), rng.normal());
  const Vec3 t(rng.normal(30.0), rng.normal(30.0), 400.0 + rng.normal(30.0));
  return sk.transformed(rodrigues(aa), t);
}

inline Frame make_frame(const std::string& id, const Skeleton& sk, const std::string& subject = "s0") {
  Frame f;
  f.frame_id = id;
  f.skeleton = sk;
  f.subject_id = subject;
  return f;
}

inline std::string frame_id(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "f%05d", i);
  return buf;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("handgen_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
