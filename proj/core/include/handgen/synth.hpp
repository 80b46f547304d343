#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "handgen/errors.hpp"
#include "handgen/hand_model.hpp"

namespace handgen {

class EmptyFits : public ValidationError {
 public:
  EmptyFits() : ValidationError("no fitted parameters to sample from") {}
};

class BehindCamera : public ValidationError {
 public:
  BehindCamera() : ValidationError("mesh has a vertex at or behind the camera plane") {}
};

class DimensionMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Row-major depth in mm; 0 marks background.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> depth;

  DepthImage() = default;
  DepthImage(int w, int h) : width(w), height(h), depth(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0) {}

  double& at(int x, int y) { return depth[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
  double at(int x, int y) const {
    return depth[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
  std::size_t valid_pixels() const;

  friend bool operator==(const DepthImage&, const DepthImage&) = default;
};

/// Standard deviations of the Gaussian jitter per parameter block. Rotation
/// jitter is an axis-angle perturbation applied on the left of the fitted
/// rotation.
struct SynthJitter {
  double shape = 0.2;
  double rotation_rad = 0.1;
  double translation_mm = 10.0;
  double log_scale = 0.0;
  double articulation_rad = 0.1;

  static SynthJitter none() { return {0.0, 0.0, 0.0, 0.0, 0.0}; }
  void validate() const;
};

/// Picks one fitted set uniformly and jitters it. A block whose sigma is 0
/// is returned untouched. Throws EmptyFits.
HandParams sample_params(std::span<const HandParams> fits, const SynthJitter& jitter, std::uint64_t seed);
/// `count` samples from one seeded stream.
std::vector<HandParams> sample_params(std::span<const HandParams> fits, const SynthJitter& jitter, std::uint64_t seed,
                                      std::size_t count);

/// Z-buffer rasterization of the posed template. Pixel (i, j) samples the
/// image point (i + 0.5, j + 0.5); depth is interpolated perspective-correctly.
/// Throws BehindCamera when any vertex has z <= 0.
DepthImage render_depth(const HandParams& params, const TemplateMesh& tpl, const CameraIntrinsics& intrinsics);
DepthImage render_mesh_depth(const VertexMatrix& vertices, const FaceMatrix& faces, const CameraIntrinsics& intrinsics);

/// Per pixel the nearest valid depth of the two. Throws DimensionMismatch.
DepthImage mix_depth(const DepthImage& real, const DepthImage& synthetic);

/// Binary 16-bit PGM in mm, rounded and capped at 65535.
std::string depth_to_pgm(const DepthImage& img);
DepthImage depth_from_pgm(const std::string& bytes);
void save_depth_pgm(const DepthImage& img, const std::filesystem::path& path);
DepthImage load_depth_pgm(const std::filesystem::path& path);

/// JSON sidecar with the intrinsics and the parameters that produced a render.
std::string render_sidecar_json(const std::string& sample_id, const CameraIntrinsics& intrinsics,
                                const HandParams& params);

}  // namespace handgen
