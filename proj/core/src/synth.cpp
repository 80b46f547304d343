#include "handgen/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "handgen/file_util.hpp"
#include "handgen/random.hpp"

namespace handgen {

std::size_t DepthImage::valid_pixels() const {
  return static_cast<std::size_t>(std::count_if(depth.begin(), depth.end(), [](double d) { return d > 0.0; }));
}

void SynthJitter::validate() const {
  for (double s : {shape, rotation_rad, translation_mm, log_scale, articulation_rad}) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("jitter sigmas must be finite and >= 0");
  }
}

namespace {

HandParams jittered(const HandParams& base, const SynthJitter& j, Rng& rng) {
  ShapeVector s = base.shape();
  GlobalVector c = base.global();
  ArticulationVector a = base.articulation();
  if (j.shape > 0.0) {
    for (int i = 0; i < kShapeDim; ++i) s(i) += rng.normal(j.shape);
  }
  if (j.rotation_rad > 0.0) {
    const Vec3 w(rng.normal(j.rotation_rad), rng.normal(j.rotation_rad), rng.normal(j.rotation_rad));
    c.head<4>() = quaternion_multiply(axis_angle_quaternion(w), base.quaternion());
  }
  if (j.translation_mm > 0.0) {
    for (int i = 0; i < 3; ++i) c(4 + i) += rng.normal(j.translation_mm);
  }
  if (j.log_scale > 0.0) c(7) += rng.normal(j.log_scale);
  if (j.articulation_rad > 0.0) {
    for (int i = 0; i < kArticulationDim; ++i) a(i) += rng.normal(j.articulation_rad);
  }
  return HandParams(s, c, a);
}

}  // namespace

std::vector<HandParams> sample_params(std::span<const HandParams> fits, const SynthJitter& jitter, std::uint64_t seed,
                                      std::size_t count) {
  if (fits.empty()) throw EmptyFits();
  jitter.validate();
  Rng rng(seed);
  std::vector<HandParams> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const HandParams& base = fits[static_cast<std::size_t>(rng.index(fits.size()))];
    const bool none = jitter.shape == 0.0 && jitter.rotation_rad == 0.0 && jitter.translation_mm == 0.0 &&
                      jitter.log_scale == 0.0 && jitter.articulation_rad == 0.0;
    out.push_back(none ? base : jittered(base, jitter, rng));
  }
  return out;
}

HandParams sample_params(std::span<const HandParams> fits, const SynthJitter& jitter, std::uint64_t seed) {
  return sample_params(fits, jitter, seed, 1).front();
}

DepthImage render_mesh_depth(const VertexMatrix& vertices, const FaceMatrix& faces, const CameraIntrinsics& k) {
  if (!k.valid()) throw ValidationError("invalid camera intrinsics");
  if (!vertices.allFinite()) throw ValidationError("mesh vertices must be finite");
  const auto n = vertices.rows();
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> proj(n, 3);  // u, v, 1/z
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = vertices(i, 2);
    if (!(z > 0.0)) throw BehindCamera();
    proj(i, 0) = k.fx * vertices(i, 0) / z + k.cx;
    proj(i, 1) = k.fy * vertices(i, 1) / z + k.cy;
    proj(i, 2) = 1.0 / z;
  }

  DepthImage img(k.width, k.height);
  std::vector<double> inv_depth(img.depth.size(), 0.0);  // larger = nearer
  for (Eigen::Index f = 0; f < faces.rows(); ++f) {
    const auto a = proj.row(faces(f, 0));
    const auto b = proj.row(faces(f, 1));
    const auto c = proj.row(faces(f, 2));
    const double area = (b(0) - a(0)) * (c(1) - a(1)) - (b(1) - a(1)) * (c(0) - a(0));
    if (!(std::abs(area) > 1e-12)) continue;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a(0), b(0), c(0)}) - 0.5)));
    const int x1 = std::min(k.width - 1, static_cast<int>(std::ceil(std::max({a(0), b(0), c(0)}) - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a(1), b(1), c(1)}) - 0.5)));
    const int y1 = std::min(k.height - 1, static_cast<int>(std::ceil(std::max({a(1), b(1), c(1)}) - 0.5)));
    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        const double wa = ((b(0) - px) * (c(1) - py) - (b(1) - py) * (c(0) - px)) / area;
        const double wb = ((c(0) - px) * (a(1) - py) - (c(1) - py) * (a(0) - px)) / area;
        const double wc = 1.0 - wa - wb;
        if (wa < 0.0 || wb < 0.0 || wc < 0.0) continue;
        const double inv_z = wa * a(2) + wb * b(2) + wc * c(2);
        double& best = inv_depth[static_cast<std::size_t>(y) * static_cast<std::size_t>(k.width) +
                                 static_cast<std::size_t>(x)];
        if (inv_z > best) best = inv_z;
      }
    }
  }
  for (std::size_t i = 0; i < img.depth.size(); ++i) {
    if (inv_depth[i] > 0.0) img.depth[i] = 1.0 / inv_depth[i];
  }
  return img;
}

DepthImage render_depth(const HandParams& params, const TemplateMesh& tpl, const CameraIntrinsics& intrinsics) {
  return render_mesh_depth(forward(params, tpl).vertices, tpl.faces(), intrinsics);
}

DepthImage mix_depth(const DepthImage& real, const DepthImage& synthetic) {
  if (real.width != synthetic.width || real.height != synthetic.height) {
    throw DimensionMismatch("depth images differ in size");
  }
  DepthImage out(real.width, real.height);
  for (std::size_t i = 0; i < out.depth.size(); ++i) {
    const double r = real.depth[i];
    const double s = synthetic.depth[i];
    if (r > 0.0 && s > 0.0) {
      out.depth[i] = std::min(r, s);
    } else if (r > 0.0) {
      out.depth[i] = r;
    } else if (s > 0.0) {
      out.depth[i] = s;
    }
  }
  return out;
}

std::string depth_to_pgm(const DepthImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n65535\n";
  out.reserve(out.size() + 2 * img.depth.size());
  for (double d : img.depth) {
    const auto v = static_cast<unsigned>(std::clamp(std::round(d > 0.0 ? d : 0.0), 0.0, 65535.0));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
  }
  return out;
}

DepthImage depth_from_pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  int w = 0;
  int h = 0;
  int maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw ValidationError("not a binary PGM depth image");
  }
  in.get();
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  const auto offset = static_cast<std::size_t>(in.tellg());
  DepthImage img(w, h);
  if (bytes.size() < offset + bpp * img.depth.size()) throw ValidationError("truncated PGM image");
  for (std::size_t i = 0; i < img.depth.size(); ++i) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + offset + bpp * i);
    img.depth[i] = bpp == 2 ? static_cast<double>((p[0] << 8) | p[1]) : static_cast<double>(p[0]);
  }
  return img;
}

void save_depth_pgm(const DepthImage& img, const std::filesystem::path& path) {
  write_file_atomic(path, depth_to_pgm(img));
}

DepthImage load_depth_pgm(const std::filesystem::path& path) { return depth_from_pgm(read_file(path)); }

std::string render_sidecar_json(const std::string& sample_id, const CameraIntrinsics& k, const HandParams& params) {
  using nlohmann::json;
  auto arr = [](const auto& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  const json j{{"sample_id", sample_id},
               {"intrinsics",
                {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}}},
               {"params", {{"s", arr(params.shape())}, {"c", arr(params.global())}, {"a", arr(params.articulation())}}},
               {"units", "mm"}};
  return j.dump(2) + "\n";
}

}  // namespace handgen
