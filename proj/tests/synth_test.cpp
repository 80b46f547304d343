#include <gtest/gtest.h>

#include <set>

#include "handgen/annotator.hpp"
#include "handgen/synth.hpp"
#include "support/fixtures.hpp"

using namespace handgen;

namespace {

CameraIntrinsics small_camera() { return {120.0, 120.0, 64.0, 48.0, 128, 96}; }

HandParams posed_at(double z, const ArticulationVector& a = canonical_articulation(31)) {
  GlobalVector g = HandParams().global();
  g.segment<3>(4) = Vec3(0, 0, z);
  return HandParams(ShapeVector::Zero(), g, a);
}

double mean_depth(const DepthImage& img) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double d : img.depth) {
    if (d > 0.0) {
      sum += d;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

DepthImage random_image(Rng& rng, int w, int h) {
  DepthImage img(w, h);
  for (auto& d : img.depth) d = rng.uniform() < 0.4 ? 0.0 : rng.uniform(200.0, 900.0);
  return img;
}

}  // namespace

TEST(SynthJitter, Validation) {
  EXPECT_NO_THROW(SynthJitter{}.validate());
  EXPECT_NO_THROW(SynthJitter::none().validate());
  SynthJitter j;
  j.shape = -1.0;
  EXPECT_THROW(j.validate(), ValidationError);
}

TEST(SampleParams, ZeroJitterReturnsAFit) {
  Rng rng(1);
  std::vector<HandParams> fits;
  for (int i = 0; i < 5; ++i) fits.push_back(fixtures::random_params(rng));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const HandParams p = sample_params(fits, SynthJitter::none(), seed);
    EXPECT_NE(std::find(fits.begin(), fits.end(), p), fits.end());
  }
}

TEST(SampleParams, SeedDeterminismAndErrors) {
  Rng rng(2);
  std::vector<HandParams> fits = {fixtures::random_params(rng), fixtures::random_params(rng)};
  EXPECT_EQ(sample_params(fits, SynthJitter{}, 9), sample_params(fits, SynthJitter{}, 9));
  EXPECT_EQ(sample_params(fits, SynthJitter{}, 9, 10), sample_params(fits, SynthJitter{}, 9, 10));
  EXPECT_NE(sample_params(fits, SynthJitter{}, 9), sample_params(fits, SynthJitter{}, 10));
  EXPECT_THROW(sample_params(std::span<const HandParams>{}, SynthJitter{}, 1), EmptyFits);
}

TEST(SampleParams, UntouchedBlocksStayExact) {
  Rng rng(3);
  const std::vector<HandParams> fits = {fixtures::random_params(rng)};
  SynthJitter j = SynthJitter::none();
  j.articulation_rad = 0.2;
  const HandParams p = sample_params(fits, j, 4);
  EXPECT_EQ(p.shape(), fits[0].shape());
  EXPECT_EQ(p.global(), fits[0].global());
  EXPECT_NE(p.articulation(), fits[0].articulation());
}

TEST(SampleParams, ArticulationJitterBroadensClusters) {
  const auto& tpl = fixtures::coarse_template();
  Rng rng(5);
  std::vector<HandParams> fits;
  for (int i = 0; i < 5; ++i) fits.push_back(fixtures::self_fit_params(rng));
  std::set<int> base;
  for (const auto& f : fits) base.insert(articulation_cluster(model_skeleton(f, tpl)));
  SynthJitter j = SynthJitter::none();
  j.articulation_rad = 0.1;
  std::set<int> jittered;
  for (const auto& p : sample_params(fits, j, 5, 1000)) jittered.insert(articulation_cluster(model_skeleton(p, tpl)));
  EXPECT_GT(jittered.size(), base.size());
}

TEST(Render, DepthTracksDistanceAndSilhouetteShrinks) {
  const auto& tpl = fixtures::coarse_template();
  const CameraIntrinsics cam = small_camera();
  const DepthImage near = render_depth(posed_at(400.0), tpl, cam);
  const DepthImage far = render_depth(posed_at(450.0), tpl, cam);
  ASSERT_GT(near.valid_pixels(), 100u);
  EXPECT_NEAR(mean_depth(far) - mean_depth(near), 50.0, 2.0);
  EXPECT_LT(far.valid_pixels(), near.valid_pixels());
  for (double d : near.depth) {
    if (d > 0.0) EXPECT_GT(d, 300.0);
  }
}

TEST(Render, OutsideFrustumIsEmptyAndBehindThrows) {
  const auto& tpl = fixtures::coarse_template();
  GlobalVector g = HandParams().global();
  g.segment<3>(4) = Vec3(5000, 0, 400);
  const HandParams off(ShapeVector::Zero(), g, ArticulationVector::Zero());
  EXPECT_EQ(render_depth(off, tpl, small_camera()).valid_pixels(), 0u);
  EXPECT_THROW(render_depth(posed_at(0.0), tpl, small_camera()), BehindCamera);
}

TEST(Render, WristPixelLiesOnTheSurface) {
  const auto& tpl = fixtures::coarse_template();
  const CameraIntrinsics cam = small_camera();
  const HandParams p = posed_at(400.0);
  const DepthImage img = render_depth(p, tpl, cam);
  const Vec3 w = model_skeleton(p, tpl).joints.row(kWrist).transpose();
  const int u = static_cast<int>(std::floor(cam.fx * w.x() / w.z() + cam.cx));
  const int v = static_cast<int>(std::floor(cam.fy * w.y() / w.z() + cam.cy));
  ASSERT_TRUE(u >= 0 && u < cam.width && v >= 0 && v < cam.height);
  const double d = img.at(u, v);
  ASSERT_GT(d, 0.0);
  EXPECT_LT(std::abs(d - w.z()), 30.0);
}

TEST(Render, DeterministicAndRotationKeepsArea) {
  const auto& tpl = fixtures::coarse_template();
  const CameraIntrinsics cam = {240.0, 240.0, 128.0, 128.0, 256, 256};
  const HandParams p = posed_at(400.0);
  const DepthImage a = render_depth(p, tpl, cam);
  EXPECT_EQ(a, render_depth(p, tpl, cam));

  // Rotating about the optical axis around the principal ray keeps the area.
  const Mesh m = forward(p, tpl);
  const Vec3 c = m.vertices.colwise().mean().transpose();
  const Mat3 r = Eigen::AngleAxisd(0.7, Vec3::UnitZ()).toRotationMatrix();
  VertexMatrix rotated = m.vertices;
  for (Eigen::Index i = 0; i < rotated.rows(); ++i) {
    const Vec3 x = m.vertices.row(i).transpose() - Vec3(c.x(), c.y(), 0.0);
    rotated.row(i) = (r * x).transpose();
  }
  const DepthImage b = render_mesh_depth(rotated, tpl.faces(), cam);
  const DepthImage a0 = [&] {
    VertexMatrix centred = m.vertices;
    centred.col(0).array() -= c.x();
    centred.col(1).array() -= c.y();
    return render_mesh_depth(centred, tpl.faces(), cam);
  }();
  const double ratio = static_cast<double>(b.valid_pixels()) / static_cast<double>(a0.valid_pixels());
  EXPECT_NEAR(ratio, 1.0, 0.02);
}

TEST(MixDepth, AlgebraOnRandomImages) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const DepthImage a = random_image(rng, 64, 64);
    const DepthImage b = random_image(rng, 64, 64);
    const DepthImage empty(64, 64);
    EXPECT_EQ(mix_depth(a, b), mix_depth(b, a));
    EXPECT_EQ(mix_depth(a, a), a);
    const DepthImage c = random_image(rng, 64, 64);
    EXPECT_EQ(mix_depth(mix_depth(a, b), c), mix_depth(a, mix_depth(b, c)));
    EXPECT_EQ(mix_depth(a, empty), a);
    EXPECT_EQ(mix_depth(empty, b), b);
    const DepthImage m = mix_depth(a, b);
    for (std::size_t i = 0; i < m.depth.size(); ++i) {
      const double x = a.depth[i];
      const double y = b.depth[i];
      const double expect = x == 0.0 ? y : y == 0.0 ? x : std::min(x, y);
      EXPECT_EQ(m.depth[i], expect);
    }
  }
  EXPECT_THROW(mix_depth(DepthImage(64, 64), DepthImage(64, 32)), DimensionMismatch);
}

TEST(Pgm, RoundTrip) {
  Rng rng(9);
  DepthImage img = random_image(rng, 33, 17);
  for (auto& d : img.depth) d = std::round(d);
  img.depth[0] = 70000.0;
  const std::string bytes = depth_to_pgm(img);
  EXPECT_EQ(bytes.rfind("P5\n", 0), 0u);
  const DepthImage back = depth_from_pgm(bytes);
  EXPECT_EQ(back.width, 33);
  EXPECT_EQ(back.height, 17);
  EXPECT_EQ(back.depth[0], 65535.0);
  for (std::size_t i = 1; i < img.depth.size(); ++i) EXPECT_EQ(back.depth[i], img.depth[i]);
  fixtures::TempDir dir("pgm");
  save_depth_pgm(back, dir / "d.pgm");
  EXPECT_EQ(load_depth_pgm(dir / "d.pgm"), back);
  EXPECT_THROW(depth_from_pgm("P2\n1 1\n255\n0"), ValidationError);
}

TEST(Sidecar, CarriesIntrinsicsAndParams) {
  const std::string s = render_sidecar_json("x1", small_camera(), HandParams());
  EXPECT_NE(s.find("\"x1\""), std::string::npos);
  EXPECT_NE(s.find("fx"), std::string::npos);
}
