#include <benchmark/benchmark.h>

#include "handgen/evaluator.hpp"
#include "handgen/fitter.hpp"
#include "handgen/random.hpp"
#include "handgen/refinement.hpp"
#include "handgen/synth.hpp"

using namespace handgen;

namespace {

const TemplateMesh& tpl(int n) {
  static const TemplateMesh coarse = build_default_template(8);
  static const TemplateMesh standard = build_default_template(28);
  return n == 8 ? coarse : standard;
}

HandParams some_params(Rng& rng) {
  ParamVector x = HandParams().to_vector();
  for (int i = kArticulationOffset; i < kParamDim; ++i) x(i) = rng.normal(0.3);
  x.segment<3>(kTranslationOffset) = Vec3(0.0, 0.0, 400.0);
  return HandParams::from_vector(x);
}

JointMatrix noisy(const JointMatrix& j, Rng& rng, double sigma) {
  JointMatrix out = j;
  for (int r = 0; r < kNumJoints; ++r) {
    for (int c = 0; c < 3; ++c) out(r, c) += rng.normal(sigma);
  }
  return out;
}

void BM_Forward(benchmark::State& state) {
  const auto& t = tpl(static_cast<int>(state.range(0)));
  Rng rng(1);
  const HandParams p = some_params(rng);
  for (auto _ : state) benchmark::DoNotOptimize(forward(p, t));
  state.counters["vertices"] = static_cast<double>(t.vertices().rows());
}
BENCHMARK(BM_Forward)->Arg(8)->Arg(28)->Unit(benchmark::kMicrosecond);

void BM_Gradient(benchmark::State& state) {
  const auto& t = tpl(static_cast<int>(state.range(0)));
  Rng rng(2);
  const HandParams p = some_params(rng);
  const Skeleton target = model_skeleton(some_params(rng), t);
  const FitConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(gradient(p, target, t, cfg));
}
BENCHMARK(BM_Gradient)->Arg(8)->Arg(28)->Unit(benchmark::kMicrosecond);

void BM_Evaluate(benchmark::State& state) {
  Rng rng(3);
  const auto n = static_cast<int>(state.range(0));
  std::vector<Frame> frames;
  std::vector<Prediction> preds;
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    Frame f;
    f.frame_id = "f" + std::to_string(i);
    f.subject_id = "s";
    f.skeleton = canonical_skeleton();
    f.skeleton.joints = noisy(f.skeleton.joints, rng, 5.0);
    preds.push_back({f.frame_id, noisy(f.skeleton.joints, rng, 10.0)});
    ids.push_back(f.frame_id);
    frames.push_back(std::move(f));
  }
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(preds, frames, ids));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Evaluate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Render(benchmark::State& state) {
  const auto& t = tpl(28);
  Rng rng(4);
  const HandParams p = some_params(rng);
  const CameraIntrinsics k{475.0, 475.0, 320.0, 240.0, 640, 480};
  for (auto _ : state) benchmark::DoNotOptimize(render_depth(p, t, k));
}
BENCHMARK(BM_Render)->Unit(benchmark::kMillisecond);

void BM_SvdRefine(benchmark::State& state) {
  Rng rng(5);
  std::vector<Skeleton> train;
  for (int i = 0; i < 500; ++i) train.push_back(model_skeleton(some_params(rng), tpl(8)));
  const PoseBasis basis = fit_pose_basis(train);
  const PoseVector x = Skeleton{noisy(train.front().joints, rng, 5.0)}.flat();
  for (auto _ : state) benchmark::DoNotOptimize(svd_refine(x, basis));
}
BENCHMARK(BM_SvdRefine)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
