#include <gtest/gtest.h>

#include <algorithm>

#include "handgen/evaluator.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace handgen;

namespace {

struct Fixture {
  std::vector<Frame> frames;
  std::vector<Prediction> preds;
  std::vector<std::string> ids;
};

Fixture random_fixture(Rng& rng, int n, double noise, int drop_every = 0) {
  Fixture fx;
  for (int i = 0; i < n; ++i) {
    const std::string id = fixtures::frame_id(i);
    fx.frames.push_back(fixtures::make_frame(id, fixtures::random_skeleton(rng)));
    fx.ids.push_back(id);
    if (drop_every && i % drop_every == 0) continue;
    JointMatrix p = fx.frames.back().skeleton.joints;
    const double scale = noise * rng.uniform(0.1, 3.0);
    for (int j = 0; j < kNumJoints; ++j) {
      for (int k = 0; k < 3; ++k) p(j, k) += rng.normal(scale);
    }
    fx.preds.push_back({id, p});
  }
  return fx;
}

MethodReport with_scores(std::optional<double> extrap, std::optional<double> interp) {
  MethodReport r;
  if (extrap) r.criteria["Extrapolation"].score.mje_mm = *extrap;
  if (interp) r.criteria["Interpolation"].score.mje_mm = *interp;
  return r;
}

std::vector<std::string> order(const std::vector<RankEntry>& ranking) {
  std::vector<std::string> out;
  for (const auto& e : ranking) out.push_back(e.method);
  return out;
}

}  // namespace

TEST(Mje, TrivialCases) {
  const Skeleton sk = canonical_skeleton();
  EXPECT_EQ(mje(Prediction{"a", sk.joints}, sk), 0.0);
  JointMatrix off = sk.joints;
  off.col(0).array() += 3.0;
  EXPECT_DOUBLE_EQ(mje(Prediction{"a", off}, sk), 3.0);
}

TEST(Mje, MatchesPerJointLoop) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Skeleton t = fixtures::random_skeleton(rng);
    const Skeleton p = fixtures::random_skeleton(rng);
    EXPECT_NEAR(mje(Prediction{"x", p.joints}, t), oracle::mje(p.joints, t.joints), 1e-12);
  }
}

TEST(ThresholdGrid, DefaultHas81Points) {
  const auto g = threshold_grid();
  ASSERT_EQ(g.size(), 81u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 80.0);
  EXPECT_EQ(threshold_grid(10.0, 2.5).size(), 5u);
}

TEST(Evaluate, PerfectPredictions) {
  Rng rng(5);
  Fixture fx = random_fixture(rng, 10, 0.0);
  for (std::size_t i = 0; i < fx.preds.size(); ++i) fx.preds[i].joints = fx.frames[i].skeleton.joints;
  const SubsetScore s = evaluate(fx.preds, fx.frames, fx.ids);
  EXPECT_EQ(*s.mje_mm, 0.0);
  for (double r : s.frame_curve.rates) EXPECT_EQ(r, 1.0);
  for (double r : s.joint_curve.rates) EXPECT_EQ(r, 1.0);
}

TEST(Evaluate, OneBadJointStepsAtItsError) {
  const Skeleton sk = canonical_skeleton();
  JointMatrix p = sk.joints;
  p(7, 0) += 50.0;
  const std::vector<Frame> frames = {fixtures::make_frame("a", sk)};
  const std::vector<Prediction> preds = {{"a", p}};
  const std::vector<std::string> ids = {"a"};
  const SubsetScore s = evaluate(preds, frames, ids);
  const auto& fr = s.frame_curve.rates;
  const auto& jr = s.joint_curve.rates;
  EXPECT_EQ(fr[50], 0.0);
  EXPECT_EQ(fr[51], 1.0);
  EXPECT_DOUBLE_EQ(jr[0], 20.0 / 21.0);
  EXPECT_DOUBLE_EQ(jr[1], 20.0 / 21.0);
  EXPECT_EQ(jr[51], 1.0);
  EXPECT_DOUBLE_EQ(*s.mje_mm, 50.0 / 21.0);
}

TEST(Evaluate, MatchesBruteForceCurvesAndProperties) {
  Rng rng(7);
  const Fixture fx = random_fixture(rng, 1000, 6.0, 17);
  const auto grid = threshold_grid();
  const SubsetScore s = evaluate(fx.preds, fx.frames, fx.ids, grid);
  EXPECT_EQ(s.frames, 1000u);
  EXPECT_EQ(s.missing, 59u);
  EXPECT_EQ(s.matched, 941u);

  std::vector<std::array<double, kNumJoints>> errs;
  double total = 0.0;
  for (const auto& p : fx.preds) {
    const auto& t = *std::find_if(fx.frames.begin(), fx.frames.end(), [&](const Frame& f) { return f.frame_id == p.frame_id; });
    errs.push_back(oracle::joint_errors(p.joints, t.skeleton.joints));
    total += oracle::mje(p.joints, t.skeleton.joints);
  }
  EXPECT_NEAR(*s.mje_mm, total / static_cast<double>(errs.size()), 1e-12);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_DOUBLE_EQ(s.frame_curve.rates[i], oracle::frame_rate(errs, 1000, grid[i]));
    EXPECT_DOUBLE_EQ(s.joint_curve.rates[i], oracle::joint_rate(errs, 1000, grid[i]));
    EXPECT_LE(s.frame_curve.rates[i], s.joint_curve.rates[i]);
    if (i) {
      EXPECT_GE(s.frame_curve.rates[i], s.frame_curve.rates[i - 1]);
      EXPECT_GE(s.joint_curve.rates[i], s.joint_curve.rates[i - 1]);
    }
  }
  // Far out, every matched frame succeeds and the rate is the matched fraction.
  const SubsetScore wide = evaluate(fx.preds, fx.frames, fx.ids, {1e6});
  EXPECT_DOUBLE_EQ(wide.frame_curve.rates[0], 941.0 / 1000.0);
}

TEST(Evaluate, PermutingPredictionsChangesNothing) {
  Rng rng(11);
  Fixture fx = random_fixture(rng, 200, 4.0);
  const SubsetScore a = evaluate(fx.preds, fx.frames, fx.ids);
  std::reverse(fx.preds.begin(), fx.preds.end());
  std::rotate(fx.ids.begin(), fx.ids.begin() + 37, fx.ids.end());
  EXPECT_EQ(evaluate(fx.preds, fx.frames, fx.ids), a);
}

TEST(Evaluate, UnionMjeIsFrameWeightedMean) {
  Rng rng(13);
  const Fixture fx = random_fixture(rng, 300, 5.0);
  const std::vector<std::string> a(fx.ids.begin(), fx.ids.begin() + 70);
  const std::vector<std::string> b(fx.ids.begin() + 70, fx.ids.end());
  const double ma = *evaluate(fx.preds, fx.frames, a).mje_mm;
  const double mb = *evaluate(fx.preds, fx.frames, b).mje_mm;
  const double mu = *evaluate(fx.preds, fx.frames, fx.ids).mje_mm;
  EXPECT_NEAR(mu, (70.0 * ma + 230.0 * mb) / 300.0, 1e-9);
}

TEST(Evaluate, ErrorsForEmptyUnknownAndDuplicates) {
  Rng rng(17);
  Fixture fx = random_fixture(rng, 3, 1.0);
  EXPECT_THROW(evaluate(fx.preds, fx.frames, std::vector<std::string>{}), EmptySubset);
  EXPECT_THROW(evaluate(fx.preds, fx.frames, std::vector<std::string>{"nope"}), UnknownFrameId);
  fx.preds.push_back(fx.preds.front());
  EXPECT_THROW(ScoringIndex(fx.frames, fx.preds), ValidationError);
  fx.preds.pop_back();
  fx.preds.push_back({"ghost", fx.preds.front().joints});
  const ScoringIndex idx(fx.frames, fx.preds);
  EXPECT_EQ(idx.unresolved(), std::vector<std::string>{"ghost"});
}

TEST(Evaluate, AllMissingGivesNullMje) {
  Rng rng(19);
  const Fixture fx = random_fixture(rng, 4, 1.0, 1);
  const SubsetScore s = evaluate(fx.preds, fx.frames, fx.ids);
  EXPECT_FALSE(s.mje_mm.has_value());
  EXPECT_EQ(s.missing, 4u);
  for (double r : s.frame_curve.rates) EXPECT_EQ(r, 0.0);
}

TEST(Breakdown, SingleLabelEqualsGlobal) {
  Rng rng(23);
  const Fixture fx = random_fixture(rng, 50, 3.0);
  std::vector<LabeledFrame> labels;
  for (const auto& f : fx.frames) labels.push_back({f.frame_id, AxisLabels{0, 0, 4, 2, 9, "s0", std::nullopt}});
  SeenSpec spec;
  spec.seen_shape_ids = {"s0"};
  spec.active_axes = {Axis::kShape};
  const ScoringIndex idx(fx.frames, fx.preds);
  const auto rows = per_label_breakdown(idx, labels, fx.ids, LabelKind::kShape, spec);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].label, "s0");
  EXPECT_TRUE(rows[0].seen);
  EXPECT_NEAR(*rows[0].mje_mm, *evaluate(idx, fx.ids).mje_mm, 1e-12);
}

TEST(Breakdown, KnownPerLabelErrorsAndEmptyRows) {
  const Skeleton sk = canonical_skeleton();
  std::vector<Frame> frames;
  std::vector<Prediction> preds;
  std::vector<LabeledFrame> labels;
  std::vector<std::string> ids;
  for (int i = 0; i < 6; ++i) {
    const std::string id = fixtures::frame_id(i);
    frames.push_back(fixtures::make_frame(id, sk));
    ids.push_back(id);
    const int cluster = i < 3 ? 12 : 3;
    labels.push_back({id, AxisLabels{0, 0, 0, 0, cluster, "s", std::nullopt}});
    JointMatrix p = sk.joints;
    p.col(2).array() += cluster == 3 ? 2.0 : 4.0;
    preds.push_back({id, p});
  }
  frames.push_back(fixtures::make_frame("lonely", sk));
  ids.push_back("lonely");
  labels.push_back({"lonely", AxisLabels{0, 0, 0, 0, 30, "s", std::nullopt}});

  SeenSpec spec;
  spec.seen_articulation_clusters = {3};
  spec.active_axes = {Axis::kArticulation};
  const auto rows = per_label_breakdown(ScoringIndex(frames, preds), labels, ids, LabelKind::kArticulationCluster, spec);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].label, "3");
  EXPECT_DOUBLE_EQ(*rows[0].mje_mm, 2.0);
  EXPECT_TRUE(rows[0].seen);
  EXPECT_EQ(rows[1].label, "12");
  EXPECT_DOUBLE_EQ(*rows[1].mje_mm, 4.0);
  EXPECT_FALSE(rows[1].seen);
  EXPECT_EQ(rows[2].label, "30");
  EXPECT_EQ(rows[2].count, 0u);
  EXPECT_EQ(rows[2].frames, 1u);
  EXPECT_FALSE(rows[2].mje_mm.has_value());
}

TEST(Rank, SixMethodOrder) {
  const std::map<std::string, MethodReport> reports = {
      {"A2J", with_scores(13.74, std::nullopt)},          {"AWR", with_scores(13.76, std::nullopt)},
      {"BT", with_scores(23.62, std::nullopt)},           {"NTIS", with_scores(15.57, std::nullopt)},
      {"Rokid", with_scores(13.66, std::nullopt)},        {"Strawberryfg", with_scores(19.63, std::nullopt)}};
  EXPECT_EQ(order(rank_methods(reports)),
            (std::vector<std::string>{"Rokid", "A2J", "AWR", "NTIS", "Strawberryfg", "BT"}));
}

TEST(Rank, TieBreaksAndErrors) {
  EXPECT_EQ(order(rank_methods({{"solo", with_scores(1.0, std::nullopt)}})), std::vector<std::string>{"solo"});
  EXPECT_EQ(order(rank_methods({{"a", with_scores(13.66, 4.10)}, {"b", with_scores(13.66, 3.93)}})),
            (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(order(rank_methods({{"z", with_scores(2.0, 1.0)}, {"y", with_scores(2.0, 1.0)}, {"x", with_scores(2.0, std::nullopt)}})),
            (std::vector<std::string>{"y", "z", "x"}));
  try {
    rank_methods({{"ok", with_scores(1.0, 1.0)}, {"broken", with_scores(std::nullopt, 1.0)}});
    FAIL();
  } catch (const MissingCriterion& e) {
    EXPECT_EQ(e.method(), "broken");
  }
}

TEST(EvaluateMethod, ScoresApplicableCriteriaAndRejectsUnknownIds) {
  Rng rng(29);
  const Fixture fx = random_fixture(rng, 40, 2.0);
  Split split;
  split.spec.seen_shape_ids = {"s0"};
  split.spec.active_axes = {Axis::kShape};
  split.subsets[Criterion::kExtrapolation] = {};
  split.subsets[Criterion::kInterpolation] = std::vector<std::string>(fx.ids.begin(), fx.ids.begin() + 20);
  split.subsets[Criterion::kShape] = std::vector<std::string>(fx.ids.begin() + 20, fx.ids.end());
  std::vector<LabeledFrame> labels;
  for (std::size_t i = 0; i < fx.frames.size(); ++i) {
    labels.push_back({fx.frames[i].frame_id, AxisLabels{0, 0, 0, 0, 0, i < 20 ? "s0" : "s1", std::nullopt}});
  }
  const MethodReport rep = evaluate_method(fx.preds, fx.frames, split, labels);
  EXPECT_EQ(rep.predictions, 40u);
  ASSERT_EQ(rep.criteria.size(), 3u);
  const auto& ext = rep.criteria.at("Extrapolation");
  EXPECT_FALSE(ext.score.mje_mm.has_value());
  EXPECT_EQ(ext.score.frame_curve.thresholds.size(), 81u);
  EXPECT_TRUE(ext.score.frame_curve.rates.empty());
  const auto& shape = rep.criteria.at("Shape");
  ASSERT_TRUE(shape.breakdowns.count("shape_id"));
  EXPECT_EQ(shape.breakdowns.at("shape_id").size(), 1u);
  EXPECT_FALSE(shape.breakdowns.at("shape_id")[0].seen);

  std::vector<Prediction> extra = fx.preds;
  extra.push_back({"ghost", fx.preds[0].joints});
  EXPECT_THROW(evaluate_method(extra, fx.frames, split), UnknownFrameId);
}
