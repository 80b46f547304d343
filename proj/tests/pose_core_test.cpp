#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include "handgen/dataset_io.hpp"
#include "handgen/errors.hpp"
#include "handgen/file_util.hpp"
#include "support/fixtures.hpp"

using namespace handgen;

namespace {

std::string joints_json(double offset = 0.0) {
  std::string s = "[";
  const Skeleton sk = canonical_skeleton();
  for (int j = 0; j < kNumJoints; ++j) {
    if (j) s += ",";
    s += "[" + std::to_string(sk.joints(j, 0) + offset) + "," + std::to_string(sk.joints(j, 1)) + "," +
         std::to_string(sk.joints(j, 2) + 300.0) + "]";
  }
  return s + "]";
}

std::string frame_line(const std::string& id, const std::string& extra = "") {
  return R"({"frame_id":")" + id + R"(","joints":)" + joints_json() + R"(,"subject_id":"s0")" + extra + "}";
}

std::vector<Frame> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in, "mem");
}

}  // namespace

TEST(Skeleton, ParentTreeIsFixed) {
  EXPECT_EQ(parent_joint(kWrist), -1);
  for (int f = 0; f < kNumFingers; ++f) {
    EXPECT_EQ(parent_joint(joint_index(f, 0)), kWrist);
    for (int s = 1; s < 4; ++s) EXPECT_EQ(parent_joint(joint_index(f, s)), joint_index(f, s - 1));
  }
  EXPECT_EQ(joint_index(Finger::kPinky, FingerJoint::kTip), 20);
}

TEST(Skeleton, FlatRoundTrip) {
  Rng rng(3);
  const Skeleton sk = fixtures::random_skeleton(rng);
  EXPECT_EQ(Skeleton::from_flat(sk.flat()), sk);
  EXPECT_EQ(sk.flat()(3 * 5 + 2), sk.joints(5, 2));
}

TEST(Skeleton, ZeroLengthBoneIsDegenerate) {
  Skeleton sk = canonical_skeleton();
  EXPECT_TRUE(sk.bones_nondegenerate());
  sk.set_joint(7, sk.joint(6));
  EXPECT_FALSE(sk.bones_nondegenerate());
}

TEST(Skeleton, MeanJointErrorUniformOffset) {
  const Skeleton sk = canonical_skeleton();
  JointMatrix moved = sk.joints;
  moved.col(0).array() += 3.0;
  EXPECT_DOUBLE_EQ(mean_joint_error(moved, sk.joints), 3.0);
  EXPECT_EQ(mean_joint_error(sk.joints, sk.joints), 0.0);
}

TEST(DatasetIo, ThreeLinesKeepOrder) {
  const auto frames = parse(frame_line("c") + "\n" + frame_line("a") + "\n\n" + frame_line("b") + "\n");
  ASSERT_EQ(frames.size(), 3u);
  EXPECT_EQ(frames[0].frame_id, "c");
  EXPECT_EQ(frames[1].frame_id, "a");
  EXPECT_EQ(frames[2].frame_id, "b");
  EXPECT_FALSE(frames[0].object_id.has_value());
}

TEST(DatasetIo, DuplicateIdRejected) {
  try {
    parse(frame_line("f1") + "\n" + frame_line("f1") + "\n");
    FAIL() << "expected DuplicateFrameId";
  } catch (const DuplicateFrameId& e) {
    EXPECT_EQ(e.frame_id(), "f1");
  }
}

TEST(DatasetIo, MalformedLineCarriesLineNumber) {
  try {
    parse(frame_line("a") + "\n" + frame_line("b") + "\n{not json\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("mem:3"), std::string::npos);
  }
}

TEST(DatasetIo, RejectsTypeViolations) {
  std::string twenty = R"({"frame_id":"x","subject_id":"s","joints":[)";
  for (int i = 0; i < 20; ++i) twenty += std::string(i ? "," : "") + "[" + std::to_string(i) + ",0,1]";
  twenty += "]}";
  EXPECT_THROW(parse(twenty), ParseError);

  std::string nonfinite = frame_line("x");
  nonfinite.replace(nonfinite.find("[[") + 2, 1, "null,");
  EXPECT_THROW(parse(nonfinite), ParseError);

  std::string no_subject = R"({"frame_id":"x","joints":)" + joints_json() + "}";
  EXPECT_THROW(parse(no_subject), ParseError);

  // Wrist and thumb MCP coincide.
  Frame f = fixtures::make_frame("z", canonical_skeleton());
  f.skeleton.set_joint(1, f.skeleton.joint(0));
  EXPECT_THROW(parse(frame_to_json_line(f)), ParseError);

  EXPECT_THROW(parse(frame_line("x", R"(,"intrinsics":{"fx":-1,"fy":1,"cx":1,"cy":1,"width":4,"height":4})")),
               ParseError);
}

TEST(DatasetIo, RepeatedTimeIndexInSequenceRejected) {
  const std::string a = frame_line("a", R"(,"sequence_id":"q","time_index":4)");
  const std::string b = frame_line("b", R"(,"sequence_id":"q","time_index":4)");
  const std::string c = frame_line("c", R"(,"sequence_id":"r","time_index":4)");
  EXPECT_THROW(parse(a + "\n" + b), ValidationError);
  EXPECT_NO_THROW(parse(a + "\n" + c));
}

TEST(DatasetIo, FrameRoundTripIsExact) {
  Rng rng(11);
  std::vector<Frame> frames;
  for (int i = 0; i < 20; ++i) {
    Frame f = fixtures::make_frame(fixtures::frame_id(i), fixtures::random_skeleton(rng), "s" + std::to_string(i % 3));
    if (i % 2) f.object_id = "cup";
    if (i % 3 == 0) f.intrinsics = CameraIntrinsics{475.1, 474.9, 320.5, 239.5, 640, 480};
    if (i % 4 == 0) {
      f.sequence_id = "seq";
      f.time_index = i;
    }
    frames.push_back(f);
  }
  fixtures::TempDir dir("pose_rt");
  save_dataset(frames, dir / "frames.jsonl");
  EXPECT_EQ(load_dataset(dir / "frames.jsonl"), frames);
}

TEST(DatasetIo, PredictionRoundTripAndMissingId) {
  Rng rng(5);
  std::vector<Prediction> preds;
  for (int i = 0; i < 5; ++i) preds.push_back({"unknown_" + std::to_string(i), fixtures::random_skeleton(rng).joints});
  fixtures::TempDir dir("pred_rt");
  save_predictions(preds, dir / "p.jsonl");
  EXPECT_EQ(load_predictions(dir / "p.jsonl"), preds);

  std::istringstream in("{\"joints\":" + joints_json() + "}\n");
  try {
    parse_predictions(in, "p");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(DatasetIo, MissingFileIsIoError) {
  EXPECT_THROW(load_dataset("/nonexistent/frames.jsonl"), IoError);
}

TEST(DatasetIo, LargeFileLoadsInLinearTime) {
  // Line count of a full-size training set.
  constexpr int kLines = 175951;
  const std::string joints = joints_json();
  std::string text;
  text.reserve(static_cast<std::size_t>(kLines) * (joints.size() + 64));
  for (int i = 0; i < kLines; ++i) {
    text += R"({"frame_id":")" + std::to_string(i) + R"(","joints":)" + joints + R"(,"subject_id":"s"})" + "\n";
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto frames = parse(text);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(frames.size(), static_cast<std::size_t>(kLines));
  EXPECT_LT(secs, 120.0);
}

TEST(FileUtil, AtomicWriteCreatesParentsAndReplaces) {
  fixtures::TempDir dir("atomic");
  const auto p = dir / "a/b/c.txt";
  write_file_atomic(p, "one");
  write_file_atomic(p, "two");
  EXPECT_EQ(read_file(p), "two");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(p.parent_path())) ++entries;
  EXPECT_EQ(entries, 1);
}
