#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <optional>
#include <string>

namespace handgen {

inline constexpr int kNumJoints = 21;
inline constexpr int kNumFingers = 5;
inline constexpr int kJointsPerFinger = 4;
inline constexpr int kPoseDim = 3 * kNumJoints;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using JointMatrix = Eigen::Matrix<double, kNumJoints, 3, Eigen::RowMajor>;
using PoseVector = Eigen::Matrix<double, kPoseDim, 1>;

// Joint ordering: wrist is 0, then thumb, index, middle, ring, pinky, each
// as MCP, PIP, DIP, TIP. For the thumb the same slot names are used for its
// CMC, MCP, IP and tip.
inline constexpr int kWrist = 0;

enum class Finger : int { kThumb = 0, kIndex = 1, kMiddle = 2, kRing = 3, kPinky = 4 };

enum class FingerJoint : int { kMcp = 0, kPip = 1, kDip = 2, kTip = 3 };

constexpr int joint_index(int finger, int segment) { return 1 + kJointsPerFinger * finger + segment; }
constexpr int joint_index(Finger f, FingerJoint j) {
  return joint_index(static_cast<int>(f), static_cast<int>(j));
}

/// Parent along the fixed kinematic tree; -1 for the wrist.
constexpr int parent_joint(int joint) {
  if (joint == kWrist) return -1;
  return ((joint - 1) % kJointsPerFinger == 0) ? kWrist : joint - 1;
}

const char* finger_name(int finger);

/// 21 joints in millimeters, camera frame.
struct Skeleton {
  JointMatrix joints = JointMatrix::Zero();

  Vec3 joint(int i) const { return joints.row(i).transpose(); }
  void set_joint(int i, const Vec3& p) { joints.row(i) = p.transpose(); }

  PoseVector flat() const { return Eigen::Map<const PoseVector>(joints.data()); }
  static Skeleton from_flat(const PoseVector& v);

  bool all_finite() const { return joints.allFinite(); }
  /// True when every bone (child minus parent) has strictly positive length.
  bool bones_nondegenerate() const;

  Skeleton transformed(const Mat3& rotation, const Vec3& translation) const;

  friend bool operator==(const Skeleton& a, const Skeleton& b) { return a.joints == b.joints; }
};

struct CameraIntrinsics {
  double fx = 0;
  double fy = 0;
  double cx = 0;
  double cy = 0;
  int width = 0;
  int height = 0;

  bool valid() const {
    return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 && cx < width && cy >= 0 &&
           cy < height;
  }
  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

struct Frame {
  std::string frame_id;
  Skeleton skeleton;
  std::string subject_id;
  std::optional<std::string> object_id;
  std::optional<CameraIntrinsics> intrinsics;
  std::optional<std::string> sequence_id;
  std::optional<long long> time_index;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct Prediction {
  std::string frame_id;
  JointMatrix joints = JointMatrix::Zero();

  friend bool operator==(const Prediction& a, const Prediction& b) {
    return a.frame_id == b.frame_id && a.joints == b.joints;
  }
};

/// Mean over the 21 joints of the Euclidean distance, in mm.
double mean_joint_error(const JointMatrix& a, const JointMatrix& b);

/// Rotation about the camera axis `axis` (0=x, 1=y, 2=z) by `radians`.
Mat3 axis_rotation(int axis, double radians);

}  // namespace handgen
