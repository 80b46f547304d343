#include "handgen/skeleton.hpp"

#include <cmath>

namespace handgen {

const char* finger_name(int finger) {
  static constexpr std::array<const char*, kNumFingers> kNames = {"thumb", "index", "middle",
                                                                  "ring", "pinky"};
  return kNames.at(static_cast<std::size_t>(finger));
}

Skeleton Skeleton::from_flat(const PoseVector& v) {
  Skeleton s;
  Eigen::Map<PoseVector>(s.joints.data()) = v;
  return s;
}

bool Skeleton::bones_nondegenerate() const {
  for (int j = 1; j < kNumJoints; ++j) {
    if (!((joint(j) - joint(parent_joint(j))).norm() > 0.0)) return false;
  }
  return true;
}

Skeleton Skeleton::transformed(const Mat3& rotation, const Vec3& translation) const {
  Skeleton out;
  for (int j = 0; j < kNumJoints; ++j) out.set_joint(j, rotation * joint(j) + translation);
  return out;
}

double mean_joint_error(const JointMatrix& a, const JointMatrix& b) {
  return (a - b).rowwise().norm().sum() / kNumJoints;
}

Mat3 axis_rotation(int axis, double radians) {
  return Eigen::AngleAxisd(radians, Vec3::Unit(axis)).toRotationMatrix();
}

}  // namespace handgen
