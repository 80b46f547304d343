#pragma once

#include <array>

#include "handgen/skeleton.hpp"

namespace handgen {

using Vec4 = Eigen::Vector4d;

/// Skew-symmetric cross-product matrix: skew(v) * w == v.cross(w).
Mat3 skew(const Vec3& v);

/// Axis-angle vector to rotation matrix (exponential map).
Mat3 rodrigues(const Vec3& axis_angle);

/// d rodrigues(v) / d v_i for i = 0, 1, 2. Stable at and near v = 0.
std::array<Mat3, 3> rodrigues_jacobian(const Vec3& axis_angle);

/// Rotation matrix of a unit quaternion stored as (w, x, y, z).
Mat3 quaternion_matrix(const Vec4& wxyz);

/// Partial derivatives of quaternion_matrix with respect to w, x, y, z,
/// treating the quadratic form as unconstrained.
std::array<Mat3, 4> quaternion_matrix_jacobian(const Vec4& wxyz);

/// Hamilton product of two (w, x, y, z) quaternions.
Vec4 quaternion_multiply(const Vec4& a, const Vec4& b);

/// Quaternion (w, x, y, z) of an axis-angle vector.
Vec4 axis_angle_quaternion(const Vec3& axis_angle);

}  // namespace handgen
