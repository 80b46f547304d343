#include "handgen/rotation.hpp"

#include <cmath>

namespace handgen {

namespace {

// Coefficients of R = I + A K + B K^2 and their scaled derivatives
// C1 = A'(t)/t, C2 = B'(t)/t, with series expansions near zero.
struct ExpCoefficients {
  double a, b, c1, c2;
};

ExpCoefficients exp_coefficients(double t) {
  const double t2 = t * t;
  if (t < 1e-2) {
    const double t4 = t2 * t2;
    return {1.0 - t2 / 6.0 + t4 / 120.0, 0.5 - t2 / 24.0 + t4 / 720.0,
            -1.0 / 3.0 + t2 / 30.0 - t4 / 840.0, -1.0 / 12.0 + t2 / 180.0 - t4 / 6720.0};
  }
  const double s = std::sin(t);
  const double c = std::cos(t);
  return {s / t, (1.0 - c) / t2, (t * c - s) / (t2 * t), (t * s - 2.0 * (1.0 - c)) / (t2 * t2)};
}

}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 k;
  k << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return k;
}

Mat3 rodrigues(const Vec3& v) {
  const auto co = exp_coefficients(v.norm());
  const Mat3 k = skew(v);
  return Mat3::Identity() + co.a * k + co.b * (k * k);
}

std::array<Mat3, 3> rodrigues_jacobian(const Vec3& v) {
  const auto co = exp_coefficients(v.norm());
  const Mat3 k = skew(v);
  const Mat3 k2 = k * k;
  std::array<Mat3, 3> out;
  for (int i = 0; i < 3; ++i) {
    const Mat3 e = skew(Vec3::Unit(i));
    out[static_cast<std::size_t>(i)] =
        co.a * e + co.b * (e * k + k * e) + v(i) * (co.c1 * k + co.c2 * k2);
  }
  return out;
}

Mat3 quaternion_matrix(const Vec4& q) {
  const double w = q(0), x = q(1), y = q(2), z = q(3);
  Mat3 r;
  r << w * w + x * x - y * y - z * z, 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), w * w - x * x + y * y - z * z, 2 * (y * z - w * x),   //
      2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z;
  return r;
}

std::array<Mat3, 4> quaternion_matrix_jacobian(const Vec4& q) {
  const double w = q(0), x = q(1), y = q(2), z = q(3);
  std::array<Mat3, 4> d;
  d[0] << w, -z, y, z, w, -x, -y, x, w;
  d[1] << x, y, z, y, -x, -w, z, w, -x;
  d[2] << -y, x, w, x, y, z, -w, z, -y;
  d[3] << -z, -w, x, w, -z, y, x, y, z;
  for (auto& m : d) m *= 2.0;
  return d;
}

Vec4 quaternion_multiply(const Vec4& a, const Vec4& b) {
  const double aw = a(0), ax = a(1), ay = a(2), az = a(3);
  const double bw = b(0), bx = b(1), by = b(2), bz = b(3);
  return {aw * bw - ax * bx - ay * by - az * bz, aw * bx + ax * bw + ay * bz - az * by,
          aw * by - ax * bz + ay * bw + az * bx, aw * bz + ax * by - ay * bx + az * bw};
}

Vec4 axis_angle_quaternion(const Vec3& v) {
  const double t = v.norm();
  if (t < 1e-12) return {1.0, 0.5 * v.x(), 0.5 * v.y(), 0.5 * v.z()};
  const Vec3 axis = v / t;
  const double s = std::sin(0.5 * t);
  return {std::cos(0.5 * t), s * axis.x(), s * axis.y(), s * axis.z()};
}

}  // namespace handgen
