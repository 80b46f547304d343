#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>
#include <utility>
#include <vector>

#include "handgen/errors.hpp"
#include "handgen/hand_model.hpp"

namespace handgen {

namespace {

struct FingerGeometry {
  Vec3 mcp;
  Vec3 dir;
  std::array<double, 3> lengths;
  double radius;
};

// Right hand, flat, palm in the z = 0 plane facing -z, index toward +x.
const std::array<FingerGeometry, kNumFingers>& finger_geometry() {
  static const std::array<FingerGeometry, kNumFingers> kGeometry = {{
      {{24, 22, 0}, Vec3(0.8, 1.0, 0).normalized(), {38, 32, 27}, 11.0},
      {{24, 88, 0}, Vec3(0.08, 1.0, 0).normalized(), {42, 25, 21}, 9.5},
      {{4, 94, 0}, Vec3(0.0, 1.0, 0), {46, 28, 22}, 9.5},
      {{-15, 89, 0}, Vec3(-0.08, 1.0, 0).normalized(), {42, 27, 21}, 9.0},
      {{-31, 80, 0}, Vec3(-0.18, 1.0, 0).normalized(), {34, 20, 18}, 8.0},
  }};
  return kGeometry;
}

constexpr double kPalmLength = 84.0;
constexpr double kPalmThickness = 13.0;
constexpr double kShapeStep = 0.02;  // relative change per unit shape coefficient
constexpr double kTaper = 0.3;

// Shape coefficient that lengthens each finger chain, by finger index.
constexpr std::array<int, kNumFingers> kChainLengthCoefficient = {4, 1, 0, 2, 3};
constexpr int kPalmLengthCoefficient = 5;
constexpr int kPalmWidthCoefficient = 6;
constexpr int kProximalCoefficient = 7;
constexpr int kDistalCoefficient = 8;
constexpr int kSpreadCoefficient = 9;

Vec3 palm_center(double y) { return {-3.0 * y / kPalmLength, y, 0.0}; }
double palm_half_width(double y) { return 26.0 + 12.0 * y / kPalmLength; }

using Weights = std::vector<std::pair<int, double>>;
using Displacements = std::array<Vec3, kShapeDim>;

class MeshBuilder {
 public:
  int add_vertex(const Vec3& p, Weights w, const Displacements& d) {
    verts_.push_back(p);
    weights_.push_back(std::move(w));
    basis_.push_back(d);
    return static_cast<int>(verts_.size()) - 1;
  }

  // Ring around `center`; e1 x e2 points along the tube so faces wind outward.
  template <typename DisplacementFn>
  std::vector<int> add_ring(const Vec3& center, const Vec3& e1, const Vec3& e2, int n, const Weights& w,
                            DisplacementFn&& disp) {
    std::vector<int> ids;
    ids.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / n;
      const Vec3 p = center + std::cos(phi) * e1 + std::sin(phi) * e2;
      ids.push_back(add_vertex(p, w, disp(p)));
    }
    return ids;
  }

  // Stadium outline in the x/z plane: a segment of half length `half_flat`
  // along x swept by a disk of radius `r`. Each quarter holds `flat` samples on
  // the straight part and `round` on the quarter turn, so rings of different
  // radius stay aligned. Starts on top (+z) at x = 0 and runs toward +x.
  template <typename DisplacementFn>
  std::vector<int> add_stadium(const Vec3& center, double half_flat, double r, int flat, int round,
                               const Weights& w, DisplacementFn&& disp) {
    const int q = flat + round;
    auto quarter = [&](int j) -> std::pair<double, double> {
      if (j < flat) return {half_flat * j / flat, r};
      const double phi = 0.5 * std::numbers::pi * (j - flat) / round;
      return {half_flat + r * std::sin(phi), r * std::cos(phi)};
    };
    std::vector<int> ids;
    ids.reserve(static_cast<std::size_t>(4 * q));
    for (int k = 0; k < 4 * q; ++k) {
      double x;
      double z;
      if (k <= q) {
        std::tie(x, z) = quarter(k);
      } else if (k <= 2 * q) {
        std::tie(x, z) = quarter(2 * q - k);
        z = -z;
      } else if (k <= 3 * q) {
        std::tie(x, z) = quarter(k - 2 * q);
        x = -x;
        z = -z;
      } else {
        std::tie(x, z) = quarter(4 * q - k);
        x = -x;
      }
      const Vec3 p = center + Vec3(x, 0.0, z);
      ids.push_back(add_vertex(p, w, disp(p)));
    }
    return ids;
  }

  // Closes a stadium ring (see add_stadium) onto a row of spine vertices
  // along its flat axis; `spine[j]` sits at x index j - flat.
  void close_stadium(const std::vector<int>& ring, const std::vector<int>& spine, int flat, int round, bool front) {
    const int q = flat + round;
    const int n = 4 * q;
    auto spine_at = [&](int k) {
      k %= n;
      int j;  // signed flat index, clamped to the rounded ends
      if (k <= q) j = std::min(k, flat);
      else if (k <= 2 * q) j = std::min(2 * q - k, flat);
      else if (k <= 3 * q) j = -std::min(k - 2 * q, flat);
      else j = -std::min(4 * q - k, flat);
      return spine[static_cast<std::size_t>(j + flat)];
    };
    auto tri = [&](int x, int y, int z) {
      if (front) faces_.push_back({x, y, z});
      else faces_.push_back({x, z, y});
    };
    for (int k = 0; k < n; ++k) {
      const int r0 = ring[static_cast<std::size_t>(k)];
      const int r1 = ring[static_cast<std::size_t>((k + 1) % n)];
      const int s0 = spine_at(k);
      const int s1 = spine_at(k + 1);
      tri(r0, r1, s1);
      if (s0 != s1) tri(r0, s1, s0);
    }
  }

  void connect(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t k1 = (k + 1) % n;
      faces_.push_back({a[k], a[k1], b[k1]});
      faces_.push_back({a[k], b[k1], b[k]});
    }
  }

  void fan_start(int pole, const std::vector<int>& ring) {
    const std::size_t n = ring.size();
    for (std::size_t k = 0; k < n; ++k) faces_.push_back({pole, ring[(k + 1) % n], ring[k]});
  }

  void fan_end(const std::vector<int>& ring, int pole) {
    const std::size_t n = ring.size();
    for (std::size_t k = 0; k < n; ++k) faces_.push_back({ring[k], ring[(k + 1) % n], pole});
  }

  void set_regressor_ring(int joint, std::vector<int> ring) {
    regressor_rings_[static_cast<std::size_t>(joint)] = std::move(ring);
  }

  TemplateMesh build() && {
    const auto n = static_cast<Eigen::Index>(verts_.size());
    VertexMatrix v(n, 3);
    std::array<VertexMatrix, kShapeDim> basis;
    for (auto& b : basis) b.resize(n, 3);
    std::vector<Eigen::Triplet<double>> wt;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      v.row(i) = verts_[ui].transpose();
      for (int j = 0; j < kShapeDim; ++j) {
        basis[static_cast<std::size_t>(j)].row(i) = basis_[ui][static_cast<std::size_t>(j)].transpose();
      }
      for (const auto& [bone, w] : weights_[ui]) wt.emplace_back(static_cast<int>(i), bone, w);
    }
    FaceMatrix f(static_cast<Eigen::Index>(faces_.size()), 3);
    for (std::size_t i = 0; i < faces_.size(); ++i) {
      for (int k = 0; k < 3; ++k) f(static_cast<Eigen::Index>(i), k) = faces_[i][static_cast<std::size_t>(k)];
    }
    SparseRowMatrix skinning(n, kNumBones);
    skinning.setFromTriplets(wt.begin(), wt.end());

    std::vector<Eigen::Triplet<double>> rt;
    for (int j = 0; j < kNumJoints; ++j) {
      const auto& ring = regressor_rings_[static_cast<std::size_t>(j)];
      if (ring.empty()) throw ValidationError("template builder: joint without regressor ring");
      const double w = 1.0 / static_cast<double>(ring.size());
      for (int id : ring) rt.emplace_back(j, id, w);
    }
    SparseRowMatrix regressor(kNumJoints, n);
    regressor.setFromTriplets(rt.begin(), rt.end());
    return TemplateMesh(std::move(v), std::move(f), std::move(basis), std::move(skinning),
                        std::move(regressor));
  }

 private:
  std::vector<Vec3> verts_;
  std::vector<Weights> weights_;
  std::vector<Displacements> basis_;
  std::vector<std::array<int, 3>> faces_;
  std::array<std::vector<int>, kNumJoints> regressor_rings_;
};

Displacements zero_displacements() {
  Displacements d;
  for (auto& x : d) x = Vec3::Zero();
  return d;
}

// Displacement field of a finger vertex anchored at arc length `arc` along
// the chain (clamped to the chain).
Displacements finger_displacements(int finger, double arc) {
  const auto& g = finger_geometry()[static_cast<std::size_t>(finger)];
  const double total = g.lengths[0] + g.lengths[1] + g.lengths[2];
  const double l = std::clamp(arc, 0.0, total);
  Displacements d = zero_displacements();
  d[static_cast<std::size_t>(kChainLengthCoefficient[static_cast<std::size_t>(finger)])] =
      kShapeStep * l * g.dir;
  d[kPalmLengthCoefficient] = kShapeStep * g.mcp.y() * Vec3::UnitY();
  d[kPalmWidthCoefficient] = kShapeStep * g.mcp.x() * Vec3::UnitX();
  d[kProximalCoefficient] = kShapeStep * std::min(l, g.lengths[0]) * g.dir;
  d[kDistalCoefficient] = kShapeStep * std::max(0.0, l - g.lengths[0]) * g.dir;
  const double spread = (g.mcp.x() - finger_geometry()[2].mcp.x()) / 20.0;
  d[kSpreadCoefficient] = kShapeStep * l * spread * Vec3::UnitX();
  return d;
}

Displacements palm_displacements(double y, const Vec3& p) {
  const double yc = std::clamp(y, 0.0, kPalmLength);
  Displacements d = zero_displacements();
  d[kPalmLengthCoefficient] = kShapeStep * yc * Vec3::UnitY();
  // Widening stretches the flat part only; the rounded edges move rigidly.
  const double h = palm_half_width(yc) - kPalmThickness;
  d[kPalmWidthCoefficient] = kShapeStep * std::clamp(p.x() - palm_center(yc).x(), -h, h) * Vec3::UnitX();
  return d;
}

// Axial ring spacing in mm. The umbrella Laplacian of a tube is dominated by
// the angular step, so rings can be coarser along the axis than around it.
constexpr double kAxialSpacing = 3.0;
// Half width of the linear skinning ramp around each finger pivot; wide
// ramps spread a bend over several rings.
constexpr double kBlendHalfWidth = 16.0;

// Polar angles of the rings on a quarter-circle cap of radius r, excluding
// the equator and the pole. Spacing starts at the tube spacing and shrinks
// geometrically toward the pole, then gets stretched to land on it.
std::vector<double> cap_angles(double r) {
  constexpr double kShrink = 0.85;
  constexpr double kMinSpacing = 0.8;
  const double arc = 0.5 * std::numbers::pi * r;
  std::vector<double> steps;
  double spacing = kAxialSpacing;
  double used = 0.0;
  while (true) {
    spacing = std::max(kMinSpacing, spacing * kShrink);
    if (used + 1.5 * spacing >= arc) break;
    steps.push_back(spacing);
    used += spacing;
  }
  const double stretch = arc / (used + spacing);
  std::vector<double> angles;
  double u = 0.0;
  for (double st : steps) {
    u += st * stretch;
    angles.push_back(u / r);
  }
  return angles;
}

int ring_count(double length) {
  return std::max(2, static_cast<int>(std::lround(length / kAxialSpacing)));
}

void add_palm(MeshBuilder& mb, int n) {
  const Weights root = {{0, 1.0}};
  const double r = kPalmThickness;
  // Same angular step on the rounded edges as the finger rings.
  const int round = std::max(2, n / 4);
  const double step = 2.0 * std::numbers::pi * r / n;
  const int flat = std::max(1, static_cast<int>(std::lround((palm_half_width(kPalmLength) - r) / step)));
  const int count = ring_count(kPalmLength);
  auto add = [&](double y, double axial, double shrink) {
    const double yc = std::clamp(y, 0.0, kPalmLength);
    const Vec3 c = palm_center(yc) + axial * Vec3::UnitY();
    return mb.add_stadium(c, palm_half_width(yc) - r, shrink * r, flat, round, root,
                          [&](const Vec3& p) { return palm_displacements(yc, p); });
  };

  const std::vector<double> cap = cap_angles(r);
  std::vector<std::vector<int>> rings;
  for (auto it = cap.rbegin(); it != cap.rend(); ++it) rings.push_back(add(0.0, -r * std::sin(*it), std::cos(*it)));
  for (int k = 0; k <= count; ++k) {
    rings.push_back(add(kPalmLength * k / count, 0.0, 1.0));
    if (k == 0) mb.set_regressor_ring(kWrist, rings.back());
  }
  for (double theta : cap) rings.push_back(add(kPalmLength, r * std::sin(theta), std::cos(theta)));
  auto spine = [&](double y, double axial) {
    const Vec3 c = palm_center(y) + axial * Vec3::UnitY();
    const double h = palm_half_width(y) - r;
    std::vector<int> ids;
    for (int j = -flat; j <= flat; ++j) {
      const Vec3 p = c + Vec3(h * j / flat, 0.0, 0.0);
      ids.push_back(mb.add_vertex(p, root, palm_displacements(y, p)));
    }
    return ids;
  };
  mb.close_stadium(rings.front(), spine(0.0, -r), flat, round, false);
  for (std::size_t k = 0; k + 1 < rings.size(); ++k) mb.connect(rings[k], rings[k + 1]);
  mb.close_stadium(rings.back(), spine(kPalmLength, r), flat, round, true);
}

// Skinning weights at arc length `arc` along a finger: smoothstep ramps of
// half width `blend` centered on the MCP, PIP and DIP pivots.
Weights finger_weights(int finger, double arc, double blend) {
  const auto& g = finger_geometry()[static_cast<std::size_t>(finger)];
  const std::array<double, 3> pivots = {0.0, g.lengths[0], g.lengths[0] + g.lengths[1]};
  std::array<double, 3> ramp;
  for (std::size_t m = 0; m < 3; ++m) {
    const double t = std::clamp(0.5 + (arc - pivots[m]) / (2.0 * blend), 0.0, 1.0);
    ramp[m] = t * t * (3.0 - 2.0 * t);
  }
  const std::array<double, 4> w = {1.0 - ramp[0], ramp[0] - ramp[1], ramp[1] - ramp[2], ramp[2]};
  Weights out;
  for (int k = 0; k < 4; ++k) {
    if (w[static_cast<std::size_t>(k)] > 0.0) out.emplace_back(k == 0 ? 0 : 1 + 3 * finger + (k - 1), w[static_cast<std::size_t>(k)]);
  }
  return out;
}

void add_finger(MeshBuilder& mb, int finger, int n) {
  const auto& g = finger_geometry()[static_cast<std::size_t>(finger)];
  const Vec3 side(-g.dir.y(), g.dir.x(), 0.0);  // side x z == dir
  const double total = g.lengths[0] + g.lengths[1] + g.lengths[2];
  const double blend = kBlendHalfWidth;
  auto radius = [&](double arc) { return g.radius * (1.0 - kTaper * std::clamp(arc, 0.0, total) / total); };
  // Ring whose weights and shape anchor come from `arc`, placed at arc + offset.
  auto ring_at = [&](double arc, double offset, double r) {
    const Vec3 c = g.mcp + (arc + offset) * g.dir;
    return mb.add_ring(c, r * side, r * Vec3::UnitZ(), n, finger_weights(finger, arc + offset, blend),
                       [&](const Vec3&) { return finger_displacements(finger, arc); });
  };

  std::vector<std::vector<int>> rings;
  const double r0 = radius(0.0);
  const std::vector<double> start_cap = cap_angles(r0);
  for (auto it = start_cap.rbegin(); it != start_cap.rend(); ++it) {
    rings.push_back(ring_at(0.0, -r0 * std::sin(*it), r0 * std::cos(*it)));
  }
  double arc = 0.0;
  for (int seg = 0; seg < 3; ++seg) {
    const double len = g.lengths[static_cast<std::size_t>(seg)];
    const int count = ring_count(len);
    for (int i = 0; i < count; ++i) {
      const double a = arc + len * i / count;
      rings.push_back(ring_at(a, 0.0, radius(a)));
      if (i == 0) mb.set_regressor_ring(joint_index(finger, seg), rings.back());
    }
    arc += len;
  }
  const double rt = radius(total);
  rings.push_back(ring_at(total, 0.0, rt));
  mb.set_regressor_ring(joint_index(finger, 3), rings.back());
  for (double theta : cap_angles(rt)) rings.push_back(ring_at(total, rt * std::sin(theta), rt * std::cos(theta)));

  const Vec3 back_pole = g.mcp - r0 * g.dir;
  const Vec3 tip_pole = g.mcp + (total + rt) * g.dir;
  const int p0 = mb.add_vertex(back_pole, finger_weights(finger, -r0, blend), finger_displacements(finger, 0.0));
  const int p1 = mb.add_vertex(tip_pole, finger_weights(finger, total + rt, blend), finger_displacements(finger, total));
  mb.fan_start(p0, rings.front());
  for (std::size_t k = 0; k + 1 < rings.size(); ++k) mb.connect(rings[k], rings[k + 1]);
  mb.fan_end(rings.back(), p1);
}

}  // namespace

Skeleton canonical_skeleton() {
  Skeleton sk;
  sk.set_joint(kWrist, Vec3::Zero());
  for (int f = 0; f < kNumFingers; ++f) {
    const auto& g = finger_geometry()[static_cast<std::size_t>(f)];
    Vec3 p = g.mcp;
    sk.set_joint(joint_index(f, 0), p);
    for (int seg = 0; seg < 3; ++seg) {
      p += g.lengths[static_cast<std::size_t>(seg)] * g.dir;
      sk.set_joint(joint_index(f, seg + 1), p);
    }
  }
  return sk;
}

TemplateMesh build_default_template(int n_ring_segments) {
  if (n_ring_segments < 4) throw ValidationError("n_ring_segments must be >= 4");
  MeshBuilder mb;
  add_palm(mb, n_ring_segments);
  for (int f = 0; f < kNumFingers; ++f) add_finger(mb, f, n_ring_segments);
  return std::move(mb).build();
}

Vec3 flexion_axis(int finger) {
  return Vec3::UnitZ().cross(finger_geometry()[static_cast<std::size_t>(finger)].dir);
}

ArticulationVector canonical_articulation(int code) {
  if (code < 0 || code > 31) throw ValidationError("articulation code must be in [0, 32)");
  ArticulationVector a = ArticulationVector::Zero();
  for (int f = 0; f < kNumFingers; ++f) {
    const bool open = ((code >> (kNumFingers - 1 - f)) & 1) != 0;
    const Vec3 axis = flexion_axis(f);
    for (int seg = 0; seg < 3; ++seg) {
      const double angle = open ? kOpenFlexion : kClosedFlexion[static_cast<std::size_t>(seg)];
      a.segment<3>(3 * (3 * f + seg)) = angle * axis;
    }
  }
  return a;
}

}  // namespace handgen
