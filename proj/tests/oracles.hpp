#pragma once

// Independent reference computations used by the tests. None of these call
// into the library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec3 = Eigen::Vector3d;

inline Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return a + t * ab;
}

// Projection onto the supporting plane when it falls inside the triangle
// (tested with edge cross products), otherwise the best of the three edges.
inline Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const Vec3 q = p - n * ((p - a).dot(n) / n.squaredNorm());
  const bool inside = (b - a).cross(q - a).dot(n) >= 0.0 && (c - b).cross(q - b).dot(n) >= 0.0 &&
                      (a - c).cross(q - c).dot(n) >= 0.0;
  if (inside) return q;
  Vec3 best = closest_on_segment(p, a, b);
  for (const Vec3& cand : {closest_on_segment(p, b, c), closest_on_segment(p, c, a)}) {
    if ((cand - p).squaredNorm() < (best - p).squaredNorm()) best = cand;
  }
  return best;
}

struct Nearest {
  Vec3 foot;
  double distance;
};

template <typename Mesh>
Nearest exhaustive_closest(const Mesh& mesh, const Vec3& p) {
  Nearest best{Vec3::Zero(), std::numeric_limits<double>::infinity()};
  for (const auto& f : mesh.faces()) {
    const Vec3 q = closest_on_triangle(p, mesh.vertex(f[0]), mesh.vertex(f[1]), mesh.vertex(f[2]));
    const double dist = (q - p).norm();
    if (dist < best.distance) best = {q, dist};
  }
  return best;
}

// Reflected binary code built recursively: G(n) = 0G(n-1), 1 reverse(G(n-1)).
inline std::vector<std::uint32_t> reflected_gray_table(int n_bits) {
  std::vector<std::uint32_t> table{0};
  for (int k = 0; k < n_bits; ++k) {
    const std::size_t half = table.size();
    for (std::size_t i = half; i-- > 0;) table.push_back(table[i] | (1u << k));
  }
  return table;
}

inline int popcount(std::uint32_t x) {
  int n = 0;
  for (; x; x &= x - 1) ++n;
  return n;
}

// Closed-form critically damped oscillator x'' + 2 w x' + w^2 x = 0.
inline double critically_damped(double x0, double v0, double omega, double t) {
  return (x0 + (v0 + omega * x0) * t) * std::exp(-omega * t);
}

}  // namespace oracle
