#include "rtsmooth/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace rtsmooth {

bool shape_contains(const Shape& s, const Vec3& p) {
  return std::visit([&](const auto& shape) { return shape.contains(p); }, s);
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double point_box_distance(const Vec3& p, const Box& box) {
  const Vec3 below = (box.lo - p).cwiseMax(0.0);
  const Vec3 above = (p - box.hi).cwiseMax(0.0);
  return (below + above).norm();
}

double segment_box_distance(const Vec3& a, const Vec3& b, const Box& box) {
  const Vec3 d = b - a;

  std::array<double, 8> knots{};
  std::size_t n = 0;
  knots[n++] = 0.0;
  knots[n++] = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) continue;
    for (double bound : {box.lo[k], box.hi[k]}) {
      const double t = (bound - a[k]) / d[k];
      if (t > 0.0 && t < 1.0) knots[n++] = t;
    }
  }
  std::sort(knots.begin(), knots.begin() + static_cast<std::ptrdiff_t>(n));

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s + 1 < n; ++s) {
    const double t0 = knots[s];
    const double t1 = knots[s + 1];
    best = std::min(best, point_box_distance(a + t0 * d, box));
    if (t1 <= t0) continue;

    // Within (t0, t1) each coordinate stays below, inside, or above its slab, so
    // the squared distance is sum over outside axes of (a_k + t d_k - bound_k)^2.
    const double tm = 0.5 * (t0 + t1);
    double qa = 0.0;
    double qb = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double x = a[k] + tm * d[k];
      double bound;
      if (x < box.lo[k]) {
        bound = box.lo[k];
      } else if (x > box.hi[k]) {
        bound = box.hi[k];
      } else {
        continue;
      }
      qa += d[k] * d[k];
      qb += 2.0 * d[k] * (a[k] - bound);
    }
    if (qa > 0.0) {
      const double t = std::clamp(-qb / (2.0 * qa), t0, t1);
      best = std::min(best, point_box_distance(a + t * d, box));
    }
  }
  best = std::min(best, point_box_distance(b, box));
  return best;
}

}  // namespace rtsmooth
