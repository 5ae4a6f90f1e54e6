#pragma once

#include <variant>

#include "rtsmooth/types.hpp"

namespace rtsmooth {

/// Sphere-swept segment.
struct Capsule {
  Vec3 a;
  Vec3 b;
  double radius = 0.0;
};

/// Axis-aligned box given by its min and max corners.
struct Box {
  Vec3 lo;
  Vec3 hi;

  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

struct Sphere {
  Vec3 center;
  double radius = 0.0;

  bool contains(const Vec3& p) const { return (p - center).norm() <= radius; }
};

using Shape = std::variant<Box, Sphere>;

bool shape_contains(const Shape& s, const Vec3& p);

/// Distance from p to the closed segment [a, b].
double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);

/// Euclidean distance from p to the closed box (0 inside).
double point_box_distance(const Vec3& p, const Box& box);

/// Exact minimum distance between the segment [a, b] and a closed box.
///
/// The squared point-to-box distance along the segment is piecewise quadratic in
/// the segment parameter, with breakpoints where a coordinate crosses a slab
/// boundary. Each piece is minimized in closed form.
double segment_box_distance(const Vec3& a, const Vec3& b, const Box& box);

}  // namespace rtsmooth
