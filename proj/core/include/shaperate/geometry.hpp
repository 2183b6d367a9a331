#pragma once

#include <Eigen/Core>

namespace shaperate {

using Point = Eigen::Vector2d;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Axis-aligned box [lo.x, hi.x] x [lo.y, hi.y].
struct Box {
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};

  bool contains_strictly(const Point& p) const {
    return p.x() > lo.x() && p.x() < hi.x() && p.y() > lo.y() && p.y() < hi.y();
  }
  bool contains(const Point& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
  /// A box with lo > hi contains nothing.
  bool empty() const { return lo.x() > hi.x() || lo.y() > hi.y(); }
  static Box empty_box() { return {Point(1.0, 1.0), Point(-1.0, -1.0)}; }
  Box expanded(double margin) const {
    return {lo - Point(margin, margin), hi + Point(margin, margin)};
  }
};

/// Signed area of the triangle (a, b, c); positive when counterclockwise.
inline double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

/// Whether the closed segment [a, b] meets the closed box.
bool segment_intersects_box(const Point& a, const Point& b, const Box& box);

/// Euclidean distance from p to the segment [a, b].
double point_segment_distance(const Point& p, const Point& a, const Point& b);

}  // namespace shaperate
