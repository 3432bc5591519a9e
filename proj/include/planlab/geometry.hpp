#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

namespace planlab {

using Vec2 = Eigen::Vector2d;

// Simple (non-self-intersecting) polygon, vertices in order, implicitly closed.
struct Polygon {
  std::vector<Vec2> v;

  // Boundary counts as inside.
  bool contains(const Vec2& p) const;
  bool is_simple() const;
  void bounding_box(Vec2* lo, Vec2* hi) const;
};

// Open polyline with cached cumulative arc length.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> pts);

  const std::vector<Vec2>& points() const { return pts_; }
  int size() const { return static_cast<int>(pts_.size()); }
  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }

  // Clamped to [0, length].
  Vec2 point_at(double s) const;
  Vec2 tangent_at(double s) const;

  // Arc length of the closest point on the polyline.
  double project(const Vec2& p) const;

 private:
  std::vector<Vec2> pts_;
  std::vector<double> cum_;
};

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

// Distance along the ray (origin, dir) to the first polygon edge hit, up to
// max_range; max_range when nothing is hit.
double ray_polygon_distance(const Polygon& poly, const Vec2& origin, const Vec2& dir,
                            double max_range);

// Corridor polygon of the given total width around a polyline (left offsets
// forward, right offsets reversed). Valid while the half-width stays below
// the local turning radius.
Polygon corridor_polygon(const Polyline& center, double width);

}  // namespace planlab
