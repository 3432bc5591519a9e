#include "planlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace planlab {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b, double eps = 1e-12) {
  const Vec2 ab = b - a;
  const Vec2 ap = p - a;
  const double len = ab.norm();
  if (len < eps) return (p - a).norm() < eps;
  if (std::abs(cross2(ab, ap)) > eps * (1.0 + len)) return false;
  const double t = ab.dot(ap) / (len * len);
  return t >= -eps && t <= 1.0 + eps;
}

}  // namespace

bool Polygon::contains(const Vec2& p) const {
  const int n = static_cast<int>(v.size());
  if (n < 3) return false;
  for (int i = 0; i < n; ++i) {
    if (on_segment(p, v[i], v[(i + 1) % n])) return true;
  }
  // Crossing-number test.
  bool inside = false;
  for (int i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = v[i];
    const Vec2& b = v[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

bool Polygon::is_simple() const {
  const int n = static_cast<int>(v.size());
  if (n < 3) return false;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      // Skip adjacent edges (they share an endpoint).
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) return false;
    }
  }
  return true;
}

void Polygon::bounding_box(Vec2* lo, Vec2* hi) const {
  *lo = Vec2(std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
  *hi = -*lo;
  for (const auto& p : v) {
    *lo = lo->cwiseMin(p);
    *hi = hi->cwiseMax(p);
  }
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross2(d - c, a - c);
  const double d2 = cross2(d - c, b - c);
  const double d3 = cross2(b - a, c - a);
  const double d4 = cross2(b - a, d - a);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && on_segment(a, c, d)) return true;
  if (d2 == 0 && on_segment(b, c, d)) return true;
  if (d3 == 0 && on_segment(c, a, b)) return true;
  if (d4 == 0 && on_segment(d, a, b)) return true;
  return false;
}

Polyline::Polyline(std::vector<Vec2> pts) : pts_(std::move(pts)) {
  if (pts_.size() < 2) throw std::invalid_argument("polyline needs at least 2 points");
  cum_.resize(pts_.size());
  cum_[0] = 0.0;
  for (size_t i = 1; i < pts_.size(); ++i) {
    cum_[i] = cum_[i - 1] + (pts_[i] - pts_[i - 1]).norm();
  }
}

Vec2 Polyline::point_at(double s) const {
  if (s <= 0.0) return pts_.front();
  if (s >= length()) return pts_.back();
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
  const size_t i = static_cast<size_t>(it - cum_.begin());
  const double seg = cum_[i] - cum_[i - 1];
  const double t = seg > 0.0 ? (s - cum_[i - 1]) / seg : 0.0;
  return pts_[i - 1] + t * (pts_[i] - pts_[i - 1]);
}

Vec2 Polyline::tangent_at(double s) const {
  s = std::clamp(s, 0.0, length());
  size_t i = 1;
  while (i + 1 < pts_.size() && cum_[i] < s) ++i;
  Vec2 d = pts_[i] - pts_[i - 1];
  const double n = d.norm();
  return n > 0.0 ? Vec2(d / n) : Vec2(1.0, 0.0);
}

double Polyline::project(const Vec2& p) const {
  double best_d = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  for (size_t i = 1; i < pts_.size(); ++i) {
    const Vec2 a = pts_[i - 1];
    const Vec2 ab = pts_[i] - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const Vec2 q = a + t * ab;
    const double d = (p - q).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best_s = cum_[i - 1] + t * std::sqrt(len2);
    }
  }
  return best_s;
}

double ray_polygon_distance(const Polygon& poly, const Vec2& origin, const Vec2& dir,
                            double max_range) {
  const int n = static_cast<int>(poly.v.size());
  double best = max_range;
  for (int i = 0; i < n; ++i) {
    const Vec2& a = poly.v[i];
    const Vec2& b = poly.v[(i + 1) % n];
    const Vec2 ab = b - a;
    const double denom = cross2(dir, ab);
    if (std::abs(denom) < 1e-15) continue;
    const Vec2 ao = a - origin;
    const double t = cross2(ao, ab) / denom;       // along the ray
    const double u = cross2(ao, dir) / denom;      // along the edge
    if (t >= 0.0 && u >= 0.0 && u <= 1.0) best = std::min(best, t);
  }
  return best;
}

Polygon corridor_polygon(const Polyline& center, double width) {
  const auto& pts = center.points();
  const double half = width / 2.0;
  std::vector<Vec2> left(pts.size()), right(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    Vec2 t;
    if (i == 0) {
      t = pts[1] - pts[0];
    } else if (i + 1 == pts.size()) {
      t = pts[i] - pts[i - 1];
    } else {
      t = (pts[i + 1] - pts[i]).normalized() + (pts[i] - pts[i - 1]).normalized();
    }
    const double n = t.norm();
    t = n > 0.0 ? Vec2(t / n) : Vec2(1.0, 0.0);
    const Vec2 normal(-t.y(), t.x());
    left[i] = pts[i] + half * normal;
    right[i] = pts[i] - half * normal;
  }
  Polygon poly;
  poly.v = left;
  poly.v.insert(poly.v.end(), right.rbegin(), right.rend());
  return poly;
}

}  // namespace planlab
