#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace icc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Euclidean distance from p to the closed segment [a, b].
double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// Sign of the orientation determinant of (a, b, c): +1 counterclockwise, -1 clockwise, 0 collinear.
int orientation(Vec2 a, Vec2 b, Vec2 c);

/// Intersection of segments [p0,p1] and [q0,q1]. Returns the parameters (s along p, t along q).
/// Collinear overlaps report the first overlapping point along p.
struct SegmentHit {
  double s;
  double t;
};
std::optional<SegmentHit> intersect_segments(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1);

/// Closed, simple, counterclockwise polygon. The first vertex is not repeated.
class CagePolygon {
 public:
  CagePolygon() = default;
  /// Validates (>= 3 vertices, simple, counterclockwise) and throws InvalidCage otherwise.
  explicit CagePolygon(std::vector<Vec2> vertices);

  std::span<const Vec2> vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Vec2& operator[](std::size_t k) const { return vertices_[k]; }
  Vec2 segment_start(std::size_t k) const { return vertices_[k]; }
  Vec2 segment_end(std::size_t k) const { return vertices_[(k + 1) % vertices_.size()]; }
  /// Point at barycentric position `bary` along segment k.
  Vec2 point_on_segment(std::size_t k, double bary) const;

  double signed_area() const;
  Vec2 bbox_min() const;
  Vec2 bbox_max() const;

  /// Closed point-in-polygon test: points on the boundary count as inside.
  bool contains(Vec2 p) const;
  bool on_boundary(Vec2 p) const;

  /// Interior angles (radians) at each vertex.
  std::vector<double> interior_angles() const;

  /// Applies x -> scale * R(angle) * x + offset to every vertex.
  CagePolygon transformed(double scale, double angle, Vec2 offset) const;

 private:
  std::vector<Vec2> vertices_;
};

/// True if the closed polyline has no self-intersections (non-adjacent segments disjoint,
/// adjacent segments meeting only at their shared vertex).
bool is_simple_polygon(std::span<const Vec2> vertices);
double polygon_signed_area(std::span<const Vec2> vertices);

}  // namespace icc
