#include "icc/geometry.hpp"

#include <algorithm>
#include <numbers>

#include "icc/errors.hpp"

namespace icc {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double det = cross(b - a, c - a);
  return (det > 0.0) - (det < 0.0);
}

namespace {

bool within_box(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) { return orientation(a, b, p) == 0 && within_box(a, b, p); }

bool segments_touch(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1) {
  const int o1 = orientation(p0, p1, q0);
  const int o2 = orientation(p0, p1, q1);
  const int o3 = orientation(q0, q1, p0);
  const int o4 = orientation(q0, q1, p1);
  if (o1 != o2 && o3 != o4) return true;
  return (o1 == 0 && within_box(p0, p1, q0)) || (o2 == 0 && within_box(p0, p1, q1)) ||
         (o3 == 0 && within_box(q0, q1, p0)) || (o4 == 0 && within_box(q0, q1, p1));
}

}  // namespace

std::optional<SegmentHit> intersect_segments(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1) {
  const Vec2 r = p1 - p0;
  const Vec2 s = q1 - q0;
  const double denom = cross(r, s);
  const Vec2 qp = q0 - p0;
  if (denom != 0.0) {
    double t = cross(qp, r) / denom;
    double u = cross(qp, s) / denom;
    if (u < 0.0 || u > 1.0 || t < 0.0 || t > 1.0) {
      // Re-check with exact predicates so hits exactly at endpoints are not lost to rounding.
      if (!segments_touch(p0, p1, q0, q1)) return std::nullopt;
      u = std::clamp(u, 0.0, 1.0);
      t = std::clamp(t, 0.0, 1.0);
    }
    return SegmentHit{u, t};
  }
  if (cross(qp, r) != 0.0) return std::nullopt;  // parallel, not collinear
  const double rr = dot(r, r);
  const double ss = dot(s, s);
  if (rr == 0.0) {
    if (ss == 0.0) return p0 == q0 ? std::optional<SegmentHit>(SegmentHit{0.0, 0.0}) : std::nullopt;
    if (!on_segment(q0, q1, p0)) return std::nullopt;
    return SegmentHit{0.0, dot(p0 - q0, s) / ss};
  }
  // Collinear: project q's endpoints onto p.
  double t0 = dot(q0 - p0, r) / rr;
  double t1 = dot(q1 - p0, r) / rr;
  const double lo = std::max(0.0, std::min(t0, t1));
  const double hi = std::min(1.0, std::max(t0, t1));
  if (lo > hi) return std::nullopt;
  const Vec2 hit = p0 + lo * r;
  const double u = ss == 0.0 ? 0.0 : std::clamp(dot(hit - q0, s) / ss, 0.0, 1.0);
  return SegmentHit{lo, u};
}

double polygon_signed_area(std::span<const Vec2> v) {
  double a = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) a += cross(v[k], v[(k + 1) % v.size()]);
  return 0.5 * a;
}

bool is_simple_polygon(std::span<const Vec2> v) {
  const std::size_t n = v.size();
  if (n < 3) return false;
  for (std::size_t a = 0; a < n; ++a) {
    if (v[a] == v[(a + 1) % n]) return false;
  }
  for (std::size_t a = 0; a < n; ++a) {
    const Vec2 a0 = v[a], a1 = v[(a + 1) % n];
    for (std::size_t b = a + 1; b < n; ++b) {
      const Vec2 b0 = v[b], b1 = v[(b + 1) % n];
      const bool adjacent = (b == a + 1) || (a == 0 && b == n - 1);
      if (!adjacent) {
        if (segments_touch(a0, a1, b0, b1)) return false;
        continue;
      }
      // Adjacent segments may only share their common vertex.
      const Vec2 shared = (b == a + 1) ? a1 : a0;
      const Vec2 other_a = (b == a + 1) ? a0 : a1;
      const Vec2 other_b = (b == a + 1) ? b1 : b0;
      if (orientation(shared, other_a, other_b) == 0 && dot(other_a - shared, other_b - shared) > 0.0)
        return false;  // folds back onto itself
    }
  }
  return true;
}

CagePolygon::CagePolygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 3) throw InvalidCage("cage needs at least 3 vertices");
  for (const Vec2& p : vertices_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidCage("cage has non-finite coordinates");
  }
  if (!is_simple_polygon(vertices_)) throw InvalidCage("cage polygon is not simple");
  if (polygon_signed_area(vertices_) <= 0.0) throw InvalidCage("cage polygon is not counterclockwise");
}

Vec2 CagePolygon::point_on_segment(std::size_t k, double bary) const {
  const Vec2 a = segment_start(k);
  const Vec2 b = segment_end(k);
  if (bary == 0.0) return a;
  if (bary == 1.0) return b;
  return a + bary * (b - a);
}

double CagePolygon::signed_area() const { return polygon_signed_area(vertices_); }

Vec2 CagePolygon::bbox_min() const {
  Vec2 m = vertices_.front();
  for (const Vec2& p : vertices_) m = {std::min(m.x, p.x), std::min(m.y, p.y)};
  return m;
}

Vec2 CagePolygon::bbox_max() const {
  Vec2 m = vertices_.front();
  for (const Vec2& p : vertices_) m = {std::max(m.x, p.x), std::max(m.y, p.y)};
  return m;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double s = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + s * ab);
}

bool CagePolygon::on_boundary(Vec2 p) const {
  for (std::size_t k = 0; k < size(); ++k) {
    if (on_segment(segment_start(k), segment_end(k), p)) return true;
  }
  return false;
}

bool CagePolygon::contains(Vec2 p) const {
  if (on_boundary(p)) return true;
  // Even-odd rule; an edge counts when it straddles the horizontal line through p with the
  // half-open convention (a.y <= p.y < b.y or b.y <= p.y < a.y).
  bool inside = false;
  for (std::size_t k = 0; k < size(); ++k) {
    const Vec2 a = segment_start(k);
    const Vec2 b = segment_end(k);
    if ((a.y <= p.y) == (b.y <= p.y)) continue;
    const int side = orientation(a, b, p);
    // Upward edge crossing to the right of p has p on its left.
    if ((b.y > a.y && side > 0) || (b.y < a.y && side < 0)) inside = !inside;
  }
  return inside;
}

std::vector<double> CagePolygon::interior_angles() const {
  const std::size_t n = size();
  std::vector<double> angles(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 prev = vertices_[(k + n - 1) % n];
    const Vec2 cur = vertices_[k];
    const Vec2 next = vertices_[(k + 1) % n];
    const Vec2 to_prev = prev - cur;
    const Vec2 to_next = next - cur;
    // Counterclockwise polygon: interior lies to the left of each edge.
    double a = std::atan2(cross(to_next, to_prev), dot(to_next, to_prev));
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    angles[k] = a;
  }
  return angles;
}

CagePolygon CagePolygon::transformed(double scale, double angle, Vec2 offset) const {
  const double c = std::cos(angle), s = std::sin(angle);
  std::vector<Vec2> out;
  out.reserve(size());
  for (const Vec2& p : vertices_) out.push_back(Vec2{c * p.x - s * p.y, s * p.x + c * p.y} * scale + offset);
  return CagePolygon(std::move(out));
}

}  // namespace icc
