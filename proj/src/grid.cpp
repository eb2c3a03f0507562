#include "icc/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "icc/errors.hpp"

namespace icc {

namespace {

// Sutherland-Hodgman against one directed clip edge; keeps the left half-plane.
std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& poly, Vec2 a, Vec2 b) {
  std::vector<Vec2> out;
  if (poly.empty()) return out;
  out.reserve(poly.size() + 4);
  const Vec2 d = b - a;
  auto side = [&](Vec2 p) { return cross(d, p - a); };
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2 cur = poly[k];
    const Vec2 nxt = poly[(k + 1) % poly.size()];
    const double sc = side(cur);
    const double sn = side(nxt);
    if (sc >= 0.0) out.push_back(cur);
    if ((sc >= 0.0) != (sn >= 0.0)) {
      const double t = sc / (sc - sn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

// Parts of the cage interior inside a counterclockwise triangle or a grid cell. Sutherland-Hodgman
// output may contain degenerate bridges for concave subjects, but its signed area is still exact.
std::vector<Vec2> clip_to_triangle(std::span<const Vec2> cage, Vec2 t0, Vec2 t1, Vec2 t2) {
  std::vector<Vec2> poly(cage.begin(), cage.end());
  poly = clip_half_plane(poly, t0, t1);
  poly = clip_half_plane(poly, t1, t2);
  return clip_half_plane(poly, t2, t0);
}

std::vector<Vec2> clip_to_cell(std::span<const Vec2> cage, int ci, int cj) {
  const Vec2 a(ci, cj), b(ci + 1, cj), c(ci + 1, cj + 1), e(ci, cj + 1);
  std::vector<Vec2> poly(cage.begin(), cage.end());
  poly = clip_half_plane(poly, a, b);
  poly = clip_half_plane(poly, b, c);
  poly = clip_half_plane(poly, c, e);
  poly = clip_half_plane(poly, e, a);
  return poly;
}

// Labels 4-connected components of inside vertices; returns the component count.
int label_components(const GridDomain& d, std::vector<int>& label) {
  label.assign(static_cast<std::size_t>(d.vertex_count()), -1);
  constexpr int di[4] = {1, -1, 0, 0};
  constexpr int dj[4] = {0, 0, 1, -1};
  int count = 0;
  for (int k = 0; k < d.vertex_count(); ++k) {
    if (d.cls(k) != VertexClass::inside || label[static_cast<std::size_t>(k)] >= 0) continue;
    std::deque<int> queue{k};
    label[static_cast<std::size_t>(k)] = count;
    while (!queue.empty()) {
      const VertexId v = d.vertex(queue.front());
      queue.pop_front();
      for (int n = 0; n < 4; ++n) {
        if (!d.is_inside(v.i + di[n], v.j + dj[n])) continue;
        const int id = d.index(v.i + di[n], v.j + dj[n]);
        if (label[static_cast<std::size_t>(id)] >= 0) continue;
        label[static_cast<std::size_t>(id)] = count;
        queue.push_back(id);
      }
    }
    ++count;
  }
  return count;
}

}  // namespace

void GridDomain::connect_inside_components(std::span<const std::uint8_t> candidate) {
  GridDomain& d = *this;
  constexpr int di[4] = {1, -1, 0, 0};
  constexpr int dj[4] = {0, 0, 1, -1};
  std::vector<int> label;
  while (label_components(d, label) > 1) {
    std::vector<int> sizes;
    for (int l : label)
      if (l >= 0) {
        if (static_cast<std::size_t>(l) >= sizes.size()) sizes.resize(static_cast<std::size_t>(l) + 1, 0);
        ++sizes[static_cast<std::size_t>(l)];
      }
    const int main = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    // Multi-source BFS from the main component through candidate vertices.
    std::vector<int> parent(static_cast<std::size_t>(d.vertex_count()), -2);
    std::deque<int> queue;
    for (int k = 0; k < d.vertex_count(); ++k)
      if (label[static_cast<std::size_t>(k)] == main) {
        parent[static_cast<std::size_t>(k)] = -1;
        queue.push_back(k);
      }
    int reached = -1;
    while (!queue.empty() && reached < 0) {
      const int cur = queue.front();
      queue.pop_front();
      const VertexId v = d.vertex(cur);
      for (int n = 0; n < 4 && reached < 0; ++n) {
        const int ni = v.i + di[n], nj = v.j + dj[n];
        if (ni < 0 || nj < 0 || ni > d.cells_x() || nj > d.cells_y()) continue;
        const int id = d.index(ni, nj);
        if (parent[static_cast<std::size_t>(id)] != -2) continue;
        const int l = label[static_cast<std::size_t>(id)];
        if (l < 0 && !candidate[static_cast<std::size_t>(id)]) continue;
        parent[static_cast<std::size_t>(id)] = cur;
        if (l >= 0) reached = id;
        else queue.push_back(id);
      }
    }
    if (reached < 0) return;  // the ball-like check reports it
    for (int k = parent[static_cast<std::size_t>(reached)]; k >= 0 && label[static_cast<std::size_t>(k)] != main;
         k = parent[static_cast<std::size_t>(k)])
      d.classes_[static_cast<std::size_t>(k)] = VertexClass::inside;
  }
}

namespace {

}  // namespace

int GridDomain::inside_count() const {
  return static_cast<int>(std::count(classes_.begin(), classes_.end(), VertexClass::inside));
}

int GridDomain::ring_count() const {
  return static_cast<int>(std::count(classes_.begin(), classes_.end(), VertexClass::ring));
}

Vec2 GridDomain::vertex_world(int idx) const {
  const VertexId v = vertex(idx);
  return grid_to_world(Vec2(v.i, v.j));
}

std::span<const int> GridDomain::cage_segments_in_cell(int ci, int cj) const {
  if (bucket_offsets_.empty() || ci < 0 || cj < 0 || ci >= nx_ || cj >= ny_) return {};
  const int cell = cj * nx_ + ci;
  const int begin = bucket_offsets_[static_cast<std::size_t>(cell)];
  const int end = bucket_offsets_[static_cast<std::size_t>(cell) + 1];
  return std::span<const int>(bucket_items_).subspan(static_cast<std::size_t>(begin),
                                                     static_cast<std::size_t>(end - begin));
}

void GridDomain::derive_ring() {
  for (int j = 0; j <= ny_; ++j) {
    for (int i = 0; i <= nx_; ++i) {
      if (cls(i, j) == VertexClass::inside) continue;
      VertexClass c = VertexClass::outside;
      for (int dj = -1; dj <= 1 && c == VertexClass::outside; ++dj)
        for (int di = -1; di <= 1; ++di)
          if ((di || dj) && is_inside(i + di, j + dj)) {
            c = VertexClass::ring;
            break;
          }
      classes_[static_cast<std::size_t>(index(i, j))] = c;
    }
  }
}

void GridDomain::attach_cage(const CagePolygon& cage) {
  cage_ = cage;
  cage_grid_.clear();
  for (const Vec2& p : cage.vertices()) cage_grid_.push_back(world_to_grid(p));

  const std::size_t n = cage_grid_.size();
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_));
  constexpr double pad = 1e-9;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 a = cage_grid_[k];
    const Vec2 b = cage_grid_[(k + 1) % n];
    const int i0 = std::clamp(static_cast<int>(std::floor(std::min(a.x, b.x) - pad)), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>(std::floor(std::max(a.x, b.x) + pad)), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>(std::floor(std::min(a.y, b.y) - pad)), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>(std::floor(std::max(a.y, b.y) + pad)), 0, ny_ - 1);
    for (int cj = j0; cj <= j1; ++cj)
      for (int ci = i0; ci <= i1; ++ci)
        buckets[static_cast<std::size_t>(cj * nx_ + ci)].push_back(static_cast<int>(k));
  }
  bucket_offsets_.assign(buckets.size() + 1, 0);
  bucket_items_.clear();
  for (std::size_t c = 0; c < buckets.size(); ++c) {
    bucket_items_.insert(bucket_items_.end(), buckets[c].begin(), buckets[c].end());
    bucket_offsets_[c + 1] = static_cast<int>(bucket_items_.size());
  }
}

GridDomain GridDomain::from_inside_mask(int nx, int ny, std::span<const std::uint8_t> inside, Vec2 origin,
                                        double spacing) {
  GridDomain d;
  d.nx_ = nx;
  d.ny_ = ny;
  d.resolution_ = std::max(nx, ny);
  d.origin_ = origin;
  d.spacing_ = spacing;
  d.classes_.assign(static_cast<std::size_t>((nx + 1) * (ny + 1)), VertexClass::outside);
  for (std::size_t k = 0; k < d.classes_.size() && k < inside.size(); ++k)
    if (inside[k]) d.classes_[k] = VertexClass::inside;
  d.derive_ring();
  return d;
}

GridDomain GridDomain::from_parts(int resolution, int nx, int ny, Vec2 origin, double spacing,
                                  std::vector<VertexClass> classes, std::optional<CagePolygon> cage) {
  GridDomain d;
  d.resolution_ = resolution;
  d.nx_ = nx;
  d.ny_ = ny;
  d.origin_ = origin;
  d.spacing_ = spacing;
  d.classes_ = std::move(classes);
  if (cage) d.attach_cage(*cage);
  return d;
}

GridDomain rasterize(const CagePolygon& cage, int resolution) {
  if (resolution < 4) throw InvalidCage("resolution must be at least 4");
  const Vec2 lo = cage.bbox_min();
  const Vec2 hi = cage.bbox_max();
  const double extent = std::max(hi.x - lo.x, hi.y - lo.y);
  if (!(extent > 0.0)) throw DegenerateCage("cage has zero extent");
  const double spacing = extent / (resolution - 2);
  if (cage.signed_area() < spacing * spacing)
    throw DegenerateCage("cage area is smaller than one grid cell");

  auto cells_for = [&](double len) {
    return std::max(1, static_cast<int>(std::ceil(len / spacing - 1e-9))) + 2;
  };

  GridDomain d;
  d.resolution_ = resolution;
  d.spacing_ = spacing;
  d.origin_ = lo - Vec2(spacing, spacing);
  d.nx_ = cells_for(hi.x - lo.x);
  d.ny_ = cells_for(hi.y - lo.y);
  d.classes_.assign(static_cast<std::size_t>(d.vertex_count()), VertexClass::outside);
  d.attach_cage(cage);

  for (int j = 0; j <= d.ny_; ++j)
    for (int i = 0; i <= d.nx_; ++i)
      if (cage.contains(d.grid_to_world(Vec2(i, j))))
        d.classes_[static_cast<std::size_t>(d.index(i, j))] = VertexClass::inside;
  // Vertices the world transform rounds off the cage by a hair are still on it; keeping them out of
  // the ring means every ring vertex is clearly outside and descents cross the cage before reaching one.
  constexpr double on_cage = 1e-9;
  for (int j = 0; j <= d.ny_; ++j)
    for (int i = 0; i <= d.nx_; ++i) {
      if (d.is_inside(i, j)) continue;
      const Vec2 g(i, j);
      for (int cj = std::max(0, j - 1); cj <= std::min(d.ny_ - 1, j); ++cj)
        for (int ci = std::max(0, i - 1); ci <= std::min(d.nx_ - 1, i); ++ci)
          for (int k : d.cage_segments_in_cell(ci, cj))
            if (point_segment_distance(g, d.cage_grid_[static_cast<std::size_t>(k)],
                                       d.cage_grid_[(static_cast<std::size_t>(k) + 1) % d.cage_grid_.size()]) <= on_cage)
              d.classes_[static_cast<std::size_t>(d.index(i, j))] = VertexClass::inside;
    }

  // Every triangle overlapping the cage interior needs an inside vertex, so its other vertices are at
  // least ring and its gradient is not flat; two inside corners of a crossed cell must not touch only
  // diagonally. Missing vertices are taken nearest the overlap.
  const double min_area = 1e-9;
  auto promote_nearest = [&](std::span<const Vec2> corners, const std::vector<Vec2>& piece) {
    Vec2 centre;
    for (const Vec2& q : piece) centre = centre + q;
    centre = centre / static_cast<double>(piece.size());
    const Vec2* best = nullptr;
    for (const Vec2& c : corners)
      if (!d.is_inside(static_cast<int>(c.x), static_cast<int>(c.y)) &&
          (!best || distance(centre, c) < distance(centre, *best)))
        best = &c;
    if (best)
      d.classes_[static_cast<std::size_t>(d.index(static_cast<int>(best->x), static_cast<int>(best->y)))] =
          VertexClass::inside;
  };
  for (int cj = 0; cj < d.ny_; ++cj) {
    for (int ci = 0; ci < d.nx_; ++ci) {
      if (d.cage_segments_in_cell(ci, cj).empty()) continue;
      const Vec2 a(ci, cj), b(ci + 1, cj), c(ci + 1, cj + 1), e(ci, cj + 1);
      const std::array<std::array<Vec2, 3>, 2> tris{{{a, b, c}, {a, c, e}}};
      for (const auto& t : tris) {
        const bool any_inside = std::any_of(t.begin(), t.end(), [&](Vec2 v) {
          return d.is_inside(static_cast<int>(v.x), static_cast<int>(v.y));
        });
        if (any_inside) continue;
        const std::vector<Vec2> piece = clip_to_triangle(d.cage_grid_, t[0], t[1], t[2]);
        if (piece.size() >= 3 && polygon_signed_area(piece) > min_area) promote_nearest(t, piece);
      }
      const bool in00 = d.is_inside(ci, cj), in10 = d.is_inside(ci + 1, cj);
      const bool in01 = d.is_inside(ci, cj + 1), in11 = d.is_inside(ci + 1, cj + 1);
      if (in00 + in10 + in01 + in11 != 2 || !((in00 && in11) || (in10 && in01))) continue;
      const std::vector<Vec2> piece = clip_to_cell(d.cage_grid_, ci, cj);
      if (piece.size() >= 3 && polygon_signed_area(piece) > min_area) {
        const std::array<Vec2, 4> corners{a, b, c, e};
        promote_nearest(corners, piece);
      }
    }
  }

  // Slivers thinner than a cell can leave inside vertices cut off from the rest. Join each stray
  // component to the largest one along a shortest axis path through corners of cells the cage crosses.
  std::vector<std::uint8_t> candidate(static_cast<std::size_t>(d.vertex_count()), 0);
  for (int cj = 0; cj < d.ny_; ++cj)
    for (int ci = 0; ci < d.nx_; ++ci)
      if (!d.cage_segments_in_cell(ci, cj).empty())
        for (int dj = 0; dj <= 1; ++dj)
          for (int di = 0; di <= 1; ++di) candidate[static_cast<std::size_t>(d.index(ci + di, cj + dj))] = 1;
  d.connect_inside_components(candidate);
  d.derive_ring();

  const auto angles = cage.interior_angles();
  for (std::size_t k = 0; k < angles.size(); ++k) {
    if (angles[k] < std::numbers::pi / 4.0)
      d.warnings_.push_back("sharp cage angle (< 45 degrees) at vertex " + std::to_string(k));
  }

  if (d.inside_count() == 0) throw DegenerateCage("no grid vertex lies inside the cage");
  if (!ball_like_check(d)) throw NotBallLike("rasterized cage interior is not ball-like (disconnected or has holes)");
  return d;
}

int inside_euler_characteristic(const GridDomain& d) {
  int v = 0, e = 0, f = 0;
  for (int j = 0; j <= d.cells_y(); ++j) {
    for (int i = 0; i <= d.cells_x(); ++i) {
      if (!d.is_inside(i, j)) continue;
      ++v;
      if (d.is_inside(i + 1, j)) ++e;
      if (d.is_inside(i, j + 1)) ++e;
      if (d.is_inside(i + 1, j) && d.is_inside(i, j + 1) && d.is_inside(i + 1, j + 1)) ++f;
    }
  }
  return v - e + f;
}

bool ball_like_check(const GridDomain& d) {
  const int total = d.inside_count();
  if (total == 0) return false;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(d.vertex_count()), 0);
  int start = -1;
  for (int k = 0; k < d.vertex_count(); ++k)
    if (d.cls(k) == VertexClass::inside) {
      start = k;
      break;
    }
  std::deque<int> queue{start};
  seen[static_cast<std::size_t>(start)] = 1;
  int reached = 0;
  constexpr int di[4] = {1, -1, 0, 0};
  constexpr int dj[4] = {0, 0, 1, -1};
  while (!queue.empty()) {
    const VertexId v = d.vertex(queue.front());
    queue.pop_front();
    ++reached;
    for (int n = 0; n < 4; ++n) {
      const int ni = v.i + di[n], nj = v.j + dj[n];
      if (!d.is_inside(ni, nj)) continue;
      const int id = d.index(ni, nj);
      if (seen[static_cast<std::size_t>(id)]) continue;
      seen[static_cast<std::size_t>(id)] = 1;
      queue.push_back(id);
    }
  }
  return reached == total && inside_euler_characteristic(d) == 1;
}

}  // namespace icc
