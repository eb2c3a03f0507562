#include "icc/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "icc/errors.hpp"

namespace icc {

namespace {

// Relative band inside which a floating-point sign test reports zero. Degenerate configurations of
// exactly representable inputs (a ray through a vertex, a gradient parallel to an edge) then behave
// as they would in exact arithmetic despite rounding in the intersection points.
constexpr double kSnap = 1e-12;
constexpr double kLocateSnap = 1e-10;

int snapped_sign(double x, double scale) {
  if (std::abs(x) <= kSnap * scale) return 0;
  return x > 0.0 ? 1 : -1;
}

// Side of `w` relative to direction `d`: +1 left, -1 right, 0 along. Every wedge and edge test
// goes through this one predicate so that neighbouring tests agree on near-parallel flows.
int side(Vec2 d, Vec2 w) { return snapped_sign(cross(d, w), norm(d) * norm(w)); }

Vec2 as_vec(VertexId v) { return Vec2(v.i, v.j); }

std::string describe(VertexId v) { return "(" + std::to_string(v.i) + "," + std::to_string(v.j) + ")"; }

int label_of(TriangleRef t, GridEdge e) {
  for (int k = 1; k <= 3; ++k)
    if (triangle_edge(t, k) == e) return k;
  return 0;
}

Vec2 flow(const ScalarField& f, TriangleRef t, Direction dir) {
  const Vec2 g = grid_gradient(f, t);
  return dir == Direction::ascent ? g : -g;
}

// Normal of edge (p, q) pointing toward `o`.
Vec2 inward_normal(Vec2 p, Vec2 q, Vec2 o) {
  const Vec2 d = q - p;
  Vec2 n(-d.y, d.x);
  if (dot(n, o - p) < 0.0) n = -n;
  return n;
}

CurvePoint make_point(const GridDomain& d, Vec2 grid, Location loc) {
  return CurvePoint{d.grid_to_world(grid), grid, loc};
}

CurvePoint vertex_point(const GridDomain& d, VertexId v) {
  Location loc;
  loc.kind = LocationKind::vertex;
  loc.vertex = v;
  return make_point(d, as_vec(v), loc);
}

CurvePoint edge_point(const GridDomain& d, Vec2 grid, GridEdge e) {
  Location loc;
  loc.kind = LocationKind::edge;
  loc.edge = e;
  return make_point(d, grid, loc);
}

// Endpoint of the edge the curve slides to: the perturbed-higher one when ascending.
VertexId slide_target(const ScalarField& f, GridEdge e, Direction dir) {
  const auto [a, b] = e.endpoints();
  const GridDomain& d = *f.domain;
  const bool b_higher = perturbed_greater(f, d.index(b), d.index(a));
  return (b_higher == (dir == Direction::ascent)) ? b : a;
}

// Leaves vertex `v` through triangle `t` whose flow lies strictly inside its wedge at v.
StepResult leave_vertex_through(const ScalarField& f, VertexId v, TriangleRef t, Vec2 w) {
  const auto verts = triangle_vertices(t);
  int k = 0;
  while (!(verts[static_cast<std::size_t>(k)] == v)) ++k;
  const Vec2 pv = as_vec(v);
  const Vec2 P = as_vec(verts[static_cast<std::size_t>((k + 1) % 3)]);
  const Vec2 Q = as_vec(verts[static_cast<std::size_t>((k + 2) % 3)]);
  double s = cross(w, P - pv) / cross(w, P - Q);
  s = std::clamp(s, 0.0, 1.0);
  const GridEdge e = *edge_between(verts[static_cast<std::size_t>((k + 1) % 3)], verts[static_cast<std::size_t>((k + 2) % 3)]);
  StepResult r;
  r.point = edge_point(*f.domain, P + s * (Q - P), e);
  r.through = t;
  return r;
}

// Steepest admissible direction out of a vertex. Candidates are triangles whose flow points into
// their open wedge and edges onto which both neighbouring flows converge. A descent takes an edge
// onto which both flows converge strictly (an expansion edge of the ascent field) before anything
// else, following the descents that merge there.
StepResult step_from_vertex(const ScalarField& f, VertexId v, Direction dir) {
  const GridDomain& d = *f.domain;
  const Vec2 pv = as_vec(v);
  const int vi = d.index(v);

  enum class Kind { none, triangle, edge, merge };
  Kind best_kind = Kind::none;
  double best = 0.0;
  TriangleRef best_tri;
  VertexId best_to;
  Vec2 best_w;

  const TriangleRef around[6] = {
      {v.i, v.j, Half::lower},         {v.i, v.j, Half::upper},         {v.i - 1, v.j, Half::lower},
      {v.i - 1, v.j - 1, Half::lower}, {v.i - 1, v.j - 1, Half::upper}, {v.i, v.j - 1, Half::upper},
  };
  for (const TriangleRef& t : around) {
    if (!triangle_has_values(f, t)) continue;
    const Vec2 w = flow(f, t, dir);
    if (w.x == 0.0 && w.y == 0.0) continue;
    const auto verts = triangle_vertices(t);
    int k = 0;
    while (!(verts[static_cast<std::size_t>(k)] == v)) ++k;
    const Vec2 P = as_vec(verts[static_cast<std::size_t>((k + 1) % 3)]) - pv;
    const Vec2 Q = as_vec(verts[static_cast<std::size_t>((k + 2) % 3)]) - pv;
    if (side(P, w) <= 0 || side(Q, w) >= 0) continue;
    const double steep = dot(w, w);
    if (best_kind == Kind::none || (best_kind != Kind::merge && steep > best)) {
      best_kind = Kind::triangle;
      best = steep;
      best_tri = t;
      best_w = w;
    }
  }

  static constexpr int offsets[6][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 0}, {-1, -1}, {0, -1}};
  for (const auto& o : offsets) {
    const VertexId u{v.i + o[0], v.j + o[1]};
    if (!d.has_value(u.i, u.j)) continue;
    const double rise = dir == Direction::ascent ? f.value(d.index(u)) - f.value(vi) : f.value(vi) - f.value(d.index(u));
    if (!(rise > 0.0)) continue;
    const GridEdge e = *edge_between(v, u);
    auto sides = edge_triangles(e);
    if (!(e.endpoints().first == v)) std::swap(sides[0], sides[1]);
    const Vec2 dv = as_vec(u) - pv;
    bool converge = true, strict = true;
    int valid = 0;
    for (int s = 0; s < 2; ++s) {
      if (!triangle_has_values(f, sides[static_cast<std::size_t>(s)])) continue;
      ++valid;
      const Vec2 w = flow(f, sides[static_cast<std::size_t>(s)], dir);
      // Left side (s = 0) converges when its flow points right of the edge direction.
      const int away = side(dv, w) * (s == 0 ? 1 : -1);
      if (away > 0) converge = false;
      if (away >= 0) strict = false;
    }
    if (valid == 0) continue;
    const double steep = rise * rise / dot(dv, dv);
    if (dir == Direction::descent && strict && valid == 2) {
      if (best_kind != Kind::merge || steep > best) {
        best_kind = Kind::merge;
        best = steep;
        best_to = u;
      }
    } else if (converge && best_kind != Kind::merge && (best_kind == Kind::none || steep > best)) {
      best_kind = Kind::edge;
      best = steep;
      best_to = u;
    }
  }

  StepResult r;
  switch (best_kind) {
    case Kind::none:
      throw ZeroGradient("no admissible " + std::string(dir == Direction::ascent ? "ascent" : "descent") +
                         " direction at vertex " + describe(v));
    case Kind::triangle: return leave_vertex_through(f, v, best_tri, best_w);
    case Kind::edge:
      r.point = vertex_point(d, best_to);
      r.slid = true;
      return r;
    case Kind::merge:
      r.point = vertex_point(d, best_to);
      r.slid = true;
      return r;
  }
  return r;
}

// A start point on an edge with no incoming triangle.
StepResult start_on_edge(const ScalarField& f, const CurvePoint& p, Direction dir) {
  const GridEdge e = p.location.edge;
  const auto [a, b] = e.endpoints();
  const auto sides = edge_triangles(e);
  bool enters[2] = {false, false};
  double steep[2] = {0.0, 0.0};
  for (int s = 0; s < 2; ++s) {
    const TriangleRef t = sides[static_cast<std::size_t>(s)];
    if (!triangle_has_values(f, t)) continue;
    const Vec2 w = flow(f, t, dir);
    const Vec2 n = inward_normal(as_vec(a), as_vec(b), as_vec(opposite_vertex(t, label_of(t, e))));
    enters[s] = snapped_sign(dot(w, n), norm(w) * norm(n)) > 0;
    steep[s] = dot(w, w);
  }
  if (enters[0] != enters[1]) return step_across_edge(f, p, sides[enters[0] ? 0 : 1], dir);
  if (enters[0]) {
    const double along = f.value(f.domain->index(b)) - f.value(f.domain->index(a));
    if (dir == Direction::ascent || along == 0.0)
      return step_across_edge(f, p, sides[steep[1] > steep[0] ? 1 : 0], dir);
    StepResult r;
    r.point = vertex_point(*f.domain, slide_target(f, e, dir));
    r.slid = true;
    return r;
  }
  return handle_compression(f, p, dir);
}

bool at_ring_level(const GridDomain& d, const CurvePoint& p) {
  const auto non_inside = [&](VertexId v) { return d.cls(v.i, v.j) != VertexClass::inside; };
  if (p.location.kind == LocationKind::vertex) return non_inside(p.location.vertex);
  if (p.location.kind == LocationKind::edge) {
    const auto [a, b] = p.location.edge.endpoints();
    return non_inside(a) && non_inside(b);
  }
  return false;
}

struct CageHit {
  double s = 0.0;
  int segment = -1;
  double bary = 0.0;
};

// First crossing of the cage by the grid-space segment [a, b].
std::optional<CageHit> first_cage_hit(const GridDomain& d, Vec2 a, Vec2 b) {
  constexpr double pad = 1e-9;
  const int i0 = static_cast<int>(std::floor(std::min(a.x, b.x) - pad));
  const int i1 = static_cast<int>(std::floor(std::max(a.x, b.x) + pad));
  const int j0 = static_cast<int>(std::floor(std::min(a.y, b.y) - pad));
  const int j1 = static_cast<int>(std::floor(std::max(a.y, b.y) + pad));
  std::vector<int> segs;
  for (int cj = j0; cj <= j1; ++cj)
    for (int ci = i0; ci <= i1; ++ci)
      for (int k : d.cage_segments_in_cell(ci, cj)) segs.push_back(k);
  std::sort(segs.begin(), segs.end());
  segs.erase(std::unique(segs.begin(), segs.end()), segs.end());

  const auto cage = d.cage_grid();
  std::optional<CageHit> best;
  for (int k : segs) {
    const Vec2 q0 = cage[static_cast<std::size_t>(k)];
    const Vec2 q1 = cage[(static_cast<std::size_t>(k) + 1) % cage.size()];
    if (const auto hit = intersect_segments(a, b, q0, q1)) {
      if (!best || hit->s < best->s) best = CageHit{hit->s, k, hit->t};
      continue;
    }
    // An endpoint within the on-cage tolerance touches the cage there.
    if (!best && point_segment_distance(b, q0, q1) <= pad) {
      const Vec2 e = q1 - q0;
      best = CageHit{1.0, k, std::clamp(dot(b - q0, e) / dot(e, e), 0.0, 1.0)};
    }
  }
  // A hit within the on-cage tolerance of a cage vertex lands on that vertex.
  if (best) {
    const auto k = static_cast<std::size_t>(best->segment);
    const double len = norm(cage[(k + 1) % cage.size()] - cage[k]);
    if (best->bary * len <= pad) best->bary = 0.0;
    else if ((1.0 - best->bary) * len <= pad) best->bary = 1.0;
  }
  return best;
}

void append(IntegralCurve& c, const GridDomain& d, const CurvePoint& p, bool slid) {
  const double prev = c.arc_length.empty() ? 0.0 : c.arc_length.back();
  const double step = c.points.empty() ? 0.0 : distance(c.points.back().grid, p.grid) * d.spacing();
  c.points.push_back(p);
  c.arc_length.push_back(prev + step);
  if (slid) c.compression_hits.push_back(static_cast<int>(c.points.size()) - 1);
}

}  // namespace

bool Location::operator==(const Location& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case LocationKind::interior: return triangle == o.triangle;
    case LocationKind::edge: return edge == o.edge;
    case LocationKind::vertex: return vertex == o.vertex;
  }
  return false;
}

std::pair<VertexId, VertexId> GridEdge::endpoints() const {
  switch (kind) {
    case EdgeKind::horizontal: return {{i, j}, {i + 1, j}};
    case EdgeKind::vertical: return {{i, j}, {i, j + 1}};
    case EdgeKind::diagonal: return {{i, j}, {i + 1, j + 1}};
  }
  return {};
}

std::array<VertexId, 3> triangle_vertices(TriangleRef t) {
  const int i = t.ci, j = t.cj;
  if (t.half == Half::lower) return {VertexId{i, j}, VertexId{i + 1, j}, VertexId{i + 1, j + 1}};
  return {VertexId{i, j}, VertexId{i + 1, j + 1}, VertexId{i, j + 1}};
}

GridEdge triangle_edge(TriangleRef t, int label) {
  const int i = t.ci, j = t.cj;
  if (t.half == Half::lower) {
    switch (label) {
      case 1: return {EdgeKind::horizontal, i, j};
      case 2: return {EdgeKind::diagonal, i, j};
      default: return {EdgeKind::vertical, i + 1, j};
    }
  }
  switch (label) {
    case 1: return {EdgeKind::horizontal, i, j + 1};
    case 2: return {EdgeKind::diagonal, i, j};
    default: return {EdgeKind::vertical, i, j};
  }
}

VertexId opposite_vertex(TriangleRef t, int label) {
  const int i = t.ci, j = t.cj;
  if (t.half == Half::lower) {
    switch (label) {
      case 1: return {i + 1, j + 1};
      case 2: return {i + 1, j};
      default: return {i, j};
    }
  }
  switch (label) {
    case 1: return {i, j};
    case 2: return {i, j + 1};
    default: return {i + 1, j + 1};
  }
}

TriangleRef triangle_across(TriangleRef t, int label) {
  const int i = t.ci, j = t.cj;
  if (t.half == Half::lower) {
    switch (label) {
      case 1: return {i, j - 1, Half::upper};
      case 2: return {i, j, Half::upper};
      default: return {i + 1, j, Half::upper};
    }
  }
  switch (label) {
    case 1: return {i, j + 1, Half::lower};
    case 2: return {i, j, Half::lower};
    default: return {i - 1, j, Half::lower};
  }
}

std::array<TriangleRef, 2> edge_triangles(GridEdge e) {
  switch (e.kind) {
    case EdgeKind::horizontal: return {TriangleRef{e.i, e.j, Half::lower}, TriangleRef{e.i, e.j - 1, Half::upper}};
    case EdgeKind::vertical: return {TriangleRef{e.i - 1, e.j, Half::lower}, TriangleRef{e.i, e.j, Half::upper}};
    case EdgeKind::diagonal: return {TriangleRef{e.i, e.j, Half::upper}, TriangleRef{e.i, e.j, Half::lower}};
  }
  return {};
}

std::optional<GridEdge> edge_between(VertexId a, VertexId b) {
  if (b.i < a.i || (b.i == a.i && b.j < a.j)) std::swap(a, b);
  const int di = b.i - a.i, dj = b.j - a.j;
  if (di == 1 && dj == 0) return GridEdge{EdgeKind::horizontal, a.i, a.j};
  if (di == 0 && dj == 1) return GridEdge{EdgeKind::vertical, a.i, a.j};
  if (di == 1 && dj == 1) return GridEdge{EdgeKind::diagonal, a.i, a.j};
  return std::nullopt;
}

bool triangle_in_grid(const GridDomain& d, TriangleRef t) {
  return t.ci >= 0 && t.cj >= 0 && t.ci < d.cells_x() && t.cj < d.cells_y();
}

bool triangle_has_values(const ScalarField& f, TriangleRef t) {
  const GridDomain& d = *f.domain;
  if (!triangle_in_grid(d, t)) return false;
  for (const VertexId& v : triangle_vertices(t))
    if (!d.has_value(v.i, v.j)) return false;
  return true;
}

int next_edge(int incoming, int cross_sign) {
  // A non-negative sign turns to the previous label cyclically, a negative one to the next.
  return cross_sign >= 0 ? (incoming + 1) % 3 + 1 : incoming % 3 + 1;
}

Vec2 grid_gradient(const ScalarField& f, TriangleRef t) {
  const GridDomain& d = *f.domain;
  const auto v = triangle_vertices(t);
  const double a = f.value(d.index(v[0])), b = f.value(d.index(v[1])), c = f.value(d.index(v[2]));
  if (t.half == Half::lower) return Vec2(b - a, c - b);
  return Vec2(b - c, c - a);
}

Vec2 gradient(const ScalarField& f, TriangleRef t) { return grid_gradient(f, t) / f.domain->spacing(); }

CurvePoint locate(const ScalarField& f, Vec2 world) {
  const GridDomain& d = *f.domain;
  Vec2 g = d.world_to_grid(world);
  const auto snap = [](double x) {
    const double r = std::round(x);
    return std::abs(x - r) <= kLocateSnap ? r : x;
  };
  g = Vec2(snap(g.x), snap(g.y));
  if (g.x < 0.0 || g.y < 0.0 || g.x > d.cells_x() || g.y > d.cells_y())
    throw ExitedDomain("point lies outside the grid");
  const int ci = std::min(static_cast<int>(std::floor(g.x)), d.cells_x() - 1);
  const int cj = std::min(static_cast<int>(std::floor(g.y)), d.cells_y() - 1);
  const double fx = g.x - ci, fy = g.y - cj;
  const bool on_x = fx == 0.0 || fx == 1.0, on_y = fy == 0.0 || fy == 1.0;

  Location loc;
  if (on_x && on_y) {
    loc.kind = LocationKind::vertex;
    loc.vertex = {static_cast<int>(g.x), static_cast<int>(g.y)};
    return CurvePoint{world, as_vec(loc.vertex), loc};
  }
  loc.kind = LocationKind::edge;
  if (on_y) {
    loc.edge = {EdgeKind::horizontal, ci, static_cast<int>(g.y)};
  } else if (on_x) {
    loc.edge = {EdgeKind::vertical, static_cast<int>(g.x), cj};
  } else if (std::abs(fx - fy) <= kLocateSnap) {
    loc.edge = {EdgeKind::diagonal, ci, cj};
    const double m = 0.5 * (fx + fy);
    g = Vec2(ci + m, cj + m);
  } else {
    loc.kind = LocationKind::interior;
    loc.triangle = {ci, cj, fy < fx ? Half::lower : Half::upper};
  }
  return CurvePoint{d.grid_to_world(g), g, loc};
}

StepResult step_from_interior(const ScalarField& f, const CurvePoint& p, Direction dir) {
  const TriangleRef t = p.location.triangle;
  const Vec2 w = flow(f, t, dir);
  if (w.x == 0.0 && w.y == 0.0) throw ZeroGradient("constant triangle at cell " + describe({t.ci, t.cj}));
  const auto verts = triangle_vertices(t);
  double c[3];
  int s[3];
  for (int k = 0; k < 3; ++k) {
    const Vec2 r = as_vec(verts[static_cast<std::size_t>(k)]) - p.grid;
    c[k] = cross(w, r);
    s[k] = side(w, r);
  }
  // The ray leaves through the edge whose start lies right of it and whose end lies left of it.
  int a = -1;
  for (int k = 0; k < 3; ++k)
    if (s[k] < 0 && s[(k + 1) % 3] >= 0) a = k;
  if (a < 0) a = static_cast<int>(std::min_element(c, c + 3) - c);
  const int b = (a + 1) % 3;

  StepResult r;
  r.through = t;
  if (s[b] == 0) {
    r.point = vertex_point(*f.domain, verts[static_cast<std::size_t>(b)]);
    return r;
  }
  const Vec2 A = as_vec(verts[static_cast<std::size_t>(a)]), B = as_vec(verts[static_cast<std::size_t>(b)]);
  const double lambda = std::clamp(c[a] / (c[a] - c[b]), 0.0, 1.0);
  r.point = edge_point(*f.domain, A + lambda * (B - A), *edge_between(verts[static_cast<std::size_t>(a)], verts[static_cast<std::size_t>(b)]));
  return r;
}

StepResult step_across_edge(const ScalarField& f, const CurvePoint& p, TriangleRef into, Direction dir) {
  StepResult r;
  if (!triangle_has_values(f, into)) {
    r.exited = true;
    r.point = p;
    return r;
  }
  const GridEdge e = p.location.edge;
  const int label = label_of(into, e);
  const Vec2 w = flow(f, into, dir);
  if (w.x == 0.0 && w.y == 0.0) throw ZeroGradient("constant triangle at cell " + describe({into.ci, into.cj}));
  const auto [ea, eb] = e.endpoints();
  const Vec2 P = as_vec(ea), Q = as_vec(eb);
  const Vec2 O = as_vec(opposite_vertex(into, label));
  const Vec2 n = inward_normal(P, Q, O);
  const int gn = snapped_sign(dot(w, n), norm(w) * norm(n));
  if (gn < 0) return handle_compression(f, p, dir);
  if (gn == 0) {
    // Flow runs along the edge: follow it to the endpoint it points at.
    r.point = vertex_point(*f.domain, dot(w, Q - P) >= 0.0 ? eb : ea);
    r.slid = true;
    return r;
  }
  r.through = into;
  const Vec2 to_opposite = O - p.grid;
  const int sign = side(w, to_opposite);
  if (sign == 0) {
    r.point = vertex_point(*f.domain, opposite_vertex(into, label));
    return r;
  }
  const GridEdge out = triangle_edge(into, next_edge(label, sign));
  const auto [xa, xb] = out.endpoints();
  const Vec2 X = as_vec(xa), Y = as_vec(xb);
  const double lambda = std::clamp(cross(w, X - p.grid) / cross(w, X - Y), 0.0, 1.0);
  r.point = edge_point(*f.domain, X + lambda * (Y - X), out);
  return r;
}

StepResult handle_compression(const ScalarField& f, const CurvePoint& p, Direction dir) {
  StepResult r;
  r.point = vertex_point(*f.domain, slide_target(f, p.location.edge, dir));
  r.slid = true;
  return r;
}

int step_limit(const GridDomain& d) { return 4 * 2 * d.cells_x() * d.cells_y(); }

IntegralCurve trace(const ScalarField& f, Vec2 start, Direction dir, const TraceOptions& options) {
  const GridDomain& d = *f.domain;
  const bool use_cage = dir == Direction::descent && options.stop_at_cage && !d.cage_grid().empty();
  const VertexId top = d.vertex(f.maximum);

  IntegralCurve curve;
  curve.direction = dir;
  CurvePoint cur = locate(f, start);
  append(curve, d, cur, false);

  auto finish_on_cage = [&](const CageHit& hit, Location loc) {
    const Vec2 world = d.cage()->point_on_segment(static_cast<std::size_t>(hit.segment), hit.bary);
    CurvePoint end{world, d.world_to_grid(world), loc};
    append(curve, d, end, false);
    curve.reached_cage = true;
    curve.cage_segment = hit.segment;
    curve.cage_bary = hit.bary;
  };

  if (use_cage) {
    if (auto hit = first_cage_hit(d, cur.grid, cur.grid)) {
      curve.points.clear();
      curve.arc_length.clear();
      finish_on_cage(*hit, cur.location);
      return curve;
    }
  }

  std::optional<TriangleRef> incoming;
  const int limit = step_limit(d);
  while (true) {
    if (dir == Direction::ascent && cur.location.kind == LocationKind::vertex && cur.location.vertex == top) break;
    if (dir == Direction::descent && !use_cage && at_ring_level(d, cur)) break;
    if (curve.steps >= limit)
      throw StepLimitExceeded("trace exceeded " + std::to_string(limit) + " steps");

    StepResult r;
    switch (cur.location.kind) {
      case LocationKind::interior: r = step_from_interior(f, cur, dir); break;
      case LocationKind::edge:
        r = incoming ? step_across_edge(f, cur, *incoming, dir) : start_on_edge(f, cur, dir);
        break;
      case LocationKind::vertex: r = step_from_vertex(f, cur.location.vertex, dir); break;
    }
    ++curve.steps;
    if (r.exited) {
      if (dir == Direction::descent && !use_cage) break;
      throw ExitedDomain("integral curve left the valued region near " + describe({static_cast<int>(cur.grid.x), static_cast<int>(cur.grid.y)}));
    }

    if (use_cage) {
      if (auto hit = first_cage_hit(d, cur.grid, r.point.grid)) {
        Location loc = r.point.location;
        if (r.through) {
          loc.kind = LocationKind::interior;
          loc.triangle = *r.through;
        }
        finish_on_cage(*hit, loc);
        if (r.slid) curve.compression_hits.push_back(static_cast<int>(curve.points.size()) - 1);
        break;
      }
    }

    append(curve, d, r.point, r.slid);
    incoming.reset();
    if (r.point.location.kind == LocationKind::edge && r.through)
      incoming = triangle_across(*r.through, label_of(*r.through, r.point.location.edge));
    cur = r.point;
  }
  return curve;
}

IntegralCurveCoordinate compute_icc(const ScalarField& f, Vec2 p) {
  const GridDomain& d = *f.domain;
  if (!d.cage()) throw CageMismatch("field domain carries no cage");
  const CurvePoint start = locate(f, p);
  if (start.location.kind == LocationKind::vertex && d.index(start.location.vertex) == f.maximum)
    return IntegralCurveCoordinate::maximum_token();

  const IntegralCurve down = trace(f, p, Direction::descent);
  if (!down.reached_cage) throw ExitedDomain("descent did not reach the cage");
  IntegralCurveCoordinate c;
  c.segment = down.cage_segment;
  c.bary = down.cage_bary;
  c.collapsed = down.slid();
  const double ld = down.length();
  if (ld == 0.0) {
    c.t = 0.0;
    return c;
  }
  const IntegralCurve up = trace(f, p, Direction::ascent);
  const double total = ld + up.length();
  if (total > 0.0) {
    c.t = ld / total;
  } else {
    c.degenerate = true;
  }
  return c;
}

InverseResult invert_icc_detailed(const ScalarField& f, const IntegralCurveCoordinate& c) {
  const GridDomain& d = *f.domain;
  InverseResult out;
  if (c.at_maximum) {
    out.position = f.maximum_world();
    return out;
  }
  if (!d.cage()) throw CageMismatch("field domain carries no cage");
  if (c.segment < 0 || static_cast<std::size_t>(c.segment) >= d.cage()->size())
    throw CageMismatch("coordinate segment " + std::to_string(c.segment) + " does not exist on the cage");
  const Vec2 b = d.cage()->point_on_segment(static_cast<std::size_t>(c.segment), c.bary);
  if (c.t <= 0.0) {
    out.position = b;
    return out;
  }
  const IntegralCurve up = trace(f, b, Direction::ascent);
  const double target = c.t * up.length();
  for (int h : up.compression_hits)
    if (up.arc_length[static_cast<std::size_t>(h) - 1] < target) out.slid_before = true;
  if (c.t >= 1.0) {
    out.position = f.maximum_world();
    return out;
  }
  const auto& s = up.arc_length;
  auto it = std::lower_bound(s.begin(), s.end(), target);
  if (it == s.end()) {
    out.position = up.points.back().position;
    return out;
  }
  const std::size_t k = static_cast<std::size_t>(it - s.begin());
  if (k == 0 || *it == target) {
    out.position = up.points[k].position;
    return out;
  }
  const double u = (target - s[k - 1]) / (s[k] - s[k - 1]);
  out.position = up.points[k - 1].position + u * (up.points[k].position - up.points[k - 1].position);
  return out;
}

Vec2 invert_icc(const ScalarField& f, const IntegralCurveCoordinate& c) { return invert_icc_detailed(f, c).position; }

namespace {

// Signs of g . n_in on both sides of every interior edge; `want` selects +1 (away) or -1 (toward).
std::vector<GridEdge> edges_with_normal_sign(const ScalarField& f, int want) {
  const GridDomain& d = *f.domain;
  std::vector<GridEdge> out;
  for (int j = 0; j <= d.cells_y(); ++j) {
    for (int i = 0; i <= d.cells_x(); ++i) {
      for (EdgeKind k : {EdgeKind::horizontal, EdgeKind::vertical, EdgeKind::diagonal}) {
        const GridEdge e{k, i, j};
        const auto sides = edge_triangles(e);
        if (!triangle_has_values(f, sides[0]) || !triangle_has_values(f, sides[1])) continue;
        const auto [a, b] = e.endpoints();
        bool all = true;
        for (const TriangleRef& t : sides) {
          const Vec2 g = grid_gradient(f, t);
          const Vec2 n = inward_normal(as_vec(a), as_vec(b), as_vec(opposite_vertex(t, label_of(t, e))));
          if (snapped_sign(dot(g, n), norm(g) * norm(n)) != want) all = false;
        }
        if (all) out.push_back(e);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<GridEdge> find_expansion_edges(const ScalarField& f) { return edges_with_normal_sign(f, 1); }
std::vector<GridEdge> find_compression_edges(const ScalarField& f) { return edges_with_normal_sign(f, -1); }

}  // namespace icc
