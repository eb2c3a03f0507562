#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "icc/field.hpp"

namespace icc {

enum class Direction { ascent, descent };

enum class Half : std::uint8_t { lower = 0, upper = 1 };

/// One triangle of the fixed triangulation. The lower half of cell (i, j) has vertices
/// (i,j), (i+1,j), (i+1,j+1); the upper half has (i,j), (i+1,j+1), (i,j+1), both counterclockwise.
///
/// Edge labels: lower 1 = bottom, 2 = diagonal, 3 = right; upper 1 = top, 2 = diagonal, 3 = left.
/// Crossing an edge with label k enters the neighbouring triangle through its own label k.
struct TriangleRef {
  int ci = 0;
  int cj = 0;
  Half half = Half::lower;
  constexpr bool operator==(const TriangleRef&) const = default;
};

enum class EdgeKind : std::uint8_t { horizontal, vertical, diagonal };

/// Grid edge anchored at its lower-left endpoint (i, j): horizontal to (i+1, j), vertical to
/// (i, j+1), diagonal to (i+1, j+1).
struct GridEdge {
  EdgeKind kind = EdgeKind::horizontal;
  int i = 0;
  int j = 0;
  constexpr bool operator==(const GridEdge&) const = default;
  std::pair<VertexId, VertexId> endpoints() const;
};

std::array<VertexId, 3> triangle_vertices(TriangleRef t);
GridEdge triangle_edge(TriangleRef t, int label);
VertexId opposite_vertex(TriangleRef t, int label);
/// Triangle sharing edge `label` with `t` (may lie outside the grid).
TriangleRef triangle_across(TriangleRef t, int label);
/// The (up to two) triangles bordering an edge: the one on its left when walking from the
/// first to the second endpoint, then the one on its right.
std::array<TriangleRef, 2> edge_triangles(GridEdge e);
/// Grid edge joining two axis or diagonal neighbours; nullopt otherwise.
std::optional<GridEdge> edge_between(VertexId a, VertexId b);

bool triangle_in_grid(const GridDomain& d, TriangleRef t);
/// True when the triangle lies in the grid and all three vertices carry values.
bool triangle_has_values(const ScalarField& f, TriangleRef t);

/// Outgoing edge label for a curve entering through `incoming` (1..3) whose gradient lies on the
/// given side (cross_sign >= 0 counts as +) of the vector toward the opposite vertex.
int next_edge(int incoming, int cross_sign);

/// Constant gradient of the linear interpolant on a triangle, in world units.
Vec2 gradient(const ScalarField& f, TriangleRef t);
/// Same gradient measured per grid spacing (value difference per cell edge).
Vec2 grid_gradient(const ScalarField& f, TriangleRef t);

enum class LocationKind : std::uint8_t { interior, edge, vertex };

struct Location {
  LocationKind kind = LocationKind::interior;
  TriangleRef triangle;  ///< interior points
  GridEdge edge;         ///< edge points
  VertexId vertex;       ///< vertex points
  bool operator==(const Location& o) const;
};

struct CurvePoint {
  Vec2 position;  ///< world coordinates
  Vec2 grid;      ///< grid coordinates
  Location location;
};

struct IntegralCurve {
  Direction direction = Direction::ascent;
  std::vector<CurvePoint> points;
  std::vector<double> arc_length;    ///< cumulative, world units
  std::vector<int> compression_hits; ///< indices of points reached by sliding along an edge
  int steps = 0;
  bool reached_cage = false;
  int cage_segment = -1;
  double cage_bary = 0.0;

  double length() const { return arc_length.empty() ? 0.0 : arc_length.back(); }
  bool slid() const { return !compression_hits.empty(); }
};

/// Classifies a world point by the simplex of the triangulation containing it. Coordinates within
/// 1e-10 grid units of a grid line are snapped onto it.
CurvePoint locate(const ScalarField& f, Vec2 world);

struct StepResult {
  CurvePoint point;
  bool slid = false;       ///< moved along an edge where the flows on both sides converge
  bool exited = false;     ///< the next triangle has no values
  std::optional<TriangleRef> through;  ///< triangle crossed to reach the point, if any
};

/// Leaves triangle interior along the (signed) gradient ray.
StepResult step_from_interior(const ScalarField& f, const CurvePoint& p, Direction dir);
/// Crosses from a point on an edge into the triangle `into`.
StepResult step_across_edge(const ScalarField& f, const CurvePoint& p, TriangleRef into, Direction dir);
/// Slides from a point on an edge to the endpoint favoured by the along-edge value change.
StepResult handle_compression(const ScalarField& f, const CurvePoint& p, Direction dir);

struct TraceOptions {
  /// Descent stops at the first crossing of the cage; without a cage it stops at ring level.
  bool stop_at_cage = true;
};

IntegralCurve trace(const ScalarField& f, Vec2 start, Direction dir, const TraceOptions& options = {});
/// Bound on the number of steps of any trace: four per triangle.
int step_limit(const GridDomain& d);

struct IntegralCurveCoordinate {
  bool at_maximum = false;
  int segment = -1;
  double bary = 0.0;
  double t = 0.0;
  bool degenerate = false;  ///< zero total arc length; t reported as 0
  bool collapsed = false;   ///< the descent slid along an edge and shares its exit with other curves
  constexpr bool operator==(const IntegralCurveCoordinate&) const = default;

  static IntegralCurveCoordinate maximum_token() { return {.at_maximum = true, .t = 1.0}; }
};

IntegralCurveCoordinate compute_icc(const ScalarField& f, Vec2 p);

struct InverseResult {
  Vec2 position;
  bool slid_before = false;  ///< the ascent slid along an edge before reaching the target length
};

InverseResult invert_icc_detailed(const ScalarField& f, const IntegralCurveCoordinate& c);
Vec2 invert_icc(const ScalarField& f, const IntegralCurveCoordinate& c);

/// Interior edges whose two adjacent ascent gradients both point away from the edge.
std::vector<GridEdge> find_expansion_edges(const ScalarField& f);
/// Interior edges whose two adjacent ascent gradients both point toward the edge.
std::vector<GridEdge> find_compression_edges(const ScalarField& f);

}  // namespace icc
