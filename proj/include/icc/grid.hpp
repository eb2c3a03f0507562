#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icc/geometry.hpp"

namespace icc {

enum class VertexClass : std::uint8_t { outside = 0, ring = 1, inside = 2 };

struct VertexId {
  int i = 0;
  int j = 0;
  constexpr bool operator==(const VertexId&) const = default;
};

/// Rasterized regular grid around a cage. Cell (i, j) spans vertices (i..i+1, j..j+1) and is
/// split by its lower-left to upper-right diagonal. Immutable once built.
class GridDomain {
 public:
  GridDomain() = default;

  /// Builds a domain from an explicit inside mask over the (nx+1) x (ny+1) vertices. Ring vertices
  /// (8-neighbours of inside vertices) are derived. No ball-like validation is performed.
  static GridDomain from_inside_mask(int nx, int ny, std::span<const std::uint8_t> inside, Vec2 origin = {0, 0},
                                     double spacing = 1.0);

  int cells_x() const { return nx_; }
  int cells_y() const { return ny_; }
  int verts_x() const { return nx_ + 1; }
  int verts_y() const { return ny_ + 1; }
  int vertex_count() const { return verts_x() * verts_y(); }
  int resolution() const { return resolution_; }
  Vec2 origin() const { return origin_; }
  double spacing() const { return spacing_; }

  int index(int i, int j) const { return j * verts_x() + i; }
  int index(VertexId v) const { return index(v.i, v.j); }
  VertexId vertex(int index) const { return {index % verts_x(), index / verts_x()}; }
  bool in_grid(int i, int j) const { return i >= 0 && j >= 0 && i <= nx_ && j <= ny_; }

  VertexClass cls(int index) const { return classes_[static_cast<std::size_t>(index)]; }
  VertexClass cls(int i, int j) const { return in_grid(i, j) ? cls(index(i, j)) : VertexClass::outside; }
  bool is_inside(int i, int j) const { return cls(i, j) == VertexClass::inside; }
  /// Inside or ring: the vertex carries a field value.
  bool has_value(int i, int j) const { return cls(i, j) != VertexClass::outside; }
  std::span<const VertexClass> classes() const { return classes_; }
  int inside_count() const;
  int ring_count() const;

  Vec2 world_to_grid(Vec2 p) const { return (p - origin_) / spacing_; }
  Vec2 grid_to_world(Vec2 g) const { return origin_ + g * spacing_; }
  Vec2 vertex_world(int index) const;

  /// Cage the domain was rasterized from, if any.
  const std::optional<CagePolygon>& cage() const { return cage_; }
  /// Cage vertices in grid coordinates.
  std::span<const Vec2> cage_grid() const { return cage_grid_; }
  /// Cage segments whose bounding box overlaps cell (ci, cj).
  std::span<const int> cage_segments_in_cell(int ci, int cj) const;

  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Reassembles a domain from serialized parts; used by the JSON reader.
  static GridDomain from_parts(int resolution, int nx, int ny, Vec2 origin, double spacing,
                               std::vector<VertexClass> classes, std::optional<CagePolygon> cage);

 private:
  friend GridDomain rasterize(const CagePolygon& cage, int resolution);
  void attach_cage(const CagePolygon& cage);
  void derive_ring();
  /// Promotes `candidate` vertices until the inside vertices are 4-connected, where possible.
  void connect_inside_components(std::span<const std::uint8_t> candidate);

  int resolution_ = 0;
  int nx_ = 0;
  int ny_ = 0;
  Vec2 origin_;
  double spacing_ = 1.0;
  std::vector<VertexClass> classes_;
  std::optional<CagePolygon> cage_;
  std::vector<Vec2> cage_grid_;
  std::vector<int> bucket_offsets_;
  std::vector<int> bucket_items_;
  std::vector<std::string> warnings_;
};

/// Rasterizes `cage` onto a grid with `resolution` cells along its longest axis (one ring cell of
/// margin on each side is included in that count). Throws DegenerateCage or NotBallLike.
GridDomain rasterize(const CagePolygon& cage, int resolution);

/// True iff the inside vertices are 4-connected and their cell complex has Euler characteristic 1.
bool ball_like_check(const GridDomain& domain);

/// Euler characteristic V - E + F of the complex spanned by inside vertices, axis edges and cells.
int inside_euler_characteristic(const GridDomain& domain);

}  // namespace icc
