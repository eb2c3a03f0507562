#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "icc/image.hpp"
#include "icc/tracer.hpp"

namespace icc {

/// Piecewise-linear correspondence between two cages with equal vertex counts: vertex k maps to
/// vertex k and each segment maps linearly onto its partner.
class BoundaryHomeomorphism {
 public:
  BoundaryHomeomorphism(CagePolygon source, CagePolygon target);

  const CagePolygon& source() const { return source_; }
  const CagePolygon& target() const { return target_; }
  BoundaryHomeomorphism inverse() const { return {target_, source_}; }

 private:
  CagePolygon source_;
  CagePolygon target_;
};

struct BoundaryPoint {
  int segment = -1;
  double bary = 0.0;
};

/// Image of (segment, bary) under h. Throws CageMismatch on an unknown segment.
BoundaryPoint map_boundary_point(const BoundaryHomeomorphism& h, int segment, double bary);

enum class PointStatus { ok, collapsed, at_maximum };
const char* to_string(PointStatus s);

struct MappedPoint {
  Vec2 position;
  PointStatus status = PointStatus::ok;
  IntegralCurveCoordinate coord;  ///< source coordinate
};

/// Extends h to the interior by mapping Integral Curve Coordinates from the source field to the
/// target field.
class Deformer {
 public:
  Deformer(std::shared_ptr<const ScalarField> source, std::shared_ptr<const ScalarField> target,
           BoundaryHomeomorphism h);

  MappedPoint map(Vec2 p) const;
  /// Maps an already computed source coordinate.
  MappedPoint map_coordinate(const IntegralCurveCoordinate& c) const;
  /// Maps every point; `threads` = 0 uses all hardware threads.
  std::vector<MappedPoint> map_all(std::span<const Vec2> points, unsigned threads = 1) const;

  /// Target-to-source deformation with h inverted.
  Deformer inverse() const { return {target_, source_, h_.inverse()}; }

  const ScalarField& source() const { return *source_; }
  const ScalarField& target() const { return *target_; }
  const BoundaryHomeomorphism& homeomorphism() const { return h_; }

 private:
  std::shared_ptr<const ScalarField> source_;
  std::shared_ptr<const ScalarField> target_;
  BoundaryHomeomorphism h_;
};

MappedPoint deform_point(const ScalarField& source, const ScalarField& target, const BoundaryHomeomorphism& h,
                         Vec2 p);

/// n x n lattice over the cage bounding box at ((k + 0.5) / n) offsets, with the triangles of the
/// lattice whose three corners all lie inside the cage.
struct SampleGrid {
  int n = 0;
  std::vector<Vec2> points;           ///< all n * n lattice points, row-major from the bottom row
  std::vector<std::uint8_t> inside;   ///< per lattice point
  std::vector<int> inside_points;     ///< indices of inside lattice points
  std::vector<std::array<int, 3>> triangles;  ///< counterclockwise, indices into `points`
};

SampleGrid make_sample_grid(const CagePolygon& cage, int n);

enum class DetSign : signed char { negative = -1, zero = 0, positive = 1 };

struct JacobianReport {
  std::vector<double> determinants;  ///< det of the per-triangle linear map
  std::vector<DetSign> signs;
  int positive = 0;
  int zero = 0;
  int negative = 0;
  double min_det = 0.0;
  double max_det = 0.0;
  bool inverted() const { return negative > 0; }
};

/// Relative band |det M| < kJacobianZeroBand counted as zero (collapsed).
inline constexpr double kJacobianZeroBand = 1e-12;

/// Per-triangle M = [q1 - q0 | q2 - q0] [p1 - p0 | p2 - p0]^-1 and the sign of det M.
/// Throws DegenerateSourceTriangle if a source triangle has zero area.
JacobianReport jacobian_audit(std::span<const Vec2> before, std::span<const Vec2> after,
                              std::span<const std::array<int, 3>> triangles);

struct PointSetDeformation {
  std::vector<MappedPoint> mapped;  ///< one per input point
  int collapsed = 0;
  int at_maximum = 0;
};

PointSetDeformation deform_points(const Deformer& deformer, std::span<const Vec2> points, unsigned threads = 1);

struct SampleGridDeformation {
  SampleGrid grid;
  std::vector<Vec2> mapped;          ///< per lattice point; only inside points are meaningful
  std::vector<PointStatus> status;   ///< per lattice point
  int collapsed = 0;
  JacobianReport jacobian;
  double max_displacement = 0.0;     ///< over inside points
};

SampleGridDeformation deform_sample_grid(const Deformer& deformer, int n, unsigned threads = 1);

struct ImageWarpOptions {
  unsigned threads = 1;
  int width = 0;   ///< output size; 0 copies the input size
  int height = 0;
};

struct ImageWarp {
  Image image;
  int mapped_pixels = 0;
  int collapsed_pixels = 0;
};

/// Backward warp: every output pixel whose centre lies inside the target cage is pulled back through
/// the inverse deformation and bilinearly sampled from `source`. Input pixels span the source cage
/// bounding box and output pixels the target cage bounding box; pixels outside either cage stay
/// transparent.
ImageWarp deform_image(const Deformer& deformer, const Image& source, const ImageWarpOptions& options = {});

/// Colours each output pixel inside the target cage by its pulled-back source position, normalized
/// to the source cage bounding box: u in red, v in green. Collapsed pixels get full blue.
Image uv_map(const Deformer& deformer, int width, int height, unsigned threads = 1);

}  // namespace icc
