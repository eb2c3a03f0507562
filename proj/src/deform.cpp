#include "icc/deform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "icc/errors.hpp"
#include "icc/parallel.hpp"

namespace icc {

BoundaryHomeomorphism::BoundaryHomeomorphism(CagePolygon source, CagePolygon target)
    : source_(std::move(source)), target_(std::move(target)) {
  if (source_.size() != target_.size())
    throw CageMismatch("source cage has " + std::to_string(source_.size()) + " vertices but target has " +
                       std::to_string(target_.size()));
}

BoundaryPoint map_boundary_point(const BoundaryHomeomorphism& h, int segment, double bary) {
  if (segment < 0 || static_cast<std::size_t>(segment) >= h.source().size())
    throw CageMismatch("segment " + std::to_string(segment) + " does not exist on the source cage");
  return {segment, bary};
}

const char* to_string(PointStatus s) {
  switch (s) {
    case PointStatus::ok: return "ok";
    case PointStatus::collapsed: return "collapsed";
    case PointStatus::at_maximum: return "at_maximum";
  }
  return "ok";
}

Deformer::Deformer(std::shared_ptr<const ScalarField> source, std::shared_ptr<const ScalarField> target,
                   BoundaryHomeomorphism h)
    : source_(std::move(source)), target_(std::move(target)), h_(std::move(h)) {
  const auto& sc = source_->domain->cage();
  const auto& tc = target_->domain->cage();
  if (!sc || !tc) throw CageMismatch("both fields must be built on cage domains");
  if (sc->size() != h_.source().size() || tc->size() != h_.target().size())
    throw CageMismatch("field cages do not match the boundary homeomorphism");
}

MappedPoint Deformer::map(Vec2 p) const { return map_coordinate(compute_icc(*source_, p)); }

MappedPoint Deformer::map_coordinate(const IntegralCurveCoordinate& c) const {
  MappedPoint out;
  out.coord = c;
  if (c.at_maximum) {
    out.position = target_->maximum_world();
    out.status = PointStatus::at_maximum;
    return out;
  }
  const BoundaryPoint b = map_boundary_point(h_, c.segment, c.bary);
  IntegralCurveCoordinate tc = c;
  tc.segment = b.segment;
  tc.bary = b.bary;
  const InverseResult inv = invert_icc_detailed(*target_, tc);
  out.position = inv.position;
  out.status = (c.collapsed || inv.slid_before) ? PointStatus::collapsed : PointStatus::ok;
  return out;
}

std::vector<MappedPoint> Deformer::map_all(std::span<const Vec2> points, unsigned threads) const {
  std::vector<MappedPoint> out(points.size());
  parallel_for(points.size(), threads, [&](std::size_t k) { out[k] = map(points[k]); });
  return out;
}

MappedPoint deform_point(const ScalarField& source, const ScalarField& target, const BoundaryHomeomorphism& h,
                         Vec2 p) {
  // Non-owning views; the deformer does not outlive this call.
  const Deformer d(std::shared_ptr<const ScalarField>(&source, [](const ScalarField*) {}),
                   std::shared_ptr<const ScalarField>(&target, [](const ScalarField*) {}), h);
  return d.map(p);
}

SampleGrid make_sample_grid(const CagePolygon& cage, int n) {
  if (n < 2) throw InvalidCage("sample grid needs n >= 2");
  SampleGrid g;
  g.n = n;
  const Vec2 lo = cage.bbox_min(), hi = cage.bbox_max();
  g.points.reserve(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      g.points.emplace_back(lo.x + (c + 0.5) / n * (hi.x - lo.x), lo.y + (r + 0.5) / n * (hi.y - lo.y));
  g.inside.resize(g.points.size());
  for (std::size_t k = 0; k < g.points.size(); ++k) {
    g.inside[k] = cage.contains(g.points[k]) ? 1 : 0;
    if (g.inside[k]) g.inside_points.push_back(static_cast<int>(k));
  }
  auto id = [n](int r, int c) { return r * n + c; };
  for (int r = 0; r + 1 < n; ++r)
    for (int c = 0; c + 1 < n; ++c) {
      const int a = id(r, c), b = id(r, c + 1), cc = id(r + 1, c + 1), d = id(r + 1, c);
      const auto in = [&](int k) { return g.inside[static_cast<std::size_t>(k)] != 0; };
      if (in(a) && in(b) && in(cc)) g.triangles.push_back({a, b, cc});
      if (in(a) && in(cc) && in(d)) g.triangles.push_back({a, cc, d});
    }
  return g;
}

JacobianReport jacobian_audit(std::span<const Vec2> before, std::span<const Vec2> after,
                              std::span<const std::array<int, 3>> triangles) {
  if (before.size() != after.size()) throw CageMismatch("point sets differ in size");
  JacobianReport r;
  r.determinants.reserve(triangles.size());
  r.signs.reserve(triangles.size());
  r.min_det = std::numeric_limits<double>::infinity();
  r.max_det = -std::numeric_limits<double>::infinity();
  for (const auto& t : triangles) {
    const Vec2 p0 = before[static_cast<std::size_t>(t[0])], p1 = before[static_cast<std::size_t>(t[1])],
               p2 = before[static_cast<std::size_t>(t[2])];
    const Vec2 q0 = after[static_cast<std::size_t>(t[0])], q1 = after[static_cast<std::size_t>(t[1])],
               q2 = after[static_cast<std::size_t>(t[2])];
    const double src = cross(p1 - p0, p2 - p0);
    if (!(std::abs(src) > 1e-14 * norm(p1 - p0) * norm(p2 - p0)))
      throw DegenerateSourceTriangle("sampling triangle has zero area");
    // det(A' A^-1) = det A' / det A.
    const double det = cross(q1 - q0, q2 - q0) / src;
    DetSign s = DetSign::zero;
    if (det >= kJacobianZeroBand) s = DetSign::positive;
    else if (det <= -kJacobianZeroBand) s = DetSign::negative;
    switch (s) {
      case DetSign::positive: ++r.positive; break;
      case DetSign::zero: ++r.zero; break;
      case DetSign::negative: ++r.negative; break;
    }
    r.determinants.push_back(det);
    r.signs.push_back(s);
    r.min_det = std::min(r.min_det, det);
    r.max_det = std::max(r.max_det, det);
  }
  if (triangles.empty()) r.min_det = r.max_det = 0.0;
  return r;
}

PointSetDeformation deform_points(const Deformer& deformer, std::span<const Vec2> points, unsigned threads) {
  PointSetDeformation out;
  out.mapped = deformer.map_all(points, threads);
  for (const auto& m : out.mapped) {
    out.collapsed += m.status == PointStatus::collapsed;
    out.at_maximum += m.status == PointStatus::at_maximum;
  }
  return out;
}

SampleGridDeformation deform_sample_grid(const Deformer& deformer, int n, unsigned threads) {
  SampleGridDeformation out;
  out.grid = make_sample_grid(deformer.homeomorphism().source(), n);
  out.mapped = out.grid.points;
  out.status.assign(out.grid.points.size(), PointStatus::ok);
  const auto& ids = out.grid.inside_points;
  std::vector<MappedPoint> mapped(ids.size());
  parallel_for(ids.size(), threads, [&](std::size_t k) {
    mapped[k] = deformer.map(out.grid.points[static_cast<std::size_t>(ids[k])]);
  });
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto idx = static_cast<std::size_t>(ids[k]);
    out.mapped[idx] = mapped[k].position;
    out.status[idx] = mapped[k].status;
    out.collapsed += mapped[k].status == PointStatus::collapsed;
    out.max_displacement = std::max(out.max_displacement, distance(out.grid.points[idx], mapped[k].position));
  }
  out.jacobian = jacobian_audit(out.grid.points, out.mapped, out.grid.triangles);
  return out;
}

ImageWarp deform_image(const Deformer& deformer, const Image& source, const ImageWarpOptions& options) {
  if (source.width <= 0 || source.height <= 0) throw ParseError("source image is empty");
  const Deformer back = deformer.inverse();
  const CagePolygon& src_cage = deformer.homeomorphism().source();
  const CagePolygon& dst_cage = deformer.homeomorphism().target();
  const Vec2 slo = src_cage.bbox_min(), shi = src_cage.bbox_max();
  const Vec2 tlo = dst_cage.bbox_min(), thi = dst_cage.bbox_max();

  ImageWarp out;
  const int w = options.width > 0 ? options.width : source.width;
  const int h = options.height > 0 ? options.height : source.height;
  out.image = Image(w, h);
  std::vector<std::uint8_t> state(static_cast<std::size_t>(w) * h, 0);  // 1 mapped, 2 collapsed

  parallel_for(static_cast<std::size_t>(h), options.threads, [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      const Vec2 p(tlo.x + (x + 0.5) / w * (thi.x - tlo.x), thi.y - (y + 0.5) / h * (thi.y - tlo.y));
      if (!dst_cage.contains(p)) continue;
      const MappedPoint m = back.map(p);
      const double sx = (m.position.x - slo.x) / (shi.x - slo.x) * source.width;
      const double sy = (shi.y - m.position.y) / (shi.y - slo.y) * source.height;
      const auto c = source.sample(sx, sy);
      std::uint8_t* px = out.image.pixel(x, y);
      for (int k = 0; k < 4; ++k) px[k] = static_cast<std::uint8_t>(std::lround(std::clamp(c[static_cast<std::size_t>(k)], 0.0, 255.0)));
      state[static_cast<std::size_t>(y) * w + x] = m.status == PointStatus::collapsed ? 2 : 1;
    }
  });
  for (auto s : state) {
    out.mapped_pixels += s != 0;
    out.collapsed_pixels += s == 2;
  }
  return out;
}

Image uv_map(const Deformer& deformer, int width, int height, unsigned threads) {
  if (width <= 0 || height <= 0) throw ParseError("uv map size must be positive");
  const Deformer back = deformer.inverse();
  const CagePolygon& src_cage = deformer.homeomorphism().source();
  const CagePolygon& dst_cage = deformer.homeomorphism().target();
  const Vec2 slo = src_cage.bbox_min(), shi = src_cage.bbox_max();
  const Vec2 tlo = dst_cage.bbox_min(), thi = dst_cage.bbox_max();
  Image out(width, height);
  auto channel = [](double u) { return static_cast<std::uint8_t>(std::lround(std::clamp(u, 0.0, 1.0) * 255.0)); };
  parallel_for(static_cast<std::size_t>(height), threads, [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < width; ++x) {
      const Vec2 p(tlo.x + (x + 0.5) / width * (thi.x - tlo.x), thi.y - (y + 0.5) / height * (thi.y - tlo.y));
      if (!dst_cage.contains(p)) continue;
      const MappedPoint m = back.map(p);
      std::uint8_t* px = out.pixel(x, y);
      px[0] = channel((m.position.x - slo.x) / (shi.x - slo.x));
      px[1] = channel((m.position.y - slo.y) / (shi.y - slo.y));
      px[2] = m.status == PointStatus::collapsed ? 255 : 0;
      px[3] = 255;
    }
  });
  return out;
}

}  // namespace icc
