#include "icc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "icc/errors.hpp"

namespace icc {
namespace {

class Canvas {
 public:
  Canvas(const GridDomain& d, int width) : d_(d) {
    lo_ = d.origin();
    const double w = d.cells_x() * d.spacing(), h = d.cells_y() * d.spacing();
    scale_ = width / w;
    width_ = width;
    height_ = static_cast<int>(std::ceil(h * scale_));
    top_ = lo_.y + h;
  }

  int width() const { return width_; }
  int height() const { return height_; }

  std::string pt(Vec2 world) const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f,%.2f", (world.x - lo_.x) * scale_, (top_ - world.y) * scale_);
    return buf;
  }
  std::string grid_pt(int i, int j) const { return pt(d_.grid_to_world(Vec2(i, j))); }

 private:
  const GridDomain& d_;
  Vec2 lo_;
  double top_ = 0.0;
  double scale_ = 1.0;
  int width_ = 0;
  int height_ = 0;
};

void polyline(std::string& out, const Canvas& c, std::span<const CurvePoint> pts, const char* style) {
  if (pts.size() < 2) return;
  out += "<polyline points=\"";
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (k) out += ' ';
    out += c.pt(pts[k].position);
  }
  out += "\" " + std::string(style) + "/>\n";
}

void edge_lines(std::string& out, const Canvas& c, std::span<const GridEdge> edges, const char* style) {
  out += "<g " + std::string(style) + ">\n";
  for (const auto& e : edges) {
    const auto [a, b] = e.endpoints();
    out += "<polyline points=\"" + c.grid_pt(a.i, a.j) + " " + c.grid_pt(b.i, b.j) + "\"/>\n";
  }
  out += "</g>\n";
}

}  // namespace

std::vector<IntegralCurve> boundary_ascents(const ScalarField& f, int count) {
  std::vector<IntegralCurve> out;
  const auto& cage = f.domain->cage();
  if (!cage || count <= 0) return out;
  std::vector<double> cum{0.0};
  for (std::size_t k = 0; k < cage->size(); ++k)
    cum.push_back(cum.back() + distance(cage->segment_start(k), cage->segment_end(k)));
  for (int s = 0; s < count; ++s) {
    const double at = (s + 0.5) / count * cum.back();
    const auto seg = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), at) - cum.begin() - 1);
    const double bary = (at - cum[seg]) / (cum[seg + 1] - cum[seg]);
    try {
      out.push_back(trace(f, cage->point_on_segment(seg, bary), Direction::ascent));
    } catch (const Error&) {
    }
  }
  return out;
}

std::string render_svg(const ScalarField& f, const SvgOptions& options, std::span<const IntegralCurve> extra_curves,
                       std::span<const SvgMarker> markers) {
  const GridDomain& d = *f.domain;
  const Canvas c(d, std::max(64, options.width));
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(c.width()) + "\" height=\"" +
         std::to_string(c.height()) + "\" viewBox=\"0 0 " + std::to_string(c.width()) + " " +
         std::to_string(c.height()) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  if (options.field) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : f.values)
      if (!std::isnan(v)) lo = std::min(lo, v), hi = std::max(hi, v);
    const double span = hi > lo ? hi - lo : 1.0;
    out += "<g id=\"field\" stroke=\"none\">\n";
    for (int cj = 0; cj < d.cells_y(); ++cj)
      for (int ci = 0; ci < d.cells_x(); ++ci)
        for (Half h : {Half::lower, Half::upper}) {
          const TriangleRef t{ci, cj, h};
          if (!triangle_has_values(f, t)) continue;
          const auto vs = triangle_vertices(t);
          double mean = 0.0;
          for (const auto& v : vs) mean += f.value(v.i, v.j);
          const int g = static_cast<int>(std::lround(40 + 200 * ((mean / 3 - lo) / span)));
          char fill[16];
          std::snprintf(fill, sizeof fill, "#%02x%02x%02x", g, g, g);
          out += "<polygon points=\"" + c.grid_pt(vs[0].i, vs[0].j) + " " + c.grid_pt(vs[1].i, vs[1].j) + " " +
                 c.grid_pt(vs[2].i, vs[2].j) + "\" fill=\"" + fill + "\"/>\n";
        }
    out += "</g>\n";
  }

  if (options.tree && f.tree) {
    out += "<g id=\"tree\" stroke=\"#2a7f3f\" stroke-width=\"1\" fill=\"none\">\n";
    for (auto [p, ch] : f.tree->edges) {
      const VertexId a = d.vertex(p), b = d.vertex(ch);
      out += "<polyline points=\"" + c.grid_pt(a.i, a.j) + " " + c.grid_pt(b.i, b.j) + "\"/>\n";
    }
    out += "</g>\n";
  }

  if (options.curves > 0) {
    out += "<g id=\"curves\">\n";
    for (const auto& curve : boundary_ascents(f, options.curves))
      polyline(out, c, curve.points, "fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1\"");
    out += "</g>\n";
  }
  if (options.compression) {
    const auto edges = find_compression_edges(f);
    edge_lines(out, c, edges, "id=\"compression\" stroke=\"#e07b00\" stroke-width=\"2.5\" fill=\"none\"");
  }
  if (options.expansion) {
    const auto edges = find_expansion_edges(f);
    edge_lines(out, c, edges, "id=\"expansion\" stroke=\"#8e24aa\" stroke-width=\"2.5\" fill=\"none\"");
  }

  if (d.cage()) {
    out += "<polygon id=\"cage\" points=\"";
    for (std::size_t k = 0; k < d.cage()->size(); ++k) {
      if (k) out += ' ';
      out += c.pt((*d.cage())[k]);
    }
    out += "\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  }

  if (!extra_curves.empty()) {
    out += "<g id=\"traced\">\n";
    for (const auto& curve : extra_curves)
      polyline(out, c, curve.points,
               curve.direction == Direction::ascent ? "fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\""
                                                    : "fill=\"none\" stroke=\"#ff9896\" stroke-width=\"2\"");
    out += "</g>\n";
  }
  if (!markers.empty()) {
    out += "<g id=\"markers\">\n";
    for (const auto& m : markers) {
      const std::string p = c.pt(m.position);
      const auto comma = p.find(',');
      out += "<circle cx=\"" + p.substr(0, comma) + "\" cy=\"" + p.substr(comma + 1) + "\" r=\"1.8\" fill=\"" +
             (m.highlighted ? "#d62728" : "#1f5fbf") + "\"/>\n";
    }
    out += "</g>\n";
  }

  if (f.maximum >= 0) {
    const std::string p = c.pt(f.maximum_world());
    const auto comma = p.find(',');
    out += "<circle id=\"maximum\" cx=\"" + p.substr(0, comma) + "\" cy=\"" + p.substr(comma + 1) +
           "\" r=\"4\" fill=\"#d62728\" stroke=\"white\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace icc
