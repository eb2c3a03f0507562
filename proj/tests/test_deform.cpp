#include <cmath>
#include <filesystem>
#include <random>

#include "cages.hpp"
#include "doctest.h"
#include "icc/deform.hpp"
#include "icc/errors.hpp"

using namespace icc;

namespace {

const CagePolygon kSquare({{0, 0}, {1, 0}, {1, 1}, {0, 1}});

double signed_area(Vec2 a, Vec2 b, Vec2 c) { return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)); }

Deformer make_deformer(const CagePolygon& src, const CagePolygon& dst, int res, FieldMethod m) {
  return Deformer(testing::field_for(src, res, m), testing::field_for(dst, res, m), BoundaryHomeomorphism(src, dst));
}

}  // namespace

TEST_CASE("boundary homeomorphism") {
  const CagePolygon tri({{0, 0}, {1, 0}, {0, 1}});
  CHECK_THROWS_AS(BoundaryHomeomorphism(kSquare, tri), CageMismatch);
  const BoundaryHomeomorphism h(kSquare, kSquare.transformed(2.0, 0.0, {0, 0}));
  const auto b = map_boundary_point(h, 2, 0.25);
  CHECK(b.segment == 2);
  CHECK(b.bary == 0.25);
  CHECK_THROWS_AS(map_boundary_point(h, 4, 0.5), CageMismatch);
  CHECK(h.inverse().target().signed_area() == doctest::Approx(1.0));
}

TEST_CASE("sample grid lattice and triangles") {
  for (const auto& name : testing::cage_names()) {
    const CagePolygon cage = testing::load_cage(name);
    const int n = 33;
    const SampleGrid g = make_sample_grid(cage, n);
    REQUIRE(g.points.size() == static_cast<std::size_t>(n * n));
    const Vec2 lo = cage.bbox_min(), hi = cage.bbox_max();
    int inside = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t k = static_cast<std::size_t>(j * n + i);
        CHECK(g.points[k].x == doctest::Approx(lo.x + (i + 0.5) / n * (hi.x - lo.x)));
        CHECK(g.points[k].y == doctest::Approx(lo.y + (j + 0.5) / n * (hi.y - lo.y)));
        CHECK(static_cast<bool>(g.inside[k]) == cage.contains(g.points[k]));
        inside += g.inside[k];
      }
    CHECK(static_cast<int>(g.inside_points.size()) == inside);
    // Two triangles per lattice square whose relevant corners are all inside.
    int expected = 0;
    for (int j = 0; j + 1 < n; ++j)
      for (int i = 0; i + 1 < n; ++i) {
        auto in = [&](int a, int b) { return g.inside[static_cast<std::size_t>(b * n + a)] != 0; };
        expected += in(i, j) && in(i + 1, j) && in(i + 1, j + 1);
        expected += in(i, j) && in(i + 1, j + 1) && in(i, j + 1);
      }
    CHECK(static_cast<int>(g.triangles.size()) == expected);
    for (const auto& t : g.triangles) {
      CHECK(signed_area(g.points[static_cast<std::size_t>(t[0])], g.points[static_cast<std::size_t>(t[1])],
                        g.points[static_cast<std::size_t>(t[2])]) > 0);
      for (int v : t) CHECK(g.inside[static_cast<std::size_t>(v)]);
    }
  }
}

TEST_CASE("jacobian audit against signed-area ratios") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  const SampleGrid g = make_sample_grid(testing::load_cage("star"), 20);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng), tx = u(rng), ty = u(rng);
    std::vector<Vec2> q;
    for (const Vec2& p : g.points) q.emplace_back(a * p.x + b * p.y + tx, c * p.x + d * p.y + ty);
    const auto r = jacobian_audit(g.points, q, g.triangles);
    REQUIRE(r.determinants.size() == g.triangles.size());
    for (std::size_t k = 0; k < g.triangles.size(); ++k) {
      const auto& t = g.triangles[k];
      const double ratio = signed_area(q[static_cast<std::size_t>(t[0])], q[static_cast<std::size_t>(t[1])], q[static_cast<std::size_t>(t[2])]) /
                           signed_area(g.points[static_cast<std::size_t>(t[0])], g.points[static_cast<std::size_t>(t[1])], g.points[static_cast<std::size_t>(t[2])]);
      CHECK(r.determinants[k] == doctest::Approx(ratio).epsilon(1e-9));
      CHECK(r.determinants[k] == doctest::Approx(a * d - b * c).epsilon(1e-9));
    }
    const bool flipped = a * d - b * c < 0;
    CHECK(r.inverted() == flipped);
    CHECK((flipped ? r.negative : r.positive) == static_cast<int>(g.triangles.size()));
  }
  // A map onto a line collapses every triangle.
  std::vector<Vec2> line;
  for (const Vec2& p : g.points) line.emplace_back(p.x + p.y, 2 * (p.x + p.y));
  const auto flat = jacobian_audit(g.points, line, g.triangles);
  CHECK(flat.zero == static_cast<int>(g.triangles.size()));
  CHECK_FALSE(flat.inverted());
  // A zero-area source triangle is rejected.
  const std::vector<Vec2> bad{{0, 0}, {1, 1}, {2, 2}};
  const std::vector<std::array<int, 3>> tri{{0, 1, 2}};
  CHECK_THROWS_AS(jacobian_audit(bad, bad, tri), DegenerateSourceTriangle);
}

TEST_CASE("identity deformation of the square fixes every sample") {
  for (FieldMethod m : {FieldMethod::l1, FieldMethod::laplace_constrained, FieldMethod::bilaplace_constrained}) {
    const auto f = testing::field_for(kSquare, 40, m);
    const Deformer id(f, f, BoundaryHomeomorphism(kSquare, kSquare));
    const auto r = deform_sample_grid(id, 48);
    CAPTURE(to_string(m));
    CHECK(r.max_displacement < 1e-9);
    CHECK(r.jacobian.negative == 0);
    // Samples on the grid diagonal x = y ride a chain of diagonal edges where neighbouring flows
    // converge, so they are the only collapsed ones.
    for (int k : r.grid.inside_points) {
      const Vec2 p = r.grid.points[static_cast<std::size_t>(k)];
      CHECK((r.status[static_cast<std::size_t>(k)] == PointStatus::collapsed) == (p.x == p.y));
    }
    CHECK(id.map(f->maximum_world()).status == PointStatus::at_maximum);
  }
}

TEST_CASE("mapped points land inside the target cage and boundary points follow h") {
  const CagePolygon src = testing::load_cage("u_shape");
  CagePolygon dst = src;
  {
    std::vector<Vec2> v(src.vertices().begin(), src.vertices().end());
    for (auto& p : v) p = Vec2(p.x + 0.15 * p.y, p.y * 1.1);
    dst = CagePolygon(v);
  }
  const Deformer def = make_deformer(src, dst, 40, FieldMethod::laplace_constrained);
  const auto r = deform_sample_grid(def, 40, 2);
  for (int k : r.grid.inside_points) {
    const Vec2 q = r.mapped[static_cast<std::size_t>(k)];
    CHECK(dst.contains(q));
  }
  for (std::size_t s = 0; s < src.size(); ++s)
    for (double b : {0.0, 0.3, 0.7}) {
      const MappedPoint m = def.map(src.point_on_segment(s, b));
      const Vec2 want = dst.point_on_segment(s, b);
      CHECK(std::hypot(m.position.x - want.x, m.position.y - want.y) < 1e-9);
    }
  // Multithreaded mapping is identical to the serial result.
  const auto serial = deform_sample_grid(def, 40, 1);
  CHECK(serial.mapped == r.mapped);
  CHECK(serial.collapsed == r.collapsed);
}

TEST_CASE("round trip through the inverse deformation") {
  const CagePolygon dst({{0, 0}, {1.4, 0.1}, {1.1, 1.2}, {0.2, 0.9}});
  const Deformer fwd = make_deformer(kSquare, dst, 40, FieldMethod::laplace_constrained);
  const Deformer back = fwd.inverse();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  int clean = 0, closed = 0;
  for (int k = 0; k < 300; ++k) {
    const Vec2 p(u(rng), u(rng));
    const MappedPoint q = fwd.map(p);
    if (q.status != PointStatus::ok) continue;
    const MappedPoint r = back.map(q.position);
    if (r.status != PointStatus::ok) continue;
    ++clean;
    closed += std::hypot(r.position.x - p.x, r.position.y - p.y) < 1e-6;
  }
  CHECK(clean > 100);
  CHECK(closed == clean);
}

TEST_CASE("descents into a cage corner round-trip or are marked collapsed") {
  // Samples on the grid anti-diagonal descend exactly into the corner (0, 1).
  const CagePolygon dst({{0, 0}, {1.4, 0}, {1.4, 0.8}, {0, 0.8}});
  const Deformer fwd = make_deformer(kSquare, dst, 50, FieldMethod::laplace_constrained);
  const Deformer back = fwd.inverse();
  int corner = 0;
  for (int k = 0; k < 32; ++k) {
    const double x = (k + 0.5) / 64;
    const Vec2 p(x, 1.0 - x);
    const MappedPoint q = fwd.map(p);
    corner += q.coord.segment == 2 && q.coord.bary == 1.0;
    if (q.status != PointStatus::ok) continue;
    const MappedPoint r = back.map(q.position);
    if (r.status != PointStatus::ok) continue;
    CAPTURE(p.x);
    CHECK(std::hypot(r.position.x - p.x, r.position.y - p.y) < 1e-6);
  }
  CHECK(corner > 0);
}

TEST_CASE("identity image warp reproduces the input") {
  const auto f = testing::field_for(kSquare, 30, FieldMethod::laplace_constrained);
  const Deformer id(f, f, BoundaryHomeomorphism(kSquare, kSquare));
  const Image in = checkerboard(64, 64, 8);
  const ImageWarp w = deform_image(id, in, {.threads = 2});
  CHECK(w.image.width == 64);
  CHECK(w.image.height == 64);
  CHECK(w.mapped_pixels == 64 * 64);
  CHECK(w.collapsed_pixels == 64);
  int max_diff = 0;
  for (std::size_t k = 0; k < in.rgba.size(); ++k)
    max_diff = std::max(max_diff, std::abs(static_cast<int>(in.rgba[k]) - static_cast<int>(w.image.rgba[k])));
  CHECK(max_diff <= 1);

  const Image uv = uv_map(id, 32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const std::uint8_t* p = uv.pixel(x, y);
      CHECK(std::abs(p[0] - (x + 0.5) / 32 * 255) <= 1.0);
      CHECK(std::abs(p[1] - (1.0 - (y + 0.5) / 32) * 255) <= 1.0);
      CHECK(p[2] == (x == 31 - y ? 255 : 0));
      CHECK(p[3] == 255);
    }
}

TEST_CASE("pixels outside the target cage stay transparent") {
  const CagePolygon tri({{0, 0}, {1, 0}, {0, 1}});
  const auto f = testing::field_for(tri, 30, FieldMethod::l1);
  const Deformer id(f, f, BoundaryHomeomorphism(tri, tri));
  const ImageWarp w = deform_image(id, checkerboard(40, 40, 4));
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) {
      const Vec2 c((x + 0.5) / 40, 1.0 - (y + 0.5) / 40);
      if (!tri.contains(c)) CHECK(w.image.pixel(x, y)[3] == 0);
      else CHECK(w.image.pixel(x, y)[3] == 255);
    }
}

TEST_CASE("PNG round trip") {
  Image img(7, 5);
  for (std::size_t k = 0; k < img.rgba.size(); ++k) img.rgba[k] = static_cast<std::uint8_t>(k * 37 % 256);
  const auto path = (std::filesystem::temp_directory_path() / "icc_png_roundtrip.png").string();
  write_png(img, path);
  const Image back = read_png(path);
  std::filesystem::remove(path);
  CHECK(back.width == 7);
  CHECK(back.height == 5);
  CHECK(back.rgba == img.rgba);
  CHECK_FALSE(encode_png(img).empty());
  CHECK_THROWS(read_png("/nonexistent/icc.png"));
}

TEST_CASE("bilinear sampling") {
  Image img(2, 1);
  img.pixel(0, 0)[0] = 0;
  img.pixel(1, 0)[0] = 200;
  CHECK(img.sample(1.0, 0.5)[0] == doctest::Approx(100));
  CHECK(img.sample(0.5, 0.5)[0] == doctest::Approx(0));
  CHECK(img.sample(-5, 0.5)[0] == doctest::Approx(0));
  CHECK(img.sample(9, 0.5)[0] == doctest::Approx(200));
}
