// Python bindings: cages, fields, traces, coordinates and deformations.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "icc/deform.hpp"
#include "icc/errors.hpp"
#include "icc/io.hpp"

namespace py = pybind11;
using namespace icc;

namespace {

using Points = std::vector<std::array<double, 2>>;

std::vector<Vec2> to_vec2(const Points& pts) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.emplace_back(p[0], p[1]);
  return out;
}

py::array_t<double> to_array(std::span<const Vec2> pts) {
  py::array_t<double> a({static_cast<py::ssize_t>(pts.size()), py::ssize_t{2}});
  auto m = a.mutable_unchecked<2>();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    m(static_cast<py::ssize_t>(k), 0) = pts[k].x;
    m(static_cast<py::ssize_t>(k), 1) = pts[k].y;
  }
  return a;
}

py::tuple to_tuple(Vec2 p) { return py::make_tuple(p.x, p.y); }

Direction parse_direction(const std::string& s) {
  if (s == "ascent") return Direction::ascent;
  if (s == "descent") return Direction::descent;
  throw py::value_error("direction must be 'ascent' or 'descent'");
}

py::dict coord_to_dict(const IntegralCurveCoordinate& c) {
  py::dict d;
  d["at_maximum"] = c.at_maximum;
  d["segment"] = c.segment;
  d["bary"] = c.bary;
  d["t"] = c.t;
  d["degenerate"] = c.degenerate;
  d["collapsed"] = c.collapsed;
  return d;
}

IntegralCurveCoordinate coord_from_dict(const py::dict& d) {
  IntegralCurveCoordinate c;
  if (d.contains("at_maximum")) c.at_maximum = d["at_maximum"].cast<bool>();
  if (c.at_maximum) return IntegralCurveCoordinate::maximum_token();
  c.segment = d["segment"].cast<int>();
  c.bary = d["bary"].cast<double>();
  c.t = d["t"].cast<double>();
  return c;
}

/// Values on the (verts_y, verts_x) vertex lattice, NaN outside.
py::array_t<double> field_values(const ScalarField& f) {
  const GridDomain& d = *f.domain;
  py::array_t<double> a({d.verts_y(), d.verts_x()});
  std::copy(f.values.begin(), f.values.end(), a.mutable_data());
  return a;
}

py::array_t<std::uint8_t> vertex_classes(const GridDomain& d) {
  py::array_t<std::uint8_t> a({d.verts_y(), d.verts_x()});
  auto* out = a.mutable_data();
  for (int k = 0; k < d.vertex_count(); ++k) out[k] = static_cast<std::uint8_t>(d.cls(k));
  return a;
}

std::shared_ptr<const ScalarField> make_field(const CagePolygon& cage, int resolution, const std::string& method,
                                              double epsilon) {
  py::gil_scoped_release release;
  const SolveOptions options{.epsilon = epsilon};
  return std::make_shared<const ScalarField>(
      build_field(std::make_shared<const GridDomain>(rasterize(cage, resolution)), parse_field_method(method), options));
}

Image image_from_array(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3 || a.shape(2) != 4) throw py::value_error("image must have shape (height, width, 4)");
  Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), img.rgba.begin());
  return img;
}

py::array_t<std::uint8_t> image_to_array(const Image& img) {
  py::array_t<std::uint8_t> a({img.height, img.width, 4});
  std::copy(img.rgba.begin(), img.rgba.end(), a.mutable_data());
  return a;
}

}  // namespace

PYBIND11_MODULE(_pyicc, m) {
  m.doc() = "Integral Curve Coordinates: scalar fields on cages and the deformations they induce";

  static py::exception<Error> base(m, "IccError", PyExc_RuntimeError);
  static py::exception<InvalidCage> invalid_cage(m, "InvalidCage", base.ptr());
  static py::exception<CageMismatch> cage_mismatch(m, "CageMismatch", base.ptr());
  static py::exception<SolverDiverged> solver(m, "SolverDiverged", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidCage& e) {
      PyErr_SetString(invalid_cage.ptr(), e.what());
    } catch (const CageMismatch& e) {
      PyErr_SetString(cage_mismatch.ptr(), e.what());
    } catch (const SolverDiverged& e) {
      PyErr_SetString(solver.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(base.ptr(), e.what());
    }
  });

  py::class_<CagePolygon>(m, "Cage")
      .def(py::init([](const Points& pts) { return CagePolygon(to_vec2(pts)); }), py::arg("vertices"))
      .def_static("from_json", [](const std::string& s) { return cage_from_json(Json::parse(s)); })
      .def("to_json", [](const CagePolygon& c) { return cage_to_json(c).dump(); })
      .def_property_readonly("vertices", [](const CagePolygon& c) { return to_array(c.vertices()); })
      .def_property_readonly("signed_area", &CagePolygon::signed_area)
      .def("contains", [](const CagePolygon& c, double x, double y) { return c.contains({x, y}); })
      .def("point_on_segment", [](const CagePolygon& c, std::size_t k, double b) { return to_tuple(c.point_on_segment(k, b)); })
      .def("__len__", &CagePolygon::size);

  py::class_<ScalarField, std::shared_ptr<ScalarField>>(m, "Field")
      .def(py::init([](const CagePolygon& cage, int resolution, const std::string& method, double epsilon) {
             return std::const_pointer_cast<ScalarField>(make_field(cage, resolution, method, epsilon));
           }),
           py::arg("cage"), py::arg("resolution") = 50, py::arg("method") = "laplace",
           py::arg("epsilon") = kDefaultEpsilon)
      .def_static("from_json", [](const std::string& s) { return std::make_shared<ScalarField>(field_from_json(Json::parse(s))); })
      .def("to_json", [](const ScalarField& f) { return field_to_json(f).dump(); })
      .def_property_readonly("method", [](const ScalarField& f) { return std::string(to_string(f.method)); })
      .def_property_readonly("values", &field_values)
      .def_property_readonly("classes", [](const ScalarField& f) { return vertex_classes(*f.domain); })
      .def_property_readonly("origin", [](const ScalarField& f) { return to_tuple(f.domain->origin()); })
      .def_property_readonly("spacing", [](const ScalarField& f) { return f.domain->spacing(); })
      .def_property_readonly("maximum", [](const ScalarField& f) { return to_tuple(f.maximum_world()); })
      .def("critical_points",
           [](const ScalarField& f) {
             const auto r = audit_critical_points(f);
             py::dict d;
             d["maxima"] = r.maxima;
             d["minima"] = r.minima;
             d["saddles"] = r.saddles;
             d["clean"] = r.clean();
             return d;
           })
      .def(
          "trace",
          [](const ScalarField& f, double x, double y, const std::string& direction) {
            const IntegralCurve c = trace(f, {x, y}, parse_direction(direction));
            std::vector<Vec2> pts;
            for (const auto& p : c.points) pts.push_back(p.position);
            py::dict d;
            d["points"] = to_array(pts);
            d["length"] = c.length();
            d["steps"] = c.steps;
            d["slid"] = c.slid();
            d["reached_cage"] = c.reached_cage;
            d["segment"] = c.cage_segment;
            d["bary"] = c.cage_bary;
            return d;
          },
          py::arg("x"), py::arg("y"), py::arg("direction") = "ascent")
      .def("coordinate", [](const ScalarField& f, double x, double y) { return coord_to_dict(compute_icc(f, {x, y})); })
      .def("invert", [](const ScalarField& f, const py::dict& c) { return to_tuple(invert_icc(f, coord_from_dict(c))); });

  py::class_<Deformer>(m, "Deformer")
      .def(py::init([](const CagePolygon& source, const CagePolygon& target, int resolution, const std::string& method) {
             BoundaryHomeomorphism h(source, target);
             return Deformer(make_field(source, resolution, method, kDefaultEpsilon),
                             make_field(target, resolution, method, kDefaultEpsilon), std::move(h));
           }),
           py::arg("source"), py::arg("target"), py::arg("resolution") = 50, py::arg("method") = "laplace")
      .def("inverse", &Deformer::inverse)
      .def(
          "map",
          [](const Deformer& d, const Points& pts, unsigned threads) {
            const std::vector<Vec2> in = to_vec2(pts);
            std::vector<MappedPoint> out;
            {
              py::gil_scoped_release release;
              out = d.map_all(in, threads);
            }
            std::vector<Vec2> pos;
            std::vector<std::string> status;
            for (const auto& q : out) {
              pos.push_back(q.position);
              status.emplace_back(to_string(q.status));
            }
            return py::make_tuple(to_array(pos), status);
          },
          py::arg("points"), py::arg("threads") = 1)
      .def(
          "sample_grid",
          [](const Deformer& d, int n, unsigned threads) {
            SampleGridDeformation r;
            {
              py::gil_scoped_release release;
              r = deform_sample_grid(d, n, threads);
            }
            std::vector<Vec2> src, dst;
            for (int k : r.grid.inside_points) {
              src.push_back(r.grid.points[static_cast<std::size_t>(k)]);
              dst.push_back(r.mapped[static_cast<std::size_t>(k)]);
            }
            py::dict out;
            out["source"] = to_array(src);
            out["mapped"] = to_array(dst);
            out["collapsed"] = r.collapsed;
            out["max_displacement"] = r.max_displacement;
            out["negative_triangles"] = r.jacobian.negative;
            out["zero_triangles"] = r.jacobian.zero;
            out["positive_triangles"] = r.jacobian.positive;
            return out;
          },
          py::arg("n") = 64, py::arg("threads") = 1)
      .def(
          "warp",
          [](const Deformer& d, const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& image,
             unsigned threads) {
            const Image in = image_from_array(image);
            ImageWarp w;
            {
              py::gil_scoped_release release;
              w = deform_image(d, in, {.threads = threads});
            }
            return image_to_array(w.image);
          },
          py::arg("image"), py::arg("threads") = 1);
}
