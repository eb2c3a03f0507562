#include "icc/cli.hpp"

#include <chrono>
#include <csignal>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "icc/errors.hpp"
#include "icc/io.hpp"
#include "icc/service.hpp"
#include "icc/svg.hpp"

namespace icc {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void emit(std::ostream& out, const std::string& path, const Json& j) {
  if (path.empty()) out << j.dump(2) << "\n";
  else write_json_file(path, j);
}

std::shared_ptr<const ScalarField> load_field(const std::string& path) {
  return std::make_shared<const ScalarField>(field_from_json(read_json_file(path)));
}

std::shared_ptr<const ScalarField> build_from_cage(const CagePolygon& cage, int resolution, FieldMethod method,
                                                   const SolveOptions& options = {}) {
  auto domain = std::make_shared<const GridDomain>(rasterize(cage, resolution));
  return std::make_shared<const ScalarField>(build_field(domain, method, options));
}

Json point_json(Vec2 p) { return Json::array({p.x, p.y}); }

std::vector<Vec2> pairs(const std::vector<double>& flat) {
  std::vector<Vec2> out;
  for (std::size_t k = 0; k + 1 < flat.size(); k += 2) out.emplace_back(flat[k], flat[k + 1]);
  return out;
}

struct CommonField {
  std::string function = "laplace";
  int resolution = 50;
};

void add_field_options(CLI::App* cmd, CommonField& c) {
  cmd->add_option("--function", c.function, "Field method: l1, laplace, bilaplace or laplace-u")
      ->capture_default_str();
  cmd->add_option("--resolution", c.resolution, "Grid cells along the longest axis")->capture_default_str();
}

HttpServer* g_server = nullptr;

extern "C" void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Integral-curve-coordinate cage deformation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // build
  auto* build = app.add_subcommand("build", "Rasterize a cage and build its scalar field");
  std::string build_cage, build_out;
  CommonField build_common;
  double epsilon = kDefaultEpsilon;
  build->add_option("--cage", build_cage, "Cage JSON file")->required();
  add_field_options(build, build_common);
  build->add_option("--epsilon", epsilon, "Tree inequality margin")->capture_default_str();
  build->add_option("--out", build_out, "Field JSON output (stdout if omitted)");

  // trace
  auto* trace_cmd = app.add_subcommand("trace", "Trace integral curves through points");
  std::string trace_field, trace_out, trace_dir = "both";
  std::vector<double> trace_points;
  trace_cmd->add_option("--field", trace_field, "Field JSON file")->required();
  trace_cmd->add_option("--point", trace_points, "Start point x y (repeatable)")->required()->expected(2, -1);
  trace_cmd->add_option("--direction", trace_dir, "ascent, descent or both")
      ->check(CLI::IsMember({"ascent", "descent", "both"}))
      ->capture_default_str();
  trace_cmd->add_option("--out", trace_out, "Curves JSON output");

  // coords
  auto* coords = app.add_subcommand("coords", "Integral curve coordinates of points, or points of coordinates");
  std::string coords_field, coords_out;
  std::vector<double> coords_points, coords_icc;
  coords->add_option("--field", coords_field, "Field JSON file")->required();
  auto* coords_point_opt =
      coords->add_option("--point", coords_points, "Point x y (repeatable)")->expected(2, -1);
  auto* coords_icc_opt =
      coords->add_option("--icc", coords_icc, "Coordinate: segment bary t (repeatable)")->expected(3, -1);
  coords_point_opt->excludes(coords_icc_opt);
  coords->add_option("--out", coords_out, "JSON output");

  // deform
  auto* deform = app.add_subcommand("deform", "Deform an image and a sample grid from one cage to another");
  std::string src_cage, dst_cage, image_in, image_out, uv_out, report_out;
  CommonField deform_common;
  int samples = 64, checker = 8, out_w = 0, out_h = 0;
  unsigned threads = 1;
  deform->add_option("--src-cage", src_cage, "Source cage JSON")->required();
  deform->add_option("--dst-cage", dst_cage, "Target cage JSON")->required();
  add_field_options(deform, deform_common);
  deform->add_option("--image", image_in, "Source PNG (a checkerboard is used if omitted)");
  deform->add_option("--checker", checker, "Checkerboard squares when no image is given")->capture_default_str();
  deform->add_option("--out", image_out, "Warped PNG output");
  deform->add_option("--width", out_w, "Output width (default: input width)");
  deform->add_option("--height", out_h, "Output height (default: input height)");
  deform->add_option("--uv", uv_out, "uv-map PNG output");
  deform->add_option("--report", report_out, "Report JSON output (stdout if omitted)");
  deform->add_option("--samples", samples, "Sample grid density n (n x n)")->capture_default_str();
  deform->add_option("--threads", threads, "Worker threads, 0 for all")->capture_default_str();

  // audit
  auto* audit = app.add_subcommand("audit", "Audit a field (critical points, tree) or a deformation (Jacobians)");
  std::string audit_field, audit_src, audit_dst, audit_out;
  CommonField audit_common;
  int audit_samples = 64, connectivity = 8;
  audit->add_option("--field", audit_field, "Field JSON file");
  audit->add_option("--src-cage", audit_src, "Source cage JSON");
  audit->add_option("--dst-cage", audit_dst, "Target cage JSON");
  add_field_options(audit, audit_common);
  audit->add_option("--samples", audit_samples, "Sample grid density for the Jacobian audit")->capture_default_str();
  audit->add_option("--connectivity", connectivity, "Neighbourhood for critical points: 4, 6 or 8")
      ->check(CLI::IsMember({4, 6, 8}))
      ->capture_default_str();
  audit->add_option("--out", audit_out, "Report JSON output");

  // viz
  auto* viz = app.add_subcommand("viz", "Render a field, its curves and overlays to SVG");
  std::string viz_field, viz_out;
  SvgOptions svg;
  bool no_expansion = false, no_field = false;
  std::vector<double> viz_points;
  viz->add_option("--field", viz_field, "Field JSON file")->required();
  viz->add_option("--out", viz_out, "SVG output")->required();
  viz->add_option("--width", svg.width, "Image width in pixels")->capture_default_str();
  viz->add_option("--curves", svg.curves, "Ascents drawn from evenly spaced cage points")->capture_default_str();
  viz->add_flag("--tree", svg.tree, "Draw the cousin tree");
  viz->add_flag("--compression", svg.compression, "Draw compression edges");
  viz->add_flag("--no-expansion", no_expansion, "Hide expansion edges");
  viz->add_flag("--no-field", no_field, "Hide the field shading");
  viz->add_option("--trace", viz_points, "Also trace through x y (repeatable)")->expected(2, -1);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP JSON service");
  std::string host = "127.0.0.1";
  int port = 8080;
  ServiceOptions service_options;
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
  serve->add_option("--threads", service_options.threads, "Tracing threads per request, 0 for all")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (build->parsed()) {
      const auto t0 = Clock::now();
      SolveOptions o;
      o.epsilon = epsilon;
      const auto f = build_from_cage(cage_from_json(read_json_file(build_cage)), build_common.resolution,
                                     parse_field_method(build_common.function), o);
      const Json doc = field_to_json(*f);
      if (build_out.empty()) {
        out << doc.dump() << "\n";
      } else {
        write_json_file(build_out, doc);
        const VertexId m = f->domain->vertex(f->maximum);
        out << Json{{"field", build_out},
                    {"method", std::string(to_string(f->method))},
                    {"cells", Json::array({f->domain->cells_x(), f->domain->cells_y()})},
                    {"inside_vertices", f->domain->inside_count()},
                    {"ring_vertices", f->domain->ring_count()},
                    {"maximum", point_json(f->maximum_world())},
                    {"maximum_vertex", Json::array({m.i, m.j})},
                    {"solver_iterations", f->stats.iterations},
                    {"max_tree_violation", max_tree_violation(*f)},
                    {"warnings", f->domain->warnings()},
                    {"seconds", seconds_since(t0)}}
                   .dump(2)
            << "\n";
      }
      return kExitOk;
    }

    if (trace_cmd->parsed()) {
      const auto f = load_field(trace_field);
      Json curves = Json::array();
      for (Vec2 p : pairs(trace_points)) {
        if (trace_dir != "descent") curves.push_back(curve_to_json(trace(*f, p, Direction::ascent)));
        if (trace_dir != "ascent") curves.push_back(curve_to_json(trace(*f, p, Direction::descent)));
      }
      emit(out, trace_out, {{"curves", std::move(curves)}});
      return kExitOk;
    }

    if (coords->parsed()) {
      const auto f = load_field(coords_field);
      Json items = Json::array();
      if (!coords_icc.empty()) {
        for (std::size_t k = 0; k + 2 < coords_icc.size(); k += 3) {
          IntegralCurveCoordinate c;
          c.segment = static_cast<int>(coords_icc[k]);
          c.bary = coords_icc[k + 1];
          c.t = coords_icc[k + 2];
          items.push_back({{"icc", icc_to_json(c)}, {"point", point_json(invert_icc(*f, c))}});
        }
      } else {
        if (coords_points.empty()) throw ParseError("coords needs --point or --icc");
        for (Vec2 p : pairs(coords_points)) items.push_back({{"point", point_json(p)}, {"icc", icc_to_json(compute_icc(*f, p))}});
      }
      emit(out, coords_out, {{"coordinates", std::move(items)}});
      return kExitOk;
    }

    if (deform->parsed()) {
      const auto t0 = Clock::now();
      const CagePolygon sc = cage_from_json(read_json_file(src_cage));
      const CagePolygon tc = cage_from_json(read_json_file(dst_cage));
      BoundaryHomeomorphism h(sc, tc);
      const FieldMethod method = parse_field_method(deform_common.function);
      const auto source = build_from_cage(sc, deform_common.resolution, method);
      const double t_source = seconds_since(t0);
      const auto t1 = Clock::now();
      const auto target = build_from_cage(tc, deform_common.resolution, method);
      const double t_target = seconds_since(t1);
      const Deformer deformer(source, target, h);

      const auto t2 = Clock::now();
      const SampleGridDeformation grid = deform_sample_grid(deformer, samples, threads);
      const double t_grid = seconds_since(t2);

      Json report = {{"format", "icc-deform-report"},
                     {"version", kDocumentVersion},
                     {"method", std::string(to_string(method))},
                     {"resolution", deform_common.resolution},
                     {"samples", samples},
                     {"sample_points", grid.grid.inside_points.size()},
                     {"collapsed", grid.collapsed},
                     {"max_displacement", grid.max_displacement},
                     {"jacobian", jacobian_to_json(grid.jacobian)},
                     {"maxima", {{"source", point_json(source->maximum_world())},
                                 {"target", point_json(target->maximum_world())}}},
                     {"expansion_edges", {{"source", find_expansion_edges(*source).size()},
                                          {"target", find_expansion_edges(*target).size()}}}};
      Json timings = {{"source_field_s", t_source}, {"target_field_s", t_target}, {"sample_grid_s", t_grid}};

      if (!image_out.empty()) {
        const Image src = image_in.empty() ? checkerboard(512, 512, checker) : read_png(image_in);
        ImageWarpOptions o;
        o.threads = threads;
        o.width = out_w;
        o.height = out_h;
        const auto t3 = Clock::now();
        const ImageWarp warp = deform_image(deformer, src, o);
        timings["image_s"] = seconds_since(t3);
        write_png(warp.image, image_out);
        report["image"] = {{"width", warp.image.width},
                           {"height", warp.image.height},
                           {"mapped_pixels", warp.mapped_pixels},
                           {"collapsed_pixels", warp.collapsed_pixels}};
      }
      if (!uv_out.empty()) {
        const auto t3 = Clock::now();
        write_png(uv_map(deformer, out_w > 0 ? out_w : 512, out_h > 0 ? out_h : 512, threads), uv_out);
        timings["uv_s"] = seconds_since(t3);
      }
      timings["total_s"] = seconds_since(t0);
      report["timings"] = std::move(timings);
      emit(out, report_out, report);
      return kExitOk;
    }

    if (audit->parsed()) {
      Json report;
      bool clean = true;
      if (!audit_field.empty()) {
        const auto f = load_field(audit_field);
        const auto cp = audit_critical_points(*f, static_cast<Connectivity>(connectivity));
        report = critical_report_to_json(cp, *f->domain);
        clean = cp.clean();
        if (f->tree) {
          const auto ta = audit_cousin_tree(*f->tree, *f->domain);
          report["tree"] = tree_audit_to_json(ta);
          report["max_tree_violation"] = max_tree_violation(*f);
          clean = clean && ta.ok;
        }
        err << report["summary"].get<std::string>() << "\n";
      } else if (!audit_src.empty() && !audit_dst.empty()) {
        const CagePolygon sc = cage_from_json(read_json_file(audit_src));
        const CagePolygon tc = cage_from_json(read_json_file(audit_dst));
        BoundaryHomeomorphism h(sc, tc);
        const FieldMethod method = parse_field_method(audit_common.function);
        const Deformer deformer(build_from_cage(sc, audit_common.resolution, method),
                                build_from_cage(tc, audit_common.resolution, method), h);
        const SampleGridDeformation grid = deform_sample_grid(deformer, audit_samples);
        report = {{"format", "icc-jacobian-audit"},
                  {"version", kDocumentVersion},
                  {"samples", audit_samples},
                  {"collapsed", grid.collapsed},
                  {"jacobian", jacobian_to_json(grid.jacobian)}};
        clean = !grid.jacobian.inverted();
        err << grid.jacobian.negative << " negative, " << grid.jacobian.zero << " zero, " << grid.jacobian.positive
            << " positive determinants\n";
      } else {
        err << "audit needs --field, or --src-cage and --dst-cage\n";
        return kExitUsage;
      }
      emit(out, audit_out, report);
      return clean ? kExitOk : kExitAuditFailed;
    }

    if (viz->parsed()) {
      const auto f = load_field(viz_field);
      svg.expansion = !no_expansion;
      svg.field = !no_field;
      std::vector<IntegralCurve> extra;
      for (Vec2 p : pairs(viz_points)) {
        extra.push_back(trace(*f, p, Direction::ascent));
        extra.push_back(trace(*f, p, Direction::descent));
      }
      write_text_file(viz_out, render_svg(*f, svg, extra));
      return kExitOk;
    }

    if (serve->parsed()) {
      DeformService service(service_options);
      HttpServer server(service);
      const int bound = server.bind(host, port);
      if (bound < 0) {
        err << "error: cannot bind " << host << ":" << port << "\n";
        return kExitInput;
      }
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      out << "listening on http://" << host << ":" << bound << std::endl;
      server.listen();
      g_server = nullptr;
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::input: return kExitInput;
      case ErrorKind::domain: return kExitDomain;
      case ErrorKind::solver: return kExitSolver;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}

}  // namespace icc
