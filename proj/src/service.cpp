#include "icc/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <list>

#include "httplib.h"

#include "icc/errors.hpp"
#include "icc/io.hpp"
#include "icc/parallel.hpp"
#include "icc/svg.hpp"

namespace icc {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string ms_header(double ms) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", ms);
  return buf;
}

HttpResponse json_response(int status, const Json& body) {
  HttpResponse r;
  r.status = status;
  r.body = body.dump() + "\n";
  return r;
}

HttpResponse error_response(int status, const std::string& kind, const std::string& message) {
  return json_response(status, {{"error", kind}, {"message", message}});
}

// Invalid or unrasterizable cages are client errors; a failed solve or trace is a server error.
HttpResponse from_error(const Error& e) {
  if (dynamic_cast<const CageMismatch*>(&e)) return error_response(409, "cage_mismatch", e.what());
  if (e.kind() == ErrorKind::input || dynamic_cast<const NotBallLike*>(&e) || dynamic_cast<const EmptyDomain*>(&e))
    return error_response(400, "invalid_cage", e.what());
  return error_response(500, e.kind() == ErrorKind::solver ? "solver_failure" : "trace_failure", e.what());
}

Json parse_body(const std::string& body) {
  try {
    Json j = Json::parse(body);
    if (!j.is_object()) throw ParseError("request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

template <class T>
T field_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string("bad value for \"") + key + "\"");
  }
}

Json point_json(Vec2 p) { return Json::array({p.x, p.y}); }

// Source coordinates of the in-cage points of one sample grid.
struct SampleCoordinates {
  SampleGrid grid;
  std::vector<IntegralCurveCoordinate> coords;
};

}  // namespace

struct DeformService::Session {
  std::string id;
  CagePolygon cage;
  int resolution = 0;
  FieldMethod method = FieldMethod::laplace_constrained;
  SolveOptions solve;
  std::shared_ptr<const ScalarField> source;

  std::mutex mutex;  // guards everything below; held while a field or coordinate set is built
  std::list<std::pair<std::string, std::shared_ptr<const ScalarField>>> targets;  // most recent first
  std::map<int, std::shared_ptr<const SampleCoordinates>> coordinates;
  std::shared_ptr<const ScalarField> last_target;
  std::vector<SvgMarker> last_markers;
};

DeformService::DeformService(ServiceOptions options) : options_(options) {}
DeformService::~DeformService() = default;

std::size_t DeformService::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::shared_ptr<DeformService::Session> DeformService::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

HttpResponse DeformService::health() const {
  HttpResponse r;
  r.content_type = "text/plain";
  r.body = "ok";
  return r;
}

HttpResponse DeformService::create_session(const std::string& body) {
  try {
    const auto t0 = Clock::now();
    const Json req = parse_body(body);
    if (!req.contains("cage")) throw ParseError("missing key \"cage\"");
    auto s = std::make_shared<Session>();
    s->cage = cage_from_json(req["cage"]);
    s->resolution = field_or(req, "resolution", options_.default_resolution);
    if (s->resolution < 4 || s->resolution > options_.max_resolution)
      throw ParseError("resolution must lie in [4, " + std::to_string(options_.max_resolution) + "]");
    s->method = parse_field_method(field_or<std::string>(req, "method", "laplace"));
    s->solve.epsilon = field_or(req, "epsilon", kDefaultEpsilon);
    if (!(s->solve.epsilon > 0.0)) throw ParseError("epsilon must be positive");

    auto domain = std::make_shared<const GridDomain>(rasterize(s->cage, s->resolution));
    s->source = std::make_shared<const ScalarField>(build_field(domain, s->method, s->solve));
    const double build_ms = ms_since(t0);

    {
      std::lock_guard lock(mutex_);
      char buf[24];
      std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(next_id_++));
      s->id = buf;
      sessions_[s->id] = s;
    }
    const VertexId m = domain->vertex(s->source->maximum);
    Json out = {{"session", s->id},
                {"method", std::string(to_string(s->method))},
                {"resolution", s->resolution},
                {"cells", Json::array({domain->cells_x(), domain->cells_y()})},
                {"inside_vertices", domain->inside_count()},
                {"maximum", point_json(s->source->maximum_world())},
                {"maximum_vertex", Json::array({m.i, m.j})},
                {"expansion_edges", find_expansion_edges(*s->source).size()},
                {"compression_edges", find_compression_edges(*s->source).size()},
                {"warnings", domain->warnings()}};
    HttpResponse r = json_response(200, out);
    r.headers["X-Source-Field-Ms"] = ms_header(build_ms);
    return r;
  } catch (const Error& e) {
    return from_error(e);
  }
}

HttpResponse DeformService::deform(const std::string& body) {
  try {
    const auto t0 = Clock::now();
    const Json req = parse_body(body);
    const auto id = field_or<std::string>(req, "session", "");
    const auto s = find(id);
    if (!s) return error_response(404, "unknown_session", "no session \"" + id + "\"");
    if (!req.contains("target")) throw ParseError("missing key \"target\"");
    const CagePolygon target_cage = cage_from_json(req["target"]);
    const BoundaryHomeomorphism h(s->cage, target_cage);
    const int n = field_or(req, "samples", options_.default_samples);
    if (n < 2 || n > options_.max_samples)
      throw ParseError("samples must lie in [2, " + std::to_string(options_.max_samples) + "]");
    const bool want_svg = field_or(req, "svg", false);

    // Field construction and coordinate sets are built once per key, one at a time per session.
    std::shared_ptr<const ScalarField> target;
    std::shared_ptr<const SampleCoordinates> coords;
    double target_ms = 0.0, coords_ms = 0.0;
    bool target_hit = false, coords_hit = false;
    {
      std::lock_guard lock(s->mutex);
      const std::string key = cage_to_json(target_cage).dump();
      for (auto it = s->targets.begin(); it != s->targets.end(); ++it)
        if (it->first == key) {
          target = it->second;
          s->targets.splice(s->targets.begin(), s->targets, it);
          target_hit = true;
          break;
        }
      if (!target) {
        const auto t1 = Clock::now();
        auto domain = std::make_shared<const GridDomain>(rasterize(target_cage, s->resolution));
        target = std::make_shared<const ScalarField>(build_field(domain, s->method, s->solve));
        target_ms = ms_since(t1);
        s->targets.emplace_front(key, target);
        while (s->targets.size() > options_.target_cache) s->targets.pop_back();
      }

      if (auto it = s->coordinates.find(n); it != s->coordinates.end()) {
        coords = it->second;
        coords_hit = true;
      } else {
        const auto t1 = Clock::now();
        auto c = std::make_shared<SampleCoordinates>();
        c->grid = make_sample_grid(s->cage, n);
        c->coords.resize(c->grid.inside_points.size());
        parallel_for(c->coords.size(), options_.threads, [&](std::size_t k) {
          c->coords[k] = compute_icc(*s->source, c->grid.points[static_cast<std::size_t>(c->grid.inside_points[k])]);
        });
        coords = c;
        s->coordinates[n] = c;
        coords_ms = ms_since(t1);
      }
    }

    const auto t2 = Clock::now();
    const Deformer deformer(s->source, target, h);
    const SampleGrid& grid = coords->grid;
    std::vector<MappedPoint> mapped(coords->coords.size());
    parallel_for(mapped.size(), options_.threads,
                 [&](std::size_t k) { mapped[k] = deformer.map_coordinate(coords->coords[k]); });

    std::vector<Vec2> after = grid.points;
    std::vector<int> slot(grid.points.size(), -1);
    Json source_pts = Json::array(), points = Json::array(), collapsed = Json::array();
    std::vector<SvgMarker> markers;
    double max_disp = 0.0;
    for (std::size_t k = 0; k < mapped.size(); ++k) {
      const auto idx = static_cast<std::size_t>(grid.inside_points[k]);
      slot[idx] = static_cast<int>(k);
      after[idx] = mapped[k].position;
      source_pts.push_back(point_json(grid.points[idx]));
      points.push_back(point_json(mapped[k].position));
      const bool is_collapsed = mapped[k].status == PointStatus::collapsed;
      if (is_collapsed) collapsed.push_back(k);
      markers.push_back({mapped[k].position, is_collapsed});
      max_disp = std::max(max_disp, distance(grid.points[idx], mapped[k].position));
    }
    const JacobianReport jac = jacobian_audit(grid.points, after, grid.triangles);
    Json triangles = Json::array(), negative = Json::array();
    for (std::size_t t = 0; t < grid.triangles.size(); ++t) {
      const auto& tri = grid.triangles[t];
      triangles.push_back(Json::array({slot[static_cast<std::size_t>(tri[0])], slot[static_cast<std::size_t>(tri[1])],
                                       slot[static_cast<std::size_t>(tri[2])]}));
      if (jac.signs[t] == DetSign::negative) negative.push_back(t);
    }
    Json jacobian = jacobian_to_json(jac);
    jacobian["negative_triangles"] = std::move(negative);

    Json out = {{"session", s->id},
                {"samples", n},
                {"count", mapped.size()},
                {"source", std::move(source_pts)},
                {"points", std::move(points)},
                {"collapsed", std::move(collapsed)},
                {"collapsed_count", std::count_if(mapped.begin(), mapped.end(),
                                                  [](const MappedPoint& m) { return m.status == PointStatus::collapsed; })},
                {"triangles", std::move(triangles)},
                {"jacobian", std::move(jacobian)},
                {"max_displacement", max_disp},
                {"target_maximum", point_json(target->maximum_world())}};
    if (want_svg) {
      SvgOptions o;
      o.curves = 0;
      out["svg"] = render_svg(*target, o, {}, markers);
    }
    {
      std::lock_guard lock(s->mutex);
      s->last_target = target;
      s->last_markers = std::move(markers);
    }
    const double map_ms = ms_since(t2);

    HttpResponse r = json_response(200, out);
    r.headers["X-Target-Cache"] = target_hit ? "hit" : "miss";
    r.headers["X-Coordinate-Cache"] = coords_hit ? "hit" : "miss";
    r.headers["X-Field-Builds"] = target_hit ? "0" : "1";
    r.headers["X-Target-Field-Ms"] = ms_header(target_ms);
    r.headers["X-Coordinates-Ms"] = ms_header(coords_ms);
    r.headers["X-Map-Ms"] = ms_header(map_ms);
    r.headers["X-Total-Ms"] = ms_header(ms_since(t0));
    return r;
  } catch (const Error& e) {
    return from_error(e);
  }
}

HttpResponse DeformService::viz(const std::string& session_id, const std::map<std::string, std::string>& query) {
  const auto s = find(session_id);
  if (!s) return error_response(404, "unknown_session", "no session \"" + session_id + "\"");
  auto flag = [&](const char* key, bool fallback) {
    const auto it = query.find(key);
    return it == query.end() ? fallback : (it->second == "1" || it->second == "true");
  };
  try {
    SvgOptions o;
    o.tree = flag("tree", false);
    o.expansion = flag("expansion", true);
    o.compression = flag("compression", false);
    if (const auto it = query.find("curves"); it != query.end()) o.curves = std::clamp(std::stoi(it->second), 0, 1024);
    const auto which = query.count("field") ? query.at("field") : std::string("source");

    std::shared_ptr<const ScalarField> f;
    std::vector<SvgMarker> markers;
    if (which == "target") {
      std::lock_guard lock(s->mutex);
      if (!s->last_target) return error_response(404, "no_target", "no deformation has been requested yet");
      f = s->last_target;
      markers = s->last_markers;
    } else if (which == "source") {
      f = s->source;
    } else {
      return error_response(400, "bad_query", "field must be source or target");
    }
    HttpResponse r;
    r.content_type = "image/svg+xml";
    r.body = render_svg(*f, o, {}, markers);
    return r;
  } catch (const std::logic_error&) {
    return error_response(400, "bad_query", "curves must be an integer");
  } catch (const Error& e) {
    return from_error(e);
  }
}

struct HttpServer::Impl {
  DeformService& service;
  httplib::Server server;
  explicit Impl(DeformService& s) : service(s) {}
};

HttpServer::HttpServer(DeformService& service) : impl_(std::make_unique<Impl>(service)) {
  auto send = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    res.set_content(r.body, r.content_type);
  };
  auto& svc = impl_->service;
  auto& srv = impl_->server;
  srv.Get("/health", [&svc, send](const httplib::Request&, httplib::Response& res) { send(res, svc.health()); });
  srv.Post("/session", [&svc, send](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.create_session(req.body));
  });
  srv.Post("/deform", [&svc, send](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.deform(req.body));
  });
  srv.Get(R"(/session/([^/]+)/viz)", [&svc, send](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query[k] = v;
    send(res, svc.viz(req.matches[1], query));
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace icc
