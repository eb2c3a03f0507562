#include "icc/io.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include "icc/errors.hpp"

namespace icc {
namespace {

Json vec_json(Vec2 v) { return Json::array({v.x, v.y}); }

Vec2 vec_from(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError("expected an [x, y] pair of numbers");
  return {j[0].get<double>(), j[1].get<double>()};
}

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing key \"") + key + "\"");
  return j.at(key);
}

template <class T>
T get_as(const Json& j, const char* key) {
  try {
    return require(j, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad value for \"") + key + "\": " + e.what());
  }
}

void check_format(const Json& j, const char* format) {
  if (get_as<std::string>(j, "format") != format)
    throw ParseError(std::string("not an ") + format + " document");
  if (get_as<int>(j, "version") != kDocumentVersion)
    throw ParseError("unsupported document version " + std::to_string(get_as<int>(j, "version")));
}

const char* edge_kind_name(EdgeKind k) {
  switch (k) {
    case EdgeKind::horizontal: return "h";
    case EdgeKind::vertical: return "v";
    case EdgeKind::diagonal: return "d";
  }
  return "h";
}

Json vertex_list(const GridDomain& d, const std::vector<int>& ids) {
  Json out = Json::array();
  for (int v : ids) {
    const VertexId id = d.vertex(v);
    out.push_back(Json::array({id.i, id.j}));
  }
  return out;
}

}  // namespace

CagePolygon cage_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("cage must be a JSON array of [x, y] pairs");
  std::vector<Vec2> pts;
  pts.reserve(j.size());
  for (const auto& p : j) pts.push_back(vec_from(p));
  return CagePolygon(std::move(pts));
}

Json cage_to_json(const CagePolygon& cage) {
  Json out = Json::array();
  for (Vec2 v : cage.vertices()) out.push_back(vec_json(v));
  return out;
}

Json domain_to_json(const GridDomain& d) {
  Json runs = Json::array();
  const auto classes = d.classes();
  for (std::size_t k = 0; k < classes.size();) {
    std::size_t e = k;
    while (e < classes.size() && classes[e] == classes[k]) ++e;
    runs.push_back(Json::array({static_cast<int>(classes[k]), static_cast<int>(e - k)}));
    k = e;
  }
  Json out = {{"format", "icc-domain"},
              {"version", kDocumentVersion},
              {"resolution", d.resolution()},
              {"cells", Json::array({d.cells_x(), d.cells_y()})},
              {"origin", vec_json(d.origin())},
              {"spacing", d.spacing()},
              {"classes", std::move(runs)}};
  out["cage"] = d.cage() ? cage_to_json(*d.cage()) : Json(nullptr);
  return out;
}

GridDomain domain_from_json(const Json& j) {
  check_format(j, "icc-domain");
  const auto cells = get_as<std::vector<int>>(j, "cells");
  if (cells.size() != 2 || cells[0] < 1 || cells[1] < 1) throw ParseError("\"cells\" must be two positive integers");
  const int nx = cells[0], ny = cells[1];
  const auto spacing = get_as<double>(j, "spacing");
  if (!(spacing > 0.0)) throw ParseError("\"spacing\" must be positive");
  const std::size_t count = static_cast<std::size_t>(nx + 1) * static_cast<std::size_t>(ny + 1);

  std::vector<VertexClass> classes;
  classes.reserve(count);
  for (const auto& run : require(j, "classes")) {
    if (!run.is_array() || run.size() != 2) throw ParseError("class runs must be [class, count] pairs");
    const int c = run[0].get<int>(), n = run[1].get<int>();
    if (c < 0 || c > 2 || n < 1) throw ParseError("bad class run");
    classes.insert(classes.end(), static_cast<std::size_t>(n), static_cast<VertexClass>(c));
    if (classes.size() > count) throw ParseError("class runs exceed the vertex count");
  }
  if (classes.size() != count) throw ParseError("class runs do not cover every vertex");

  std::optional<CagePolygon> cage;
  if (j.contains("cage") && !j["cage"].is_null()) cage = cage_from_json(j["cage"]);
  return GridDomain::from_parts(get_as<int>(j, "resolution"), nx, ny, vec_from(require(j, "origin")), spacing,
                                std::move(classes), std::move(cage));
}

Json field_to_json(const ScalarField& f) {
  Json values = Json::array();
  for (double v : f.values) values.push_back(std::isnan(v) ? Json(nullptr) : Json(v));
  Json out = {{"format", "icc-field"},
              {"version", kDocumentVersion},
              {"domain", domain_to_json(*f.domain)},
              {"method", std::string(to_string(f.method))},
              {"epsilon", f.epsilon},
              {"maximum", f.maximum},
              {"values", std::move(values)}};
  Json edges = Json::array();
  if (f.tree)
    for (auto [p, c] : f.tree->edges) edges.push_back(Json::array({p, c}));
  out["tree"] = {{"root", f.tree ? f.tree->root : -1}, {"edges", std::move(edges)}};
  return out;
}

ScalarField field_from_json(const Json& j) {
  check_format(j, "icc-field");
  auto domain = std::make_shared<const GridDomain>(domain_from_json(require(j, "domain")));
  ScalarField f;
  f.domain = domain;
  f.method = parse_field_method(get_as<std::string>(j, "method"));
  f.epsilon = get_as<double>(j, "epsilon");
  f.maximum = get_as<int>(j, "maximum");
  const int n = domain->vertex_count();
  if (f.maximum < 0 || f.maximum >= n || domain->cls(f.maximum) != VertexClass::inside)
    throw ParseError("maximum is not an inside vertex");

  const Json& values = require(j, "values");
  if (!values.is_array() || values.size() != static_cast<std::size_t>(n))
    throw ParseError("values must have one entry per grid vertex");
  f.values.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const Json& v = values[static_cast<std::size_t>(k)];
    const bool valued = domain->cls(k) != VertexClass::outside;
    if (v.is_null()) {
      if (valued) throw ParseError("missing value at vertex " + std::to_string(k));
      f.values[static_cast<std::size_t>(k)] = std::nan("");
    } else {
      if (!v.is_number()) throw ParseError("values must be numbers or null");
      f.values[static_cast<std::size_t>(k)] = valued ? v.get<double>() : std::nan("");
    }
  }

  const Json& tree = require(j, "tree");
  const int root = get_as<int>(tree, "root");
  if (root >= 0) {
    auto t = std::make_shared<CousinTree>();
    t->root = root;
    t->parent.assign(static_cast<std::size_t>(n), -1);
    t->generation.assign(static_cast<std::size_t>(n), -1);
    std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
    for (const auto& e : require(tree, "edges")) {
      const auto pc = e.get<std::vector<int>>();
      if (pc.size() != 2 || pc[0] < 0 || pc[0] >= n || pc[1] < 0 || pc[1] >= n) throw ParseError("bad tree edge");
      t->edges.emplace_back(pc[0], pc[1]);
      if (domain->cls(pc[1]) == VertexClass::inside) {
        t->parent[static_cast<std::size_t>(pc[1])] = pc[0];
        children[static_cast<std::size_t>(pc[0])].push_back(pc[1]);
      }
    }
    std::deque<int> queue{root};
    t->generation[static_cast<std::size_t>(root)] = 0;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int c : children[static_cast<std::size_t>(v)]) {
        if (t->generation[static_cast<std::size_t>(c)] >= 0) throw ParseError("tree edges contain a cycle");
        t->generation[static_cast<std::size_t>(c)] = t->generation[static_cast<std::size_t>(v)] + 1;
        queue.push_back(c);
      }
    }
    f.tree = std::move(t);
  }
  return f;
}

Json critical_report_to_json(const CriticalPointReport& r, const GridDomain& d) {
  return {{"format", "icc-critical-points"},
          {"version", kDocumentVersion},
          {"connectivity", static_cast<int>(r.connectivity)},
          {"maxima", r.maxima},
          {"minima", r.minima},
          {"saddles", r.saddles},
          {"regular", r.regular},
          {"clean", r.clean()},
          {"maximum_vertices", vertex_list(d, r.maximum_vertices)},
          {"minimum_vertices", vertex_list(d, r.minimum_vertices)},
          {"saddle_vertices", vertex_list(d, r.saddle_vertices)},
          {"summary", std::to_string(r.maxima) + (r.maxima == 1 ? " maximum, " : " maxima, ") +
                          std::to_string(r.minima) + (r.minima == 1 ? " minimum, " : " minima, ") +
                          std::to_string(r.saddles) + (r.saddles == 1 ? " saddle" : " saddles")}};
}

Json tree_audit_to_json(const CousinTreeAudit& a) {
  return {{"ok", a.ok}, {"pairs_checked", a.pairs_checked}, {"violations", a.violations}};
}

Json jacobian_to_json(const JacobianReport& r, bool with_determinants) {
  Json out = {{"positive", r.positive}, {"zero", r.zero},       {"negative", r.negative},
              {"min_det", r.min_det},   {"max_det", r.max_det}, {"inverted", r.inverted()}};
  if (with_determinants) out["determinants"] = r.determinants;
  return out;
}

Json curve_to_json(const IntegralCurve& c) {
  Json pts = Json::array();
  for (const auto& p : c.points) pts.push_back(vec_json(p.position));
  Json out = {{"direction", c.direction == Direction::ascent ? "ascent" : "descent"},
              {"points", std::move(pts)},
              {"length", c.length()},
              {"steps", c.steps},
              {"slid", c.slid()},
              {"reached_cage", c.reached_cage}};
  if (c.reached_cage) out["exit"] = {{"segment", c.cage_segment}, {"bary", c.cage_bary}};
  return out;
}

Json icc_to_json(const IntegralCurveCoordinate& c) {
  if (c.at_maximum) return {{"at_maximum", true}, {"t", 1.0}};
  return {{"at_maximum", false},          {"segment", c.segment},   {"bary", c.bary}, {"t", c.t},
          {"degenerate", c.degenerate}, {"collapsed", c.collapsed}};
}

IntegralCurveCoordinate icc_from_json(const Json& j) {
  if (j.value("at_maximum", false)) return IntegralCurveCoordinate::maximum_token();
  IntegralCurveCoordinate c;
  c.segment = get_as<int>(j, "segment");
  c.bary = get_as<double>(j, "bary");
  c.t = get_as<double>(j, "t");
  c.degenerate = j.value("degenerate", false);
  c.collapsed = j.value("collapsed", false);
  return c;
}

Json edges_to_json(std::span<const GridEdge> edges) {
  Json out = Json::array();
  for (const auto& e : edges) out.push_back(Json::array({edge_kind_name(e.kind), e.i, e.j}));
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
  if (!out) throw ParseError("write failed for " + path.string());
}

void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace icc
