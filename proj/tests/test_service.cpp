#include <thread>

#include "cages.hpp"
#include "doctest.h"
#include "httplib.h"
#include "icc/service.hpp"

using namespace icc;

namespace {

const char* kSquare = "[[0,0],[1,0],[1,1],[0,1]]";

std::string session_body(const std::string& cage, int resolution = 24, const std::string& extra = "") {
  return R"({"cage": )" + cage + R"(, "resolution": )" + std::to_string(resolution) + extra + "}";
}

std::string open_session(DeformService& svc, const std::string& cage = kSquare, int resolution = 24) {
  const HttpResponse r = svc.create_session(session_body(cage, resolution));
  REQUIRE(r.status == 200);
  return Json::parse(r.body)["session"].get<std::string>();
}

std::string deform_body(const std::string& id, const std::string& target, int samples = 20, bool svg = false) {
  return R"({"session": ")" + id + R"(", "target": )" + target + R"(, "samples": )" + std::to_string(samples) +
         (svg ? R"(, "svg": true)" : "") + "}";
}

}  // namespace

TEST_CASE("health") {
  DeformService svc;
  const HttpResponse r = svc.health();
  CHECK(r.status == 200);
  CHECK(r.body == "ok");
}

TEST_CASE("session creation") {
  DeformService svc;
  const HttpResponse r = svc.create_session(session_body(kSquare));
  REQUIRE(r.status == 200);
  const Json j = Json::parse(r.body);
  CHECK(j["session"] == "s000001");
  CHECK(j["resolution"] == 24);
  CHECK(j["method"] == "laplace");
  CHECK(j["inside_vertices"].get<int>() > 0);
  CHECK(r.headers.count("X-Source-Field-Ms"));
  CHECK(svc.session_count() == 1);
  CHECK(Json::parse(svc.create_session(session_body(kSquare)).body)["session"] == "s000002");
}

TEST_CASE("client errors") {
  DeformService svc;
  CHECK(svc.create_session("{ nope").status == 400);
  CHECK(svc.create_session("[1, 2]").status == 400);
  CHECK(svc.create_session(R"({"resolution": 20})").status == 400);
  CHECK(svc.create_session(session_body("[[0,0],[1,1],[1,0],[0,1]]")).status == 400);
  CHECK(svc.create_session(session_body(kSquare, 2)).status == 400);
  CHECK(svc.create_session(session_body(kSquare, 100000)).status == 400);
  CHECK(svc.create_session(session_body(kSquare, 20, R"(, "method": "harmonic")")).status == 400);
  const HttpResponse bad = svc.create_session(session_body("[[0,0],[1,1],[1,0],[0,1]]"));
  CHECK(Json::parse(bad.body)["error"] == "invalid_cage");

  CHECK(svc.deform(deform_body("s999999", kSquare)).status == 404);
  CHECK(svc.viz("s999999", {}).status == 404);

  const std::string id = open_session(svc);
  const HttpResponse mismatch = svc.deform(deform_body(id, "[[0,0],[1,0],[0,1]]"));
  CHECK(mismatch.status == 409);
  CHECK(Json::parse(mismatch.body)["error"] == "cage_mismatch");
  CHECK(svc.deform(deform_body(id, kSquare, 100000)).status == 400);
  CHECK(svc.viz(id, {{"field", "sideways"}}).status == 400);
  CHECK(svc.viz(id, {{"field", "target"}}).status == 404);
}

TEST_CASE("an infeasible margin is a server-side solver failure") {
  DeformService svc;
  const HttpResponse r = svc.create_session(session_body(kSquare, 20, R"(, "epsilon": 0.5)"));
  CHECK(r.status == 500);
  CHECK(Json::parse(r.body)["error"] == "solver_failure");
}

TEST_CASE("identity deformation returns the samples unchanged") {
  DeformService svc;
  const std::string id = open_session(svc);
  const HttpResponse r = svc.deform(deform_body(id, kSquare, 20));
  REQUIRE(r.status == 200);
  const Json j = Json::parse(r.body);
  const SampleGrid g = make_sample_grid(CagePolygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}), 20);
  CHECK(j["count"] == g.inside_points.size());
  REQUIRE(j["points"].size() == g.inside_points.size());
  REQUIRE(j["source"].size() == g.inside_points.size());
  for (std::size_t k = 0; k < j["points"].size(); ++k) {
    const double dx = j["points"][k][0].get<double>() - j["source"][k][0].get<double>();
    const double dy = j["points"][k][1].get<double>() - j["source"][k][1].get<double>();
    CHECK(std::hypot(dx, dy) < 1e-9);
  }
  CHECK(j["max_displacement"].get<double>() < 1e-9);
  CHECK(j["jacobian"]["negative_triangles"].size() == 0);
  for (const auto& t : j["triangles"])
    for (const auto& v : t) CHECK(v.get<std::size_t>() < g.inside_points.size());
}

TEST_CASE("caches and repeat determinism") {
  DeformService svc(ServiceOptions{.threads = 2, .target_cache = 2});
  const std::string id = open_session(svc);
  const std::string a = "[[0,0],[1.2,0],[1.1,1],[0,1]]", b = "[[0,0],[1,0.1],[1,1],[0.1,1.1]]",
                    c = "[[0.1,0],[1,0],[1,1],[0,1.2]]";
  const HttpResponse first = svc.deform(deform_body(id, a));
  REQUIRE(first.status == 200);
  CHECK(first.headers.at("X-Target-Cache") == "miss");
  CHECK(first.headers.at("X-Coordinate-Cache") == "miss");
  CHECK(first.headers.at("X-Field-Builds") == "1");
  for (const char* h : {"X-Target-Field-Ms", "X-Coordinates-Ms", "X-Map-Ms", "X-Total-Ms"}) CHECK(first.headers.count(h));

  const HttpResponse again = svc.deform(deform_body(id, a));
  CHECK(again.headers.at("X-Target-Cache") == "hit");
  CHECK(again.headers.at("X-Coordinate-Cache") == "hit");
  CHECK(again.headers.at("X-Field-Builds") == "0");
  CHECK(again.body == first.body);

  // A new sample density reuses the target field but not the coordinates.
  const HttpResponse denser = svc.deform(deform_body(id, a, 24));
  CHECK(denser.headers.at("X-Target-Cache") == "hit");
  CHECK(denser.headers.at("X-Coordinate-Cache") == "miss");

  // With room for two targets, a third evicts the least recently used one.
  CHECK(svc.deform(deform_body(id, b)).headers.at("X-Target-Cache") == "miss");
  CHECK(svc.deform(deform_body(id, a)).headers.at("X-Target-Cache") == "hit");
  CHECK(svc.deform(deform_body(id, c)).headers.at("X-Target-Cache") == "miss");
  CHECK(svc.deform(deform_body(id, b)).headers.at("X-Target-Cache") == "miss");
  CHECK(svc.deform(deform_body(id, a)).headers.at("X-Target-Cache") == "miss");

  // A fresh service computes byte-identical results.
  DeformService other(ServiceOptions{.threads = 1});
  const std::string id2 = open_session(other);
  CHECK(other.deform(deform_body(id2, a)).body == first.body);
}

TEST_CASE("svg output") {
  DeformService svc;
  const std::string id = open_session(svc, cage_to_json(testing::load_cage("u_shape")).dump(), 30);
  const HttpResponse src = svc.viz(id, {{"expansion", "1"}, {"curves", "12"}});
  REQUIRE(src.status == 200);
  CHECK(src.content_type == "image/svg+xml");
  CHECK(src.body.find("id=\"expansion\"") != std::string::npos);
  CHECK(svc.viz(id, {{"curves", "many"}}).status == 400);

  std::vector<Vec2> moved;
  for (const Vec2& p : testing::load_cage("u_shape").vertices()) moved.emplace_back(p.x * 1.1, p.y);
  const HttpResponse d = svc.deform(deform_body(id, cage_to_json(CagePolygon(moved)).dump(), 16, true));
  REQUIRE(d.status == 200);
  CHECK(Json::parse(d.body)["svg"].get<std::string>().rfind("<svg", 0) == 0);
  const HttpResponse tgt = svc.viz(id, {{"field", "target"}, {"tree", "1"}});
  CHECK(tgt.status == 200);
}

TEST_CASE("HTTP front end") {
  DeformService svc;
  HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread t([&] { server.listen(); });
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(60, 0);
  for (int tries = 0; tries < 100 && !client.Get("/health"); ++tries) std::this_thread::sleep_for(std::chrono::milliseconds(20));

  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  auto session = client.Post("/session", session_body(kSquare), "application/json");
  REQUIRE(session);
  REQUIRE(session->status == 200);
  const std::string id = Json::parse(session->body)["session"];
  auto deform = client.Post("/deform", deform_body(id, kSquare), "application/json");
  REQUIRE(deform);
  CHECK(deform->status == 200);
  CHECK(deform->get_header_value("X-Target-Cache") == "miss");
  auto viz = client.Get("/session/" + id + "/viz?tree=1");
  REQUIRE(viz);
  CHECK(viz->status == 200);
  CHECK(viz->get_header_value("Content-Type") == "image/svg+xml");
  auto missing = client.Get("/session/s424242/viz");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto mismatch = client.Post("/deform", deform_body(id, "[[0,0],[1,0],[0,1]]"), "application/json");
  REQUIRE(mismatch);
  CHECK(mismatch->status == 409);
  server.stop();
  t.join();
}
