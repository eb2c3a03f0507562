#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cages.hpp"
#include "doctest.h"
#include "icc/cli.hpp"

using namespace icc;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "icc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string cage(const char* name) { return std::string(ICC_DATA_DIR) + "/cages/" + name + ".json"; }

struct TempDir {
  std::filesystem::path path;
  TempDir() : path(std::filesystem::temp_directory_path() / ("icc_cli_" + std::to_string(::getpid()))) {
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string operator/(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"build"}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"build", "--cage", cage("square"), "--resolution", "many"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("build writes a field document and summary") {
  TempDir tmp;
  const Run to_stdout = run({"build", "--cage", cage("square"), "--resolution", "12", "--function", "l1"});
  REQUIRE(to_stdout.code == kExitOk);
  const Json doc = Json::parse(to_stdout.out);
  CHECK(doc["format"] == "icc-field");
  CHECK(field_from_json(doc).method == FieldMethod::l1);

  const Run to_file = run({"build", "--cage", cage("u_shape"), "--resolution", "30", "--out", tmp / "f.json"});
  REQUIRE(to_file.code == kExitOk);
  CHECK(std::filesystem::exists(tmp / "f.json"));
  CHECK(field_from_json(read_json_file(tmp / "f.json")).method == FieldMethod::laplace_constrained);
}

TEST_CASE("input, domain and solver failures map to exit codes") {
  TempDir tmp;
  write_text_file(tmp / "bowtie.json", "[[0,0],[1,1],[1,0],[0,1]]");
  CHECK(run({"build", "--cage", tmp / "bowtie.json"}).code == kExitInput);
  write_text_file(tmp / "broken.json", "[[0,0],");
  CHECK(run({"build", "--cage", tmp / "broken.json"}).code == kExitInput);
  CHECK(run({"build", "--cage", tmp / "missing.json"}).code == kExitInput);
  CHECK(run({"build", "--cage", cage("square"), "--function", "harmonic"}).code == kExitInput);

  // A margin this large cannot be met with the maximum at 1 and the ring at 0.
  const Run solver = run({"build", "--cage", cage("square"), "--resolution", "20", "--epsilon", "0.5"});
  CHECK(solver.code == kExitSolver);
  CHECK_FALSE(solver.err.empty());

  REQUIRE(run({"build", "--cage", cage("square"), "--resolution", "12", "--out", tmp / "f.json"}).code == kExitOk);
  CHECK(run({"trace", "--field", tmp / "f.json", "--point", "7", "7"}).code == kExitDomain);
}

TEST_CASE("trace and coords") {
  TempDir tmp;
  REQUIRE(run({"build", "--cage", cage("square"), "--resolution", "20", "--out", tmp / "f.json"}).code == kExitOk);
  const Run t = run({"trace", "--field", tmp / "f.json", "--point", "0.3", "0.4", "--direction", "both"});
  REQUIRE(t.code == kExitOk);
  const Json curves = Json::parse(t.out);
  CHECK(curves.dump().find("ascent") != std::string::npos);

  const Run c = run({"coords", "--field", tmp / "f.json", "--point", "0.3", "0.4"});
  REQUIRE(c.code == kExitOk);
  const Json coords = Json::parse(c.out);
  CHECK(coords.dump().find("segment") != std::string::npos);
}

TEST_CASE("audit reports and fails on a damaged field") {
  TempDir tmp;
  REQUIRE(run({"build", "--cage", cage("star"), "--resolution", "30", "--out", tmp / "f.json"}).code == kExitOk);
  const Run ok = run({"audit", "--field", tmp / "f.json"});
  CHECK(ok.code == kExitOk);
  CHECK(ok.err.find("1 maximum, 0 minima, 0 saddles") != std::string::npos);

  // Sink one inside vertex below all of its neighbours.
  Json doc = read_json_file(tmp / "f.json");
  ScalarField f = field_from_json(doc);
  for (int k = 0; k < f.domain->vertex_count(); ++k)
    if (f.domain->cls(k) == VertexClass::inside && k != f.maximum && f.tree->generation[static_cast<std::size_t>(k)] == 3) {
      doc["values"][static_cast<std::size_t>(k)] = -5.0;
      break;
    }
  write_json_file(tmp / "bad.json", doc);
  const Run bad = run({"audit", "--field", tmp / "bad.json"});
  CHECK(bad.code == kExitAuditFailed);
  CHECK(bad.err.find("1 minimum") != std::string::npos);

  CHECK(run({"audit", "--src-cage", cage("square"), "--dst-cage", cage("square"), "--samples", "24"}).code == kExitOk);
  CHECK(run({"audit"}).code == kExitUsage);
}

TEST_CASE("identity deform through the CLI") {
  TempDir tmp;
  const Run r = run({"deform", "--src-cage", cage("square"), "--dst-cage", cage("square"), "--resolution", "30",
                     "--checker", "4", "--width", "48", "--height", "48", "--out", tmp / "w.png", "--uv", tmp / "uv.png",
                     "--samples", "32"});
  REQUIRE(r.code == kExitOk);
  const Json report = Json::parse(r.out);
  CHECK(report["format"] == "icc-deform-report");
  CHECK(report["max_displacement"].get<double>() < 1e-9);
  CHECK(report["jacobian"]["negative"] == 0);
  const Image w = read_png(tmp / "w.png");
  CHECK(w.width == 48);
  CHECK(read_png(tmp / "uv.png").height == 48);

  write_text_file(tmp / "tri.json", "[[0,0],[1,0],[0,1]]");
  // Cages with different vertex counts have no boundary correspondence.
  CHECK(run({"deform", "--src-cage", cage("square"), "--dst-cage", tmp / "tri.json"}).code == kExitDomain);
}

TEST_CASE("viz renders expansion edges") {
  TempDir tmp;
  REQUIRE(run({"build", "--cage", cage("u_shape"), "--resolution", "40", "--out", tmp / "f.json"}).code == kExitOk);
  REQUIRE(run({"viz", "--field", tmp / "f.json", "--out", tmp / "f.svg", "--tree", "--compression", "--trace", "1", "1"}).code == kExitOk);
  std::ifstream in(tmp / "f.svg");
  const std::string svg((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("id=\"expansion\"") != std::string::npos);
  CHECK(svg.find("#8e24aa") != std::string::npos);
  REQUIRE(run({"viz", "--field", tmp / "f.json", "--out", tmp / "g.svg", "--no-expansion"}).code == kExitOk);
  std::ifstream in2(tmp / "g.svg");
  const std::string svg2((std::istreambuf_iterator<char>(in2)), std::istreambuf_iterator<char>());
  CHECK(svg2.find("#8e24aa") == std::string::npos);
}
