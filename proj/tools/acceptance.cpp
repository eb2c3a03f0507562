// Runs the acceptance criteria and prints one PASS/FAIL line for each.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fuzz.hpp"
#include "icc/deform.hpp"
#include "icc/errors.hpp"
#include "icc/io.hpp"
#include "reference_tracer.hpp"

using namespace icc;

namespace {

using Clock = std::chrono::steady_clock;

constexpr FieldMethod kMethods[3] = {FieldMethod::l1, FieldMethod::laplace_constrained,
                                     FieldMethod::bilaplace_constrained};
constexpr int kResolution = 50;
constexpr int kSamples = 64;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* id;
  double budget_s;
  std::function<Outcome()> run;
};

CagePolygon load_cage(const std::string& name) {
  return cage_from_json(read_json_file(std::string(ICC_DATA_DIR) + "/cages/" + name + ".json"));
}

const std::vector<std::string> kCageNames{"square", "u_shape", "star", "frog", "bunny"};

std::shared_ptr<const ScalarField> field_for(const CagePolygon& cage, FieldMethod m, int res = kResolution) {
  return std::make_shared<const ScalarField>(build_field(std::make_shared<const GridDomain>(rasterize(cage, res)), m));
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

struct Deformation {
  std::string name;
  std::vector<Vec2> source;
  std::vector<Vec2> target;
};

std::vector<Vec2> rotated(const std::vector<Vec2>& pts, double a) {
  std::vector<Vec2> out;
  for (const Vec2& p : pts) out.emplace_back(std::cos(a) * p.x - std::sin(a) * p.y, std::sin(a) * p.x + std::cos(a) * p.y);
  return out;
}

std::vector<Vec2> star_points(double twist) {
  std::vector<Vec2> out;
  for (int k = 0; k < 10; ++k) {
    const double r = k % 2 ? 0.45 : 1.0, a = M_PI / 2 + k * M_PI / 5 + (k % 2 ? 0.0 : twist);
    out.emplace_back(r * std::cos(a), r * std::sin(a));
  }
  return out;
}

std::vector<Vec2> pentagon(double sx, double spin) {
  std::vector<Vec2> out;
  for (int k = 0; k < 5; ++k) {
    const double a = M_PI / 2 + 2 * M_PI * k / 5 + spin * k;
    out.emplace_back(sx * std::cos(a), std::sin(a));
  }
  return out;
}

const std::vector<Vec2> kUnitSquare{{0, 0}, {1, 0}, {1, 1}, {0, 1}};

// The square whose top edge midpoints are pulled deep inside, and nine further edits.
std::vector<Deformation> scripted_deformations() {
  const std::vector<Vec2> u{{0, 0}, {3, 0}, {3, 3}, {2, 3}, {2, 1}, {1, 1}, {1, 3}, {0, 3}};
  return {
      {"extreme-square", {{0, 0}, {1, 0}, {1, 1}, {0.55, 1}, {0.45, 1}, {0, 1}},
       {{0, 0}, {1, 0}, {1, 1}, {0.55, 0.12}, {0.45, 0.12}, {0, 1}}},
      {"u-bend", u, {{0, 0}, {3, 0}, {4, 2.5}, {3.2, 3}, {2, 1}, {1, 1}, {-0.2, 3}, {-1, 2.5}}},
      {"stretch", kUnitSquare, {{0, 0}, {2, 0}, {2, 0.5}, {0, 0.5}}},
      {"shear", kUnitSquare, {{0, 0}, {1, 0}, {1.6, 1}, {0.6, 1}}},
      {"taper", kUnitSquare, {{0, 0}, {1, 0}, {0.7, 1}, {0.3, 1}}},
      {"star-twist", star_points(0.0), star_points(0.35)},
      {"scale", kUnitSquare, {{0, 0}, {2, 0}, {2, 2}, {0, 2}}},
      {"rotate", kUnitSquare, rotated(kUnitSquare, 0.3)},
      {"quad", kUnitSquare, {{0, 0}, {1.1, 0.1}, {0.9, 1.0}, {-0.1, 0.9}}},
      {"pentagon", pentagon(1.0, 0.0), pentagon(1.2, 0.1)},
  };
}

// Convex source and target cages for the round-trip law.
std::vector<Deformation> convex_deformations() {
  return {
      {"identity", kUnitSquare, kUnitSquare},
      {"scale", kUnitSquare, {{0, 0}, {2, 0}, {2, 2}, {0, 2}}},
      {"rotate", kUnitSquare, rotated(kUnitSquare, 0.3)},
      {"mild-shear", kUnitSquare, {{0, 0}, {1, 0}, {1.2, 1}, {0.2, 1}}},
      {"stretch", kUnitSquare, {{0, 0}, {1.4, 0}, {1.4, 0.8}, {0, 0.8}}},
      {"quad", kUnitSquare, {{0, 0}, {1.1, 0.1}, {0.9, 1.0}, {-0.1, 0.9}}},
      {"pentagon", pentagon(1.0, 0.0), pentagon(1.2, 0.1)},
  };
}

Deformer make_deformer(const Deformation& d, FieldMethod m = FieldMethod::laplace_constrained) {
  const CagePolygon s(d.source), t(d.target);
  return Deformer(field_for(s, m), field_for(t, m), BoundaryHomeomorphism(s, t));
}

std::vector<GridDomain> fuzz_domains() { return testing::fuzz_corpus(200); }

Outcome critical_points(const std::vector<GridDomain>& corpus) {
  int fields = 0, dirty = 0;
  std::string first;
  auto check = [&](const ScalarField& f, const std::string& what) {
    ++fields;
    const auto r = audit_critical_points(f);
    if (r.clean()) return;
    ++dirty;
    if (first.empty())
      first = "; first: " + what + " " + std::to_string(r.maxima) + "/" + std::to_string(r.minima) + "/" +
              std::to_string(r.saddles);
  };
  for (FieldMethod m : kMethods) {
    for (const auto& name : kCageNames) check(*field_for(load_cage(name), m), name + ":" + std::string(to_string(m)));
    for (std::size_t k = 0; k < corpus.size(); ++k)
      check(build_field(std::make_shared<const GridDomain>(corpus[k]), m), "fuzz#" + std::to_string(k) + ":" + std::string(to_string(m)));
  }
  return {dirty == 0, std::to_string(fields - dirty) + "/" + std::to_string(fields) + " fields clean" + first};
}

Outcome cousin_trees(const std::vector<GridDomain>& corpus) {
  int total = 0, ok = 0;
  auto check = [&](const GridDomain& d) {
    ++total;
    const auto r = create_cousin_tree(d, grassfire_maximum(d));
    ok += audit_cousin_tree(r.tree, d).ok;
  };
  for (const auto& name : kCageNames) check(rasterize(load_cage(name), kResolution));
  for (const auto& d : corpus) check(d);
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " trees valid"};
}

Outcome no_inversion() {
  std::ostringstream detail;
  int inverted = 0;
  for (const auto& d : scripted_deformations()) {
    const auto r = deform_sample_grid(make_deformer(d), kSamples);
    inverted += r.jacobian.negative > 0;
    detail << "; " << d.name << " " << r.jacobian.negative << " negative, " << r.jacobian.zero << " zero";
  }
  return {inverted == 0, std::to_string(inverted) + " of 10 deformations invert triangles" + detail.str()};
}

Outcome identity_law() {
  double worst = 0.0, worst_clean = 0.0;
  std::string worst_case;
  for (const auto& name : kCageNames)
    for (FieldMethod m : kMethods) {
      const CagePolygon c = load_cage(name);
      const auto f = field_for(c, m);
      const auto r = deform_sample_grid(Deformer(f, f, BoundaryHomeomorphism(c, c)), kSamples);
      for (int k : r.grid.inside_points) {
        const Vec2 p = r.grid.points[static_cast<std::size_t>(k)], q = r.mapped[static_cast<std::size_t>(k)];
        const double e = std::hypot(q.x - p.x, q.y - p.y);
        if (r.status[static_cast<std::size_t>(k)] != PointStatus::collapsed) worst_clean = std::max(worst_clean, e);
        if (e > worst) worst = e, worst_case = name + ":" + std::string(to_string(m));
      }
    }
  return {worst < 1e-9, "max displacement " + fmt("%.3g", worst) + (worst_case.empty() ? "" : " (" + worst_case + ")") +
                            ", non-collapsed samples " + fmt("%.3g", worst_clean)};
}

Outcome round_trip() {
  std::ostringstream detail;
  double worst = 0.0, worst_fraction = 0.0;
  for (const auto& d : convex_deformations()) {
    const Deformer fwd = make_deformer(d), back = fwd.inverse();
    const SampleGrid g = make_sample_grid(CagePolygon(d.source), kSamples);
    int collapsed = 0;
    for (int k : g.inside_points) {
      const Vec2 p = g.points[static_cast<std::size_t>(k)];
      const MappedPoint a = fwd.map(p);
      if (a.status == PointStatus::collapsed) {
        ++collapsed;
        continue;
      }
      const MappedPoint b = back.map(a.position);
      if (b.status == PointStatus::collapsed) {
        ++collapsed;
        continue;
      }
      worst = std::max(worst, std::hypot(b.position.x - p.x, b.position.y - p.y));
    }
    const double fraction = static_cast<double>(collapsed) / static_cast<double>(g.inside_points.size());
    worst_fraction = std::max(worst_fraction, fraction);
    detail << d.name << " " << fmt("%.1f%%", 100 * fraction) << " ";
  }
  return {worst < 1e-6 && worst_fraction < 0.02,
          "non-collapsed error " + fmt("%.3g", worst) + "; collapsed: " + detail.str()};
}

double interpolate(const ScalarField& f, Vec2 g) {
  const GridDomain& d = *f.domain;
  const int ci = std::clamp(static_cast<int>(std::floor(g.x)), 0, d.cells_x() - 1);
  const int cj = std::clamp(static_cast<int>(std::floor(g.y)), 0, d.cells_y() - 1);
  for (Half h : {Half::lower, Half::upper}) {
    const auto v = triangle_vertices({ci, cj, h});
    const Vec2 a(v[0].i, v[0].j), b(v[1].i, v[1].j), c(v[2].i, v[2].j);
    const double area = cross(b - a, c - a);
    const double la = cross(b - g, c - g) / area, lb = cross(c - g, a - g) / area, lc = 1.0 - la - lb;
    if (la < -1e-9 || lb < -1e-9 || lc < -1e-9) continue;
    return la * f.value(d.index(v[0])) + lb * f.value(d.index(v[1])) + lc * f.value(d.index(v[2]));
  }
  return std::nan("");
}

struct TracePair {
  std::shared_ptr<const ScalarField> field;
  Vec2 start;
  Direction dir;
};

// 10^3 (field, start) pairs over the fuzz corpus, starts in triangles incident to an inside vertex.
std::vector<TracePair> trace_pairs(const std::vector<GridDomain>& corpus) {
  std::mt19937_64 rng(1000003);
  std::vector<std::shared_ptr<const ScalarField>> fields;
  std::vector<TracePair> out;
  for (int k = 0; k < 1000; ++k) {
    const auto& d = corpus[static_cast<std::size_t>(k) % corpus.size()];
    const FieldMethod m = kMethods[(k / corpus.size()) % 3];
    auto f = std::make_shared<const ScalarField>(build_field(std::make_shared<const GridDomain>(d), m));
    std::vector<int> inside;
    for (int v = 0; v < d.vertex_count(); ++v)
      if (d.cls(v) == VertexClass::inside) inside.push_back(v);
    const VertexId v = d.vertex(inside[std::uniform_int_distribution<std::size_t>(0, inside.size() - 1)(rng)]);
    std::uniform_real_distribution<double> u(-0.999, 0.999);
    Vec2 o;
    do o = Vec2(u(rng), u(rng));
    while (std::abs(o.x - o.y) >= 0.999);
    if (k % 10 == 0) o = Vec2(0, 0);
    if (k % 10 == 1) o = Vec2(0.5, 0.0);
    out.push_back({f, Vec2(v.i, v.j) + o, k % 2 ? Direction::descent : Direction::ascent});
  }
  return out;
}

Outcome tracer_oracle(const std::vector<TracePair>& pairs) {
  int mismatched = 0, position = 0;
  for (const auto& p : pairs) {
    const auto ref = testing::reference_trace(*p.field, p.start, p.dir);
    testing::RefOutcome outcome = testing::RefOutcome::finished;
    IntegralCurve c;
    try {
      c = trace(*p.field, p.start, p.dir);
    } catch (const ZeroGradient&) {
      outcome = testing::RefOutcome::zero_gradient;
    } catch (const ExitedDomain&) {
      outcome = testing::RefOutcome::exited;
    } catch (const StepLimitExceeded&) {
      outcome = testing::RefOutcome::step_limit;
    }
    bool same = outcome == ref.outcome && c.points.size() == ref.locations.size();
    for (std::size_t k = 0; same && k < c.points.size(); ++k) {
      same = c.points[k].location == ref.locations[k];
      const Vec2 diff = c.points[k].position - ref.points[k];
      position += same && std::hypot(diff.x, diff.y) > 1e-9;
    }
    mismatched += !same;
  }

  // Outgoing-edge lookup against brute-force ray intersection.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0), ang(0.0, 2 * M_PI);
  int table_checked = 0, table_wrong = 0;
  while (table_checked < 100000) {
    const TriangleRef t{0, 0, table_checked % 2 ? Half::upper : Half::lower};
    const int in = 1 + table_checked % 3;
    const auto [a, b] = triangle_edge(t, in).endpoints();
    const VertexId ov = opposite_vertex(t, in);
    const Vec2 A(a.i, a.j), B(b.i, b.j), O(ov.i, ov.j);
    const Vec2 p = A + (0.05 + 0.9 * u(rng)) * (B - A);
    const double th = ang(rng);
    const Vec2 w(std::cos(th), std::sin(th)), inward = O - p;
    if (cross(B - A, w) * cross(B - A, inward) <= 0) continue;
    if (std::abs(cross(w, inward)) < 1e-6 * norm(inward)) continue;
    int exit = -1;
    for (int label = 1; label <= 3; ++label) {
      if (label == in) continue;
      const auto [x, y] = triangle_edge(t, label).endpoints();
      const Vec2 X(x.i, x.j), Y(y.i, y.j);
      const double den = cross(w, Y - X);
      if (den == 0) continue;
      const double s = cross(X - p, Y - X) / den, r = cross(X - p, w) / den;
      if (s > 0 && r >= 0 && r <= 1) exit = label;
    }
    table_wrong += next_edge(in, cross(w, inward) > 0 ? 1 : -1) != exit;
    ++table_checked;
  }
  return {mismatched == 0 && position == 0 && table_wrong == 0,
          std::to_string(pairs.size() - static_cast<std::size_t>(mismatched)) + "/" + std::to_string(pairs.size()) +
              " sequences identical, " + std::to_string(position) + " positions off by > 1e-9; edge table " +
              std::to_string(table_checked - table_wrong) + "/" + std::to_string(table_checked)};
}

Outcome termination(const std::vector<TracePair>& pairs) {
  int curves = 0, over = 0, flat = 0, failed = 0;
  auto check = [&](const ScalarField& f, Vec2 start, Direction dir) {
    ++curves;
    try {
      const IntegralCurve c = trace(f, start, dir);
      over += c.steps > step_limit(*f.domain);
      if (dir != Direction::ascent) return;
      for (std::size_t k = 1; k < c.points.size(); ++k)
        if (!(interpolate(f, c.points[k].grid) > interpolate(f, c.points[k - 1].grid))) {
          ++flat;
          break;
        }
    } catch (const Error&) {
      ++failed;
    }
  };
  for (const auto& p : pairs) check(*p.field, p.start, p.dir);
  for (const auto& name : kCageNames)
    for (FieldMethod m : kMethods) {
      const CagePolygon cage = load_cage(name);
      const auto f = field_for(cage, m);
      for (std::size_t s = 0; s < cage.size(); ++s)
        for (double b : {0.1, 0.5, 0.9}) check(*f, cage.point_on_segment(s, b), Direction::ascent);
      const SampleGrid g = make_sample_grid(cage, 16);
      for (int k : g.inside_points) check(*f, g.points[static_cast<std::size_t>(k)], Direction::descent);
    }
  return {over == 0 && flat == 0 && failed == 0,
          std::to_string(curves) + " curves; " + std::to_string(over) + " over the step bound, " + std::to_string(flat) +
              " ascents not strictly increasing, " + std::to_string(failed) + " failed"};
}

Outcome performance(double& seconds) {
  const auto defs = scripted_deformations();
  const Deformation& d = defs[1];  // u-bend
  const auto t0 = Clock::now();
  const Deformer def = make_deformer(d);
  const ImageWarp w = deform_image(def, checkerboard(256, 256, 8), {.threads = 1});
  seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return {seconds < 300.0, "256x256 u-bend warp at resolution 50, single thread: " + fmt("%.2f s", seconds) +
                               " (target 30 s, gate 300 s; " + std::to_string(w.mapped_pixels) + " pixels mapped)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance runner: one PASS/FAIL line per criterion"};
  bool strict = false;
  std::string report_path;
  app.add_flag("--strict", strict, "Exit 1 when any criterion fails");
  app.add_option("--report", report_path, "Also write the result lines to this file");
  CLI11_PARSE(app, argc, argv);

  std::vector<GridDomain> corpus;
  std::vector<TracePair> pairs;
  double perf_s = 0.0;
  const std::vector<Criterion> criteria{
      {"critical-points", 60, [&] { return critical_points(corpus); }},
      {"cousin-tree", 30, [&] { return cousin_trees(corpus); }},
      {"no-inversion", 300, no_inversion},
      {"identity-law", 30, identity_law},
      {"round-trip", 300, round_trip},
      {"tracer-oracle", 300, [&] { return tracer_oracle(pairs); }},
      {"termination-monotonicity", 300, [&] { return termination(pairs); }},
      {"performance", 300, [&] { return performance(perf_s); }},
  };

  std::ostringstream lines;
  int failed = 0;
  try {
    corpus = fuzz_domains();
    pairs = trace_pairs(corpus);
    for (const auto& c : criteria) {
      const auto t0 = Clock::now();
      Outcome o = c.run();
      const double s = std::chrono::duration<double>(Clock::now() - t0).count();
      if (s > c.budget_s) {
        o.pass = false;
        o.detail += "; over the " + fmt("%.0f s", c.budget_s) + " budget";
      }
      failed += !o.pass;
      std::string line = std::string(o.pass ? "PASS" : "FAIL") + "  " + c.id + "  " + o.detail + "  [" + fmt("%.1f s", s) + "]";
      std::cout << line << std::endl;
      lines << line << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "acceptance run aborted: " << e.what() << "\n";
    return 2;
  }
  const std::string summary = std::to_string(criteria.size() - static_cast<std::size_t>(failed)) + "/" +
                              std::to_string(criteria.size()) + " criteria pass";
  std::cout << summary << std::endl;
  lines << summary << "\n";
  if (!report_path.empty()) std::ofstream(report_path) << lines.str();
  return strict && failed > 0 ? 1 : 0;
}
