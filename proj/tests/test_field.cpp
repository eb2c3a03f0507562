#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <map>
#include <random>

#include "cages.hpp"
#include "doctest.h"
#include "fuzz.hpp"
#include "icc/errors.hpp"

using namespace icc;

namespace {

constexpr int kDi[4] = {1, -1, 0, 0}, kDj[4] = {0, 0, 1, -1};

// Grassfire by repeated erosion: layer k holds the vertices removed in the k-th pass.
std::vector<int> erosion_layers(const GridDomain& d) {
  std::vector<int> layer(static_cast<std::size_t>(d.vertex_count()), 0);
  std::vector<std::uint8_t> alive(layer.size(), 0);
  int remaining = 0;
  for (int k = 0; k < d.vertex_count(); ++k)
    if (d.cls(k) == VertexClass::inside) alive[static_cast<std::size_t>(k)] = 1, ++remaining;
  for (int pass = 1; remaining > 0; ++pass) {
    std::vector<int> burn;
    for (int k = 0; k < d.vertex_count(); ++k) {
      if (!alive[static_cast<std::size_t>(k)]) continue;
      const VertexId v = d.vertex(k);
      for (int n = 0; n < 4; ++n) {
        const int i = v.i + kDi[n], j = v.j + kDj[n];
        if (!d.in_grid(i, j) || !alive[static_cast<std::size_t>(d.index(i, j))]) {
          burn.push_back(k);
          break;
        }
      }
    }
    for (int k : burn) alive[static_cast<std::size_t>(k)] = 0, layer[static_cast<std::size_t>(k)] = pass;
    remaining -= static_cast<int>(burn.size());
  }
  return layer;
}

std::vector<int> bfs_distance(const GridDomain& d, int root) {
  std::vector<int> dist(static_cast<std::size_t>(d.vertex_count()), -1);
  std::deque<int> q{root};
  dist[static_cast<std::size_t>(root)] = 0;
  while (!q.empty()) {
    const int k = q.front();
    q.pop_front();
    const VertexId v = d.vertex(k);
    for (int n = 0; n < 4; ++n) {
      const int i = v.i + kDi[n], j = v.j + kDj[n];
      if (!d.is_inside(i, j)) continue;
      const int u = d.index(i, j);
      if (dist[static_cast<std::size_t>(u)] >= 0) continue;
      dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(k)] + 1;
      q.push_back(u);
    }
  }
  return dist;
}

// Energy gradient with respect to every vertex value, written out from the energy definitions.
std::vector<double> energy_gradient(const ScalarField& f, Energy energy) {
  const GridDomain& d = *f.domain;
  std::vector<double> g(static_cast<std::size_t>(d.vertex_count()), 0.0);
  if (energy == Energy::laplace) {
    for (int k = 0; k < d.vertex_count(); ++k) {
      if (d.cls(k) == VertexClass::outside) continue;
      const VertexId v = d.vertex(k);
      for (int n = 0; n < 4; ++n)
        if (d.has_value(v.i + kDi[n], v.j + kDj[n])) g[static_cast<std::size_t>(k)] += 2 * (f.value(k) - f.value(v.i + kDi[n], v.j + kDj[n]));
    }
  } else {
    for (int k = 0; k < d.vertex_count(); ++k) {
      if (d.cls(k) != VertexClass::inside) continue;
      const VertexId v = d.vertex(k);
      double lap = -4 * f.value(k);
      for (int n = 0; n < 4; ++n) lap += f.value(v.i + kDi[n], v.j + kDj[n]);
      g[static_cast<std::size_t>(k)] += 2 * lap * -4;
      for (int n = 0; n < 4; ++n) g[static_cast<std::size_t>(d.index(v.i + kDi[n], v.j + kDj[n]))] += 2 * lap;
    }
  }
  return g;
}

struct KktCertificate {
  double stationarity = 0.0;   ///< residual of grad E - sum lambda grad(c), relative
  double min_multiplier = 0.0;
  int active = 0;
};

// Fits multipliers on the active tree constraints by dense least squares.
KktCertificate kkt(const ScalarField& f, Energy energy) {
  const GridDomain& d = *f.domain;
  const auto grad = energy_gradient(f, energy);
  std::map<int, int> row;
  for (int k = 0; k < d.vertex_count(); ++k)
    if (d.cls(k) == VertexClass::inside && k != f.maximum) row.emplace(k, static_cast<int>(row.size()));
  std::vector<std::pair<int, int>> active;
  for (const auto& [p, c] : f.tree->edges)
    if (f.value(p) - f.value(c) - f.epsilon < 1e-7) active.emplace_back(p, c);

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(row.size()), static_cast<Eigen::Index>(active.size()));
  Eigen::VectorXd b(static_cast<Eigen::Index>(row.size()));
  for (const auto& [k, r] : row) b[r] = grad[static_cast<std::size_t>(k)];
  for (std::size_t e = 0; e < active.size(); ++e) {
    if (auto it = row.find(active[e].first); it != row.end()) A(it->second, static_cast<Eigen::Index>(e)) += 1.0;
    if (auto it = row.find(active[e].second); it != row.end()) A(it->second, static_cast<Eigen::Index>(e)) -= 1.0;
  }
  KktCertificate out;
  out.active = static_cast<int>(active.size());
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(active.size()));
  if (!active.empty()) lambda = A.completeOrthogonalDecomposition().solve(b);
  out.stationarity = (A * lambda - b).lpNorm<Eigen::Infinity>() / std::max(1.0, b.lpNorm<Eigen::Infinity>());
  out.min_multiplier = active.empty() ? 0.0 : lambda.minCoeff() / std::max(1.0, b.lpNorm<Eigen::Infinity>());
  return out;
}

ScalarField manual_field(int n, const std::vector<std::pair<VertexId, double>>& values, int maximum_i, int maximum_j) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>((n + 1) * (n + 1)), 0);
  for (int j = 2; j <= n - 2; ++j)
    for (int i = 2; i <= n - 2; ++i) mask[static_cast<std::size_t>(j * (n + 1) + i)] = 1;
  auto d = std::make_shared<const GridDomain>(GridDomain::from_inside_mask(n, n, mask));
  ScalarField f;
  f.domain = d;
  f.values.assign(static_cast<std::size_t>(d->vertex_count()), std::nan(""));
  for (int k = 0; k < d->vertex_count(); ++k)
    if (d->cls(k) != VertexClass::outside) f.values[static_cast<std::size_t>(k)] = -100.0 + 0.001 * k;
  for (const auto& [v, x] : values) f.values[static_cast<std::size_t>(d->index(v))] = x;
  f.maximum = d->index(maximum_i, maximum_j);
  return f;
}

}  // namespace

TEST_CASE("method names round-trip") {
  for (auto m : {FieldMethod::l1, FieldMethod::laplace_constrained, FieldMethod::bilaplace_constrained,
                 FieldMethod::laplace_unconstrained})
    CHECK(parse_field_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_field_method("harmonic"), ParseError);
}

TEST_CASE("grassfire layers match repeated erosion") {
  auto corpus = testing::fuzz_corpus(60, 99);
  for (const auto& name : testing::cage_names()) corpus.push_back(rasterize(testing::load_cage(name), 40));
  for (const auto& d : corpus) {
    const auto layers = grassfire_layers(d);
    const auto oracle = erosion_layers(d);
    CHECK(layers == oracle);
    const int m = grassfire_maximum(d);
    const int top = *std::max_element(oracle.begin(), oracle.end());
    CHECK(oracle[static_cast<std::size_t>(m)] == top);
    // Ties go to the lexicographically smallest (i, j).
    for (int k = 0; k < d.vertex_count(); ++k)
      if (oracle[static_cast<std::size_t>(k)] == top) {
        const VertexId a = d.vertex(k), b = d.vertex(m);
        CHECK((b.i < a.i || (b.i == a.i && b.j <= a.j)));
      }
  }
}

TEST_CASE("cousin tree generations are BFS distances and the audit passes") {
  for (const auto& d : testing::fuzz_corpus(200)) {
    const int m = grassfire_maximum(d);
    const auto r = create_cousin_tree(d, m);
    const auto dist = bfs_distance(d, m);
    for (int k = 0; k < d.vertex_count(); ++k) {
      if (d.cls(k) != VertexClass::inside) continue;
      CHECK(r.tree.generation[static_cast<std::size_t>(k)] == dist[static_cast<std::size_t>(k)]);
      CHECK(r.l1_values[static_cast<std::size_t>(k)] == 1.0 - dist[static_cast<std::size_t>(k)]);
    }
    // Every ring vertex is a child of each inside axis neighbour.
    int ring_edges = 0;
    for (const auto& [p, c] : r.tree.edges) ring_edges += d.cls(c) == VertexClass::ring;
    int expected = 0;
    for (int k = 0; k < d.vertex_count(); ++k) {
      if (d.cls(k) != VertexClass::ring) continue;
      const VertexId v = d.vertex(k);
      for (int n = 0; n < 4; ++n) expected += d.is_inside(v.i + kDi[n], v.j + kDj[n]);
    }
    CHECK(ring_edges == expected);
    const auto audit = audit_cousin_tree(r.tree, d);
    CHECK(audit.ok);
    CHECK(audit.violations.empty());
  }
}

TEST_CASE("tree audit reports tampering") {
  const GridDomain d = rasterize(testing::load_cage("square"), 12);
  auto t = create_cousin_tree(d, grassfire_maximum(d)).tree;
  // Re-parent one vertex to a non-neighbour.
  for (int k = 0; k < d.vertex_count(); ++k)
    if (d.cls(k) == VertexClass::inside && k != t.root && t.generation[static_cast<std::size_t>(k)] >= 3) {
      t.parent[static_cast<std::size_t>(k)] = t.root;
      break;
    }
  const auto audit = audit_cousin_tree(t, d);
  CHECK_FALSE(audit.ok);
  CHECK_FALSE(audit.violations.empty());
}

TEST_CASE("L1 field on the unit square at resolution 4") {
  auto d = std::make_shared<const GridDomain>(rasterize(CagePolygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}), 4));
  const ScalarField f = build_field(d, FieldMethod::l1);
  CHECK(f.value(2, 2) == 1.0);
  CHECK(f.value(1, 2) == 0.0);
  CHECK(f.value(1, 1) == -1.0);
  // Ring vertices lie below every inside 8-neighbour.
  for (int k = 0; k < d->vertex_count(); ++k) {
    if (d->cls(k) != VertexClass::ring) continue;
    const VertexId v = d->vertex(k);
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di)
        if (d->is_inside(v.i + di, v.j + dj)) CHECK(f.value(k) < f.value(v.i + di, v.j + dj));
  }
  CHECK(audit_critical_points(f).clean());
}

TEST_CASE("constrained solutions satisfy the tree inequalities and KKT conditions") {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    auto d = std::make_shared<const GridDomain>(testing::random_ball_like_domain(rng, 12));
    for (Energy e : {Energy::laplace, Energy::bilaplace}) {
      const int m = grassfire_maximum(*d);
      auto tree = std::make_shared<const CousinTree>(create_cousin_tree(*d, m).tree);
      const ScalarField f = solve_constrained(d, tree, e);
      CHECK(max_tree_violation(f) <= 1e-9);
      CHECK(f.value(m) == 1.0);
      for (int k = 0; k < d->vertex_count(); ++k)
        if (d->cls(k) == VertexClass::ring) CHECK(f.value(k) == 0.0);
      const auto cert = kkt(f, e);
      CAPTURE(trial);
      CHECK(cert.stationarity < 1e-5);
      CHECK(cert.min_multiplier > -1e-5);
      ++checked;
    }
  }
  CHECK(checked == 60);
}

TEST_CASE("unconstrained Laplace matches a dense harmonic solve") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto d = std::make_shared<const GridDomain>(testing::random_ball_like_domain(rng, 14));
    const int m = grassfire_maximum(*d);
    const ScalarField f = solve_unconstrained_laplace(d, m);
    std::map<int, int> var;
    for (int k = 0; k < d->vertex_count(); ++k)
      if (d->cls(k) == VertexClass::inside && k != m) var.emplace(k, static_cast<int>(var.size()));
    const auto n = static_cast<Eigen::Index>(var.size());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (const auto& [k, r] : var) {
      const VertexId v = d->vertex(k);
      for (int q = 0; q < 4; ++q) {
        const int i = v.i + kDi[q], j = v.j + kDj[q];
        L(r, r) += 1.0;
        const int u = d->index(i, j);
        if (auto it = var.find(u); it != var.end()) L(r, it->second) -= 1.0;
        else if (u == m) rhs[r] += 1.0;
      }
    }
    const Eigen::VectorXd x = L.partialPivLu().solve(rhs);
    for (const auto& [k, r] : var) CHECK(f.value(k) == doctest::Approx(x[r]).epsilon(1e-9));
    CHECK(audit_critical_points(f).maxima == 1);
  }
}

TEST_CASE("critical point classification on hand-built fields") {
  // f = (i-3)^2 - (j-3)^2 around (3,3) is a saddle.
  std::vector<std::pair<VertexId, double>> saddle;
  for (int j = 2; j <= 4; ++j)
    for (int i = 2; i <= 4; ++i) saddle.push_back({{i, j}, (i - 3) * (i - 3) - (j - 3) * (j - 3) + 0.0});
  saddle.push_back({{5, 5}, 50.0});
  ScalarField f = manual_field(7, saddle, 5, 5);
  auto r = audit_critical_points(f);
  CHECK(r.kinds[static_cast<std::size_t>(f.domain->index(3, 3))] == CriticalKind::saddle);

  // A pit at (3,3).
  std::vector<std::pair<VertexId, double>> pit;
  for (int j = 2; j <= 4; ++j)
    for (int i = 2; i <= 4; ++i) pit.push_back({{i, j}, 1.0});
  pit.push_back({{3, 3}, 0.0});
  f = manual_field(7, pit, 5, 5);
  r = audit_critical_points(f);
  CHECK(r.kinds[static_cast<std::size_t>(f.domain->index(3, 3))] == CriticalKind::minimum);
  CHECK(r.minima >= 1);
  CHECK_FALSE(r.clean());

  // Ties are broken by vertex index: on a constant plateau only the largest index is a maximum.
  std::vector<std::pair<VertexId, double>> flat;
  for (int j = 2; j <= 5; ++j)
    for (int i = 2; i <= 5; ++i) flat.push_back({{i, j}, 7.0});
  f = manual_field(7, flat, 5, 5);
  r = audit_critical_points(f);
  CHECK(r.maxima == 1);
  CHECK(r.maximum_vertices.front() == f.domain->index(5, 5));
}

TEST_CASE("fields on fuzzed domains have one maximum and no other critical points") {
  const auto corpus = testing::fuzz_corpus(50, 4242, 30);
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    auto d = std::make_shared<const GridDomain>(corpus[k]);
    for (auto m : {FieldMethod::l1, FieldMethod::laplace_constrained, FieldMethod::bilaplace_constrained}) {
      const ScalarField f = build_field(d, m);
      const auto r = audit_critical_points(f);
      CAPTURE(k);
      CAPTURE(to_string(m));
      CHECK(r.maxima == 1);
      CHECK(r.minima == 0);
      CHECK(r.saddles == 0);
      CHECK(r.maximum_vertices.front() == f.maximum);
    }
  }
}

TEST_CASE("constrained Laplace beats a feasible linear-in-generation field") {
  for (const auto& name : testing::cage_names()) {
    auto d = std::make_shared<const GridDomain>(rasterize(testing::load_cage(name), 30));
    const ScalarField lap = build_field(d, FieldMethod::laplace_constrained);
    CHECK(dirichlet_energy(lap) == doctest::Approx(lap.stats.energy).epsilon(1e-6));
    // Root at 1, ring at 0 and equal drops per generation satisfy every tree inequality.
    ScalarField lin = lap;
    int depth = 0;
    for (int g : lap.tree->generation) depth = std::max(depth, g);
    for (int k = 0; k < d->vertex_count(); ++k)
      if (d->cls(k) == VertexClass::inside)
        lin.values[static_cast<std::size_t>(k)] = 1.0 - static_cast<double>(lap.tree->generation[static_cast<std::size_t>(k)]) / (depth + 1);
    CAPTURE(name);
    CHECK(max_tree_violation(lin) <= 0.0);
    CHECK(dirichlet_energy(lap) <= dirichlet_energy(lin) + 1e-9);
  }
}
