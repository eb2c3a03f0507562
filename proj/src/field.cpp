#include "icc/field.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <span>

#include "icc/errors.hpp"
#include "icc/qp.hpp"

namespace icc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kAxisDi[4] = {-1, 1, 0, 0};
constexpr int kAxisDj[4] = {0, 0, -1, 1};

bool lex_less(VertexId a, VertexId b) { return a.i != b.i ? a.i < b.i : a.j < b.j; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string_view to_string(FieldMethod m) {
  switch (m) {
    case FieldMethod::l1: return "l1";
    case FieldMethod::laplace_constrained: return "laplace";
    case FieldMethod::bilaplace_constrained: return "bilaplace";
    case FieldMethod::laplace_unconstrained: return "laplace-u";
  }
  return "l1";
}

FieldMethod parse_field_method(std::string_view s) {
  if (s == "l1") return FieldMethod::l1;
  if (s == "laplace") return FieldMethod::laplace_constrained;
  if (s == "bilaplace") return FieldMethod::bilaplace_constrained;
  if (s == "laplace-u") return FieldMethod::laplace_unconstrained;
  throw ParseError("unknown field method '" + std::string(s) + "' (expected l1|laplace|bilaplace|laplace-u)");
}

std::vector<int> grassfire_layers(const GridDomain& d) {
  std::vector<int> layer(static_cast<std::size_t>(d.vertex_count()), 0);
  std::deque<int> queue;
  // Layer 1 burns first: inside vertices touching a non-inside 4-neighbour.
  for (int k = 0; k < d.vertex_count(); ++k) {
    if (d.cls(k) != VertexClass::inside) continue;
    const VertexId v = d.vertex(k);
    for (int n = 0; n < 4; ++n) {
      if (!d.is_inside(v.i + kAxisDi[n], v.j + kAxisDj[n])) {
        layer[static_cast<std::size_t>(k)] = 1;
        queue.push_back(k);
        break;
      }
    }
  }
  while (!queue.empty()) {
    const int k = queue.front();
    queue.pop_front();
    const VertexId v = d.vertex(k);
    for (int n = 0; n < 4; ++n) {
      const int ni = v.i + kAxisDi[n], nj = v.j + kAxisDj[n];
      if (!d.is_inside(ni, nj)) continue;
      const auto id = static_cast<std::size_t>(d.index(ni, nj));
      if (layer[id] != 0) continue;
      layer[id] = layer[static_cast<std::size_t>(k)] + 1;
      queue.push_back(static_cast<int>(id));
    }
  }
  return layer;
}

int grassfire_maximum(const GridDomain& d) {
  const auto layer = grassfire_layers(d);
  int best = -1;
  for (int k = 0; k < d.vertex_count(); ++k) {
    if (d.cls(k) != VertexClass::inside) continue;
    if (best < 0 || layer[static_cast<std::size_t>(k)] > layer[static_cast<std::size_t>(best)] ||
        (layer[static_cast<std::size_t>(k)] == layer[static_cast<std::size_t>(best)] &&
         lex_less(d.vertex(k), d.vertex(best))))
      best = k;
  }
  if (best < 0) throw EmptyDomain("domain has no inside vertices");
  return best;
}

CousinTreeResult create_cousin_tree(const GridDomain& d, int maximum) {
  if (maximum < 0 || maximum >= d.vertex_count() || d.cls(maximum) != VertexClass::inside)
    throw EmptyDomain("cousin tree root must be an inside vertex");

  CousinTreeResult out;
  CousinTree& t = out.tree;
  const auto n = static_cast<std::size_t>(d.vertex_count());
  t.root = maximum;
  t.parent.assign(n, -1);
  t.generation.assign(n, -1);
  out.l1_values.assign(n, kNaN);

  std::vector<std::uint8_t> visited(n, 0);
  visited[static_cast<std::size_t>(maximum)] = 1;
  t.generation[static_cast<std::size_t>(maximum)] = 0;
  out.l1_values[static_cast<std::size_t>(maximum)] = 1.0;

  std::vector<int> frontier{maximum};
  int gen = 0;
  while (!frontier.empty()) {
    std::sort(frontier.begin(), frontier.end(), [&](int a, int b) { return lex_less(d.vertex(a), d.vertex(b)); });
    std::vector<int> next;
    for (int axis = 0; axis < 2; ++axis) {
      for (int v : frontier) {
        const VertexId p = d.vertex(v);
        for (int side = 0; side < 2; ++side) {
          const int dir = axis * 2 + side;
          const int ni = p.i + kAxisDi[dir], nj = p.j + kAxisDj[dir];
          const VertexClass c = d.cls(ni, nj);
          if (c == VertexClass::outside) continue;
          const int nb = d.index(ni, nj);
          if (c == VertexClass::ring) {
            // Ring vertices never join the frontier, so each inside neighbour becomes a parent.
            t.edges.emplace_back(v, nb);
            continue;
          }
          if (visited[static_cast<std::size_t>(nb)]) continue;
          visited[static_cast<std::size_t>(nb)] = 1;
          t.edges.emplace_back(v, nb);
          t.parent[static_cast<std::size_t>(nb)] = v;
          t.generation[static_cast<std::size_t>(nb)] = gen + 1;
          out.l1_values[static_cast<std::size_t>(nb)] = out.l1_values[static_cast<std::size_t>(v)] - 1.0;
          next.push_back(nb);
        }
      }
    }
    frontier = std::move(next);
    ++gen;
  }
  return out;
}

CousinTreeAudit audit_cousin_tree(const CousinTree& t, const GridDomain& d) {
  CousinTreeAudit audit;
  auto fail = [&](std::string msg) {
    audit.ok = false;
    if (audit.violations.size() < 64) audit.violations.push_back(std::move(msg));
  };
  auto name = [&](int k) {
    const VertexId v = d.vertex(k);
    return "(" + std::to_string(v.i) + "," + std::to_string(v.j) + ")";
  };
  auto axis_neighbours = [&](int a, int b) {
    const VertexId u = d.vertex(a), v = d.vertex(b);
    return std::abs(u.i - v.i) + std::abs(u.j - v.j) == 1;
  };
  const auto n = static_cast<std::size_t>(d.vertex_count());
  if (t.parent.size() != n || t.generation.size() != n) {
    fail("tree arrays do not match the domain size");
    return audit;
  }
  if (t.root < 0 || static_cast<std::size_t>(t.root) >= n || d.cls(t.root) != VertexClass::inside) {
    fail("root is not an inside vertex");
    return audit;
  }

  std::set<std::pair<int, int>> edge_set(t.edges.begin(), t.edges.end());
  for (const auto& [p, c] : t.edges) {
    if (d.cls(p) != VertexClass::inside) fail("edge parent " + name(p) + " is not inside");
    if (!axis_neighbours(p, c)) fail("edge " + name(p) + "->" + name(c) + " is not a grid edge");
    if (d.cls(c) == VertexClass::inside && t.parent[static_cast<std::size_t>(c)] != p)
      fail("edge " + name(p) + "->" + name(c) + " disagrees with parent array");
    if (d.cls(c) == VertexClass::outside) fail("edge child " + name(c) + " is outside the ring");
  }

  // Parent chains must reach the root.
  for (int k = 0; k < d.vertex_count(); ++k) {
    if (d.cls(k) != VertexClass::inside || k == t.root) continue;
    int cur = k, steps = 0;
    while (cur != t.root && cur >= 0 && steps <= d.vertex_count()) {
      const int p = t.parent[static_cast<std::size_t>(cur)];
      if (p < 0 || d.cls(p) != VertexClass::inside || !axis_neighbours(p, cur)) {
        cur = -1;
        break;
      }
      cur = p;
      ++steps;
    }
    if (cur != t.root) fail("vertex " + name(k) + " has no parent path to the root");
  }

  for (int k = 0; k < d.vertex_count(); ++k) {
    if (d.cls(k) != VertexClass::inside) continue;
    const VertexId v = d.vertex(k);
    // Each pair is visited once via its +x / +y member; ring pairs via the inside member.
    for (int dir = 0; dir < 4; ++dir) {
      const int ni = v.i + kAxisDi[dir], nj = v.j + kAxisDj[dir];
      const VertexClass c = d.cls(ni, nj);
      const int nb = d.index(ni, nj);
      if (c == VertexClass::ring) {
        ++audit.pairs_checked;
        if (!edge_set.count({k, nb})) fail("ring vertex " + name(nb) + " is not a child of " + name(k));
        continue;
      }
      if (c != VertexClass::inside || nb < k) continue;
      ++audit.pairs_checked;
      const int pk = t.parent[static_cast<std::size_t>(k)];
      const int pn = t.parent[static_cast<std::size_t>(nb)];
      if (pk == nb || pn == k) continue;
      if (pk >= 0 && pn >= 0 && axis_neighbours(pk, pn)) continue;
      fail("pair " + name(k) + " " + name(nb) + " is neither parent-child nor cousins");
    }

    // Lemma: a parent in direction +d implies a child (or the outside) in direction -d.
    const int p = t.parent[static_cast<std::size_t>(k)];
    if (p < 0) continue;
    const VertexId pv = d.vertex(p);
    const int oi = 2 * v.i - pv.i, oj = 2 * v.j - pv.j;
    const VertexClass oc = d.cls(oi, oj);
    if (oc == VertexClass::inside && t.parent[static_cast<std::size_t>(d.index(oi, oj))] != k)
      fail("vertex " + name(k) + " does not continue its parent direction to " + name(d.index(oi, oj)));
  }
  return audit;
}

ScalarField assign_l1(std::shared_ptr<const GridDomain> domain, std::shared_ptr<const CousinTree> tree) {
  const GridDomain& d = *domain;
  ScalarField f;
  f.method = FieldMethod::l1;
  f.maximum = tree->root;
  f.values.assign(static_cast<std::size_t>(d.vertex_count()), kNaN);
  for (int k = 0; k < d.vertex_count(); ++k)
    if (d.cls(k) == VertexClass::inside) f.values[static_cast<std::size_t>(k)] = 1.0 - tree->generation[static_cast<std::size_t>(k)];
  // Ring vertices sit one unit below every inside 8-neighbour (diagonals included).
  for (int k = 0; k < d.vertex_count(); ++k) {
    if (d.cls(k) != VertexClass::ring) continue;
    const VertexId v = d.vertex(k);
    double lo = std::numeric_limits<double>::infinity();
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di)
        if (d.is_inside(v.i + di, v.j + dj)) lo = std::min(lo, f.value(d.index(v.i + di, v.j + dj)));
    f.values[static_cast<std::size_t>(k)] = lo - 1.0;
  }
  f.domain = std::move(domain);
  f.tree = std::move(tree);
  return f;
}

namespace {

// Least-squares form of the energies: E(x) = |R x + k|^2 over the free (inside, non-root) vertices.
struct EnergyTerms {
  Eigen::SparseMatrix<double> R;
  Eigen::VectorXd k;
};

struct FreeMap {
  std::vector<int> var;      // vertex -> variable or -1
  std::vector<double> fixed; // vertex -> pinned value (ring 0, root 1)
  int count = 0;
};

FreeMap make_free_map(const GridDomain& d, int maximum) {
  FreeMap m;
  m.var.assign(static_cast<std::size_t>(d.vertex_count()), -1);
  m.fixed.assign(static_cast<std::size_t>(d.vertex_count()), 0.0);
  for (int v = 0; v < d.vertex_count(); ++v) {
    if (d.cls(v) == VertexClass::inside && v != maximum) m.var[static_cast<std::size_t>(v)] = m.count++;
  }
  m.fixed[static_cast<std::size_t>(maximum)] = 1.0;
  return m;
}

EnergyTerms make_energy(const GridDomain& d, const FreeMap& m, Energy energy) {
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> consts;
  auto add_term = [&](int row, int vertex, double coef) {
    const int var = m.var[static_cast<std::size_t>(vertex)];
    if (var >= 0)
      trips.emplace_back(row, var, coef);
    else
      consts[static_cast<std::size_t>(row)] += coef * m.fixed[static_cast<std::size_t>(vertex)];
  };
  int rows = 0;
  if (energy == Energy::laplace) {
    for (int v = 0; v < d.vertex_count(); ++v) {
      if (d.cls(v) == VertexClass::outside) continue;
      const VertexId p = d.vertex(v);
      for (auto [di, dj] : {std::pair{1, 0}, std::pair{0, 1}}) {
        if (!d.has_value(p.i + di, p.j + dj)) continue;
        const int u = d.index(p.i + di, p.j + dj);
        if (m.var[static_cast<std::size_t>(v)] < 0 && m.var[static_cast<std::size_t>(u)] < 0) continue;
        consts.push_back(0.0);
        add_term(rows, v, 1.0);
        add_term(rows, u, -1.0);
        ++rows;
      }
    }
  } else {
    for (int v = 0; v < d.vertex_count(); ++v) {
      if (d.cls(v) != VertexClass::inside) continue;
      const VertexId p = d.vertex(v);
      consts.push_back(0.0);
      add_term(rows, v, -4.0);
      for (int n = 0; n < 4; ++n) add_term(rows, d.index(p.i + kAxisDi[n], p.j + kAxisDj[n]), 1.0);
      ++rows;
    }
  }
  EnergyTerms e;
  e.R.resize(rows, m.count);
  e.R.setFromTriplets(trips.begin(), trips.end());
  e.k = Eigen::Map<Eigen::VectorXd>(consts.data(), rows);
  return e;
}

void write_solution(ScalarField& f, const GridDomain& d, const FreeMap& m, const Eigen::VectorXd& x) {
  f.values.assign(static_cast<std::size_t>(d.vertex_count()), kNaN);
  for (int v = 0; v < d.vertex_count(); ++v) {
    if (d.cls(v) == VertexClass::outside) continue;
    const int var = m.var[static_cast<std::size_t>(v)];
    f.values[static_cast<std::size_t>(v)] = var >= 0 ? x[var] : m.fixed[static_cast<std::size_t>(v)];
  }
}

}  // namespace

ScalarField solve_constrained(std::shared_ptr<const GridDomain> domain, std::shared_ptr<const CousinTree> tree,
                              Energy energy, const SolveOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const GridDomain& d = *domain;
  const FreeMap m = make_free_map(d, tree->root);
  const EnergyTerms e = make_energy(d, m, energy);

  QpProblem qp;
  const Eigen::SparseMatrix<double> Rt = e.R.transpose();
  qp.Q = 2.0 * (Rt * e.R);
  qp.c = 2.0 * (Rt * e.k);

  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> rhs;
  for (const auto& [p, c] : tree->edges) {
    const int vp = m.var[static_cast<std::size_t>(p)], vc = m.var[static_cast<std::size_t>(c)];
    if (vp < 0 && vc < 0) continue;
    const int row = static_cast<int>(rhs.size());
    double b = options.epsilon;
    if (vp >= 0) trips.emplace_back(row, vp, 1.0); else b -= m.fixed[static_cast<std::size_t>(p)];
    if (vc >= 0) trips.emplace_back(row, vc, -1.0); else b += m.fixed[static_cast<std::size_t>(c)];
    rhs.push_back(b);
  }
  qp.A.resize(static_cast<Eigen::Index>(rhs.size()), m.count);
  qp.A.setFromTriplets(trips.begin(), trips.end());
  qp.b = Eigen::Map<Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));

  QpOptions qopt;
  qopt.max_iterations = options.max_iterations;
  const QpResult r = solve_qp(qp, qopt);
  if (!r.converged || r.max_violation >= 1e-9)
    throw SolverDiverged("constrained " + std::string(energy == Energy::laplace ? "Laplace" : "bi-Laplace") +
                         " solve did not converge after " + std::to_string(r.iterations) + " iterations");

  ScalarField f;
  f.method = energy == Energy::laplace ? FieldMethod::laplace_constrained : FieldMethod::bilaplace_constrained;
  f.epsilon = options.epsilon;
  f.maximum = tree->root;
  write_solution(f, d, m, r.x);
  f.stats.iterations = r.iterations;
  f.stats.max_violation = r.max_violation;
  f.stats.relative_gap = r.relative_gap;
  f.stats.energy = (e.R * r.x + e.k).squaredNorm();
  f.domain = std::move(domain);
  f.tree = std::move(tree);
  f.stats.seconds = seconds_since(t0);
  return f;
}

ScalarField solve_unconstrained_laplace(std::shared_ptr<const GridDomain> domain, int maximum) {
  const auto t0 = std::chrono::steady_clock::now();
  const GridDomain& d = *domain;
  if (maximum < 0 || d.cls(maximum) != VertexClass::inside) throw EmptyDomain("maximum must be an inside vertex");
  const FreeMap m = make_free_map(d, maximum);
  const EnergyTerms e = make_energy(d, m, Energy::laplace);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m.count);
  if (m.count > 0) {
    const Eigen::SparseMatrix<double> Rt = e.R.transpose();
    const Eigen::SparseMatrix<double> L = Rt * e.R;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(L);
    if (ldlt.info() != Eigen::Success) throw SolverDiverged("harmonic system factorization failed");
    const Eigen::VectorXd rhs = -(Rt * e.k);
    x = ldlt.solve(rhs);
    const double res = (L * x - rhs).lpNorm<Eigen::Infinity>();
    if (!std::isfinite(res) || res > 1e-10) throw SolverDiverged("harmonic solve residual too large");
  }
  ScalarField f;
  f.method = FieldMethod::laplace_unconstrained;
  f.maximum = maximum;
  write_solution(f, d, m, x);
  f.stats.energy = m.count > 0 ? (e.R * x + e.k).squaredNorm() : 0.0;
  f.domain = std::move(domain);
  f.stats.seconds = seconds_since(t0);
  return f;
}

ScalarField build_field(std::shared_ptr<const GridDomain> domain, FieldMethod method, const SolveOptions& options) {
  const int maximum = grassfire_maximum(*domain);
  if (method == FieldMethod::laplace_unconstrained) return solve_unconstrained_laplace(std::move(domain), maximum);
  auto tree = std::make_shared<const CousinTree>(create_cousin_tree(*domain, maximum).tree);
  switch (method) {
    case FieldMethod::l1: return assign_l1(std::move(domain), std::move(tree));
    case FieldMethod::laplace_constrained: return solve_constrained(std::move(domain), std::move(tree), Energy::laplace, options);
    default: return solve_constrained(std::move(domain), std::move(tree), Energy::bilaplace, options);
  }
}

double max_tree_violation(const ScalarField& f) {
  if (!f.tree) return -std::numeric_limits<double>::infinity();
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& [p, c] : f.tree->edges) worst = std::max(worst, f.value(c) + f.epsilon - f.value(p));
  return worst;
}

double dirichlet_energy(const ScalarField& f) {
  const GridDomain& d = *f.domain;
  double e = 0.0;
  for (int v = 0; v < d.vertex_count(); ++v) {
    if (d.cls(v) == VertexClass::outside) continue;
    const VertexId p = d.vertex(v);
    if (d.has_value(p.i + 1, p.j)) e += std::pow(f.value(v) - f.value(p.i + 1, p.j), 2);
    if (d.has_value(p.i, p.j + 1)) e += std::pow(f.value(v) - f.value(p.i, p.j + 1), 2);
  }
  return e;
}

CriticalPointReport audit_critical_points(const ScalarField& f, Connectivity connectivity) {
  static constexpr std::pair<int, int> ring8[8] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
  static constexpr std::pair<int, int> ring6[6] = {{1, 0}, {1, 1}, {0, 1}, {-1, 0}, {-1, -1}, {0, -1}};
  static constexpr std::pair<int, int> ring4[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  std::span<const std::pair<int, int>> ring;
  switch (connectivity) {
    case Connectivity::four: ring = ring4; break;
    case Connectivity::six: ring = ring6; break;
    case Connectivity::eight: ring = ring8; break;
  }

  const GridDomain& d = *f.domain;
  CriticalPointReport report;
  report.connectivity = connectivity;
  report.kinds.assign(static_cast<std::size_t>(d.vertex_count()), CriticalKind::regular);
  std::vector<bool> upper(ring.size());
  for (int v = 0; v < d.vertex_count(); ++v) {
    if (d.cls(v) != VertexClass::inside) continue;
    const VertexId p = d.vertex(v);
    int ups = 0;
    for (std::size_t k = 0; k < ring.size(); ++k) {
      const int ni = p.i + ring[k].first, nj = p.j + ring[k].second;
      upper[k] = d.has_value(ni, nj) && perturbed_greater(f, d.index(ni, nj), v);
      ups += upper[k];
    }
    CriticalKind kind = CriticalKind::regular;
    if (ups == 0) {
      kind = CriticalKind::maximum;
    } else if (ups == static_cast<int>(ring.size())) {
      kind = CriticalKind::minimum;
    } else {
      int runs = 0;
      for (std::size_t k = 0; k < ring.size(); ++k) runs += upper[k] && !upper[(k + ring.size() - 1) % ring.size()];
      if (runs > 1) kind = CriticalKind::saddle;
    }
    report.kinds[static_cast<std::size_t>(v)] = kind;
    switch (kind) {
      case CriticalKind::regular: ++report.regular; break;
      case CriticalKind::maximum: ++report.maxima; report.maximum_vertices.push_back(v); break;
      case CriticalKind::minimum: ++report.minima; report.minimum_vertices.push_back(v); break;
      case CriticalKind::saddle: ++report.saddles; report.saddle_vertices.push_back(v); break;
    }
  }
  return report;
}

}  // namespace icc
