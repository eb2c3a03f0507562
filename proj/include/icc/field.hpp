#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "icc/grid.hpp"

namespace icc {

enum class FieldMethod { l1, laplace_constrained, bilaplace_constrained, laplace_unconstrained };

std::string_view to_string(FieldMethod m);
/// Accepts the CLI spellings: l1, laplace, bilaplace, laplace-u.
FieldMethod parse_field_method(std::string_view s);

/// Rooted tree of directed grid edges. Every inside vertex except the root has exactly one
/// inside parent; ring vertices are leaves and may have several parents.
struct CousinTree {
  int root = -1;
  std::vector<int> parent;      ///< per vertex; -1 for the root, ring and outside vertices
  std::vector<int> generation;  ///< BFS generation of inside vertices, -1 elsewhere
  std::vector<std::pair<int, int>> edges;  ///< (parent, child) in creation order, ring children included
};

struct CousinTreeResult {
  CousinTree tree;
  std::vector<double> l1_values;  ///< 1 - generation on inside vertices, NaN elsewhere
};

struct CousinTreeAudit {
  bool ok = true;
  int pairs_checked = 0;
  std::vector<std::string> violations;
};

struct SolveStats {
  int iterations = 0;
  double max_violation = 0.0;
  double relative_gap = 0.0;
  double energy = 0.0;
  double seconds = 0.0;
};

/// Per-vertex scalar values on a grid domain. Values are NaN on outside vertices.
struct ScalarField {
  std::shared_ptr<const GridDomain> domain;
  std::shared_ptr<const CousinTree> tree;  ///< null for the unconstrained Laplace field
  FieldMethod method = FieldMethod::l1;
  double epsilon = 0.0;
  int maximum = -1;
  std::vector<double> values;
  SolveStats stats;

  double value(int index) const { return values[static_cast<std::size_t>(index)]; }
  double value(int i, int j) const { return value(domain->index(i, j)); }
  Vec2 maximum_world() const { return domain->vertex_world(maximum); }
};

/// Margin used for the strict tree inequalities f(parent) >= f(child) + epsilon.
inline constexpr double kDefaultEpsilon = 1e-6;

/// Vertex burned last by the grassfire transform (ties: smallest (i, j) lexicographically).
int grassfire_maximum(const GridDomain& domain);
/// Grassfire layer (1 = first burned) per inside vertex; 0 elsewhere.
std::vector<int> grassfire_layers(const GridDomain& domain);

CousinTreeResult create_cousin_tree(const GridDomain& domain, int maximum);
CousinTreeAudit audit_cousin_tree(const CousinTree& tree, const GridDomain& domain);

ScalarField assign_l1(std::shared_ptr<const GridDomain> domain, std::shared_ptr<const CousinTree> tree);

enum class Energy { laplace, bilaplace };

struct SolveOptions {
  double epsilon = kDefaultEpsilon;
  int max_iterations = 200;
};

ScalarField solve_constrained(std::shared_ptr<const GridDomain> domain, std::shared_ptr<const CousinTree> tree,
                              Energy energy, const SolveOptions& options = {});
ScalarField solve_unconstrained_laplace(std::shared_ptr<const GridDomain> domain, int maximum);

/// Grassfire maximum, cousin tree and value assignment in one call.
ScalarField build_field(std::shared_ptr<const GridDomain> domain, FieldMethod method,
                        const SolveOptions& options = {});

/// Largest f(child) + epsilon - f(parent) over tree edges (<= 0 when all inequalities hold).
double max_tree_violation(const ScalarField& field);
/// Dirichlet energy sum over axis edges of (f_u - f_v)^2 restricted to valued vertices.
double dirichlet_energy(const ScalarField& field);

enum class CriticalKind { regular, maximum, minimum, saddle };
enum class Connectivity { four = 4, six = 6, eight = 8 };

struct CriticalPointReport {
  Connectivity connectivity = Connectivity::eight;
  std::vector<CriticalKind> kinds;  ///< per vertex; regular for non-inside vertices
  int maxima = 0;
  int minima = 0;
  int saddles = 0;
  int regular = 0;
  std::vector<int> maximum_vertices;
  std::vector<int> minimum_vertices;
  std::vector<int> saddle_vertices;

  bool clean() const { return maxima == 1 && minima == 0 && saddles == 0; }
};

/// Total order on vertex values with ties broken by vertex index (larger index counts higher).
inline bool perturbed_greater(const ScalarField& f, int a, int b) {
  const double va = f.value(a), vb = f.value(b);
  return va > vb || (va == vb && a > b);
}

/// Classifies every inside vertex by the sign pattern of its neighbourhood ring.
CriticalPointReport audit_critical_points(const ScalarField& field, Connectivity connectivity = Connectivity::eight);

}  // namespace icc
