#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace icc {

/// Convex quadratic program: minimize 1/2 x'Qx + c'x subject to Ax >= b, with Q positive definite.
struct QpProblem {
  Eigen::SparseMatrix<double> Q;
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
};

struct QpOptions {
  int max_iterations = 200;
  double feasibility_tol = 1e-12;
  double optimality_tol = 1e-10;
  double gap_tol = 1e-12;
};

struct QpResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double max_violation = 0.0;  ///< max(b - Ax, 0)
  double relative_gap = 0.0;   ///< complementarity s'z over max(1, |objective|)
  bool converged = false;
};

/// Mehrotra predictor-corrector interior point method on the slack form Ax - s = b, s >= 0.
QpResult solve_qp(const QpProblem& problem, const QpOptions& options = {});

}  // namespace icc
