#include "icc/qp.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

namespace icc {

namespace {

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index k = 0; k < v.size(); ++k)
    if (dv[k] < 0.0) alpha = std::min(alpha, -v[k] / dv[k]);
  return alpha;
}

}  // namespace

QpResult solve_qp(const QpProblem& p, const QpOptions& opt) {
  const Eigen::Index n = p.Q.rows();
  const Eigen::Index m = p.A.rows();
  QpResult result;
  result.x = Eigen::VectorXd::Zero(n);
  if (n == 0) {
    result.converged = true;
    return result;
  }

  Eigen::SparseMatrix<double> At = p.A.transpose();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;

  if (m == 0) {
    ldlt.compute(p.Q);
    result.x = ldlt.solve(-p.c);
    result.converged = ldlt.info() == Eigen::Success;
    return result;
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd s = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd z = Eigen::VectorXd::Ones(m);
  {
    // Start from the unconstrained minimizer, lifted so the slacks are comfortably positive.
    ldlt.compute(p.Q);
    if (ldlt.info() == Eigen::Success) x = ldlt.solve(-p.c);
    Eigen::VectorXd r = p.A * x - p.b;
    for (Eigen::Index k = 0; k < m; ++k) s[k] = std::max(r[k], 1e-2);
  }

  const double scale_b = 1.0 + p.b.lpNorm<Eigen::Infinity>();
  const double scale_c = 1.0 + p.c.lpNorm<Eigen::Infinity>();
  bool pattern_ready = false;

  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    const Eigen::VectorXd rd = p.Q * x + p.c - At * z;
    const Eigen::VectorXd rp = p.A * x - s - p.b;
    const double mu = s.dot(z) / static_cast<double>(m);
    const double objective = 0.5 * x.dot(p.Q * x) + p.c.dot(x);

    result.iterations = iter - 1;
    if (rp.lpNorm<Eigen::Infinity>() <= opt.feasibility_tol * scale_b &&
        rd.lpNorm<Eigen::Infinity>() <= opt.optimality_tol * scale_c &&
        s.dot(z) <= opt.gap_tol * std::max(1.0, std::abs(objective))) {
      result.converged = true;
      break;
    }

    const Eigen::VectorXd w = z.cwiseQuotient(s);
    Eigen::SparseMatrix<double> K = p.Q + At * w.asDiagonal() * p.A;
    if (!pattern_ready) {
      ldlt.analyzePattern(K);
      pattern_ready = true;
    }
    ldlt.factorize(K);
    if (ldlt.info() != Eigen::Success) {
      ldlt.compute(K);
      if (ldlt.info() != Eigen::Success) break;
    }

    // Solves for (dx, ds, dz) given the complementarity target `comp` (= -s.z + sigma mu - corrections).
    auto newton = [&](const Eigen::VectorXd& comp, Eigen::VectorXd& dx, Eigen::VectorXd& ds, Eigen::VectorXd& dz) {
      // dz = S^-1 (comp - Z (A dx + rp));  (Q + A'WA) dx = -rd + A' S^-1 (comp - Z rp)
      const Eigen::VectorXd t = (comp - z.cwiseProduct(rp)).cwiseQuotient(s);
      dx = ldlt.solve(-rd + At * t);
      ds = p.A * dx + rp;
      dz = (comp - z.cwiseProduct(ds)).cwiseQuotient(s);
    };

    Eigen::VectorXd dx, ds, dz;
    const Eigen::VectorXd sz = s.cwiseProduct(z);
    newton(-sz, dx, ds, dz);
    const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
    const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(m);
    const double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);

    const Eigen::VectorXd comp =
        -sz - ds.cwiseProduct(dz) + Eigen::VectorXd::Constant(m, std::min(sigma, 1.0) * mu);
    newton(comp, dx, ds, dz);
    const double alpha = std::min(1.0, 0.995 * std::min(max_step(s, ds), max_step(z, dz)));
    x += alpha * dx;
    s += alpha * ds;
    z += alpha * dz;
    result.iterations = iter;
  }

  result.x = x;
  const Eigen::VectorXd slack = p.A * x - p.b;
  result.max_violation = std::max(0.0, -slack.minCoeff());
  const double objective = 0.5 * x.dot(p.Q * x) + p.c.dot(x);
  result.relative_gap = s.dot(z) / std::max(1.0, std::abs(objective));
  return result;
}

}  // namespace icc
