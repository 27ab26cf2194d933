#include "ctpop/simplex_qp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ctpop {

namespace {

// Solves the equality-constrained subproblem restricted to the free set:
//   min 1/2 xi_F^T H_FF xi_F - c_F^T xi_F   s.t.  1^T xi_F = s.
// The sum constraint is eliminated through the null-space basis Z = [I; -1^T]
// (xi_F = s e_f + Z u), leaving a positive semidefinite reduced system that
// the ridge makes definite -- the bordered saddle-point formulation is
// indefinite, which Cholesky-style solvers mishandle exactly when H_FF is
// near-singular, and it lets the computed sum drift. Here 1^T xi_F = s holds
// by construction. The stationarity condition (H xi - c)_F = nu 1 defines the
// sum multiplier; nu is reported as the mean over the free set.
Eigen::VectorXd solve_working_set(const Eigen::MatrixXd& H,
                                  const Eigen::VectorXd& c,
                                  const std::vector<int>& free, double s,
                                  double ridge, double& nu) {
  const int f = static_cast<int>(free.size());
  Eigen::MatrixXd Hf(f, f);
  Eigen::VectorXd cf(f);
  for (int a = 0; a < f; ++a) {
    for (int b = 0; b < f; ++b) Hf(a, b) = H(free[a], free[b]);
    cf[a] = c[free[a]];
  }
  Eigen::VectorXd xf(f);
  if (f == 1) {
    xf[0] = s;
  } else {
    // HZ = Hf Z, reduced Hessian Z^T Hf Z, reduced gradient Z^T (cf - s Hf e_f).
    const Eigen::MatrixXd HZ =
        Hf.leftCols(f - 1) -
        Hf.col(f - 1) * Eigen::RowVectorXd::Ones(f - 1);
    Eigen::MatrixXd Hu = HZ.topRows(f - 1) -
                         Eigen::VectorXd::Ones(f - 1) * HZ.row(f - 1);
    Hu.diagonal().array() += ridge;
    const Eigen::VectorXd g = cf - s * Hf.col(f - 1);
    const Eigen::VectorXd rhs =
        g.head(f - 1) - Eigen::VectorXd::Constant(f - 1, g[f - 1]);
    const Eigen::VectorXd u = Hu.ldlt().solve(rhs);
    xf.head(f - 1) = u;
    xf[f - 1] = s - u.sum();
  }
  nu = (Hf * xf - cf).mean();
  return xf;
}

}  // namespace

SimplexQpResult solve_simplex_qp_form(const Eigen::MatrixXd& H,
                                      const Eigen::VectorXd& c, double s,
                                      double tol) {
  const int r = static_cast<int>(c.size());
  if (H.rows() != r || H.cols() != r)
    throw std::invalid_argument("solve_simplex_qp_form: dimension mismatch");
  if (s < 0)
    throw std::invalid_argument("solve_simplex_qp_form: negative simplex size");

  SimplexQpResult res;
  if (s == 0.0 || r == 0) {
    res.xi = Eigen::VectorXd::Zero(r);
    res.objective = 0.0;
    res.converged = true;
    return res;
  }

  const double ridge = 1e-12 * std::max(1.0, H.trace() / r);
  const double feas_tol = 1e-12 * std::max(1.0, s);

  Eigen::VectorXd xi = Eigen::VectorXd::Constant(r, s / r);
  std::vector<int> free(r);
  for (int i = 0; i < r; ++i) free[i] = i;
  std::vector<bool> is_free(r, true);

  const int max_iter = 10 * r + 50;
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    double nu = 0.0;
    Eigen::VectorXd xf = solve_working_set(H, c, free, s, ridge, nu);

    // Feasibility restoration: step from xi toward the working-set solution,
    // stopping at the first variable that would cross zero and binding it.
    bool interior = true;
    for (int a = 0; a < static_cast<int>(free.size()); ++a)
      if (xf[a] < -feas_tol) interior = false;
    if (!interior) {
      double alpha = 1.0;
      int blocker = -1;
      for (int a = 0; a < static_cast<int>(free.size()); ++a) {
        const double cur = xi[free[a]];
        const double dir = xf[a] - cur;
        if (dir < -feas_tol * std::max(1.0, std::abs(cur))) {
          const double step = cur / (cur - xf[a]);
          if (step < alpha) {
            alpha = step;
            blocker = a;
          }
        }
      }
      for (int a = 0; a < static_cast<int>(free.size()); ++a)
        xi[free[a]] += alpha * (xf[a] - xi[free[a]]);
      if (blocker >= 0) {
        const int idx = free[blocker];
        xi[idx] = 0.0;
        is_free[idx] = false;
        free.erase(free.begin() + blocker);
      }
      if (free.empty()) {
        // All mass pinned at zero yet sum must equal s: numerically this
        // cannot happen for s > 0; restart from the barycenter.
        for (int i = 0; i < r; ++i) {
          free.push_back(i);
          is_free[i] = true;
          xi[i] = s / r;
        }
      }
      continue;
    }

    // Working-set solution is feasible: accept it and test the bound
    // multipliers; grad_i - nu >= 0 is required at the zero-pinned indices.
    for (int a = 0; a < static_cast<int>(free.size()); ++a)
      xi[free[a]] = std::max(xf[a], 0.0);
    Eigen::VectorXd grad = H * xi - c;
    const double scale = std::max({1.0, grad.cwiseAbs().maxCoeff(), std::abs(nu)});
    int worst = -1;
    double worst_val = -tol * scale;
    for (int i = 0; i < r; ++i) {
      if (is_free[i]) continue;
      const double reduced = grad[i] - nu;
      if (reduced < worst_val) {
        worst_val = reduced;
        worst = i;
      }
    }
    if (worst < 0) {
      res.xi = xi;
      res.objective = 0.5 * xi.dot(H * xi) - c.dot(xi);
      res.converged = true;
      return res;
    }
    is_free[worst] = true;
    free.insert(std::lower_bound(free.begin(), free.end(), worst), worst);
  }

  res.xi = xi;
  res.objective = 0.5 * xi.dot(H * xi) - c.dot(xi);
  res.converged = false;
  return res;
}

SimplexQpResult solve_simplex_qp(const Eigen::MatrixXd& M,
                                 const Eigen::VectorXd& b, double s,
                                 double tol) {
  if (M.rows() != b.size())
    throw std::invalid_argument("solve_simplex_qp: dimension mismatch");
  const Eigen::MatrixXd H = M.transpose() * M;
  const Eigen::VectorXd c = M.transpose() * b;
  SimplexQpResult res = solve_simplex_qp_form(H, c, s, tol);
  if (res.xi.size() == M.cols())
    res.objective = 0.5 * (M * res.xi - b).squaredNorm();
  return res;
}

}  // namespace ctpop
