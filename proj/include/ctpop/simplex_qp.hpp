#pragma once

#include <Eigen/Core>

namespace ctpop {

// Minimizer of a convex quadratic over the scaled simplex
//   min 1/2 xi^T H xi - c^T xi   s.t.  sum(xi) = s,  xi >= 0.
struct SimplexQpResult {
  Eigen::VectorXd xi;
  double objective = 0.0;  // value of the quadratic form at xi
  int iterations = 0;
  bool converged = false;
};

// Primal active-set method. H must be symmetric positive semidefinite; a
// small ridge proportional to trace(H) keeps the working-set KKT systems
// solvable when H is rank deficient. `tol` bounds the dual feasibility
// violation accepted at termination.
SimplexQpResult solve_simplex_qp_form(const Eigen::MatrixXd& H,
                                      const Eigen::VectorXd& c, double s,
                                      double tol = 1e-10);

// Least-squares convenience wrapper:
//   min 1/2 ||M xi - b||^2   s.t.  sum(xi) = s,  xi >= 0.
// The reported objective is the residual form 1/2 ||M xi - b||^2.
SimplexQpResult solve_simplex_qp(const Eigen::MatrixXd& M,
                                 const Eigen::VectorXd& b, double s,
                                 double tol = 1e-10);

}  // namespace ctpop
