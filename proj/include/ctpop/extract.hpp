#pragma once

// Minimizer extraction from an optimal moment matrix: undo the trace
// scaling, test the flat-extension rank condition, extract the atoms of the
// representing measure (multiplication-matrix eigenvalue method), and check
// the epsilon-certificate on the original problem.

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ctpop/pop.hpp"
#include "ctpop/relax.hpp"

namespace ctpop {

/// Signals numerically non-flat input to extract_atoms (non-commuting
/// multiplication matrices, complex eigenvalues, or a basis monomial of full
/// degree); callers treat it as "no atom extracted", not as a fatal error.
struct ExtractionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// M_k(y*) = P^-1 X* P^-1.
Eigen::MatrixXd moment_from_X(const Eigen::MatrixXd& X,
                              const ScalingDiagonal& sc);

/// Pseudo-moments up to order 2k read off the matrix: y_{alpha+beta} is the
/// average of every entry M(a, b) whose row/column exponents sum to the same
/// multi-index.
MomentVector moments_from_matrix(const Eigen::MatrixXd& M, int n, int k);

struct FlatnessReport {
  /// (sub-order d, numerical rank of the leading principal submatrix M_d)
  /// for d = k - w and d = k.
  std::vector<std::pair<int, int>> ranks;
  bool flat = false;
};

/// Numerical ranks (singular values above rank_tol * sigma_max of each
/// submatrix); flat iff rank M_{k-w} = rank M_k.
FlatnessReport flatness_check(const Eigen::MatrixXd& M, int n, int k, int w,
                              double rank_tol = 1e-4);

struct Atom {
  Eigen::VectorXd point;
  double weight = 0.0;
};

/// Atoms of an (approximately) rank-r atomic moment matrix: factorize
/// M ~ V^T V, column-echelon reduce V to pick a monomial basis of the
/// quotient, form the multiplication matrix N_i of each variable, jointly
/// diagonalize through the real Schur form of a seeded random convex
/// combination, and read each coordinate as a Rayleigh quotient; weights by
/// least squares against the degree <= k moments. Throws ExtractionError
/// when the N_i fail to commute within 1e-6 * ||N_i|| ||N_j||.
std::vector<Atom> extract_atoms(const Eigen::MatrixXd& M, int n, int k,
                                double rank_tol = 1e-4,
                                std::uint64_t seed = 0x5eed);

struct CertifyReport {
  bool ok = false;
  double objective_gap = 0.0;  // |f(x) - tau|
  double objective_bound = 0.0;
  std::vector<double> eq_residuals;     // |h_j(x)|
  std::vector<double> eq_bounds;        // eps * max-norm of h_j
  std::vector<double> ineq_values;      // g_i(x)
  std::vector<double> ineq_bounds;      // -eps * max-norm of g_i (lower limits)
};

/// Epsilon-certificate of x as a global minimizer with value tau_k:
/// |f(x) - tau_k| <= eps ||f||_max, |h_j(x)| <= eps ||h_j||_max, and
/// g_i(x) >= -eps ||g_i||_max, with ||.||_max the largest absolute
/// coefficient.
CertifyReport certify(const Eigen::VectorXd& x, const PopProblem& pop,
                      double tau_k, double eps);

}  // namespace ctpop
