#pragma once

// Assembly of the scaled moment relaxation of an equality-constrained problem
// on a sphere as a standard block SDP with constant trace:
//
//   -tau_k = sup { <C, X> : <A_i, X> = b_i (i in [m]), X >= 0 },
//
// where X = P M_k(y) P, P = diag(theta_{k,alpha}^{1/2}) is the scaling that
// makes trace(X) = (Rbar + 1)^k on the sphere Rbar - ||x||^2 = 0, and the A_i
// comprise a basis of the orthogonal complement of the scaled moment-matrix
// subspace, the localizing constraints of every equality, and the y_0 = 1
// normalization.

#include <Eigen/Core>
#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

#include "ctpop/pop.hpp"

namespace ctpop {

/// One upper-triangle entry of a block-diagonal symmetric matrix; (i, j) with
/// i < j stands for the two mirrored positions carrying the same value.
struct SymEntry {
  int blk = 0;
  int i = 0;
  int j = 0;
  double v = 0.0;
};

/// Block-diagonal symmetric matrix in sparse upper-triplet form.
struct SymBlockMat {
  std::vector<SymEntry> entries;

  /// Adds v at (i, j), swapping indices into the upper triangle.
  void add(int blk, int i, int j, double v) {
    if (i > j) std::swap(i, j);
    entries.push_back({blk, i, j, v});
  }
};

std::vector<Eigen::MatrixXd> zero_blocks(const std::vector<int>& dims);

/// X += s * A (mirroring the upper-triangle entries).
void add_to_blocks(std::vector<Eigen::MatrixXd>& X, const SymBlockMat& A,
                   double s);

/// <A, X> = sum over entries v * X_ij, counting off-diagonal entries twice.
double inner(const SymBlockMat& A, const std::vector<Eigen::MatrixXd>& X);

/// u^T A u for u indexed over the stacked block dimensions.
double quad_form(const SymBlockMat& A, const std::vector<int>& dims,
                 const Eigen::VectorXd& u);

/// Scaling diagonal of the moment matrix: theta_{k,alpha} are the multinomial
/// coefficients of (1 + ||x||^2)^k = sum_{|alpha|<=k} theta_{k,alpha} x^{2 alpha},
/// and diag holds theta^{1/2} in graded-lex order.
struct ScalingDiagonal {
  int n = 0;
  int k = 0;
  std::map<Exponent, double, GrlexLess> theta;
  std::vector<double> diag;
};

ScalingDiagonal theta_coeffs(int n, int k);

/// a_k = (Rbar + 1)^k, the common trace of every feasible scaled moment matrix
/// on the sphere of squared radius Rbar.
double trace_constant(double Rbar, int k);

/// Constraint provenance, so that reports and tests can identify each row.
enum class ConstraintKind { orth_complement, localizing, normalization };

struct ConstraintOrigin {
  ConstraintKind kind = ConstraintKind::normalization;
  Exponent gamma;  // orth_complement: the exponent whose pair set is cut
  int mu = 0;      // orth_complement: index of the paired element in Lambda_gamma
  int j = 0;       // localizing: equality index (0-based)
  Exponent alpha;  // localizing: the shifted exponent
};

/// Standard-form block SDP with constant trace.
struct SdpProblem {
  std::vector<int> block_dims;
  SymBlockMat cost;                      // C
  std::vector<SymBlockMat> constraints;  // A_i
  Eigen::VectorXd b;                     // right-hand sides
  double trace_constant = 0.0;           // a
  std::vector<ConstraintOrigin> origins;

  int m() const { return static_cast<int>(constraints.size()); }
  int total_dim() const;
  std::vector<int> block_offsets() const;
};

/// Basis of the orthogonal complement of {P M_k(y) P : y}: exactly
/// r = s(s+1)/2 - C(n+2k, n) matrices (s = C(n+k, n)). For every exponent
/// gamma whose unordered index-pair set Lambda_gamma = {(a_1,b_1) < ... <
/// (a_t,b_t)} has t >= 2 elements, and every mu in {2..t}, the basis matrix
/// carries weight w_{a_mu,b_mu} on the pair (a_1,b_1) and -w_{a_1,b_1} on
/// (a_mu,b_mu), halved on off-diagonal pairs; w_{a,b} = theta_a^{1/2} theta_b^{1/2}.
std::vector<SymBlockMat> orth_complement_basis(int n, int k,
                                               const ScalingDiagonal& sc);
/// Same, with provenance (gamma, mu) attached.
std::vector<SymBlockMat> orth_complement_basis(int n, int k,
                                               const ScalingDiagonal& sc,
                                               std::vector<ConstraintOrigin>* origins);

/// Localizing constraints of the equality h = 0 at order k: one matrix per
/// alpha with |alpha| <= 2(k - ceil(deg h / 2)), built so that
/// <A, P M_k(y) P> = sum_gamma h_gamma y_{alpha+gamma} (rhs 0). Throws when
/// 2 ceil(deg h / 2) > 2k.
std::vector<SymBlockMat> localizing_constraints(const Polynomial& h, int n,
                                                int k, const ScalingDiagonal& sc);

/// Cost matrix C with <C, P M_k(y) P> = -L_y(f). Throws when deg f > 2k.
SymBlockMat cost_matrix(const Polynomial& f, int n, int k,
                        const ScalingDiagonal& sc);

/// Builds the order-k relaxation of an equality-constrained problem whose
/// constraint list contains Rbar - ||x||^2 (syntactically detected; pass
/// assume_sphere_R to assert the constant-trace property when the sphere is
/// present in a rearranged form). Single block of size C(n+k, n);
/// m = s(s+1)/2 - C(n+2k, n) + 1 + sum_j C(n + 2(k - ceil(h_j)), n).
SdpProblem build_moment_sdp(const PopProblem& pop, int k,
                            std::optional<double> assume_sphere_R = std::nullopt);

/// Moment matrix M_k(y) with entries y_{alpha+beta}, alpha/beta over the
/// graded-lex basis of degree <= k.
Eigen::MatrixXd moment_matrix(const MomentVector& y, int k);

/// P M_k(y) P for the given scaling.
Eigen::MatrixXd scaled_moment_matrix(const MomentVector& y,
                                     const ScalingDiagonal& sc);

/// Writes the problem in SDPA sparse format (.dat-s): m, #blocks, block
/// dimensions, the objective vector (= b), then "matno blkno i j value"
/// entries, 1-indexed upper triangle, with matno 0 carrying the cost C.
void write_sdpa(std::ostream& os, const SdpProblem& sdp);

}  // namespace ctpop
