#pragma once

// Spectral solution of trace-constrained SDPs by nonsmooth first-order
// minimization. A standard-form SDP
//
//   -tau = sup { <C, X> : A(X) = b, X >= 0 }
//
// whose feasible matrices all have trace a (constant trace) dualizes to the
// unconstrained eigenvalue program
//
//   -tau = inf_z  phi(z),   phi(z) = a lambda_1(C - A^T z) + b^T z,
//
// and, when the trace is merely bounded by a, to
//
//   -tau = inf_z  psi(z),   psi(z) = a max{lambda_1(C - A^T z), 0} + b^T z.
//
// The subdifferential of phi at z is {b - a A(W) : W in conv{uu^T}} over top
// eigenvectors u of the pencil; minimizing phi with a proximal bundle method
// (or a Polyak-step subgradient fallback) and re-mixing the final top
// eigenspace through a small simplex QP recovers an optimal primal X*.

#include <Eigen/Core>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ctpop/eig.hpp"
#include "ctpop/relax.hpp"

namespace ctpop {

enum class SpectralMode { ctp, btp };
enum class NonsmoothMethod { proximal_bundle, subgradient };
enum class SolveStatus { converged, iteration_limit, stalled };

struct SpectralOptions {
  NonsmoothMethod method = NonsmoothMethod::proximal_bundle;
  int max_iter = 5000;
  /// Relative stopping tolerance: bundle stops when the model's predicted
  /// decrease falls below tol * (1 + |f|); the subgradient method stops when
  /// its adaptive level falls below the same threshold.
  double tol = 1e-5;
  double eig_tol = 1e-9;
  /// Eigenvalue cluster width for the recovery eigenspace; < 0 selects the
  /// lambda_max default 1e-6 * (1 + |lambda1|).
  double cluster_tol = -1.0;
  /// |lambda1| <= hinge_tol is treated as lambda1 = 0 in the BTP case split.
  double hinge_tol = 1e-9;
  /// Recovery truncates the eigenvector cluster to this many leading vectors.
  int max_recovery_vectors = 30;
  int bundle_max_cuts = 50;
  /// Wall-clock budget in seconds for minimize_nonsmooth; <= 0 is unlimited.
  /// Exceeding it ends the minimization with status iteration_limit.
  double time_budget_s = 0.0;
};

/// One row of the iteration log: step_type is 's' (serious), 'n' (null) or
/// 'g' (subgradient step).
struct IterRecord {
  int iter = 0;
  double objective = 0.0;
  double subgrad_norm = 0.0;
  char step_type = 'g';
  double lambda1 = 0.0;
  double time_ms = 0.0;
};

/// Writes the iteration log as CSV with a header line
/// (iter,objective,subgrad_norm,step_type,lambda1,time_ms).
void write_history_csv(std::ostream& os, const std::vector<IterRecord>& history);

/// Immutable view of an SdpProblem prepared for repeated pencil evaluations.
/// Holds a pointer to the SDP, which must outlive the objective.
class SpectralObjective {
 public:
  SpectralObjective(const SdpProblem& sdp, SpectralMode mode);

  SpectralMode mode() const { return mode_; }
  int m() const { return sdp_->m(); }
  double a() const { return sdp_->trace_constant; }
  const Eigen::VectorXd& b() const { return sdp_->b; }
  const SdpProblem& sdp() const { return *sdp_; }

  /// C - A^T z as a block operator (dense blocks up to dimension 1024).
  BlockSymmetricOperator pencil(const Eigen::VectorXd& z) const;
  /// The adjoint image (<A_1, uu^T>, ..., <A_m, uu^T>); u is indexed over the
  /// stacked block dimensions.
  Eigen::VectorXd apply_A_uuT(const Eigen::VectorXd& u) const;
  /// <C, X> for dense blocks X.
  double cost_inner(const std::vector<Eigen::MatrixXd>& X) const;

 private:
  const SdpProblem* sdp_;
  SpectralMode mode_;
};

struct SpectralEval {
  double value = 0.0;
  Eigen::VectorXd subgradient;
  EigResult eig;  // clustered top eigenspace of C - A^T z, for recovery
};

/// phi(z) with the subgradient b - a A(u1 u1^T) of the leading eigenvector.
SpectralEval phi_value_and_subgradient(const SpectralObjective& obj,
                                       const Eigen::VectorXd& z,
                                       const SpectralOptions& opts = {});

/// psi(z); below the hinge the subgradient is exactly b, on the hinge the
/// midpoint convex combination (zeta = 1/2) is returned.
SpectralEval psi_value_and_subgradient(const SpectralObjective& obj,
                                       const Eigen::VectorXd& z,
                                       const SpectralOptions& opts = {});

struct MinimizeResult {
  Eigen::VectorXd z;  // best iterate
  double value = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::iteration_limit;
  std::vector<IterRecord> history;
};

/// Minimizes phi (CTP objective) or psi (BTP) from z0. Deterministic for
/// fixed inputs; throws std::runtime_error on non-finite objective values.
MinimizeResult minimize_nonsmooth(const SpectralObjective& obj,
                                  const Eigen::VectorXd& z0,
                                  const SpectralOptions& opts = {});

struct PrimalRecovery {
  std::vector<Eigen::MatrixXd> X;  // dense blocks
  Eigen::VectorXd xi;              // simplex weights over the used eigenvectors
  Eigen::MatrixXd U;               // the mixing vectors (stacked, one column each)
  double residual = 0.0;           // ||A(X) - b||_2
};

/// Re-mixes the top eigenspace at z_bar into a primal optimum: CTP solves
/// min ||b - a A(sum xi_j u_j u_j^T)|| over the unit simplex and returns
/// X* = a sum xi_j u_j u_j^T; BTP splits on the sign of lambda1 (sum xi = 0,
/// <= a, or = a) and returns X* = sum xi_j u_j u_j^T.
PrimalRecovery recover_primal(const SpectralObjective& obj,
                              const Eigen::VectorXd& z_bar,
                              const EigResult& eig,
                              const SpectralOptions& opts = {});

/// Replaces the recovered X by an extreme point of the face
/// {W S W^T : S >= 0, A(W S W^T) = A(X)} spanned by its mixing vectors:
/// repeatedly steps along a null direction of the constraint map restricted
/// to that span until the PSD boundary, shrinking the rank. Null directions
/// are only approximate at finite solver accuracy, so each step is kept
/// only while the recomputed constraint residual stays within a small
/// multiple of the input's; positive semidefiniteness is preserved exactly.
/// The result is still a nonnegative mixture of unit vectors from the same
/// eigenspace, but one whose moment matrix is flat whenever a
/// finitely-atomic optimal measure exists (a diagonal simplex re-mix cannot
/// reach those when the top eigenvalue is degenerate). Deterministic; no-op
/// above 16 mixing vectors.
void reduce_recovery_rank(const SpectralObjective& obj, PrimalRecovery& rec);

struct SpectralResult {
  double value = 0.0;  // min phi = -tau
  Eigen::VectorXd z_bar;
  std::optional<std::vector<Eigen::MatrixXd>> X_star;
  double recovery_residual = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::iteration_limit;
  std::vector<IterRecord> history;
};

/// minimize_nonsmooth from z0 = 0, then eigenspace + QP primal recovery.
SpectralResult solve_sdp_ctp(const SdpProblem& sdp,
                             const SpectralOptions& opts = {});
/// Same through the hinged objective psi; trace_constant acts as the bound.
SpectralResult solve_sdp_btp(const SdpProblem& sdp,
                             const SpectralOptions& opts = {});

}  // namespace ctpop
