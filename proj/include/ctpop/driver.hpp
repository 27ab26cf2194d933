#pragma once

// Hierarchy orchestration: solve the increasing sequence of relaxation
// orders for a problem on a sphere (directly), on a ball (through one slack
// variable), or on a general compact set cut out by inequalities (through
// squared slacks and computed constraint bounds); find real roots of
// polynomial systems by adding spherical constraints; generate the seeded
// random benchmark families.

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "ctpop/extract.hpp"
#include "ctpop/pop.hpp"
#include "ctpop/spectral.hpp"
#include "ctpop/transform.hpp"

namespace ctpop {

struct SolverOptions {
  int k_start = 1;
  int k_max = 4;
  double eps = 0.01;      // certification tolerance
  double rank_tol = 1e-4; // flatness / extraction numerical rank
  /// Objective of the main per-order solve. The internal constraint-bound
  /// SDPs of the general-ball route are always solved as CTP (they are
  /// sphere relaxations by construction).
  SpectralMode mode = SpectralMode::ctp;
  SpectralOptions spectral;
  /// When nonempty, each order's SDP is written to <prefix>.k<k>.dat-s.
  std::string export_sdpa_prefix;
  /// Per-order wall-clock budget in seconds; exceeded orders are recorded
  /// with their bound and the hierarchy moves on.
  double order_budget_s = 600.0;
  /// Relaxation order of the constraint-bound SDPs in the general-ball
  /// route; -1 solves them at the same order as the main relaxation.
  int bound_order = -1;
  /// Seed of the extraction's random matrix combination.
  std::uint64_t seed = 0x5eed;
};

struct OrderRecord {
  int k = 0;
  double tau = 0.0;  // lower bound tau_k (valid whenever solved is true)
  bool solved = false;
  SolveStatus solver_status = SolveStatus::iteration_limit;
  bool flat = false;
  std::vector<Atom> atoms;  // projected to the original variables
  bool certified = false;
  int s = 0;  // moment matrix side
  int m = 0;  // constraint count
  double Rbar = 0.0;
  double wall_s = 0.0;
  std::string note;  // failure diagnostics, empty when clean
  std::vector<IterRecord> history;  // solver iteration log of this order
};

enum class TerminalStatus { extracted, order_limit, solver_failure };

struct HierarchyResult {
  std::vector<OrderRecord> orders;
  TerminalStatus status = TerminalStatus::order_limit;
  Eigen::VectorXd x_star;  // certified minimizer (when status == extracted)
  double f_star = 0.0;     // tau at the terminating order
  int k_final = 0;
};

/// Runs orders k_start..k_max: assemble the relaxation, solve it spectrally,
/// undo the scaling, test flatness, extract atoms, certify on the original
/// problem; stops at the first certified atom. Problems with a declared ball
/// are lifted first (one slack when the ball is the only inequality; squared
/// slacks plus computed bounds otherwise). Per-order failures are recorded
/// and the next order still runs.
HierarchyResult solve_hierarchy(const PopProblem& pop,
                                const SolverOptions& opts = {});

struct AscState {
  int ambient_n = 0;                    // variables of the scaled variety
  std::vector<Polynomial> variety;      // current equality list (scaled)
  std::vector<double> omegas;           // squared distances found so far
};

struct AscResult {
  bool found = false;
  Eigen::VectorXd root;            // original coordinates
  std::vector<double> residuals;   // |p_j(root)| per input polynomial
  int rounds = 0;                  // distance subproblems solved
  bool closed_form = false;        // root from the final distance identity
  AscState state;
  std::string note;
};

/// Real root of the square system p_1 = ... = p_r = 0 with a root inside the
/// ball of squared radius L: rescale onto the unit sphere, then minimize the
/// squared distance to each canonical anchor in turn at fixed order k,
/// intersecting the variety with the attained distance sphere after each
/// round; an extracted atom (or, after all rounds, the closed-form point
/// built from the distances) is unscaled and accepted only when every
/// |p_j(root)| <= 1e-3 * (1 + l1-norm of p_j).
AscResult asc_roots(const std::vector<Polynomial>& system, double L, int k,
                    const SolverOptions& opts = {});

enum class GenKind { sphere_qcqp, ball_qcqp, quartic_sphere };

/// Seeded random benchmark instance:
///   sphere_qcqp   l_g = 0; h_1 = 1 - ||x||^2 plus l_h - 1 random quadratics
///                 vanishing at a planted point on the unit sphere; random
///                 dense quadratic objective.
///   ball_qcqp     g_1 = 1 - ||x||^2 plus l_g - 1 random quadratics positive
///                 at a planted interior point; l_h random quadratics
///                 vanishing there; random dense quadratic objective.
///   quartic_sphere l_g = 0, l_h = 1 (the sphere); random dense quartic.
/// All free coefficients are uniform on (-1, 1); identical arguments yield
/// identical problems. When planted is non-null it receives the feasible
/// point the constraints were built around (empty for quartic_sphere, which
/// plants nothing).
PopProblem gen_random_pop(GenKind kind, int n, int l_g, int l_h,
                          std::uint64_t seed,
                          std::vector<double>* planted = nullptr);

}  // namespace ctpop
