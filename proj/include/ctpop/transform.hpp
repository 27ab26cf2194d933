#pragma once

// Reductions of general problems to equality-constrained problems on a
// sphere, where the moment relaxations have constant trace:
//   - a single ball constraint R - ||x||^2 >= 0 becomes the sphere
//     R - ||x||^2 - x_{n+1}^2 = 0 through one slack variable;
//   - multiple inequalities become squared-slack equalities g_i = x_{n+i}^2,
//     with upper bounds b_i >= sup g_i delivering the enclosing sphere of
//     squared radius Rbar = R + sum b_i after one final slack;
//   - a polynomial system p_1 = ... = p_r = 0 with a root in the ball of
//     squared radius L rescales onto the unit sphere via x -> sqrt(L) x.

#include <Eigen/Core>
#include <functional>
#include <utility>
#include <vector>

#include "ctpop/pop.hpp"
#include "ctpop/relax.hpp"

namespace ctpop {

/// Coordinate correspondence between an original problem and its slack
/// lift: project drops the slack coordinates; lift appends
/// x_{n+i} = sqrt(radicand_i(x)) for each stored radicand (polynomials in
/// the original variables).
struct SolutionMap {
  int original_n = 0;
  int lifted_n = 0;
  std::vector<Polynomial> slack_radicands;

  /// First original_n coordinates.
  Eigen::VectorXd project(const Eigen::VectorXd& lifted) const;
  /// Appends the slack coordinates of a feasible original point; radicands
  /// in [-1e-9, 0) clamp to 0 (active constraints), more negative values
  /// throw std::domain_error.
  Eigen::VectorXd lift(const Eigen::VectorXd& x) const;
};

/// Rewrites {min f : R - ||x||^2 >= 0, h = 0} as an equality-constrained
/// problem on the sphere of squared radius R in n+1 variables. Requires the
/// ball to be the only inequality.
std::pair<PopProblem, SolutionMap> ball_to_sphere(const PopProblem& pop);

/// Optimal value of "sup { <C,X> : A(X) = b, X >= 0 }" as computed by the
/// spectral module: returns min phi = -tau. Passed in to keep this module
/// independent of the solver choice.
using SdpValueFn = std::function<double(const SdpProblem&)>;

/// Upper bounds b_i >= sup { g_i(x) : R - ||x||^2 >= 0, h = 0 } via the
/// order-k moment relaxation of min -g_i over the ball-with-slack sphere;
/// b_i is exactly the returned min-phi value of that relaxation.
std::vector<double> compute_g_bounds(const PopProblem& pop, int k,
                                     const SdpValueFn& sdp_value);

/// Lifts {min f : g_1 = R - ||x||^2 >= 0, g_2..g_lg >= 0, h = 0} to the
/// sphere of squared radius Rbar = R + sum b_i in n + l_g + 1 variables,
/// with equalities g_i - x_{n+i}^2 = 0 and one residual slack. bounds must
/// come from compute_g_bounds (or any valid upper bounds); a negative bound
/// certifies infeasibility of the corresponding g_i and is rejected.
std::pair<PopProblem, SolutionMap> general_to_sphere(
    const PopProblem& pop, const std::vector<double>& bounds);

/// phat_j(x) = L^-1 p_j(sqrt(L) x) in n+1 variables, followed by the unit
/// sphere constraint 1 - ||x||^2 (over all n+1 variables); a root x of the
/// original system with ||x||^2 <= L corresponds to the scaled roots
/// (x / sqrt(L), +-sqrt(1 - ||x||^2 / L)).
std::vector<Polynomial> scale_system(const std::vector<Polynomial>& polys,
                                     double L);

}  // namespace ctpop
