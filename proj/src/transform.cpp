#include "ctpop/transform.hpp"

#include <cmath>
#include <stdexcept>

namespace ctpop {

Eigen::VectorXd SolutionMap::project(const Eigen::VectorXd& lifted) const {
  if (lifted.size() != lifted_n)
    throw std::invalid_argument("SolutionMap::project: dimension mismatch");
  return lifted.head(original_n);
}

Eigen::VectorXd SolutionMap::lift(const Eigen::VectorXd& x) const {
  if (x.size() != original_n)
    throw std::invalid_argument("SolutionMap::lift: dimension mismatch");
  std::vector<double> pt(x.data(), x.data() + x.size());
  Eigen::VectorXd out(lifted_n);
  out.head(original_n) = x;
  for (std::size_t i = 0; i < slack_radicands.size(); ++i) {
    double rad = slack_radicands[i].eval(pt);
    if (rad < 0) {
      if (rad < -1e-9)
        throw std::domain_error("SolutionMap::lift: infeasible point "
                                "(negative slack radicand)");
      rad = 0.0;
    }
    out[original_n + static_cast<int>(i)] = std::sqrt(rad);
  }
  return out;
}

namespace {

// The declared ball inequality, validated and returned with its R.
double checked_ball_radius(const PopProblem& pop) {
  if (!pop.radius || pop.radius->kind != RadiusKind::ball)
    throw std::invalid_argument("transform: problem does not declare a ball");
  validate_radius_decl(pop);
  return pop.radius->R;
}

}  // namespace

std::pair<PopProblem, SolutionMap> ball_to_sphere(const PopProblem& pop) {
  const double R = checked_ball_radius(pop);
  if (pop.lg() != 1)
    throw std::invalid_argument(
        "ball_to_sphere: expected the ball as the only inequality");

  PopProblem out;
  out.n = pop.n + 1;
  out.objective = pop.objective.extended_to(out.n);
  out.equalities.push_back(sphere_poly(out.n, R));
  for (const auto& h : pop.equalities)
    out.equalities.push_back(h.extended_to(out.n));
  out.radius = RadiusDecl{RadiusKind::sphere, R};

  SolutionMap map;
  map.original_n = pop.n;
  map.lifted_n = out.n;
  map.slack_radicands.push_back(pop.inequalities[0]);
  return {std::move(out), std::move(map)};
}

std::vector<double> compute_g_bounds(const PopProblem& pop, int k,
                                     const SdpValueFn& sdp_value) {
  checked_ball_radius(pop);
  // sup g_i over the ball (with h) = sup g_i over its slack-sphere lift; the
  // order-k relaxation of min -g_i bounds it from above by -tau = min phi.
  PopProblem ball_only = pop;
  ball_only.inequalities = {pop.inequalities[0]};
  auto [sphere, map] = ball_to_sphere(ball_only);

  std::vector<double> bounds;
  bounds.reserve(pop.lg());
  for (const auto& g : pop.inequalities) {
    PopProblem bound_pop = sphere;
    bound_pop.objective = -g.extended_to(sphere.n);
    bounds.push_back(sdp_value(build_moment_sdp(bound_pop, k)));
  }
  return bounds;
}

std::pair<PopProblem, SolutionMap> general_to_sphere(
    const PopProblem& pop, const std::vector<double>& bounds) {
  const double R = checked_ball_radius(pop);
  const int lg = pop.lg();
  if (static_cast<int>(bounds.size()) != lg)
    throw std::invalid_argument("general_to_sphere: need one bound per g_i");
  double Rbar = R;
  for (double b : bounds) {
    if (b < 0)
      throw std::invalid_argument(
          "general_to_sphere: negative bound certifies an infeasible g_i");
    Rbar += b;
  }

  PopProblem out;
  out.n = pop.n + lg + 1;
  out.objective = pop.objective.extended_to(out.n);
  out.equalities.push_back(sphere_poly(out.n, Rbar));
  for (int i = 0; i < lg; ++i) {
    Exponent slack(out.n, 0);
    slack[pop.n + i] = 2;
    out.equalities.push_back(pop.inequalities[i].extended_to(out.n) -
                             Polynomial::monomial(out.n, slack, 1.0));
  }
  for (const auto& h : pop.equalities)
    out.equalities.push_back(h.extended_to(out.n));
  out.radius = RadiusDecl{RadiusKind::sphere, Rbar};

  SolutionMap map;
  map.original_n = pop.n;
  map.lifted_n = out.n;
  for (const auto& g : pop.inequalities) map.slack_radicands.push_back(g);
  // Final slack absorbs Rbar - ||x||^2 - sum g_i(x).
  Polynomial residual = Polynomial::constant(pop.n, Rbar);
  for (int i = 0; i < pop.n; ++i) {
    Exponent sq(pop.n, 0);
    sq[i] = 2;
    residual.add_term(sq, -1.0);
  }
  for (const auto& g : pop.inequalities) residual = residual - g;
  map.slack_radicands.push_back(residual);
  return {std::move(out), std::move(map)};
}

std::vector<Polynomial> scale_system(const std::vector<Polynomial>& polys,
                                     double L) {
  if (L <= 0) throw std::invalid_argument("scale_system: L must be positive");
  if (polys.empty())
    throw std::invalid_argument("scale_system: empty system");
  const int n = polys.front().n();
  std::vector<Polynomial> out;
  out.reserve(polys.size() + 1);
  for (const auto& p : polys) {
    if (p.n() != n)
      throw std::invalid_argument("scale_system: mixed variable counts");
    Polynomial q(n + 1);
    for (const auto& [a, c] : p.terms()) {
      Exponent ext(a);
      ext.push_back(0);
      q.add_term(ext, c * std::pow(L, 0.5 * degree(a) - 1.0));
    }
    out.push_back(std::move(q));
  }
  out.push_back(sphere_poly(n + 1, 1.0));
  return out;
}

}  // namespace ctpop
