#include "ctpop/pop.hpp"

#include <cmath>
#include <stdexcept>

namespace ctpop {

Polynomial sphere_poly(int n, double R) {
  Polynomial p = Polynomial::constant(n, R);
  for (int i = 0; i < n; ++i) {
    Exponent sq(n, 0);
    sq[i] = 2;
    p.add_term(sq, -1.0);
  }
  return p;
}

std::optional<double> detect_sphere_radius(const Polynomial& p) {
  constexpr double tol = 1e-12;
  const int n = p.n();
  if (n < 1) return std::nullopt;
  double R = 0.0;
  int squares = 0;
  for (const auto& [a, c] : p.terms()) {
    const int d = degree(a);
    if (d == 0) {
      R = c;
    } else if (d == 2) {
      // must be a plain square x_i^2 with coefficient -1
      int hits = 0;
      for (int e : a) {
        if (e == 2) ++hits;
        else if (e != 0) return std::nullopt;
      }
      if (hits != 1 || std::abs(c + 1.0) > tol) return std::nullopt;
      ++squares;
    } else {
      return std::nullopt;
    }
  }
  if (squares != n || R <= 0.0) return std::nullopt;
  return R;
}

int find_sphere_constraint(const std::vector<Polynomial>& equalities) {
  for (std::size_t j = 0; j < equalities.size(); ++j)
    if (detect_sphere_radius(equalities[j])) return static_cast<int>(j);
  return -1;
}

void validate_radius_decl(const PopProblem& pop) {
  if (!pop.radius) return;
  const auto& decl = *pop.radius;
  const std::vector<Polynomial>& list =
      decl.kind == RadiusKind::sphere ? pop.equalities : pop.inequalities;
  if (list.empty())
    throw std::invalid_argument("radius declared but constraint list is empty");
  const auto R = detect_sphere_radius(list.front());
  if (!R)
    throw std::invalid_argument(
        "radius declared but the first constraint is not R - ||x||^2");
  if (std::abs(*R - decl.R) > 1e-12 * (1.0 + std::abs(decl.R)))
    throw std::invalid_argument("declared radius disagrees with the constraint");
}

}  // namespace ctpop
