#pragma once

// Polynomial optimization problems: minimize f over the set cut out by
// inequalities g_i >= 0 and equalities h_j = 0, together with the declared
// ball or sphere constraint that every reduction in this library relies on.

#include <optional>
#include <string>
#include <vector>

#include "ctpop/poly.hpp"

namespace ctpop {

enum class RadiusKind { sphere, ball };

struct RadiusDecl {
  RadiusKind kind = RadiusKind::sphere;
  double R = 1.0;
};

/// minimize f(x) subject to g_i(x) >= 0 (i in [l_g]) and h_j(x) = 0
/// (j in [l_h]). When radius is declared as sphere, equalities must contain
/// R - ||x||^2 (by convention in the first slot); when declared as ball,
/// inequalities must contain it.
struct PopProblem {
  int n = 0;
  Polynomial objective;
  std::vector<Polynomial> inequalities;  // g_i >= 0
  std::vector<Polynomial> equalities;    // h_j = 0
  std::optional<RadiusDecl> radius;

  int lg() const { return static_cast<int>(inequalities.size()); }
  int lh() const { return static_cast<int>(equalities.size()); }
};

/// The polynomial R - x_1^2 - ... - x_n^2.
Polynomial sphere_poly(int n, double R);

/// Syntactic test: p equals R - ||x||^2 for some R > 0, i.e. every squared
/// variable carries coefficient -1 and only the constant term remains, all
/// within an absolute coefficient tolerance of 1e-12. Returns R on success.
std::optional<double> detect_sphere_radius(const Polynomial& p);

/// Index of the first equality of the form R - ||x||^2 (-1 when absent).
int find_sphere_constraint(const std::vector<Polynomial>& equalities);

/// Throws std::invalid_argument when the declared radius constraint is not
/// present in the declared slot or has an inconsistent R.
void validate_radius_decl(const PopProblem& pop);

}  // namespace ctpop
