#pragma once

// Sparse multivariate polynomials over graded-lexicographically ordered
// exponent vectors, the monomial bases indexing every matrix in this library,
// moment vectors and the Riesz functional y -> L_y(f) = sum_a f_a y_a.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctpop {

/// Exponent vector alpha of a monomial x^alpha; one entry per variable.
using Exponent = std::vector<int>;

/// Total degree |alpha| = sum_i alpha_i.
int degree(const Exponent& a);

/// Graded lexicographic comparison: lower total degree first; within equal
/// degree, x1-major lexicographic, i.e. (1,0) precedes (0,1) and
/// (2,0) < (1,1) < (0,2).
bool grlex_less(const Exponent& a, const Exponent& b);

struct GrlexLess {
  bool operator()(const Exponent& a, const Exponent& b) const {
    return grlex_less(a, b);
  }
};

/// Exact binomial coefficient C(n, k); the sizes used here stay far below
/// 64-bit overflow.
long long binomial(int n, int k);

/// All alpha in N^n with |alpha| <= t, strictly increasing in graded-lex
/// order. The first element is the zero vector and the length is C(n+t, n).
std::vector<Exponent> monomials_up_to(int n, int t);

/// Position of `a` in monomials_up_to(n, t) given the generated list, or -1
/// when |a| exceeds t. Binary search against the grlex order.
int monomial_index(const std::vector<Exponent>& basis, const Exponent& a);

/// Sparse polynomial in n variables with real coefficients; the term map is
/// canonical (grlex-keyed, no explicit zero coefficients stored). The empty
/// map is the zero polynomial.
class Polynomial {
 public:
  Polynomial() : n_(0) {}
  explicit Polynomial(int n) : n_(n) {}
  /// Constant polynomial c in n variables.
  static Polynomial constant(int n, double c);
  /// The monomial c * x^alpha.
  static Polynomial monomial(int n, const Exponent& alpha, double c);

  int n() const { return n_; }
  const std::map<Exponent, double, GrlexLess>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  /// max |alpha| over stored terms; 0 for the zero polynomial.
  int degree() const;

  /// Coefficient of x^alpha (0.0 when the term is absent).
  double coeff(const Exponent& alpha) const;
  /// Adds c * x^alpha, pruning the term when the sum is exactly zero.
  void add_term(const Exponent& alpha, double c);

  Polynomial operator+(const Polynomial& q) const;
  Polynomial operator-(const Polynomial& q) const;
  Polynomial operator*(const Polynomial& q) const;
  Polynomial operator*(double s) const;
  Polynomial operator-() const { return *this * -1.0; }
  bool operator==(const Polynomial& q) const {
    return n_ == q.n_ && terms_ == q.terms_;
  }

  /// Value of the polynomial at x (len(x) = n).
  double eval(const std::vector<double>& x) const;

  /// Same terms read as a polynomial in n_new >= n variables (the extra
  /// variables do not occur).
  Polynomial extended_to(int n_new) const;

  std::string to_string() const;

 private:
  int n_;
  std::map<Exponent, double, GrlexLess> terms_;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

/// The three coefficient norms used by the certification and scaling code:
/// l1 = sum |p_a|, max_norm = max |p_a|, and c_weighted = max |p_a| / c_a
/// with c_a = |a|! / (a_1! ... a_n!).
struct PolyNorms {
  double l1 = 0.0;
  double max_norm = 0.0;
  double c_weighted = 0.0;
};

PolyNorms poly_norms(const Polynomial& p);

/// Pseudo-moment sequence y = (y_alpha), |alpha| <= order, in graded-lex
/// order; length C(n+order, n).
struct MomentVector {
  int n = 0;
  int order = 0;                 // maximal total degree, i.e. 2k
  std::vector<double> values;    // indexed by monomials_up_to(n, order)

  MomentVector() = default;
  MomentVector(int n_, int order_);

  /// Moments of the atomic measure sum_t weights[t] * delta_{points[t]}.
  static MomentVector from_atoms(int n, int order,
                                 const std::vector<std::vector<double>>& points,
                                 const std::vector<double>& weights);

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Riesz functional L_y(p) = sum_a p_a y_a. Throws std::invalid_argument when
/// p has a term of degree above y.order or a different variable count.
double riesz(const MomentVector& y, const Polynomial& p);

}  // namespace ctpop
