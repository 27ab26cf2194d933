#include "ctpop/poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ctpop {

int degree(const Exponent& a) {
  int d = 0;
  for (int e : a) d += e;
  return d;
}

bool grlex_less(const Exponent& a, const Exponent& b) {
  const int da = degree(a), db = degree(b);
  if (da != db) return da < db;
  // Within a degree, a precedes b when a is lexicographically larger
  // (x1-major), so that e.g. (1,0) comes before (0,1).
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

namespace {

void monomials_of_degree(int n, int d, int pos, Exponent& cur,
                         std::vector<Exponent>& out) {
  if (pos == n - 1) {
    cur[pos] = d;
    out.push_back(cur);
    cur[pos] = 0;
    return;
  }
  for (int e = d; e >= 0; --e) {
    cur[pos] = e;
    monomials_of_degree(n, d - e, pos + 1, cur, out);
  }
  cur[pos] = 0;
}

}  // namespace

std::vector<Exponent> monomials_up_to(int n, int t) {
  if (n < 1) throw std::invalid_argument("monomials_up_to: n must be >= 1");
  if (t < 0) throw std::invalid_argument("monomials_up_to: t must be >= 0");
  std::vector<Exponent> out;
  out.reserve(static_cast<std::size_t>(binomial(n + t, n)));
  Exponent cur(n, 0);
  for (int d = 0; d <= t; ++d) monomials_of_degree(n, d, 0, cur, out);
  return out;
}

int monomial_index(const std::vector<Exponent>& basis, const Exponent& a) {
  auto it = std::lower_bound(basis.begin(), basis.end(), a, grlex_less);
  if (it == basis.end() || *it != a) return -1;
  return static_cast<int>(it - basis.begin());
}

Polynomial Polynomial::constant(int n, double c) {
  Polynomial p(n);
  p.add_term(Exponent(n, 0), c);
  return p;
}

Polynomial Polynomial::monomial(int n, const Exponent& alpha, double c) {
  Polynomial p(n);
  p.add_term(alpha, c);
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [a, c] : terms_) d = std::max(d, ctpop::degree(a));
  return d;
}

double Polynomial::coeff(const Exponent& alpha) const {
  auto it = terms_.find(alpha);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const Exponent& alpha, double c) {
  if (static_cast<int>(alpha.size()) != n_)
    throw std::invalid_argument("Polynomial::add_term: exponent length != n");
  if (c == 0.0 && terms_.find(alpha) == terms_.end()) return;
  double& v = terms_[alpha];
  v += c;
  if (v == 0.0) terms_.erase(alpha);
}

Polynomial Polynomial::operator+(const Polynomial& q) const {
  if (n_ != q.n_) throw std::invalid_argument("Polynomial: mixed variable counts");
  Polynomial r = *this;
  for (const auto& [a, c] : q.terms_) r.add_term(a, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& q) const {
  return *this + q * -1.0;
}

Polynomial Polynomial::operator*(const Polynomial& q) const {
  if (n_ != q.n_) throw std::invalid_argument("Polynomial: mixed variable counts");
  Polynomial r(n_);
  Exponent sum(n_);
  for (const auto& [a, ca] : terms_)
    for (const auto& [b, cb] : q.terms_) {
      for (int i = 0; i < n_; ++i) sum[i] = a[i] + b[i];
      r.add_term(sum, ca * cb);
    }
  return r;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial r(n_);
  if (s == 0.0) return r;
  for (const auto& [a, c] : terms_) r.add_term(a, c * s);
  return r;
}

double Polynomial::eval(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != n_)
    throw std::invalid_argument("Polynomial::eval: point length != n");
  double v = 0.0;
  for (const auto& [a, c] : terms_) {
    double m = c;
    for (int i = 0; i < n_; ++i)
      for (int e = 0; e < a[i]; ++e) m *= x[i];
    v += m;
  }
  return v;
}

Polynomial Polynomial::extended_to(int n_new) const {
  if (n_new < n_)
    throw std::invalid_argument("Polynomial::extended_to: cannot drop variables");
  Polynomial r(n_new);
  for (const auto& [a, c] : terms_) {
    Exponent b(n_new, 0);
    std::copy(a.begin(), a.end(), b.begin());
    r.add_term(b, c);
  }
  return r;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [a, c] : terms_) {
    if (!first) os << (c >= 0 ? " + " : " - ");
    else if (c < 0) os << "-";
    os << std::abs(c);
    for (int i = 0; i < n_; ++i) {
      if (a[i] == 0) continue;
      os << "*x" << (i + 1);
      if (a[i] > 1) os << "^" << a[i];
    }
    first = false;
  }
  return os.str();
}

PolyNorms poly_norms(const Polynomial& p) {
  PolyNorms r;
  for (const auto& [a, c] : p.terms()) {
    const double ac = std::abs(c);
    r.l1 += ac;
    r.max_norm = std::max(r.max_norm, ac);
    // c_a = |a|! / (a_1! ... a_n!), the multinomial count of the monomial.
    double ca = 1.0;
    int seen = 0;
    for (int e : a)
      for (int j = 1; j <= e; ++j) ca = ca * (++seen) / j;
    r.c_weighted = std::max(r.c_weighted, ac / ca);
  }
  return r;
}

MomentVector::MomentVector(int n_, int order_)
    : n(n_), order(order_),
      values(static_cast<std::size_t>(binomial(n_ + order_, n_)), 0.0) {}

MomentVector MomentVector::from_atoms(
    int n, int order, const std::vector<std::vector<double>>& points,
    const std::vector<double>& weights) {
  if (points.size() != weights.size())
    throw std::invalid_argument("from_atoms: points/weights size mismatch");
  MomentVector y(n, order);
  const auto basis = monomials_up_to(n, order);
  for (std::size_t t = 0; t < points.size(); ++t) {
    const auto& x = points[t];
    if (static_cast<int>(x.size()) != n)
      throw std::invalid_argument("from_atoms: point length != n");
    for (std::size_t i = 0; i < basis.size(); ++i) {
      double m = weights[t];
      for (int v = 0; v < n; ++v)
        for (int e = 0; e < basis[i][v]; ++e) m *= x[v];
      y.values[i] += m;
    }
  }
  return y;
}

double riesz(const MomentVector& y, const Polynomial& p) {
  if (p.n() != y.n)
    throw std::invalid_argument("riesz: variable count mismatch");
  if (p.degree() > y.order)
    throw std::invalid_argument("riesz: polynomial degree exceeds moment order");
  const auto basis = monomials_up_to(y.n, y.order);
  double v = 0.0;
  for (const auto& [a, c] : p.terms()) {
    const int idx = monomial_index(basis, a);
    v += c * y.values[static_cast<std::size_t>(idx)];
  }
  return v;
}

}  // namespace ctpop
