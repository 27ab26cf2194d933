#include "ctpop/extract.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "ctpop/poly.hpp"

namespace ctpop {

Eigen::MatrixXd moment_from_X(const Eigen::MatrixXd& X,
                              const ScalingDiagonal& sc) {
  const int s = static_cast<int>(sc.diag.size());
  if (X.rows() != s || X.cols() != s)
    throw std::invalid_argument("moment_from_X: dimension mismatch");
  Eigen::MatrixXd M(s, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) M(i, j) = X(i, j) / (sc.diag[i] * sc.diag[j]);
  return 0.5 * (M + M.transpose());
}

MomentVector moments_from_matrix(const Eigen::MatrixXd& M, int n, int k) {
  const auto basis = monomials_up_to(n, k);
  const int s = static_cast<int>(basis.size());
  if (M.rows() != s || M.cols() != s)
    throw std::invalid_argument("moments_from_matrix: dimension mismatch");
  std::map<Exponent, std::pair<double, int>, GrlexLess> acc;
  for (int a = 0; a < s; ++a)
    for (int b = a; b < s; ++b) {
      Exponent g(basis[a]);
      for (int i = 0; i < n; ++i) g[i] += basis[b][i];
      auto& slot = acc[g];
      slot.first += M(a, b);
      slot.second += 1;
    }
  MomentVector y(n, 2 * k);
  const auto full = monomials_up_to(n, 2 * k);
  for (std::size_t i = 0; i < full.size(); ++i) {
    const auto it = acc.find(full[i]);
    y.values[i] = it == acc.end() ? 0.0 : it->second.first / it->second.second;
  }
  return y;
}

namespace {

int numerical_rank(const Eigen::MatrixXd& A, double rank_tol) {
  if (A.rows() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > rank_tol * sv[0]) ++r;
  return r;
}

}  // namespace

FlatnessReport flatness_check(const Eigen::MatrixXd& M, int n, int k, int w,
                              double rank_tol) {
  if (w < 0 || w > k) throw std::invalid_argument("flatness_check: bad w");
  const int s_low = static_cast<int>(monomials_up_to(n, k - w).size());
  const int s = static_cast<int>(monomials_up_to(n, k).size());
  if (M.rows() != s || M.cols() != s)
    throw std::invalid_argument("flatness_check: dimension mismatch");
  FlatnessReport rep;
  const int r_low = numerical_rank(M.topLeftCorner(s_low, s_low), rank_tol);
  const int r_full = numerical_rank(M, rank_tol);
  rep.ranks = {{k - w, r_low}, {k, r_full}};
  rep.flat = r_low == r_full;
  return rep;
}

std::vector<Atom> extract_atoms(const Eigen::MatrixXd& M, int n, int k,
                                double rank_tol, std::uint64_t seed) {
  const auto basis = monomials_up_to(n, k);
  const int s = static_cast<int>(basis.size());
  if (M.rows() != s || M.cols() != s)
    throw std::invalid_argument("extract_atoms: dimension mismatch");
  const double y0 = M(0, 0);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const double lmax = es.eigenvalues().cwiseMax(0.0).maxCoeff();
  if (lmax <= 0) throw ExtractionError("extract_atoms: moment matrix is zero");
  int r = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] > rank_tol * lmax) ++r;

  // Rank one: the atom is read directly off the degree-1 moments.
  if (r == 1) {
    Atom a;
    a.point.resize(n);
    for (int i = 0; i < n; ++i) {
      Exponent e(n, 0);
      e[i] = 1;
      a.point[i] = M(0, monomial_index(basis, e)) / y0;
    }
    a.weight = y0;
    return {a};
  }

  // M ~ V^T V with V of row rank r (rows ordered by decreasing eigenvalue).
  Eigen::MatrixXd V(r, s);
  for (int t = 0; t < r; ++t) {
    const int src = s - 1 - t;  // Eigen sorts ascending
    V.row(t) =
        std::sqrt(std::max(es.eigenvalues()[src], 0.0)) *
        es.eigenvectors().col(src).transpose();
  }

  // Column-echelon reduction in graded-lex column order: pivot columns name
  // the monomial basis of the quotient space; every other column then holds
  // the coordinates of its monomial in that basis.
  std::vector<int> pivots;
  {
    const double scale = V.cwiseAbs().maxCoeff();
    int row = 0;
    for (int col = 0; col < s && row < r; ++col) {
      int best = row;
      for (int t = row + 1; t < r; ++t)
        if (std::abs(V(t, col)) > std::abs(V(best, col))) best = t;
      if (std::abs(V(best, col)) <= 1e-9 * scale) continue;
      V.row(row).swap(V.row(best));
      V.row(row) /= V(row, col);
      for (int t = 0; t < r; ++t)
        if (t != row) V.row(t) -= V(t, col) * V.row(row);
      pivots.push_back(col);
      ++row;
    }
    if (static_cast<int>(pivots.size()) < r)
      throw ExtractionError("extract_atoms: rank-deficient echelon reduction");
  }

  // Multiplication matrices: column t of N_i expresses x_i * (basis monomial
  // of pivot t) in the quotient basis. A pivot of top degree has no image in
  // the truncation; that only happens when flatness failed numerically.
  std::vector<Eigen::MatrixXd> N(n, Eigen::MatrixXd(r, r));
  for (int t = 0; t < r; ++t) {
    Exponent beta = basis[pivots[t]];
    for (int i = 0; i < n; ++i) {
      Exponent gamma(beta);
      gamma[i] += 1;
      const int col = monomial_index(basis, gamma);
      if (col < 0)
        throw ExtractionError(
            "extract_atoms: basis monomial of full degree (non-flat input)");
      N[i].col(t) = V.col(col);
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double comm = (N[i] * N[j] - N[j] * N[i]).norm();
      const double scale = std::max(1.0, N[i].norm() * N[j].norm());
      if (comm > 1e-6 * scale)
        throw ExtractionError(
            "extract_atoms: multiplication matrices do not commute");
    }

  // Joint diagonalization through one seeded random convex combination.
  std::mt19937_64 eng(seed);
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i)
    c[i] = 0.1 + static_cast<double>(eng() >> 11) * 0x1.0p-53;
  c /= c.sum();
  Eigen::MatrixXd Nmix = Eigen::MatrixXd::Zero(r, r);
  for (int i = 0; i < n; ++i) Nmix += c[i] * N[i];
  Eigen::RealSchur<Eigen::MatrixXd> schur(Nmix);
  const Eigen::MatrixXd& T = schur.matrixT();
  const Eigen::MatrixXd& Q = schur.matrixU();
  for (int t = 0; t + 1 < r; ++t)
    if (std::abs(T(t + 1, t)) > 1e-6 * std::max(1.0, Nmix.norm()))
      throw ExtractionError("extract_atoms: complex eigenvalues in the "
                            "multiplication matrix");

  std::vector<Atom> atoms(r);
  for (int t = 0; t < r; ++t) {
    atoms[t].point.resize(n);
    for (int i = 0; i < n; ++i)
      atoms[t].point[i] = Q.col(t).dot(N[i] * Q.col(t));
  }

  // Weights: least squares of y_alpha = sum_t w_t (x_t)^alpha over the
  // degree <= k moments, read off the first column of M.
  Eigen::MatrixXd Phi(s, r);
  for (int a = 0; a < s; ++a)
    for (int t = 0; t < r; ++t) {
      double v = 1.0;
      for (int i = 0; i < n; ++i)
        for (int p = 0; p < basis[a][i]; ++p) v *= atoms[t].point[i];
      Phi(a, t) = v;
    }
  const Eigen::VectorXd w =
      Phi.colPivHouseholderQr().solve(M.col(0));
  for (int t = 0; t < r; ++t) atoms[t].weight = w[t];
  return atoms;
}

CertifyReport certify(const Eigen::VectorXd& x, const PopProblem& pop,
                      double tau_k, double eps) {
  if (eps <= 0 || eps >= 1) throw std::invalid_argument("certify: eps not in (0,1)");
  if (x.size() != pop.n) throw std::invalid_argument("certify: dimension mismatch");
  std::vector<double> pt(x.data(), x.data() + x.size());

  CertifyReport rep;
  rep.objective_gap = std::abs(pop.objective.eval(pt) - tau_k);
  rep.objective_bound = eps * poly_norms(pop.objective).max_norm;
  rep.ok = rep.objective_gap <= rep.objective_bound;
  for (const auto& h : pop.equalities) {
    rep.eq_residuals.push_back(std::abs(h.eval(pt)));
    rep.eq_bounds.push_back(eps * poly_norms(h).max_norm);
    if (rep.eq_residuals.back() > rep.eq_bounds.back()) rep.ok = false;
  }
  for (const auto& g : pop.inequalities) {
    rep.ineq_values.push_back(g.eval(pt));
    rep.ineq_bounds.push_back(-eps * poly_norms(g).max_norm);
    if (rep.ineq_values.back() < rep.ineq_bounds.back()) rep.ok = false;
  }
  return rep;
}

}  // namespace ctpop
