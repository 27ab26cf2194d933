#include "ctpop/relax.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace ctpop {

std::vector<Eigen::MatrixXd> zero_blocks(const std::vector<int>& dims) {
  std::vector<Eigen::MatrixXd> X;
  X.reserve(dims.size());
  for (int d : dims) X.push_back(Eigen::MatrixXd::Zero(d, d));
  return X;
}

void add_to_blocks(std::vector<Eigen::MatrixXd>& X, const SymBlockMat& A,
                   double s) {
  for (const auto& e : A.entries) {
    X[e.blk](e.i, e.j) += s * e.v;
    if (e.i != e.j) X[e.blk](e.j, e.i) += s * e.v;
  }
}

double inner(const SymBlockMat& A, const std::vector<Eigen::MatrixXd>& X) {
  double v = 0.0;
  for (const auto& e : A.entries)
    v += (e.i == e.j ? 1.0 : 2.0) * e.v * X[e.blk](e.i, e.j);
  return v;
}

double quad_form(const SymBlockMat& A, const std::vector<int>& dims,
                 const Eigen::VectorXd& u) {
  std::vector<int> off(dims.size(), 0);
  for (std::size_t b = 1; b < dims.size(); ++b) off[b] = off[b - 1] + dims[b - 1];
  double v = 0.0;
  for (const auto& e : A.entries) {
    const double t = u[off[e.blk] + e.i] * u[off[e.blk] + e.j];
    v += (e.i == e.j ? 1.0 : 2.0) * e.v * t;
  }
  return v;
}

int SdpProblem::total_dim() const {
  int s = 0;
  for (int d : block_dims) s += d;
  return s;
}

std::vector<int> SdpProblem::block_offsets() const {
  std::vector<int> off(block_dims.size(), 0);
  for (std::size_t b = 1; b < block_dims.size(); ++b)
    off[b] = off[b - 1] + block_dims[b - 1];
  return off;
}

ScalingDiagonal theta_coeffs(int n, int k) {
  ScalingDiagonal sc;
  sc.n = n;
  sc.k = k;
  const auto basis = monomials_up_to(n, k);
  sc.diag.reserve(basis.size());
  for (const auto& a : basis) {
    // multinomial k! / (a_1! ... a_n! (k - |a|)!), computed as a product of
    // binomials to stay in exact integers
    long long th = 1;
    int remaining = k;
    for (int e : a) {
      th *= binomial(remaining, e);
      remaining -= e;
    }
    sc.theta[a] = static_cast<double>(th);
    sc.diag.push_back(std::sqrt(static_cast<double>(th)));
  }
  return sc;
}

double trace_constant(double Rbar, int k) {
  if (Rbar <= 0.0) throw std::invalid_argument("trace_constant: Rbar must be > 0");
  return std::pow(Rbar + 1.0, k);
}

namespace {

// Unordered index pairs (ia, ib), ia <= ib, with basis[ia] + basis[ib] = gamma,
// in increasing graded-lex order of the first element.
std::vector<std::pair<int, int>> pair_set(const std::vector<Exponent>& basis,
                                          const Exponent& gamma, int k) {
  std::vector<std::pair<int, int>> pairs;
  const int n = static_cast<int>(gamma.size());
  Exponent beta(n);
  for (std::size_t ia = 0; ia < basis.size(); ++ia) {
    const Exponent& alpha = basis[ia];
    bool ok = true;
    int db = 0;
    for (int i = 0; i < n; ++i) {
      beta[i] = gamma[i] - alpha[i];
      if (beta[i] < 0) { ok = false; break; }
      db += beta[i];
    }
    if (!ok || db > k) continue;
    if (grlex_less(beta, alpha)) continue;  // keep only alpha <= beta
    const int ib = monomial_index(basis, beta);
    pairs.emplace_back(static_cast<int>(ia), ib);
  }
  return pairs;
}

}  // namespace

std::vector<SymBlockMat> orth_complement_basis(int n, int k,
                                               const ScalingDiagonal& sc) {
  return orth_complement_basis(n, k, sc, nullptr);
}

std::vector<SymBlockMat> orth_complement_basis(
    int n, int k, const ScalingDiagonal& sc,
    std::vector<ConstraintOrigin>* origins) {
  const auto basis = monomials_up_to(n, k);
  std::vector<SymBlockMat> out;
  for (const auto& gamma : monomials_up_to(n, 2 * k)) {
    const auto pairs = pair_set(basis, gamma, k);
    if (pairs.size() < 2) continue;
    const auto [a1, b1] = pairs.front();
    const double w1 = sc.diag[a1] * sc.diag[b1];
    for (std::size_t mu = 1; mu < pairs.size(); ++mu) {
      const auto [am, bm] = pairs[mu];
      const double wm = sc.diag[am] * sc.diag[bm];
      SymBlockMat A;
      A.add(0, a1, b1, a1 == b1 ? wm : 0.5 * wm);
      A.add(0, am, bm, am == bm ? -w1 : -0.5 * w1);
      out.push_back(std::move(A));
      if (origins) {
        ConstraintOrigin o;
        o.kind = ConstraintKind::orth_complement;
        o.gamma = gamma;
        o.mu = static_cast<int>(mu);
        origins->push_back(std::move(o));
      }
    }
  }
  return out;
}

namespace {

// A = P^{-1} A~ P^{-1} where A~ places each target coefficient on the
// graded-lex-minimal unordered index pair realizing the exponent (full weight
// on a diagonal hit, half weight mirrored otherwise).
SymBlockMat assemble_min_pair(const Polynomial& poly, const Exponent& shift,
                              const std::vector<Exponent>& basis, int k,
                              const ScalingDiagonal& sc, double sign) {
  const int n = static_cast<int>(shift.size());
  std::map<std::pair<int, int>, double> acc;
  Exponent delta(n);
  for (const auto& [gamma, c] : poly.terms()) {
    for (int i = 0; i < n; ++i) delta[i] = shift[i] + gamma[i];
    const auto pairs = pair_set(basis, delta, k);
    if (pairs.empty())
      throw std::invalid_argument(
          "relaxation order too small for a constraint/objective exponent");
    const auto [ia, ib] = pairs.front();
    acc[{ia, ib}] += sign * (ia == ib ? c : 0.5 * c);
  }
  SymBlockMat A;
  for (const auto& [ij, v] : acc) {
    if (v == 0.0) continue;
    A.add(0, ij.first, ij.second, v / (sc.diag[ij.first] * sc.diag[ij.second]));
  }
  return A;
}

}  // namespace

std::vector<SymBlockMat> localizing_constraints(const Polynomial& h, int n,
                                                int k,
                                                const ScalingDiagonal& sc) {
  const int ceil_h = (h.degree() + 1) / 2;
  if (ceil_h > k)
    throw std::invalid_argument("localizing_constraints: 2*ceil(deg h / 2) > 2k");
  const auto basis = monomials_up_to(n, k);
  std::vector<SymBlockMat> out;
  for (const auto& alpha : monomials_up_to(n, 2 * (k - ceil_h)))
    out.push_back(assemble_min_pair(h, alpha, basis, k, sc, 1.0));
  return out;
}

SymBlockMat cost_matrix(const Polynomial& f, int n, int k,
                        const ScalingDiagonal& sc) {
  if (f.degree() > 2 * k)
    throw std::invalid_argument("cost_matrix: deg f > 2k");
  const auto basis = monomials_up_to(n, k);
  return assemble_min_pair(f, Exponent(n, 0), basis, k, sc, -1.0);
}

SdpProblem build_moment_sdp(const PopProblem& pop, int k,
                            std::optional<double> assume_sphere_R) {
  const int n = pop.n;
  if (pop.lg() > 0)
    throw std::invalid_argument(
        "build_moment_sdp: inequality constraints present; reduce to a sphere "
        "problem first");
  double Rbar;
  if (assume_sphere_R) {
    Rbar = *assume_sphere_R;
  } else {
    const int slot = find_sphere_constraint(pop.equalities);
    if (slot < 0)
      throw std::invalid_argument(
          "build_moment_sdp: no equality of the form Rbar - ||x||^2");
    Rbar = *detect_sphere_radius(pop.equalities[slot]);
  }
  int max_ceil = (pop.objective.degree() + 1) / 2;
  for (const auto& h : pop.equalities)
    max_ceil = std::max(max_ceil, (h.degree() + 1) / 2);
  if (k < max_ceil)
    throw std::invalid_argument("build_moment_sdp: order k below max ceil(deg/2)");

  const auto sc = theta_coeffs(n, k);
  SdpProblem sdp;
  sdp.block_dims = {static_cast<int>(binomial(n + k, n))};
  sdp.cost = cost_matrix(pop.objective, n, k, sc);
  sdp.trace_constant = trace_constant(Rbar, k);

  sdp.constraints = orth_complement_basis(n, k, sc, &sdp.origins);
  for (int j = 0; j < pop.lh(); ++j) {
    const auto loc = localizing_constraints(pop.equalities[j], n, k, sc);
    const auto alphas =
        monomials_up_to(n, 2 * (k - (pop.equalities[j].degree() + 1) / 2));
    for (std::size_t t = 0; t < loc.size(); ++t) {
      sdp.constraints.push_back(loc[t]);
      ConstraintOrigin o;
      o.kind = ConstraintKind::localizing;
      o.j = j;
      o.alpha = alphas[t];
      sdp.origins.push_back(std::move(o));
    }
  }
  // y_0 = 1 normalization; the scaling leaves the (0,0) entry untouched.
  SymBlockMat norm;
  norm.add(0, 0, 0, 1.0);
  sdp.constraints.push_back(std::move(norm));
  sdp.origins.push_back({ConstraintKind::normalization, {}, 0, 0, {}});

  sdp.b = Eigen::VectorXd::Zero(sdp.m());
  sdp.b[sdp.m() - 1] = 1.0;
  return sdp;
}

Eigen::MatrixXd moment_matrix(const MomentVector& y, int k) {
  const auto basis = monomials_up_to(y.n, k);
  const auto basis2 = monomials_up_to(y.n, y.order);
  if (y.order < 2 * k)
    throw std::invalid_argument("moment_matrix: moment order below 2k");
  const int s = static_cast<int>(basis.size());
  Eigen::MatrixXd M(s, s);
  Exponent sum(y.n);
  for (int i = 0; i < s; ++i)
    for (int j = i; j < s; ++j) {
      for (int v = 0; v < y.n; ++v) sum[v] = basis[i][v] + basis[j][v];
      const int idx = monomial_index(basis2, sum);
      M(i, j) = M(j, i) = y.values[static_cast<std::size_t>(idx)];
    }
  return M;
}

Eigen::MatrixXd scaled_moment_matrix(const MomentVector& y,
                                     const ScalingDiagonal& sc) {
  Eigen::MatrixXd M = moment_matrix(y, sc.k);
  Eigen::VectorXd d =
      Eigen::Map<const Eigen::VectorXd>(sc.diag.data(), sc.diag.size());
  return d.asDiagonal() * M * d.asDiagonal();
}

void write_sdpa(std::ostream& os, const SdpProblem& sdp) {
  char buf[40];
  const auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  os << "\"block SDP with constant trace " << fmt(sdp.trace_constant) << "\n";
  os << sdp.m() << "\n";
  os << sdp.block_dims.size() << "\n";
  for (std::size_t b = 0; b < sdp.block_dims.size(); ++b)
    os << sdp.block_dims[b] << (b + 1 < sdp.block_dims.size() ? " " : "\n");
  for (int i = 0; i < sdp.m(); ++i)
    os << fmt(sdp.b[i]) << (i + 1 < sdp.m() ? " " : "\n");
  const auto emit = [&](int matno, const SymBlockMat& A) {
    for (const auto& e : A.entries)
      os << matno << " " << e.blk + 1 << " " << e.i + 1 << " " << e.j + 1 << " "
         << fmt(e.v) << "\n";
  };
  emit(0, sdp.cost);
  for (int i = 0; i < sdp.m(); ++i) emit(i + 1, sdp.constraints[i]);
}

}  // namespace ctpop
