#include "ctpop/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "ctpop/simplex_qp.hpp"

namespace ctpop {

namespace {
constexpr int kDenseStorageCutoff = 1024;

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - since)
      .count();
}
}  // namespace

void write_history_csv(std::ostream& os,
                       const std::vector<IterRecord>& history) {
  os << "iter,objective,subgrad_norm,step_type,lambda1,time_ms\n";
  const auto name = [](char c) {
    switch (c) {
      case 's': return "serious";
      case 'n': return "null";
      default: return "subgradient";
    }
  };
  char buf[160];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%s,%.10g,%.3f\n", r.iter,
                  r.objective, r.subgrad_norm, name(r.step_type), r.lambda1,
                  r.time_ms);
    os << buf;
  }
}

SpectralObjective::SpectralObjective(const SdpProblem& sdp, SpectralMode mode)
    : sdp_(&sdp), mode_(mode) {
  if (sdp.trace_constant <= 0)
    throw std::invalid_argument("SpectralObjective: trace constant not set");
  if (sdp.m() != sdp.b.size())
    throw std::invalid_argument("SpectralObjective: b length != #constraints");
}

BlockSymmetricOperator SpectralObjective::pencil(
    const Eigen::VectorXd& z) const {
  const auto& dims = sdp_->block_dims;
  BlockSymmetricOperator op;
  op.dims = dims;
  op.blocks.resize(dims.size());
  for (std::size_t blk = 0; blk < dims.size(); ++blk) {
    if (dims[blk] <= kDenseStorageCutoff) {
      op.blocks[blk].is_dense = true;
      op.blocks[blk].dense = Eigen::MatrixXd::Zero(dims[blk], dims[blk]);
    }
  }
  // Accumulates one upper-triangle entry of C - A^T z.
  const auto put = [&op](int blk, int i, int j, double v) {
    if (op.blocks[blk].is_dense)
      op.blocks[blk].dense(i, j) += v;
    else
      op.blocks[blk].sparse.push_back({blk, i, j, v});
  };
  for (const auto& e : sdp_->cost.entries) put(e.blk, e.i, e.j, e.v);
  for (int ci = 0; ci < sdp_->m(); ++ci) {
    const double zi = z[ci];
    if (zi == 0.0) continue;
    for (const auto& e : sdp_->constraints[ci].entries)
      put(e.blk, e.i, e.j, -zi * e.v);
  }
  return op;
}

Eigen::VectorXd SpectralObjective::apply_A_uuT(const Eigen::VectorXd& u) const {
  const auto off = sdp_->block_offsets();
  Eigen::VectorXd out(sdp_->m());
  for (int ci = 0; ci < sdp_->m(); ++ci) {
    double s = 0.0;
    for (const auto& e : sdp_->constraints[ci].entries) {
      const double ui = u[off[e.blk] + e.i], uj = u[off[e.blk] + e.j];
      s += (e.i == e.j ? e.v * ui * uj : 2.0 * e.v * ui * uj);
    }
    out[ci] = s;
  }
  return out;
}

double SpectralObjective::cost_inner(
    const std::vector<Eigen::MatrixXd>& X) const {
  return inner(sdp_->cost, X);
}

namespace {

SpectralEval eval_phi(const SpectralObjective& obj, const Eigen::VectorXd& z,
                      const SpectralOptions& opts) {
  SpectralEval ev;
  ev.eig = lambda_max(obj.pencil(z), opts.eig_tol, opts.cluster_tol);
  ev.value = obj.a() * ev.eig.lambda1 + obj.b().dot(z);
  ev.subgradient = obj.b() - obj.a() * obj.apply_A_uuT(ev.eig.U.col(0));
  return ev;
}

SpectralEval eval_psi(const SpectralObjective& obj, const Eigen::VectorXd& z,
                      const SpectralOptions& opts) {
  SpectralEval ev;
  ev.eig = lambda_max(obj.pencil(z), opts.eig_tol, opts.cluster_tol);
  const double l1 = ev.eig.lambda1;
  ev.value = obj.a() * std::max(l1, 0.0) + obj.b().dot(z);
  if (l1 > opts.hinge_tol) {
    ev.subgradient = obj.b() - obj.a() * obj.apply_A_uuT(ev.eig.U.col(0));
  } else if (l1 < -opts.hinge_tol) {
    ev.subgradient = obj.b();
  } else {
    ev.subgradient = obj.b() - 0.5 * obj.a() * obj.apply_A_uuT(ev.eig.U.col(0));
  }
  return ev;
}

SpectralEval evaluate(const SpectralObjective& obj, const Eigen::VectorXd& z,
                      const SpectralOptions& opts) {
  SpectralEval ev = obj.mode() == SpectralMode::ctp ? eval_phi(obj, z, opts)
                                                    : eval_psi(obj, z, opts);
  if (!std::isfinite(ev.value))
    throw std::runtime_error("spectral objective is not finite");
  return ev;
}

struct Cut {
  Eigen::VectorXd g;
  double c;  // affine intercept: cut(z) = c + g.dot(z)
};

// Valid minorants from the evaluated cluster: every unit vector u gives
// phi(z) >= a u^T (C - A^T z) u + b^T z, so each Ritz vector contributes a
// cut, not just the leading one -- near a kink the master needs the whole
// active eigenspace to drive the aggregate gradient to zero. For the hinged
// objective only nonnegative Rayleigh quotients are pieces of psi.
void append_cluster_cuts(const SpectralObjective& obj, const SpectralEval& ev,
                         const Eigen::VectorXd& zp, int max_new,
                         std::vector<Cut>& cuts) {
  const bool hinged = obj.mode() == SpectralMode::btp;
  const int ncols = std::min(static_cast<int>(ev.eig.U.cols()), max_new);
  const double bz = obj.b().dot(zp);
  for (int j = 0; j < ncols; ++j) {
    const double theta = ev.eig.values[j];
    if (hinged && theta < 0.0) break;
    const Eigen::VectorXd g =
        obj.b() - obj.a() * obj.apply_A_uuT(ev.eig.U.col(j));
    cuts.push_back({g, obj.a() * theta + bz - g.dot(zp)});
  }
}

MinimizeResult minimize_bundle(const SpectralObjective& obj,
                               const Eigen::VectorXd& z0,
                               const SpectralOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();
  MinimizeResult res;

  SpectralEval ev = evaluate(obj, z0, opts);
  Eigen::VectorXd zc = z0;                // center
  double fc = ev.value;
  Eigen::VectorXd z_best = zc;
  double f_best = fc;
  res.history.push_back(
      {0, ev.value, ev.subgradient.norm(), 's', ev.eig.lambda1,
       elapsed_ms(t_start)});

  constexpr int kCutsPerEval = 4;
  std::vector<Cut> cuts;
  append_cluster_cuts(obj, ev, z0, kCutsPerEval, cuts);
  if (obj.mode() == SpectralMode::btp)
    cuts.push_back({obj.b(), 0.0});  // the zero piece of the hinge

  double t = 1.0 / (1.0 + ev.subgradient.norm());  // proximal stepsize
  constexpr double kTMin = 1e-12, kTMax = 1e8;
  constexpr double kDescentRatio = 0.1;
  int consecutive_null = 0;
  res.status = SolveStatus::iteration_limit;

  for (int it = 1; it <= opts.max_iter; ++it) {
    res.iterations = it;
    if (opts.time_budget_s > 0 &&
        elapsed_ms(t_start) > 1e3 * opts.time_budget_s)
      break;
    const int nb = static_cast<int>(cuts.size());

    // Dual master over bundle weights: min (t/2)||G xi||^2 + e^T xi on the
    // simplex, where e_j >= 0 is cut j's linearization error at the center.
    Eigen::MatrixXd G(zc.size(), nb);
    Eigen::VectorXd e(nb);
    for (int j = 0; j < nb; ++j) {
      G.col(j) = cuts[j].g;
      e[j] = std::max(0.0, fc - cuts[j].c - cuts[j].g.dot(zc));
    }
    const Eigen::MatrixXd H = t * (G.transpose() * G);
    const SimplexQpResult qp = solve_simplex_qp_form(H, -e, 1.0, 1e-10);
    const Eigen::VectorXd g_agg = G * qp.xi;
    const double e_agg = std::max(0.0, e.dot(qp.xi));
    const double g_agg_sq = g_agg.squaredNorm();
    const double predicted = e_agg + t * g_agg_sq;  // model decrease at z+

    if (predicted <= opts.tol * (1.0 + std::abs(fc))) {
      res.status = SolveStatus::converged;
      break;
    }

    const Eigen::VectorXd zp = zc - t * g_agg;
    ev = evaluate(obj, zp, opts);
    const double actual = fc - ev.value;
    const bool serious = actual >= kDescentRatio * predicted;
    res.history.push_back({it, ev.value, ev.subgradient.norm(),
                           serious ? 's' : 'n', ev.eig.lambda1,
                           elapsed_ms(t_start)});
    if (ev.value < f_best) {
      f_best = ev.value;
      z_best = zp;
    }

    if (serious) {
      zc = zp;
      fc = ev.value;
      consecutive_null = 0;
      if (actual >= 0.5 * predicted) t = std::min(2.0 * t, kTMax);
    } else {
      ++consecutive_null;
      // Shrink the prox stepsize only when the model badly overshot -- the
      // new cut sits far above the model at the center -- never merely
      // because progress paused while the bundle accumulates the pieces
      // active at a kink (that would collapse the step and fake optimality).
      const double e_new =
          fc - ev.value - ev.subgradient.dot(zc - zp);  // >= 0 by convexity
      if (e_new > 5.0 * predicted) t = std::max(0.5 * t, kTMin);
      if (it > 500 && res.history.size() > 500) {
        // long run of null steps without measurable center progress
        bool all_null = true;
        for (std::size_t r = res.history.size() - 500; r < res.history.size();
             ++r)
          if (res.history[r].step_type == 's') all_null = false;
        if (all_null) {
          res.status = SolveStatus::stalled;
          break;
        }
      }
    }

    // Bundle maintenance: when the next evaluation would overflow, fold the
    // master solution into one aggregate cut and drop the lowest-weight
    // members to make room.
    if (static_cast<int>(cuts.size()) + kCutsPerEval + 1 >
        opts.bundle_max_cuts) {
      double c_agg = 0.0;
      for (int j = 0; j < nb; ++j) c_agg += qp.xi[j] * cuts[j].c;
      std::vector<int> order(cuts.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](int x, int y) { return qp.xi[x] < qp.xi[y]; });
      std::vector<bool> drop(cuts.size(), false);
      int remaining = static_cast<int>(cuts.size());
      for (int idx : order) {
        if (remaining <= opts.bundle_max_cuts - 1 - kCutsPerEval) break;
        drop[idx] = true;
        --remaining;
      }
      std::vector<Cut> kept;
      for (std::size_t j = 0; j < cuts.size(); ++j)
        if (!drop[j]) kept.push_back(std::move(cuts[j]));
      kept.push_back({g_agg, c_agg});
      cuts = std::move(kept);
    }
    append_cluster_cuts(obj, ev, zp, kCutsPerEval, cuts);
  }

  res.z = z_best;
  res.value = f_best;
  return res;
}

MinimizeResult minimize_subgradient(const SpectralObjective& obj,
                                    const Eigen::VectorXd& z0,
                                    const SpectralOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();
  MinimizeResult res;

  Eigen::VectorXd z = z0;
  SpectralEval ev = evaluate(obj, z, opts);
  Eigen::VectorXd z_best = z;
  double f_best = ev.value;
  res.history.push_back({0, ev.value, ev.subgradient.norm(), 'g',
                         ev.eig.lambda1, elapsed_ms(t_start)});

  // Polyak steps toward the adaptive level f_best - delta; delta halves
  // whenever a window of iterations fails to improve the record value.
  double delta = std::max(1.0, 0.1 * (1.0 + std::abs(f_best)));
  constexpr int kWindow = 50;
  int since_improve = 0;
  res.status = SolveStatus::iteration_limit;

  for (int it = 1; it <= opts.max_iter; ++it) {
    res.iterations = it;
    if (opts.time_budget_s > 0 &&
        elapsed_ms(t_start) > 1e3 * opts.time_budget_s)
      break;
    const double gsq = ev.subgradient.squaredNorm();
    if (gsq <= 1e-28) {
      res.status = SolveStatus::converged;
      break;
    }
    const double step = (ev.value - (f_best - delta)) / gsq;
    z -= step * ev.subgradient;
    ev = evaluate(obj, z, opts);
    res.history.push_back({it, ev.value, ev.subgradient.norm(), 'g',
                           ev.eig.lambda1, elapsed_ms(t_start)});
    if (ev.value < f_best - 1e-12 * (1.0 + std::abs(f_best))) {
      f_best = ev.value;
      z_best = z;
      since_improve = 0;
    } else if (++since_improve >= kWindow) {
      delta *= 0.5;
      since_improve = 0;
    }
    if (delta <= opts.tol * (1.0 + std::abs(f_best))) {
      res.status = SolveStatus::converged;
      break;
    }
  }

  res.z = z_best;
  res.value = f_best;
  return res;
}

}  // namespace

SpectralEval phi_value_and_subgradient(const SpectralObjective& obj,
                                       const Eigen::VectorXd& z,
                                       const SpectralOptions& opts) {
  return eval_phi(obj, z, opts);
}

SpectralEval psi_value_and_subgradient(const SpectralObjective& obj,
                                       const Eigen::VectorXd& z,
                                       const SpectralOptions& opts) {
  return eval_psi(obj, z, opts);
}

MinimizeResult minimize_nonsmooth(const SpectralObjective& obj,
                                  const Eigen::VectorXd& z0,
                                  const SpectralOptions& opts) {
  if (z0.size() != obj.m())
    throw std::invalid_argument("minimize_nonsmooth: z0 has wrong length");
  if (!z0.allFinite())
    throw std::invalid_argument("minimize_nonsmooth: z0 not finite");
  return opts.method == NonsmoothMethod::proximal_bundle
             ? minimize_bundle(obj, z0, opts)
             : minimize_subgradient(obj, z0, opts);
}

PrimalRecovery recover_primal(const SpectralObjective& obj,
                              const Eigen::VectorXd& /*z_bar*/,
                              const EigResult& eig,
                              const SpectralOptions& opts) {
  const auto& dims = obj.sdp().block_dims;
  const auto off = obj.sdp().block_offsets();
  PrimalRecovery rec;

  // Vectors arrive sorted by decreasing Rayleigh quotient; cap the QP size.
  const int r =
      std::min(static_cast<int>(eig.U.cols()), opts.max_recovery_vectors);
  if (r < 1) throw std::invalid_argument("recover_primal: empty eigenspace");

  const bool ctp = obj.mode() == SpectralMode::ctp;
  double scale_per_vec, total;
  bool slack = false;
  if (ctp) {
    scale_per_vec = obj.a();  // X* = a sum xi_j u_j u_j^T, sum xi = 1
    total = 1.0;
  } else {
    scale_per_vec = 1.0;  // X* = sum xi_j u_j u_j^T
    if (eig.lambda1 < -opts.hinge_tol) {
      rec.X = zero_blocks(dims);
      rec.xi = Eigen::VectorXd::Zero(r);
      rec.residual = obj.b().norm();
      return rec;
    }
    total = obj.a();
    slack = std::abs(eig.lambda1) <= opts.hinge_tol;  // sum xi <= a
  }

  Eigen::MatrixXd M(obj.m(), r + (slack ? 1 : 0));
  for (int j = 0; j < r; ++j)
    M.col(j) = scale_per_vec * obj.apply_A_uuT(eig.U.col(j));
  if (slack) M.col(r).setZero();
  const SimplexQpResult qp = solve_simplex_qp(M, obj.b(), total, 1e-10);
  rec.xi = qp.xi.head(r);
  rec.U = eig.U.leftCols(r);
  rec.residual = (M * qp.xi - obj.b()).norm();

  rec.X = zero_blocks(dims);
  for (int j = 0; j < r; ++j) {
    const double w = scale_per_vec * rec.xi[j];
    if (w == 0.0) continue;
    for (std::size_t blk = 0; blk < dims.size(); ++blk) {
      const auto u = eig.U.col(j).segment(off[blk], dims[blk]);
      rec.X[blk].noalias() += w * (u * u.transpose());
    }
  }
  return rec;
}

void reduce_recovery_rank(const SpectralObjective& obj, PrimalRecovery& rec) {
  if (rec.U.cols() == 0 || rec.xi.size() != rec.U.cols()) return;
  const double scale = obj.mode() == SpectralMode::ctp ? obj.a() : 1.0;

  // Keep only the vectors that actually carry weight in X.
  const double total = scale * rec.xi.sum();
  if (!(total > 0)) return;
  std::vector<int> support;
  for (Eigen::Index j = 0; j < rec.xi.size(); ++j)
    if (scale * rec.xi[j] > 1e-12 * total) support.push_back(static_cast<int>(j));
  int r = static_cast<int>(support.size());
  if (r <= 1 || r > 16) return;

  Eigen::MatrixXd W(rec.U.rows(), r);
  Eigen::VectorXd lam(r);
  for (int j = 0; j < r; ++j) {
    W.col(j) = rec.U.col(support[j]);
    lam[j] = scale * rec.xi[support[j]];
  }

  const auto residual_of = [&](const Eigen::MatrixXd& Wc,
                               const Eigen::VectorXd& lc) {
    Eigen::VectorXd Ax = Eigen::VectorXd::Zero(obj.m());
    for (Eigen::Index t = 0; t < lc.size(); ++t)
      Ax += lc[t] * obj.apply_A_uuT(Wc.col(t));
    return (Ax - obj.b()).norm();
  };
  // Null directions of the face are only approximate (the mixing vectors
  // carry the solver's noise), so steps are validated a posteriori: a pass
  // is kept only while the constraint residual stays within a small
  // multiple of what the recovery started from.
  const double res_budget =
      3.0 * residual_of(W, lam) + 1e-12 * (1.0 + obj.b().norm());

  for (int pass = 0; pass < 4 * r && lam.size() > 1; ++pass) {
    const int rc = static_cast<int>(lam.size());
    const int nsym = rc * (rc + 1) / 2;

    // Columns of the constraint map on the symmetric span basis
    // {W_p W_p^T, W_p W_q^T + W_q W_p^T}, built by polarization.
    Eigen::MatrixXd G(obj.m(), nsym);
    std::vector<Eigen::VectorXd> diag_cols(rc);
    for (int p = 0; p < rc; ++p) diag_cols[p] = obj.apply_A_uuT(W.col(p));
    int c = 0;
    for (int p = 0; p < rc; ++p)
      for (int q = p; q < rc; ++q, ++c)
        G.col(c) = (q == p) ? diag_cols[p]
                            : (obj.apply_A_uuT(W.col(p) + W.col(q)) -
                               diag_cols[p] - diag_cols[q]).eval();

    const Eigen::MatrixXd GtG = G.transpose() * G;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> en(GtG);
    const double top = en.eigenvalues().maxCoeff();
    if (en.eigenvalues()[0] > 1e-4 * std::max(top, 1e-300)) break;

    Eigen::MatrixXd K(rc, rc);
    c = 0;
    for (int p = 0; p < rc; ++p)
      for (int q = p; q < rc; ++q, ++c)
        K(p, q) = K(q, p) = en.eigenvectors()(c, 0);

    // Step S -> S + tK to the PSD boundary; the binding side is the larger
    // whitened curvature.
    const Eigen::VectorXd isq = lam.cwiseSqrt().cwiseInverse();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ek(
        isq.asDiagonal() * K * isq.asDiagonal());
    const double mu_min = ek.eigenvalues().minCoeff();
    const double mu_max = ek.eigenvalues().maxCoeff();
    double t;
    if (mu_min < -1e-12 && -mu_min >= mu_max) t = -1.0 / mu_min;
    else if (mu_max > 1e-12) t = -1.0 / mu_max;
    else break;

    Eigen::MatrixXd S = t * K;
    S.diagonal() += lam;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    std::vector<int> keep;
    for (int i = 0; i < rc; ++i)
      if (es.eigenvalues()[i] > 1e-12 * total) keep.push_back(i);
    if (keep.empty() || static_cast<int>(keep.size()) >= rc) break;

    Eigen::MatrixXd Wn(W.rows(), static_cast<int>(keep.size()));
    Eigen::VectorXd ln(static_cast<int>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
      Wn.col(static_cast<int>(i)) = W * es.eigenvectors().col(keep[i]);
      ln[static_cast<int>(i)] = es.eigenvalues()[keep[i]];
    }
    if (residual_of(Wn, ln) > res_budget) break;
    W = std::move(Wn);
    lam = std::move(ln);
  }

  const auto& dims = obj.sdp().block_dims;
  const auto off = obj.sdp().block_offsets();
  rec.U = W;
  rec.xi = lam / scale;
  rec.X = zero_blocks(dims);
  Eigen::VectorXd Ax = Eigen::VectorXd::Zero(obj.m());
  for (Eigen::Index t = 0; t < lam.size(); ++t) {
    Ax += lam[t] * obj.apply_A_uuT(W.col(t));
    for (std::size_t blk = 0; blk < dims.size(); ++blk) {
      const auto u = W.col(t).segment(off[blk], dims[blk]);
      rec.X[blk].noalias() += lam[t] * (u * u.transpose());
    }
  }
  rec.residual = (Ax - obj.b()).norm();
}

namespace {

SpectralResult solve_sdp(const SdpProblem& sdp, SpectralMode mode,
                         const SpectralOptions& opts) {
  SpectralObjective obj(sdp, mode);
  MinimizeResult min = minimize_nonsmooth(
      obj, Eigen::VectorXd::Zero(sdp.m()), opts);

  SpectralResult out;
  out.z_bar = min.z;
  out.value = min.value;
  out.iterations = min.iterations;
  out.status = min.status;
  out.history = std::move(min.history);

  const SpectralEval ev = mode == SpectralMode::ctp
                              ? phi_value_and_subgradient(obj, min.z, opts)
                              : psi_value_and_subgradient(obj, min.z, opts);
  PrimalRecovery rec = recover_primal(obj, min.z, ev.eig, opts);
  reduce_recovery_rank(obj, rec);
  out.recovery_residual = rec.residual;
  out.X_star = std::move(rec.X);
  return out;
}

}  // namespace

SpectralResult solve_sdp_ctp(const SdpProblem& sdp,
                             const SpectralOptions& opts) {
  return solve_sdp(sdp, SpectralMode::ctp, opts);
}

SpectralResult solve_sdp_btp(const SdpProblem& sdp,
                             const SpectralOptions& opts) {
  return solve_sdp(sdp, SpectralMode::btp, opts);
}

}  // namespace ctpop
