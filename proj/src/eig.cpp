#include "ctpop/eig.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace ctpop {

namespace {
constexpr int kDenseCutoff = 64;
constexpr int kClusterWindowCap = 40;
}

BlockSymmetricOperator BlockSymmetricOperator::from_dense(
    std::vector<Eigen::MatrixXd> mats) {
  BlockSymmetricOperator op;
  for (auto& m : mats) {
    op.dims.push_back(static_cast<int>(m.rows()));
    Block b;
    b.is_dense = true;
    b.dense = std::move(m);
    op.blocks.push_back(std::move(b));
  }
  return op;
}

BlockSymmetricOperator BlockSymmetricOperator::from_triplets(
    const std::vector<int>& dims, const SymBlockMat& A) {
  BlockSymmetricOperator op;
  op.dims = dims;
  op.blocks.resize(dims.size());
  for (auto& b : op.blocks) b.is_dense = false;
  for (const auto& e : A.entries) op.blocks[e.blk].sparse.push_back(e);
  return op;
}

int BlockSymmetricOperator::total_dim() const {
  int s = 0;
  for (int d : dims) s += d;
  return s;
}

std::vector<int> BlockSymmetricOperator::offsets() const {
  std::vector<int> off(dims.size(), 0);
  for (std::size_t b = 1; b < dims.size(); ++b) off[b] = off[b - 1] + dims[b - 1];
  return off;
}

void BlockSymmetricOperator::apply(int blk, const Eigen::VectorXd& x,
                                   Eigen::VectorXd& y) const {
  const Block& b = blocks[blk];
  if (b.is_dense) {
    y.noalias() = b.dense.selfadjointView<Eigen::Upper>() * x;
    return;
  }
  y.setZero(dims[blk]);
  for (const auto& e : b.sparse) {
    y[e.i] += e.v * x[e.j];
    if (e.i != e.j) y[e.j] += e.v * x[e.i];
  }
}

std::uint64_t BlockSymmetricOperator::content_hash() const {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  const auto mix = [&h](std::uint64_t x) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (x >> (8 * byte)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  const auto mix_double = [&mix](double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    mix(bits);
  };
  for (std::size_t blk = 0; blk < blocks.size(); ++blk) {
    mix(static_cast<std::uint64_t>(dims[blk]));
    const Block& b = blocks[blk];
    if (b.is_dense) {
      for (Eigen::Index c = 0; c < b.dense.cols(); ++c)
        for (Eigen::Index r = 0; r <= c; ++r) mix_double(b.dense(r, c));
    } else {
      for (const auto& e : b.sparse) {
        mix(static_cast<std::uint64_t>(e.i));
        mix(static_cast<std::uint64_t>(e.j));
        mix_double(e.v);
      }
    }
  }
  return h;
}

namespace {

struct BlockEig {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns aligned with values
};

BlockEig dense_top(const BlockSymmetricOperator& op, int blk, int want) {
  const int d = op.dims[blk];
  Eigen::MatrixXd M;
  if (op.blocks[blk].is_dense) {
    M = op.blocks[blk].dense.selfadjointView<Eigen::Upper>();
  } else {
    M = Eigen::MatrixXd::Zero(d, d);
    for (const auto& e : op.blocks[blk].sparse) {
      M(e.i, e.j) += e.v;
      if (e.i != e.j) M(e.j, e.i) += e.v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const int r = std::min(want, d);
  BlockEig out;
  out.values.resize(r);
  out.vectors.resize(d, r);
  for (int i = 0; i < r; ++i) {
    out.values[i] = es.eigenvalues()[d - 1 - i];  // Eigen sorts ascending
    out.vectors.col(i) = es.eigenvectors().col(d - 1 - i);
  }
  return out;
}

// Lanczos with full reorthogonalization and thick restarts. The projected
// matrix H = V^T A V is kept explicitly: it is tridiagonal in exact
// arithmetic, but thick restarts introduce an arrow-shaped coupling row and
// reorthogonalization perturbs the off-tridiagonal part, so at these basis
// sizes the dense bookkeeping is the robust choice. Ritz pairs are accepted
// only on an explicit residual check ||A u - theta u|| <= tol * max(1,|theta|).
BlockEig lanczos_top(const BlockSymmetricOperator& op, int blk, int want,
                     double tol, std::uint64_t seed) {
  const int d = op.dims[blk];
  want = std::min(want, d);
  const int mmax = std::min(d, std::max(2 * want + 12, 36));
  const int max_restarts = 400;

  std::mt19937_64 eng(seed ^ (0x9e3779b97f4a7c15ull * (blk + 1)));
  const auto unit = [&eng]() {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
  };
  const auto gaussian = [&]() {
    const double u1 = std::max(unit(), 1e-300), u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  };

  Eigen::MatrixXd V(d, mmax);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(mmax, mmax);
  Eigen::VectorXd v(d), w(d), Av(d);
  for (int i = 0; i < d; ++i) v[i] = gaussian();
  v.normalize();
  V.col(0) = v;
  op.apply(blk, v, Av);
  H(0, 0) = v.dot(Av);
  int mcur = 1;
  double op_scale = std::max(1.0, Av.norm());

  // appends one orthonormalized direction and its projected column
  const auto append = [&](const Eigen::VectorXd& dir) -> bool {
    w = dir;
    w -= V.leftCols(mcur) * (V.leftCols(mcur).transpose() * w).eval();
    w -= V.leftCols(mcur) * (V.leftCols(mcur).transpose() * w).eval();
    const double nrm = w.norm();
    if (nrm < 1e-13 * op_scale) return false;
    w /= nrm;
    V.col(mcur) = w;
    op.apply(blk, w, Av);
    op_scale = std::max(op_scale, Av.norm());
    H.col(mcur).head(mcur + 1) = V.leftCols(mcur + 1).transpose() * Av;
    H.row(mcur).head(mcur + 1) = H.col(mcur).head(mcur + 1).transpose();
    ++mcur;
    return true;
  };

  for (int restart = 0; restart < max_restarts; ++restart) {
    // grow the Krylov basis: next direction is A times the newest vector,
    // falling back to a random direction on breakdown
    while (mcur < mmax) {
      op.apply(blk, V.col(mcur - 1), Av);
      if (!append(Av)) {
        for (int i = 0; i < d; ++i) w[i] = gaussian();
        if (!append(w)) break;  // basis spans an invariant subspace of full rank
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        H.topLeftCorner(mcur, mcur));
    const int avail = mcur;
    const int nwant = std::min(want, avail);
    Eigen::MatrixXd ritz(d, avail);
    Eigen::VectorXd theta(avail);
    for (int i = 0; i < avail; ++i) {
      theta[i] = es.eigenvalues()[avail - 1 - i];
      ritz.col(i).noalias() =
          V.leftCols(avail) * es.eigenvectors().col(avail - 1 - i);
    }
    bool all_ok = true;
    double worst_res = 0.0;
    for (int i = 0; i < nwant; ++i) {
      op.apply(blk, ritz.col(i), Av);
      const double res = (Av - theta[i] * ritz.col(i)).norm() /
                         std::max(1.0, std::abs(theta[i]));
      worst_res = std::max(worst_res, res);
      if (res > tol) all_ok = false;
    }
    if (std::getenv("CTPOP_EIG_DEBUG") && restart % 25 == 0)
      std::fprintf(stderr, "restart=%d mcur=%d theta0=%.12g worst=%.3e\n",
                   restart, mcur, theta[0], worst_res);
    if (all_ok || mcur >= d) {
      BlockEig out;
      out.values = theta.head(nwant);
      out.vectors = ritz.leftCols(nwant);
      return out;
    }

    // Thick restart: keep the leading Ritz vectors (H restarts as diag(theta)
    // because Ritz residuals are orthogonal to the subspace), then expand with
    // the residual of every wanted pair. A single continuation vector cycles
    // on clustered pairs -- the discarded interior directions get re-derived
    // and re-discarded forever -- while the residual block targets exactly the
    // directions the unconverged pairs are missing.
    const int keep = std::min(avail - 1, std::max(nwant + 4, avail / 3));
    V.leftCols(keep) = ritz.leftCols(keep);
    H.setZero();
    for (int i = 0; i < keep; ++i) H(i, i) = theta[i];
    mcur = keep;
    bool expanded = false;
    for (int i = 0; i < nwant && mcur < mmax; ++i) {
      op.apply(blk, ritz.col(i), Av);
      const Eigen::VectorXd resid = Av - theta[i] * ritz.col(i);
      if (append(resid)) expanded = true;
    }
    if (!expanded) {
      for (int i = 0; i < d; ++i) w[i] = gaussian();
      if (!append(w)) {
        BlockEig out;
        out.values = theta.head(nwant);
        out.vectors = ritz.leftCols(nwant);
        return out;
      }
    }
  }
  throw std::runtime_error(
      "lambda_max: Lanczos did not converge within the restart budget");
}

BlockEig top_of_block(const BlockSymmetricOperator& op, int blk, int want,
                      double tol, std::uint64_t seed) {
  if (op.dims[blk] <= kDenseCutoff) return dense_top(op, blk, want);
  return lanczos_top(op, blk, want, tol, seed);
}

}  // namespace

EigResult lambda_max(const BlockSymmetricOperator& A, double tol,
                     double cluster_tol) {
  if (A.dims.empty()) throw std::invalid_argument("lambda_max: no blocks");
  const std::uint64_t seed = A.content_hash();
  const int nblocks = static_cast<int>(A.dims.size());
  const auto off = A.offsets();

  // First pass: a handful of top pairs per block settles lambda1 and usually
  // already covers the cluster.
  std::vector<BlockEig> per_block(nblocks);
  std::vector<int> want(nblocks, 6);
  for (int b = 0; b < nblocks; ++b)
    per_block[b] = top_of_block(A, b, want[b], tol, seed);

  double l1 = -std::numeric_limits<double>::infinity();
  int bmax = 0;
  for (int b = 0; b < nblocks; ++b)
    if (per_block[b].values.size() > 0 && per_block[b].values[0] > l1) {
      l1 = per_block[b].values[0];
      bmax = b;
    }
  const double ctol =
      cluster_tol >= 0 ? cluster_tol : 1e-6 * (1.0 + std::abs(l1));

  // Widen any block whose computed window might truncate the cluster: its
  // smallest returned value still lies at or above the cluster floor.
  for (int b = 0; b < nblocks; ++b) {
    while (true) {
      const int got = static_cast<int>(per_block[b].values.size());
      const int cap = std::min(A.dims[b], kClusterWindowCap);
      if (got == 0 || got >= cap) break;
      if (per_block[b].values[got - 1] < l1 - ctol) break;
      want[b] = std::min(2 * want[b], cap);
      per_block[b] = top_of_block(A, b, want[b], tol, seed);
      if (static_cast<int>(per_block[b].values.size()) <= got) break;
    }
  }

  EigResult res;
  res.lambda1 = l1;
  res.block_of_max = bmax;
  std::vector<std::pair<double, std::pair<int, int>>> picked;  // (val, (blk, col))
  for (int b = 0; b < nblocks; ++b)
    for (int i = 0; i < static_cast<int>(per_block[b].values.size()); ++i)
      if (per_block[b].values[i] >= l1 - ctol)
        picked.push_back({per_block[b].values[i], {b, i}});
  std::sort(picked.begin(), picked.end(),
            [](const auto& x, const auto& y) { return x.first > y.first; });
  res.U = Eigen::MatrixXd::Zero(A.total_dim(), static_cast<int>(picked.size()));
  res.values.resize(static_cast<int>(picked.size()));
  for (std::size_t c = 0; c < picked.size(); ++c) {
    const auto& [val, loc] = picked[c];
    res.values[static_cast<int>(c)] = val;
    res.U.block(off[loc.first], static_cast<int>(c), A.dims[loc.first], 1) =
        per_block[loc.first].vectors.col(loc.second);
  }
  return res;
}

}  // namespace ctpop
