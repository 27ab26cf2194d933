#pragma once

// Largest eigenvalue and top eigenspace of block-diagonal symmetric
// operators. The eigenvalues of diag(X_1, ..., X_l) are the union of the
// per-block eigenvalues, so each block is solved independently: dense
// symmetric eigendecomposition up to dimension 64, Lanczos iteration with
// full reorthogonalization and thick restarts above.

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "ctpop/relax.hpp"

namespace ctpop {

/// Block-diagonal symmetric operator; each block is either densely stored or
/// applied through its sparse upper triplets.
struct BlockSymmetricOperator {
  struct Block {
    bool is_dense = false;
    Eigen::MatrixXd dense;
    std::vector<SymEntry> sparse;  // blk field ignored; local (i, j)
  };

  std::vector<int> dims;
  std::vector<Block> blocks;

  static BlockSymmetricOperator from_dense(std::vector<Eigen::MatrixXd> mats);
  /// Triplet entries of A are routed to their blocks.
  static BlockSymmetricOperator from_triplets(const std::vector<int>& dims,
                                              const SymBlockMat& A);

  int total_dim() const;
  std::vector<int> offsets() const;
  /// y = A_blk * x for one block.
  void apply(int blk, const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  /// FNV-1a hash of the block contents; seeds the Lanczos start vector so
  /// repeated solves of the same operator are bit-reproducible.
  std::uint64_t content_hash() const;
};

struct EigResult {
  double lambda1 = 0.0;
  /// Orthonormal eigenvectors of every eigenvalue within cluster_tol of
  /// lambda1, zero-padded to the full stacked dimension, one per column,
  /// sorted by decreasing eigenvalue.
  Eigen::MatrixXd U;
  /// Eigenvalue of each returned column.
  Eigen::VectorXd values;
  int block_of_max = 0;
};

/// Largest eigenvalue over all blocks, within tol * max(1, |lambda1|), plus
/// the clustered top eigenspace. cluster_tol < 0 selects the default
/// 1e-6 * (1 + |lambda1|). Throws std::runtime_error when the iteration does
/// not converge within the restart budget (caller may fall back to dense).
EigResult lambda_max(const BlockSymmetricOperator& A, double tol = 1e-9,
                     double cluster_tol = -1.0);

}  // namespace ctpop
