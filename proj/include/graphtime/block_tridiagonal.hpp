#pragma once

#include <Eigen/Dense>
#include <vector>

namespace graphtime {

// Symmetric block-tridiagonal matrix with uniform n x n blocks. `sub[k]`
// is the block at block-row k+1, block-column k; the transposed copy above
// the diagonal is implicit. Keeps large horizons affordable where the dense
// NT x NT form would not be.
struct BlockTridiagonal {
  int block_size = 0;
  std::vector<Eigen::MatrixXd> diag;
  std::vector<Eigen::MatrixXd> sub;

  int slots() const { return static_cast<int>(diag.size()); }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(block_size) * slots(); }

  Eigen::MatrixXd dense() const;
  // Quadratic form x^T M x without materializing the dense matrix.
  double quadratic_form(const Eigen::VectorXd& x) const;

  // Extracts blocks from a dense matrix; entries beyond the first
  // off-diagonal band are ignored.
  static BlockTridiagonal from_dense(const Eigen::MatrixXd& m, int block_size);
};

// Largest k such that some block (i, j) with |i - j| = k exceeds the
// tolerance. 0 means block-diagonal.
int block_bandwidth_of(const Eigen::MatrixXd& m, int block_size, double tol);

// Scalar-level counterpart used for factor matrices.
int scalar_bandwidth_of(const Eigen::MatrixXd& m, double tol);

}  // namespace graphtime
