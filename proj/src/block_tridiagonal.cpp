#include "graphtime/block_tridiagonal.hpp"

#include <cmath>

#include "graphtime/errors.hpp"

namespace graphtime {

Eigen::MatrixXd BlockTridiagonal::dense() const {
  const int n = block_size;
  const int t = slots();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim(), dim());
  for (int k = 0; k < t; ++k) {
    m.block(k * n, k * n, n, n) = diag[k];
    if (k > 0) {
      m.block(k * n, (k - 1) * n, n, n) = sub[k - 1];
      m.block((k - 1) * n, k * n, n, n) = sub[k - 1].transpose();
    }
  }
  return m;
}

double BlockTridiagonal::quadratic_form(const Eigen::VectorXd& x) const {
  const int n = block_size;
  if (x.size() != dim()) throw ConfigError("quadratic_form: vector length mismatch");
  double sum = 0.0;
  for (int k = 0; k < slots(); ++k) {
    const auto xk = x.segment(k * n, n);
    sum += xk.dot(diag[k] * xk);
    if (k > 0) sum += 2.0 * xk.dot(sub[k - 1] * x.segment((k - 1) * n, n));
  }
  return sum;
}

BlockTridiagonal BlockTridiagonal::from_dense(const Eigen::MatrixXd& m, int block_size) {
  if (block_size <= 0 || m.rows() != m.cols() || m.rows() % block_size != 0) {
    throw ConfigError("from_dense: matrix size is not a multiple of the block size");
  }
  const int t = static_cast<int>(m.rows()) / block_size;
  BlockTridiagonal b;
  b.block_size = block_size;
  b.diag.reserve(t);
  b.sub.reserve(t > 0 ? t - 1 : 0);
  for (int k = 0; k < t; ++k) {
    b.diag.push_back(m.block(k * block_size, k * block_size, block_size, block_size));
    if (k > 0) {
      b.sub.push_back(m.block(k * block_size, (k - 1) * block_size, block_size, block_size));
    }
  }
  return b;
}

int block_bandwidth_of(const Eigen::MatrixXd& m, int block_size, double tol) {
  if (block_size <= 0 || m.rows() != m.cols() || m.rows() % block_size != 0) {
    throw ConfigError("block_bandwidth_of: matrix size is not a multiple of the block size");
  }
  const int t = static_cast<int>(m.rows()) / block_size;
  int bandwidth = 0;
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j < i; ++j) {
      if (i - j <= bandwidth) continue;
      if (m.block(i * block_size, j * block_size, block_size, block_size).cwiseAbs().maxCoeff() >
          tol) {
        bandwidth = i - j;
      }
    }
  }
  return bandwidth;
}

int scalar_bandwidth_of(const Eigen::MatrixXd& m, double tol) {
  return block_bandwidth_of(m, 1, tol);
}

}  // namespace graphtime
