#include "graphtime/kernels.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>
#include <unsupported/Eigen/KroneckerProduct>

#include "graphtime/errors.hpp"

namespace graphtime {

namespace {

void require_symmetric(const Eigen::MatrixXd& m, const std::string& what) {
  if (m.rows() != m.cols()) throw ConfigError(what + ": not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw ConfigError(what + ": not symmetric");
  }
}

// SPD check via Cholesky; cheap and sufficient at construction time.
void require_spd(const Eigen::MatrixXd& m, const std::string& what) {
  require_symmetric(m, what);
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw ConfigError(what + ": not positive definite");
  }
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const std::string& what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(what + ": Cholesky factorization failed (matrix not PD)");
  }
  return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

}  // namespace

double bandwidth_tolerance(const Eigen::MatrixXd& m) {
  return 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff());
}

SpaceTimeKernel::SpaceTimeKernel(int n, int t, MatrixForm form, Eigen::MatrixXd data,
                                 int block_bandwidth, std::string descriptor)
    : n_(n),
      t_(t),
      form_(form),
      data_(std::move(data)),
      block_bandwidth_(block_bandwidth),
      descriptor_(std::move(descriptor)) {
  if (n_ <= 0 || t_ <= 0) throw ConfigError("space-time kernel: dimensions must be positive");
  if (data_.rows() != dim() || data_.cols() != dim()) {
    std::ostringstream msg;
    msg << "space-time kernel: stored matrix is " << data_.rows() << "x" << data_.cols()
        << ", expected " << dim() << "x" << dim();
    throw ConfigError(msg.str());
  }
  require_symmetric(data_, "space-time kernel");
  if (block_bandwidth_ < 0 || block_bandwidth_ >= t_) {
    block_bandwidth_ = t_ > 1 ? t_ - 1 : 0;
  }
  if (block_bandwidth_ == 0) block_bandwidth_ = 1;  // block-diagonal is tridiagonal too
}

Eigen::MatrixXd SpaceTimeKernel::kernel() const {
  if (form_ == MatrixForm::ExplicitKernel) return data_;
  return spd_inverse(data_, "space-time kernel inverse");
}

Eigen::MatrixXd SpaceTimeKernel::inverse() const {
  if (form_ == MatrixForm::ExplicitInverse) return data_;
  return spd_inverse(data_, "space-time kernel");
}

BlockTridiagonal SpaceTimeKernel::inverse_blocks() const {
  if (!tridiagonal_inverse()) {
    throw ConfigError("space-time kernel: inverse is not block tridiagonal (bandwidth " +
                      std::to_string(block_bandwidth_) + ")");
  }
  return BlockTridiagonal::from_dense(inverse(), n_);
}

double SpaceTimeKernel::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(data_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

SpaceTimeKernel kronecker_product_kernel(const Eigen::MatrixXd& time_kernel,
                                         const Eigen::MatrixXd& space_kernel) {
  require_spd(time_kernel, "time kernel factor");
  require_spd(space_kernel, "space kernel factor");
  const int t = static_cast<int>(time_kernel.rows());
  const int n = static_cast<int>(space_kernel.rows());
  Eigen::MatrixXd data = Eigen::kroneckerProduct(time_kernel, space_kernel);
  // (K_T kron K_G)^-1 = K_T^-1 kron K_G^-1, so the block bandwidth is the
  // scalar bandwidth of K_T^-1.
  Eigen::MatrixXd time_inv = spd_inverse(time_kernel, "time kernel factor");
  const int bandwidth = std::max(1, scalar_bandwidth_of(time_inv, bandwidth_tolerance(time_inv)));
  return SpaceTimeKernel(n, t, MatrixForm::ExplicitKernel, std::move(data), bandwidth,
                         "kronecker-product");
}

SpaceTimeKernel kronecker_sum_kernel_inverse(const Eigen::MatrixXd& time_kernel_inverse,
                                             const Eigen::MatrixXd& space_kernel_inverse) {
  require_spd(time_kernel_inverse, "time kernel inverse factor");
  require_spd(space_kernel_inverse, "space kernel inverse factor");
  const int t = static_cast<int>(time_kernel_inverse.rows());
  const int n = static_cast<int>(space_kernel_inverse.rows());
  Eigen::MatrixXd data =
      Eigen::kroneckerProduct(time_kernel_inverse, Eigen::MatrixXd::Identity(n, n)) +
      Eigen::kroneckerProduct(Eigen::MatrixXd::Identity(t, t), space_kernel_inverse);
  const int bandwidth = std::max(
      1, scalar_bandwidth_of(time_kernel_inverse, bandwidth_tolerance(time_kernel_inverse)));
  return SpaceTimeKernel(n, t, MatrixForm::ExplicitInverse, std::move(data), bandwidth,
                         "kronecker-sum");
}

SpaceTimeKernel doubly_selective_kernel_inverse(const Eigen::MatrixXd& time_transform,
                                                const Eigen::MatrixXd& space_transform,
                                                const Eigen::MatrixXd& weights) {
  const int t = static_cast<int>(time_transform.rows());
  const int n = static_cast<int>(space_transform.rows());
  auto check_orthogonal = [](const Eigen::MatrixXd& u, const std::string& what) {
    if (u.rows() != u.cols()) throw ConfigError(what + ": not square");
    Eigen::MatrixXd gram = u.transpose() * u;
    gram.diagonal().array() -= 1.0;
    if (gram.cwiseAbs().maxCoeff() > 1e-8) {
      throw ConfigError(what + ": not orthogonal");
    }
  };
  check_orthogonal(time_transform, "time transform");
  check_orthogonal(space_transform, "space transform");
  if (weights.rows() != n || weights.cols() != t) {
    std::ostringstream msg;
    msg << "doubly selective kernel: weights are " << weights.rows() << "x" << weights.cols()
        << ", expected " << n << "x" << t;
    throw ConfigError(msg.str());
  }
  if (!(weights.array() > 0.0).all()) {
    throw ConfigError("doubly selective kernel: weights must be strictly positive");
  }

  // vec(weights) is column-major, so index n + N*t matches the space-major
  // stacking of the signal.
  Eigen::MatrixXd transform = Eigen::kroneckerProduct(time_transform, space_transform);
  Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(weights.data(), weights.size());
  Eigen::MatrixXd data = transform * r.asDiagonal() * transform.transpose();
  const int bandwidth = std::max(1, block_bandwidth_of(data, n, bandwidth_tolerance(data)));
  return SpaceTimeKernel(n, t, MatrixForm::ExplicitInverse, std::move(data), bandwidth,
                         "doubly-selective");
}

BlockTridiagonal timevarying_kernel_inverse_blocks(const TimeVaryingGraph& g,
                                                   const std::vector<SpectralMap>& maps,
                                                   const std::vector<Eigen::MatrixXd>& bridges) {
  const int n = g.n_vertices();
  const int t = g.slots();
  if (static_cast<int>(maps.size()) != t) {
    throw ConfigError("time-varying kernel: expected " + std::to_string(t) + " spectral maps, got " +
                      std::to_string(maps.size()));
  }
  if (static_cast<int>(bridges.size()) != t - 1) {
    throw ConfigError("time-varying kernel: expected " + std::to_string(t - 1) +
                      " bridge matrices, got " + std::to_string(bridges.size()));
  }
  for (std::size_t k = 0; k < bridges.size(); ++k) {
    if (bridges[k].rows() != n || bridges[k].cols() != n) {
      throw ConfigError("time-varying kernel: bridge " + std::to_string(k) +
                        " dimension mismatch");
    }
    if ((bridges[k].array() < 0.0).any()) {
      throw ConfigError("time-varying kernel: bridge " + std::to_string(k) +
                        " has negative entries");
    }
  }

  BlockTridiagonal kinv;
  kinv.block_size = n;
  kinv.diag.resize(t);
  kinv.sub.resize(t - 1);

  // For a time-invariant topology with identical maps the per-slot inverse
  // kernel is computed once.
  const bool shared_slots = g.is_time_invariant();
  bool shared_maps = true;
  for (int k = 1; k < t && shared_maps; ++k) {
    shared_maps = maps[k].describe() == maps[0].describe();
  }
  Eigen::MatrixXd shared_kernel;
  if (shared_slots && shared_maps) {
    shared_kernel = laplacian_kernel_inverse(laplacian(g.slot(0)), maps[0]);
  }

  for (int k = 0; k < t; ++k) {
    if (shared_slots && shared_maps) {
      kinv.diag[k] = shared_kernel;
    } else {
      kinv.diag[k] = laplacian_kernel_inverse(laplacian(g.slot(k)), maps[k]);
    }
    Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
    if (k + 1 < t) degree += bridges[k].transpose() * Eigen::VectorXd::Ones(n);
    if (k > 0) degree += bridges[k - 1] * Eigen::VectorXd::Ones(n);
    kinv.diag[k].diagonal() += degree;
    if (k > 0) kinv.sub[k - 1] = -bridges[k - 1];
  }
  return kinv;
}

SpaceTimeKernel timevarying_kernel_inverse(const TimeVaryingGraph& g,
                                           const std::vector<SpectralMap>& maps,
                                           const std::vector<Eigen::MatrixXd>& bridges) {
  BlockTridiagonal blocks = timevarying_kernel_inverse_blocks(g, maps, bridges);
  std::string desc = "timevarying(" + maps[0].describe() + ")";
  return SpaceTimeKernel(g.n_vertices(), g.slots(), MatrixForm::ExplicitInverse, blocks.dense(), 1,
                         std::move(desc));
}

}  // namespace graphtime
