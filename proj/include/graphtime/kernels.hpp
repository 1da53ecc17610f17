#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "graphtime/block_tridiagonal.hpp"
#include "graphtime/graph.hpp"
#include "graphtime/spectral.hpp"

namespace graphtime {

enum class MatrixForm { ExplicitKernel, ExplicitInverse };

// NT x NT space-time kernel over N vertices and T slots, stored either as
// the kernel matrix itself or as its inverse. The inverse is the primary
// representation: the batch solver and the Kalman recursion both consume it,
// and block-tridiagonal structure lives there.
class SpaceTimeKernel {
public:
  SpaceTimeKernel(int n, int t, MatrixForm form, Eigen::MatrixXd data, int block_bandwidth,
                  std::string descriptor = "");

  int n() const { return n_; }
  int t() const { return t_; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(n_) * t_; }
  MatrixForm form() const { return form_; }
  const Eigen::MatrixXd& data() const { return data_; }
  const std::string& descriptor() const { return descriptor_; }

  // Bandwidth of the inverse in N x N blocks; 1 means block tridiagonal.
  int block_bandwidth() const { return block_bandwidth_; }
  bool tridiagonal_inverse() const { return block_bandwidth_ <= 1; }

  // Materializations. Each inverts at most once (dense Cholesky, desk scale).
  Eigen::MatrixXd kernel() const;
  Eigen::MatrixXd inverse() const;
  // Block view of the inverse; requires tridiagonal_inverse().
  BlockTridiagonal inverse_blocks() const;

  // Smallest eigenvalue of the stored matrix; a construction sanity check
  // intended for small problems.
  double min_eigenvalue() const;

private:
  int n_;
  int t_;
  MatrixForm form_;
  Eigen::MatrixXd data_;
  int block_bandwidth_;
  std::string descriptor_;
};

// K_T kron K_G from two SPD kernel factors. The inverse bandwidth equals the
// scalar bandwidth of K_T^-1, detected numerically at construction.
SpaceTimeKernel kronecker_product_kernel(const Eigen::MatrixXd& time_kernel,
                                         const Eigen::MatrixXd& space_kernel);

// Inverse-form Kronecker sum: Kinv_T kron I_N + I_T kron Kinv_G, from the
// SPD inverse factors.
SpaceTimeKernel kronecker_sum_kernel_inverse(const Eigen::MatrixXd& time_kernel_inverse,
                                             const Eigen::MatrixXd& space_kernel_inverse);

// (U_T kron U_G) diag(vec(weights)) (U_T kron U_G)^T with orthogonal factors
// and strictly positive N x T weights; entry (n, t) of `weights` is the
// penalty on spatial frequency n, temporal frequency t.
SpaceTimeKernel doubly_selective_kernel_inverse(const Eigen::MatrixXd& time_transform,
                                                const Eigen::MatrixXd& space_transform,
                                                const Eigen::MatrixXd& weights);

// Block-tridiagonal inverse kernel for (possibly) time-varying topologies:
// per-slot inverse Laplacian kernels on the diagonal plus temporal bridge
// couplings with their degree corrections. `bridges` holds T-1 non-negative
// matrices linking consecutive slots.
BlockTridiagonal timevarying_kernel_inverse_blocks(const TimeVaryingGraph& g,
                                                   const std::vector<SpectralMap>& maps,
                                                   const std::vector<Eigen::MatrixXd>& bridges);
SpaceTimeKernel timevarying_kernel_inverse(const TimeVaryingGraph& g,
                                           const std::vector<SpectralMap>& maps,
                                           const std::vector<Eigen::MatrixXd>& bridges);

// Tolerance used when classifying near-zero blocks of an inverse.
double bandwidth_tolerance(const Eigen::MatrixXd& m);

}  // namespace graphtime
