#pragma once

#include <Eigen/Dense>
#include <string>

namespace graphtime {

enum class SpectralFamily {
  Diffusion,            // r(lambda) = exp(sigma2 * lambda / 2)
  PStepRandomWalk,      // r(lambda) = (a - lambda)^(-p)
  RegularizedLaplacian, // r(lambda) = 1 + sigma2 * lambda
  Bandlimited,          // r(lambda) = 1/beta on [0, lambda_max], beta above
  ShiftedIdentity,      // r(lambda) = lambda + epsilon
};

// One-dimensional spectral weight map r(lambda) applied to Laplacian
// eigenvalues to shape an inverse kernel. All families are strictly positive
// on their admissible domain, so the resulting kernels are invertible.
class SpectralMap {
public:
  static SpectralMap diffusion(double sigma2);
  static SpectralMap p_step_random_walk(double a, int p);
  static SpectralMap regularized_laplacian(double sigma2 = 1.0);
  static SpectralMap bandlimited(double beta = 100.0, double lambda_max = 0.0);
  static SpectralMap shifted_identity(double epsilon);

  SpectralFamily family() const { return family_; }
  double param(const std::string& name) const;

  // r(lambda). Throws NumericalError if the value is not strictly positive
  // and finite (e.g. a p-step map evaluated at lambda >= a).
  double operator()(double lambda) const;

  std::string describe() const;

private:
  SpectralMap(SpectralFamily family, double p1, double p2);
  SpectralFamily family_;
  double p1_ = 0.0;
  double p2_ = 0.0;
};

struct Eigendecomposition {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns; first nonzero component positive
};

// Self-adjoint eigendecomposition with a deterministic sign convention so
// frequency indexing is reproducible across runs.
Eigendecomposition sorted_eigh(const Eigen::MatrixXd& sym);

// Inverse Laplacian kernel U diag(r(lambda)) U^T. Eigenvalues in [-1e-9, 0)
// are clamped to zero; anything lower rejects the input as non-PSD.
Eigen::MatrixXd laplacian_kernel_inverse(const Eigen::MatrixXd& laplacian_matrix,
                                         const SpectralMap& map);

}  // namespace graphtime
