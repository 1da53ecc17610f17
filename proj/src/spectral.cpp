#include "graphtime/spectral.hpp"

#include <cmath>
#include <sstream>

#include "graphtime/errors.hpp"

namespace graphtime {

SpectralMap::SpectralMap(SpectralFamily family, double p1, double p2)
    : family_(family), p1_(p1), p2_(p2) {}

SpectralMap SpectralMap::diffusion(double sigma2) {
  if (!(sigma2 >= 0.0)) throw ConfigError("diffusion map: sigma2 must be >= 0");
  return SpectralMap(SpectralFamily::Diffusion, sigma2, 0.0);
}

SpectralMap SpectralMap::p_step_random_walk(double a, int p) {
  if (!(a >= 2.0)) throw ConfigError("p-step random walk map: a must be >= 2");
  if (p < 1) throw ConfigError("p-step random walk map: p must be a positive integer");
  return SpectralMap(SpectralFamily::PStepRandomWalk, a, static_cast<double>(p));
}

SpectralMap SpectralMap::regularized_laplacian(double sigma2) {
  if (!(sigma2 > 0.0)) throw ConfigError("regularized Laplacian map: sigma2 must be > 0");
  return SpectralMap(SpectralFamily::RegularizedLaplacian, sigma2, 0.0);
}

SpectralMap SpectralMap::bandlimited(double beta, double lambda_max) {
  if (!(beta > 0.0)) throw ConfigError("bandlimited map: beta must be > 0");
  if (!(lambda_max >= 0.0)) throw ConfigError("bandlimited map: lambda_max must be >= 0");
  return SpectralMap(SpectralFamily::Bandlimited, beta, lambda_max);
}

SpectralMap SpectralMap::shifted_identity(double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("shifted identity map: epsilon must be > 0");
  return SpectralMap(SpectralFamily::ShiftedIdentity, epsilon, 0.0);
}

double SpectralMap::param(const std::string& name) const {
  switch (family_) {
    case SpectralFamily::Diffusion:
      if (name == "sigma2") return p1_;
      break;
    case SpectralFamily::PStepRandomWalk:
      if (name == "a") return p1_;
      if (name == "p") return p2_;
      break;
    case SpectralFamily::RegularizedLaplacian:
      if (name == "sigma2") return p1_;
      break;
    case SpectralFamily::Bandlimited:
      if (name == "beta") return p1_;
      if (name == "lambda_max") return p2_;
      break;
    case SpectralFamily::ShiftedIdentity:
      if (name == "epsilon") return p1_;
      break;
  }
  throw ConfigError("spectral map has no parameter named '" + name + "'");
}

double SpectralMap::operator()(double lambda) const {
  double r = 0.0;
  switch (family_) {
    case SpectralFamily::Diffusion:
      r = std::exp(0.5 * p1_ * lambda);
      break;
    case SpectralFamily::PStepRandomWalk:
      r = std::pow(p1_ - lambda, -p2_);
      break;
    case SpectralFamily::RegularizedLaplacian:
      r = 1.0 + p1_ * lambda;
      break;
    case SpectralFamily::Bandlimited:
      r = (lambda <= p2_) ? 1.0 / p1_ : p1_;
      break;
    case SpectralFamily::ShiftedIdentity:
      r = lambda + p1_;
      break;
  }
  if (!std::isfinite(r) || r <= 0.0) {
    std::ostringstream msg;
    msg << describe() << " evaluates to " << r << " at lambda = " << lambda
        << "; spectral weights must be strictly positive";
    throw NumericalError(msg.str());
  }
  return r;
}

std::string SpectralMap::describe() const {
  std::ostringstream out;
  switch (family_) {
    case SpectralFamily::Diffusion:
      out << "diffusion(sigma2=" << p1_ << ")";
      break;
    case SpectralFamily::PStepRandomWalk:
      out << "p-step-random-walk(a=" << p1_ << ",p=" << static_cast<int>(p2_) << ")";
      break;
    case SpectralFamily::RegularizedLaplacian:
      out << "regularized-laplacian(sigma2=" << p1_ << ")";
      break;
    case SpectralFamily::Bandlimited:
      out << "bandlimited(beta=" << p1_ << ",lambda_max=" << p2_ << ")";
      break;
    case SpectralFamily::ShiftedIdentity:
      out << "shifted-identity(epsilon=" << p1_ << ")";
      break;
  }
  return out.str();
}

Eigendecomposition sorted_eigh(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed (non-finite entries?)");
  }
  Eigendecomposition eig{solver.eigenvalues(), solver.eigenvectors()};
  // Fix signs: first component of non-negligible magnitude is made positive.
  for (Eigen::Index c = 0; c < eig.vectors.cols(); ++c) {
    const double scale = eig.vectors.col(c).cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < eig.vectors.rows(); ++r) {
      const double v = eig.vectors(r, c);
      if (std::abs(v) > 1e-12 * scale) {
        if (v < 0.0) eig.vectors.col(c) *= -1.0;
        break;
      }
    }
  }
  return eig;
}

Eigen::MatrixXd laplacian_kernel_inverse(const Eigen::MatrixXd& laplacian_matrix,
                                         const SpectralMap& map) {
  const Eigen::Index n = laplacian_matrix.rows();
  if (laplacian_matrix.cols() != n) {
    throw ConfigError("laplacian_kernel_inverse: matrix must be square");
  }
  const double asym = (laplacian_matrix - laplacian_matrix.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * std::max(1.0, laplacian_matrix.cwiseAbs().maxCoeff())) {
    throw ConfigError("laplacian_kernel_inverse: matrix is not symmetric");
  }

  Eigendecomposition eig = sorted_eigh(laplacian_matrix);
  Eigen::VectorXd mapped(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double lambda = eig.values(i);
    if (lambda < 0.0) {
      if (lambda < -1e-9 * std::max(1.0, std::abs(eig.values(n - 1)))) {
        std::ostringstream msg;
        msg << "laplacian_kernel_inverse: eigenvalue " << lambda << " is negative; input not PSD";
        throw NumericalError(msg.str());
      }
      lambda = 0.0;
    }
    mapped(i) = map(lambda);
  }
  return eig.vectors * mapped.asDiagonal() * eig.vectors.transpose();
}

}  // namespace graphtime
