#include <doctest.h>

#include <random>

#include "graphtime/errors.hpp"
#include "graphtime/kernels.hpp"
#include "oracles.hpp"

using namespace graphtime;

TEST_CASE("spectral maps are strictly positive on the PSD spectrum") {
  const SpectralMap maps[] = {
      SpectralMap::diffusion(1.8),      SpectralMap::p_step_random_walk(25.0, 2),
      SpectralMap::regularized_laplacian(2.0), SpectralMap::bandlimited(100.0, 3.0),
      SpectralMap::shifted_identity(0.01)};
  for (const auto& map : maps) {
    for (double lambda = 0.0; lambda <= 20.0; lambda += 0.25) {
      CHECK(map(lambda) > 0.0);
    }
  }
}

TEST_CASE("spectral map parameter validation") {
  CHECK_THROWS_AS(SpectralMap::diffusion(-1.0), ConfigError);
  CHECK_THROWS_AS(SpectralMap::p_step_random_walk(1.5, 1), ConfigError);
  CHECK_THROWS_AS(SpectralMap::p_step_random_walk(2.0, 0), ConfigError);
  CHECK_THROWS_AS(SpectralMap::regularized_laplacian(0.0), ConfigError);
  CHECK_THROWS_AS(SpectralMap::bandlimited(0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(SpectralMap::shifted_identity(0.0), ConfigError);
}

TEST_CASE("p-step map rejects eigenvalues past its pole") {
  SpectralMap map = SpectralMap::p_step_random_walk(2.0, 1);
  CHECK_THROWS_AS(map(2.0), NumericalError);
  CHECK_THROWS_AS(map(5.0), NumericalError);
}

TEST_CASE("diffusion kernel inverse of the zero Laplacian is the identity") {
  Eigen::MatrixXd k = laplacian_kernel_inverse(Eigen::MatrixXd::Zero(2, 2),
                                               SpectralMap::diffusion(2.0));
  CHECK((k - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("regularized-laplacian kernel inverse on a single edge") {
  Eigen::MatrixXd l(2, 2);
  l << 1, -1, -1, 1;
  Eigen::MatrixXd k = laplacian_kernel_inverse(l, SpectralMap::regularized_laplacian(1.0));
  Eigen::MatrixXd expected(2, 2);
  expected << 2, -1, -1, 2;
  CHECK((k - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("diffusion kernel inverse equals the matrix exponential") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4 + static_cast<int>(trial % 3);
    Eigen::MatrixXd l = laplacian(oracle::random_adjacency(n, rng));
    const double sigma2 = 0.5 + 0.3 * trial;
    Eigen::MatrixXd k = laplacian_kernel_inverse(l, SpectralMap::diffusion(sigma2));
    Eigen::MatrixXd e = oracle::expm(0.5 * sigma2 * l);
    CHECK((k - e).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, e.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("spectral regularizer equals the kernel quadratic form") {
  std::mt19937_64 rng(103);
  const int n = 6;
  Eigen::MatrixXd l = laplacian(oracle::random_adjacency(n, rng));
  SpectralMap map = SpectralMap::regularized_laplacian(1.5);
  Eigen::MatrixXd kinv = laplacian_kernel_inverse(l, map);
  Eigendecomposition eig = sorted_eigh(l);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd f = oracle::random_vector(n, rng);
    Eigen::VectorXd fhat = eig.vectors.transpose() * f;
    double spectral = 0.0;
    for (int i = 0; i < n; ++i) {
      spectral += map(std::max(eig.values(i), 0.0)) * fhat(i) * fhat(i);
    }
    CHECK(f.dot(kinv * f) == doctest::Approx(spectral).epsilon(1e-10));
  }
}

TEST_CASE("laplacian_kernel_inverse rejects non-symmetric and non-PSD inputs") {
  Eigen::MatrixXd asym(2, 2);
  asym << 0, 1, 0, 0;
  CHECK_THROWS_AS(laplacian_kernel_inverse(asym, SpectralMap::diffusion(1.0)), ConfigError);
  Eigen::MatrixXd indef = -Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(laplacian_kernel_inverse(indef, SpectralMap::diffusion(1.0)), NumericalError);
}

TEST_CASE("kronecker product kernel with identity time factor replicates the space factor") {
  std::mt19937_64 rng(107);
  Eigen::MatrixXd kg = oracle::random_spd(3, rng);
  SpaceTimeKernel k = kronecker_product_kernel(Eigen::MatrixXd::Identity(4, 4), kg);
  CHECK(k.form() == MatrixForm::ExplicitKernel);
  CHECK(k.tridiagonal_inverse());
  for (int i = 0; i < 4; ++i) {
    CHECK((k.data().block(3 * i, 3 * i, 3, 3) - kg).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("kronecker product kernel block layout") {
  Eigen::MatrixXd kt(2, 2);
  kt << 2, 0, 0, 3;
  Eigen::MatrixXd kg(2, 2);
  kg << 1, 0.5, 0.5, 1;
  SpaceTimeKernel k = kronecker_product_kernel(kt, kg);
  CHECK((k.data().block(0, 0, 2, 2) - 2 * kg).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((k.data().block(2, 2, 2, 2) - 3 * kg).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(k.data().block(0, 2, 2, 2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kronecker product kernel inverse factorizes") {
  std::mt19937_64 rng(109);
  Eigen::MatrixXd kt = oracle::random_spd(3, rng);
  Eigen::MatrixXd kg = oracle::random_spd(4, rng);
  SpaceTimeKernel k = kronecker_product_kernel(kt, kg);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(12, 12);
  Eigen::MatrixXd kt_inv = kt.llt().solve(Eigen::MatrixXd::Identity(3, 3));
  Eigen::MatrixXd kg_inv = kg.llt().solve(Eigen::MatrixXd::Identity(4, 4));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) expected.block(4 * i, 4 * j, 4, 4) = kt_inv(i, j) * kg_inv;
  }
  const double scale = expected.cwiseAbs().maxCoeff();
  CHECK((k.inverse() - expected).cwiseAbs().maxCoeff() < 1e-8 * scale);
}

TEST_CASE("kronecker factors must be SPD") {
  Eigen::MatrixXd bad = -Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd good = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(kronecker_product_kernel(bad, good), ConfigError);
  CHECK_THROWS_AS(kronecker_sum_kernel_inverse(good, bad), ConfigError);
  CHECK_THROWS_AS(kronecker_sum_kernel_inverse(Eigen::MatrixXd::Zero(2, 2), good), ConfigError);
}

TEST_CASE("kronecker sum of identity inverses is twice the identity") {
  SpaceTimeKernel k = kronecker_sum_kernel_inverse(Eigen::MatrixXd::Identity(3, 3),
                                                   Eigen::MatrixXd::Identity(2, 2));
  CHECK((k.data() - 2.0 * Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kronecker sum inverse spectrum is the pairwise sum multiset") {
  std::mt19937_64 rng(113);
  Eigen::MatrixXd kt = oracle::random_spd(4, rng);
  Eigen::MatrixXd kg = oracle::random_spd(3, rng);
  SpaceTimeKernel k = kronecker_sum_kernel_inverse(kt, kg);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> et(kt, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(kg, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> big(k.data(), Eigen::EigenvaluesOnly);
  std::vector<double> sums;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) sums.push_back(et.eigenvalues()(i) + eg.eigenvalues()(j));
  }
  std::sort(sums.begin(), sums.end());
  for (int i = 0; i < 12; ++i) {
    CHECK(big.eigenvalues()(i) == doctest::Approx(sums[i]).epsilon(1e-10));
  }
}

TEST_CASE("doubly selective kernel with identity transforms and unit weights") {
  SpaceTimeKernel k = doubly_selective_kernel_inverse(
      Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(2, 2),
      Eigen::MatrixXd::Ones(2, 3));
  CHECK((k.data() - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("doubly selective kernel validation") {
  Eigen::MatrixXd not_orth = Eigen::MatrixXd::Ones(2, 2);
  CHECK_THROWS_AS(doubly_selective_kernel_inverse(not_orth, Eigen::MatrixXd::Identity(2, 2),
                                                  Eigen::MatrixXd::Ones(2, 2)),
                  ConfigError);
  Eigen::MatrixXd weights = Eigen::MatrixXd::Ones(2, 2);
  weights(0, 0) = 0.0;
  CHECK_THROWS_AS(doubly_selective_kernel_inverse(Eigen::MatrixXd::Identity(2, 2),
                                                  Eigen::MatrixXd::Identity(2, 2), weights),
                  ConfigError);
}

namespace {

struct Factors {
  Eigendecomposition time;
  Eigendecomposition space;
  Eigen::MatrixXd lt, lg;
};

Factors path_and_random_factors(int t, int n, std::mt19937_64& rng) {
  Eigen::MatrixXd wt = Eigen::MatrixXd::Zero(t, t);
  for (int i = 0; i + 1 < t; ++i) wt(i, i + 1) = wt(i + 1, i) = 1.0;
  Factors f;
  f.lt = laplacian(wt);
  f.lg = laplacian(oracle::random_adjacency(n, rng));
  f.time = sorted_eigh(f.lt);
  f.space = sorted_eigh(f.lg);
  return f;
}

}  // namespace

TEST_CASE("separable weights reproduce the kronecker product kernel") {
  std::mt19937_64 rng(127);
  const int t = 4, n = 3;
  Factors f = path_and_random_factors(t, n, rng);
  SpectralMap rt = SpectralMap::shifted_identity(0.3);
  SpectralMap rg = SpectralMap::diffusion(1.0);

  Eigen::MatrixXd weights(n, t);
  for (int j = 0; j < t; ++j) {
    for (int i = 0; i < n; ++i) {
      weights(i, j) = rt(std::max(f.time.values(j), 0.0)) * rg(std::max(f.space.values(i), 0.0));
    }
  }
  SpaceTimeKernel selective =
      doubly_selective_kernel_inverse(f.time.vectors, f.space.vectors, weights);

  Eigen::MatrixXd kt_inv = laplacian_kernel_inverse(f.lt, rt);
  Eigen::MatrixXd kg_inv = laplacian_kernel_inverse(f.lg, rg);
  SpaceTimeKernel product = kronecker_product_kernel(
      kt_inv.llt().solve(Eigen::MatrixXd::Identity(t, t)),
      kg_inv.llt().solve(Eigen::MatrixXd::Identity(n, n)));

  const Eigen::MatrixXd lhs = selective.data();
  const Eigen::MatrixXd rhs = product.inverse();
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
}

TEST_CASE("additive weights reproduce the kronecker sum construction") {
  std::mt19937_64 rng(131);
  const int t = 4, n = 3;
  Factors f = path_and_random_factors(t, n, rng);
  SpectralMap rt = SpectralMap::shifted_identity(0.3);
  SpectralMap rg = SpectralMap::regularized_laplacian(0.8);

  Eigen::MatrixXd weights(n, t);
  for (int j = 0; j < t; ++j) {
    for (int i = 0; i < n; ++i) {
      weights(i, j) = rt(std::max(f.time.values(j), 0.0)) + rg(std::max(f.space.values(i), 0.0));
    }
  }
  SpaceTimeKernel selective =
      doubly_selective_kernel_inverse(f.time.vectors, f.space.vectors, weights);
  SpaceTimeKernel sum = kronecker_sum_kernel_inverse(laplacian_kernel_inverse(f.lt, rt),
                                                     laplacian_kernel_inverse(f.lg, rg));
  CHECK((selective.data() - sum.data()).cwiseAbs().maxCoeff() <
        1e-8 * std::max(1.0, sum.data().cwiseAbs().maxCoeff()));
}

TEST_CASE("frequency response of a doubly selective kernel recovers its weights") {
  std::mt19937_64 rng(137);
  const int t = 5, n = 4;
  Factors f = path_and_random_factors(t, n, rng);
  std::uniform_real_distribution<double> uniform(0.2, 5.0);
  Eigen::MatrixXd weights(n, t);
  for (int j = 0; j < t; ++j) {
    for (int i = 0; i < n; ++i) weights(i, j) = uniform(rng);
  }
  SpaceTimeKernel k = doubly_selective_kernel_inverse(f.time.vectors, f.space.vectors, weights);

  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n * t, n * t);
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j < t; ++j) {
      u.block(i * n, j * n, n, n) = f.time.vectors(i, j) * f.space.vectors;
    }
  }
  Eigen::MatrixXd d = u.transpose() * k.data() * u;
  for (int j = 0; j < t; ++j) {
    for (int i = 0; i < n; ++i) {
      CHECK(d(j * n + i, j * n + i) == doctest::Approx(weights(i, j)).epsilon(1e-9));
    }
  }
  d.diagonal().setZero();
  CHECK(d.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("shifted-identity map on a path graph gives a tridiagonal time inverse") {
  const int t = 6;
  Eigen::MatrixXd wt = Eigen::MatrixXd::Zero(t, t);
  for (int i = 0; i + 1 < t; ++i) wt(i, i + 1) = wt(i + 1, i) = 1.0;
  Eigen::MatrixXd kt_inv = laplacian_kernel_inverse(laplacian(wt),
                                                    SpectralMap::shifted_identity(0.05));
  CHECK(scalar_bandwidth_of(kt_inv, bandwidth_tolerance(kt_inv)) == 1);

  SpaceTimeKernel k = kronecker_sum_kernel_inverse(kt_inv, Eigen::MatrixXd::Identity(3, 3));
  CHECK(k.tridiagonal_inverse());
}

TEST_CASE("time-varying kernel with one slot collapses to the slot kernel") {
  std::mt19937_64 rng(139);
  Eigen::MatrixXd w = oracle::random_adjacency(4, rng);
  TimeVaryingGraph g(4, {w});
  SpectralMap map = SpectralMap::diffusion(1.2);
  SpaceTimeKernel k = timevarying_kernel_inverse(g, {map}, {});
  CHECK((k.data() - laplacian_kernel_inverse(laplacian(w), map)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("time-varying kernel quadratic form matches its regularizer") {
  std::mt19937_64 rng(149);
  const int n = 4, t = 5;
  std::vector<Eigen::MatrixXd> slots;
  for (int k = 0; k < t; ++k) slots.push_back(oracle::random_adjacency(n, rng));
  TimeVaryingGraph g(n, slots);
  const double s = 0.6;
  SpectralMap map = SpectralMap::regularized_laplacian(1.0);
  std::vector<SpectralMap> maps(t, map);
  SpaceTimeKernel k = timevarying_kernel_inverse(g, maps, scaled_identity_bridges(n, t, s));

  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd f = oracle::random_vector(n * t, rng);
    double expected = 0.0;
    for (int kk = 0; kk < t; ++kk) {
      const auto fk = f.segment(kk * n, n);
      expected += fk.dot(laplacian_kernel_inverse(laplacian(slots[kk]), map) * fk);
      if (kk > 0) expected += s * (fk - f.segment((kk - 1) * n, n)).squaredNorm();
    }
    CHECK(f.dot(k.data() * f) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("time-varying kernels are block tridiagonal and positive definite") {
  std::mt19937_64 rng(151);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 3 + trial % 3;
    const int t = 3 + trial;
    std::vector<Eigen::MatrixXd> slots;
    for (int k = 0; k < t; ++k) slots.push_back(oracle::random_adjacency(n, rng));
    TimeVaryingGraph g(n, slots);
    SpaceTimeKernel k = timevarying_kernel_inverse(
        g, std::vector<SpectralMap>(t, SpectralMap::diffusion(0.8)),
        scaled_identity_bridges(n, t, 0.3));
    CHECK(k.tridiagonal_inverse());
    CHECK(k.min_eigenvalue() > 0.0);
  }
}

TEST_CASE("block-diagonal bridge-free kernel stays block diagonal") {
  std::mt19937_64 rng(157);
  const int n = 3, t = 4;
  TimeVaryingGraph g(n, std::vector<Eigen::MatrixXd>(t, oracle::random_adjacency(n, rng)));
  SpaceTimeKernel k = timevarying_kernel_inverse(
      g, std::vector<SpectralMap>(t, SpectralMap::diffusion(1.0)),
      scaled_identity_bridges(n, t, 0.0));
  BlockTridiagonal blocks = k.inverse_blocks();
  for (const auto& sub : blocks.sub) CHECK(sub.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("space-time kernel rejects asymmetric storage") {
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(4, 4);
  bad(0, 1) = 0.5;
  CHECK_THROWS_AS(SpaceTimeKernel(2, 2, MatrixForm::ExplicitInverse, bad, 1), ConfigError);
}
