#include "graphtime/sampling.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "graphtime/errors.hpp"
#include "graphtime/kkf.hpp"

namespace graphtime {

ObservationSet sample_signal(const Eigen::MatrixXd& truth, const SamplingPlan& plan,
                             double noise_std, std::uint64_t seed) {
  if (truth.rows() != plan.n_vertices() || truth.cols() != plan.slots()) {
    throw ConfigError("sample_signal: truth dimensions do not match the plan");
  }
  if (noise_std < 0.0) throw ConfigError("sample_signal: noise std must be non-negative");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  ObservationSet obs;
  obs.values.resize(plan.slots());
  for (int t = 0; t < plan.slots(); ++t) {
    const auto& idx = plan.at(t);
    Eigen::VectorXd y(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      y(static_cast<Eigen::Index>(i)) = truth(idx[i], t);
      if (noise_std > 0.0) y(static_cast<Eigen::Index>(i)) += noise_std * gauss(rng);
    }
    obs.values[t] = std::move(y);
  }
  return obs;
}

std::optional<double> cumulative_nmse(const Eigen::MatrixXd& truth,
                                      const Eigen::MatrixXd& estimates, const SamplingPlan& plan,
                                      int through_slots) {
  const int n = plan.n_vertices();
  if (truth.rows() != n || estimates.rows() != n) {
    throw ConfigError("cumulative_nmse: row count does not match the plan");
  }
  if (through_slots < 1 || through_slots > plan.slots() || truth.cols() < through_slots ||
      estimates.cols() < through_slots) {
    throw ConfigError("cumulative_nmse: slot range out of bounds");
  }

  double numerator = 0.0;
  double denominator = 0.0;
  std::vector<char> observed(n);
  for (int t = 0; t < through_slots; ++t) {
    std::fill(observed.begin(), observed.end(), 0);
    for (int idx : plan.at(t)) observed[idx] = 1;
    for (int v = 0; v < n; ++v) {
      if (observed[v]) continue;
      const double err = truth(v, t) - estimates(v, t);
      numerator += err * err;
      denominator += truth(v, t) * truth(v, t);
    }
  }
  if (denominator == 0.0) return std::nullopt;
  return numerator / denominator;
}

NmseSeries nmse_series(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimates,
                       const SamplingPlan& plan) {
  NmseSeries series;
  series.values.reserve(plan.slots());
  for (int t = 1; t <= plan.slots(); ++t) {
    series.values.push_back(cumulative_nmse(truth, estimates, plan, t));
  }
  return series;
}

Eigen::MatrixXd generate_smooth_signal(const TimeVaryingGraph& g, const SpectralMap& spatial_map,
                                       double temporal_smoothness, std::uint64_t seed) {
  if (!(temporal_smoothness > 0.0)) {
    throw ConfigError("generate_smooth_signal: temporal smoothness must be positive");
  }
  const int n = g.n_vertices();
  const int t = g.slots();

  BlockTridiagonal kinv = timevarying_kernel_inverse_blocks(
      g, std::vector<SpectralMap>(t, spatial_map),
      scaled_identity_bridges(n, t, temporal_smoothness));
  KkfSchedule schedule = schedule_from_inverse_blocks(kinv);

  // The schedule is the Markov square root of the kernel: f[0] drawn with
  // shaping Q[0]^(1/2), then f[t] = P[t] f[t-1] + Q[t]^(1/2) w[t]. The draw
  // has covariance exactly equal to the kernel matrix.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&](int len) {
    Eigen::VectorXd w(len);
    for (int i = 0; i < len; ++i) w(i) = gauss(rng);
    return w;
  };

  Eigen::MatrixXd truth(n, t);
  Eigen::LLT<Eigen::MatrixXd> llt(schedule.plant_noise[0]);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("generate_smooth_signal: plant-noise factorization failed");
  }
  truth.col(0) = llt.matrixL() * draw(n);
  for (int k = 1; k < t; ++k) {
    llt.compute(schedule.plant_noise[k]);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("generate_smooth_signal: plant-noise factorization failed");
    }
    truth.col(k) = schedule.transition[k] * truth.col(k - 1) + llt.matrixL() * draw(n);
  }
  return truth;
}

Graph random_geometric_graph(int n, int k_neighbors, std::uint64_t seed) {
  if (n < 2) throw ConfigError("random_geometric_graph: need at least 2 vertices");
  k_neighbors = std::min(std::max(k_neighbors, 1), n - 1);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Eigen::MatrixXd points(n, 2);
  for (int i = 0; i < n; ++i) {
    points(i, 0) = uniform(rng);
    points(i, 1) = uniform(rng);
  }

  Eigen::MatrixXd dist2(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) dist2(i, j) = (points.row(i) - points.row(j)).squaredNorm();
  }
  // Bandwidth from the typical neighbor distance keeps the weights O(1).
  double mean_d2 = 0.0;
  int pairs = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      mean_d2 += dist2(i, j);
      ++pairs;
    }
  }
  mean_d2 /= std::max(pairs, 1);
  const double bandwidth = std::max(mean_d2 / 4.0, 1e-12);

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return dist2(i, a) < dist2(i, b); });
    int added = 0;
    for (int j : order) {
      if (j == i) continue;
      w(i, j) = w(j, i) = std::exp(-dist2(i, j) / bandwidth);
      if (++added == k_neighbors) break;
    }
  }
  // Spanning cycle through a random permutation guarantees connectivity.
  std::vector<int> cycle(n);
  std::iota(cycle.begin(), cycle.end(), 0);
  std::shuffle(cycle.begin(), cycle.end(), rng);
  for (int i = 0; i < n; ++i) {
    const int a = cycle[i];
    const int b = cycle[(i + 1) % n];
    if (w(a, b) == 0.0) w(a, b) = w(b, a) = 0.05;
  }
  w.diagonal().setZero();
  return Graph(n, std::move(w));
}

}  // namespace graphtime
