#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "graphtime/estimators.hpp"
#include "graphtime/graph.hpp"
#include "graphtime/spectral.hpp"

namespace graphtime {

// Noisy samples of a ground-truth matrix (N x T, columns are slots) at the
// plan's vertices; i.i.d. Gaussian noise, reproducible from the seed.
ObservationSet sample_signal(const Eigen::MatrixXd& truth, const SamplingPlan& plan,
                             double noise_std, std::uint64_t seed);

// Cumulative normalized mean-square error over slots [0, through_slots),
// restricted to the vertices NOT observed in each slot. Returns nullopt when
// the denominator is zero (every vertex observed throughout): the metric is
// undefined there, which is distinct from being zero.
std::optional<double> cumulative_nmse(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimates,
                                      const SamplingPlan& plan, int through_slots);

struct NmseSeries {
  std::vector<std::optional<double>> values;  // values[t-1] = NMSE through slot t
};

NmseSeries nmse_series(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimates,
                       const SamplingPlan& plan);

// Draws a space-time signal whose smoothness is calibrated to the
// block-tridiagonal inverse kernel built from `spatial_map` and bridges
// s * I: white noise pushed through the kernel's Markov factorization, so
// the population regularizer value equals N*T.
Eigen::MatrixXd generate_smooth_signal(const TimeVaryingGraph& g, const SpectralMap& spatial_map,
                                       double temporal_smoothness, std::uint64_t seed);

// Random connected geometric graph: n points in the unit square, Gaussian
// weights on symmetrized k-nearest-neighbor edges, plus a light spanning
// cycle so the graph never falls apart. Desk-scale stand-in for the sensor
// networks these methods target.
Graph random_geometric_graph(int n, int k_neighbors, std::uint64_t seed);

}  // namespace graphtime
