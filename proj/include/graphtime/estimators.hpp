#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "graphtime/kernels.hpp"

namespace graphtime {

// Per-slot lists of observed vertex indices (0-based, strictly increasing).
// Slots may be empty: an unobserved slot contributes nothing to the fit.
class SamplingPlan {
public:
  SamplingPlan(int n_vertices, std::vector<std::vector<int>> slots);

  static SamplingPlan full(int n_vertices, int slots);
  // The same uniformly drawn m-subset in every slot.
  static SamplingPlan random_fixed(int n_vertices, int slots, int m, std::uint64_t seed);

  int n_vertices() const { return n_; }
  int slots() const { return static_cast<int>(slots_.size()); }
  const std::vector<int>& at(int t) const { return slots_.at(t); }
  int sample_count(int t) const { return static_cast<int>(slots_.at(t).size()); }
  // Total sample count over slots [0, through_slots).
  int total_samples(int through_slots) const;
  int total_samples() const { return total_samples(slots()); }

  // Flattened indices n + N*t of all samples in slots [0, through_slots).
  std::vector<int> global_indices(int through_slots) const;

private:
  int n_;
  std::vector<std::vector<int>> slots_;
};

// Per-slot observation vectors aligned with a SamplingPlan. `noise_scales`
// holds the per-slot fitting weights (the observation-noise variances of the
// filter); when empty, the scale defaults to mu * M[t], which reproduces the
// sample-count weighting of the batch objective exactly.
struct ObservationSet {
  std::vector<Eigen::VectorXd> values;
  std::vector<double> noise_scales;

  int slots() const { return static_cast<int>(values.size()); }
  double noise_scale(int t, double mu, int sample_count) const;
};

void validate_observations(const ObservationSet& obs, const SamplingPlan& plan);

// Reconstructed signal, one column per slot.
struct Estimate {
  Eigen::MatrixXd values;  // N x T
  std::string estimator;
  double mu = 0.0;
  std::string kernel;
};

// Single-slot KRR: minimizer of (1/M)||y - S f||^2 + mu f^T K^-1 f, computed
// as K S^T (S K S^T + mu M I)^-1 y. An empty slot returns the zero vector.
Eigen::VectorXd instantaneous_estimate(const Eigen::VectorXd& y, const std::vector<int>& sampled,
                                       const Eigen::MatrixXd& kernel, double mu);

// Runs the single-slot estimator independently per slot with slot-wise
// kernels (use the single-kernel overload for time-invariant topologies).
Estimate instantaneous_estimate_all(const ObservationSet& obs, const SamplingPlan& plan,
                                    const std::vector<Eigen::MatrixXd>& kernels, double mu);
Estimate instantaneous_estimate_all(const ObservationSet& obs, const SamplingPlan& plan,
                                    const Eigen::MatrixXd& kernel, double mu);

// Full-horizon batch KRR closed form over all T slots.
Estimate batch_estimate(const ObservationSet& obs, const SamplingPlan& plan,
                        const SpaceTimeKernel& kernel, double mu);

// Growing-window KRR: uses observations from the first `slots_observed`
// slots but estimates the full horizon (past, present, and future columns).
Estimate online_closedform_estimate(const ObservationSet& obs, const SamplingPlan& plan,
                                    const SpaceTimeKernel& kernel, double mu, int slots_observed);

}  // namespace graphtime
