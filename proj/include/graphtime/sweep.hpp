#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "graphtime/estimators.hpp"
#include "graphtime/graph.hpp"
#include "graphtime/kernels.hpp"
#include "graphtime/sampling.hpp"
#include "graphtime/spectral.hpp"

namespace graphtime {

// Recipe for a space-time kernel. "timevarying" builds the block-tridiagonal
// inverse from per-slot Laplacian kernels plus bridges; the kronecker types
// require a time-invariant topology and couple slots through a path graph
// over time.
struct KernelSpec {
  std::string type = "timevarying";  // timevarying | kronecker-product | kronecker-sum
  SpectralMap space = SpectralMap::diffusion(1.0);
  SpectralMap time = SpectralMap::shifted_identity(0.01);  // kronecker types only
  double bridge_scale = 0.01;                              // s, timevarying type
  std::optional<Eigen::MatrixXd> bridge_matrix;            // overrides bridge_scale

  std::string describe() const;
};

SpaceTimeKernel build_kernel(const TimeVaryingGraph& g, const KernelSpec& spec);
// Block form of the "timevarying" kernel inverse; avoids the dense NT x NT
// matrix for long horizons.
BlockTridiagonal build_kernel_blocks(const TimeVaryingGraph& g, const KernelSpec& spec);
// Per-slot spatial kernels (not inverses) for the instantaneous estimator.
std::vector<Eigen::MatrixXd> build_slot_kernels(const TimeVaryingGraph& g, const KernelSpec& spec);

enum class EstimatorKind { Batch, Instantaneous, Kkf, OnlineClosedform };

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_from_string(const std::string& name);

struct SamplingSpec {
  std::string type = "random-fixed";  // random-fixed | per-slot | full
  int m = 0;
  std::vector<std::vector<int>> per_slot;

  SamplingPlan build(int n_vertices, int slots, std::uint64_t seed) const;
  std::string describe() const;
};

// One fully specified run: estimator, kernel, regularization, sampling, and
// synthesis noise, all reproducible from the seed.
struct ExperimentConfig {
  EstimatorKind estimator = EstimatorKind::Kkf;
  KernelSpec kernel;
  double mu = 1e-4;
  SamplingSpec sampling;
  double noise_std = 0.0;
  std::uint64_t seed = 1;

  std::string describe() const;
  // Stable identifier: hash of the description minus the seed, so seeds of
  // the same cell share an id.
  std::string config_id() const;
};

struct RunOutput {
  Estimate estimate;
  NmseSeries nmse;
  double wall_ms = 0.0;
};

// Samples observations from the truth per the config and dispatches to the
// selected estimator.
RunOutput run_experiment(const TimeVaryingGraph& g, const Eigen::MatrixXd& truth,
                         const ExperimentConfig& config);
// As above with caller-provided observations (no synthesis).
RunOutput run_experiment(const TimeVaryingGraph& g, const ObservationSet& obs,
                         const SamplingPlan& plan, const ExperimentConfig& config,
                         const Eigen::MatrixXd* truth_for_nmse);

struct SweepRow {
  std::string config_id;
  std::uint64_t seed = 0;
  NmseSeries nmse;
  double wall_ms = 0.0;
  bool failed = false;
  std::string error;
};

// Runs every cell, optionally in parallel; per-cell failures are recorded in
// the row and the sweep continues. `on_row` fires as rows complete (under a
// lock); the returned vector preserves cell order.
std::vector<SweepRow> sweep(const TimeVaryingGraph& g, const Eigen::MatrixXd& truth,
                            const std::vector<ExperimentConfig>& cells, int threads,
                            const std::function<void(const SweepRow&)>& on_row = nullptr);

}  // namespace graphtime
