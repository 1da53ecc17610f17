#pragma once

#include <Eigen/Dense>
#include <vector>

#include "graphtime/block_tridiagonal.hpp"
#include "graphtime/estimators.hpp"
#include "graphtime/kernels.hpp"

namespace graphtime {

// Filter parameters extracted from a block-tridiagonal inverse kernel by the
// backward recursion: plant-noise kernels Q[t] (SPD) and transition matrices
// P[t] (index t maps slot t-1 to slot t; P for the first slot is zero).
struct KkfSchedule {
  int n = 0;
  std::vector<Eigen::MatrixXd> plant_noise;      // Q, one per slot
  std::vector<Eigen::MatrixXd> plant_noise_inv;  // Q^-1, kept for identities
  std::vector<Eigen::MatrixXd> transition;       // P, transition[0] is zero

  int slots() const { return static_cast<int>(plant_noise.size()); }

  // Reassembles the block-tridiagonal inverse this schedule encodes:
  // diag[t] = Q^-1[t] + P[t+1]^T Q^-1[t+1] P[t+1], sub[t] = -Q^-1[t+1] P[t+1].
  BlockTridiagonal reassemble_inverse() const;
  // Quadratic decomposition f[0]^T Q^-1[0] f[0] + sum ||f[t] - P[t] f[t-1]||^2
  // weighted by Q^-1[t]; equals f^T Kinv f.
  double quadratic_decomposition(const Eigen::VectorXd& f) const;
};

// Backward recursion over the blocks of the inverse kernel. Throws
// NumericalError naming the slot if an intermediate Q^-1 is not positive
// definite (the input was not PD or not truly tridiagonal).
KkfSchedule schedule_from_inverse_blocks(const BlockTridiagonal& kernel_inverse);
KkfSchedule schedule_from_inverse_kernel(const SpaceTimeKernel& kernel_inverse);

// Backward fixed point of the recursion for a time-invariant inverse kernel
// (diagonal block d, sub-diagonal block e), replicated over `slots` slots.
// Experimental: the exact schedule is horizon-dependent and this matches it
// only away from the terminal boundary.
KkfSchedule steady_state_schedule(const Eigen::MatrixXd& d, const Eigen::MatrixXd& e, int slots,
                                  double tol = 1e-13, int max_iterations = 100000);

// Filter state after processing `slot` slots (value semantics; a step never
// mutates its input).
struct KkfState {
  int slot = 0;
  Eigen::VectorXd filtered;         // f[t|t]
  Eigen::VectorXd predicted;        // f[t|t-1]
  Eigen::MatrixXd error_filtered;   // M[t|t]
  Eigen::MatrixXd error_predicted;  // M[t|t-1]
  Eigen::MatrixXd gain;             // G[t], N x M[t]; empty on unobserved slots

  static KkfState initial(int n);
};

// One filter step: predict, propagate error, gain, correct, update error.
// `noise_variances` holds the per-observation fitting weights (length M[t]);
// an empty slot passes the prediction through. Error matrices are
// symmetrized after each update.
KkfState kkf_step(const KkfState& prev, const KkfSchedule& schedule, const Eigen::VectorXd& y,
                  const std::vector<int>& sampled, const Eigen::VectorXd& noise_variances);
KkfState kkf_step(const KkfState& prev, const KkfSchedule& schedule, const Eigen::VectorXd& y,
                  const std::vector<int>& sampled, double noise_variance);

struct KkfResult {
  Estimate estimate;                  // filtered values f[t|t], one column per slot
  std::vector<Eigen::MatrixXd> error; // posterior error matrices M[t|t]
};

// Full filter run. The default noise weights mu * M[t] make the filtered
// sequence equal the growing-window KRR estimate exactly. Kernels with
// inverse bandwidth b > 1 are handled by stacking b consecutive slots and
// filtering the lifted problem; the returned columns are then unstacked, so
// column t carries the estimate of slot t given all slots of its super-slot.
KkfResult run_kkf(const KkfSchedule& schedule, const ObservationSet& obs, const SamplingPlan& plan,
                  double mu);
KkfResult run_kkf(const BlockTridiagonal& kernel_inverse, const ObservationSet& obs,
                  const SamplingPlan& plan, double mu);
KkfResult run_kkf(const SpaceTimeKernel& kernel, const ObservationSet& obs,
                  const SamplingPlan& plan, double mu);

// Bandwidth-b inverse kernels restated as a block-tridiagonal problem over
// super-slots of b stacked slots. Trailing empty slots are appended when the
// horizon is not a multiple of b; the padding blocks are decoupled identity
// blocks, which leaves the original estimates untouched.
struct LiftedProblem {
  BlockTridiagonal kernel_inverse;  // blocks of size b*N
  ObservationSet observations;
  SamplingPlan plan;                // over super-slots, vertex space of size b*N
  std::vector<Eigen::VectorXd> noise_variances;  // per super-slot, per observation
  int bandwidth = 1;
  int original_slots = 0;
};

LiftedProblem lift_block_bandwidth(const SpaceTimeKernel& kernel, const ObservationSet& obs,
                                   const SamplingPlan& plan, double mu);

}  // namespace graphtime
