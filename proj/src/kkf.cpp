#include "graphtime/kkf.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

#include "graphtime/errors.hpp"

namespace graphtime {

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Inverts an SPD matrix, naming the failing slot. A non-PD intermediate
// means the inverse kernel was not PD block-tridiagonal; that is reported,
// not projected away.
Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& m, const std::string& where) {
  Eigen::LLT<Eigen::MatrixXd> llt(symmetrized(m));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("kkf schedule: Q^-1 " + where +
                         " is not positive definite; the inverse kernel is not PD "
                         "block-tridiagonal");
  }
  return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

Eigen::MatrixXd invert_spd_at_slot(const Eigen::MatrixXd& m, int slot) {
  return invert_spd(m, "at slot " + std::to_string(slot));
}

}  // namespace

BlockTridiagonal KkfSchedule::reassemble_inverse() const {
  const int t = slots();
  BlockTridiagonal out;
  out.block_size = n;
  out.diag.resize(t);
  out.sub.resize(t - 1);
  for (int k = 0; k < t; ++k) {
    out.diag[k] = plant_noise_inv[k];
    if (k + 1 < t) {
      out.diag[k] += transition[k + 1].transpose() * plant_noise_inv[k + 1] * transition[k + 1];
      out.sub[k] = -plant_noise_inv[k + 1] * transition[k + 1];
    }
  }
  return out;
}

double KkfSchedule::quadratic_decomposition(const Eigen::VectorXd& f) const {
  const int t = slots();
  if (f.size() != static_cast<Eigen::Index>(n) * t) {
    throw ConfigError("quadratic_decomposition: vector length mismatch");
  }
  const auto f0 = f.segment(0, n);
  double sum = f0.dot(plant_noise_inv[0] * f0);
  for (int k = 1; k < t; ++k) {
    const Eigen::VectorXd resid = f.segment(k * n, n) - transition[k] * f.segment((k - 1) * n, n);
    sum += resid.dot(plant_noise_inv[k] * resid);
  }
  return sum;
}

KkfSchedule schedule_from_inverse_blocks(const BlockTridiagonal& kernel_inverse) {
  const int t = kernel_inverse.slots();
  const int n = kernel_inverse.block_size;
  if (t < 1) throw ConfigError("kkf schedule: empty kernel");

  KkfSchedule s;
  s.n = n;
  s.plant_noise.resize(t);
  s.plant_noise_inv.resize(t);
  s.transition.resize(t);
  s.transition[0] = Eigen::MatrixXd::Zero(n, n);

  // Backward pass: Q^-1 at the last slot is the last diagonal block; each
  // earlier slot subtracts the coupling it passes down.
  s.plant_noise_inv[t - 1] = symmetrized(kernel_inverse.diag[t - 1]);
  s.plant_noise[t - 1] = invert_spd_at_slot(s.plant_noise_inv[t - 1], t - 1);
  for (int k = t - 1; k >= 1; --k) {
    s.transition[k] = -s.plant_noise[k] * kernel_inverse.sub[k - 1];
    s.plant_noise_inv[k - 1] =
        symmetrized(kernel_inverse.diag[k - 1] -
                    s.transition[k].transpose() * s.plant_noise_inv[k] * s.transition[k]);
    s.plant_noise[k - 1] = invert_spd_at_slot(s.plant_noise_inv[k - 1], k - 1);
  }
  return s;
}

KkfSchedule schedule_from_inverse_kernel(const SpaceTimeKernel& kernel_inverse) {
  return schedule_from_inverse_blocks(kernel_inverse.inverse_blocks());
}

KkfSchedule steady_state_schedule(const Eigen::MatrixXd& d, const Eigen::MatrixXd& e, int slots,
                                  double tol, int max_iterations) {
  const int n = static_cast<int>(d.rows());
  if (slots < 1) throw ConfigError("steady-state schedule: slot count must be positive");
  if (e.rows() != n || e.cols() != n || d.cols() != n) {
    throw ConfigError("steady-state schedule: block dimension mismatch");
  }

  // Backward fixed point X = D - E^T X^-1 E, seeded at the terminal
  // condition X = D.
  Eigen::MatrixXd x = symmetrized(d);
  for (int iterations = 0; iterations < max_iterations; ++iterations) {
    Eigen::MatrixXd xinv = invert_spd(x, "in the steady-state iteration");
    Eigen::MatrixXd next = symmetrized(d - e.transpose() * xinv * e);
    const double delta = (next - x).cwiseAbs().maxCoeff();
    x = std::move(next);
    if (delta <= tol * std::max(1.0, x.cwiseAbs().maxCoeff())) break;
  }

  KkfSchedule s;
  s.n = n;
  Eigen::MatrixXd q = invert_spd(x, "at the steady-state fixed point");
  Eigen::MatrixXd p = -q * e;
  s.plant_noise.assign(slots, q);
  s.plant_noise_inv.assign(slots, x);
  s.transition.assign(slots, p);
  s.transition[0] = Eigen::MatrixXd::Zero(n, n);
  return s;
}

KkfState KkfState::initial(int n) {
  KkfState s;
  s.slot = 0;
  s.filtered = Eigen::VectorXd::Zero(n);
  s.predicted = Eigen::VectorXd::Zero(n);
  s.error_filtered = Eigen::MatrixXd::Zero(n, n);
  s.error_predicted = Eigen::MatrixXd::Zero(n, n);
  return s;
}

KkfState kkf_step(const KkfState& prev, const KkfSchedule& schedule, const Eigen::VectorXd& y,
                  const std::vector<int>& sampled, const Eigen::VectorXd& noise_variances) {
  const int n = schedule.n;
  const int k = prev.slot;  // slot being processed now
  if (k >= schedule.slots()) throw ConfigError("kkf step: past the end of the schedule");
  const int m = static_cast<int>(sampled.size());
  if (y.size() != m || noise_variances.size() != m) {
    throw ConfigError("kkf step: observation/noise length mismatch");
  }

  KkfState next;
  next.slot = k + 1;

  // Predict. The first slot has a zero transition, so prediction starts at
  // the origin with error Q[0].
  if (k == 0) {
    next.predicted = Eigen::VectorXd::Zero(n);
    next.error_predicted = schedule.plant_noise[0];
  } else {
    next.predicted = schedule.transition[k] * prev.filtered;
    next.error_predicted = symmetrized(schedule.transition[k] * prev.error_filtered *
                                           schedule.transition[k].transpose() +
                                       schedule.plant_noise[k]);
  }

  if (m == 0) {
    // No observations: the prediction is the posterior.
    next.filtered = next.predicted;
    next.error_filtered = next.error_predicted;
    return next;
  }

  // Gain: G = M S^T (V + S M S^T)^-1 with V = diag(noise_variances).
  Eigen::MatrixXd ms(n, m);  // M S^T
  for (int c = 0; c < m; ++c) ms.col(c) = next.error_predicted.col(sampled[c]);
  Eigen::MatrixXd innovation(m, m);  // S M S^T + V
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) innovation(r, c) = next.error_predicted(sampled[r], sampled[c]);
  }
  innovation.diagonal() += noise_variances;
  Eigen::LLT<Eigen::MatrixXd> llt(innovation);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("kkf step: innovation matrix is not positive definite at slot " +
                         std::to_string(k));
  }
  next.gain = llt.solve(ms.transpose()).transpose();

  // Correct.
  Eigen::VectorXd predicted_samples(m);
  for (int c = 0; c < m; ++c) predicted_samples(c) = next.predicted(sampled[c]);
  next.filtered = next.predicted + next.gain * (y - predicted_samples);
  next.error_filtered =
      symmetrized(next.error_predicted - next.gain * ms.transpose());
  if (!next.filtered.allFinite()) {
    throw NumericalError("kkf step: non-finite estimate at slot " + std::to_string(k));
  }
  return next;
}

KkfState kkf_step(const KkfState& prev, const KkfSchedule& schedule, const Eigen::VectorXd& y,
                  const std::vector<int>& sampled, double noise_variance) {
  return kkf_step(prev, schedule, y, sampled,
                  Eigen::VectorXd::Constant(static_cast<Eigen::Index>(sampled.size()),
                                            noise_variance));
}

KkfResult run_kkf(const KkfSchedule& schedule, const ObservationSet& obs, const SamplingPlan& plan,
                  double mu) {
  validate_observations(obs, plan);
  if (!(mu > 0.0)) throw ConfigError("kkf: mu must be positive");
  if (plan.n_vertices() != schedule.n || plan.slots() != schedule.slots()) {
    throw ConfigError("kkf: schedule dimensions do not match the sampling plan");
  }

  KkfResult result;
  result.estimate.values.resize(schedule.n, schedule.slots());
  result.estimate.estimator = "kkf";
  result.estimate.mu = mu;
  result.error.reserve(schedule.slots());

  KkfState state = KkfState::initial(schedule.n);
  for (int t = 0; t < schedule.slots(); ++t) {
    const int m = plan.sample_count(t);
    const double v = obs.noise_scale(t, mu, m);
    state = kkf_step(state, schedule, obs.values[t], plan.at(t),
                     Eigen::VectorXd::Constant(m, v));
    result.estimate.values.col(t) = state.filtered;
    result.error.push_back(state.error_filtered);
  }
  return result;
}

KkfResult run_kkf(const BlockTridiagonal& kernel_inverse, const ObservationSet& obs,
                  const SamplingPlan& plan, double mu) {
  return run_kkf(schedule_from_inverse_blocks(kernel_inverse), obs, plan, mu);
}

LiftedProblem lift_block_bandwidth(const SpaceTimeKernel& kernel, const ObservationSet& obs,
                                   const SamplingPlan& plan, double mu) {
  validate_observations(obs, plan);
  const int n = kernel.n();
  const int t = kernel.t();
  const int b = kernel.block_bandwidth();
  if (b >= t && t > 1) {
    throw ConfigError("lift: inverse bandwidth " + std::to_string(b) +
                      " needs a longer horizon than " + std::to_string(t) + " slots");
  }

  const int padded = ((t + b - 1) / b) * b;
  const int super_slots = padded / b;

  // Padded inverse: original blocks, identity on padded diagonal blocks,
  // no coupling into the padding. The padded slots decouple, so estimates of
  // the real slots are unchanged.
  Eigen::MatrixXd kinv = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n) * padded,
                                                   static_cast<Eigen::Index>(n) * padded);
  kinv.topLeftCorner(kernel.dim(), kernel.dim()) = kernel.inverse();

  ObservationSet lifted_obs;
  std::vector<Eigen::VectorXd> lifted_noise(super_slots);
  std::vector<std::vector<int>> super_plan(super_slots);
  lifted_obs.values.resize(super_slots);
  for (int s = 0; s < super_slots; ++s) {
    int count = 0;
    for (int j = 0; j < b; ++j) {
      const int slot = s * b + j;
      if (slot >= t) break;
      count += plan.sample_count(slot);
    }
    auto& indices = super_plan[s];
    indices.reserve(count);
    Eigen::VectorXd values(count);
    Eigen::VectorXd noise(count);
    int at = 0;
    for (int j = 0; j < b; ++j) {
      const int slot = s * b + j;
      if (slot >= t) break;
      const double v = obs.noise_scale(slot, mu, plan.sample_count(slot));
      for (int i = 0; i < plan.sample_count(slot); ++i) {
        indices.push_back(plan.at(slot)[i] + j * n);
        values(at) = obs.values[slot](i);
        noise(at) = v;
        ++at;
      }
    }
    lifted_obs.values[s] = std::move(values);
    lifted_noise[s] = std::move(noise);
  }
  return LiftedProblem{BlockTridiagonal::from_dense(kinv, b * n), std::move(lifted_obs),
                       SamplingPlan(b * n, std::move(super_plan)), std::move(lifted_noise), b, t};
}

KkfResult run_kkf(const SpaceTimeKernel& kernel, const ObservationSet& obs,
                  const SamplingPlan& plan, double mu) {
  if (kernel.tridiagonal_inverse()) {
    KkfResult result = run_kkf(kernel.inverse_blocks(), obs, plan, mu);
    result.estimate.kernel = kernel.descriptor();
    return result;
  }

  // Remark-style lifting: filter super-slots of b stacked slots, then
  // unstack the posteriors into per-slot columns.
  const LiftedProblem lifted = lift_block_bandwidth(kernel, obs, plan, mu);
  const int n = kernel.n();
  const int b = lifted.bandwidth;
  KkfSchedule schedule = schedule_from_inverse_blocks(lifted.kernel_inverse);

  KkfResult result;
  result.estimate.values.resize(n, lifted.original_slots);
  result.estimate.estimator = "kkf-lifted";
  result.estimate.mu = mu;
  result.estimate.kernel = kernel.descriptor();
  result.error.reserve(lifted.original_slots);

  KkfState state = KkfState::initial(schedule.n);
  for (int s = 0; s < lifted.plan.slots(); ++s) {
    state = kkf_step(state, schedule, lifted.observations.values[s], lifted.plan.at(s),
                     lifted.noise_variances[s]);
    for (int j = 0; j < b; ++j) {
      const int slot = s * b + j;
      if (slot >= lifted.original_slots) break;
      result.estimate.values.col(slot) = state.filtered.segment(j * n, n);
      result.error.push_back(state.error_filtered.block(j * n, j * n, n, n));
    }
  }
  return result;
}

}  // namespace graphtime
