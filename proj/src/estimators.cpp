#include "graphtime/estimators.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "graphtime/errors.hpp"

namespace graphtime {

namespace {

// Columns of m selected by `idx`.
Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(k) = m.col(idx[k]);
  return out;
}

Eigen::MatrixXd select_submatrix(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()),
                      static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    for (std::size_t c = 0; c < idx.size(); ++c) out(r, c) = m(idx[r], idx[c]);
  }
  return out;
}

// LDLT solve with a coarse conditioning check. Warns past 1e12, throws when
// the factorization degenerates outright.
Eigen::VectorXd guarded_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                              const std::string& stage) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericalError(stage + ": system matrix is not positive definite");
  }
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  const double dmin = d.cwiseAbs().minCoeff();
  if (dmin <= 0.0 || !std::isfinite(dmax)) {
    std::ostringstream msg;
    msg << stage << ": singular system (pivot ratio " << dmax << "/" << dmin << ")";
    throw NumericalError(msg.str());
  }
  if (dmax / dmin > 1e12) {
    std::cerr << "graphtime: warning: " << stage << " is ill-conditioned (pivot ratio ~ "
              << dmax / dmin << ")\n";
  }
  return ldlt.solve(b);
}

}  // namespace

SamplingPlan::SamplingPlan(int n_vertices, std::vector<std::vector<int>> slots)
    : n_(n_vertices), slots_(std::move(slots)) {
  if (n_ <= 0) throw ConfigError("sampling plan: vertex count must be positive");
  if (slots_.empty()) throw ConfigError("sampling plan: needs at least one slot");
  for (std::size_t t = 0; t < slots_.size(); ++t) {
    int prev = -1;
    for (int idx : slots_[t]) {
      if (idx < 0 || idx >= n_) {
        std::ostringstream msg;
        msg << "sampling plan: slot " << t << " index " << idx << " out of range [0, " << n_ << ")";
        throw ConfigError(msg.str());
      }
      if (idx <= prev) {
        std::ostringstream msg;
        msg << "sampling plan: slot " << t << " indices must be strictly increasing";
        throw ConfigError(msg.str());
      }
      prev = idx;
    }
  }
}

SamplingPlan SamplingPlan::full(int n_vertices, int slots) {
  std::vector<int> all(n_vertices);
  std::iota(all.begin(), all.end(), 0);
  return SamplingPlan(n_vertices, std::vector<std::vector<int>>(slots, all));
}

SamplingPlan SamplingPlan::random_fixed(int n_vertices, int slots, int m, std::uint64_t seed) {
  if (m < 0 || m > n_vertices) throw ConfigError("sampling plan: m out of range");
  std::vector<int> all(n_vertices);
  std::iota(all.begin(), all.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  std::vector<int> chosen(all.begin(), all.begin() + m);
  std::sort(chosen.begin(), chosen.end());
  return SamplingPlan(n_vertices, std::vector<std::vector<int>>(slots, chosen));
}

int SamplingPlan::total_samples(int through_slots) const {
  int total = 0;
  for (int t = 0; t < through_slots; ++t) total += sample_count(t);
  return total;
}

std::vector<int> SamplingPlan::global_indices(int through_slots) const {
  std::vector<int> idx;
  idx.reserve(total_samples(through_slots));
  for (int t = 0; t < through_slots; ++t) {
    for (int v : slots_[t]) idx.push_back(v + n_ * t);
  }
  return idx;
}

double ObservationSet::noise_scale(int t, double mu, int sample_count) const {
  if (!noise_scales.empty()) {
    const double v = noise_scales.at(t);
    if (!(v > 0.0)) throw ConfigError("observation set: noise scales must be positive");
    return v;
  }
  return mu * sample_count;
}

void validate_observations(const ObservationSet& obs, const SamplingPlan& plan) {
  if (obs.slots() != plan.slots()) {
    throw ConfigError("observations: slot count " + std::to_string(obs.slots()) +
                      " does not match plan (" + std::to_string(plan.slots()) + ")");
  }
  if (!obs.noise_scales.empty() &&
      static_cast<int>(obs.noise_scales.size()) != plan.slots()) {
    throw ConfigError("observations: noise scale count does not match slots");
  }
  for (int t = 0; t < plan.slots(); ++t) {
    if (obs.values[t].size() != plan.sample_count(t)) {
      std::ostringstream msg;
      msg << "observations: slot " << t << " has " << obs.values[t].size() << " values, plan has "
          << plan.sample_count(t) << " samples";
      throw ConfigError(msg.str());
    }
    if (!obs.values[t].allFinite()) {
      throw ConfigError("observations: slot " + std::to_string(t) + " has non-finite values");
    }
  }
}

Eigen::VectorXd instantaneous_estimate(const Eigen::VectorXd& y, const std::vector<int>& sampled,
                                       const Eigen::MatrixXd& kernel, double mu) {
  const Eigen::Index n = kernel.rows();
  const int m = static_cast<int>(sampled.size());
  if (!(mu > 0.0)) throw ConfigError("instantaneous estimate: mu must be positive");
  if (y.size() != m) throw ConfigError("instantaneous estimate: sample/value length mismatch");
  if (m == 0) return Eigen::VectorXd::Zero(n);  // pure-regularizer minimizer

  Eigen::MatrixXd k_cols = select_columns(kernel, sampled);            // K S^T
  Eigen::MatrixXd system = select_submatrix(kernel, sampled);          // S K S^T
  system.diagonal().array() += mu * static_cast<double>(m);
  return k_cols * guarded_solve(system, y, "instantaneous solve");
}

Estimate instantaneous_estimate_all(const ObservationSet& obs, const SamplingPlan& plan,
                                    const std::vector<Eigen::MatrixXd>& kernels, double mu) {
  validate_observations(obs, plan);
  if (static_cast<int>(kernels.size()) != plan.slots()) {
    throw ConfigError("instantaneous estimate: kernel count does not match slots");
  }
  Estimate est;
  est.values.resize(plan.n_vertices(), plan.slots());
  est.estimator = "instantaneous-krr";
  est.mu = mu;
  for (int t = 0; t < plan.slots(); ++t) {
    est.values.col(t) = instantaneous_estimate(obs.values[t], plan.at(t), kernels[t], mu);
  }
  return est;
}

Estimate instantaneous_estimate_all(const ObservationSet& obs, const SamplingPlan& plan,
                                    const Eigen::MatrixXd& kernel, double mu) {
  return instantaneous_estimate_all(
      obs, plan, std::vector<Eigen::MatrixXd>(plan.slots(), kernel), mu);
}

namespace {

// Shared core of the batch and growing-window closed forms: solve on the
// samples from the first `slots_observed` slots, estimate the full horizon.
Estimate closedform_estimate(const ObservationSet& obs, const SamplingPlan& plan,
                             const SpaceTimeKernel& kernel, double mu, int slots_observed,
                             const std::string& name) {
  validate_observations(obs, plan);
  if (!(mu > 0.0)) throw ConfigError(name + ": mu must be positive");
  if (plan.n_vertices() != kernel.n() || plan.slots() != kernel.t()) {
    throw ConfigError(name + ": kernel dimensions do not match the sampling plan");
  }
  if (slots_observed < 1 || slots_observed > plan.slots()) {
    throw ConfigError(name + ": observed slot count out of range");
  }

  Estimate est;
  est.values = Eigen::MatrixXd::Zero(plan.n_vertices(), plan.slots());
  est.estimator = name;
  est.mu = mu;
  est.kernel = kernel.descriptor();

  const std::vector<int> global = plan.global_indices(slots_observed);
  if (global.empty()) return est;  // no data: minimizer of the pure regularizer

  const Eigen::MatrixXd kbar = kernel.kernel();
  Eigen::MatrixXd k_cols = select_columns(kbar, global);
  Eigen::MatrixXd system = select_submatrix(kbar, global);
  // mu * D with D = bdiag{M[t] I}; empty slots contribute no rows at all.
  Eigen::Index row = 0;
  Eigen::VectorXd stacked(static_cast<Eigen::Index>(global.size()));
  for (int t = 0; t < slots_observed; ++t) {
    const int m = plan.sample_count(t);
    if (m == 0) continue;
    system.diagonal().segment(row, m).array() += mu * static_cast<double>(m);
    stacked.segment(row, m) = obs.values[t];
    row += m;
  }

  Eigen::VectorXd coeff = guarded_solve(system, stacked, name + " solve");
  Eigen::VectorXd flat = k_cols * coeff;
  est.values = Eigen::Map<const Eigen::MatrixXd>(flat.data(), plan.n_vertices(), plan.slots());
  if (!est.values.allFinite()) {
    throw NumericalError(name + ": non-finite estimate (ill-conditioned kernel?)");
  }
  return est;
}

}  // namespace

Estimate batch_estimate(const ObservationSet& obs, const SamplingPlan& plan,
                        const SpaceTimeKernel& kernel, double mu) {
  return closedform_estimate(obs, plan, kernel, mu, plan.slots(), "batch-krr");
}

Estimate online_closedform_estimate(const ObservationSet& obs, const SamplingPlan& plan,
                                    const SpaceTimeKernel& kernel, double mu, int slots_observed) {
  return closedform_estimate(obs, plan, kernel, mu, slots_observed, "online-krr");
}

}  // namespace graphtime
