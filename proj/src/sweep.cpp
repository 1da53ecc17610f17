#include "graphtime/sweep.hpp"

#include <Eigen/Cholesky>
#include <atomic>
#include <chrono>
#include <mutex>
#include <sstream>
#include <thread>

#include "graphtime/digest.hpp"
#include "graphtime/errors.hpp"
#include "graphtime/kkf.hpp"

namespace graphtime {

namespace {

std::vector<Eigen::MatrixXd> bridges_from_spec(const KernelSpec& spec, int n, int t) {
  if (spec.bridge_matrix) {
    if (spec.bridge_matrix->rows() != n || spec.bridge_matrix->cols() != n) {
      throw ConfigError("kernel spec: bridge matrix dimension mismatch");
    }
    return std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(t > 0 ? t - 1 : 0),
                                        *spec.bridge_matrix);
  }
  return scaled_identity_bridges(n, t, spec.bridge_scale);
}

// Path graph over the time slots: each slot linked to its neighbors.
Eigen::MatrixXd time_path_adjacency(int t) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(t, t);
  for (int i = 0; i + 1 < t; ++i) w(i, i + 1) = w(i + 1, i) = 1.0;
  return w;
}

Eigen::MatrixXd invert_kernel_factor(const Eigen::MatrixXd& kinv, const std::string& what) {
  Eigen::LLT<Eigen::MatrixXd> llt(kinv);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(what + ": factor is not positive definite");
  }
  return llt.solve(Eigen::MatrixXd::Identity(kinv.rows(), kinv.cols()));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed ^ (salt + 0x9e3779b97f4a7c15ull);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  return x;
}

}  // namespace

std::string KernelSpec::describe() const {
  std::ostringstream out;
  out << type << "{space=" << space.describe();
  if (type != "timevarying") out << ",time=" << time.describe();
  if (type == "timevarying") {
    if (bridge_matrix) {
      out << ",bridge=matrix(" << fnv1a64_hex(std::string(
                 reinterpret_cast<const char*>(bridge_matrix->data()),
                 sizeof(double) * static_cast<std::size_t>(bridge_matrix->size())))
          << ")";
    } else {
      out << ",bridge=s*I(s=" << bridge_scale << ")";
    }
  }
  out << "}";
  return out.str();
}

SpaceTimeKernel build_kernel(const TimeVaryingGraph& g, const KernelSpec& spec) {
  const int n = g.n_vertices();
  const int t = g.slots();
  if (spec.type == "timevarying") {
    return timevarying_kernel_inverse(g, std::vector<SpectralMap>(t, spec.space),
                                      bridges_from_spec(spec, n, t));
  }
  if (spec.type == "kronecker-product" || spec.type == "kronecker-sum") {
    if (!g.is_time_invariant()) {
      throw ConfigError("kernel spec: " + spec.type + " requires a time-invariant topology");
    }
    const Eigen::MatrixXd time_kinv =
        laplacian_kernel_inverse(laplacian(time_path_adjacency(t)), spec.time);
    const Eigen::MatrixXd space_kinv = laplacian_kernel_inverse(laplacian(g.slot(0)), spec.space);
    if (spec.type == "kronecker-sum") {
      return kronecker_sum_kernel_inverse(time_kinv, space_kinv);
    }
    return kronecker_product_kernel(invert_kernel_factor(time_kinv, "time kernel"),
                                    invert_kernel_factor(space_kinv, "space kernel"));
  }
  throw ConfigError("kernel spec: unknown type '" + spec.type + "'");
}

BlockTridiagonal build_kernel_blocks(const TimeVaryingGraph& g, const KernelSpec& spec) {
  if (spec.type != "timevarying") {
    throw ConfigError("kernel spec: block form is only available for the timevarying type");
  }
  const int t = g.slots();
  return timevarying_kernel_inverse_blocks(g, std::vector<SpectralMap>(t, spec.space),
                                           bridges_from_spec(spec, g.n_vertices(), t));
}

std::vector<Eigen::MatrixXd> build_slot_kernels(const TimeVaryingGraph& g,
                                                const KernelSpec& spec) {
  const int t = g.slots();
  std::vector<Eigen::MatrixXd> kernels(t);
  if (g.is_time_invariant()) {
    Eigen::MatrixXd k = invert_kernel_factor(
        laplacian_kernel_inverse(laplacian(g.slot(0)), spec.space), "slot kernel");
    for (int k_t = 0; k_t < t; ++k_t) kernels[k_t] = k;
  } else {
    for (int k_t = 0; k_t < t; ++k_t) {
      kernels[k_t] = invert_kernel_factor(
          laplacian_kernel_inverse(laplacian(g.slot(k_t)), spec.space), "slot kernel");
    }
  }
  return kernels;
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Batch: return "batch";
    case EstimatorKind::Instantaneous: return "instantaneous";
    case EstimatorKind::Kkf: return "kkf";
    case EstimatorKind::OnlineClosedform: return "online-closedform";
  }
  return "unknown";
}

EstimatorKind estimator_from_string(const std::string& name) {
  if (name == "batch") return EstimatorKind::Batch;
  if (name == "instantaneous") return EstimatorKind::Instantaneous;
  if (name == "kkf") return EstimatorKind::Kkf;
  if (name == "online-closedform") return EstimatorKind::OnlineClosedform;
  throw ConfigError("estimator: unknown kind '" + name +
                    "' (expected batch, instantaneous, kkf, or online-closedform)");
}

SamplingPlan SamplingSpec::build(int n_vertices, int slots, std::uint64_t seed) const {
  if (type == "full") return SamplingPlan::full(n_vertices, slots);
  if (type == "random-fixed") {
    return SamplingPlan::random_fixed(n_vertices, slots, m, mix_seed(seed, 0x5a));
  }
  if (type == "per-slot") {
    if (static_cast<int>(per_slot.size()) != slots) {
      throw ConfigError("sampling: per-slot list count " + std::to_string(per_slot.size()) +
                        " does not match horizon " + std::to_string(slots));
    }
    return SamplingPlan(n_vertices, per_slot);
  }
  throw ConfigError("sampling: unknown type '" + type + "'");
}

std::string SamplingSpec::describe() const {
  std::ostringstream out;
  out << type;
  if (type == "random-fixed") out << "(m=" << m << ")";
  if (type == "per-slot") {
    std::ostringstream lists;
    for (const auto& slot : per_slot) {
      lists << '[';
      for (int v : slot) lists << v << ',';
      lists << ']';
    }
    out << "(" << fnv1a64_hex(lists.str()) << ")";
  }
  return out.str();
}

std::string ExperimentConfig::describe() const {
  std::ostringstream out;
  out << "estimator=" << to_string(estimator) << ";kernel=" << kernel.describe() << ";mu=" << mu
      << ";sampling=" << sampling.describe() << ";noise_std=" << noise_std;
  return out.str();
}

std::string ExperimentConfig::config_id() const { return fnv1a64_hex(describe()); }

RunOutput run_experiment(const TimeVaryingGraph& g, const ObservationSet& obs,
                         const SamplingPlan& plan, const ExperimentConfig& config,
                         const Eigen::MatrixXd* truth_for_nmse) {
  const auto start = std::chrono::steady_clock::now();
  RunOutput out;

  switch (config.estimator) {
    case EstimatorKind::Kkf:
      if (config.kernel.type == "timevarying") {
        out.estimate = run_kkf(build_kernel_blocks(g, config.kernel), obs, plan, config.mu)
                           .estimate;
        out.estimate.kernel = config.kernel.describe();
      } else {
        out.estimate = run_kkf(build_kernel(g, config.kernel), obs, plan, config.mu).estimate;
      }
      break;
    case EstimatorKind::Instantaneous:
      out.estimate =
          instantaneous_estimate_all(obs, plan, build_slot_kernels(g, config.kernel), config.mu);
      break;
    case EstimatorKind::Batch:
      out.estimate = batch_estimate(obs, plan, build_kernel(g, config.kernel), config.mu);
      break;
    case EstimatorKind::OnlineClosedform: {
      // The online solution re-solves the growing window at every slot and
      // keeps the present-slot column of each solve.
      const SpaceTimeKernel kernel = build_kernel(g, config.kernel);
      out.estimate.values.resize(plan.n_vertices(), plan.slots());
      for (int t = 1; t <= plan.slots(); ++t) {
        out.estimate.values.col(t - 1) =
            online_closedform_estimate(obs, plan, kernel, config.mu, t).values.col(t - 1);
      }
      out.estimate.estimator = "online-krr";
      out.estimate.mu = config.mu;
      out.estimate.kernel = kernel.descriptor();
      break;
    }
  }

  if (truth_for_nmse != nullptr) {
    out.nmse = nmse_series(*truth_for_nmse, out.estimate.values, plan);
  }
  out.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

RunOutput run_experiment(const TimeVaryingGraph& g, const Eigen::MatrixXd& truth,
                         const ExperimentConfig& config) {
  SamplingPlan plan = config.sampling.build(g.n_vertices(), g.slots(), config.seed);
  ObservationSet obs = sample_signal(truth, plan, config.noise_std, mix_seed(config.seed, 0xd1));
  return run_experiment(g, obs, plan, config, &truth);
}

std::vector<SweepRow> sweep(const TimeVaryingGraph& g, const Eigen::MatrixXd& truth,
                            const std::vector<ExperimentConfig>& cells, int threads,
                            const std::function<void(const SweepRow&)>& on_row) {
  std::vector<SweepRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex emit_mutex;

  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      SweepRow row;
      row.config_id = cells[i].config_id();
      row.seed = cells[i].seed;
      try {
        RunOutput out = run_experiment(g, truth, cells[i]);
        row.nmse = std::move(out.nmse);
        row.wall_ms = out.wall_ms;
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
      if (on_row) {
        std::lock_guard<std::mutex> lock(emit_mutex);
        on_row(row);
      }
      rows[i] = std::move(row);
    }
  };

  threads = std::max(1, threads);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return rows;
}

}  // namespace graphtime
