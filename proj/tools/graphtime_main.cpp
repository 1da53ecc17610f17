// graphtime: reconstruction of time-evolving signals on graphs from partial
// noisy samples. Subcommands: reconstruct, stream, sweep, validate.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "graphtime/digest.hpp"
#include "graphtime/errors.hpp"
#include "graphtime/io.hpp"
#include "graphtime/kkf.hpp"
#include "graphtime/sampling.hpp"
#include "graphtime/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace graphtime;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const std::exception& e) {
    throw ConfigError("config '" + path + "': invalid JSON: " + std::string(e.what()));
  }
}

// A manifest embeds the resolved config under "config"; accept either form.
json unwrap_config(json j) {
  if (j.contains("config") && j.at("config").is_object()) return j.at("config");
  return j;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct LoadedRun {
  json resolved;                       // full config with defaults materialized
  TimeVaryingGraph graph;
  ExperimentConfig experiment;
  SamplingPlan plan;
  ObservationSet observations;
  std::optional<Eigen::MatrixXd> truth;
  std::map<std::string, std::string> input_digests;
};

// Resolves a reconstruct config: graph, kernel, sampling, and either
// recorded observations or samples synthesized from the truth.
LoadedRun load_run(const json& cfg) {
  if (!cfg.contains("graph")) throw ConfigError("config: missing field 'graph'");
  const std::string graph_path = cfg.at("graph").get<std::string>();
  const int horizon = cfg.value("horizon", 0);

  std::map<std::string, std::string> digests;
  TimeVaryingGraph graph = read_graph(graph_path, horizon);
  if (!fs::is_directory(graph_path)) digests[graph_path] = file_digest(graph_path);

  ExperimentConfig experiment = experiment_config_from_json(cfg);

  std::optional<Eigen::MatrixXd> truth;
  if (cfg.contains("truth_csv")) {
    const std::string path = cfg.at("truth_csv").get<std::string>();
    truth = read_csv_matrix(path);
    digests[path] = file_digest(path);
    if (truth->rows() != graph.n_vertices() || truth->cols() != graph.slots()) {
      std::ostringstream msg;
      msg << "config: field 'truth_csv' has shape " << truth->rows() << "x" << truth->cols()
          << ", expected " << graph.n_vertices() << "x" << graph.slots();
      throw ConfigError(msg.str());
    }
  }

  if (cfg.contains("observations")) {
    const std::string path = cfg.at("observations").get<std::string>();
    ObservationRecords records =
        read_observation_records(path, graph.n_vertices(), graph.slots());
    digests[path] = file_digest(path);
    json resolved = cfg;
    resolved["horizon"] = graph.slots();
    return LoadedRun{std::move(resolved),  std::move(graph),
                     std::move(experiment), std::move(records.plan),
                     std::move(records.observations), std::move(truth),
                     std::move(digests)};
  }

  if (!truth) {
    throw ConfigError("config: needs either 'observations' or 'truth_csv' to sample from");
  }
  SamplingPlan plan =
      experiment.sampling.build(graph.n_vertices(), graph.slots(), experiment.seed);
  ObservationSet obs = sample_signal(*truth, plan, experiment.noise_std,
                                     experiment.seed ^ 0x9e3779b97f4a7c15ull);

  json resolved = experiment_config_to_json(experiment);
  resolved["graph"] = graph_path;
  resolved["horizon"] = graph.slots();
  if (cfg.contains("truth_csv")) resolved["truth_csv"] = cfg.at("truth_csv");
  return LoadedRun{std::move(resolved), std::move(graph),     std::move(experiment),
                   std::move(plan),     std::move(obs),        std::move(truth),
                   std::move(digests)};
}

void write_manifest(const std::string& path, const std::string& command, const LoadedRun& run) {
  json manifest{{"version", kVersion},
                {"command", command},
                {"created_utc", utc_timestamp()},
                {"config", run.resolved},
                {"config_id", run.experiment.config_id()},
                {"seed", run.experiment.seed},
                {"inputs", json::object()}};
  for (const auto& [file, digest] : run.input_digests) manifest["inputs"][file] = digest;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << manifest.dump(2) << '\n';
}

int cmd_reconstruct(const std::string& config_path, const std::string& estimator_override,
                    double mu_override, const std::string& out_override) {
  json cfg = unwrap_config(load_json_file(config_path));
  if (!estimator_override.empty()) cfg["estimator"] = estimator_override;
  if (mu_override > 0.0) cfg["mu"] = mu_override;
  if (!out_override.empty()) cfg["output_dir"] = out_override;

  LoadedRun run = load_run(cfg);
  const std::string out_dir = cfg.value("output_dir", std::string("."));
  fs::create_directories(out_dir);

  RunOutput output = run_experiment(run.graph, run.observations, run.plan, run.experiment,
                                    run.truth ? &*run.truth : nullptr);

  write_csv_matrix(out_dir + "/estimate.csv", output.estimate.values);
  if (run.truth) {
    std::ofstream nmse(out_dir + "/nmse.csv");
    if (!nmse) throw ConfigError("cannot write '" + out_dir + "/nmse.csv'");
    for (std::size_t t = 0; t < output.nmse.values.size(); ++t) {
      nmse << (t + 1) << ','
           << (output.nmse.values[t] ? format_double(*output.nmse.values[t]) : "undefined")
           << '\n';
    }
  }
  write_manifest(out_dir + "/manifest.json", "reconstruct", run);

  std::cout << "estimator=" << output.estimate.estimator << " slots=" << run.graph.slots()
            << " wall_ms=" << format_double(output.wall_ms);
  if (run.truth && output.nmse.values.back()) {
    std::cout << " nmse=" << format_double(*output.nmse.values.back());
  }
  std::cout << "\nwrote " << out_dir << "/estimate.csv\n";
  return 0;
}

int cmd_stream(const std::string& config_path, bool steady_state) {
  json cfg = unwrap_config(load_json_file(config_path));
  if (!cfg.contains("graph")) throw ConfigError("config: missing field 'graph'");
  TimeVaryingGraph graph = read_graph(cfg.at("graph").get<std::string>(), cfg.value("horizon", 0));
  ExperimentConfig experiment = experiment_config_from_json(cfg);
  const int n = graph.n_vertices();
  const int horizon = graph.slots();
  const double fixed_noise = cfg.value("noise_scale", 0.0);

  if (experiment.kernel.type != "timevarying") {
    // Kronecker kernels must expose a tridiagonal inverse to stream.
    SpaceTimeKernel kernel = build_kernel(graph, experiment.kernel);
    if (!kernel.tridiagonal_inverse()) {
      throw ConfigError("stream: the configured kernel has inverse bandwidth " +
                        std::to_string(kernel.block_bandwidth()) +
                        "; streaming needs a block-tridiagonal inverse");
    }
  }

  KkfSchedule schedule =
      [&]() {
        if (!steady_state) {
          if (experiment.kernel.type == "timevarying") {
            return schedule_from_inverse_blocks(build_kernel_blocks(graph, experiment.kernel));
          }
          return schedule_from_inverse_kernel(build_kernel(graph, experiment.kernel));
        }
        if (!graph.is_time_invariant()) {
          throw ConfigError("stream: steady-state mode needs a time-invariant graph");
        }
        BlockTridiagonal blocks = build_kernel_blocks(graph, experiment.kernel);
        const int mid = blocks.slots() / 2;
        // Two-slot schedule reused forever: slot 0 for the opening step,
        // slot 1 for every later step.
        return steady_state_schedule(blocks.diag[std::max(mid, 1 % blocks.slots())],
                                     blocks.sub.empty() ? Eigen::MatrixXd::Zero(n, n)
                                                        : blocks.sub[0],
                                     2);
      }();

  KkfState state = KkfState::initial(n);
  int next_slot = 1;  // 1-based slot about to be processed
  std::string line;

  auto process_slot = [&](const Eigen::VectorXd& y, const std::vector<int>& indices) {
    const double v = fixed_noise > 0.0
                         ? fixed_noise
                         : experiment.mu * std::max<std::size_t>(indices.size(), 1);
    if (steady_state && state.slot >= 1) state.slot = 1;
    state = kkf_step(state, schedule, y, indices, v);
    json record{{"t", next_slot}, {"estimate", std::vector<double>(
                                      state.filtered.data(),
                                      state.filtered.data() + state.filtered.size())}};
    std::cout << record.dump() << '\n' << std::flush;
    ++next_slot;
  };

  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const std::exception&) {
      std::cout << json{{"error", "malformed record"}}.dump() << '\n' << std::flush;
      continue;
    }
    try {
      const int t = record.at("t").get<int>();
      if (t < next_slot) {
        std::cout << json{{"error", "non-monotone slot"}, {"t", t}}.dump() << '\n' << std::flush;
        continue;
      }
      if (!steady_state && t > horizon) {
        std::cout << json{{"error", "slot beyond declared horizon"}, {"t", t}}.dump() << '\n'
                  << std::flush;
        continue;
      }
      auto indices = record.at("indices").get<std::vector<int>>();
      auto values = record.at("values").get<std::vector<double>>();
      if (indices.size() != values.size()) {
        std::cout << json{{"error", "indices/values length mismatch"}, {"t", t}}.dump() << '\n'
                  << std::flush;
        continue;
      }
      // Slots without records are processed as empty (prediction only).
      while (next_slot < t) process_slot(Eigen::VectorXd(0), {});
      Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
          values.data(), static_cast<Eigen::Index>(values.size()));
      // Index validation happens inside the step via the plan-free path;
      // check here so a bad record does not kill the stream.
      bool ok = true;
      int prev = -1;
      for (int idx : indices) {
        if (idx < 0 || idx >= n || idx <= prev) {
          ok = false;
          break;
        }
        prev = idx;
      }
      if (!ok) {
        std::cout << json{{"error", "invalid vertex indices"}, {"t", t}}.dump() << '\n'
                  << std::flush;
        continue;
      }
      process_slot(y, indices);
    } catch (const json::exception&) {
      std::cout << json{{"error", "malformed record"}}.dump() << '\n' << std::flush;
    }
  }
  return 0;
}

// Expands the sweep grid into one ExperimentConfig per cell and seed.
std::vector<ExperimentConfig> expand_grid(const json& cfg, const ExperimentConfig& base) {
  std::vector<ExperimentConfig> cells{base};
  if (!cfg.contains("grid")) {
    // seeds only
  } else {
    const json& grid = cfg.at("grid");
    auto apply_axis = [&cells](const json& values,
                               const std::function<void(ExperimentConfig&, const json&)>& set) {
      std::vector<ExperimentConfig> expanded;
      expanded.reserve(cells.size() * values.size());
      for (const auto& cell : cells) {
        for (const auto& v : values) {
          ExperimentConfig next = cell;
          set(next, v);
          expanded.push_back(std::move(next));
        }
      }
      cells = std::move(expanded);
    };
    if (grid.contains("s")) {
      apply_axis(grid.at("s"), [](ExperimentConfig& c, const json& v) {
        c.kernel.bridge_scale = v.get<double>();
      });
    }
    if (grid.contains("m")) {
      apply_axis(grid.at("m"),
                 [](ExperimentConfig& c, const json& v) { c.sampling.m = v.get<int>(); });
    }
    if (grid.contains("mu")) {
      apply_axis(grid.at("mu"),
                 [](ExperimentConfig& c, const json& v) { c.mu = v.get<double>(); });
    }
    if (grid.contains("estimator")) {
      apply_axis(grid.at("estimator"), [](ExperimentConfig& c, const json& v) {
        c.estimator = estimator_from_string(v.get<std::string>());
      });
    }
  }

  std::vector<std::uint64_t> seeds{base.seed};
  if (cfg.contains("seeds")) seeds = cfg.at("seeds").get<std::vector<std::uint64_t>>();
  std::vector<ExperimentConfig> result;
  result.reserve(cells.size() * seeds.size());
  for (const auto& cell : cells) {
    for (std::uint64_t seed : seeds) {
      ExperimentConfig next = cell;
      next.seed = seed;
      result.push_back(std::move(next));
    }
  }
  return result;
}

int cmd_sweep(const std::string& config_path, const std::string& out_override, int threads) {
  json cfg = unwrap_config(load_json_file(config_path));
  const std::string out_dir =
      !out_override.empty() ? out_override : cfg.value("output_dir", std::string("."));
  fs::create_directories(out_dir);

  // Graph: from file, or synthesized.
  TimeVaryingGraph graph = [&]() {
    if (cfg.contains("graph")) {
      return read_graph(cfg.at("graph").get<std::string>(), cfg.value("horizon", 0));
    }
    if (!cfg.contains("synthetic")) {
      throw ConfigError("sweep config: needs 'graph' or 'synthetic'");
    }
    const json& syn = cfg.at("synthetic");
    if (!syn.contains("n")) throw ConfigError("sweep config: 'synthetic' needs field 'n'");
    Graph g = random_geometric_graph(syn.at("n").get<int>(), syn.value("k_neighbors", 5),
                                     syn.value("graph_seed", 1));
    const int horizon = cfg.value("horizon", 0);
    if (horizon < 1) throw ConfigError("sweep config: synthetic graphs need field 'horizon'");
    return TimeVaryingGraph(g, horizon);
  }();

  // Truth: from file, or drawn from a calibrated smooth-signal model.
  Eigen::MatrixXd truth = [&]() {
    if (cfg.contains("truth_csv")) {
      return read_csv_matrix(cfg.at("truth_csv").get<std::string>());
    }
    if (!cfg.contains("truth_synthetic")) {
      throw ConfigError("sweep config: needs 'truth_csv' or 'truth_synthetic'");
    }
    const json& syn = cfg.at("truth_synthetic");
    SpectralMap map = syn.contains("space") ? spectral_map_from_json(syn.at("space"))
                                            : SpectralMap::diffusion(1.0);
    return generate_smooth_signal(graph, map, syn.value("s", 1.0),
                                  syn.value("seed", static_cast<std::uint64_t>(1)));
  }();
  if (truth.rows() != graph.n_vertices() || truth.cols() != graph.slots()) {
    throw ConfigError("sweep config: truth shape does not match the graph");
  }

  ExperimentConfig base = experiment_config_from_json(
      cfg.contains("base") ? cfg.at("base") : cfg);
  std::vector<ExperimentConfig> cells = expand_grid(cfg, base);

  // Manifest first: config_id -> full config, plus the sweep inputs.
  json manifest{{"version", kVersion},
                {"command", "sweep"},
                {"created_utc", utc_timestamp()},
                {"cells", json::object()}};
  for (const auto& cell : cells) {
    manifest["cells"][cell.config_id()] = experiment_config_to_json(cell);
  }
  {
    std::ofstream mf(out_dir + "/manifest.json");
    if (!mf) throw ConfigError("cannot write '" + out_dir + "/manifest.json'");
    mf << manifest.dump(2) << '\n';
  }

  std::FILE* results = std::fopen((out_dir + "/results.csv").c_str(), "w");
  if (!results) throw ConfigError("cannot write '" + out_dir + "/results.csv'");
  std::fputs("config_id,seed,t,nmse,wall_ms\n", results);
  std::fflush(results);

  int failures = 0;
  auto on_row = [&](const SweepRow& row) {
    if (row.failed) {
      ++failures;
      std::cerr << "sweep: cell " << row.config_id << " seed " << row.seed
                << " failed: " << row.error << '\n';
      return;
    }
    // One buffered write per run keeps partially written files line-valid.
    std::string block;
    for (std::size_t t = 0; t < row.nmse.values.size(); ++t) {
      block += row.config_id;
      block += ',';
      block += std::to_string(row.seed);
      block += ',';
      block += std::to_string(t + 1);
      block += ',';
      block += row.nmse.values[t] ? format_double(*row.nmse.values[t]) : "undefined";
      block += ',';
      block += format_double(row.wall_ms);
      block += '\n';
    }
    std::fwrite(block.data(), 1, block.size(), results);
    std::fflush(results);
  };

  std::vector<SweepRow> rows = sweep(graph, truth, cells, threads, on_row);
  std::fclose(results);

  std::cout << "sweep: " << rows.size() << " runs, " << failures << " failed, results in "
            << out_dir << "/results.csv\n";
  return 0;
}

int cmd_validate(const std::string& config_path, const std::string& graph_path, int horizon) {
  if (!graph_path.empty()) {
    TimeVaryingGraph graph = read_graph(graph_path, horizon);
    std::cout << "graph ok: n=" << graph.n_vertices() << " slots=" << graph.slots()
              << (graph.is_time_invariant() ? " time-invariant" : " time-varying") << '\n';
    return 0;
  }
  json cfg = unwrap_config(load_json_file(config_path));
  if (!cfg.contains("graph")) throw ConfigError("config: missing field 'graph'");
  TimeVaryingGraph graph = read_graph(cfg.at("graph").get<std::string>(), cfg.value("horizon", 0));
  ExperimentConfig experiment = experiment_config_from_json(cfg);
  std::cout << "graph ok: n=" << graph.n_vertices() << " slots=" << graph.slots()
            << (graph.is_time_invariant() ? " time-invariant" : " time-varying") << '\n';

  SpaceTimeKernel kernel = build_kernel(graph, experiment.kernel);
  std::cout << "kernel ok: " << kernel.descriptor() << " bandwidth=" << kernel.block_bandwidth()
            << (kernel.tridiagonal_inverse() ? " (tridiagonal inverse)" : "") << '\n';
  if (kernel.dim() <= 200) {
    const double min_eig = kernel.min_eigenvalue();
    std::cout << "kernel min eigenvalue: " << format_double(min_eig) << '\n';
    if (min_eig <= 0.0) throw NumericalError("kernel is not positive definite");
  }
  SamplingPlan plan = experiment.sampling.build(graph.n_vertices(), graph.slots(),
                                                experiment.seed);
  std::cout << "sampling ok: " << plan.total_samples() << " samples over " << plan.slots()
            << " slots\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel-based reconstruction of time-evolving signals on graphs"};
  app.require_subcommand(1);

  std::string config_path, estimator_override, out_override, graph_path;
  double mu_override = 0.0;
  bool steady_state = false;
  int threads = 0;
  int horizon = 0;

  auto* reconstruct = app.add_subcommand("reconstruct", "Batch or online reconstruction");
  reconstruct->add_option("--config", config_path, "Run config or manifest JSON")->required();
  reconstruct->add_option("--estimator", estimator_override,
                          "Override: batch | instantaneous | kkf | online-closedform");
  reconstruct->add_option("--mu", mu_override, "Override the regularization weight");
  reconstruct->add_option("--out", out_override, "Output directory");

  auto* stream = app.add_subcommand("stream", "Filter observation records from stdin");
  stream->add_option("--config", config_path, "Stream config JSON")->required();
  stream->add_flag("--steady-state", steady_state,
                   "Experimental: fixed-point schedule, unbounded horizon");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a config grid and tabulate NMSE");
  sweep_cmd->add_option("--config", config_path, "Sweep config JSON")->required();
  sweep_cmd->add_option("--out", out_override, "Output directory");
  sweep_cmd->add_option("--threads", threads, "Worker pool size (default GRAPHTIME_THREADS or 1)");

  auto* validate = app.add_subcommand("validate", "Check graph/kernel/sampling inputs");
  validate->add_option("--config", config_path, "Run config JSON");
  validate->add_option("--graph", graph_path, "Graph file or directory");
  validate->add_option("--horizon", horizon, "Slot count for time-invariant graphs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*reconstruct) {
      return cmd_reconstruct(config_path, estimator_override, mu_override, out_override);
    }
    if (*stream) return cmd_stream(config_path, steady_state);
    if (*sweep_cmd) {
      if (threads <= 0) {
        const char* env = std::getenv("GRAPHTIME_THREADS");
        threads = env ? std::max(1, std::atoi(env)) : 1;
      }
      return cmd_sweep(config_path, out_override, threads);
    }
    if (*validate) {
      if (config_path.empty() && graph_path.empty()) {
        throw ConfigError("validate: needs --config or --graph");
      }
      return cmd_validate(config_path, graph_path, horizon);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
