// End-to-end checks of the command-line surface: file formats, exit codes,
// determinism, and stream/batch agreement. Each test drives the real binary.
#include <doctest.h>

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "graphtime/io.hpp"
#include "graphtime/kkf.hpp"
#include "graphtime/sampling.hpp"
#include "graphtime/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace graphtime;

#ifndef GRAPHTIME_CLI_PATH
#error "GRAPHTIME_CLI_PATH must be defined by the build"
#endif

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CommandResult run_command(const std::string& args, const std::string& stdin_file = "") {
  const std::string redirect = stdin_file.empty() ? "" : (" < " + stdin_file);
  const std::string cmd = std::string(GRAPHTIME_CLI_PATH) + " " + args + redirect + " 2>&1";
  std::array<char, 4096> buf{};
  CommandResult result;
  std::FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) result.output += buf.data();
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh fixture directory with a small graph, smooth truth, and a config.
struct Fixture {
  fs::path dir;
  int n = 8;
  int t = 10;

  explicit Fixture(const std::string& name) {
    dir = fs::temp_directory_path() / ("graphtime_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);

    Graph g = random_geometric_graph(n, 3, 11);
    write_csv_matrix((dir / "adj.csv").string(), g.adjacency());
    TimeVaryingGraph tv(g, t);
    Eigen::MatrixXd truth = generate_smooth_signal(tv, SpectralMap::diffusion(2.0), 1.0, 17);
    write_csv_matrix((dir / "truth.csv").string(), truth);

    json cfg{{"graph", (dir / "adj.csv").string()},
             {"horizon", t},
             {"estimator", "kkf"},
             {"mu", 1e-4},
             {"kernel",
              {{"type", "timevarying"},
               {"space", {{"family", "diffusion"}, {"sigma2", 2.0}}},
               {"bridge", {{"type", "scaled-identity"}, {"s", 1.0}}}}},
             {"sampling", {{"type", "random-fixed"}, {"m", 4}}},
             {"truth_csv", (dir / "truth.csv").string()},
             {"noise_std", 0.05},
             {"seed", 3},
             {"output_dir", (dir / "out").string()}};
    std::ofstream(dir / "run.json") << cfg.dump(2);
  }

  std::string config() const { return (dir / "run.json").string(); }
  std::string out(const std::string& name) const { return (dir / "out" / name).string(); }
};

}  // namespace

TEST_CASE("reconstruct smoke run writes all outputs") {
  Fixture fx("smoke");
  CommandResult r = run_command("reconstruct --config " + fx.config());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(fx.out("estimate.csv")));
  CHECK(fs::exists(fx.out("nmse.csv")));
  CHECK(fs::exists(fx.out("manifest.json")));
  Eigen::MatrixXd est = read_csv_matrix(fx.out("estimate.csv"));
  CHECK(est.rows() == fx.n);
  CHECK(est.cols() == fx.t);
}

TEST_CASE("batch and kkf agree at the final slot through the CLI") {
  Fixture fx("agree");
  CHECK(run_command("reconstruct --config " + fx.config()).exit_code == 0);
  CHECK(run_command("reconstruct --config " + fx.config() + " --estimator batch --out " +
                    (fx.dir / "out_batch").string())
            .exit_code == 0);
  Eigen::MatrixXd kkf = read_csv_matrix(fx.out("estimate.csv"));
  Eigen::MatrixXd batch = read_csv_matrix((fx.dir / "out_batch" / "estimate.csv").string());
  CHECK((kkf.col(fx.t - 1) - batch.col(fx.t - 1)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("malformed adjacency exits 2 and names the entry") {
  Fixture fx("badadj");
  // Break symmetry at (0, 1).
  Eigen::MatrixXd w = read_csv_matrix((fx.dir / "adj.csv").string());
  w(0, 1) += 0.25;
  write_csv_matrix((fx.dir / "adj.csv").string(), w);
  CommandResult r = run_command("reconstruct --config " + fx.config());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("row 0, col 1") != std::string::npos);
}

TEST_CASE("missing config fields exit 2 naming the field") {
  Fixture fx("missing");
  json cfg = json::parse(read_file(fx.config()));
  cfg.erase("mu");
  std::ofstream(fx.dir / "nomu.json") << cfg.dump();
  CommandResult r = run_command("reconstruct --config " + (fx.dir / "nomu.json").string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("'mu'") != std::string::npos);
}

TEST_CASE("reconstruct is byte-identical across reruns and from its manifest") {
  Fixture fx("determinism");
  CHECK(run_command("reconstruct --config " + fx.config()).exit_code == 0);
  const std::string first = read_file(fx.out("estimate.csv"));
  const std::string first_nmse = read_file(fx.out("nmse.csv"));
  CHECK(run_command("reconstruct --config " + fx.config()).exit_code == 0);
  CHECK(read_file(fx.out("estimate.csv")) == first);
  CHECK(read_file(fx.out("nmse.csv")) == first_nmse);

  // The manifest embeds the resolved config and reproduces the same bytes.
  CHECK(run_command("reconstruct --config " + fx.out("manifest.json") + " --out " +
                    (fx.dir / "out2").string())
            .exit_code == 0);
  CHECK(read_file((fx.dir / "out2" / "estimate.csv").string()) == first);
}

TEST_CASE("stream with an empty input emits nothing and exits 0") {
  Fixture fx("streamempty");
  std::ofstream(fx.dir / "empty.jsonl").close();
  CommandResult r =
      run_command("stream --config " + fx.config(), (fx.dir / "empty.jsonl").string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.empty());
}

TEST_CASE("stream estimates match the in-process filter") {
  Fixture fx("streammatch");
  // Three observed slots with a gap at slot 2.
  Eigen::MatrixXd truth = read_csv_matrix((fx.dir / "truth.csv").string());
  json r1{{"t", 1}, {"indices", {0, 3, 5}},
          {"values", {truth(0, 0), truth(3, 0), truth(5, 0)}}};
  json r3{{"t", 3}, {"indices", {1, 4}}, {"values", {truth(1, 2), truth(4, 2)}}};
  json r4{{"t", 4}, {"indices", {6}}, {"values", {truth(6, 3)}}};
  std::ofstream(fx.dir / "records.jsonl") << r1.dump() << '\n'
                                          << r3.dump() << '\n'
                                          << r4.dump() << '\n';
  CommandResult r =
      run_command("stream --config " + fx.config(), (fx.dir / "records.jsonl").string());
  CHECK(r.exit_code == 0);

  // Same problem in-process.
  TimeVaryingGraph tv(Graph(fx.n, read_csv_matrix((fx.dir / "adj.csv").string()).eval()), fx.t);
  std::vector<std::vector<int>> slots(fx.t);
  slots[0] = {0, 3, 5};
  slots[2] = {1, 4};
  slots[3] = {6};
  SamplingPlan plan(fx.n, slots);
  ObservationSet obs;
  obs.values.resize(fx.t, Eigen::VectorXd(0));
  obs.values[0] = Eigen::Vector3d(truth(0, 0), truth(3, 0), truth(5, 0));
  obs.values[2] = Eigen::Vector2d(truth(1, 2), truth(4, 2));
  obs.values[3] = Eigen::VectorXd::Constant(1, truth(6, 3));

  KernelSpec spec;
  spec.space = SpectralMap::diffusion(2.0);
  spec.bridge_scale = 1.0;
  KkfResult expected = run_kkf(build_kernel_blocks(tv, spec), obs, plan, 1e-4);

  std::istringstream lines(r.output);
  std::string line;
  int checked = 0;
  while (std::getline(lines, line)) {
    json rec = json::parse(line);
    REQUIRE(!rec.contains("error"));
    const int t = rec.at("t").get<int>();
    auto est = rec.at("estimate").get<std::vector<double>>();
    for (int v = 0; v < fx.n; ++v) {
      CHECK(est[v] == doctest::Approx(expected.estimate.values(v, t - 1)).epsilon(1e-12));
    }
    ++checked;
  }
  CHECK(checked == 4);  // slots 1..4, including the gap slot
}

TEST_CASE("stream reports protocol errors and keeps going") {
  Fixture fx("streamerr");
  std::ofstream(fx.dir / "records.jsonl")
      << R"({"t":2,"indices":[0],"values":[0.5]})" << '\n'
      << R"({"t":1,"indices":[0],"values":[0.5]})" << '\n'
      << "this is not json" << '\n'
      << R"({"t":3,"indices":[0,0],"values":[0.5,0.5]})" << '\n'
      << R"({"t":99,"indices":[0],"values":[0.5]})" << '\n'
      << R"({"t":4,"indices":[7],"values":[0.25]})" << '\n';
  CommandResult r =
      run_command("stream --config " + fx.config(), (fx.dir / "records.jsonl").string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("non-monotone slot") != std::string::npos);
  CHECK(r.output.find("malformed record") != std::string::npos);
  CHECK(r.output.find("invalid vertex indices") != std::string::npos);
  CHECK(r.output.find("beyond declared horizon") != std::string::npos);
  // Records at t=2 and t=4 still produced estimates (plus gap slots 1 and 3).
  int estimates = 0;
  std::istringstream lines(r.output);
  std::string line;
  while (std::getline(lines, line)) {
    if (json::parse(line).contains("estimate")) ++estimates;
  }
  CHECK(estimates == 4);
}

TEST_CASE("steady-state stream stays close to the exact filter") {
  Fixture fx("steady");
  std::ofstream records(fx.dir / "records.jsonl");
  Eigen::MatrixXd truth = read_csv_matrix((fx.dir / "truth.csv").string());
  for (int t = 1; t <= fx.t; ++t) {
    json rec{{"t", t}, {"indices", {0, 2, 4, 6}},
             {"values", {truth(0, t - 1), truth(2, t - 1), truth(4, t - 1), truth(6, t - 1)}}};
    records << rec.dump() << '\n';
  }
  records.close();
  CommandResult exact =
      run_command("stream --config " + fx.config(), (fx.dir / "records.jsonl").string());
  CommandResult steady = run_command("stream --config " + fx.config() + " --steady-state",
                                     (fx.dir / "records.jsonl").string());
  CHECK(exact.exit_code == 0);
  CHECK(steady.exit_code == 0);

  std::istringstream e_lines(exact.output), s_lines(steady.output);
  std::string e_line, s_line;
  double worst = 0.0;
  while (std::getline(e_lines, e_line) && std::getline(s_lines, s_line)) {
    auto e = json::parse(e_line).at("estimate").get<std::vector<double>>();
    auto s = json::parse(s_line).at("estimate").get<std::vector<double>>();
    for (std::size_t i = 0; i < e.size(); ++i) worst = std::max(worst, std::abs(e[i] - s[i]));
  }
  // The fixed-point schedule deviates near the terminal boundary only.
  CHECK(worst < 0.2);
}

TEST_CASE("sweep writes a manifest and a row-complete CSV") {
  Fixture fx("sweep");
  json cfg{{"synthetic", {{"n", 10}, {"k_neighbors", 3}, {"graph_seed", 2}}},
           {"horizon", 8},
           {"truth_synthetic",
            {{"space", {{"family", "diffusion"}, {"sigma2", 1.5}}}, {"s", 1.0}, {"seed", 4}}},
           {"estimator", "kkf"},
           {"mu", 1e-3},
           {"kernel",
            {{"type", "timevarying"},
             {"space", {{"family", "diffusion"}, {"sigma2", 1.5}}},
             {"bridge", {{"type", "scaled-identity"}, {"s", 1.0}}}}},
           {"sampling", {{"type", "random-fixed"}, {"m", 4}}},
           {"noise_std", 0.05},
           {"seeds", {1, 2}}};
  std::ofstream(fx.dir / "sweep.json") << cfg.dump();
  CommandResult r = run_command("sweep --config " + (fx.dir / "sweep.json").string() + " --out " +
                                (fx.dir / "sweep_out").string() + " --threads 2");
  CHECK(r.exit_code == 0);

  const std::string csv = read_file((fx.dir / "sweep_out" / "results.csv").string());
  // Header + 2 seeds x 8 slots.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 8);
  CHECK(csv.rfind("config_id,seed,t,nmse,wall_ms", 0) == 0);
  json manifest = json::parse(read_file((fx.dir / "sweep_out" / "manifest.json").string()));
  CHECK(manifest.at("cells").size() == 1);
}

TEST_CASE("single-cell sweep produces one row per slot") {
  Fixture fx("sweepcell");
  json cfg{{"graph", (fx.dir / "adj.csv").string()},
           {"horizon", fx.t},
           {"truth_csv", (fx.dir / "truth.csv").string()},
           {"estimator", "instantaneous"},
           {"mu", 1e-3},
           {"kernel",
            {{"type", "timevarying"}, {"space", {{"family", "diffusion"}, {"sigma2", 2.0}}}}},
           {"sampling", {{"type", "random-fixed"}, {"m", 4}}},
           {"seeds", {9}}};
  std::ofstream(fx.dir / "sweep1.json") << cfg.dump();
  CommandResult r = run_command("sweep --config " + (fx.dir / "sweep1.json").string() + " --out " +
                                (fx.dir / "cell_out").string());
  CHECK(r.exit_code == 0);
  const std::string csv = read_file((fx.dir / "cell_out" / "results.csv").string());
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + fx.t);
}

namespace {

// Peak RSS (KiB) of one CLI invocation, via wait4 on a forked child.
long child_peak_rss_kb(const std::vector<std::string>& args, const std::string& stdin_file) {
  const pid_t pid = fork();
  REQUIRE(pid >= 0);
  if (pid == 0) {
    if (!stdin_file.empty()) {
      std::FILE* in = std::freopen(stdin_file.c_str(), "r", stdin);
      if (!in) _exit(127);
    }
    std::FILE* out = std::freopen("/dev/null", "w", stdout);
    if (!out) _exit(127);
    std::vector<char*> argv;
    argv.push_back(const_cast<char*>(GRAPHTIME_CLI_PATH));
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execv(GRAPHTIME_CLI_PATH, argv.data());
    _exit(127);
  }
  int status = 0;
  struct rusage usage{};
  REQUIRE(wait4(pid, &status, 0, &usage) == pid);
  REQUIRE(WIFEXITED(status));
  REQUIRE(WEXITSTATUS(status) == 0);
  return usage.ru_maxrss;
}

}  // namespace

TEST_CASE("steady-state streaming memory is bounded in the stream length") {
  // N = 20 fixture; peak RSS after 10,000 slots must stay within twice the
  // peak after 100 slots.
  const fs::path dir = fs::temp_directory_path() / "graphtime_test_streammem";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const int n = 20;
  Graph g = random_geometric_graph(n, 4, 55);
  write_csv_matrix((dir / "adj.csv").string(), g.adjacency());
  json cfg{{"graph", (dir / "adj.csv").string()},
           {"horizon", 2},
           {"estimator", "kkf"},
           {"mu", 1e-4},
           {"kernel",
            {{"type", "timevarying"},
             {"space", {{"family", "diffusion"}, {"sigma2", 1.5}}},
             {"bridge", {{"type", "scaled-identity"}, {"s", 0.5}}}}}};
  std::ofstream(dir / "stream.json") << cfg.dump();

  auto write_records = [&](const fs::path& path, int slots) {
    std::ofstream out(path);
    for (int t = 1; t <= slots; ++t) {
      out << R"({"t":)" << t << R"(,"indices":[0,5,10],"values":[0.1,-0.2,0.3]})" << '\n';
    }
  };
  write_records(dir / "short.jsonl", 100);
  write_records(dir / "long.jsonl", 10000);

  const std::vector<std::string> args = {"stream", "--config", (dir / "stream.json").string(),
                                         "--steady-state"};
  const long rss_short = child_peak_rss_kb(args, (dir / "short.jsonl").string());
  const long rss_long = child_peak_rss_kb(args, (dir / "long.jsonl").string());
  CHECK(rss_long <= 2 * rss_short);
}

TEST_CASE("bridge matrices can be loaded from CSV") {
  Fixture fx("bridgematrix");
  // Diagonal bridge with varying per-vertex coupling.
  Eigen::VectorXd d(fx.n);
  for (int i = 0; i < fx.n; ++i) d(i) = 0.1 + 0.05 * i;
  write_csv_matrix((fx.dir / "bridge.csv").string(), Eigen::MatrixXd(d.asDiagonal()));
  json cfg = json::parse(read_file(fx.config()));
  cfg["kernel"]["bridge"] = {{"type", "matrix"}, {"path", (fx.dir / "bridge.csv").string()}};
  std::ofstream(fx.dir / "mat.json") << cfg.dump();
  CommandResult r = run_command("reconstruct --config " + (fx.dir / "mat.json").string() +
                                " --out " + (fx.dir / "out_mat").string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists((fx.dir / "out_mat" / "estimate.csv").string()));
}

TEST_CASE("sweep grids expand over coupling scales and estimators") {
  Fixture fx("sweepgrid");
  json cfg{{"graph", (fx.dir / "adj.csv").string()},
           {"horizon", fx.t},
           {"truth_csv", (fx.dir / "truth.csv").string()},
           {"estimator", "kkf"},
           {"mu", 1e-3},
           {"kernel",
            {{"type", "timevarying"},
             {"space", {{"family", "diffusion"}, {"sigma2", 2.0}}},
             {"bridge", {{"type", "scaled-identity"}, {"s", 1.0}}}}},
           {"sampling", {{"type", "random-fixed"}, {"m", 4}}},
           {"noise_std", 0.05},
           {"grid", {{"s", {0.01, 1.0, 100.0}}, {"estimator", {"kkf", "instantaneous"}}}},
           {"seeds", {1, 2}}};
  std::ofstream(fx.dir / "grid.json") << cfg.dump();
  CommandResult r = run_command("sweep --config " + (fx.dir / "grid.json").string() + " --out " +
                                (fx.dir / "grid_out").string() + " --threads 2");
  CHECK(r.exit_code == 0);
  const std::string csv = read_file((fx.dir / "grid_out" / "results.csv").string());
  // Header + 3 s-values x 2 estimators x 2 seeds x t slots.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 2 * 2 * fx.t);
  json manifest = json::parse(read_file((fx.dir / "grid_out" / "manifest.json").string()));
  CHECK(manifest.at("cells").size() == 6);
}

TEST_CASE("validate accepts good inputs and rejects broken graphs") {
  Fixture fx("validate");
  CommandResult good = run_command("validate --config " + fx.config());
  CHECK(good.exit_code == 0);
  CHECK(good.output.find("kernel ok") != std::string::npos);

  std::ofstream(fx.dir / "bad.csv") << "0,1\n0.5,0\n";
  CommandResult bad = run_command("validate --graph " + (fx.dir / "bad.csv").string() +
                                  " --horizon 3");
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("not symmetric") != std::string::npos);
}
