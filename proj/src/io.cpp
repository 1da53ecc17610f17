#include "graphtime/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "graphtime/digest.hpp"
#include "graphtime/errors.hpp"

namespace graphtime {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return std::string(buf);
}

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("'" + path + "' line " + std::to_string(line_no) +
                          ": cannot parse '" + cell + "' as a number");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError("'" + path + "' line " + std::to_string(line_no) +
                        ": ragged row (expected " + std::to_string(rows.front().size()) +
                        " columns)");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("'" + path + "' is empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

Graph read_adjacency_csv(const std::string& path) {
  Eigen::MatrixXd w = read_csv_matrix(path);
  const int n = static_cast<int>(w.rows());
  try {
    return Graph(n, std::move(w));
  } catch (const ConfigError& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

TimeVaryingGraph read_graph_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("'" + path + "': invalid JSON: " + e.what());
  }
  if (!j.contains("n") || !j.contains("slots")) {
    throw ConfigError("'" + path + "': graph JSON needs fields 'n' and 'slots'");
  }
  const int n = j.at("n").get<int>();
  std::vector<Eigen::MatrixXd> slots;
  for (const auto& slot : j.at("slots")) {
    Eigen::MatrixXd w(n, n);
    if (static_cast<int>(slot.size()) != n) {
      throw ConfigError("'" + path + "': slot row count does not match 'n'");
    }
    for (int r = 0; r < n; ++r) {
      const auto& row = slot.at(r);
      if (static_cast<int>(row.size()) != n) {
        throw ConfigError("'" + path + "': slot column count does not match 'n'");
      }
      for (int c = 0; c < n; ++c) w(r, c) = row.at(c).get<double>();
    }
    slots.push_back(std::move(w));
  }
  return TimeVaryingGraph(n, std::move(slots));
}

TimeVaryingGraph read_graph(const std::string& path, int horizon) {
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    if (files.empty()) throw ConfigError("graph: no .csv slot files in '" + path + "'");
    std::sort(files.begin(), files.end());
    std::vector<Eigen::MatrixXd> slots;
    slots.reserve(files.size());
    for (const auto& f : files) slots.push_back(read_csv_matrix(f.string()));
    const int n = static_cast<int>(slots.front().rows());
    return TimeVaryingGraph(n, std::move(slots));
  }
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    return read_graph_json(path);
  }
  Graph g = read_adjacency_csv(path);
  if (horizon < 1) {
    throw ConfigError("graph: a time-invariant adjacency CSV needs a positive 'horizon'");
  }
  return TimeVaryingGraph(g, horizon);
}

SamplingPlan read_plan_json(const std::string& path, int n_vertices) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("'" + path + "': invalid JSON: " + e.what());
  }
  if (!j.contains("slots")) throw ConfigError("'" + path + "': plan JSON needs field 'slots'");
  std::vector<std::vector<int>> slots;
  for (const auto& s : j.at("slots")) slots.push_back(s.get<std::vector<int>>());
  return SamplingPlan(n_vertices, std::move(slots));
}

void write_plan_json(const std::string& path, const SamplingPlan& plan) {
  json slots = json::array();
  for (int t = 0; t < plan.slots(); ++t) slots.push_back(plan.at(t));
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << json{{"slots", slots}}.dump(2) << '\n';
}

ObservationRecords read_observation_records(const std::string& path, int n_vertices,
                                            int horizon) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");

  std::vector<std::vector<int>> slots(horizon);
  std::vector<Eigen::VectorXd> values(horizon, Eigen::VectorXd(0));
  std::string line;
  int last_t = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw ConfigError("'" + path + "' line " + std::to_string(line_no) + ": invalid JSON");
    }
    const int t = j.at("t").get<int>();
    if (t <= last_t) {
      throw ConfigError("'" + path + "' line " + std::to_string(line_no) +
                        ": non-monotone slot " + std::to_string(t));
    }
    if (t > horizon) {
      throw ConfigError("'" + path + "' line " + std::to_string(line_no) + ": slot " +
                        std::to_string(t) + " beyond horizon " + std::to_string(horizon));
    }
    last_t = t;
    auto indices = j.at("indices").get<std::vector<int>>();
    auto vals = j.at("values").get<std::vector<double>>();
    if (indices.size() != vals.size()) {
      throw ConfigError("'" + path + "' line " + std::to_string(line_no) +
                        ": indices/values length mismatch");
    }
    slots[t - 1] = std::move(indices);
    values[t - 1] = Eigen::Map<const Eigen::VectorXd>(vals.data(),
                                                      static_cast<Eigen::Index>(vals.size()));
  }

  ObservationRecords rec{SamplingPlan(n_vertices, std::move(slots)), {}};
  rec.observations.values = std::move(values);
  return rec;
}

SpectralMap spectral_map_from_json(const json& j) {
  if (!j.contains("family")) throw ConfigError("kernel map: missing field 'family'");
  const std::string family = j.at("family").get<std::string>();
  auto num = [&](const char* field) {
    if (!j.contains(field)) {
      throw ConfigError("kernel map '" + family + "': missing field '" + field + "'");
    }
    return j.at(field).get<double>();
  };
  if (family == "diffusion") return SpectralMap::diffusion(num("sigma2"));
  if (family == "p-step-random-walk") {
    return SpectralMap::p_step_random_walk(num("a"), static_cast<int>(num("p")));
  }
  if (family == "regularized-laplacian") {
    return SpectralMap::regularized_laplacian(j.value("sigma2", 1.0));
  }
  if (family == "bandlimited") {
    return SpectralMap::bandlimited(j.value("beta", 100.0), num("lambda_max"));
  }
  if (family == "shifted-identity") return SpectralMap::shifted_identity(num("epsilon"));
  throw ConfigError("kernel map: unknown family '" + family + "'");
}

json spectral_map_to_json(const SpectralMap& map) {
  switch (map.family()) {
    case SpectralFamily::Diffusion:
      return json{{"family", "diffusion"}, {"sigma2", map.param("sigma2")}};
    case SpectralFamily::PStepRandomWalk:
      return json{{"family", "p-step-random-walk"},
                  {"a", map.param("a")},
                  {"p", static_cast<int>(map.param("p"))}};
    case SpectralFamily::RegularizedLaplacian:
      return json{{"family", "regularized-laplacian"}, {"sigma2", map.param("sigma2")}};
    case SpectralFamily::Bandlimited:
      return json{{"family", "bandlimited"},
                  {"beta", map.param("beta")},
                  {"lambda_max", map.param("lambda_max")}};
    case SpectralFamily::ShiftedIdentity:
      return json{{"family", "shifted-identity"}, {"epsilon", map.param("epsilon")}};
  }
  throw ConfigError("kernel map: unknown family");
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig config;
  if (j.contains("estimator")) {
    config.estimator = estimator_from_string(j.at("estimator").get<std::string>());
  }
  if (!j.contains("mu")) throw ConfigError("config: missing field 'mu'");
  config.mu = j.at("mu").get<double>();
  if (!(config.mu > 0.0)) throw ConfigError("config: field 'mu' must be positive");

  if (j.contains("kernel")) {
    const json& k = j.at("kernel");
    config.kernel.type = k.value("type", std::string("timevarying"));
    if (k.contains("space")) config.kernel.space = spectral_map_from_json(k.at("space"));
    if (k.contains("time")) config.kernel.time = spectral_map_from_json(k.at("time"));
    if (k.contains("bridge")) {
      const json& b = k.at("bridge");
      const std::string type = b.value("type", std::string("scaled-identity"));
      if (type == "scaled-identity") {
        if (!b.contains("s")) throw ConfigError("config: bridge needs field 's'");
        config.kernel.bridge_scale = b.at("s").get<double>();
      } else if (type == "matrix") {
        if (!b.contains("path")) throw ConfigError("config: bridge matrix needs field 'path'");
        config.kernel.bridge_matrix = read_csv_matrix(b.at("path").get<std::string>());
      } else {
        throw ConfigError("config: unknown bridge type '" + type + "'");
      }
    }
  }

  if (j.contains("sampling")) {
    const json& s = j.at("sampling");
    config.sampling.type = s.value("type", std::string("random-fixed"));
    config.sampling.m = s.value("m", 0);
    if (s.contains("slots")) {
      config.sampling.per_slot = s.at("slots").get<std::vector<std::vector<int>>>();
    } else if (s.contains("path")) {
      // Vertex count is unknown here; validated when the plan is built.
      std::ifstream in(s.at("path").get<std::string>());
      if (!in) throw ConfigError("config: cannot open sampling path");
      json pj;
      in >> pj;
      config.sampling.per_slot = pj.at("slots").get<std::vector<std::vector<int>>>();
    }
  }
  config.noise_std = j.value("noise_std", 0.0);
  if (config.noise_std < 0.0) throw ConfigError("config: field 'noise_std' must be >= 0");
  config.seed = j.value("seed", static_cast<std::uint64_t>(1));
  return config;
}

json experiment_config_to_json(const ExperimentConfig& config) {
  json k{{"type", config.kernel.type}, {"space", spectral_map_to_json(config.kernel.space)}};
  if (config.kernel.type != "timevarying") {
    k["time"] = spectral_map_to_json(config.kernel.time);
  } else if (!config.kernel.bridge_matrix) {
    k["bridge"] = json{{"type", "scaled-identity"}, {"s", config.kernel.bridge_scale}};
  } else {
    k["bridge"] = json{{"type", "matrix"}, {"inline", true}};
  }
  json s{{"type", config.sampling.type}};
  if (config.sampling.type == "random-fixed") s["m"] = config.sampling.m;
  if (config.sampling.type == "per-slot") s["slots"] = config.sampling.per_slot;
  return json{{"estimator", to_string(config.estimator)},
              {"kernel", k},
              {"mu", config.mu},
              {"sampling", s},
              {"noise_std", config.noise_std},
              {"seed", config.seed}};
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "' for digest");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return fnv1a64_hex(buffer.str());
}

}  // namespace graphtime
