#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "graphtime/estimators.hpp"
#include "graphtime/graph.hpp"
#include "graphtime/sweep.hpp"

#include <nlohmann/json_fwd.hpp>

namespace graphtime {

inline constexpr const char* kVersion = "0.1.0";

// Round-trip-exact formatting for doubles (17 significant digits).
std::string format_double(double value);

// Plain CSV matrices: rows = vertices, columns = time slots, no header.
Eigen::MatrixXd read_csv_matrix(const std::string& path);
void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m);

// Graph ingestion. A .json path expects {"n": N, "slots": [[...], ...]};
// a directory is scanned for per-slot CSV files in name order
// (adj_0001.csv, adj_0002.csv, ...); anything else is read as a single
// time-invariant adjacency CSV replicated over `horizon` slots.
TimeVaryingGraph read_graph(const std::string& path, int horizon);
Graph read_adjacency_csv(const std::string& path);
TimeVaryingGraph read_graph_json(const std::string& path);

// Sampling plans as JSON {"slots": [[0,3],[1],...]} (0-based indices).
SamplingPlan read_plan_json(const std::string& path, int n_vertices);
void write_plan_json(const std::string& path, const SamplingPlan& plan);

// Observation records, one JSON object per line:
//   {"t": 3, "indices": [0, 4, 7], "values": [...]}
// with t 1-based and strictly increasing; absent slots are treated as empty.
struct ObservationRecords {
  SamplingPlan plan;
  ObservationSet observations;
};
ObservationRecords read_observation_records(const std::string& path, int n_vertices, int horizon);

// Config (de)serialization used by the CLI and the sweep manifest.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);
SpectralMap spectral_map_from_json(const nlohmann::json& j);
nlohmann::json spectral_map_to_json(const SpectralMap& map);

// FNV-1a digest of a file's bytes, as 16 hex characters.
std::string file_digest(const std::string& path);

}  // namespace graphtime
