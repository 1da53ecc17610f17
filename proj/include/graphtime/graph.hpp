#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace graphtime {

// Undirected weighted graph: symmetric non-negative adjacency, zero diagonal.
// Inputs are validated, never silently repaired; use symmetrize() first if
// your data carries asymmetric noise.
class Graph {
public:
  Graph(int n_vertices, Eigen::MatrixXd adjacency);

  int n_vertices() const { return n_; }
  const Eigen::MatrixXd& adjacency() const { return adjacency_; }

private:
  int n_;
  Eigen::MatrixXd adjacency_;
};

// One adjacency matrix per time slot, shared vertex set.
class TimeVaryingGraph {
public:
  TimeVaryingGraph(int n_vertices, std::vector<Eigen::MatrixXd> slots);
  // Replicates a static graph over `slots` time slots.
  TimeVaryingGraph(const Graph& g, int slots);

  int n_vertices() const { return n_; }
  int slots() const { return static_cast<int>(slots_.size()); }
  const Eigen::MatrixXd& slot(int t) const { return slots_.at(t); }
  const std::vector<Eigen::MatrixXd>& all_slots() const { return slots_; }
  // True when every slot carries the same adjacency matrix.
  bool is_time_invariant() const;

private:
  int n_;
  std::vector<Eigen::MatrixXd> slots_;
};

enum class ExtensionStructure { BlockTridiagonal, KroneckerSum, General };

// Graph over N*T vertex replicas. Diagonal N x N blocks equal the per-slot
// adjacencies of the source graph; off-diagonal blocks couple time slots.
// Vertex (n, t) maps to flat index n + N*t.
struct ExtendedGraph {
  int n_vertices = 0;
  int n_slots = 0;
  Eigen::MatrixXd adjacency;
  ExtensionStructure structure = ExtensionStructure::General;
};

// Validates the Graph invariants on a raw matrix; throws ConfigError naming
// the first offending entry. `context` prefixes the message.
void validate_adjacency(const Eigen::MatrixXd& adjacency, const std::string& context = "adjacency");

// (A + A^T)/2 with the diagonal cleared. Explicit repair for noisy inputs.
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a);

// L = diag(W 1) - W.
Eigen::MatrixXd laplacian(const Eigen::MatrixXd& adjacency);
Eigen::MatrixXd laplacian(const Graph& g);

// Block-tridiagonal extension: W[t] on the diagonal, B[t] connecting slot
// t-1 to slot t on the first sub-diagonal (and B[t]^T above). `bridges`
// holds the T-1 matrices B[2..T].
ExtendedGraph extend_tridiagonal(const TimeVaryingGraph& g,
                                 const std::vector<Eigen::MatrixXd>& bridges);

// Kronecker-sum extension W_T (+) W for a time-invariant spatial graph:
// adjacency = W_T kron I_N + I_T kron W.
ExtendedGraph extend_kronecker_sum(const Graph& g, const Eigen::MatrixXd& time_adjacency);

// Laplacian of the block-tridiagonal extension, assembled directly from the
// per-slot Laplacians plus the bridge degree corrections. Bridges may be any
// non-negative matrices; the temporal-difference quadratic form decomposition
// holds when they are diagonal.
Eigen::MatrixXd extended_laplacian_timevarying(const TimeVaryingGraph& g,
                                               const std::vector<Eigen::MatrixXd>& bridges);

// Convenience: T-1 copies of s*I as bridge matrices.
std::vector<Eigen::MatrixXd> scaled_identity_bridges(int n, int slots, double s);

}  // namespace graphtime
