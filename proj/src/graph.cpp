#include "graphtime/graph.hpp"

#include <cmath>
#include <sstream>

#include "graphtime/errors.hpp"

namespace graphtime {

namespace {
// Absolute tolerance on symmetry / non-negativity; loose enough to survive a
// round trip through decimal text formats.
constexpr double kAdjacencyTol = 1e-9;
}  // namespace

void validate_adjacency(const Eigen::MatrixXd& adjacency, const std::string& context) {
  const Eigen::Index n = adjacency.rows();
  if (n == 0 || adjacency.cols() != n) {
    std::ostringstream msg;
    msg << context << ": expected nonempty square matrix, got " << adjacency.rows() << "x"
        << adjacency.cols();
    throw ConfigError(msg.str());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = adjacency(i, j);
      if (!std::isfinite(w)) {
        std::ostringstream msg;
        msg << context << ": non-finite entry at row " << i << ", col " << j;
        throw ConfigError(msg.str());
      }
      if (w < -kAdjacencyTol) {
        std::ostringstream msg;
        msg << context << ": negative weight " << w << " at row " << i << ", col " << j;
        throw ConfigError(msg.str());
      }
      if (i == j && std::abs(w) > kAdjacencyTol) {
        std::ostringstream msg;
        msg << context << ": nonzero diagonal " << w << " at row " << i << ", col " << i;
        throw ConfigError(msg.str());
      }
      if (std::abs(w - adjacency(j, i)) > kAdjacencyTol) {
        std::ostringstream msg;
        msg << context << ": not symmetric at row " << i << ", col " << j << " (" << w << " vs "
            << adjacency(j, i) << ")";
        throw ConfigError(msg.str());
      }
    }
  }
}

Graph::Graph(int n_vertices, Eigen::MatrixXd adjacency)
    : n_(n_vertices), adjacency_(std::move(adjacency)) {
  if (n_ <= 0) throw ConfigError("graph: vertex count must be positive");
  if (adjacency_.rows() != n_ || adjacency_.cols() != n_) {
    throw ConfigError("graph: adjacency does not match declared vertex count");
  }
  validate_adjacency(adjacency_);
}

TimeVaryingGraph::TimeVaryingGraph(int n_vertices, std::vector<Eigen::MatrixXd> slots)
    : n_(n_vertices), slots_(std::move(slots)) {
  if (n_ <= 0) throw ConfigError("time-varying graph: vertex count must be positive");
  if (slots_.empty()) throw ConfigError("time-varying graph: needs at least one slot");
  for (std::size_t t = 0; t < slots_.size(); ++t) {
    if (slots_[t].rows() != n_ || slots_[t].cols() != n_) {
      std::ostringstream msg;
      msg << "time-varying graph: slot " << t << " is " << slots_[t].rows() << "x"
          << slots_[t].cols() << ", expected " << n_ << "x" << n_;
      throw ConfigError(msg.str());
    }
    validate_adjacency(slots_[t], "slot " + std::to_string(t) + " adjacency");
  }
}

TimeVaryingGraph::TimeVaryingGraph(const Graph& g, int slots)
    : TimeVaryingGraph(g.n_vertices(),
                       std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(
                                                        slots > 0 ? slots : 0),
                                                    g.adjacency())) {}

bool TimeVaryingGraph::is_time_invariant() const {
  for (std::size_t t = 1; t < slots_.size(); ++t) {
    if (slots_[t] != slots_[0]) return false;
  }
  return true;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd s = 0.5 * (a + a.transpose());
  s.diagonal().setZero();
  return s;
}

Eigen::MatrixXd laplacian(const Eigen::MatrixXd& adjacency) {
  Eigen::VectorXd degrees = adjacency.rowwise().sum();
  Eigen::MatrixXd l = -adjacency;
  l.diagonal() += degrees;
  return l;
}

Eigen::MatrixXd laplacian(const Graph& g) { return laplacian(g.adjacency()); }

ExtendedGraph extend_tridiagonal(const TimeVaryingGraph& g,
                                 const std::vector<Eigen::MatrixXd>& bridges) {
  const int n = g.n_vertices();
  const int t = g.slots();
  if (static_cast<int>(bridges.size()) != t - 1) {
    std::ostringstream msg;
    msg << "extend_tridiagonal: expected " << t - 1 << " bridge matrices, got " << bridges.size();
    throw ConfigError(msg.str());
  }
  for (std::size_t k = 0; k < bridges.size(); ++k) {
    if (bridges[k].rows() != n || bridges[k].cols() != n) {
      std::ostringstream msg;
      msg << "extend_tridiagonal: bridge " << k << " is " << bridges[k].rows() << "x"
          << bridges[k].cols() << ", expected " << n << "x" << n;
      throw ConfigError(msg.str());
    }
    if ((bridges[k].array() < 0.0).any()) {
      throw ConfigError("extend_tridiagonal: bridge " + std::to_string(k) +
                        " has negative entries");
    }
  }

  ExtendedGraph ext;
  ext.n_vertices = n;
  ext.n_slots = t;
  ext.structure = ExtensionStructure::BlockTridiagonal;
  ext.adjacency = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * t,
                                        static_cast<Eigen::Index>(n) * t);
  for (int k = 0; k < t; ++k) {
    ext.adjacency.block(k * n, k * n, n, n) = g.slot(k);
    if (k > 0) {
      // Bridge B[k+1] links slot k-1 to slot k.
      ext.adjacency.block(k * n, (k - 1) * n, n, n) = bridges[k - 1];
      ext.adjacency.block((k - 1) * n, k * n, n, n) = bridges[k - 1].transpose();
    }
  }
  return ext;
}

ExtendedGraph extend_kronecker_sum(const Graph& g, const Eigen::MatrixXd& time_adjacency) {
  validate_adjacency(time_adjacency, "time adjacency");
  const int n = g.n_vertices();
  const int t = static_cast<int>(time_adjacency.rows());

  ExtendedGraph ext;
  ext.n_vertices = n;
  ext.n_slots = t;
  ext.structure = ExtensionStructure::KroneckerSum;
  ext.adjacency = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * t,
                                        static_cast<Eigen::Index>(n) * t);
  for (int i = 0; i < t; ++i) {
    ext.adjacency.block(i * n, i * n, n, n) = g.adjacency();
    for (int j = 0; j < t; ++j) {
      if (i != j && time_adjacency(i, j) != 0.0) {
        ext.adjacency.block(i * n, j * n, n, n).diagonal().setConstant(time_adjacency(i, j));
      }
    }
  }
  return ext;
}

Eigen::MatrixXd extended_laplacian_timevarying(const TimeVaryingGraph& g,
                                               const std::vector<Eigen::MatrixXd>& bridges) {
  const int n = g.n_vertices();
  const int t = g.slots();
  if (static_cast<int>(bridges.size()) != t - 1) {
    std::ostringstream msg;
    msg << "extended Laplacian: expected " << t - 1 << " bridge matrices, got " << bridges.size();
    throw ConfigError(msg.str());
  }
  for (const auto& b : bridges) {
    if (b.rows() != n || b.cols() != n) {
      throw ConfigError("extended Laplacian: bridge dimension mismatch");
    }
  }

  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * t,
                                            static_cast<Eigen::Index>(n) * t);
  for (int k = 0; k < t; ++k) {
    // Temporal degree correction: the bridge to the next slot contributes
    // bridges[k]^T 1, the bridge from the previous slot contributes
    // bridges[k-1] 1.
    Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
    if (k + 1 < t) degree += bridges[k].transpose() * Eigen::VectorXd::Ones(n);
    if (k > 0) degree += bridges[k - 1] * Eigen::VectorXd::Ones(n);
    l.block(k * n, k * n, n, n) = laplacian(g.slot(k));
    l.block(k * n, k * n, n, n).diagonal() += degree;
    if (k > 0) {
      l.block(k * n, (k - 1) * n, n, n) = -bridges[k - 1];
      l.block((k - 1) * n, k * n, n, n) = -bridges[k - 1].transpose();
    }
  }
  return l;
}

std::vector<Eigen::MatrixXd> scaled_identity_bridges(int n, int slots, double s) {
  if (s < 0.0) throw ConfigError("bridge scale must be non-negative");
  return std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(slots > 0 ? slots - 1 : 0),
                                      s * Eigen::MatrixXd::Identity(n, n));
}

}  // namespace graphtime
