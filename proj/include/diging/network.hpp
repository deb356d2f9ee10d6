#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "diging/linalg.hpp"

namespace diging {

/// Undirected simple graph on nodes 0..n-1.
class Graph {
 public:
  Graph(int node_count, std::vector<std::pair<int, int>> edges);

  int node_count() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  bool has_edge(int i, int j) const;
  std::vector<int> degrees() const;
  bool connected() const;

  bool operator==(const Graph& other) const = default;

  /// Edge-list text: header "n <count>", then one "i j" line per edge.
  void save(std::ostream& out) const;
  static Graph load(std::istream& in);

 private:
  int n_;
  std::vector<std::pair<int, int>> edges_;  // normalized i<j, sorted, unique
};

/// Doubly stochastic weight matrix compliant with a graph. The contraction
/// factor delta (spectral norm of W - 11'/n) is computed lazily by power
/// iteration on the deflated matrix.
class MixingMatrix {
 public:
  explicit MixingMatrix(Mat weights);

  const Mat& weights() const { return w_; }
  int size() const { return static_cast<int>(w_.rows()); }
  double delta() const;

 private:
  Mat w_;
  mutable std::optional<double> delta_;
};

/// Metropolis weights: W_ij = 1/(1+max(deg_i,deg_j)) on edges, diagonal fills
/// each row to 1. Symmetric and doubly stochastic for any undirected graph.
MixingMatrix metropolis_weights(const Graph& g);

double contraction_factor(const MixingMatrix& w);

/// Monte Carlo check of the mixing contraction: max over random y of
/// ||W y||_consensus / ||y||_consensus. Consensual draws count as ratio 0.
double verify_contraction(const MixingMatrix& w, int trials,
                          std::uint64_t seed);

/// Deterministic graph source: a fixed graph, or a fresh connected random
/// graph per iteration (uniform spanning tree plus independent extra edges).
class GraphSequence {
 public:
  static GraphSequence fixed(Graph g);
  static GraphSequence time_varying(int node_count, double edge_probability,
                                    std::uint64_t seed);

  bool is_static() const { return static_graph_.has_value(); }
  int node_count() const;

  /// Same (seed, k) always yields the identical graph.
  Graph graph_at(std::uint64_t k) const;

 private:
  GraphSequence() = default;
  std::optional<Graph> static_graph_;
  int n_ = 0;
  double edge_probability_ = 0.0;
  std::uint64_t seed_ = 0;
};

}  // namespace diging
