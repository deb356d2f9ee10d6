#include "diging/network.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <string>

#include "diging/errors.hpp"
#include "diging/rng.hpp"

namespace diging {

Graph::Graph(int node_count, std::vector<std::pair<int, int>> edges)
    : n_(node_count), edges_(std::move(edges)) {
  if (n_ < 1) throw Error("graph needs at least one node");
  for (auto& [i, j] : edges_) {
    if (i == j) throw Error("self-loops are not allowed");
    if (i < 0 || j < 0 || i >= n_ || j >= n_) {
      throw Error("edge endpoint out of range");
    }
    if (i > j) std::swap(i, j);
  }
  std::sort(edges_.begin(), edges_.end());
  const auto dup = std::adjacent_find(edges_.begin(), edges_.end());
  if (dup != edges_.end()) throw Error("duplicate edge");
}

bool Graph::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges_.begin(), edges_.end(), std::pair{i, j});
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(n_, 0);
  for (const auto& [i, j] : edges_) {
    ++deg[i];
    ++deg[j];
  }
  return deg;
}

bool Graph::connected() const {
  std::vector<std::vector<int>> adj(n_);
  for (const auto& [i, j] : edges_) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  std::vector<char> seen(n_, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u : adj[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        ++reached;
        stack.push_back(u);
      }
    }
  }
  return reached == n_;
}

void Graph::save(std::ostream& out) const {
  out << "n " << n_ << "\n";
  for (const auto& [i, j] : edges_) out << i << " " << j << "\n";
}

Graph Graph::load(std::istream& in) {
  std::string tag;
  int n = 0;
  if (!(in >> tag >> n) || tag != "n") {
    throw Error("bad graph header, expected \"n <count>\"");
  }
  std::vector<std::pair<int, int>> edges;
  int i = 0, j = 0;
  while (in >> i >> j) edges.emplace_back(i, j);
  return Graph(n, std::move(edges));
}

MixingMatrix::MixingMatrix(Mat weights) : w_(std::move(weights)) {
  if (w_.rows() != w_.cols() || w_.rows() < 1) {
    throw NotDoublyStochastic("weight matrix must be square and nonempty");
  }
  if (w_.minCoeff() < 0.0) {
    throw NotDoublyStochastic("weight matrix has a negative entry");
  }
  constexpr double kTol = 1e-12;
  for (Eigen::Index i = 0; i < w_.rows(); ++i) {
    if (std::abs(w_.row(i).sum() - 1.0) > kTol) {
      throw NotDoublyStochastic("row sums must equal 1");
    }
    if (std::abs(w_.col(i).sum() - 1.0) > kTol) {
      throw NotDoublyStochastic("column sums must equal 1");
    }
  }
}

double MixingMatrix::delta() const {
  if (delta_) return *delta_;
  const auto n = w_.rows();
  if (n == 1) {
    delta_ = 0.0;
    return *delta_;
  }
  // Spectral norm of B = W - 11'/n via power iteration on B'B. B annihilates
  // the all-ones direction on both sides, so we re-project the iterate to
  // keep rounding from reintroducing it.
  const Mat b = w_ - Mat::Constant(n, n, 1.0 / static_cast<double>(n));
  Rng rng(0x5eedu);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  v.array() -= v.mean();
  double prev = -1.0;
  double sigma_sq = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Vec bv = b * v;
    sigma_sq = bv.squaredNorm() / v.squaredNorm();
    if (prev >= 0.0 && std::abs(sigma_sq - prev) < 1e-12) break;
    prev = sigma_sq;
    Vec next = b.transpose() * bv;
    next.array() -= next.mean();
    const double norm = next.norm();
    if (norm == 0.0) {
      sigma_sq = 0.0;
      break;
    }
    v = next / norm;
  }
  delta_ = std::sqrt(std::max(0.0, sigma_sq));
  return *delta_;
}

MixingMatrix metropolis_weights(const Graph& g) {
  const int n = g.node_count();
  const auto deg = g.degrees();
  Mat w = Mat::Zero(n, n);
  for (const auto& [i, j] : g.edges()) {
    const double wij = 1.0 / (1.0 + std::max(deg[i], deg[j]));
    w(i, j) = wij;
    w(j, i) = wij;
  }
  for (int i = 0; i < n; ++i) w(i, i) = 1.0 - w.row(i).sum();
  return MixingMatrix(std::move(w));
}

double contraction_factor(const MixingMatrix& w) { return w.delta(); }

double verify_contraction(const MixingMatrix& w, int trials,
                          std::uint64_t seed) {
  if (trials < 1) throw Error("verify_contraction needs at least one trial");
  const int n = w.size();
  constexpr int kCols = 4;
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Mat y(n, kCols);
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < kCols; ++c) y(i, c) = rng.normal();
    }
    const double denom = consensus_seminorm(y);
    if (denom == 0.0) continue;  // contraction is vacuous on consensual input
    worst = std::max(worst, consensus_seminorm(w.weights() * y) / denom);
  }
  return worst;
}

namespace {

// Uniform random labeled tree via Prufer decoding.
std::vector<std::pair<int, int>> random_spanning_tree(int n, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  if (n < 2) return edges;
  if (n == 2) {
    edges.emplace_back(0, 1);
    return edges;
  }
  std::vector<int> prufer(n - 2);
  for (int& a : prufer) a = static_cast<int>(rng.below(n));
  std::vector<int> deg(n, 1);
  for (int a : prufer) ++deg[a];
  int ptr = 0;
  while (deg[ptr] != 1) ++ptr;
  int leaf = ptr;
  for (int a : prufer) {
    edges.emplace_back(leaf, a);
    if (--deg[a] == 1 && a < ptr) {
      leaf = a;
    } else {
      ++ptr;
      while (deg[ptr] != 1) ++ptr;
      leaf = ptr;
    }
  }
  edges.emplace_back(leaf, n - 1);
  return edges;
}

}  // namespace

GraphSequence GraphSequence::fixed(Graph g) {
  if (!g.connected()) throw Error("static graph must be connected");
  GraphSequence seq;
  seq.n_ = g.node_count();
  seq.static_graph_ = std::move(g);
  return seq;
}

GraphSequence GraphSequence::time_varying(int node_count,
                                          double edge_probability,
                                          std::uint64_t seed) {
  if (node_count < 1) throw Error("graph sequence needs at least one node");
  if (edge_probability < 0.0 || edge_probability > 1.0) {
    throw Error("edge probability must lie in [0,1]");
  }
  GraphSequence seq;
  seq.n_ = node_count;
  seq.edge_probability_ = edge_probability;
  seq.seed_ = seed;
  return seq;
}

int GraphSequence::node_count() const { return n_; }

Graph GraphSequence::graph_at(std::uint64_t k) const {
  if (static_graph_) return *static_graph_;
  // Spanning tree first so every instance is connected, then each remaining
  // pair independently with probability q.
  Rng rng = Rng::derive(seed_, k);
  auto edges = random_spanning_tree(n_, rng);
  std::set<std::pair<int, int>> tree;
  for (auto [i, j] : edges) tree.insert(std::minmax(i, j));
  for (int i = 0; i < n_; ++i) {
    for (int j = i + 1; j < n_; ++j) {
      if (tree.count({i, j})) continue;
      if (rng.uniform() < edge_probability_) edges.emplace_back(i, j);
    }
  }
  return Graph(n_, std::move(edges));
}

}  // namespace diging
