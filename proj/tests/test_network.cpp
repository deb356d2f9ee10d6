#include "diging/network.hpp"

#include <Eigen/Eigenvalues>
#include <sstream>

#include "diging/errors.hpp"
#include "diging/rng.hpp"
#include "doctest.h"

using namespace diging;

namespace {

// Dense eigensolver oracle for the contraction factor: largest singular
// value of W - 11'/n.
double delta_oracle(const Mat& w) {
  const auto n = w.rows();
  const Mat b = w - Mat::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::SelfAdjointEigenSolver<Mat> es(b.transpose() * b);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

Graph random_connected_graph(int n, double q, Rng& rng) {
  while (true) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (rng.uniform() < q) edges.emplace_back(i, j);
      }
    }
    Graph g(n, std::move(edges));
    if (g.connected()) return g;
  }
}

}  // namespace

TEST_CASE("metropolis weights on small graphs") {
  SUBCASE("two-node path") {
    const MixingMatrix w = metropolis_weights(Graph(2, {{0, 1}}));
    CHECK(w.weights()(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(w.weights()(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(w.weights()(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(w.weights()(1, 1) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("single node") {
    const MixingMatrix w = metropolis_weights(Graph(1, {}));
    CHECK(w.weights()(0, 0) == 1.0);
    CHECK(w.delta() == 0.0);
  }
  SUBCASE("three-node path") {
    const MixingMatrix w = metropolis_weights(Graph(3, {{0, 1}, {1, 2}}));
    Mat expected(3, 3);
    expected << 2.0 / 3.0, 1.0 / 3.0, 0.0,
                1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0,
                0.0, 1.0 / 3.0, 2.0 / 3.0;
    CHECK((w.weights() - expected).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("metropolis weights are symmetric and doubly stochastic") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const Graph g = random_connected_graph(8, 0.4, rng);
    const MixingMatrix w = metropolis_weights(g);
    CHECK((w.weights() - w.weights().transpose()).cwiseAbs().maxCoeff() ==
          0.0);
    for (int i = 0; i < 8; ++i) {
      CHECK(std::abs(w.weights().row(i).sum() - 1.0) < 1e-12);
      CHECK(std::abs(w.weights().col(i).sum() - 1.0) < 1e-12);
    }
    // Graph compliance: positive entries only on edges or the diagonal.
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) {
        if (w.weights()(i, j) > 0.0 && i != j) CHECK(g.has_edge(i, j));
      }
    }
  }
}

TEST_CASE("contraction factor") {
  SUBCASE("complete averaging has delta zero") {
    const int n = 5;
    const MixingMatrix w(Mat::Constant(n, n, 1.0 / n));
    CHECK(contraction_factor(w) == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("three-node path equals 2/3") {
    const MixingMatrix w = metropolis_weights(Graph(3, {{0, 1}, {1, 2}}));
    CHECK(contraction_factor(w) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-11));
    CHECK(contraction_factor(w) ==
          doctest::Approx(delta_oracle(w.weights())).epsilon(1e-11));
  }
  SUBCASE("identity on two nodes does not mix") {
    const MixingMatrix w(Mat::Identity(2, 2));
    CHECK(contraction_factor(w) == doctest::Approx(1.0).epsilon(1e-11));
    CHECK_FALSE(Graph(2, {}).connected());
  }
  SUBCASE("non doubly stochastic input is rejected") {
    Mat bad(2, 2);
    bad << 0.9, 0.2, 0.1, 0.8;
    CHECK_THROWS_AS(MixingMatrix{bad}, NotDoublyStochastic);
  }
}

TEST_CASE("power iteration matches the dense eigensolver oracle") {
  Rng rng(12);
  for (int t = 0; t < 50; ++t) {
    const int n = 3 + static_cast<int>(rng.below(28));
    const Graph g = random_connected_graph(n, 0.35, rng);
    const MixingMatrix w = metropolis_weights(g);
    const double reference = delta_oracle(w.weights());
    CHECK(w.delta() == doctest::Approx(reference).epsilon(1e-9));
    CHECK(w.delta() >= 0.0);
    CHECK(w.delta() < 1.0);
  }
}

TEST_CASE("verify_contraction stays within delta") {
  SUBCASE("complete averaging maps everything to consensus") {
    const int n = 6;
    const MixingMatrix w(Mat::Constant(n, n, 1.0 / n));
    CHECK(verify_contraction(w, 100, 7) <= 1e-12);
  }
  SUBCASE("three-node path stays within 2/3") {
    const MixingMatrix w = metropolis_weights(Graph(3, {{0, 1}, {1, 2}}));
    CHECK(verify_contraction(w, 1000, 7) <= 2.0 / 3.0 + 1e-9);
  }
  SUBCASE("random graphs observe the spectral bound") {
    Rng rng(13);
    for (int t = 0; t < 5; ++t) {
      const Graph g = random_connected_graph(10, 0.3, rng);
      const MixingMatrix w = metropolis_weights(g);
      CHECK(verify_contraction(w, 1000, 1000 + t) <= w.delta() + 1e-9);
    }
  }
}

TEST_CASE("graph sequences") {
  SUBCASE("static mode always returns the same graph") {
    const Graph g(4, {{0, 1}, {1, 2}, {2, 3}});
    const GraphSequence seq = GraphSequence::fixed(g);
    CHECK(seq.graph_at(0) == g);
    CHECK(seq.graph_at(17) == g);
  }
  SUBCASE("time-varying mode is deterministic in (seed, k)") {
    const GraphSequence a = GraphSequence::time_varying(12, 0.3, 99);
    const GraphSequence b = GraphSequence::time_varying(12, 0.3, 99);
    for (std::uint64_t k : {0ULL, 1ULL, 5ULL, 1000ULL}) {
      CHECK(a.graph_at(k) == b.graph_at(k));
    }
    CHECK_FALSE(a.graph_at(0) == a.graph_at(1));
  }
  SUBCASE("every generated instance is connected") {
    const GraphSequence seq = GraphSequence::time_varying(12, 0.3, 5);
    for (std::uint64_t k = 0; k < 100; ++k) {
      CHECK(seq.graph_at(k).connected());
    }
  }
  SUBCASE("sparse mode still connected via the spanning tree") {
    const GraphSequence seq = GraphSequence::time_varying(9, 0.0, 5);
    for (std::uint64_t k = 0; k < 20; ++k) {
      const Graph g = seq.graph_at(k);
      CHECK(g.connected());
      CHECK(g.edges().size() == 8);  // exactly a tree
    }
  }
}

TEST_CASE("graph edge-list round trip") {
  const Graph g(5, {{0, 1}, {0, 4}, {2, 3}, {1, 2}});
  std::stringstream buffer;
  g.save(buffer);
  CHECK(Graph::load(buffer) == g);

  std::stringstream bad("m 3\n0 1\n");
  CHECK_THROWS_AS(Graph::load(bad), Error);
}

TEST_CASE("graph validation") {
  CHECK_THROWS_AS(Graph(3, {{0, 0}}), Error);
  CHECK_THROWS_AS(Graph(3, {{0, 3}}), Error);
  CHECK_THROWS_AS(Graph(3, {{0, 1}, {1, 0}}), Error);
  CHECK_THROWS_AS(GraphSequence::fixed(Graph(3, {{0, 1}})), Error);
}
