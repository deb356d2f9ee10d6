#include "diging/linalg.hpp"

#include <cmath>
#include <vector>

#include "diging/errors.hpp"
#include "diging/rng.hpp"
#include "doctest.h"

using namespace diging;

namespace {

Mat random_matrix(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

// Independent elementwise oracle for the Frobenius norm.
double sum_of_squares_root(const Mat& m) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
  }
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("frobenius norm basics") {
  CHECK(frobenius_norm(Mat::Zero(2, 2)) == 0.0);

  Mat m(1, 2);
  m << 3.0, 4.0;
  CHECK(frobenius_norm(m) == doctest::Approx(5.0).epsilon(1e-15));

  Rng rng(1);
  const Mat r = random_matrix(3, 2, rng);
  CHECK(frobenius_norm(r) ==
        doctest::Approx(sum_of_squares_root(r)).epsilon(1e-14));
}

TEST_CASE("consensus seminorm") {
  Mat consensual(3, 2);
  consensual << 1.0, 2.0, 1.0, 2.0, 1.0, 2.0;
  CHECK(consensus_seminorm(consensual) == doctest::Approx(0.0).epsilon(1e-15));

  Mat split(2, 1);
  split << 1.0, -1.0;
  CHECK(consensus_seminorm(split) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const Mat m = random_matrix(4, 3, rng);
    CHECK(consensus_seminorm(m) <= frobenius_norm(m) * (1.0 + 1e-12));
  }
}

TEST_CASE("average seminorm") {
  Mat split(2, 1);
  split << 1.0, -1.0;
  CHECK(average_seminorm(split) == doctest::Approx(0.0).epsilon(1e-15));

  Mat consensual(2, 1);
  consensual << 3.0, 3.0;
  CHECK(average_seminorm(consensual) ==
        doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("pythagorean split of the frobenius norm") {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const Mat m = random_matrix(5, 3, rng);
    const double f2 = frobenius_norm(m) * frobenius_norm(m);
    const double split = consensus_seminorm(m) * consensus_seminorm(m) +
                         average_seminorm(m) * average_seminorm(m);
    CHECK(split == doctest::Approx(f2).epsilon(1e-12));
  }
}

TEST_CASE("seminorm triangle inequality") {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const Mat y = random_matrix(4, 2, rng);
    const Mat w = random_matrix(4, 2, rng);
    const Mat x = y + w;
    CHECK(consensus_seminorm(x) <=
          (consensus_seminorm(y) + consensus_seminorm(w)) * (1.0 + 1e-12));
  }
}

TEST_CASE("ergodic norm on exact geometric sequences") {
  std::vector<double> seq{1.0, 0.5, 0.25};
  CHECK(ergodic_norm(std::span<const double>(seq), {0.5, 2}) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ergodic_norm(std::span<const double>(seq), {0.25, 2}) ==
        doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("ergodic norm matches brute force on random sequences") {
  Rng rng(5);
  std::vector<Mat> seq;
  for (int k = 0; k < 5; ++k) seq.push_back(random_matrix(3, 2, rng));
  const double lambda = 0.7;
  double expected = 0.0;
  for (int k = 0; k < 5; ++k) {
    expected = std::max(expected,
                        seq[k].norm() / std::pow(lambda, static_cast<double>(k)));
  }
  CHECK(ergodic_norm(std::span<const Mat>(seq), {lambda, 4}) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ergodic norm monotonicity") {
  Rng rng(6);
  std::vector<double> seq;
  for (int k = 0; k < 20; ++k) seq.push_back(std::abs(rng.normal()));
  const std::span<const double> view(seq);

  // Larger lambda never increases the norm.
  CHECK(ergodic_norm(view, {0.5, 19}) >= ergodic_norm(view, {0.9, 19}));
  // Longer horizon never decreases it.
  for (std::size_t k = 1; k < seq.size(); ++k) {
    CHECK(ergodic_norm(view, {0.8, k}) >=
          ergodic_norm(view, {0.8, k - 1}) * (1.0 - 1e-15));
  }
}

TEST_CASE("ergodic norm rejects short sequences") {
  std::vector<double> seq{1.0, 2.0};
  CHECK_THROWS_AS(ergodic_norm(std::span<const double>(seq), {0.5, 2}),
                  InsufficientHistory);
  CHECK_THROWS_AS(ergodic_norm(std::span<const double>(seq), {1.5, 1}), Error);
}
