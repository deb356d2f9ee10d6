#include "diging/linalg.hpp"

#include <cmath>

#include "diging/errors.hpp"

namespace diging {

double frobenius_norm(const Mat& m) { return m.norm(); }

double consensus_seminorm(const Mat& m) {
  // Explicit mean subtraction instead of materializing I - 11'/n.
  const Eigen::RowVectorXd mean = m.colwise().mean();
  return (m.rowwise() - mean).norm();
}

double average_seminorm(const Mat& m) {
  const double n = static_cast<double>(m.rows());
  return m.colwise().sum().norm() / std::sqrt(n);
}

double matrix_norm(const Mat& m, NormKind kind) {
  switch (kind) {
    case NormKind::kFrobenius:
      return frobenius_norm(m);
    case NormKind::kConsensus:
      return consensus_seminorm(m);
    case NormKind::kAverage:
      return average_seminorm(m);
  }
  return 0.0;  // unreachable
}

namespace {

void check_params(const ErgodicNormParams& params, std::size_t size) {
  if (!(params.lambda > 0.0 && params.lambda < 1.0)) {
    throw Error("ergodic norm rate parameter must lie in (0,1)");
  }
  if (params.horizon + 1 > size) {
    throw InsufficientHistory(
        "ergodic norm horizon K exceeds the stored sequence length");
  }
}

double weighted_max(const ErgodicNormParams& params, std::size_t count,
                    const auto& norm_at) {
  double best = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double v = norm_at(k);
    if (v == 0.0) continue;  // avoids inf*0 when lambda^{-k} overflows
    best = std::max(best, v * std::pow(params.lambda, -static_cast<double>(k)));
  }
  return best;
}

}  // namespace

double ergodic_norm(std::span<const Mat> seq, const ErgodicNormParams& params,
                    NormKind kind) {
  check_params(params, seq.size());
  return weighted_max(params, params.horizon + 1,
                      [&](std::size_t k) { return matrix_norm(seq[k], kind); });
}

double ergodic_norm(std::span<const double> seq,
                    const ErgodicNormParams& params) {
  check_params(params, seq.size());
  return weighted_max(params, params.horizon + 1,
                      [&](std::size_t k) { return std::abs(seq[k]); });
}

}  // namespace diging
