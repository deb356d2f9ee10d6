#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace diging {

/// Stacked agent matrix: row i holds agent i's copy of the decision variable,
/// so an n-agent problem in dimension p lives in an n-by-p matrix.
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class NormKind { kFrobenius, kConsensus, kAverage };

double frobenius_norm(const Mat& m);

/// Frobenius norm after subtracting the column-mean row from every row.
/// Zero exactly when all agents agree.
double consensus_seminorm(const Mat& m);

/// sqrt(n) times the Frobenius norm of the column-mean row. Together with the
/// consensus seminorm this gives an orthogonal split of the squared Frobenius
/// norm.
double average_seminorm(const Mat& m);

double matrix_norm(const Mat& m, NormKind kind);

struct ErgodicNormParams {
  double lambda = 0.5;   // in (0,1)
  std::size_t horizon = 0;  // K; uses sequence entries 0..K
};

/// max over k=0..K of lambda^{-k} * norm(seq[k]). Boundedness of this
/// quantity as K grows certifies geometric decay at rate lambda.
double ergodic_norm(std::span<const Mat> seq, const ErgodicNormParams& params,
                    NormKind kind = NormKind::kFrobenius);

/// Scalar-sequence variant (1x1 matrices).
double ergodic_norm(std::span<const double> seq,
                    const ErgodicNormParams& params);

}  // namespace diging
