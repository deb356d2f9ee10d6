#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "diging/linalg.hpp"

namespace diging {

/// Per-agent smoothness and strong-convexity constants together with the
/// aggregates the rate analysis is phrased in: L = max L^i, Lbar = mean L^i,
/// mu_bar = mean mu^i, mu_hat = max mu^i, kappa_bar = L / mu_bar.
struct SmoothnessProfile {
  std::vector<double> per_agent_l;
  std::vector<double> per_agent_mu;

  double max_l() const;
  double mean_l() const;
  double mean_mu() const;
  double max_mu() const;
  double kappa_bar() const { return max_l() / mean_mu(); }

  /// Throws unless every L^i > 0, every mu^i in [0, L^i], and mean mu > 0.
  void validate() const;
};

enum class ProblemKind { kQuadratic, kLeastSquares, kHuber };

/// n local objectives with analytic gradient oracles.
///   quadratic:      f_i(x) = x'Q_i x / 2 - c_i'x
///   least squares:  f_i(x) = ||A_i x - b_i||^2 / 2
///   huber:          f_i(x) = sum_r H_xi(a_r'x - b_r) + ridge ||x||^2 / 2
/// The Huber ridge keeps every agent strongly convex; without it the linear
/// tails have zero curvature.
class ProblemInstance {
 public:
  struct QuadraticAgent {
    Mat q;
    Vec c;
  };
  struct DataAgent {
    Mat a;
    Vec b;
  };

  static ProblemInstance quadratic(std::vector<QuadraticAgent> agents);
  static ProblemInstance least_squares(std::vector<DataAgent> agents);
  static ProblemInstance huber(std::vector<DataAgent> agents, double threshold,
                               double ridge);

  ProblemKind kind() const { return kind_; }
  int num_agents() const { return n_; }
  int dimension() const { return p_; }
  double huber_threshold() const { return huber_threshold_; }
  double ridge() const { return ridge_; }
  const SmoothnessProfile& profile() const { return profile_; }

  double value(int agent, const Vec& point) const;
  Vec gradient(int agent, const Vec& point) const;

  /// Row i of the result is gradient(i, row i of x).
  Mat stacked_gradient(const Mat& x) const;

  /// Self-describing text serialization (dimension header + row-major data).
  void save(std::ostream& out) const;
  static ProblemInstance load(std::istream& in);

  const std::vector<QuadraticAgent>& quadratic_agents() const {
    return quad_;
  }
  const std::vector<DataAgent>& data_agents() const { return data_; }

 private:
  ProblemInstance() = default;
  void finalize();

  ProblemKind kind_ = ProblemKind::kQuadratic;
  int n_ = 0;
  int p_ = 0;
  double huber_threshold_ = 1.0;
  double ridge_ = 0.0;
  std::vector<QuadraticAgent> quad_;
  std::vector<DataAgent> data_;
  SmoothnessProfile profile_;
};

/// Tight per-agent constants: extremal eigenvalues of each agent's Hessian
/// bound (for Huber, lambda_max(A'A) + ridge and the ridge itself).
SmoothnessProfile estimate_profile(const ProblemInstance& inst);

struct ReferenceSolution {
  Vec x_star;
  double achieved_gradient_norm = 0.0;

  /// 1 (x*)': every row equal to the minimizer.
  Mat stacked(int n) const;
};

/// Minimizer of the average objective. Quadratics solve the normal equations
/// directly; other kinds run centralized gradient descent with step 1/Lbar
/// until the mean-gradient norm drops below tol.
ReferenceSolution solve_reference(const ProblemInstance& inst,
                                  double tol = 1e-12);

/// Generators (all deterministic from their seed).
ProblemInstance make_quadratic_problem(int agents, int dimension, double mu,
                                       double l, std::uint64_t seed);
ProblemInstance make_least_squares_problem(int agents, int dimension,
                                           int rows_per_agent,
                                           std::uint64_t seed);
/// Robust-regression setup: standard normal A_i, b_i = A_i xhat + noise with
/// 10% of rows hit by heavy-tailed outliers.
ProblemInstance make_huber_problem(int agents, int dimension,
                                   int rows_per_agent, double threshold,
                                   double ridge, std::uint64_t seed);

}  // namespace diging
