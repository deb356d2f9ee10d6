#pragma once

#include <span>
#include <vector>

#include "diging/objectives.hpp"
#include "diging/solvers.hpp"

namespace diging {

/// Largest admissible alpha_max for the explicit-rate guarantee:
/// min of the network-limited term (1-delta)(1-delta-4*sqrt(3)*kbar*(1-1/kD))
/// / (10 L delta sqrt(n) sqrt(kbar)) and the centralized cap 1/(2 Lbar).
/// At delta = 0 the network term is vacuous and the cap applies alone.
double max_stepsize(const SmoothnessProfile& profile, double delta, int n,
                    double kappa_d);

/// The explicit geometric rate: the larger of the network-coupled expression
/// and sqrt(1 - alpha_max * mu_bar / 3). Throws RateNotContractive if the
/// result is not below 1.
double guaranteed_rate(const SmoothnessProfile& profile, double delta, int n,
                     double kappa_d, double alpha_max);

struct ArrowGains {
  double gamma11 = 0.0;  // residual -> tracker consensus seminorm
  double gamma12 = 0.0;  // residual -> tracker average component
  double gamma2 = 0.0;   // tracker norm -> iterate consensus seminorm
};

ArrowGains arrow_gains(double l, double delta, double lambda,
                        double alpha_max);

struct ClosingGains {
  double gamma31 = 0.0;  // iterate consensus seminorm -> residual
  double gamma32 = 0.0;  // tracker norm -> residual (zero when kappa_D = 1)
};

ClosingGains closing_gains(const SmoothnessProfile& profile, double lambda,
                           double alpha_max, double kappa_d, double beta,
                           double eta);

/// Small gain theorem bound: (1 / (1 - prod gamma)) * sum_i omega_i *
/// prod_{j>i} gamma_j. Requires prod gamma < 1.
double small_gain_bound(std::span<const double> gains,
                        std::span<const double> offsets);

struct RateInputs {
  SmoothnessProfile profile;
  double delta = 0.0;
  int n = 1;
  double kappa_d = 1.0;
  double lambda = 0.5;
  double alpha_max = 0.0;
  double beta = 2.0;
  double eta = 1.0;
};

struct GainLedger {
  double gamma11 = 0.0;
  double gamma12 = 0.0;
  double gamma2 = 0.0;
  double gamma31 = 0.0;
  double gamma32 = 0.0;
  double product = 0.0;  // (g11 + g12) * (g2 * g31 + g32)
  bool feasible = false;
};

GainLedger gain_ledger(const RateInputs& inputs);

struct ArrowCheck {
  double lhs = 0.0;          // ergodic norm on the arrow's left side
  double gain = 0.0;
  double rhs_norm = 0.0;     // ergodic norm the gain multiplies
  double omega_closed = 0.0; // closed-form offset (0 where the proof has none)
  double omega_empirical = 0.0;  // max over horizons of max(0, lhs - g*rhs)
  double margin = 0.0;       // gain*rhs + omega_closed - lhs
};

struct ArrowReport {
  ArrowCheck residual_to_tracker_seminorm;  // (i)
  ArrowCheck residual_to_tracker_average;   // (ii)
  ArrowCheck tracker_split;                 // (iii), checked as <=
  ArrowCheck tracker_to_consensus;          // (iv)
};

/// Evaluates the four sequence-norm bound relations on a stored run (static
/// graph, constant steps, delta < lambda). omega offsets for (i) and (iv)
/// use their closed forms lambda/(lambda-delta) * initial seminorm; (ii) has
/// none; (iii) is the split of the tracker norm into its two components.
ArrowReport verify_small_gain_arrows(const RunResult& result,
                                     const ReferenceSolution& ref,
                                     const SmoothnessProfile& profile,
                                     double delta, double alpha_max,
                                     double lambda, std::size_t horizon);

struct ComplexityComparison {
  double lambda_diging = 0.0;
  double lambda_atc = 0.0;
  long k_diging = 0;
  long k_atc = 0;
};

/// Closed-form iteration counts to reach epsilon-accuracy for the two update
/// structures under a shared step-size (kappa_D = 1). The ATC rate is capped
/// below by the centralized gradient-descent limit sqrt(1 - mu_bar/(6 Lbar)).
ComplexityComparison complexity_comparison(const SmoothnessProfile& profile,
                                           double delta, int n,
                                           double epsilon);

struct RateCheck {
  double c = 0.0;  // max_k residual_k / lambda^k
  bool holds = false;
};

/// Empirical R-linear certificate: residual_k <= C lambda^k with the
/// windowed maxima of residual_k/lambda^k non-increasing after a 10% burn-in.
RateCheck check_rate_empirically(const RunTrace& trace, double lambda);

/// Least-squares slope/intercept/R^2 of log(residual) over rows [from, to].
struct TailFit {
  double slope = 0.0;      // per-iteration log rate
  double intercept = 0.0;
  double r_squared = 0.0;
};

TailFit fit_log_tail(const RunTrace& trace, std::size_t from, std::size_t to);

/// Convenience: fit over the trailing half of the trace.
TailFit fit_log_tail(const RunTrace& trace);

}  // namespace diging
