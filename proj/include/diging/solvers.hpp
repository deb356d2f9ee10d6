#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "diging/errors.hpp"
#include "diging/linalg.hpp"
#include "diging/network.hpp"
#include "diging/objectives.hpp"

namespace diging {

/// Per-agent step-sizes: a fixed list, or a base value perturbed per
/// iteration and agent by a uniform multiplier from a seeded stream.
struct StepSizeSchedule {
  enum class Mode { kConstant, kPerturbed };

  static StepSizeSchedule constant(std::vector<double> alphas);
  /// All agents share one constant step.
  static StepSizeSchedule coordinated(double alpha);
  static StepSizeSchedule perturbed(double base, double lo, double hi,
                                    std::uint64_t seed);

  Mode mode = Mode::kConstant;
  std::vector<double> base_alphas;
  double base = 0.0;
  double lo = 1.0;
  double hi = 1.0;
  std::uint64_t seed = 0;
};

struct RealizedSteps {
  std::vector<double> alphas;
  double alpha_max = 0.0;
  double alpha_min = 0.0;
  double kappa_d = 1.0;  // alpha_max / alpha_min
};

/// Pure function of (schedule, k, n): perturbed draws come from a stream
/// derived from (seed, k), fresh per iteration and agent.
RealizedSteps realize_schedule(const StepSizeSchedule& schedule,
                               std::uint64_t k, int n);

struct SolverState {
  long k = 0;
  Mat x;          // n x p iterates
  Mat y;          // n x p gradient trackers
  Mat prev_grad;  // cached gradient at x, one oracle call per agent per step
};

SolverState initial_state(const ProblemInstance& inst, const Mat& x0);

/// One ATC-DIGing update: x+ = W (x - D y); y+ = W (y + grad(x+) - grad(x)).
/// Adapt-then-combine: the step lands before the mixing round.
SolverState atc_diging_step(const SolverState& state, const MixingMatrix& w,
                            const std::vector<double>& alphas,
                            const ProblemInstance& inst);

/// Original DIGing structure: x+ = W x - D y; y+ = W y + grad(x+) - grad(x).
SolverState diging_step(const SolverState& state, const MixingMatrix& w,
                        const std::vector<double>& alphas,
                        const ProblemInstance& inst);

enum class Algorithm { kAtcDiging, kDiging };

struct TraceRow {
  long k = 0;
  double residual = 0.0;             // ||x_k - x*||_F
  double normalized_residual = 0.0;  // residual / residual_0
  double consensus_violation = 0.0;  // ||x_k||_consensus
  double tracker_seminorm = 0.0;     // ||y_k||_consensus
  double tracker_norm = 0.0;         // ||y_k||_F
  double kappa_d = 1.0;  // heterogeneity of the step applied at iteration k
};

struct RunTrace {
  std::vector<TraceRow> rows;
  std::string status;  // "completed" or "diverged"
  double max_tracking_violation = 0.0;

  /// Mean realized kappa_D over the steps actually taken (rows 0..K-1).
  double mean_kappa_d() const;

  void write_csv(std::ostream& out) const;
  static RunTrace read_csv(std::istream& in);
};

struct RunResult {
  RunTrace trace;
  // Filled only when history is requested; x_history[k], y_history[k] are the
  // iterate and tracker at iteration k.
  std::vector<Mat> x_history;
  std::vector<Mat> y_history;
  SolverState final_state;
};

/// Thrown when an iterate goes non-finite or the residual blows past
/// 1e12 x initial; carries whatever trace was recorded up to that point.
struct DivergedError : Error {
  DivergedError(long iteration_, RunTrace partial_)
      : Error("solver diverged at iteration " + std::to_string(iteration_)),
        iteration(iteration_),
        partial(std::move(partial_)) {}
  long iteration;
  RunTrace partial;
};

RunResult run(Algorithm algorithm, const ProblemInstance& inst,
              const GraphSequence& graphs, const StepSizeSchedule& schedule,
              long iterations, const ReferenceSolution& ref, const Mat& x0,
              bool store_history = false);

/// Static-network variant driven by an explicit mixing matrix.
RunResult run(Algorithm algorithm, const ProblemInstance& inst,
              const MixingMatrix& w, const StepSizeSchedule& schedule,
              long iterations, const ReferenceSolution& ref, const Mat& x0,
              bool store_history = false);

/// Inexact gradient descent harness:
///   p_{k+1} = p_k - theta * mean_i grad g_i(s_k^i) + e_k.
/// Evaluation points and noise are injected so tests can drive exact,
/// adversarial, or geometrically decaying sequences.
struct IgdRun {
  double theta = 0.0;
  double beta = 2.0;  // >= 2
  double eta = 1.0;   // > 0
  /// Maps (k, p_k) to the n evaluation points, one per row; null means
  /// s_k^i = p_k for all agents.
  std::function<Mat(long, const Vec&)> eval_points;
  /// Maps k to the additive noise e_k; null means zero.
  std::function<Vec(long)> noise;
};

struct IgdTrace {
  std::vector<double> r;  // ||p_k - p*||, k = 0..K
  std::vector<std::vector<double>> eval_distance;  // [i][k] = ||p_k - s_k^i||
  std::vector<double> noise_norm;                  // ||e_k||
};

IgdTrace igd_run(const ProblemInstance& inst, const IgdRun& run, const Vec& p0,
                 long iterations, const ReferenceSolution& ref);

/// Both sides of the IGD error bound, evaluated from a recorded trace with
/// ergodic norms at rate lambda and horizon K.
struct IgdBoundSides {
  double lhs = 0.0;
  double eval_term = 0.0;
  double r0_term = 0.0;
  double noise_term = 0.0;
  double rhs() const { return eval_term + r0_term + noise_term; }
};

IgdBoundSides igd_bound_sides(const IgdTrace& trace,
                              const SmoothnessProfile& profile, double theta,
                              double beta, double eta, double lambda,
                              std::size_t horizon);

}  // namespace diging
