#include "diging/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "diging/rng.hpp"

namespace diging {

StepSizeSchedule StepSizeSchedule::constant(std::vector<double> alphas) {
  if (alphas.empty()) throw Error("constant schedule needs step-sizes");
  for (double a : alphas) {
    if (!(a > 0.0)) throw Error("step-sizes must be positive");
  }
  StepSizeSchedule s;
  s.mode = Mode::kConstant;
  s.base_alphas = std::move(alphas);
  return s;
}

StepSizeSchedule StepSizeSchedule::coordinated(double alpha) {
  return constant(std::vector<double>{alpha});
}

StepSizeSchedule StepSizeSchedule::perturbed(double base, double lo, double hi,
                                             std::uint64_t seed) {
  if (!(base > 0.0)) throw Error("base step-size must be positive");
  if (!(lo > 0.0) || hi < lo) throw Error("need 0 < lo <= hi");
  StepSizeSchedule s;
  s.mode = Mode::kPerturbed;
  s.base = base;
  s.lo = lo;
  s.hi = hi;
  s.seed = seed;
  return s;
}

RealizedSteps realize_schedule(const StepSizeSchedule& schedule,
                               std::uint64_t k, int n) {
  RealizedSteps out;
  out.alphas.resize(n);
  if (schedule.mode == StepSizeSchedule::Mode::kConstant) {
    if (schedule.base_alphas.size() == 1) {
      std::fill(out.alphas.begin(), out.alphas.end(),
                schedule.base_alphas.front());
    } else if (static_cast<int>(schedule.base_alphas.size()) == n) {
      out.alphas = schedule.base_alphas;
    } else {
      throw Error("constant schedule lists a different agent count");
    }
  } else {
    Rng rng = Rng::derive(schedule.seed, k);
    for (int i = 0; i < n; ++i) {
      out.alphas[i] = schedule.base * rng.uniform(schedule.lo, schedule.hi);
    }
  }
  out.alpha_max = *std::max_element(out.alphas.begin(), out.alphas.end());
  out.alpha_min = *std::min_element(out.alphas.begin(), out.alphas.end());
  out.kappa_d = out.alpha_max / out.alpha_min;
  return out;
}

SolverState initial_state(const ProblemInstance& inst, const Mat& x0) {
  if (x0.rows() != inst.num_agents() || x0.cols() != inst.dimension()) {
    throw Error("x0 has the wrong shape");
  }
  SolverState s;
  s.k = 0;
  s.x = x0;
  s.prev_grad = inst.stacked_gradient(x0);
  s.y = s.prev_grad;  // y_0 = grad(x_0)
  return s;
}

namespace {

Mat scale_rows(const std::vector<double>& alphas, const Mat& m) {
  Mat out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out.row(i) *= alphas[static_cast<std::size_t>(i)];
  }
  return out;
}

SolverState step_impl(const SolverState& state, const MixingMatrix& w,
                      const std::vector<double>& alphas,
                      const ProblemInstance& inst, bool adapt_then_combine) {
  if (w.size() != inst.num_agents() ||
      static_cast<int>(alphas.size()) != inst.num_agents()) {
    throw Error("mixing matrix / step-size dimensions do not match");
  }
  const Mat& wm = w.weights();
  SolverState next;
  next.k = state.k + 1;
  if (adapt_then_combine) {
    next.x = wm * (state.x - scale_rows(alphas, state.y));
    next.prev_grad = inst.stacked_gradient(next.x);
    next.y = wm * (state.y + next.prev_grad - state.prev_grad);
  } else {
    next.x = wm * state.x - scale_rows(alphas, state.y);
    next.prev_grad = inst.stacked_gradient(next.x);
    next.y = wm * state.y + next.prev_grad - state.prev_grad;
  }
  return next;
}

}  // namespace

SolverState atc_diging_step(const SolverState& state, const MixingMatrix& w,
                            const std::vector<double>& alphas,
                            const ProblemInstance& inst) {
  return step_impl(state, w, alphas, inst, true);
}

SolverState diging_step(const SolverState& state, const MixingMatrix& w,
                        const std::vector<double>& alphas,
                        const ProblemInstance& inst) {
  return step_impl(state, w, alphas, inst, false);
}

double RunTrace::mean_kappa_d() const {
  if (rows.empty()) return 1.0;
  const std::size_t steps = rows.size() > 1 ? rows.size() - 1 : 1;
  double sum = 0.0;
  for (std::size_t i = 0; i < steps; ++i) sum += rows[i].kappa_d;
  return sum / static_cast<double>(steps);
}

void RunTrace::write_csv(std::ostream& out) const {
  out << "k,residual,normalized_residual,consensus_violation,"
         "tracker_seminorm,tracker_norm,kappa_D\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.k << ',' << r.residual << ',' << r.normalized_residual << ','
        << r.consensus_violation << ',' << r.tracker_seminorm << ','
        << r.tracker_norm << ',' << r.kappa_d << '\n';
  }
}

RunTrace RunTrace::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      line !=
          "k,residual,normalized_residual,consensus_violation,"
          "tracker_seminorm,tracker_norm,kappa_D") {
    throw Error("unexpected trace CSV header");
  }
  RunTrace trace;
  trace.status = "completed";
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    TraceRow r;
    char comma = ',';
    if (!(row >> r.k >> comma >> r.residual >> comma >>
          r.normalized_residual >> comma >> r.consensus_violation >> comma >>
          r.tracker_seminorm >> comma >> r.tracker_norm >> comma >>
          r.kappa_d)) {
      throw Error("malformed trace CSV row: " + line);
    }
    trace.rows.push_back(r);
  }
  return trace;
}

namespace {

template <typename MixingProvider>
RunResult run_loop(Algorithm algorithm, const ProblemInstance& inst,
                   MixingProvider&& mixing_at,
                   const StepSizeSchedule& schedule, long iterations,
                   const ReferenceSolution& ref, const Mat& x0,
                   bool store_history) {
  if (iterations < 1) throw Error("need at least one iteration");
  const int n = inst.num_agents();
  const Mat x_star = ref.stacked(n);

  RunResult result;
  SolverState state = initial_state(inst, x0);

  const double residual0 = (state.x - x_star).norm();
  auto record = [&](const SolverState& s, double kappa_d) {
    TraceRow row;
    row.k = s.k;
    row.residual = (s.x - x_star).norm();
    row.normalized_residual =
        residual0 > 0.0 ? row.residual / residual0 : 0.0;
    row.consensus_violation = consensus_seminorm(s.x);
    row.tracker_seminorm = consensus_seminorm(s.y);
    row.tracker_norm = s.y.norm();
    row.kappa_d = kappa_d;
    result.trace.rows.push_back(row);
    const Eigen::RowVectorXd grad_sum = s.prev_grad.colwise().sum();
    const double violation = (s.y.colwise().sum() - grad_sum).norm() /
                             (1.0 + grad_sum.norm());
    result.trace.max_tracking_violation =
        std::max(result.trace.max_tracking_violation, violation);
    if (store_history) {
      result.x_history.push_back(s.x);
      result.y_history.push_back(s.y);
    }
  };

  double last_kappa = 1.0;
  for (long k = 0; k < iterations; ++k) {
    const RealizedSteps steps = realize_schedule(schedule, k, n);
    last_kappa = steps.kappa_d;
    record(state, steps.kappa_d);
    const MixingMatrix& w = mixing_at(k);
    state = algorithm == Algorithm::kAtcDiging
                ? atc_diging_step(state, w, steps.alphas, inst)
                : diging_step(state, w, steps.alphas, inst);
    const double residual = (state.x - x_star).norm();
    if (!state.x.allFinite() || !state.y.allFinite() ||
        (residual0 > 0.0 && residual > 1e12 * residual0)) {
      result.trace.status = "diverged";
      throw DivergedError(state.k, result.trace);
    }
  }
  record(state, last_kappa);
  result.trace.status = "completed";
  result.final_state = std::move(state);
  return result;
}

}  // namespace

RunResult run(Algorithm algorithm, const ProblemInstance& inst,
              const GraphSequence& graphs, const StepSizeSchedule& schedule,
              long iterations, const ReferenceSolution& ref, const Mat& x0,
              bool store_history) {
  if (graphs.node_count() != inst.num_agents()) {
    throw Error("graph sequence and problem disagree on agent count");
  }
  if (graphs.is_static()) {
    const MixingMatrix w = metropolis_weights(graphs.graph_at(0));
    return run_loop(
        algorithm, inst, [&](long) -> const MixingMatrix& { return w; },
        schedule, iterations, ref, x0, store_history);
  }
  std::optional<MixingMatrix> w;
  return run_loop(
      algorithm, inst,
      [&](long k) -> const MixingMatrix& {
        w.emplace(
            metropolis_weights(graphs.graph_at(static_cast<std::uint64_t>(k))));
        return *w;
      },
      schedule, iterations, ref, x0, store_history);
}

RunResult run(Algorithm algorithm, const ProblemInstance& inst,
              const MixingMatrix& w, const StepSizeSchedule& schedule,
              long iterations, const ReferenceSolution& ref, const Mat& x0,
              bool store_history) {
  if (w.size() != inst.num_agents()) {
    throw Error("mixing matrix and problem disagree on agent count");
  }
  return run_loop(
      algorithm, inst, [&](long) -> const MixingMatrix& { return w; },
      schedule, iterations, ref, x0, store_history);
}

IgdTrace igd_run(const ProblemInstance& inst, const IgdRun& run, const Vec& p0,
                 long iterations, const ReferenceSolution& ref) {
  if (!(run.beta >= 2.0)) throw Error("igd beta must be >= 2");
  if (!(run.eta > 0.0)) throw Error("igd eta must be positive");
  const double cap = 1.0 / ((1.0 + run.eta) * inst.profile().mean_l());
  if (!(run.theta > 0.0) || run.theta > cap * (1.0 + 1e-12)) {
    throw Error("igd step must satisfy theta <= 1/((1+eta) Lbar)");
  }
  const int n = inst.num_agents();
  const int p = inst.dimension();
  if (p0.size() != p) throw Error("p0 has the wrong dimension");

  IgdTrace trace;
  trace.eval_distance.assign(n, {});
  Vec pk = p0;
  for (long k = 0; k <= iterations; ++k) {
    trace.r.push_back((pk - ref.x_star).norm());
    Mat s(n, p);
    if (run.eval_points) {
      s = run.eval_points(k, pk);
      if (s.rows() != n || s.cols() != p) {
        throw Error("eval point provider returned the wrong shape");
      }
    } else {
      s = Vec::Ones(n) * pk.transpose();
    }
    for (int i = 0; i < n; ++i) {
      trace.eval_distance[i].push_back(
          (pk.transpose() - s.row(i)).norm());
    }
    Vec e = run.noise ? run.noise(k) : Vec(Vec::Zero(p));
    if (e.size() != p) throw Error("noise provider returned the wrong shape");
    trace.noise_norm.push_back(e.norm());
    if (k == iterations) break;

    Vec g = Vec::Zero(p);
    for (int i = 0; i < n; ++i) {
      g += inst.gradient(i, s.row(i).transpose());
    }
    g /= static_cast<double>(n);
    pk = pk - run.theta * g + e;
    if (!pk.allFinite()) {
      throw Error("igd iterate became non-finite at iteration " +
                  std::to_string(k + 1));
    }
  }
  return trace;
}

IgdBoundSides igd_bound_sides(const IgdTrace& trace,
                              const SmoothnessProfile& profile, double theta,
                              double beta, double eta, double lambda,
                              std::size_t horizon) {
  const double mu_bar = profile.mean_mu();
  const double lambda_floor =
      std::sqrt(1.0 - theta * mu_bar * beta / (2.0 * (beta + 1.0)));
  if (lambda < lambda_floor * (1.0 - 1e-12) || lambda >= 1.0) {
    throw Error("lambda outside the validity interval of the IGD bound");
  }
  const double n = static_cast<double>(trace.eval_distance.size());
  const ErgodicNormParams params{lambda, horizon};

  IgdBoundSides sides;
  sides.lhs = ergodic_norm(std::span<const double>(trace.r), params);
  const double coeff =
      std::sqrt(profile.max_l() * (1.0 + eta) / (mu_bar * eta) +
                profile.max_mu() / mu_bar * beta) /
      (lambda * std::sqrt(n));
  double dist_sum = 0.0;
  for (const auto& seq : trace.eval_distance) {
    dist_sum += ergodic_norm(std::span<const double>(seq), params);
  }
  sides.eval_term = coeff * dist_sum;
  sides.r0_term = 2.0 * trace.r.front();
  sides.noise_term =
      std::sqrt(3.0 - theta * mu_bar) / (lambda * theta * mu_bar) *
      ergodic_norm(std::span<const double>(trace.noise_norm), params);
  return sides;
}

}  // namespace diging
