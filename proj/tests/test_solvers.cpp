#include "diging/solvers.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "diging/experiment.hpp"
#include "diging/rate_analysis.hpp"
#include "diging/rng.hpp"
#include "doctest.h"

using namespace diging;

namespace {

ProblemInstance two_scalar_quadratics() {
  // f_i(x) = (x - c_i)^2 / 2 with centers 0 and 2.
  ProblemInstance::QuadraticAgent a0{Mat::Identity(1, 1), Vec::Zero(1)};
  ProblemInstance::QuadraticAgent a1{Mat::Identity(1, 1), Vec::Ones(1) * 2.0};
  return ProblemInstance::quadratic({a0, a1});
}

MixingMatrix complete_averaging(int n) {
  return MixingMatrix(Mat::Constant(n, n, 1.0 / static_cast<double>(n)));
}

// Elementwise per-agent reference for one step of either structure.
void step_oracle(bool adapt_then_combine, const Mat& w,
                 const std::vector<double>& alphas,
                 const ProblemInstance& inst, const Mat& x, const Mat& y,
                 Mat& x_next, Mat& y_next) {
  const int n = inst.num_agents();
  const int p = inst.dimension();
  x_next.resize(n, p);
  y_next.resize(n, p);
  Mat g(n, p), g_next(n, p);
  for (int i = 0; i < n; ++i) {
    g.row(i) = inst.gradient(i, x.row(i).transpose()).transpose();
  }
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < p; ++c) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) {
        const double adapted = adapt_then_combine
                                   ? x(j, c) - alphas[j] * y(j, c)
                                   : x(j, c);
        acc += w(i, j) * adapted;
      }
      x_next(i, c) = adapt_then_combine ? acc : acc - alphas[i] * y(i, c);
    }
  }
  for (int i = 0; i < n; ++i) {
    g_next.row(i) = inst.gradient(i, x_next.row(i).transpose()).transpose();
  }
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < p; ++c) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) {
        const double inner = adapt_then_combine
                                 ? y(j, c) + g_next(j, c) - g(j, c)
                                 : y(j, c);
        acc += w(i, j) * inner;
      }
      y_next(i, c) =
          adapt_then_combine ? acc : acc + g_next(i, c) - g(i, c);
    }
  }
}

}  // namespace

TEST_CASE("step updates against the per-agent oracle") {
  const auto inst = make_quadratic_problem(4, 3, 1.0, 2.0, 7);
  const MixingMatrix w = complete_averaging(4);
  const std::vector<double> alphas{0.05, 0.08, 0.03, 0.06};
  Rng rng(8);
  Mat x0(4, 3);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) x0(i, j) = rng.normal();
  }
  SolverState state = initial_state(inst, x0);

  for (bool atc : {true, false}) {
    const SolverState next = atc ? atc_diging_step(state, w, alphas, inst)
                                 : diging_step(state, w, alphas, inst);
    Mat x_ref, y_ref;
    step_oracle(atc, w.weights(), alphas, inst, state.x, state.y, x_ref,
                y_ref);
    CHECK((next.x - x_ref).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((next.y - y_ref).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(next.k == state.k + 1);
  }
}

TEST_CASE("structural difference between the two updates is (I - W) D y") {
  const auto inst = make_quadratic_problem(5, 2, 1.0, 2.0, 9);
  const MixingMatrix w = interpolated_mixing(5, 0.3);
  const std::vector<double> alphas{0.02, 0.05, 0.03, 0.04, 0.01};
  Rng rng(10);
  Mat x0(5, 2);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 2; ++j) x0(i, j) = rng.normal();
  }
  const SolverState state = initial_state(inst, x0);
  const SolverState atc = atc_diging_step(state, w, alphas, inst);
  const SolverState dig = diging_step(state, w, alphas, inst);

  Mat dy = state.y;
  for (int i = 0; i < 5; ++i) dy.row(i) *= alphas[i];
  const Mat expected_gap = dy - w.weights() * dy;  // (I - W) D y
  CHECK((atc.x - dig.x - expected_gap).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("fixed point stays fixed") {
  const auto inst = two_scalar_quadratics();
  const ReferenceSolution ref = solve_reference(inst);
  const MixingMatrix w = complete_averaging(2);
  SolverState state;
  state.x = ref.stacked(2);
  state.prev_grad = inst.stacked_gradient(state.x);
  state.y = Mat::Zero(2, 1);  // consistent: the gradient columns sum to zero

  for (bool atc : {true, false}) {
    const SolverState next = atc
                                 ? atc_diging_step(state, w, {0.5, 0.5}, inst)
                                 : diging_step(state, w, {0.5, 0.5}, inst);
    CHECK((next.x - state.x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((next.y - state.y).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("two-agent averaging step matches the hand computation") {
  const auto inst = two_scalar_quadratics();
  const MixingMatrix w = complete_averaging(2);
  SolverState state = initial_state(inst, Mat::Zero(2, 1));
  // y_0 = (-0, -2); x - 0.5 y = (0, 1); averaging gives both rows 1/2.
  const SolverState next = atc_diging_step(state, w, {0.5, 0.5}, inst);
  CHECK(next.x(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(next.x(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("single agent reduces to centralized gradient descent") {
  ProblemInstance::QuadraticAgent agent;
  agent.q = Eigen::Vector2d(1.0, 2.0).asDiagonal();
  agent.c = Eigen::Vector2d(1.0, -1.0);
  const auto inst = ProblemInstance::quadratic({agent});
  const MixingMatrix w(Mat::Ones(1, 1));
  const double alpha = 0.3;

  Vec gd = Eigen::Vector2d(0.7, 0.4);
  SolverState atc = initial_state(inst, gd.transpose());
  SolverState dig = atc;
  for (int k = 0; k < 100; ++k) {
    gd = gd - alpha * inst.gradient(0, gd);
    atc = atc_diging_step(atc, w, {alpha}, inst);
    dig = diging_step(dig, w, {alpha}, inst);
    CHECK((atc.x.row(0).transpose() - gd).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((dig.x.row(0).transpose() - gd).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("realize_schedule") {
  SUBCASE("constant mode ignores the iteration index") {
    const auto sched = StepSizeSchedule::constant({0.1, 0.2, 0.4});
    const RealizedSteps a = realize_schedule(sched, 0, 3);
    const RealizedSteps b = realize_schedule(sched, 123, 3);
    CHECK(a.alphas == b.alphas);
    CHECK(a.kappa_d == doctest::Approx(4.0).epsilon(1e-15));
  }
  SUBCASE("degenerate interval equals the constant schedule") {
    const auto sched = StepSizeSchedule::perturbed(0.3, 1.0, 1.0, 9);
    const RealizedSteps s = realize_schedule(sched, 5, 4);
    for (double a : s.alphas) CHECK(a == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(s.kappa_d == 1.0);
  }
  SUBCASE("perturbation multipliers average to one") {
    const auto sched = StepSizeSchedule::perturbed(1.0, 0.5, 1.5, 10);
    double sum = 0.0;
    long count = 0;
    for (std::uint64_t k = 0; k < 2000; ++k) {
      for (double a : realize_schedule(sched, k, 12).alphas) {
        sum += a;
        ++count;
      }
    }
    CHECK(sum / static_cast<double>(count) ==
          doctest::Approx(1.0).epsilon(0.02));
  }
  SUBCASE("same (seed, k) realizes identical steps") {
    const auto sched = StepSizeSchedule::perturbed(1.0, 0.5, 1.5, 11);
    CHECK(realize_schedule(sched, 42, 12).alphas ==
          realize_schedule(sched, 42, 12).alphas);
  }
}

TEST_CASE("run: scalar quadratic follows the closed-form recursion") {
  ProblemInstance::QuadraticAgent agent;
  agent.q = Mat::Identity(1, 1) * 2.0;  // f(x) = x^2, minimizer 0.5 c
  agent.c = Vec::Ones(1);
  const auto inst = ProblemInstance::quadratic({agent});
  const ReferenceSolution ref = solve_reference(inst);
  const GraphSequence graphs = GraphSequence::fixed(Graph(1, {}));
  const double alpha = 0.2;
  const RunResult result =
      run(Algorithm::kAtcDiging, inst, graphs,
          StepSizeSchedule::coordinated(alpha), 40, ref, Mat::Ones(1, 1) * 3.0);
  const double mu = 2.0;
  const double r0 = result.trace.rows.front().residual;
  for (const auto& row : result.trace.rows) {
    const double expected =
        std::pow(std::abs(1.0 - alpha * mu), static_cast<double>(row.k)) * r0;
    CHECK(row.residual == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("run: identical seeds give bit-identical traces") {
  const auto inst = make_huber_problem(6, 3, 8, 1.0, 1.0, 21);
  const ReferenceSolution ref = solve_reference(inst, 1e-10);
  const GraphSequence graphs = GraphSequence::time_varying(6, 0.4, 22);
  const auto sched = StepSizeSchedule::perturbed(1e-3, 0.5, 1.5, 23);
  Rng rng(24);
  Mat x0(6, 3);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 3; ++j) x0(i, j) = rng.normal();
  }
  const RunResult a =
      run(Algorithm::kAtcDiging, inst, graphs, sched, 50, ref, x0);
  const RunResult b =
      run(Algorithm::kAtcDiging, inst, graphs, sched, 50, ref, x0);
  REQUIRE(a.trace.rows.size() == b.trace.rows.size());
  for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
    CHECK(a.trace.rows[i].residual == b.trace.rows[i].residual);
    CHECK(a.trace.rows[i].consensus_violation ==
          b.trace.rows[i].consensus_violation);
    CHECK(a.trace.rows[i].kappa_d == b.trace.rows[i].kappa_d);
  }
}

TEST_CASE("run: perturbed schedule heterogeneity near 2.5 for 12 agents") {
  const auto sched = StepSizeSchedule::perturbed(1.0, 0.5, 1.5, 31);
  double sum = 0.0;
  const long iters = 2000;
  for (long k = 0; k < iters; ++k) {
    sum += realize_schedule(sched, static_cast<std::uint64_t>(k), 12).kappa_d;
  }
  CHECK(sum / static_cast<double>(iters) ==
        doctest::Approx(2.5).epsilon(0.12));
}

TEST_CASE("run: tracking conservation and small-gain circle decay") {
  // Ring of six agents, constant coordinated step within the guarantee.
  std::vector<std::pair<int, int>> ring{{0, 1}, {1, 2}, {2, 3},
                                        {3, 4}, {4, 5}, {5, 0}};
  const auto inst = make_quadratic_problem(6, 3, 1.0, 2.0, 41);
  const ReferenceSolution ref = solve_reference(inst);
  const GraphSequence graphs = GraphSequence::fixed(Graph(6, ring));
  const MixingMatrix w = metropolis_weights(graphs.graph_at(0));
  const double delta = w.delta();
  const double alpha = 0.9 * max_stepsize(inst.profile(), delta, 6, 1.0);

  Rng rng(42);
  Mat x0(6, 3);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 3; ++j) x0(i, j) = rng.normal();
  }
  const RunResult result =
      run(Algorithm::kAtcDiging, inst, graphs,
          StepSizeSchedule::coordinated(alpha), 3000, ref, x0);
  CHECK(result.trace.max_tracking_violation <= 1e-10);
  const auto& rows = result.trace.rows;
  CHECK(rows.back().residual < 1e-2 * rows.front().residual);

  // The whole circle of quantities keeps shrinking: compare window maxima
  // over the middle and the tail of the run.
  auto window_max = [&](double TraceRow::*field, std::size_t lo,
                        std::size_t hi) {
    double peak = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      peak = std::max(peak, rows[i].*field);
    }
    return peak;
  };
  const std::size_t quarter = rows.size() / 4;
  for (double TraceRow::*field :
       {&TraceRow::residual, &TraceRow::consensus_violation,
        &TraceRow::tracker_seminorm, &TraceRow::tracker_norm}) {
    const double mid = window_max(field, quarter, 2 * quarter);
    const double late = window_max(field, 3 * quarter, rows.size());
    CHECK(late < 0.5 * mid + 1e-14);
  }
}

TEST_CASE("run: divergence is detected and reported") {
  const auto inst = make_quadratic_problem(3, 2, 1.0, 2.0, 51);
  const ReferenceSolution ref = solve_reference(inst);
  const GraphSequence graphs =
      GraphSequence::fixed(Graph(3, {{0, 1}, {1, 2}, {0, 2}}));
  bool thrown = false;
  try {
    run(Algorithm::kAtcDiging, inst, graphs,
        StepSizeSchedule::coordinated(50.0), 200, ref, Mat::Ones(3, 2));
  } catch (const DivergedError& e) {
    thrown = true;
    CHECK(e.iteration >= 1);
    CHECK(e.partial.status == "diverged");
    CHECK_FALSE(e.partial.rows.empty());
  }
  CHECK(thrown);
}

TEST_CASE("trace CSV round trip") {
  const auto inst = make_quadratic_problem(3, 2, 1.0, 2.0, 61);
  const ReferenceSolution ref = solve_reference(inst);
  const GraphSequence graphs =
      GraphSequence::fixed(Graph(3, {{0, 1}, {1, 2}}));
  const RunResult result =
      run(Algorithm::kAtcDiging, inst, graphs,
          StepSizeSchedule::coordinated(0.05), 25, ref, Mat::Ones(3, 2));
  std::stringstream buffer;
  result.trace.write_csv(buffer);
  const RunTrace reloaded = RunTrace::read_csv(buffer);
  CHECK(result.trace.rows.size() == 26);  // iterations + 1, row k=0 included
  REQUIRE(reloaded.rows.size() == result.trace.rows.size());
  for (std::size_t i = 0; i < reloaded.rows.size(); ++i) {
    CHECK(reloaded.rows[i].k == result.trace.rows[i].k);
    CHECK(reloaded.rows[i].residual == result.trace.rows[i].residual);
    CHECK(reloaded.rows[i].normalized_residual ==
          result.trace.rows[i].normalized_residual);
    CHECK(reloaded.rows[i].consensus_violation ==
          result.trace.rows[i].consensus_violation);
    CHECK(reloaded.rows[i].tracker_seminorm ==
          result.trace.rows[i].tracker_seminorm);
    CHECK(reloaded.rows[i].tracker_norm == result.trace.rows[i].tracker_norm);
    CHECK(reloaded.rows[i].kappa_d == result.trace.rows[i].kappa_d);
  }
}

TEST_CASE("igd: exact oracle follows the scalar recursion") {
  // Two scalar quadratics q = 1 and 3; the mean objective contracts the
  // error by exactly (1 - theta qbar) per step.
  ProblemInstance::QuadraticAgent a0{Mat::Identity(1, 1), Vec::Zero(1)};
  ProblemInstance::QuadraticAgent a1{Mat::Identity(1, 1) * 3.0,
                                     Vec::Ones(1) * 3.0};
  const auto inst = ProblemInstance::quadratic({a0, a1});
  const ReferenceSolution ref = solve_reference(inst);
  const double theta = 0.25;  // = 1/((1+eta) Lbar) with eta = 1, Lbar = 2

  IgdRun igd;
  igd.theta = theta;
  const IgdTrace trace = igd_run(inst, igd, Vec::Ones(1) * 4.0, 60, ref);

  double p = 4.0;
  const double p_star = ref.x_star[0];
  for (std::size_t k = 0; k < trace.r.size(); ++k) {
    CHECK(trace.r[k] ==
          doctest::Approx(std::abs(p - p_star)).epsilon(1e-12));
    p = p - theta * 0.5 * ((p - 0.0) + (3.0 * p - 3.0));
  }
  for (std::size_t k = 1; k < trace.r.size(); ++k) {
    CHECK(trace.r[k] <= trace.r[k - 1] * (1.0 + 1e-12));
  }
  // Coarse closed-form envelope with mu_bar = 2.
  const double mu_bar = inst.profile().mean_mu();
  const double k_last = static_cast<double>(trace.r.size() - 1);
  CHECK(trace.r.back() <= std::pow(1.0 - theta * mu_bar, k_last / 2.0) *
                              trace.r.front() * (1.0 + 1e-9));
}

TEST_CASE("igd: error bound with exact evaluation reduces to 2 r0") {
  const auto inst = make_quadratic_problem(3, 2, 1.0, 2.0, 71);
  const ReferenceSolution ref = solve_reference(inst);
  const double eta = 1.0;
  const double theta = 1.0 / ((1.0 + eta) * inst.profile().mean_l());
  IgdRun igd;
  igd.theta = theta;
  igd.eta = eta;
  igd.beta = 2.0;
  const IgdTrace trace = igd_run(inst, igd, Vec::Ones(2) * 3.0, 200, ref);
  const double mu_bar = inst.profile().mean_mu();
  const double lambda =
      std::sqrt(1.0 - theta * mu_bar * igd.beta / (2.0 * (igd.beta + 1.0)));
  const IgdBoundSides sides =
      igd_bound_sides(trace, inst.profile(), theta, igd.beta, igd.eta, lambda,
                      trace.r.size() - 1);
  CHECK(sides.eval_term == 0.0);
  CHECK(sides.noise_term == 0.0);
  CHECK(sides.lhs <= 2.0 * trace.r.front() + 1e-9);
}

TEST_CASE("igd: geometric noise keeps the bound valid") {
  const auto inst = make_quadratic_problem(3, 2, 1.0, 2.0, 81);
  const ReferenceSolution ref = solve_reference(inst);
  const double eta = 1.0;
  const double theta = 1.0 / ((1.0 + eta) * inst.profile().mean_l());
  const double mu_bar = inst.profile().mean_mu();
  const double beta = 2.0;
  const double lambda =
      std::sqrt(1.0 - theta * mu_bar * beta / (2.0 * (beta + 1.0)));

  IgdRun igd;
  igd.theta = theta;
  igd.eta = eta;
  igd.beta = beta;
  igd.noise = [lambda](long k) {
    Vec e = Vec::Zero(2);
    e[0] = 0.1 * std::pow(lambda, static_cast<double>(k));
    return e;
  };
  igd.eval_points = [lambda](long k, const Vec& p) {
    Mat s(3, 2);
    for (int i = 0; i < 3; ++i) {
      s.row(i) = p.transpose();
      s(i, 1) += 0.05 * static_cast<double>(i + 1) *
                 std::pow(0.9 * lambda, static_cast<double>(k));
    }
    return s;
  };
  const IgdTrace trace = igd_run(inst, igd, Vec::Ones(2) * 3.0, 300, ref);
  const IgdBoundSides sides = igd_bound_sides(
      trace, inst.profile(), theta, beta, eta, lambda, trace.r.size() - 1);
  CHECK(sides.eval_term > 0.0);
  CHECK(sides.noise_term > 0.0);
  CHECK(sides.lhs <= sides.rhs() + 1e-9);
}

TEST_CASE("igd: invalid parameters are rejected") {
  const auto inst = make_quadratic_problem(2, 2, 1.0, 2.0, 91);
  const ReferenceSolution ref = solve_reference(inst);
  IgdRun igd;
  igd.theta = 10.0;  // violates theta <= 1/((1+eta) Lbar)
  CHECK_THROWS_AS(igd_run(inst, igd, Vec::Zero(2), 5, ref), Error);
  igd.theta = 0.1;
  igd.beta = 1.0;
  CHECK_THROWS_AS(igd_run(inst, igd, Vec::Zero(2), 5, ref), Error);
}
