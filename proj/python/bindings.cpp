#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "diging/experiment.hpp"
#include "diging/network.hpp"
#include "diging/objectives.hpp"
#include "diging/rate_analysis.hpp"
#include "diging/solvers.hpp"

namespace py = pybind11;
using namespace diging;

namespace {

NormKind parse_norm_kind(const std::string& kind) {
  if (kind == "frobenius") return NormKind::kFrobenius;
  if (kind == "consensus") return NormKind::kConsensus;
  if (kind == "average") return NormKind::kAverage;
  throw Error("norm kind must be frobenius, consensus or average");
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "atc_diging") return Algorithm::kAtcDiging;
  if (name == "diging") return Algorithm::kDiging;
  throw Error("algorithm must be atc_diging or diging");
}

std::vector<double> column(const RunTrace& trace, double TraceRow::*field) {
  std::vector<double> out;
  out.reserve(trace.rows.size());
  for (const auto& row : trace.rows) out.push_back(row.*field);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Decentralized gradient-tracking optimization with uncoordinated "
      "step-sizes";

  py::register_exception<Error>(m, "DigingError");

  // norms
  m.def("frobenius_norm", &frobenius_norm, py::arg("m"));
  m.def("consensus_seminorm", &consensus_seminorm, py::arg("m"));
  m.def("average_seminorm", &average_seminorm, py::arg("m"));
  m.def(
      "ergodic_norm",
      [](const std::vector<Mat>& seq, double lam, std::size_t horizon,
         const std::string& kind) {
        return ergodic_norm(std::span<const Mat>(seq), {lam, horizon},
                            parse_norm_kind(kind));
      },
      py::arg("seq"), py::arg("lam"), py::arg("horizon"),
      py::arg("kind") = "frobenius");
  m.def(
      "ergodic_norm_scalar",
      [](const std::vector<double>& seq, double lam, std::size_t horizon) {
        return ergodic_norm(std::span<const double>(seq), {lam, horizon});
      },
      py::arg("seq"), py::arg("lam"), py::arg("horizon"));

  // network
  py::class_<Graph>(m, "Graph")
      .def(py::init<int, std::vector<std::pair<int, int>>>(), py::arg("n"),
           py::arg("edges"))
      .def_property_readonly("n", &Graph::node_count)
      .def_property_readonly("edges", &Graph::edges)
      .def("degrees", &Graph::degrees)
      .def("connected", &Graph::connected)
      .def("to_text",
           [](const Graph& g) {
             std::ostringstream out;
             g.save(out);
             return out.str();
           })
      .def_static("from_text",
                  [](const std::string& text) {
                    std::istringstream in(text);
                    return Graph::load(in);
                  })
      .def("__eq__", [](const Graph& a, const Graph& b) { return a == b; });

  py::class_<MixingMatrix>(m, "MixingMatrix")
      .def(py::init<Mat>(), py::arg("weights"))
      .def_property_readonly("weights", &MixingMatrix::weights)
      .def_property_readonly("n", &MixingMatrix::size)
      .def("delta", &MixingMatrix::delta);

  m.def("metropolis_weights", &metropolis_weights, py::arg("graph"));
  m.def("contraction_factor", &contraction_factor, py::arg("w"));
  m.def("verify_contraction", &verify_contraction, py::arg("w"),
        py::arg("trials"), py::arg("seed"));
  m.def("interpolated_mixing", &interpolated_mixing, py::arg("n"),
        py::arg("delta"));

  py::class_<GraphSequence>(m, "GraphSequence")
      .def_static("fixed", &GraphSequence::fixed, py::arg("graph"))
      .def_static("time_varying", &GraphSequence::time_varying, py::arg("n"),
                  py::arg("edge_probability"), py::arg("seed"))
      .def_property_readonly("is_static", &GraphSequence::is_static)
      .def("graph_at", &GraphSequence::graph_at, py::arg("k"));

  // objectives
  py::class_<SmoothnessProfile>(m, "SmoothnessProfile")
      .def_readonly("per_agent_L", &SmoothnessProfile::per_agent_l)
      .def_readonly("per_agent_mu", &SmoothnessProfile::per_agent_mu)
      .def_property_readonly("L", &SmoothnessProfile::max_l)
      .def_property_readonly("L_bar", &SmoothnessProfile::mean_l)
      .def_property_readonly("mu_bar", &SmoothnessProfile::mean_mu)
      .def_property_readonly("mu_hat", &SmoothnessProfile::max_mu)
      .def_property_readonly("kappa_bar", &SmoothnessProfile::kappa_bar);

  py::class_<ProblemInstance>(m, "ProblemInstance")
      .def_property_readonly("n", &ProblemInstance::num_agents)
      .def_property_readonly("p", &ProblemInstance::dimension)
      .def_property_readonly("kind",
                             [](const ProblemInstance& inst) -> std::string {
                               switch (inst.kind()) {
                                 case ProblemKind::kQuadratic:
                                   return "quadratic";
                                 case ProblemKind::kLeastSquares:
                                   return "least_squares";
                                 case ProblemKind::kHuber:
                                   return "huber";
                               }
                               return "";
                             })
      .def_property_readonly("profile", &ProblemInstance::profile,
                             py::return_value_policy::reference_internal)
      .def("value", &ProblemInstance::value, py::arg("agent"),
           py::arg("point"))
      .def("gradient", &ProblemInstance::gradient, py::arg("agent"),
           py::arg("point"))
      .def("stacked_gradient", &ProblemInstance::stacked_gradient,
           py::arg("x"))
      .def("to_text",
           [](const ProblemInstance& inst) {
             std::ostringstream out;
             inst.save(out);
             return out.str();
           })
      .def_static("from_text", [](const std::string& text) {
        std::istringstream in(text);
        return ProblemInstance::load(in);
      });

  m.def("make_quadratic_problem", &make_quadratic_problem, py::arg("agents"),
        py::arg("dimension"), py::arg("mu"), py::arg("L"), py::arg("seed"));
  m.def("make_least_squares_problem", &make_least_squares_problem,
        py::arg("agents"), py::arg("dimension"), py::arg("rows_per_agent"),
        py::arg("seed"));
  m.def("make_huber_problem", &make_huber_problem, py::arg("agents"),
        py::arg("dimension"), py::arg("rows_per_agent"), py::arg("threshold"),
        py::arg("ridge"), py::arg("seed"));

  py::class_<ReferenceSolution>(m, "ReferenceSolution")
      .def_readonly("x_star", &ReferenceSolution::x_star)
      .def_readonly("achieved_gradient_norm",
                    &ReferenceSolution::achieved_gradient_norm)
      .def("stacked", &ReferenceSolution::stacked, py::arg("n"));

  m.def("solve_reference", &solve_reference, py::arg("problem"),
        py::arg("tol") = 1e-12);

  // solvers
  py::class_<StepSizeSchedule>(m, "StepSizeSchedule")
      .def_static("constant", &StepSizeSchedule::constant, py::arg("alphas"))
      .def_static("coordinated", &StepSizeSchedule::coordinated,
                  py::arg("alpha"))
      .def_static("perturbed", &StepSizeSchedule::perturbed, py::arg("base"),
                  py::arg("lo"), py::arg("hi"), py::arg("seed"));

  m.def(
      "realize_schedule",
      [](const StepSizeSchedule& schedule, std::uint64_t k, int n) {
        const RealizedSteps steps = realize_schedule(schedule, k, n);
        return py::make_tuple(steps.alphas, steps.kappa_d);
      },
      py::arg("schedule"), py::arg("k"), py::arg("n"));

  py::class_<RunTrace>(m, "RunTrace")
      .def_property_readonly("status",
                             [](const RunTrace& t) { return t.status; })
      .def_property_readonly(
          "max_tracking_violation",
          [](const RunTrace& t) { return t.max_tracking_violation; })
      .def("mean_kappa_d", &RunTrace::mean_kappa_d)
      .def("__len__", [](const RunTrace& t) { return t.rows.size(); })
      .def_property_readonly("k",
                             [](const RunTrace& t) {
                               std::vector<long> out;
                               for (const auto& r : t.rows)
                                 out.push_back(r.k);
                               return out;
                             })
      .def_property_readonly(
          "residual",
          [](const RunTrace& t) { return column(t, &TraceRow::residual); })
      .def_property_readonly("normalized_residual",
                             [](const RunTrace& t) {
                               return column(t, &TraceRow::normalized_residual);
                             })
      .def_property_readonly("consensus_violation",
                             [](const RunTrace& t) {
                               return column(t, &TraceRow::consensus_violation);
                             })
      .def_property_readonly("tracker_seminorm",
                             [](const RunTrace& t) {
                               return column(t, &TraceRow::tracker_seminorm);
                             })
      .def_property_readonly(
          "tracker_norm",
          [](const RunTrace& t) { return column(t, &TraceRow::tracker_norm); })
      .def_property_readonly(
          "kappa_d",
          [](const RunTrace& t) { return column(t, &TraceRow::kappa_d); })
      .def("to_csv", [](const RunTrace& t) {
        std::ostringstream out;
        t.write_csv(out);
        return out.str();
      });

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("trace", &RunResult::trace)
      .def_readonly("x_history", &RunResult::x_history)
      .def_readonly("y_history", &RunResult::y_history);

  m.def(
      "run",
      [](const std::string& algorithm, const ProblemInstance& inst,
         const GraphSequence& graphs, const StepSizeSchedule& schedule,
         long iterations, const ReferenceSolution& ref, const Mat& x0,
         bool store_history) {
        return run(parse_algorithm(algorithm), inst, graphs, schedule,
                   iterations, ref, x0, store_history);
      },
      py::arg("algorithm"), py::arg("problem"), py::arg("graphs"),
      py::arg("schedule"), py::arg("iterations"), py::arg("reference"),
      py::arg("x0"), py::arg("store_history") = false);
  m.def(
      "run_static",
      [](const std::string& algorithm, const ProblemInstance& inst,
         const MixingMatrix& w, const StepSizeSchedule& schedule,
         long iterations, const ReferenceSolution& ref, const Mat& x0,
         bool store_history) {
        return run(parse_algorithm(algorithm), inst, w, schedule, iterations,
                   ref, x0, store_history);
      },
      py::arg("algorithm"), py::arg("problem"), py::arg("w"),
      py::arg("schedule"), py::arg("iterations"), py::arg("reference"),
      py::arg("x0"), py::arg("store_history") = false);

  // inexact gradient descent harness
  py::class_<IgdTrace>(m, "IgdTrace")
      .def_readonly("r", &IgdTrace::r)
      .def_readonly("eval_distance", &IgdTrace::eval_distance)
      .def_readonly("noise_norm", &IgdTrace::noise_norm);

  m.def(
      "igd_run",
      [](const ProblemInstance& inst, double theta, double beta, double eta,
         const Vec& p0, long iterations, const ReferenceSolution& ref,
         const std::function<Mat(long, const Vec&)>& eval_points,
         const std::function<Vec(long)>& noise) {
        IgdRun igd;
        igd.theta = theta;
        igd.beta = beta;
        igd.eta = eta;
        igd.eval_points = eval_points;
        igd.noise = noise;
        return igd_run(inst, igd, p0, iterations, ref);
      },
      py::arg("problem"), py::arg("theta"), py::arg("beta"), py::arg("eta"),
      py::arg("p0"), py::arg("iterations"), py::arg("reference"),
      py::arg("eval_points") = nullptr, py::arg("noise") = nullptr);
  m.def(
      "igd_bound_sides",
      [](const IgdTrace& trace, const SmoothnessProfile& profile, double theta,
         double beta, double eta, double lam, std::size_t horizon) {
        const IgdBoundSides sides =
            igd_bound_sides(trace, profile, theta, beta, eta, lam, horizon);
        return py::make_tuple(sides.lhs, sides.rhs());
      },
      py::arg("trace"), py::arg("profile"), py::arg("theta"), py::arg("beta"),
      py::arg("eta"), py::arg("lam"), py::arg("horizon"));

  // rate analysis
  m.def("max_stepsize", &max_stepsize, py::arg("profile"), py::arg("delta"),
        py::arg("n"), py::arg("kappa_d"));
  m.def("guaranteed_rate", &guaranteed_rate, py::arg("profile"), py::arg("delta"),
        py::arg("n"), py::arg("kappa_d"), py::arg("alpha_max"));
  m.def(
      "arrow_gains",
      [](double l, double delta, double lam, double alpha_max) {
        const ArrowGains g = arrow_gains(l, delta, lam, alpha_max);
        return py::make_tuple(g.gamma11, g.gamma12, g.gamma2);
      },
      py::arg("L"), py::arg("delta"), py::arg("lam"), py::arg("alpha_max"));
  m.def(
      "closing_gains",
      [](const SmoothnessProfile& profile, double lam, double alpha_max,
         double kappa_d, double beta, double eta) {
        const ClosingGains c =
            closing_gains(profile, lam, alpha_max, kappa_d, beta, eta);
        return py::make_tuple(c.gamma31, c.gamma32);
      },
      py::arg("profile"), py::arg("lam"), py::arg("alpha_max"),
      py::arg("kappa_d"), py::arg("beta"), py::arg("eta"));
  m.def(
      "small_gain_bound",
      [](const std::vector<double>& gains,
         const std::vector<double>& offsets) {
        return small_gain_bound(gains, offsets);
      },
      py::arg("gains"), py::arg("offsets"));
  m.def(
      "complexity_comparison",
      [](const SmoothnessProfile& profile, double delta, int n,
         double epsilon) {
        const ComplexityComparison cmp =
            complexity_comparison(profile, delta, n, epsilon);
        return py::make_tuple(cmp.k_diging, cmp.k_atc, cmp.lambda_diging,
                              cmp.lambda_atc);
      },
      py::arg("profile"), py::arg("delta"), py::arg("n"), py::arg("epsilon"));
  py::class_<GainLedger>(m, "GainLedger")
      .def_readonly("gamma11", &GainLedger::gamma11)
      .def_readonly("gamma12", &GainLedger::gamma12)
      .def_readonly("gamma2", &GainLedger::gamma2)
      .def_readonly("gamma31", &GainLedger::gamma31)
      .def_readonly("gamma32", &GainLedger::gamma32)
      .def_readonly("product", &GainLedger::product)
      .def_readonly("feasible", &GainLedger::feasible);

  m.def(
      "gain_ledger",
      [](const SmoothnessProfile& profile, double delta, int n, double kappa_d,
         double lam, double alpha_max, double beta, double eta) {
        RateInputs inputs;
        inputs.profile = profile;
        inputs.delta = delta;
        inputs.n = n;
        inputs.kappa_d = kappa_d;
        inputs.lambda = lam;
        inputs.alpha_max = alpha_max;
        inputs.beta = beta;
        inputs.eta = eta;
        return gain_ledger(inputs);
      },
      py::arg("profile"), py::arg("delta"), py::arg("n"), py::arg("kappa_d"),
      py::arg("lam"), py::arg("alpha_max"), py::arg("beta"), py::arg("eta"));

  py::class_<ArrowCheck>(m, "ArrowCheck")
      .def_readonly("lhs", &ArrowCheck::lhs)
      .def_readonly("gain", &ArrowCheck::gain)
      .def_readonly("rhs_norm", &ArrowCheck::rhs_norm)
      .def_readonly("omega_closed", &ArrowCheck::omega_closed)
      .def_readonly("omega_empirical", &ArrowCheck::omega_empirical)
      .def_readonly("margin", &ArrowCheck::margin);

  py::class_<ArrowReport>(m, "ArrowReport")
      .def_readonly("residual_to_tracker_seminorm",
                    &ArrowReport::residual_to_tracker_seminorm)
      .def_readonly("residual_to_tracker_average",
                    &ArrowReport::residual_to_tracker_average)
      .def_readonly("tracker_split", &ArrowReport::tracker_split)
      .def_readonly("tracker_to_consensus", &ArrowReport::tracker_to_consensus);

  m.def("verify_small_gain_arrows", &verify_small_gain_arrows,
        py::arg("result"), py::arg("reference"), py::arg("profile"),
        py::arg("delta"), py::arg("alpha_max"), py::arg("lam"),
        py::arg("horizon"));

  m.def(
      "check_rate_empirically",
      [](const RunTrace& trace, double lam) {
        const RateCheck check = check_rate_empirically(trace, lam);
        return py::make_tuple(check.c, check.holds);
      },
      py::arg("trace"), py::arg("lam"));
  m.def(
      "fit_log_tail",
      [](const RunTrace& trace) {
        const TailFit fit = fit_log_tail(trace);
        return py::make_tuple(fit.slope, fit.intercept, fit.r_squared);
      },
      py::arg("trace"));

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
