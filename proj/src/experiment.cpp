#include "diging/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "diging/rng.hpp"
#include "json.hpp"

namespace diging {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (key == "notes") continue;
    if (!allowed.count(key)) {
      throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
  }
}

const json& require(const json& j, const std::string& key,
                    const std::string& where) {
  if (!j.contains(key)) {
    throw ConfigError("missing required key \"" + key + "\" in " + where);
  }
  return j.at(key);
}

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path.string() + ": " +
                      e.what());
  }
}

ProblemSpec parse_problem(const json& j) {
  check_keys(j,
             {"kind", "seed", "agents", "dimension", "rows_per_agent", "mu",
              "L", "huber_threshold", "ridge", "file"},
             "problem");
  ProblemSpec spec;
  if (j.contains("file")) {
    spec.file = j.at("file").get<std::string>();
    return spec;
  }
  const std::string kind = require(j, "kind", "problem").get<std::string>();
  if (kind == "quadratic") {
    spec.kind = ProblemKind::kQuadratic;
  } else if (kind == "least_squares") {
    spec.kind = ProblemKind::kLeastSquares;
  } else if (kind == "huber") {
    spec.kind = ProblemKind::kHuber;
  } else {
    throw ConfigError("unknown problem kind \"" + kind + "\"");
  }
  spec.seed = require(j, "seed", "problem").get<std::uint64_t>();
  spec.agents = require(j, "agents", "problem").get<int>();
  spec.dimension = require(j, "dimension", "problem").get<int>();
  if (spec.agents < 1 || spec.dimension < 1) {
    throw ConfigError("problem needs agents >= 1 and dimension >= 1");
  }
  spec.rows_per_agent = j.value("rows_per_agent", spec.rows_per_agent);
  spec.mu = j.value("mu", spec.mu);
  spec.l = j.value("L", spec.l);
  spec.huber_threshold = j.value("huber_threshold", spec.huber_threshold);
  spec.ridge = j.value("ridge", spec.ridge);
  return spec;
}

NetworkSpec parse_network(const json& j) {
  check_keys(j, {"mode", "edges", "edge_list_file", "edge_probability", "seed"},
             "network");
  NetworkSpec spec;
  const std::string mode = require(j, "mode", "network").get<std::string>();
  if (mode == "static") {
    spec.time_varying = false;
    if (j.contains("edge_list_file")) {
      spec.edge_list_file = j.at("edge_list_file").get<std::string>();
    } else {
      for (const auto& e : require(j, "edges", "network")) {
        if (!e.is_array() || e.size() != 2) {
          throw ConfigError("each edge must be a pair [i, j]");
        }
        spec.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
      }
    }
  } else if (mode == "time_varying") {
    spec.time_varying = true;
    spec.edge_probability =
        require(j, "edge_probability", "network").get<double>();
    spec.seed = require(j, "seed", "network").get<std::uint64_t>();
  } else {
    throw ConfigError("network mode must be \"static\" or \"time_varying\"");
  }
  return spec;
}

ScheduleSpec parse_schedule(const json& j) {
  check_keys(j, {"mode", "alphas", "base", "interval", "seed"}, "schedule");
  ScheduleSpec spec;
  const std::string mode = require(j, "mode", "schedule").get<std::string>();
  auto parse_base = [&](bool required) {
    if (!j.contains("base")) {
      if (required) throw ConfigError("schedule needs \"base\"");
      return;
    }
    const auto& b = j.at("base");
    if (b.is_string()) {
      if (b.get<std::string>() != "auto_half_max") {
        throw ConfigError("schedule base must be a number or auto_half_max");
      }
      spec.base_auto = true;
    } else {
      spec.base = b.get<double>();
    }
  };
  if (mode == "constant") {
    spec.mode = StepSizeSchedule::Mode::kConstant;
    if (j.contains("alphas")) {
      spec.alphas = j.at("alphas").get<std::vector<double>>();
    } else {
      parse_base(true);
    }
  } else if (mode == "perturbed") {
    spec.mode = StepSizeSchedule::Mode::kPerturbed;
    parse_base(true);
    const auto& interval = require(j, "interval", "schedule");
    if (!interval.is_array() || interval.size() != 2) {
      throw ConfigError("schedule interval must be [lo, hi]");
    }
    spec.lo = interval.at(0).get<double>();
    spec.hi = interval.at(1).get<double>();
    spec.seed = require(j, "seed", "schedule").get<std::uint64_t>();
  } else {
    throw ConfigError("schedule mode must be \"constant\" or \"perturbed\"");
  }
  return spec;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const json j = parse_file(path);
  check_keys(j,
             {"problem", "network", "algorithms", "schedule", "iterations",
              "master_seed", "output_dir", "x0", "reference_tol"},
             "config");
  ExperimentConfig config;
  config.problem = parse_problem(require(j, "problem", "config"));
  config.network = parse_network(require(j, "network", "config"));
  for (const auto& name : require(j, "algorithms", "config")) {
    const std::string s = name.get<std::string>();
    if (s == "atc_diging") {
      config.algorithms.push_back(Algorithm::kAtcDiging);
    } else if (s == "diging") {
      config.algorithms.push_back(Algorithm::kDiging);
    } else {
      throw ConfigError("unknown algorithm \"" + s + "\"");
    }
  }
  if (config.algorithms.empty()) {
    throw ConfigError("at least one algorithm is required");
  }
  config.schedule = parse_schedule(require(j, "schedule", "config"));
  config.iterations = require(j, "iterations", "config").get<long>();
  if (config.iterations < 1) throw ConfigError("iterations must be >= 1");
  config.master_seed = require(j, "master_seed", "config").get<std::uint64_t>();
  config.output_dir = require(j, "output_dir", "config").get<std::string>();
  const std::string x0 = j.value("x0", std::string("normal"));
  if (x0 == "normal") {
    config.x0_mode = X0Mode::kNormal;
  } else if (x0 == "zero") {
    config.x0_mode = X0Mode::kZero;
  } else {
    throw ConfigError("x0 must be \"normal\" or \"zero\"");
  }
  config.reference_tol = j.value("reference_tol", config.reference_tol);
  return config;
}

ProblemInstance build_problem(const ProblemSpec& spec) {
  if (spec.file) {
    std::ifstream in(*spec.file);
    if (!in) throw ConfigError("cannot open problem file " + *spec.file);
    return ProblemInstance::load(in);
  }
  switch (spec.kind) {
    case ProblemKind::kQuadratic:
      return make_quadratic_problem(spec.agents, spec.dimension, spec.mu,
                                    spec.l, spec.seed);
    case ProblemKind::kLeastSquares:
      return make_least_squares_problem(spec.agents, spec.dimension,
                                        spec.rows_per_agent, spec.seed);
    case ProblemKind::kHuber:
      return make_huber_problem(spec.agents, spec.dimension,
                                spec.rows_per_agent, spec.huber_threshold,
                                spec.ridge, spec.seed);
  }
  throw ConfigError("unreachable problem kind");
}

GraphSequence build_graph_sequence(const NetworkSpec& spec, int agents) {
  if (spec.time_varying) {
    return GraphSequence::time_varying(agents, spec.edge_probability,
                                       spec.seed);
  }
  if (spec.edge_list_file) {
    std::ifstream in(*spec.edge_list_file);
    if (!in) {
      throw ConfigError("cannot open edge list file " + *spec.edge_list_file);
    }
    Graph g = Graph::load(in);
    if (g.node_count() != agents) {
      throw ConfigError("edge list node count does not match the problem");
    }
    return GraphSequence::fixed(std::move(g));
  }
  return GraphSequence::fixed(Graph(agents, spec.edges));
}

StepSizeSchedule build_schedule(const ScheduleSpec& spec,
                                const SmoothnessProfile& profile,
                                const GraphSequence& graphs,
                                double* resolved_base) {
  double base = spec.base.value_or(0.0);
  if (spec.base_auto) {
    // Matched static surrogate: the sequence's k=0 graph with a coordinated
    // schedule. Half its admissible maximum keeps the preset conservative.
    const double delta = metropolis_weights(graphs.graph_at(0)).delta();
    base = 0.5 * max_stepsize(profile, delta, graphs.node_count(), 1.0);
  }
  if (resolved_base) *resolved_base = base;
  if (spec.mode == StepSizeSchedule::Mode::kPerturbed) {
    return StepSizeSchedule::perturbed(base, spec.lo, spec.hi, spec.seed);
  }
  if (!spec.alphas.empty()) {
    return StepSizeSchedule::constant(spec.alphas);
  }
  return StepSizeSchedule::coordinated(base);
}

std::string algorithm_name(Algorithm a) {
  return a == Algorithm::kAtcDiging ? "atc_diging" : "diging";
}

void write_summary_csv(std::span<const SummaryRow> rows, std::ostream& out) {
  out << "algorithm,seed,iterations,status,final_residual,"
         "final_normalized_residual,measured_rate,theory_lambda,mean_kappa_D,"
         "tail_r2,max_tracking_violation,base_alpha\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.algorithm << ',' << r.seed << ',' << r.iterations << ','
        << r.status << ',' << r.final_residual << ','
        << r.final_normalized_residual << ',' << r.measured_rate << ','
        << r.theory_lambda << ',' << r.mean_kappa_d << ',' << r.tail_r_squared
        << ',' << r.max_tracking_violation << ',' << r.base_alpha << '\n';
  }
}

std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("empty summary file");
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    SummaryRow r;
    std::string cell;
    auto next = [&] {
      if (!std::getline(cells, cell, ',')) {
        throw Error("malformed summary row: " + line);
      }
      return cell;
    };
    r.algorithm = next();
    r.seed = std::stoull(next());
    r.iterations = std::stol(next());
    r.status = next();
    r.final_residual = std::stod(next());
    r.final_normalized_residual = std::stod(next());
    r.measured_rate = std::stod(next());
    r.theory_lambda = std::stod(next());
    r.mean_kappa_d = std::stod(next());
    r.tail_r_squared = std::stod(next());
    r.max_tracking_violation = std::stod(next());
    r.base_alpha = std::stod(next());
    rows.push_back(std::move(r));
  }
  return rows;
}

MixingMatrix interpolated_mixing(int n, double delta) {
  if (n < 1) throw Error("need at least one node");
  if (delta < 0.0 || delta >= 1.0) throw Error("delta must lie in [0,1)");
  Mat w = Mat::Constant(n, n, (1.0 - delta) / static_cast<double>(n));
  w.diagonal().array() += delta;
  return MixingMatrix(std::move(w));
}

namespace {

Mat make_x0(X0Mode mode, int n, int p, std::uint64_t master_seed) {
  if (mode == X0Mode::kZero) return Mat::Zero(n, p);
  Rng rng = Rng::derive(master_seed, 0);
  Mat x0(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x0(i, j) = rng.normal();
  }
  return x0;
}

}  // namespace

TailFit measured_tail_fit(const RunTrace& trace) {
  // Restrict to rows above the numerical floor, so flat machine noise does
  // not pollute the measured rate.
  std::size_t last = trace.rows.size() - 1;
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    if (trace.rows[i].normalized_residual < 1e-11 &&
        trace.rows[i].normalized_residual > 0.0) {
      last = i;
      break;
    }
  }
  if (last < 2) last = trace.rows.size() - 1;
  return fit_log_tail(trace, last / 2, last);
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  const fs::path out_dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  {
    std::ofstream probe(out_dir / ".write_probe");
    if (!probe) {
      throw ConfigError("output directory is not writable: " +
                        out_dir.string());
    }
  }
  fs::remove(out_dir / ".write_probe", ec);

  const ProblemInstance problem = build_problem(config.problem);
  const GraphSequence graphs =
      build_graph_sequence(config.network, problem.num_agents());
  double resolved_base = 0.0;
  const StepSizeSchedule schedule =
      build_schedule(config.schedule, problem.profile(), graphs,
                     &resolved_base);
  const ReferenceSolution ref =
      solve_reference(problem, config.reference_tol);
  const Mat x0 = make_x0(config.x0_mode, problem.num_agents(),
                         problem.dimension(), config.master_seed);

  {
    std::ofstream out(out_dir / "problem.txt");
    problem.save(out);
  }
  {
    std::ofstream out(out_dir / "network.txt");
    graphs.graph_at(0).save(out);
  }

  // Theory applies only to static graphs with constant step-sizes.
  double theory_lambda = kNaN;
  if (graphs.is_static() &&
      schedule.mode == StepSizeSchedule::Mode::kConstant) {
    const RealizedSteps steps =
        realize_schedule(schedule, 0, problem.num_agents());
    const double delta = metropolis_weights(graphs.graph_at(0)).delta();
    try {
      theory_lambda =
          guaranteed_rate(problem.profile(), delta, problem.num_agents(),
                          steps.kappa_d, steps.alpha_max);
    } catch (const Error&) {
      theory_lambda = kNaN;
    }
  }

  ExperimentOutput output;
  std::vector<RunTrace> traces;
  std::vector<std::string> names;
  for (Algorithm algorithm : config.algorithms) {
    SummaryRow row;
    row.algorithm = algorithm_name(algorithm);
    row.seed = config.master_seed;
    row.base_alpha = resolved_base;
    row.theory_lambda = theory_lambda;
    RunTrace trace;
    try {
      RunResult result = run(algorithm, problem, graphs, schedule,
                             config.iterations, ref, x0);
      trace = std::move(result.trace);
      row.status = trace.status;
    } catch (const DivergedError& e) {
      trace = e.partial;
      row.status = "diverged";
      output.any_diverged = true;
    }
    row.iterations =
        trace.rows.empty() ? 0 : trace.rows.back().k;
    if (!trace.rows.empty()) {
      row.final_residual = trace.rows.back().residual;
      row.final_normalized_residual = trace.rows.back().normalized_residual;
      const TailFit fit = measured_tail_fit(trace);
      row.tail_r_squared = fit.r_squared;
      row.measured_rate = std::exp(fit.slope);
    }
    row.mean_kappa_d = trace.mean_kappa_d();
    row.max_tracking_violation = trace.max_tracking_violation;

    const fs::path trace_path =
        out_dir / ("trace_" + row.algorithm + "_seed" +
                   std::to_string(config.master_seed) + ".csv");
    {
      std::ofstream out(trace_path);
      trace.write_csv(out);
    }
    output.trace_files.push_back(trace_path);
    output.rows.push_back(std::move(row));
    names.push_back(algorithm_name(algorithm));
    traces.push_back(std::move(trace));
  }

  output.summary_file = out_dir / "summary.csv";
  {
    std::ofstream out(output.summary_file);
    write_summary_csv(output.rows, out);
  }
  output.plot_file = out_dir / "residuals.svg";
  {
    std::ofstream out(output.plot_file);
    emit_plot(traces, names, out);
  }
  return output;
}

BoundsConfig load_bounds_config(const std::filesystem::path& path) {
  const json j = parse_file(path);
  check_keys(j,
             {"agents", "dimension", "mu", "L", "problem_seed", "master_seed",
              "deltas", "kappa_ds", "alpha_fractions", "iterations", "epsilon",
              "complexity", "head_to_head", "output_dir"},
             "bounds config");
  BoundsConfig config;
  config.agents = require(j, "agents", "bounds").get<int>();
  config.dimension = require(j, "dimension", "bounds").get<int>();
  if (config.dimension < 2) {
    throw ConfigError("bounds suite needs dimension >= 2 so the quadratic "
                      "spectrum can realize both mu and L");
  }
  config.mu = require(j, "mu", "bounds").get<double>();
  config.l = require(j, "L", "bounds").get<double>();
  config.problem_seed = require(j, "problem_seed", "bounds").get<std::uint64_t>();
  config.master_seed = require(j, "master_seed", "bounds").get<std::uint64_t>();
  config.deltas = require(j, "deltas", "bounds").get<std::vector<double>>();
  config.kappa_ds =
      require(j, "kappa_ds", "bounds").get<std::vector<double>>();
  config.alpha_fractions =
      require(j, "alpha_fractions", "bounds").get<std::vector<double>>();
  config.iterations = require(j, "iterations", "bounds").get<long>();
  config.epsilon = j.value("epsilon", config.epsilon);
  if (j.contains("complexity")) {
    const auto& a = j.at("complexity");
    check_keys(a, {"deltas", "kappa_bars"}, "complexity");
    config.complexity_deltas =
        require(a, "deltas", "complexity").get<std::vector<double>>();
    config.complexity_kappa_bars =
        require(a, "kappa_bars", "complexity").get<std::vector<double>>();
  }
  if (j.contains("head_to_head")) {
    const auto& h = j.at("head_to_head");
    check_keys(h, {"delta", "iterations"}, "head_to_head");
    config.head_to_head_delta = require(h, "delta", "head_to_head").get<double>();
    config.head_to_head_iterations =
        require(h, "iterations", "head_to_head").get<long>();
  }
  config.output_dir = require(j, "output_dir", "bounds").get<std::string>();
  return config;
}

BoundsOutput run_bound_suite(const BoundsConfig& config) {
  namespace fs = std::filesystem;
  const fs::path out_dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);

  const ProblemInstance problem =
      make_quadratic_problem(config.agents, config.dimension, config.mu,
                             config.l, config.problem_seed);
  const SmoothnessProfile& profile = problem.profile();
  const ReferenceSolution ref = solve_reference(problem);
  const Mat x0 = make_x0(X0Mode::kNormal, config.agents, config.dimension,
                         config.master_seed);
  const int n = config.agents;

  BoundsOutput output;
  for (double delta : config.deltas) {
    for (double kappa_d : config.kappa_ds) {
      double alpha_bound = 0.0;
      bool feasible = true;
      try {
        alpha_bound = max_stepsize(profile, delta, n, kappa_d);
      } catch (const HeterogeneityTooLarge&) {
        feasible = false;
      }
      if (!feasible) {
        BoundsRow row;
        row.delta = delta;
        row.kappa_d = kappa_d;
        row.alpha_max = kNaN;
        row.feasible = false;
        row.lambda_theory = kNaN;
        row.lambda_measured = kNaN;
        row.c = kNaN;
        output.rows.push_back(row);
        continue;
      }
      for (double fraction : config.alpha_fractions) {
        BoundsRow row;
        row.delta = delta;
        row.kappa_d = kappa_d;
        row.feasible = true;
        row.alpha_max = fraction * alpha_bound;
        row.lambda_theory =
            guaranteed_rate(profile, delta, n, kappa_d, row.alpha_max);

        // Linear ramp from alpha_max/kappa_D to alpha_max realizes the
        // requested heterogeneity exactly.
        std::vector<double> alphas(n);
        const double alpha_min = row.alpha_max / kappa_d;
        for (int i = 0; i < n; ++i) {
          alphas[i] = n == 1 ? row.alpha_max
                             : alpha_min + (row.alpha_max - alpha_min) *
                                               static_cast<double>(i) /
                                               static_cast<double>(n - 1);
        }
        const MixingMatrix w = interpolated_mixing(n, delta);
        RunResult result =
            run(Algorithm::kAtcDiging, problem, w,
                StepSizeSchedule::constant(alphas), config.iterations, ref,
                x0);
        RunTrace& trace = result.trace;
        // Drop the stretch at the numerical floor before fitting.
        std::size_t last = trace.rows.size() - 1;
        for (std::size_t i = 0; i < trace.rows.size(); ++i) {
          if (trace.rows[i].normalized_residual < 1e-11 &&
              trace.rows[i].normalized_residual > 0.0) {
            last = i;
            break;
          }
        }
        if (last < 4) last = trace.rows.size() - 1;
        RunTrace truncated;
        truncated.rows.assign(trace.rows.begin(),
                              trace.rows.begin() + last + 1);
        const TailFit fit = fit_log_tail(truncated);
        row.lambda_measured = std::exp(fit.slope);
        row.sound = fit.slope <= std::log(row.lambda_theory) + 1e-3;
        row.c = check_rate_empirically(truncated, row.lambda_theory).c;
        output.rows.push_back(row);
      }
    }
  }

  output.rate_report_file = out_dir / "rate_report.csv";
  {
    std::ofstream out(output.rate_report_file);
    out << "delta,n,kappa_D,kappa_bar,alpha_max,lambda_theory,"
           "lambda_measured,C\n";
    out << std::setprecision(17);
    for (const auto& row : output.rows) {
      out << row.delta << ',' << n << ',' << row.kappa_d << ','
          << profile.kappa_bar() << ',' << row.alpha_max << ','
          << row.lambda_theory << ',' << row.lambda_measured << ',' << row.c
          << '\n';
    }
  }

  for (double delta : config.complexity_deltas) {
    for (double kappa_bar : config.complexity_kappa_bars) {
      SmoothnessProfile synthetic;
      synthetic.per_agent_l.assign(n, kappa_bar);
      synthetic.per_agent_mu.assign(n, 1.0);
      ComplexityRow row;
      row.delta = delta;
      row.kappa_bar = kappa_bar;
      row.comparison =
          complexity_comparison(synthetic, delta, n, config.epsilon);
      output.complexity_rows.push_back(row);
    }
  }
  output.complexity_file = out_dir / "complexity_table.csv";
  {
    std::ofstream out(output.complexity_file);
    out << "delta,n,kappa_bar,epsilon,lambda_diging,lambda_atc,K_diging,"
           "K_atc\n";
    out << std::setprecision(17);
    for (const auto& row : output.complexity_rows) {
      out << row.delta << ',' << n << ',' << row.kappa_bar << ','
          << config.epsilon << ',' << row.comparison.lambda_diging << ','
          << row.comparison.lambda_atc << ',' << row.comparison.k_diging << ','
          << row.comparison.k_atc << '\n';
    }
  }

  // Empirical head-to-head on a well-connected network, each structure at
  // (near) its own maximal admissible step.
  {
    const double delta = config.head_to_head_delta;
    const double kbar = profile.kappa_bar();
    const double alpha_atc = 0.95 * max_stepsize(profile, delta, n, 1.0);
    const double alpha_diging =
        0.95 * (1.0 - delta) * (1.0 - delta) /
        (10.0 * profile.max_l() * std::sqrt(static_cast<double>(n) * kbar));
    const MixingMatrix w = interpolated_mixing(n, delta);
    const RunResult atc = run(Algorithm::kAtcDiging, problem, w,
                              StepSizeSchedule::coordinated(alpha_atc),
                              config.head_to_head_iterations, ref, x0);
    const RunResult dig = run(Algorithm::kDiging, problem, w,
                              StepSizeSchedule::coordinated(alpha_diging),
                              config.head_to_head_iterations, ref, x0);
    output.head_to_head_atc_final = atc.trace.rows.back().normalized_residual;
    output.head_to_head_diging_final =
        dig.trace.rows.back().normalized_residual;
    std::ofstream out(out_dir / "head_to_head.csv");
    out << "algorithm,delta,alpha,final_normalized_residual\n";
    out << std::setprecision(17);
    out << "atc_diging," << delta << ',' << alpha_atc << ','
        << output.head_to_head_atc_final << '\n';
    out << "diging," << delta << ',' << alpha_diging << ','
        << output.head_to_head_diging_final << '\n';
  }
  return output;
}

}  // namespace diging
