#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "diging/network.hpp"
#include "diging/objectives.hpp"
#include "diging/rate_analysis.hpp"
#include "diging/solvers.hpp"

namespace diging {

struct ProblemSpec {
  ProblemKind kind = ProblemKind::kQuadratic;
  std::uint64_t seed = 0;
  int agents = 1;
  int dimension = 1;
  int rows_per_agent = 10;  // least squares / huber
  double mu = 1.0;          // quadratic spectrum edges
  double l = 1.0;
  double huber_threshold = 1.0;
  double ridge = 0.01;
  std::optional<std::string> file;  // load a serialized instance instead
};

struct NetworkSpec {
  bool time_varying = false;
  std::vector<std::pair<int, int>> edges;  // static mode, inline
  std::optional<std::string> edge_list_file;
  double edge_probability = 0.3;
  std::uint64_t seed = 0;
};

struct ScheduleSpec {
  StepSizeSchedule::Mode mode = StepSizeSchedule::Mode::kConstant;
  std::vector<double> alphas;  // explicit per-agent constants
  std::optional<double> base;  // scalar base step
  bool base_auto = false;  // base = 0.5 * max_stepsize of the static surrogate
  double lo = 0.5;
  double hi = 1.5;
  std::uint64_t seed = 0;
};

enum class X0Mode { kNormal, kZero };

struct ExperimentConfig {
  ProblemSpec problem;
  NetworkSpec network;
  std::vector<Algorithm> algorithms;
  ScheduleSpec schedule;
  long iterations = 1;
  std::uint64_t master_seed = 0;
  std::string output_dir;
  X0Mode x0_mode = X0Mode::kNormal;
  double reference_tol = 1e-12;
};

/// Strict JSON config loader: unknown keys are rejected, all seeds must be
/// explicit. "notes" keys are allowed anywhere and ignored.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

ProblemInstance build_problem(const ProblemSpec& spec);
GraphSequence build_graph_sequence(const NetworkSpec& spec, int agents);

/// Resolves "auto" base steps: half of the admissible maximum for a
/// coordinated schedule on the sequence's k=0 graph.
StepSizeSchedule build_schedule(const ScheduleSpec& spec,
                                const SmoothnessProfile& profile,
                                const GraphSequence& graphs,
                                double* resolved_base = nullptr);

std::string algorithm_name(Algorithm a);

struct SummaryRow {
  std::string algorithm;
  std::uint64_t seed = 0;
  long iterations = 0;
  std::string status;
  double final_residual = 0.0;
  double final_normalized_residual = 0.0;
  double measured_rate = 0.0;  // exp of the tail slope of log residual
  double theory_lambda = 0.0;  // nan when the guarantee does not apply
  double mean_kappa_d = 1.0;
  double tail_r_squared = 0.0;
  double max_tracking_violation = 0.0;
  double base_alpha = 0.0;  // resolved base step
};

struct ExperimentOutput {
  std::vector<SummaryRow> rows;
  std::vector<std::filesystem::path> trace_files;
  std::filesystem::path summary_file;
  std::filesystem::path plot_file;
  bool any_diverged = false;
};

/// Solves the reference once, runs every configured algorithm, writes one
/// trace CSV per (algorithm, seed), a summary CSV, problem/network dumps and
/// a residual plot into the output directory.
ExperimentOutput run_experiment(const ExperimentConfig& config);

struct BoundsConfig {
  int agents = 12;
  int dimension = 3;
  double mu = 1.0;
  double l = 2.0;
  std::uint64_t problem_seed = 7;
  std::uint64_t master_seed = 1;
  std::vector<double> deltas;
  std::vector<double> kappa_ds;
  std::vector<double> alpha_fractions;  // of the admissible maximum
  long iterations = 4000;
  double epsilon = 1e-6;
  std::vector<double> complexity_deltas;
  std::vector<double> complexity_kappa_bars;
  double head_to_head_delta = 0.15;
  long head_to_head_iterations = 2000;
  std::string output_dir;
};

BoundsConfig load_bounds_config(const std::filesystem::path& path);

struct BoundsRow {
  double delta = 0.0;
  double kappa_d = 1.0;
  double alpha_max = 0.0;
  bool feasible = false;
  double lambda_theory = 0.0;
  double lambda_measured = 0.0;
  double c = 0.0;
  bool sound = false;  // measured log-rate <= log(lambda_theory) + 1e-3
};

struct ComplexityRow {
  double delta = 0.0;
  double kappa_bar = 0.0;
  ComplexityComparison comparison;
};

struct BoundsOutput {
  std::vector<BoundsRow> rows;
  std::vector<ComplexityRow> complexity_rows;
  double head_to_head_atc_final = 0.0;
  double head_to_head_diging_final = 0.0;
  std::filesystem::path rate_report_file;
  std::filesystem::path complexity_file;
};

/// Sweeps the (delta, kappa_D, alpha) grid on exact-delta mixing matrices,
/// compares measured tail rates against the explicit bound, and evaluates the
/// closed-form complexity comparison plus an empirical head-to-head.
BoundsOutput run_bound_suite(const BoundsConfig& config);

/// Semilog residual plot, one curve per trace, as a standalone SVG.
void emit_plot(std::span<const RunTrace> traces,
               std::span<const std::string> names, std::ostream& out);

/// Tail fit used for every reported measured rate: trailing half of the
/// trace, truncated where the normalized residual falls below the 1e-11
/// numerical floor.
TailFit measured_tail_fit(const RunTrace& trace);

void write_summary_csv(std::span<const SummaryRow> rows, std::ostream& out);
std::vector<SummaryRow> read_summary_csv(std::istream& in);

/// Exact δ mixing matrix on the complete graph: delta*I + (1-delta)/n 11'.
MixingMatrix interpolated_mixing(int n, double delta);

}  // namespace diging
