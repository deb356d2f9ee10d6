#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "diging/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitDiverged = 3;

std::string resolve_output_dir(const std::string& from_config,
                               const std::string& from_flag) {
  if (!from_flag.empty()) return from_flag;
  if (const char* env = std::getenv("DIGING_OUTPUT_DIR")) {
    if (*env) return env;
  }
  return from_config;
}

int cmd_run(const std::string& config_path, const std::string& out_flag) {
  diging::ExperimentConfig config =
      diging::load_experiment_config(config_path);
  config.output_dir = resolve_output_dir(config.output_dir, out_flag);
  const diging::ExperimentOutput output = diging::run_experiment(config);
  std::cout << std::setprecision(6);
  for (const auto& row : output.rows) {
    std::cout << row.algorithm << ": status=" << row.status
              << " final_residual=" << row.final_residual
              << " measured_rate=" << row.measured_rate
              << " mean_kappa_D=" << row.mean_kappa_d << "\n";
  }
  std::cout << "summary: " << output.summary_file.string() << "\n";
  std::cout << "plot: " << output.plot_file.string() << "\n";
  return output.any_diverged ? kExitDiverged : kExitOk;
}

int cmd_bounds(const std::string& config_path, const std::string& out_flag) {
  diging::BoundsConfig config = diging::load_bounds_config(config_path);
  config.output_dir = resolve_output_dir(config.output_dir, out_flag);
  const diging::BoundsOutput output = diging::run_bound_suite(config);
  std::cout << std::setprecision(6);
  int sound = 0, feasible = 0;
  for (const auto& row : output.rows) {
    if (!row.feasible) {
      std::cout << "delta=" << row.delta << " kappa_D=" << row.kappa_d
                << ": infeasible (heterogeneity too large)\n";
      continue;
    }
    ++feasible;
    sound += row.sound ? 1 : 0;
    std::cout << "delta=" << row.delta << " kappa_D=" << row.kappa_d
              << " alpha=" << row.alpha_max
              << " lambda_theory=" << row.lambda_theory
              << " lambda_measured=" << row.lambda_measured
              << (row.sound ? " ok" : " VIOLATION") << "\n";
  }
  std::cout << sound << "/" << feasible
            << " feasible grid points within the rate bound\n";
  if (!output.complexity_rows.empty()) {
    std::cout << "complexity table: " << output.complexity_file.string() << "\n";
  }
  std::cout << "head-to-head final residuals: atc="
            << output.head_to_head_atc_final
            << " diging=" << output.head_to_head_diging_final << "\n";
  std::cout << "report: " << output.rate_report_file.string() << "\n";
  return sound == feasible ? kExitOk : 1;
}

int cmd_plot(const std::vector<std::string>& csv_paths,
             const std::string& out_path) {
  std::vector<diging::RunTrace> traces;
  std::vector<std::string> names;
  for (const auto& path : csv_paths) {
    std::ifstream in(path);
    if (!in) throw diging::ConfigError("cannot open trace file " + path);
    traces.push_back(diging::RunTrace::read_csv(in));
    names.push_back(std::filesystem::path(path).stem().string());
  }
  std::ofstream out(out_path);
  if (!out) throw diging::ConfigError("cannot open output file " + out_path);
  diging::emit_plot(traces, names, out);
  std::cout << "wrote " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized gradient-tracking optimization bench"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_flag;
  auto* run_cmd = app.add_subcommand("run", "run a configured experiment");
  run_cmd->add_option("config", config_path, "experiment config (json)")
      ->required();
  run_cmd->add_option("-o,--output", out_flag, "output directory override");

  std::string bounds_config;
  std::string bounds_out_flag;
  auto* bounds_cmd =
      app.add_subcommand("bounds", "rate-bound verification suite");
  bounds_cmd->add_option("config", bounds_config, "bounds config (json)")
      ->required();
  bounds_cmd->add_option("-o,--output", bounds_out_flag,
                         "output directory override");

  std::vector<std::string> csv_paths;
  std::string plot_out;
  auto* plot_cmd = app.add_subcommand("plot", "plot residual traces");
  plot_cmd->add_option("csv", csv_paths, "trace csv files")->required();
  plot_cmd->add_option("-o,--output", plot_out, "output svg file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, out_flag);
    if (bounds_cmd->parsed()) return cmd_bounds(bounds_config, bounds_out_flag);
    if (plot_cmd->parsed()) return cmd_plot(csv_paths, plot_out);
  } catch (const diging::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const diging::DivergedError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
