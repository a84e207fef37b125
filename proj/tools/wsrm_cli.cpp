#include <cstdio>
#include <fstream>
#include <iostream>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "wsrm/errors.hpp"
#include "wsrm/harness.hpp"
#include "wsrm/rng.hpp"
#include "wsrm/serialize.hpp"
#include "wsrm/solver.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
  std::optional<std::string> method;
  std::optional<double> epsilon;
  std::optional<std::string> floor;
};

void add_overrides(CLI::App* app, Overrides& o) {
  app->add_option("--seed", o.seed, "Base seed; trial seeds are derived from it");
  app->add_option("--trials", o.trials, "Monte-Carlo trial count")->check(CLI::PositiveNumber);
  app->add_option("--threads", o.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  app->add_option("--method", o.method, "Objective encoding")->check(CLI::IsMember({"gm", "tree", "product-tree"}));
  app->add_option("--epsilon", o.epsilon, "Floor on the auxiliary SINR variable")->check(CLI::NonNegativeNumber);
  app->add_option("--floor", o.floor, "Floor mode")->check(CLI::IsMember({"scaled", "fixed"}));
}

void apply(const Overrides& o, wsrm::ExperimentConfig& c) {
  if (o.seed) c.seed = *o.seed;
  if (o.trials) c.trials = *o.trials;
  if (o.threads) c.threads = *o.threads;
  if (o.method) c.spca.method = wsrm::parse_method(*o.method);
  if (o.epsilon) c.spca.epsilon = *o.epsilon;
  if (o.floor) c.spca.floor_mode = wsrm::parse_floor_mode(*o.floor);
  c.validate();
}

void report(const wsrm::RunArtifacts& art, const wsrm::ExperimentConfig& c) {
  for (std::size_t i = 0; i < art.aggregates.size(); ++i) {
    const wsrm::Aggregate& a = art.aggregates[i];
    const std::string axis = c.sweep ? fmt::format("{}={} ", c.sweep->key, c.sweep->values[i]) : "";
    fmt::print("{}{} {:.6g} (stdev {:.3g}) over {} trials, {} converged, {} failed, {:.1f} iterations on average\n",
               axis, wsrm::metric_label(c.network), a.mean_wsr, a.stdev_wsr, a.trials, a.converged, a.failures,
               a.mean_iterations);
  }
  fmt::print("wrote {} files to {}\n", art.files.size(), art.directory.string());
  if (art.failed_trials > 0) fmt::print(stderr, "warning: {} trials raised errors; see trials.csv\n", art.failed_trials);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw wsrm::ConfigError("gains", fmt::format("'{}' is not a number", item));
    out.push_back(x);
  }
  return out;
}

void emit(const std::string& out, const std::string& name, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(out);
  const auto path = std::filesystem::path(out) / name;
  std::ofstream(path, std::ios::binary) << text;
  fmt::print("wrote {}\n", path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted sum-rate beamforming for multicell OFDMA downlinks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", WSRM_VERSION);

  std::string config_path, out_dir = "wsrm-out";
  bool timing = false, dump = false;
  Overrides over;

  auto* run_cmd = app.add_subcommand("run", "Monte-Carlo run of one configuration");
  auto* sweep_cmd = app.add_subcommand("sweep", "Monte-Carlo run over the config's sweep axis");
  for (auto* cmd : {run_cmd, sweep_cmd}) {
    cmd->add_option("config", config_path, "Experiment config or manifest (JSON)")->required();
    cmd->add_option("--out", out_dir, "Artifact directory")->capture_default_str();
    cmd->add_flag("--timing", timing, "Add wall-clock columns (breaks byte-reproducibility)");
    cmd->add_flag("--dump", dump, "Write every subproblem under <out>/dumps");
    add_overrides(cmd, over);
  }

  std::string program_path, solution_out;
  bool verbose = false;
  int solver_iterations = -1;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a conic program in text format");
  solve_cmd->add_option("program", program_path, "Program file")->required();
  solve_cmd->add_option("--out", solution_out, "Write the solution as JSON");
  solve_cmd->add_flag("--verbose", verbose, "Print the iteration log to stderr");
  solve_cmd->add_option("--max-iterations", solver_iterations, "Solver iteration limit")->check(CLI::NonNegativeNumber);

  auto* oracle_cmd = app.add_subcommand("oracle", "Reference solutions and SPCA comparisons");
  oracle_cmd->require_subcommand(1);
  std::string gains_text, oracle_out;
  double p_max = 100.0;
  int oracle_trials = 10, points = 201, subcarriers = 8;
  std::uint64_t oracle_seed = 0;
  std::optional<double> oracle_eps;
  std::optional<std::string> oracle_method;
  auto* wf_cmd = oracle_cmd->add_subcommand("wf", "Water-filling; with --gains, solve that instance alone");
  auto* grid_cmd = oracle_cmd->add_subcommand("grid", "Exhaustive grid search on two single-antenna cells");
  wf_cmd->add_option("--gains", gains_text, "Comma-separated channel power gains");
  wf_cmd->add_option("--p-max", p_max, "Power budget [W]")->capture_default_str();
  wf_cmd->add_option("--subcarriers", subcarriers, "Subcarriers of the generated instances")->check(CLI::PositiveNumber);
  grid_cmd->add_option("--points", points, "Levels per link")->capture_default_str()->check(CLI::Range(2, 100000));
  for (auto* cmd : {wf_cmd, grid_cmd}) {
    cmd->add_option("--seed", oracle_seed, "Base seed");
    cmd->add_option("--trials", oracle_trials, "Generated instances")->check(CLI::PositiveNumber);
    cmd->add_option("--out", oracle_out, "Directory for the comparison CSV (default: stdout)");
    cmd->add_option("--epsilon", oracle_eps, "SPCA floor")->check(CLI::NonNegativeNumber);
    cmd->add_option("--method", oracle_method, "Objective encoding")->check(CLI::IsMember({"gm", "tree", "product-tree"}));
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed() || sweep_cmd->parsed()) {
      wsrm::ExperimentConfig cfg = wsrm::load_experiment_config(config_path);
      apply(over, cfg);
      wsrm::ArtifactOptions opts;
      opts.timing = timing;
      opts.dump = dump;
      opts.command = run_cmd->parsed() ? "run" : "sweep";
      const auto art = run_cmd->parsed() ? wsrm::run_experiment(cfg, out_dir, opts) : wsrm::run_sweep(cfg, out_dir, opts);
      report(art, cfg);
      return 0;
    }

    if (solve_cmd->parsed()) {
      std::ifstream f(program_path);
      if (!f) throw wsrm::ConfigError(program_path, "cannot open");
      const wsrm::ConicProgram prog = wsrm::read_text(f);
      wsrm::SolverSettings settings;
      settings.verbose = verbose;
      if (solver_iterations >= 0) settings.max_iterations = solver_iterations;
      const wsrm::Solution sol = wsrm::solve(prog, settings);
      const wsrm::ResidualReport rr = wsrm::residuals(prog, sol);
      fmt::print("status {}\n", wsrm::to_string(sol.status));
      if (!sol.message.empty()) fmt::print("message {}\n", sol.message);
      fmt::print("iterations {}\nprimal_objective {:.12g}\ndual_objective {:.12g}\n", sol.iterations,
                 sol.primal_objective, sol.dual_objective);
      fmt::print("primal_residual {:.3e}\ndual_residual {:.3e}\ngap {:.3e}\n", rr.primal_residual, rr.dual_residual,
                 rr.gap);
      if (!solution_out.empty()) {
        wsrm::Json j;
        j["status"] = wsrm::to_string(sol.status);
        j["iterations"] = sol.iterations;
        j["primal_objective"] = sol.primal_objective;
        j["dual_objective"] = sol.dual_objective;
        j["x"] = std::vector<double>(sol.x.data(), sol.x.data() + sol.x.size());
        j["y"] = std::vector<double>(sol.y.data(), sol.y.data() + sol.y.size());
        j["s"] = std::vector<double>(sol.s.data(), sol.s.data() + sol.s.size());
        std::ofstream(solution_out) << j.dump(2) << '\n';
      }
      return sol.status == wsrm::SolveStatus::numerical_failure ? 1 : 0;
    }

    if (wf_cmd->parsed() && !gains_text.empty()) {
      const auto gains = parse_list(gains_text);
      const wsrm::WaterFilling wf = wsrm::oracle_waterfilling(gains, p_max);
      std::string text = "subcarrier,gain,power\n";
      for (std::size_t n = 0; n < gains.size(); ++n)
        text += fmt::format("{},{},{}\n", n, wsrm::format_double(gains[n]), wsrm::format_double(wf.power[n]));
      emit(oracle_out, "oracle_wf_allocation.csv", text);
      fmt::print(stderr, "water level {:.12g}, rate {:.12g} bits/s/Hz\n", wf.level, wf.rate);
      return 0;
    }

    if (wf_cmd->parsed() || grid_cmd->parsed()) {
      const bool wf = wf_cmd->parsed();
      const wsrm::NetworkConfig net = wf ? wsrm::waterfilling_network(subcarriers) : wsrm::gridsearch_network();
      wsrm::SpcaOptions opts;
      if (oracle_eps) opts.epsilon = *oracle_eps;
      if (oracle_method) opts.method = wsrm::parse_method(*oracle_method);
      std::string text = "trial,seed,spca,oracle,relative_difference,iterations,termination\n";
      double worst = 0.0;
      for (int t = 0; t < oracle_trials; ++t) {
        const std::uint64_t s = wsrm::trial_seed(oracle_seed, static_cast<std::uint32_t>(t));
        const wsrm::OracleComparison c =
            wf ? wsrm::compare_waterfilling(net, opts, s) : wsrm::compare_gridsearch(net, opts, s, points);
        worst = std::max(worst, std::abs(c.relative_difference));
        text += fmt::format("{},{},{},{},{},{},{}\n", t, s, wsrm::format_double(c.spca), wsrm::format_double(c.oracle),
                            wsrm::format_double(c.relative_difference), c.iterations, c.termination);
      }
      emit(oracle_out, wf ? "oracle_wf.csv" : "oracle_grid.csv", text);
      fmt::print(stderr, "largest relative difference {:.3e} over {} instances\n", worst, oracle_trials);
      return 0;
    }
  } catch (const wsrm::ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
