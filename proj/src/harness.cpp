#include "wsrm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "wsrm/errors.hpp"
#include "wsrm/rng.hpp"

#ifndef WSRM_VERSION
#define WSRM_VERSION "0.0.0"
#endif

namespace wsrm {

namespace fs = std::filesystem;

namespace {

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& path) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
}

double get_number(const Json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  return j.get<double>();
}

int get_int(const Json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigError(field, "expected an integer");
  return j.get<int>();
}

std::string get_string(const Json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError(field, "expected a string");
  return j.get<std::string>();
}

SolverSettings solver_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("solver", "expected an object");
  reject_unknown(j,
                 {"max_iterations", "feasibility_tol", "gap_tol", "static_regularization", "refinement_steps",
                  "equilibration_passes", "step_fraction"},
                 "solver");
  SolverSettings s;
  if (j.contains("max_iterations")) s.max_iterations = get_int(j["max_iterations"], "solver.max_iterations");
  if (j.contains("feasibility_tol")) s.feasibility_tol = get_number(j["feasibility_tol"], "solver.feasibility_tol");
  if (j.contains("gap_tol")) s.gap_tol = get_number(j["gap_tol"], "solver.gap_tol");
  if (j.contains("static_regularization"))
    s.static_regularization = get_number(j["static_regularization"], "solver.static_regularization");
  if (j.contains("refinement_steps")) s.refinement_steps = get_int(j["refinement_steps"], "solver.refinement_steps");
  if (j.contains("equilibration_passes"))
    s.equilibration_passes = get_int(j["equilibration_passes"], "solver.equilibration_passes");
  if (j.contains("step_fraction")) s.step_fraction = get_number(j["step_fraction"], "solver.step_fraction");
  return s;
}

Json to_json(const SolverSettings& s) {
  return {{"max_iterations", s.max_iterations},
          {"feasibility_tol", s.feasibility_tol},
          {"gap_tol", s.gap_tol},
          {"static_regularization", s.static_regularization},
          {"refinement_steps", s.refinement_steps},
          {"equilibration_passes", s.equilibration_passes},
          {"step_fraction", s.step_fraction}};
}

void spca_from_json(const Json& j, SpcaOptions& o) {
  if (!j.is_object()) throw ConfigError("spca", "expected an object");
  reject_unknown(j, {"epsilon", "floor", "tol", "max_iterations", "method", "weight_margin", "accept_residual"},
                 "spca");
  if (j.contains("epsilon")) o.epsilon = get_number(j["epsilon"], "spca.epsilon");
  if (j.contains("floor")) {
    try {
      o.floor_mode = parse_floor_mode(get_string(j["floor"], "spca.floor"));
    } catch (const ConfigError& e) {
      throw ConfigError("spca.floor", e.what());
    }
  }
  if (j.contains("tol")) o.tol = get_number(j["tol"], "spca.tol");
  if (j.contains("max_iterations")) o.max_iterations = get_int(j["max_iterations"], "spca.max_iterations");
  if (j.contains("method")) {
    try {
      o.method = parse_method(get_string(j["method"], "spca.method"));
    } catch (const ConfigError& e) {
      throw ConfigError("spca.method", e.what());
    }
  }
  if (j.contains("weight_margin")) o.weight_margin = get_number(j["weight_margin"], "spca.weight_margin");
  if (j.contains("accept_residual")) o.accept_residual = get_number(j["accept_residual"], "spca.accept_residual");
}

SweepSpec sweep_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("sweep", "expected an object");
  reject_unknown(j, {"key", "values"}, "sweep");
  SweepSpec s;
  if (!j.contains("key")) throw ConfigError("sweep.key", "missing");
  s.key = get_string(j["key"], "sweep.key");
  if (!j.contains("values") || !j["values"].is_array() || j["values"].empty())
    throw ConfigError("sweep.values", "expected a non-empty list");
  for (const Json& v : j["values"]) {
    if (v.is_number())
      s.values.push_back(format_double(v.get<double>()));
    else if (v.is_string())
      s.values.push_back(v.get<std::string>());
    else
      throw ConfigError("sweep.values", "entries must be numbers or strings");
  }
  return s;
}

double parse_axis_number(const std::string& value) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || !std::isfinite(x)) throw ConfigError("sweep.values", fmt::format("'{}' is not a number", value));
  return x;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return fmt::format("line {}, column {}", line, col);
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

std::string axis_directory(const SweepSpec& sweep, const std::string& value) {
  std::string out = sweep.key + "_";
  for (char c : value) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_';
  return out;
}

struct AxisRun {
  std::string key, value;
  ExperimentConfig config;
  std::vector<TrialResult> results;
};

RunArtifacts write_artifacts(const ExperimentConfig& base, std::vector<AxisRun>& runs, const fs::path& out,
                             const ArtifactOptions& options) {
  RunArtifacts art;
  art.directory = out;
  fs::create_directories(out);

  std::ostringstream trials;
  trials << "axis,trial,seed,status,termination,iterations,initial_wsr,final_wsr,error\n";
  std::ostringstream agg;
  agg << "axis_key,axis,trials,metric,mean_wsr,stdev_wsr,mean_iterations,converged,failures\n";
  const std::string metric = metric_label(base.network);

  for (AxisRun& r : runs) {
    for (const TrialResult& t : r.results) {
      trials << csv_field(r.value) << ',' << t.trial << ',' << t.seed << ',' << (t.ok ? "ok" : "error") << ',';
      if (t.ok) {
        trials << to_string(t.run.termination) << ',' << t.run.iterations() << ','
               << format_double(t.run.trajectory.front().wsr) << ',' << format_double(t.run.final_wsr()) << ','
               << csv_field(t.run.failure);
      } else {
        trials << ",,,," << csv_field(t.error);
      }
      trials << '\n';
      if (!t.ok) {
        ++art.failed_trials;
        continue;
      }
      std::string rel = "trajectories/";
      if (base.sweep) rel += axis_directory(*base.sweep, r.value) + "/";
      rel += fmt::format("trial_{:04d}.csv", t.trial);
      std::ostringstream traj;
      write_trajectory_csv(traj, t.run, r.config.network.cells, options.timing);
      write_file(out / rel, traj.str());
      art.files.push_back(rel);
    }
    const Aggregate a = aggregate(r.results);
    art.aggregates.push_back(a);
    agg << csv_field(r.key) << ',' << csv_field(r.value) << ',' << a.trials << ',' << metric << ','
        << format_double(a.mean_wsr) << ',' << format_double(a.stdev_wsr) << ',' << format_double(a.mean_iterations)
        << ',' << a.converged << ',' << a.failures << '\n';
  }
  write_file(out / "trials.csv", trials.str());
  write_file(out / "aggregate.csv", agg.str());
  art.files.push_back("trials.csv");
  art.files.push_back("aggregate.csv");
  std::sort(art.files.begin(), art.files.end());

  const Json cfg = to_json(base);
  Json seeds = Json::array();
  for (int t = 0; t < base.trials; ++t) seeds.push_back(trial_seed(base.seed, static_cast<std::uint32_t>(t)));
  Json manifest;
  manifest["format"] = "wsrm-manifest";
  manifest["version"] = kFormatVersion;
  manifest["code_version"] = WSRM_VERSION;
  manifest["command"] = options.command;
  manifest["config"] = cfg;
  manifest["config_hash"] = fmt::format("fnv1a64:{:016x}", fnv1a64(cfg.dump()));
  manifest["base_seed"] = base.seed;
  manifest["trial_seeds"] = seeds;
  manifest["files"] = art.files;
  manifest["timing"] = options.timing;
  write_file(out / "manifest.json", manifest.dump(2) + "\n");
  art.files.push_back("manifest.json");
  return art;
}

}  // namespace

// --- config ------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  network.validate();
  spca.validate();
  if (trials < 1) throw ConfigError("trials", "must be >= 1");
  if (threads < 0) throw ConfigError("threads", "must be >= 0");
  if (sweep) {
    if (sweep->key != "p_max_dbw" && sweep->key != "epsilon" && sweep->key != "method")
      throw ConfigError("sweep.key", fmt::format("expected p_max_dbw, epsilon or method, got '{}'", sweep->key));
    for (const std::string& v : sweep->values) at_axis(v);
  }
}

ExperimentConfig ExperimentConfig::at_axis(const std::string& value) const {
  if (!sweep) throw ConfigError("sweep", "config has no sweep");
  ExperimentConfig c = *this;
  c.sweep.reset();
  if (sweep->key == "p_max_dbw") {
    c.network.p_max.assign(c.network.cells, dbw_to_watts(parse_axis_number(value)));
  } else if (sweep->key == "epsilon") {
    c.spca.epsilon = parse_axis_number(value);
  } else if (sweep->key == "method") {
    try {
      c.spca.method = parse_method(value);
    } catch (const ConfigError& e) {
      throw ConfigError("sweep.values", e.what());
    }
  } else {
    throw ConfigError("sweep.key", fmt::format("cannot sweep '{}'", sweep->key));
  }
  c.network.validate();
  c.spca.validate();
  return c;
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(line_column(text, e.byte > 0 ? e.byte - 1 : 0), "invalid JSON");
  }
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  if (j.value("format", std::string{}) == "wsrm-manifest") {
    if (!j.contains("config")) throw ConfigError("config", "manifest has no config");
    j = j["config"];
  }
  reject_unknown(j, {"format", "version", "network", "spca", "solver", "trials", "seed", "threads", "sweep"}, "");
  if (j.contains("format") && j["format"] != "wsrm-experiment")
    throw ConfigError("format", "expected \"wsrm-experiment\"");
  if (j.contains("version") && j["version"] != kFormatVersion)
    throw ConfigError("version", fmt::format("unsupported version (this build reads {})", kFormatVersion));

  ExperimentConfig c;
  c.network = j.contains("network") ? network_config_from_json(j["network"], "network") : NetworkConfig::desk();
  if (j.contains("spca")) spca_from_json(j["spca"], c.spca);
  if (j.contains("solver")) c.spca.solver = solver_from_json(j["solver"]);
  if (j.contains("trials")) c.trials = get_int(j["trials"], "trials");
  if (j.contains("seed")) {
    const Json& s = j["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ConfigError("seed", "expected a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (j.contains("threads")) c.threads = get_int(j["threads"], "threads");
  if (j.contains("sweep")) c.sweep = sweep_from_json(j["sweep"]);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(path.string(), "cannot open");
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return parse_experiment_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.field(), std::string(e.what()).substr(e.field().size() + 2));
  }
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["format"] = "wsrm-experiment";
  j["version"] = kFormatVersion;
  j["network"] = to_json(c.network);
  j["spca"] = {{"epsilon", c.spca.epsilon},
               {"floor", to_string(c.spca.floor_mode)},
               {"tol", c.spca.tol},
               {"max_iterations", c.spca.max_iterations},
               {"method", to_string(c.spca.method)},
               {"weight_margin", c.spca.weight_margin},
               {"accept_residual", c.spca.accept_residual}};
  j["solver"] = to_json(c.spca.solver);
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  if (c.sweep) j["sweep"] = {{"key", c.sweep->key}, {"values", c.sweep->values}};
  return j;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// --- trials ------------------------------------------------------------------------

TrialResult run_trial(const NetworkConfig& network, const SpcaOptions& options, std::uint64_t base_seed, int trial,
                      const std::string& dump_root) {
  TrialResult out;
  out.trial = trial;
  out.seed = trial_seed(base_seed, static_cast<std::uint32_t>(trial));
  try {
    SpcaOptions o = options;
    if (!dump_root.empty()) o.dump_dir = (fs::path(dump_root) / fmt::format("trial_{:04d}", trial)).string();
    const Scenario sc = drop_network(network, out.seed);
    const ChannelSet ch = generate_channels(sc, out.seed);
    out.run = run(sc, ch, o);
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

std::vector<TrialResult> monte_carlo(const NetworkConfig& network, const SpcaOptions& options, int trials,
                                     std::uint64_t base_seed, int threads, const std::string& dump_root) {
  if (trials < 1) throw ConfigError("trials", "must be >= 1");
  std::vector<TrialResult> out(trials);
  int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, trials);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < trials; i = next++) out[i] = run_trial(network, options, base_seed, i, dump_root);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return out;
}

Aggregate aggregate(std::span<const TrialResult> results) {
  Aggregate a;
  a.trials = static_cast<int>(results.size());
  std::vector<double> wsr, iters;
  for (const TrialResult& t : results) {
    if (!t.ok) {
      ++a.failures;
      continue;
    }
    wsr.push_back(t.run.final_wsr());
    iters.push_back(t.run.iterations());
    if (t.run.termination == Termination::converged) ++a.converged;
    if (t.run.termination == Termination::solver_failure) ++a.failures;
  }
  a.completed = static_cast<int>(wsr.size());
  if (wsr.empty()) return a;
  std::sort(wsr.begin(), wsr.end());
  std::sort(iters.begin(), iters.end());
  const double n = static_cast<double>(wsr.size());
  a.mean_wsr = std::accumulate(wsr.begin(), wsr.end(), 0.0) / n;
  a.mean_iterations = std::accumulate(iters.begin(), iters.end(), 0.0) / n;
  if (wsr.size() > 1) {
    std::vector<double> dev;
    for (double x : wsr) dev.push_back((x - a.mean_wsr) * (x - a.mean_wsr));
    std::sort(dev.begin(), dev.end());
    a.stdev_wsr = std::sqrt(std::accumulate(dev.begin(), dev.end(), 0.0) / (n - 1.0));
  }
  return a;
}

std::string metric_label(const NetworkConfig& network) {
  return network.equal_weights() ? "average_sum_rate" : "weighted_sum_rate";
}

RunArtifacts run_experiment(const ExperimentConfig& config, const fs::path& out, const ArtifactOptions& options) {
  config.validate();
  if (config.sweep) throw ConfigError("sweep", "config defines a sweep; use the sweep command");
  const std::string dumps = options.dump ? (out / "dumps").string() : std::string{};
  std::vector<AxisRun> runs(1);
  runs[0].config = config;
  runs[0].results = monte_carlo(config.network, config.spca, config.trials, config.seed, config.threads, dumps);
  return write_artifacts(config, runs, out, options);
}

RunArtifacts run_sweep(const ExperimentConfig& config, const fs::path& out, const ArtifactOptions& options) {
  config.validate();
  if (!config.sweep) throw ConfigError("sweep", "config has no sweep block");
  std::vector<AxisRun> runs;
  for (const std::string& value : config.sweep->values) {
    AxisRun r;
    r.key = config.sweep->key;
    r.value = value;
    r.config = config.at_axis(value);
    const std::string dumps =
        options.dump ? (out / "dumps" / axis_directory(*config.sweep, value)).string() : std::string{};
    r.results = monte_carlo(r.config.network, r.config.spca, r.config.trials, r.config.seed, r.config.threads, dumps);
    runs.push_back(std::move(r));
  }
  return write_artifacts(config, runs, out, options);
}

// --- reference solutions ----------------------------------------------------------

WaterFilling oracle_waterfilling(std::span<const double> gains, double p_max) {
  if (!(p_max >= 0.0) || !std::isfinite(p_max)) throw ConfigError("p_max", "must be a finite number >= 0");
  double min_inv = std::numeric_limits<double>::infinity();
  for (double g : gains) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("gains", "must be finite and >= 0");
    if (g > 0.0) min_inv = std::min(min_inv, 1.0 / g);
  }
  WaterFilling out;
  out.power.assign(gains.size(), 0.0);
  if (!std::isfinite(min_inv) || p_max == 0.0) return out;

  auto filled = [&](double mu) {
    double s = 0.0;
    for (double g : gains)
      if (g > 0.0) s += std::max(0.0, mu - 1.0 / g);
    return s;
  };
  double lo = min_inv, hi = min_inv + p_max;
  for (int i = 0; i < 400 && hi - lo > 1e-10 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (filled(mid) < p_max ? lo : hi) = mid;
  }
  out.level = 0.5 * (lo + hi);
  for (std::size_t n = 0; n < gains.size(); ++n) {
    if (gains[n] > 0.0) out.power[n] = std::max(0.0, out.level - 1.0 / gains[n]);
    out.rate += std::log2(1.0 + out.power[n] * gains[n]);
  }
  return out;
}

GridSearch oracle_gridsearch(const Scenario& scenario, const ChannelSet& channels, int points) {
  const NetworkConfig& c = scenario.config;
  if (c.antennas != 1) throw ConfigError("antennas", "grid search needs Nt = 1");
  if (points < 2) throw ConfigError("points", "need at least 2 levels per link");
  const int T = c.links();
  double total = 1.0;
  for (int t = 0; t < T; ++t) total *= points;
  if (total > static_cast<double>(kGridSearchMaxPoints))
    throw ConfigError("links", fmt::format("{}^{} grid points exceed the bound of {}", points, T, kGridSearchMaxPoints));

  const Assignment& as = scenario.assignment;
  BeamformerSet beams(c.cells, c.subcarriers, 1);
  std::vector<cdouble> dir(T);
  for (int m = 0; m < c.cells; ++m)
    for (int n = 0; n < c.subcarriers; ++n) {
      const cdouble h = channels.h(as.global_user(m, n), m, n)[0];
      dir[m * c.subcarriers + n] = std::abs(h) > 0.0 ? std::conj(h) / std::abs(h) : cdouble{};
    }

  GridSearch best;
  best.wsr = -1.0;
  std::vector<int> idx(T, 0);
  std::vector<double> p(T);
  for (;;) {
    bool feasible = true;
    for (int m = 0; m < c.cells && feasible; ++m) {
      double used = 0.0;
      for (int n = 0; n < c.subcarriers; ++n) {
        const int t = m * c.subcarriers + n;
        p[t] = c.p_max[m] * idx[t] / (points - 1);
        used += p[t];
      }
      feasible = used <= c.p_max[m] * (1.0 + 1e-12);
    }
    if (feasible) {
      for (int t = 0; t < T; ++t) beams.g(t / c.subcarriers, t % c.subcarriers)[0] = std::sqrt(p[t]) * dir[t];
      const double w = weighted_sum_rate(channels, beams, as, c.weights);
      ++best.evaluated;
      if (w > best.wsr) {
        best.wsr = w;
        best.power = p;
      }
    }
    int t = 0;
    while (t < T && ++idx[t] == points) idx[t++] = 0;
    if (t == T) break;
  }
  return best;
}

NetworkConfig waterfilling_network(int subcarriers) {
  NetworkConfig c = NetworkConfig::desk();
  c.cells = 1;
  c.users_per_cell = 1;
  c.subcarriers = subcarriers;
  c.antennas = 1;
  c.p_max.assign(1, dbw_to_watts(20.0));
  c.validate();
  return c;
}

NetworkConfig gridsearch_network() {
  NetworkConfig c = NetworkConfig::desk();
  c.cells = 2;
  c.users_per_cell = 1;
  c.subcarriers = 1;
  c.antennas = 1;
  c.p_max.assign(2, dbw_to_watts(20.0));
  c.validate();
  return c;
}

namespace {

OracleComparison finish_comparison(std::uint64_t seed, const RunResult& r, double oracle) {
  OracleComparison out;
  out.seed = seed;
  out.spca = r.final_wsr();
  out.oracle = oracle;
  out.relative_difference = oracle > 0.0 ? (out.spca - oracle) / oracle : out.spca - oracle;
  out.iterations = r.iterations();
  out.termination = to_string(r.termination);
  return out;
}

}  // namespace

OracleComparison compare_waterfilling(const NetworkConfig& network, const SpcaOptions& options, std::uint64_t seed) {
  if (network.cells != 1 || network.users_per_cell != 1 || network.antennas != 1)
    throw ConfigError("network", "water-filling comparison needs M = 1, K = 1, Nt = 1");
  if (!network.equal_weights()) throw ConfigError("network.weights", "water-filling comparison needs equal weights");
  const Scenario sc = drop_network(network, seed);
  const ChannelSet ch = generate_channels(sc, seed);
  std::vector<double> gains;
  for (int n = 0; n < network.subcarriers; ++n) gains.push_back(std::norm(ch.h(0, 0, n)[0]));
  const WaterFilling wf = oracle_waterfilling(gains, network.p_max[0]);
  return finish_comparison(seed, run(sc, ch, options), wf.rate);
}

OracleComparison compare_gridsearch(const NetworkConfig& network, const SpcaOptions& options, std::uint64_t seed,
                                    int points) {
  const Scenario sc = drop_network(network, seed);
  const ChannelSet ch = generate_channels(sc, seed);
  const GridSearch g = oracle_gridsearch(sc, ch, points);
  return finish_comparison(seed, run(sc, ch, options), g.wsr);
}

}  // namespace wsrm
