#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wsrm/network.hpp"
#include "wsrm/serialize.hpp"
#include "wsrm/spca.hpp"

namespace wsrm {

/// Keys a sweep may vary. Values are kept as written so labels round-trip.
struct SweepSpec {
  std::string key;                  ///< p_max_dbw, epsilon or method
  std::vector<std::string> values;  ///< one label per axis point
};

/// One experiment: network, algorithm options, trial count and seed.
struct ExperimentConfig {
  NetworkConfig network;
  SpcaOptions spca;
  int trials = 1;
  std::uint64_t seed = 0;
  int threads = 0;  ///< 0: one per hardware thread, capped at the trial count
  std::optional<SweepSpec> sweep;

  void validate() const;
  /// Copy with one sweep point applied.
  ExperimentConfig at_axis(const std::string& value) const;
};

/// Parses a config document, or the config stored in a manifest. Syntax
/// errors are reported as ConfigError with "line L, column C" in the field.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
Json to_json(const ExperimentConfig& config);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  bool ok = false;        ///< false if the trial threw
  std::string error;
  RunResult run;
};

/// Drops the network and draws channels from trial_seed(base_seed, trial), then runs SPCA.
/// Never throws on algorithm trouble; the error is recorded in the result.
TrialResult run_trial(const NetworkConfig& network, const SpcaOptions& options, std::uint64_t base_seed, int trial,
                      const std::string& dump_root = {});

/// Results ordered by trial index regardless of scheduling.
std::vector<TrialResult> monte_carlo(const NetworkConfig& network, const SpcaOptions& options, int trials,
                                     std::uint64_t base_seed, int threads = 0, const std::string& dump_root = {});

struct Aggregate {
  int trials = 0;
  int completed = 0;        ///< trials that produced a result
  double mean_wsr = 0.0;
  double stdev_wsr = 0.0;   ///< sample standard deviation; 0 for one result
  double mean_iterations = 0.0;
  int converged = 0;
  int failures = 0;         ///< thrown trials plus solver-failure terminations
};

/// Sums run over sorted values, so the result does not depend on trial order.
Aggregate aggregate(std::span<const TrialResult> results);

/// "average_sum_rate" for equal weights, else "weighted_sum_rate".
std::string metric_label(const NetworkConfig& network);

struct RunArtifacts {
  std::filesystem::path directory;
  std::vector<std::string> files;      ///< relative to `directory`
  std::vector<Aggregate> aggregates;   ///< one per axis point (one for a plain run)
  int failed_trials = 0;
};

struct ArtifactOptions {
  bool timing = false;   ///< adds wall-clock columns; outputs are then not reproducible
  bool dump = false;     ///< writes every subproblem under dumps/
  std::string command;   ///< recorded in the manifest
};

/// Writes trials.csv, aggregate.csv, trajectories/ and manifest.json under `out`.
RunArtifacts run_experiment(const ExperimentConfig& config, const std::filesystem::path& out,
                            const ArtifactOptions& options = {});
/// As run_experiment, once per sweep value. Requires `config.sweep`.
RunArtifacts run_sweep(const ExperimentConfig& config, const std::filesystem::path& out,
                       const ArtifactOptions& options = {});

// --- reference solutions ----------------------------------------------------------

struct WaterFilling {
  std::vector<double> power;
  double level = 0.0;  ///< water level mu
  double rate = 0.0;   ///< sum_n log2(1 + p_n g_n)
};

/// Maximizes sum_n log2(1 + p_n g_n) subject to sum_n p_n <= p_max by bisection
/// on the water level (relative width 1e-10).
WaterFilling oracle_waterfilling(std::span<const double> gains, double p_max);

struct GridSearch {
  std::vector<double> power;  ///< per link t = m * N + n
  double wsr = 0.0;
  long evaluated = 0;
};

inline constexpr long kGridSearchMaxPoints = 20'000'000;

/// Exhaustive search over per-link powers with `points` levels in [0, P_max[m]],
/// skipping points that break a per-BS budget. Needs Nt = 1 (phase is then
/// irrelevant); throws ConfigError if points^T exceeds kGridSearchMaxPoints.
GridSearch oracle_gridsearch(const Scenario& scenario, const ChannelSet& channels, int points = 201);

struct OracleComparison {
  std::uint64_t seed = 0;
  double spca = 0.0;
  double oracle = 0.0;
  double relative_difference = 0.0;  ///< (spca - oracle) / oracle
  int iterations = 0;
  std::string termination;
};

/// Single cell, K = 1, Nt = 1 network with `subcarriers` subcarriers.
NetworkConfig waterfilling_network(int subcarriers = 8);
/// Two cells, K = 1, N = 1, Nt = 1.
NetworkConfig gridsearch_network();

OracleComparison compare_waterfilling(const NetworkConfig& network, const SpcaOptions& options, std::uint64_t seed);
OracleComparison compare_gridsearch(const NetworkConfig& network, const SpcaOptions& options, std::uint64_t seed,
                                    int points = 201);

}  // namespace wsrm
