#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wsrm/network.hpp"
#include "wsrm/rates.hpp"
#include "wsrm/solver.hpp"
#include "wsrm/subproblem.hpp"

namespace wsrm {

/// scaled: the floor of link t is epsilon * min(1, v0(t)), with v0 the SINR of the
/// channel-matched start; it equals epsilon on links at or above 0 dB and never
/// exceeds v0, so the start stays feasible. fixed: every floor is epsilon.
enum class FloorMode { scaled, fixed };

const char* to_string(FloorMode mode);
FloorMode parse_floor_mode(std::string_view name);

struct SpcaOptions {
  double epsilon = 1e-4;       ///< floor on v
  FloorMode floor_mode = FloorMode::scaled;
  double tol = 1e-4;           ///< relative WSR change that counts as converged
  int max_iterations = 50;     ///< I_max; 0 returns the initial point
  ObjectiveMethod method = ObjectiveMethod::gm;
  double weight_margin = 0.01;
  /// Inner solves that stop early (iteration limit, stall) keep their best iterate if all
  /// residuals are below this.
  double accept_residual = 1e-5;
  SolverSettings solver;
  std::string solver_name = "ipm";
  /// When non-empty, every subproblem is written here as subproblem_<i>.txt.
  std::string dump_dir;

  void validate() const;
};

enum class Termination { converged, max_iterations, solver_failure };

const char* to_string(Termination t);

struct IterationRecord {
  int iteration = 0;
  double wsr = 0.0;                 ///< true weighted sum-rate of the beams [bits/s/Hz]
  double surrogate = 0.0;           ///< sum_t log2 r(t) / s
  std::vector<double> bs_power;     ///< per-BS transmit power [W]
  double max_imag = 0.0;            ///< max_t |Im(h g)|
  /// max_t G(zeta, v, theta) - sqrt(v) zeta with the theta this iterate was solved at.
  double estimator_gap = 0.0;
  int solver_iterations = 0;
  double solve_seconds = 0.0;
  std::string solver_status;        ///< empty for the initial point
};

struct RunResult {
  std::vector<IterationRecord> trajectory;  ///< [0] is the initial point
  BeamformerSet beams;                      ///< final
  SpcaState state;                          ///< final, theta already updated
  Termination termination = Termination::max_iterations;
  std::vector<std::string> warnings;
  std::string failure;                      ///< solver message on solver_failure
  double weight_scale = 1.0;

  int iterations() const { return static_cast<int>(trajectory.size()) - 1; }
  double final_wsr() const { return trajectory.empty() ? 0.0 : trajectory.back().wsr; }
};

/// Inner solve that could not be used. Carries the SPCA iteration and the dump file (if any).
class SpcaError : public std::runtime_error {
 public:
  SpcaError(const std::string& what, int iteration, std::string dump)
      : std::runtime_error(what), iteration_(iteration), dump_(std::move(dump)) {}
  int iteration() const noexcept { return iteration_; }
  const std::string& dump() const noexcept { return dump_; }

 private:
  int iteration_;
  std::string dump_;
};

/// g = sqrt(P_max / N) h^H / ||h|| on every link; zero for an all-zero channel.
BeamformerSet initial_beamformers(const ChannelSet& channels, const Assignment& assignment,
                                  const NetworkConfig& config);

/// Channel-matched start: zeta, v and r at equality, v raised to its floor
/// before theta = sqrt(v) / zeta is taken.
SpcaState initialize(const ChannelSet& channels, const Assignment& assignment, const NetworkConfig& config,
                     const WeightVector& weights, double epsilon, FloorMode mode = FloorMode::scaled);

struct IterateResult {
  SpcaState state;
  IterationRecord record;
  Solution solution;
  bool accepted = false;
  std::string dump;
};

/// One subproblem solve plus the theta update. Never throws on solver trouble;
/// check `accepted`.
IterateResult iterate(const SpcaState& state, const ChannelSet& channels, const Assignment& assignment,
                      const WeightVector& weights, const NetworkConfig& config, const SpcaOptions& options);

/// The full loop. Throws SpcaError if the first subproblem cannot be solved;
/// later failures end the run with Termination::solver_failure.
RunResult run(const Scenario& scenario, const ChannelSet& channels, const SpcaOptions& options);

/// Max |Im(h g)| over all links.
double max_imaginary_part(const ChannelSet& channels, const BeamformerSet& beams, const Assignment& assignment);

}  // namespace wsrm
