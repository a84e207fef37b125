#include "wsrm/spca.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "wsrm/errors.hpp"

namespace wsrm {

void SpcaOptions::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon", "must be >= 0");
  if (!(tol > 0.0)) throw ConfigError("tol", "must be positive");
  if (max_iterations < 0) throw ConfigError("max_iterations", "must be >= 0");
  if (!(weight_margin > 0.0)) throw ConfigError("weight_margin", "must be positive");
  if (!(accept_residual > 0.0)) throw ConfigError("accept_residual", "must be positive");
  solver.validate();
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iterations: return "max-iterations";
    case Termination::solver_failure: return "solver-failure";
  }
  return "?";
}

const char* to_string(FloorMode mode) { return mode == FloorMode::scaled ? "scaled" : "fixed"; }

FloorMode parse_floor_mode(std::string_view name) {
  if (name == "scaled") return FloorMode::scaled;
  if (name == "fixed") return FloorMode::fixed;
  throw ConfigError("floor", fmt::format("expected scaled or fixed, got '{}'", name));
}

double max_imaginary_part(const ChannelSet& channels, const BeamformerSet& beams, const Assignment& assignment) {
  double worst = 0.0;
  for (int m = 0; m < beams.cells(); ++m)
    for (int n = 0; n < beams.subcarriers(); ++n) {
      const cdouble hg = inner(channels.h(assignment.global_user(m, n), m, n), beams.g(m, n));
      worst = std::max(worst, std::abs(hg.imag()));
    }
  return worst;
}

BeamformerSet initial_beamformers(const ChannelSet& channels, const Assignment& assignment,
                                  const NetworkConfig& config) {
  const int M = config.cells, N = config.subcarriers, Nt = config.antennas;
  BeamformerSet beams(M, N, Nt);
  for (int m = 0; m < M; ++m) {
    const double amp = std::sqrt(config.p_max[m] / N);
    for (int n = 0; n < N; ++n) {
      const auto h = channels.h(assignment.global_user(m, n), m, n);
      double nrm = 0.0;
      for (cdouble x : h) nrm += std::norm(x);
      nrm = std::sqrt(nrm);
      if (nrm == 0.0) continue;
      auto g = beams.g(m, n);
      for (int a = 0; a < Nt; ++a) g[a] = amp * std::conj(h[a]) / nrm;
    }
  }
  return beams;
}

SpcaState initialize(const ChannelSet& channels, const Assignment& assignment, const NetworkConfig& config,
                     const WeightVector& weights, double epsilon, FloorMode mode) {
  const int M = config.cells, N = config.subcarriers, T = M * N;
  if (weights.size() != T) throw ShapeError("initialize: weight vector length");
  SpcaState st;
  st.epsilon = epsilon;
  st.beams = initial_beamformers(channels, assignment, config);
  check_dimensions(channels, st.beams, assignment);
  st.theta.resize(T);
  st.r.resize(T);
  st.zeta.resize(T);
  st.v.resize(T);
  st.floor.resize(T);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < N; ++n) {
      const int t = m * N + n;
      const int kg = assignment.global_user(m, n);
      const double signal = std::abs(inner(channels.h(kg, m, n), st.beams.g(m, n)));
      double interference = 0.0;
      for (int mi = 0; mi < M; ++mi)
        if (mi != m) interference += std::norm(inner(channels.h(kg, mi, n), st.beams.g(mi, n)));
      const double zeta = std::sqrt(1.0 + interference);
      const double v = (signal / zeta) * (signal / zeta);
      st.zeta[t] = zeta;
      st.r[t] = std::pow(1.0 + v, weights.delta[t]);
      st.floor[t] = mode == FloorMode::scaled ? epsilon * std::min(1.0, v) : epsilon;
      st.v[t] = std::max(v, st.floor[t]);
      st.theta[t] = std::sqrt(st.v[t]) / zeta;
      // Zero channel and zero floor: any positive slope will do.
      if (!(st.theta[t] > 0.0)) st.theta[t] = 1.0;
    }
  return st;
}

IterateResult iterate(const SpcaState& state, const ChannelSet& channels, const Assignment& assignment,
                      const WeightVector& weights, const NetworkConfig& config, const SpcaOptions& options) {
  IterateResult out;
  const int index = state.iteration + 1;
  Subproblem sp = build_subproblem(channels, assignment, weights, state, config, options.method);

  if (!options.dump_dir.empty()) {
    std::filesystem::create_directories(options.dump_dir);
    out.dump = (std::filesystem::path(options.dump_dir) / fmt::format("subproblem_{}.txt", index)).string();
    std::ofstream f(out.dump);
    write_text(sp.program, f);
  }

  const SolverFn solver = SolverRegistry::instance().get(options.solver_name);
  const auto t0 = std::chrono::steady_clock::now();
  out.solution = solver(sp.program, options.solver);
  const auto t1 = std::chrono::steady_clock::now();

  IterationRecord& rec = out.record;
  rec.iteration = index;
  rec.solver_iterations = out.solution.iterations;
  rec.solve_seconds = std::chrono::duration<double>(t1 - t0).count();
  rec.solver_status = to_string(out.solution.status);

  const Solution& sol = out.solution;
  if (sol.status == SolveStatus::optimal) {
    out.accepted = true;
  } else if (sol.status == SolveStatus::max_iterations || sol.status == SolveStatus::numerical_failure) {
    // Both return the best iterate seen; use it if it is accurate enough.
    const ResidualReport rr = residuals(sp.program, sol);
    out.accepted = rr.max_optimality_residual() <= options.accept_residual;
  }
  if (!out.accepted) return out;

  const ExtractedSolution ex = extract_solution({sol.x.data(), static_cast<std::size_t>(sol.x.size())}, sp);
  SpcaState next;
  next.beams = ex.beams;
  next.epsilon = state.epsilon;
  next.floor = state.floor;
  next.iteration = index;
  const int T = state.links();
  next.r = ex.r;
  next.zeta.resize(T);
  next.v.resize(T);
  next.theta.resize(T);
  for (int t = 0; t < T; ++t) {
    // The solver meets the floors only to its tolerance.
    next.v[t] = std::max(ex.v[t], state.floor[t]);
    next.zeta[t] = std::max(ex.zeta[t], 1.0);
    const double g = upper_estimate(next.zeta[t], next.v[t], state.theta[t]) - std::sqrt(next.v[t]) * next.zeta[t];
    rec.estimator_gap = std::max(rec.estimator_gap, g);
    next.theta[t] = std::sqrt(next.v[t]) / next.zeta[t];
    if (!(next.theta[t] > 0.0)) next.theta[t] = state.theta[t];
  }
  try {
    next.validate();
  } catch (const StateError& e) {
    out.accepted = false;
    out.solution.message = e.what();
    return out;
  }

  const auto wl = config.weights;
  rec.wsr = weighted_sum_rate(channels, next.beams, assignment, wl);
  double logsum = 0.0;
  for (double r : next.r) logsum += std::log2(r);
  rec.surrogate = logsum / weights.scale;
  for (int m = 0; m < config.cells; ++m) rec.bs_power.push_back(per_bs_power(next.beams, m));
  rec.max_imag = max_imaginary_part(channels, next.beams, assignment);
  out.state = std::move(next);
  return out;
}

namespace {

IterationRecord initial_record(const SpcaState& st, const ChannelSet& channels, const Assignment& assignment,
                               const NetworkConfig& config, const WeightVector& weights) {
  IterationRecord rec;
  rec.wsr = weighted_sum_rate(channels, st.beams, assignment, config.weights);
  double logsum = 0.0;
  for (double r : st.r) logsum += std::log2(r);
  rec.surrogate = logsum / weights.scale;
  for (int m = 0; m < config.cells; ++m) rec.bs_power.push_back(per_bs_power(st.beams, m));
  rec.max_imag = max_imaginary_part(channels, st.beams, assignment);
  return rec;
}

}  // namespace

RunResult run(const Scenario& scenario, const ChannelSet& channels, const SpcaOptions& options) {
  options.validate();
  const NetworkConfig& config = scenario.config;
  config.validate();
  const WeightVector weights = scale_weights(link_weights(config, scenario.assignment), options.weight_margin);

  RunResult res;
  res.weight_scale = weights.scale;
  SpcaState state = initialize(channels, scenario.assignment, config, weights, options.epsilon, options.floor_mode);
  res.trajectory.push_back(initial_record(state, channels, scenario.assignment, config, weights));
  res.termination = Termination::max_iterations;

  for (int i = 1; i <= options.max_iterations; ++i) {
    IterateResult step = iterate(state, channels, scenario.assignment, weights, config, options);
    if (!step.accepted) {
      const std::string msg =
          fmt::format("subproblem {} not solved: {} ({})", i, step.record.solver_status, step.solution.message);
      if (i == 1)
        throw SpcaError(msg + "; the channel-matched starting point does not give a solvable first subproblem", i,
                        step.dump);
      res.termination = Termination::solver_failure;
      res.failure = msg;
      break;
    }
    if (step.solution.status != SolveStatus::optimal)
      res.warnings.push_back(fmt::format("subproblem {} accepted at reduced accuracy: {} ({})", i,
                                         step.record.solver_status, step.solution.message));
    const double prev = res.trajectory.back().wsr;
    res.trajectory.push_back(step.record);
    state = std::move(step.state);
    const double change = std::abs(res.trajectory.back().wsr - prev) / std::max(std::abs(prev), 1e-12);
    if (change < options.tol) {
      res.termination = Termination::converged;
      break;
    }
  }
  res.beams = state.beams;
  res.state = std::move(state);
  return res;
}

}  // namespace wsrm
