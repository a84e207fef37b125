#pragma once

#include <span>
#include <string>
#include <vector>

#include "wsrm/network.hpp"

namespace wsrm {

/// One beamformer g_{kmn} in C^{Nt} per (cell, subcarrier); the served user is f(m, n).
class BeamformerSet {
 public:
  BeamformerSet() = default;
  BeamformerSet(int cells, int subcarriers, int antennas);

  int cells() const { return cells_; }
  int subcarriers() const { return subcarriers_; }
  int antennas() const { return antennas_; }

  std::span<cdouble> g(int m, int n);
  std::span<const cdouble> g(int m, int n) const;

  std::span<const cdouble> raw() const { return data_; }
  std::span<cdouble> raw() { return data_; }

 private:
  int cells_ = 0;
  int subcarriers_ = 0;
  int antennas_ = 0;
  std::vector<cdouble> data_;
};

/// Flat link index t = m * N + n over L = {(f(m,n), m, n)}.
struct LinkIndex {
  int cell = 0;
  int subcarrier = 0;

  static LinkIndex from_flat(int t, int subcarriers) { return {t / subcarriers, t % subcarriers}; }
  int flat(int subcarriers) const { return cell * subcarriers + subcarrier; }
};

/// Row-vector times column-vector, h g.
cdouble inner(std::span<const cdouble> h, std::span<const cdouble> g);

/// Received power of BS `m_tx`'s subcarrier-n beam at the user served by (m_rx, n).
double received_power(const ChannelSet& channels, const BeamformerSet& beams, const Assignment& assignment,
                      LinkIndex rx, int m_tx);

/// |h_kmn g_kmn|^2 / (1 + sum_{m' != m} |h_km'n g_k'm'n|^2) with unit noise.
double sinr(const ChannelSet& channels, const BeamformerSet& beams, const Assignment& assignment, LinkIndex link);

struct RateReport {
  double weighted_sum_rate = 0.0;      ///< bits/s/Hz
  std::vector<double> link_rate;       ///< c_kmn, indexed by flat link t
  std::vector<double> user_rate;       ///< R_km, indexed [m * K + k]
};

/// `weights` indexed [m * K + k]; empty means all ones. Throws ConfigError on negative weights.
RateReport evaluate_rates(const ChannelSet& channels, const BeamformerSet& beams, const Assignment& assignment,
                          std::span<const double> weights);

double weighted_sum_rate(const ChannelSet& channels, const BeamformerSet& beams, const Assignment& assignment,
                         std::span<const double> weights);

/// sum_n ||g_kmn||^2.
double per_bs_power(const BeamformerSet& beams, int m);

struct PowerViolation {
  int cell = 0;
  double power = 0.0;
  double budget = 0.0;
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<PowerViolation> violations;
  std::string summary() const;
};

/// Feasible iff per_bs_power(m) <= p_max[m] * (1 + tol) for every cell.
FeasibilityReport check_feasibility(const BeamformerSet& beams, const NetworkConfig& config, double tol);

/// Throws ShapeError if the four objects disagree on M, N, Nt or user count.
void check_dimensions(const ChannelSet& channels, const BeamformerSet& beams, const Assignment& assignment);

}  // namespace wsrm
