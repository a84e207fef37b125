#include "wsrm/rates.hpp"

#include <cmath>
#include <sstream>

#include "wsrm/errors.hpp"

namespace wsrm {

BeamformerSet::BeamformerSet(int cells, int subcarriers, int antennas)
    : cells_(cells),
      subcarriers_(subcarriers),
      antennas_(antennas),
      data_(static_cast<std::size_t>(cells) * subcarriers * antennas) {}

std::span<cdouble> BeamformerSet::g(int m, int n) {
  return {data_.data() + (static_cast<std::size_t>(m) * subcarriers_ + n) * antennas_,
          static_cast<std::size_t>(antennas_)};
}

std::span<const cdouble> BeamformerSet::g(int m, int n) const {
  return {data_.data() + (static_cast<std::size_t>(m) * subcarriers_ + n) * antennas_,
          static_cast<std::size_t>(antennas_)};
}

cdouble inner(std::span<const cdouble> h, std::span<const cdouble> g) {
  if (h.size() != g.size()) throw ShapeError("inner: channel and beamformer lengths differ");
  cdouble acc = 0.0;
  for (std::size_t a = 0; a < h.size(); ++a) acc += h[a] * g[a];
  return acc;
}

void check_dimensions(const ChannelSet& channels, const BeamformerSet& beams, const Assignment& assignment) {
  if (beams.cells() != channels.cells() || beams.subcarriers() != channels.subcarriers() ||
      beams.antennas() != channels.antennas())
    throw ShapeError("beamformer set does not match channel dimensions");
  if (assignment.cells() != channels.cells() || assignment.subcarriers() != channels.subcarriers() ||
      assignment.cells() * assignment.users_per_cell() != channels.users())
    throw ShapeError("assignment does not match channel dimensions");
}

double received_power(const ChannelSet& channels, const BeamformerSet& beams, const Assignment& assignment,
                      LinkIndex rx, int m_tx) {
  const int kg = assignment.global_user(rx.cell, rx.subcarrier);
  return std::norm(inner(channels.h(kg, m_tx, rx.subcarrier), beams.g(m_tx, rx.subcarrier)));
}

double sinr(const ChannelSet& channels, const BeamformerSet& beams, const Assignment& assignment, LinkIndex link) {
  check_dimensions(channels, beams, assignment);
  if (link.cell < 0 || link.cell >= channels.cells() || link.subcarrier < 0 ||
      link.subcarrier >= channels.subcarriers())
    throw ShapeError("sinr: link index out of range");
  double interference = 1.0;
  for (int mp = 0; mp < channels.cells(); ++mp)
    if (mp != link.cell) interference += received_power(channels, beams, assignment, link, mp);
  return received_power(channels, beams, assignment, link, link.cell) / interference;
}

RateReport evaluate_rates(const ChannelSet& channels, const BeamformerSet& beams, const Assignment& assignment,
                          std::span<const double> weights) {
  check_dimensions(channels, beams, assignment);
  const int M = channels.cells(), N = channels.subcarriers(), K = assignment.users_per_cell();
  if (!weights.empty() && static_cast<int>(weights.size()) != M * K)
    throw ShapeError("weights: expected one entry per user");
  for (double w : weights)
    if (w < 0.0) throw ConfigError("weights", "weights must be nonnegative");

  RateReport report;
  report.link_rate.resize(static_cast<std::size_t>(M) * N);
  report.user_rate.assign(static_cast<std::size_t>(M) * K, 0.0);
  for (int m = 0; m < M; ++m) {
    for (int n = 0; n < N; ++n) {
      const double c = std::log2(1.0 + sinr(channels, beams, assignment, {m, n}));
      const int kg = assignment.global_user(m, n);
      report.link_rate[static_cast<std::size_t>(m) * N + n] = c;
      report.user_rate[kg] += c;
    }
  }
  for (int kg = 0; kg < M * K; ++kg)
    report.weighted_sum_rate += (weights.empty() ? 1.0 : weights[kg]) * report.user_rate[kg];
  return report;
}

double weighted_sum_rate(const ChannelSet& channels, const BeamformerSet& beams, const Assignment& assignment,
                         std::span<const double> weights) {
  return evaluate_rates(channels, beams, assignment, weights).weighted_sum_rate;
}

double per_bs_power(const BeamformerSet& beams, int m) {
  if (m < 0 || m >= beams.cells()) throw ShapeError("per_bs_power: cell index out of range");
  double p = 0.0;
  for (int n = 0; n < beams.subcarriers(); ++n)
    for (const cdouble& x : beams.g(m, n)) p += std::norm(x);
  return p;
}

std::string FeasibilityReport::summary() const {
  if (feasible) return "feasible";
  std::ostringstream os;
  for (const auto& v : violations)
    os << "BS " << v.cell << " uses " << v.power << " W of " << v.budget << " W; ";
  return os.str();
}

FeasibilityReport check_feasibility(const BeamformerSet& beams, const NetworkConfig& config, double tol) {
  if (tol < 0.0) throw ConfigError("tol", "must be nonnegative");
  if (static_cast<int>(config.p_max.size()) != beams.cells()) throw ShapeError("p_max does not match cell count");
  FeasibilityReport report;
  for (int m = 0; m < beams.cells(); ++m) {
    const double p = per_bs_power(beams, m);
    if (p > config.p_max[m] * (1.0 + tol)) report.violations.push_back({m, p, config.p_max[m]});
  }
  report.feasible = report.violations.empty();
  return report;
}

}  // namespace wsrm
