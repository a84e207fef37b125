#include "wsrm/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "wsrm/errors.hpp"
#include "wsrm/rng.hpp"

namespace wsrm {

double dbw_to_watts(double dbw) { return std::pow(10.0, dbw / 10.0); }

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

void NetworkConfig::validate() const {
  if (cells < 1) throw ConfigError("cells", "must be >= 1");
  if (users_per_cell < 1) throw ConfigError("users_per_cell", "must be >= 1");
  if (antennas < 1) throw ConfigError("antennas", "must be >= 1");
  if (subcarriers < users_per_cell)
    throw ConfigError("subcarriers", "must be >= users_per_cell so every user gets a subcarrier");
  if (static_cast<int>(p_max.size()) != cells)
    throw ConfigError("p_max", "expected one budget per cell");
  for (double p : p_max)
    if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("p_max", "budgets must be positive and finite");
  if (!(inter_bs_distance > 0.0)) throw ConfigError("inter_bs_distance", "must be positive");
  if (!(annulus_inner >= 0.0)) throw ConfigError("annulus_inner", "must be nonnegative");
  if (!(annulus_inner <= annulus_outer))
    throw ConfigError("annulus_outer", "must not be smaller than annulus_inner");
  if (!weights.empty()) {
    if (static_cast<int>(weights.size()) != total_users())
      throw ConfigError("weights", "expected cells * users_per_cell entries");
    for (double w : weights)
      if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("weights", "weights must be positive");
  }
}

double NetworkConfig::weight(int m, int k) const {
  return weights.empty() ? 1.0 : weights[static_cast<std::size_t>(m) * users_per_cell + k];
}

bool NetworkConfig::equal_weights() const {
  return std::all_of(weights.begin(), weights.end(), [](double w) { return w == 1.0; });
}

NetworkConfig NetworkConfig::desk() { return NetworkConfig{}; }

NetworkConfig NetworkConfig::paper_scale() {
  NetworkConfig cfg;
  cfg.subcarriers = 64;
  return cfg;
}

// --- Assignment -------------------------------------------------------------

Assignment::Assignment(int cells, int subcarriers, int users_per_cell, std::vector<int> users)
    : cells_(cells), subcarriers_(subcarriers), users_per_cell_(users_per_cell), users_(std::move(users)) {
  validate();
}

std::vector<int> Assignment::subcarriers_of(int m, int k) const {
  std::vector<int> out;
  for (int n = 0; n < subcarriers_; ++n)
    if (user(m, n) == k) out.push_back(n);
  return out;
}

void Assignment::validate() const {
  if (users_.size() != static_cast<std::size_t>(cells_) * subcarriers_)
    throw ShapeError("assignment: expected cells * subcarriers entries");
  for (int m = 0; m < cells_; ++m) {
    std::vector<int> count(users_per_cell_, 0);
    for (int n = 0; n < subcarriers_; ++n) {
      const int k = user(m, n);
      if (k < 0 || k >= users_per_cell_) throw ShapeError("assignment: user index out of range");
      ++count[k];
    }
    if (std::find(count.begin(), count.end(), 0) != count.end())
      throw ShapeError("assignment: cell " + std::to_string(m) + " has a user without subcarriers");
  }
}

// --- ChannelSet -------------------------------------------------------------

ChannelSet::ChannelSet(int users, int cells, int subcarriers, int antennas)
    : users_(users),
      cells_(cells),
      subcarriers_(subcarriers),
      antennas_(antennas),
      data_(static_cast<std::size_t>(users) * cells * subcarriers * antennas) {
  if (users < 1 || cells < 1 || subcarriers < 1 || antennas < 1) throw ShapeError("channel set: empty dimension");
}

std::size_t ChannelSet::offset(int kg, int m, int n) const {
  return ((static_cast<std::size_t>(kg) * cells_ + m) * subcarriers_ + n) * antennas_;
}

std::span<cdouble> ChannelSet::h(int kg, int m, int n) {
  return {data_.data() + offset(kg, m, n), static_cast<std::size_t>(antennas_)};
}

std::span<const cdouble> ChannelSet::h(int kg, int m, int n) const {
  return {data_.data() + offset(kg, m, n), static_cast<std::size_t>(antennas_)};
}

// --- Generators ---------------------------------------------------------------

std::vector<Point> base_station_layout(int cells, double spacing) {
  const double row = spacing * std::numbers::sqrt3 / 2.0;
  const std::vector<Point> triangle{{0.0, 0.0}, {spacing, 0.0}, {spacing / 2.0, row}};
  if (cells <= 3) return {triangle.begin(), triangle.begin() + cells};

  // Triangular lattice sites, ordered by distance from the first triangle's
  // centroid and then by angle, which keeps the first three sites unchanged.
  const Point centre{spacing / 2.0, row / 3.0};
  const int radius = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cells)))) + 2;
  std::vector<Point> sites;
  for (int j = -radius; j <= radius; ++j)
    for (int i = -radius; i <= radius; ++i) sites.push_back({(i + 0.5 * j) * spacing, j * row});
  auto key = [&](const Point& p) {
    const double d = std::round(distance(p, centre) * 1e6) / 1e6;
    return std::pair{d, std::atan2(p.y - centre.y, p.x - centre.x)};
  };
  std::sort(sites.begin(), sites.end(), [&](const Point& a, const Point& b) { return key(a) < key(b); });
  sites.resize(cells);
  return sites;
}

Assignment assign_subcarriers(const NetworkConfig& config, std::uint64_t seed) {
  if (config.subcarriers < config.users_per_cell)
    throw InfeasibleAssignment("subcarriers", "fewer subcarriers than users in a cell");
  const int M = config.cells, N = config.subcarriers, K = config.users_per_cell;
  std::vector<int> users(static_cast<std::size_t>(M) * N);
  for (int m = 0; m < M; ++m) {
    auto engine = make_engine(seed, Stream::assignment, static_cast<std::uint32_t>(m));
    std::vector<int> order(N), who(K);
    for (int n = 0; n < N; ++n) order[n] = n;
    for (int k = 0; k < K; ++k) who[k] = k;
    std::shuffle(order.begin(), order.end(), engine);
    std::shuffle(who.begin(), who.end(), engine);
    for (int i = 0; i < N; ++i) users[static_cast<std::size_t>(m) * N + order[i]] = who[i % K];
  }
  return Assignment(M, N, K, std::move(users));
}

Scenario drop_network(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  Scenario sc;
  sc.config = config;
  sc.base_stations = base_station_layout(config.cells, config.inter_bs_distance);

  auto engine = make_engine(seed, Stream::geometry);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r0 = config.annulus_inner, r1 = config.annulus_outer;
  for (int m = 0; m < config.cells; ++m) {
    for (int k = 0; k < config.users_per_cell; ++k) {
      // Inverse-CDF sampling of the radius gives a uniform density over the area.
      const double u = unit(engine), phi = 2.0 * std::numbers::pi * unit(engine);
      const double radius = (r0 == r1) ? r0 : std::sqrt(r0 * r0 + u * (r1 * r1 - r0 * r0));
      const Point bs = sc.base_stations[m];
      sc.users.push_back({bs.x + radius * std::cos(phi), bs.y + radius * std::sin(phi)});
    }
  }
  for (const Point& user : sc.users)
    for (const Point& bs : sc.base_stations) sc.distances.push_back(distance(user, bs));
  sc.assignment = assign_subcarriers(config, seed);
  return sc;
}

double path_loss_factor(double distance_m) {
  return std::pow(kReferenceDistance / distance_m, kPathLossExponent);
}

FadingSampler::FadingSampler(std::uint64_t seed)
    : engine_(make_engine(seed, Stream::fading)),
      shadow_db_(0.0, std::sqrt(kShadowingVarianceDb)),
      half_(0.0, std::sqrt(0.5)) {}

double FadingSampler::shadowing_db() { return shadow_db_(engine_); }

cdouble FadingSampler::rayleigh() {
  const double re = half_(engine_);
  const double im = half_(engine_);
  return {re, im};
}

ChannelSet generate_channels(const Scenario& scenario, std::uint64_t seed) {
  const NetworkConfig& cfg = scenario.config;
  cfg.validate();
  if (static_cast<int>(scenario.distances.size()) != cfg.total_users() * cfg.cells)
    throw ShapeError("scenario: distance table does not match the configuration");

  ChannelSet channels(cfg.total_users(), cfg.cells, cfg.subcarriers, cfg.antennas);
  FadingSampler sampler(seed);

  for (int kg = 0; kg < cfg.total_users(); ++kg) {
    for (int m = 0; m < cfg.cells; ++m) {
      const double l = scenario.distance_to(kg, m);
      for (int n = 0; n < cfg.subcarriers; ++n) {
        const double shadowing = sampler.shadowing();
        for (cdouble& entry : channels.h(kg, m, n)) entry = compose_channel(l, shadowing, sampler.rayleigh());
      }
    }
  }
  return channels;
}

}  // namespace wsrm
