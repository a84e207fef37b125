#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <random>
#include <vector>

#include "wsrm/rng.hpp"

namespace wsrm {

using cdouble = std::complex<double>;

inline constexpr double kShadowingVarianceDb = 8.0;
inline constexpr double kReferenceDistance = 200.0;
inline constexpr double kPathLossExponent = 3.5;

double dbw_to_watts(double dbw);

/// Static description of a multicell OFDMA downlink.
struct NetworkConfig {
  int cells = 3;           ///< M
  int users_per_cell = 2;  ///< K
  int subcarriers = 8;     ///< N
  int antennas = 2;        ///< Nt
  std::vector<double> p_max{100.0, 100.0, 100.0};  ///< per-BS budget [W]
  double inter_bs_distance = 1000.0;               ///< [m]
  double annulus_inner = 500.0;                    ///< [m]
  double annulus_outer = 1000.0;                   ///< [m]
  /// User priorities, indexed [m * K + k]. Empty means all ones.
  std::vector<double> weights;

  /// Throws ConfigError naming the first violated field.
  void validate() const;

  int links() const { return cells * subcarriers; }
  int total_users() const { return cells * users_per_cell; }
  double weight(int m, int k) const;
  bool equal_weights() const;

  /// M=3, K=2, N=8, Nt=2, 20 dBW: small enough for unit tests.
  static NetworkConfig desk();
  /// Same network with 64 subcarriers.
  static NetworkConfig paper_scale();
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

/// Per-cell subcarrier schedule: user(m, n) is the in-cell index k = f(m, n).
class Assignment {
 public:
  Assignment() = default;
  Assignment(int cells, int subcarriers, int users_per_cell, std::vector<int> users);

  int cells() const { return cells_; }
  int subcarriers() const { return subcarriers_; }
  int users_per_cell() const { return users_per_cell_; }

  int user(int m, int n) const { return users_[static_cast<std::size_t>(m) * subcarriers_ + n]; }
  /// Global user index m*K + f(m, n).
  int global_user(int m, int n) const { return m * users_per_cell_ + user(m, n); }
  /// S_km, ascending.
  std::vector<int> subcarriers_of(int m, int k) const;
  std::span<const int> raw() const { return users_; }

  /// Throws ShapeError unless every entry is a valid user and each user has a subcarrier.
  void validate() const;

 private:
  int cells_ = 0;
  int subcarriers_ = 0;
  int users_per_cell_ = 0;
  std::vector<int> users_;
};

struct Scenario {
  NetworkConfig config;
  std::vector<Point> base_stations;
  std::vector<Point> users;        ///< global index m*K + k; served by BS m
  std::vector<double> distances;   ///< [kg * M + m]
  Assignment assignment;

  double distance_to(int global_user, int bs) const {
    return distances[static_cast<std::size_t>(global_user) * config.cells + bs];
  }
};

/// h[kg][m'][n] in C^{1 x Nt}: every user to every BS on every subcarrier.
class ChannelSet {
 public:
  ChannelSet() = default;
  ChannelSet(int users, int cells, int subcarriers, int antennas);

  int users() const { return users_; }
  int cells() const { return cells_; }
  int subcarriers() const { return subcarriers_; }
  int antennas() const { return antennas_; }

  std::span<cdouble> h(int global_user, int bs, int n);
  std::span<const cdouble> h(int global_user, int bs, int n) const;

  std::span<const cdouble> raw() const { return data_; }
  std::span<cdouble> raw() { return data_; }

 private:
  std::size_t offset(int kg, int m, int n) const;

  int users_ = 0;
  int cells_ = 0;
  int subcarriers_ = 0;
  int antennas_ = 0;
  std::vector<cdouble> data_;
};

/// Positions of M base stations with adjacent spacing `spacing`: a triangle for
/// M <= 3, otherwise points of the triangular lattice nearest the first triangle.
std::vector<Point> base_station_layout(int cells, double spacing);

/// Places users uniformly (by area) in the annulus around their serving BS and
/// draws the subcarrier assignment.
Scenario drop_network(const NetworkConfig& config, std::uint64_t seed);

/// Random balanced partition of the N subcarriers of each cell among its K
/// users: round-robin over a shuffled subcarrier list, so every user gets
/// floor(N/K) or ceil(N/K) subcarriers.
Assignment assign_subcarriers(const NetworkConfig& config, std::uint64_t seed);

/// Large-scale amplitude factor (200 / l)^3.5.
double path_loss_factor(double distance_m);

/// Draws the small- and large-scale fading terms of one channel entry.
class FadingSampler {
 public:
  explicit FadingSampler(std::uint64_t seed);
  /// 10 log10(Phi) ~ N(0, 8).
  double shadowing_db();
  /// Phi as a linear amplitude factor.
  double shadowing() { return std::pow(10.0, shadowing_db() / 10.0); }
  /// Lambda entry ~ CN(0, 1).
  cdouble rayleigh();

 private:
  Philox4x32 engine_;
  std::normal_distribution<double> shadow_db_;
  std::normal_distribution<double> half_;
};

/// (200/l)^3.5 * Phi * Lambda for a single antenna entry.
inline cdouble compose_channel(double distance_m, double shadowing, cdouble fading) {
  return path_loss_factor(distance_m) * shadowing * fading;
}

/// h = (200/l)^3.5 * Phi * Lambda with 10 log10(Phi) ~ N(0, 8) and
/// Lambda ~ CN(0, I_Nt), i.i.d. over users, BSs and subcarriers.
ChannelSet generate_channels(const Scenario& scenario, std::uint64_t seed);

}  // namespace wsrm
