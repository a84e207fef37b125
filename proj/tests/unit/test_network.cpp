#include <cmath>
#include <numbers>

#include "doctest.h"
#include "wsrm/errors.hpp"
#include "wsrm/network.hpp"

using namespace wsrm;

TEST_CASE("base station layout spacing") {
  for (int m : {1, 2, 3, 4, 7}) {
    const auto bs = base_station_layout(m, 1000.0);
    REQUIRE(bs.size() == static_cast<std::size_t>(m));
    double nearest = 1e300;
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) nearest = std::min(nearest, distance(bs[i], bs[j]));
    if (m > 1) CHECK(nearest == doctest::Approx(1000.0));
  }
  const auto tri = base_station_layout(3, 1000.0);
  CHECK(distance(tri[0], tri[1]) == doctest::Approx(1000.0));
  CHECK(distance(tri[1], tri[2]) == doctest::Approx(1000.0));
  CHECK(distance(tri[0], tri[2]) == doctest::Approx(1000.0));
}

TEST_CASE("users stay in the serving annulus") {
  const NetworkConfig cfg = NetworkConfig::desk();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scenario sc = drop_network(cfg, seed);
    for (int m = 0; m < cfg.cells; ++m)
      for (int k = 0; k < cfg.users_per_cell; ++k) {
        const double l = sc.distance_to(m * cfg.users_per_cell + k, m);
        CHECK(l >= 500.0 - 1e-9);
        CHECK(l <= 1000.0 + 1e-9);
      }
  }
  NetworkConfig ring = cfg;
  ring.annulus_inner = ring.annulus_outer = 700.0;
  const Scenario sc = drop_network(ring, 3);
  for (int kg = 0; kg < ring.total_users(); ++kg) CHECK(sc.distance_to(kg, kg / ring.users_per_cell) == doctest::Approx(700.0));
}

TEST_CASE("radius density is uniform over the area") {
  // Fraction of users inside radius r should be (r^2 - r0^2) / (r1^2 - r0^2).
  NetworkConfig cfg = NetworkConfig::desk();
  cfg.cells = 1;
  cfg.users_per_cell = 400;
  cfg.subcarriers = 400;
  cfg.p_max = {100.0};
  const Scenario sc = drop_network(cfg, 11);
  int inside = 0;
  for (int k = 0; k < cfg.users_per_cell; ++k) inside += sc.distance_to(k, 0) < 750.0;
  const double expected = (750.0 * 750.0 - 500.0 * 500.0) / (1000.0 * 1000.0 - 500.0 * 500.0);
  CHECK(inside / 400.0 == doctest::Approx(expected).epsilon(0.15));
}

TEST_CASE("assignment is a balanced partition") {
  NetworkConfig cfg = NetworkConfig::desk();
  cfg.users_per_cell = 3;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Assignment a = assign_subcarriers(cfg, seed);
    a.validate();
    for (int m = 0; m < cfg.cells; ++m) {
      int total = 0;
      for (int k = 0; k < cfg.users_per_cell; ++k) {
        const auto s = a.subcarriers_of(m, k);
        CHECK(s.size() >= 2);
        CHECK(s.size() <= 3);
        total += static_cast<int>(s.size());
      }
      CHECK(total == cfg.subcarriers);
    }
  }
}

TEST_CASE("path loss and composition") {
  CHECK(path_loss_factor(200.0) == doctest::Approx(1.0));
  CHECK(path_loss_factor(400.0) == doctest::Approx(std::pow(0.5, 3.5)));
  CHECK(compose_channel(400.0, 2.0, {1.0, -1.0}) == cdouble(2.0 * std::pow(0.5, 3.5), -2.0 * std::pow(0.5, 3.5)));
  CHECK(dbw_to_watts(20.0) == doctest::Approx(100.0));
}

TEST_CASE("fading statistics") {
  FadingSampler s(99);
  const int n = 200000;
  double sum = 0.0, sq = 0.0, power = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = s.shadowing_db();
    sum += x;
    sq += x * x;
  }
  for (int i = 0; i < n; ++i) power += std::norm(s.rayleigh());
  const double mean = sum / n, var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(var == doctest::Approx(8.0).epsilon(0.05));
  CHECK(power / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("channels are reproducible and shaped") {
  const NetworkConfig cfg = NetworkConfig::desk();
  const Scenario sc = drop_network(cfg, 5);
  const ChannelSet a = generate_channels(sc, 5), b = generate_channels(sc, 5), c = generate_channels(sc, 6);
  CHECK(a.raw().size() == static_cast<std::size_t>(6 * 3 * 8 * 2));
  CHECK(std::equal(a.raw().begin(), a.raw().end(), b.raw().begin()));
  CHECK(!std::equal(a.raw().begin(), a.raw().end(), c.raw().begin()));
}

TEST_CASE("config validation names the field") {
  NetworkConfig cfg = NetworkConfig::desk();
  cfg.subcarriers = 1;
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "subcarriers");
  }
  cfg = NetworkConfig::desk();
  cfg.p_max = {100.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = NetworkConfig::desk();
  cfg.annulus_inner = 2000.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(NetworkConfig::paper_scale().subcarriers == 64);
}
