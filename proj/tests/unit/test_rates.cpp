#include <cmath>
#include <complex>

#include "doctest.h"
#include "wsrm/errors.hpp"
#include "wsrm/rates.hpp"
#include "wsrm/spca.hpp"

using namespace wsrm;

namespace {

// M cells, one user each, one subcarrier, one antenna; h[k][m] real.
struct Tiny {
  ChannelSet ch;
  BeamformerSet beams;
  Assignment as;
  Tiny(std::vector<std::vector<double>> h, std::vector<double> g)
      : ch(static_cast<int>(h.size()), static_cast<int>(h.size()), 1, 1),
        beams(static_cast<int>(h.size()), 1, 1),
        as(static_cast<int>(h.size()), 1, 1, std::vector<int>(h.size(), 0)) {
    for (std::size_t k = 0; k < h.size(); ++k)
      for (std::size_t m = 0; m < h.size(); ++m) ch.h(int(k), int(m), 0)[0] = h[k][m];
    for (std::size_t m = 0; m < g.size(); ++m) beams.g(int(m), 0)[0] = g[m];
  }
};

// Straight transcription of the SINR formula with explicit loops.
double reference_sinr(const ChannelSet& ch, const BeamformerSet& b, const Assignment& a, int m, int n) {
  auto hg = [&](int kg, int bs) {
    cdouble s = 0.0;
    for (int i = 0; i < ch.antennas(); ++i) s += ch.h(kg, bs, n)[i] * b.g(bs, n)[i];
    return std::norm(s);
  };
  const int kg = a.global_user(m, n);
  double interference = 0.0;
  for (int mp = 0; mp < ch.cells(); ++mp)
    if (mp != m) interference += hg(kg, mp);
  return hg(kg, m) / (1.0 + interference);
}

}  // namespace

TEST_CASE("sinr examples") {
  Tiny one({{std::sqrt(3.0)}}, {1.0});
  CHECK(sinr(one.ch, one.beams, one.as, {0, 0}) == doctest::Approx(3.0));
  CHECK(weighted_sum_rate(one.ch, one.beams, one.as, {}) == doctest::Approx(2.0));

  Tiny two({{2.0, 1.0}, {0.0, 1.0}}, {1.0, 1.0});
  CHECK(sinr(two.ch, two.beams, two.as, {0, 0}) == doctest::Approx(2.0));

  Tiny off({{2.0, 1.0}, {1.0, 1.0}}, {0.0, 0.0});
  CHECK(sinr(off.ch, off.beams, off.as, {0, 0}) == 0.0);
  CHECK(weighted_sum_rate(off.ch, off.beams, off.as, {}) == 0.0);
}

TEST_CASE("weights scale the sum rate linearly") {
  const NetworkConfig cfg = NetworkConfig::desk();
  const Scenario sc = drop_network(cfg, 1);
  const ChannelSet ch = generate_channels(sc, 1);
  const BeamformerSet b = initial_beamformers(ch, sc.assignment, cfg);
  std::vector<double> w(cfg.total_users(), 1.0), w2(cfg.total_users(), 2.0);
  const double base = weighted_sum_rate(ch, b, sc.assignment, w);
  CHECK(weighted_sum_rate(ch, b, sc.assignment, w2) == doctest::Approx(2.0 * base));
  w[0] = -1.0;
  CHECK_THROWS_AS(weighted_sum_rate(ch, b, sc.assignment, w), ConfigError);
}

TEST_CASE("sinr matches the reference and is phase invariant") {
  const NetworkConfig cfg = NetworkConfig::desk();
  const Scenario sc = drop_network(cfg, 4);
  const ChannelSet ch = generate_channels(sc, 4);
  BeamformerSet b = initial_beamformers(ch, sc.assignment, cfg);
  b.g(1, 3)[0] *= 0.3;
  b.g(2, 3)[1] = {0.5, -2.0};
  for (int m = 0; m < cfg.cells; ++m)
    for (int n = 0; n < cfg.subcarriers; ++n) {
      const double ref = reference_sinr(ch, b, sc.assignment, m, n);
      CHECK(sinr(ch, b, sc.assignment, {m, n}) == doctest::Approx(ref).epsilon(1e-12));
    }
  const double before = weighted_sum_rate(ch, b, sc.assignment, {});
  for (cdouble& x : b.g(1, 2)) x *= std::polar(1.0, 0.77);
  CHECK(weighted_sum_rate(ch, b, sc.assignment, {}) == doctest::Approx(before).epsilon(1e-13));
}

TEST_CASE("rate report is consistent") {
  const NetworkConfig cfg = NetworkConfig::desk();
  const Scenario sc = drop_network(cfg, 2);
  const ChannelSet ch = generate_channels(sc, 2);
  const BeamformerSet b = initial_beamformers(ch, sc.assignment, cfg);
  const RateReport r = evaluate_rates(ch, b, sc.assignment, {});
  double links = 0.0, users = 0.0;
  for (double c : r.link_rate) links += c;
  for (double c : r.user_rate) users += c;
  CHECK(links == doctest::Approx(r.weighted_sum_rate));
  CHECK(users == doctest::Approx(r.weighted_sum_rate));
}

TEST_CASE("power and feasibility") {
  BeamformerSet b(2, 2, 1);
  CHECK(per_bs_power(b, 0) == 0.0);
  CHECK(check_feasibility(b, NetworkConfig{2, 1, 2, 1, {1.0, 1.0}}, 0.0).feasible);
  b.g(0, 0)[0] = 1.0;
  b.g(0, 1)[0] = {0.0, 1.0};
  CHECK(per_bs_power(b, 0) == 2.0);
  NetworkConfig cfg{2, 1, 2, 1, {2.0, 2.0}};
  CHECK(check_feasibility(b, cfg, 0.0).feasible);
  b.g(1, 0)[0] = std::sqrt(2.02);
  const FeasibilityReport rep = check_feasibility(b, cfg, 1e-6);
  CHECK(!rep.feasible);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0].cell == 1);

  const NetworkConfig desk = NetworkConfig::desk();
  const Scenario sc = drop_network(desk, 3);
  const ChannelSet ch = generate_channels(sc, 3);
  const BeamformerSet init = initial_beamformers(ch, sc.assignment, desk);
  for (int m = 0; m < desk.cells; ++m) CHECK(per_bs_power(init, m) == doctest::Approx(desk.p_max[m]));
}

TEST_CASE("dimension mismatch") {
  ChannelSet ch(2, 2, 1, 1);
  BeamformerSet b(2, 1, 2);
  Assignment a(2, 1, 1, {0, 0});
  CHECK_THROWS_AS(check_dimensions(ch, b, a), ShapeError);
}
