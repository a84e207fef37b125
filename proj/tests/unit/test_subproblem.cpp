#include <cmath>
#include <random>

#include "doctest.h"
#include "wsrm/errors.hpp"
#include "wsrm/solver.hpp"
#include "wsrm/spca.hpp"
#include "wsrm/subproblem.hpp"

using namespace wsrm;

namespace {

struct Setup {
  NetworkConfig cfg;
  Scenario sc;
  ChannelSet ch;
  WeightVector w;
  SpcaState st;
  explicit Setup(std::uint64_t seed, NetworkConfig c = NetworkConfig::desk()) : cfg(std::move(c)) {
    sc = drop_network(cfg, seed);
    ch = generate_channels(sc, seed);
    w = scale_weights(link_weights(cfg, sc.assignment), 0.01);
    st = initialize(ch, sc.assignment, cfg, w, 1e-4);
  }
};

}  // namespace

TEST_CASE("weight scaling examples") {
  const std::vector<double> ones(5, 1.0);
  const WeightVector a = scale_weights(ones, 0.01);
  for (int t = 0; t < a.size(); ++t) {
    CHECK(a.delta[t] == doctest::Approx(1.01));
    CHECK(a.q[t] == doctest::Approx(1.0 / 1.01));
  }
  const WeightVector b = scale_weights(std::vector<double>{2.0, 4.0}, 0.01);
  // min(delta) = 1 + margin, ratios kept.
  CHECK(b.delta[0] == doctest::Approx(1.01));
  CHECK(b.delta[1] == doctest::Approx(2.02));
  CHECK(b.scale == doctest::Approx(0.505));
  CHECK_THROWS_AS(scale_weights(std::vector<double>{1.0, 0.0}, 0.01), ConfigError);
  CHECK_THROWS_AS(scale_weights(ones, 0.0), ConfigError);
}

TEST_CASE("upper estimate dominates and is tight at the matched slope") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lg(-3.0, 3.0);
  for (int i = 0; i < 10000; ++i) {
    const double z = std::pow(10.0, lg(rng)), v = std::pow(10.0, lg(rng)), th = std::pow(10.0, lg(rng));
    const double lower = std::sqrt(v) * z;
    CHECK(upper_estimate(z, v, th) >= lower * (1.0 - 1e-12));
    const double star = std::sqrt(v) / z;
    CHECK(upper_estimate(z, v, star) == doctest::Approx(lower).epsilon(1e-12));
  }
}

TEST_CASE("variable count for the desk network") {
  Setup s(0);
  const Subproblem sp = build_subproblem(s.ch, s.sc.assignment, s.w, s.st, s.cfg, ObjectiveMethod::gm);
  const int T = 24;
  const int closed_form = 2 * 2 * 8 * 3 + 3 * T + (32 - 1) + (32 - T);
  CHECK(closed_form == 207);
  CHECK(sp.program.num_variables() == closed_form);
  CHECK(sp.map.count(VarKind::beam) == 24);
  CHECK(sp.map.count(VarKind::rate) == T);
  CHECK(sp.map.count(VarKind::tree_node) + sp.map.count(VarKind::padding) > 0);
  CHECK(sp.map.check_coverage(sp.program.num_variables()).empty());
  CHECK(validate(sp.program).ok());
}

TEST_CASE("methods build the same program") {
  Setup s(1);
  const Subproblem a = build_subproblem(s.ch, s.sc.assignment, s.w, s.st, s.cfg, ObjectiveMethod::gm);
  const Subproblem b = build_subproblem(s.ch, s.sc.assignment, s.w, s.st, s.cfg, ObjectiveMethod::product_tree);
  CHECK(a.program.c() == b.program.c());
  CHECK(a.program.b() == b.program.b());
  CHECK(a.program.cones() == b.program.cones());
  CHECK(a.objective_value(2.0) == doctest::Approx(std::pow(2.0, 32.0 / 24.0)));
  CHECK(b.objective_value(2.0) == doctest::Approx(32.0));
  CHECK(parse_method("tree") == ObjectiveMethod::product_tree);
  CHECK(parse_method("product-tree") == ObjectiveMethod::product_tree);
  CHECK_THROWS_AS(parse_method("lp"), ConfigError);
}

TEST_CASE("beam embedding round trip") {
  Setup s(2);
  const Subproblem sp = build_subproblem(s.ch, s.sc.assignment, s.w, s.st, s.cfg, ObjectiveMethod::gm);
  std::vector<double> x(sp.program.num_variables(), 0.0);
  embed_beams(s.st.beams, sp.map, x);
  const ExtractedSolution e = extract_solution(x, sp.map);
  CHECK(std::equal(e.beams.raw().begin(), e.beams.raw().end(), s.st.beams.raw().begin()));
}

TEST_CASE("real embedding of h g") {
  const cdouble h[] = {{1.0, 2.0}, {-0.5, 3.0}};
  const cdouble g[] = {{0.3, -1.0}, {2.0, 0.25}};
  const double x[] = {0.3, 2.0, -1.0, 0.25};  // Re block then Im block
  const cdouble ref = inner(h, g);
  CHECK(real_part(h, 0).evaluate(x) == doctest::Approx(ref.real()));
  CHECK(imag_part(h, 0).evaluate(x) == doctest::Approx(ref.imag()));
}

TEST_CASE("solved subproblem satisfies the original constraints") {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    Setup s(seed);
    const Subproblem sp = build_subproblem(s.ch, s.sc.assignment, s.w, s.st, s.cfg, ObjectiveMethod::gm);
    const Solution sol = solve(sp.program);
    REQUIRE(sol.status == SolveStatus::optimal);
    const ExtractedSolution e = extract_solution(std::span<const double>(sol.x.data(), sol.x.size()), sp);
    CHECK(max_imaginary_part(s.ch, e.beams, s.sc.assignment) <= 1e-6);
    for (int m = 0; m < s.cfg.cells; ++m) CHECK(per_bs_power(e.beams, m) <= s.cfg.p_max[m] + 1e-6);
    for (int t = 0; t < s.st.links(); ++t) {
      const LinkIndex l = LinkIndex::from_flat(t, s.cfg.subcarriers);
      const double hg = inner(s.ch.h(s.sc.assignment.global_user(l.cell, l.subcarrier), l.cell, l.subcarrier),
                              e.beams.g(l.cell, l.subcarrier))
                            .real();
      const double lhs = e.zeta[t] * std::sqrt(std::max(0.0, std::pow(e.r[t], s.w.q[t]) - 1.0));
      CHECK(lhs <= hg + 1e-6 * (1.0 + std::abs(hg)));
      CHECK(e.zeta[t] >= 1.0 - 1e-7);
      CHECK(e.v[t] >= s.st.floor[t] * (1.0 - 1e-7));
    }
  }
}

TEST_CASE("single link: interference cone reduces to zeta >= 1") {
  NetworkConfig cfg{1, 1, 1, 1, {10.0}};
  Setup s(7, cfg);
  const Subproblem sp = build_subproblem(s.ch, s.sc.assignment, s.w, s.st, s.cfg, ObjectiveMethod::gm);
  const Solution sol = solve(sp.program);
  REQUIRE(sol.status == SolveStatus::optimal);
  const ExtractedSolution e = extract_solution(std::span<const double>(sol.x.data(), sol.x.size()), sp);
  CHECK(e.zeta[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(per_bs_power(e.beams, 0) == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("state validation") {
  Setup s(8);
  SpcaState bad = s.st;
  bad.theta[3] = 0.0;
  CHECK_THROWS_AS(build_subproblem(s.ch, s.sc.assignment, s.w, bad, s.cfg, ObjectiveMethod::gm), StateError);
  bad = s.st;
  bad.v[0] = -1.0;
  CHECK_THROWS_AS(bad.validate(), StateError);
  bad = s.st;
  bad.r.pop_back();
  CHECK_THROWS(build_subproblem(s.ch, s.sc.assignment, s.w, bad, s.cfg, ObjectiveMethod::gm));
}

TEST_CASE("initial state") {
  Setup s(9);
  for (int t = 0; t < s.st.links(); ++t) {
    CHECK(s.st.theta[t] == doctest::Approx(std::sqrt(s.st.v[t]) / s.st.zeta[t]));
    CHECK(s.st.zeta[t] >= 1.0);
    CHECK(s.st.floor[t] <= 1e-4);
    CHECK(s.st.v[t] >= s.st.floor[t]);
  }
  const SpcaState fixed = initialize(s.ch, s.sc.assignment, s.cfg, s.w, 1e-4, FloorMode::fixed);
  for (int t = 0; t < fixed.links(); ++t) CHECK(fixed.floor[t] == 1e-4);
}
