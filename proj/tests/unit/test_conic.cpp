#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "wsrm/conic.hpp"
#include "wsrm/errors.hpp"
#include "wsrm/solver.hpp"

using namespace wsrm;

namespace {

// Rows of the hyperbolic cone evaluated at a point; x is column 1, y column 2, w from column 3.
std::vector<double> hyperbolic_rows(std::span<const double> w, double x, double y) {
  ConicProgram p;
  p.add_variables(2 + static_cast<int>(w.size()));
  std::vector<int> wi;
  for (std::size_t i = 0; i < w.size(); ++i) wi.push_back(2 + static_cast<int>(i));
  add_hyperbolic(p, wi, 0, 1);
  std::vector<double> pt{x, y};
  pt.insert(pt.end(), w.begin(), w.end());
  return p.slack(pt);
}

double max_root(std::vector<double> leaves) {
  ConicProgram p;
  const int first = p.add_variables(static_cast<int>(leaves.size()));
  std::vector<int> idx;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    idx.push_back(first + static_cast<int>(i));
    const AffineExpr cap = AffineExpr::value(leaves[i]).add(idx.back(), -1.0);
    p.add_nonnegative(std::span(&cap, 1));
  }
  const GeoMeanTree t = gm_tree(p, idx);
  p.set_cost(t.root, -1.0);
  const Solution s = solve(p);
  REQUIRE(s.status == SolveStatus::optimal);
  return s.x[t.root];
}

}  // namespace

TEST_CASE("hyperbolic examples") {
  const double two[] = {2.0}, three[] = {3.0}, zero[] = {0.0};
  auto s = hyperbolic_rows(two, 2.0, 2.0);
  CHECK(s == std::vector<double>{4.0, 4.0, 0.0});
  CHECK(lorentz_form(s) == 0.0);
  s = hyperbolic_rows(three, 2.0, 2.0);
  CHECK(lorentz_form(s) / 4.0 == doctest::Approx(4.0 - 9.0));
  s = hyperbolic_rows(zero, 0.0, 5.0);
  CHECK(lorentz_form(s) >= 0.0);
  CHECK(s[0] >= 0.0);
  ConicProgram p;
  p.add_variables(2);
  CHECK_THROWS_AS(add_hyperbolic(p, std::span<const int>{}, 0, 1), ShapeError);
}

TEST_CASE("hyperbolic membership matches w'w <= xy") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(0.0, 3.0), any(-2.0, 2.0);
  std::uniform_int_distribution<int> len(1, 4);
  int agree = 0;
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> w(len(rng));
    for (double& v : w) v = any(rng);
    const double x = pos(rng), y = pos(rng);
    double ww = 0.0;
    for (double v : w) ww += v * v;
    const auto s = hyperbolic_rows(w, x, y);
    agree += (lorentz_form(s) >= 0.0 && s[0] >= 0.0) == (ww <= x * y);
  }
  CHECK(agree == 2000);
}

TEST_CASE("gm tree shape") {
  ConicProgram p;
  const int x = p.add_variables(1);
  const int one[] = {x};
  const GeoMeanTree t1 = gm_tree(p, one);
  CHECK(t1.root == x);
  CHECK(p.num_rows() == 0);

  for (int T : {2, 3, 4, 5, 8, 24}) {
    ConicProgram q;
    VariableMap map;
    const int first = q.add_variables(T);
    map.declare({VarKind::rate, 0}, {first, T});
    std::vector<int> leaves(T);
    for (int i = 0; i < T; ++i) leaves[i] = first + i;
    const GeoMeanTree t = gm_tree(q, leaves, &map);
    const int pow2 = 1 << static_cast<int>(std::ceil(std::log2(T)));
    CHECK(t.leaves == pow2);
    CHECK(t.padding == pow2 - T);
    CHECK(static_cast<int>(t.nodes.size()) == pow2 - 1);
    CHECK(t.nodes[0] == t.root);
    CHECK(map.check_coverage(q.num_variables()).empty());
    CHECK(validate(q).ok());
  }
  ConicProgram e;
  CHECK_THROWS(gm_tree(e, std::span<const int>{}));
}

TEST_CASE("gm tree maximum") {
  CHECK(max_root({1, 4, 9, 16}) == doctest::Approx(std::pow(576.0, 0.25)).epsilon(1e-7));
  CHECK(max_root({2, 8, 4}) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-7));
  CHECK(max_root({3, 3, 3, 3, 3, 3, 3, 3}) == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(max_root({5}) == doctest::Approx(5.0).epsilon(1e-7));
}

TEST_CASE("validate reports problems") {
  ConicProgram p;
  p.add_variables(2);
  const AffineExpr rows[] = {AffineExpr::variable(0), AffineExpr::variable(1)};
  p.add_second_order(rows);
  CHECK(validate(p).ok());

  auto bad = ConicProgram::from_parts(2, {0, 0}, {{0, 0, 1.0}}, {1.0, 2.0}, {{ConeKind::nonnegative, 1}});
  CHECK(!validate(bad).ok());
  auto soc1 = ConicProgram::from_parts(1, {0}, {{0, 0, 1.0}}, {1.0}, {{ConeKind::second_order, 1}});
  CHECK(!validate(soc1).ok());
}

TEST_CASE("variable map") {
  VariableMap m;
  m.declare({VarKind::beam, 0, 0}, {0, 4});
  m.declare({VarKind::rate, 0}, {4, 2});
  CHECK(m.index({VarKind::rate, 0}) == 4);
  CHECK(m.count(VarKind::beam) == 1);
  CHECK_THROWS_AS(m.at({VarKind::zeta, 0}), MapError);
  CHECK(m.check_coverage(6).empty());
  CHECK(!m.check_coverage(7).empty());
  m.declare({VarKind::aux, 0}, {5, 2});
  CHECK(!m.check_coverage(7).empty());
}

TEST_CASE("text format round trip") {
  ConicProgram p;
  p.add_variables(3);
  p.set_cost(0, 0.1);
  p.set_cost(2, -1.0 / 3.0);
  p.pin(1, 2.5);
  const AffineExpr nn[] = {AffineExpr::variable(0, 1e-17).shift(3.0)};
  p.add_nonnegative(nn);
  add_hyperbolic(p, std::vector<int>{2}, 0, 1);
  std::stringstream ss;
  write_text(p, ss);
  const ConicProgram q = read_text(ss);
  CHECK(q.num_variables() == p.num_variables());
  CHECK(q.c() == p.c());
  CHECK(q.b() == p.b());
  CHECK(q.cones() == p.cones());
  CHECK(q.a_matrix().isApprox(p.a_matrix(), 0.0));

  std::stringstream junk("not a program");
  CHECK_THROWS(read_text(junk));
}
