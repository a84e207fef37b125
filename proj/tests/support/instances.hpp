#pragma once

// Random conic programs with known feasibility status.

#include <cmath>
#include <random>
#include <vector>

#include "wsrm/conic.hpp"

namespace wsrm::testing {

struct Instance {
  ConicProgram program;
  std::vector<double> x0;  // primal point with b - A x0 in int K
  std::vector<double> y0;  // dual point in int K* with A'y0 + c = 0
};

inline std::vector<Cone> random_cones(std::mt19937_64& rng, int count) {
  std::uniform_int_distribution<int> kind(0, 5), dim(2, 5), small(1, 3);
  std::vector<Cone> cones;
  for (int i = 0; i < count; ++i) {
    const int k = kind(rng);
    if (k == 0) cones.push_back({ConeKind::zero, small(rng)});
    else if (k <= 2) cones.push_back({ConeKind::nonnegative, small(rng)});
    else cones.push_back({ConeKind::second_order, dim(rng)});
  }
  return cones;
}

// Random point strictly inside a cone (dual = true picks from K*, which is free on zero cones).
inline void interior_point(std::mt19937_64& rng, const Cone& k, bool dual, std::vector<double>& out) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  switch (k.kind) {
    case ConeKind::zero:
      for (int i = 0; i < k.dim; ++i) out.push_back(dual ? g(rng) : 0.0);
      break;
    case ConeKind::nonnegative:
      for (int i = 0; i < k.dim; ++i) out.push_back(u(rng));
      break;
    case ConeKind::second_order: {
      std::vector<double> tail(k.dim - 1);
      double norm = 0.0;
      for (double& t : tail) {
        t = g(rng);
        norm += t * t;
      }
      out.push_back(std::sqrt(norm) + u(rng));
      out.insert(out.end(), tail.begin(), tail.end());
      break;
    }
  }
}

inline std::vector<Eigen::Triplet<double>> random_matrix(std::mt19937_64& rng, int rows, int cols, double density) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Eigen::Triplet<double>> a;
  for (int i = 0; i < rows; ++i) {
    // Keep every row nonzero so zero-cone blocks do not become 0 = b.
    const int forced = std::uniform_int_distribution<int>(0, cols - 1)(rng);
    for (int j = 0; j < cols; ++j)
      if (j == forced || u(rng) < density) a.emplace_back(i, j, g(rng));
  }
  return a;
}

// Primal and dual strictly feasible, so an optimum exists and the duality gap is zero.
inline Instance feasible_socp(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const auto cones = random_cones(rng, std::uniform_int_distribution<int>(2, 8)(rng));
  int rows = 0, zero_rows = 0;
  for (const Cone& k : cones) {
    rows += k.dim;
    if (k.kind == ConeKind::zero) zero_rows += k.dim;
  }
  const int cols = std::max(zero_rows + 1, std::uniform_int_distribution<int>(2, std::max(2, rows - 1))(rng));
  const auto a = random_matrix(rng, rows, cols, 0.5);

  Instance inst;
  inst.x0.resize(cols);
  for (double& v : inst.x0) v = g(rng);
  std::vector<double> s0, y0;
  for (const Cone& k : cones) {
    interior_point(rng, k, false, s0);
    interior_point(rng, k, true, y0);
  }
  std::vector<double> b = s0, c(cols, 0.0);
  for (const auto& t : a) {
    b[t.row()] += t.value() * inst.x0[t.col()];
    c[t.col()] -= t.value() * y0[t.row()];
  }
  inst.y0 = y0;
  inst.program = ConicProgram::from_parts(cols, std::move(c), a, std::move(b), cones);
  return inst;
}

// There is y in K* with A'y = 0 and b'y = -1, so no x, s in K satisfy A x + s = b.
inline Instance infeasible_socp(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  auto cones = random_cones(rng, std::uniform_int_distribution<int>(2, 6)(rng));
  cones.push_back({ConeKind::second_order, 3});
  int rows = 0;
  for (const Cone& k : cones) rows += k.dim;
  const int cols = std::uniform_int_distribution<int>(2, std::max(2, rows / 2))(rng);

  std::vector<double> y;
  for (const Cone& k : cones) interior_point(rng, k, true, y);
  double yy = 0.0;
  for (double v : y) yy += v * v;

  Eigen::MatrixXd a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = g(rng);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), rows);
  a -= yv * (yv.transpose() * a) / yy;

  std::vector<double> b(rows), c(cols);
  for (double& v : b) v = g(rng);
  for (double& v : c) v = g(rng);
  double by = 0.0;
  for (int i = 0; i < rows; ++i) by += b[i] * y[i];
  for (int i = 0; i < rows; ++i) b[i] -= y[i] * (by + 1.0) / yy;

  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) trip.emplace_back(i, j, a(i, j));
  Instance inst;
  inst.y0 = y;
  inst.program = ConicProgram::from_parts(cols, std::move(c), std::move(trip), std::move(b), std::move(cones));
  return inst;
}

// Feasible, plus a column that appears in no row and costs -1: unbounded below.
inline Instance unbounded_socp(std::uint64_t seed) {
  Instance base = feasible_socp(seed);
  ConicProgram& p = base.program;
  const int n = p.num_variables();
  std::vector<Eigen::Triplet<double>> a = p.a_triplets();
  std::vector<double> c = p.c();
  c.push_back(-1.0);
  base.program = ConicProgram::from_parts(n + 1, std::move(c), std::move(a), p.b(), p.cones());
  base.x0.push_back(0.0);
  return base;
}

}  // namespace wsrm::testing
