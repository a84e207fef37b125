#include "wsrm/subproblem.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "wsrm/errors.hpp"

namespace wsrm {

const char* to_string(ObjectiveMethod method) {
  return method == ObjectiveMethod::gm ? "gm" : "tree";
}

ObjectiveMethod parse_method(std::string_view name) {
  if (name == "gm") return ObjectiveMethod::gm;
  if (name == "tree" || name == "product-tree") return ObjectiveMethod::product_tree;
  throw ConfigError("method", fmt::format("expected gm or tree, got '{}'", name));
}

WeightVector scale_weights(std::span<const double> w, double margin) {
  if (w.empty()) throw ConfigError("weights", "no links");
  if (!(margin > 0.0)) throw ConfigError("weight_margin", "must be positive");
  for (double x : w)
    if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError("weights", "every weight must be positive");
  WeightVector out;
  out.scale = (1.0 + margin) / *std::min_element(w.begin(), w.end());
  for (double x : w) {
    out.delta.push_back(x * out.scale);
    out.q.push_back(1.0 / out.delta.back());
  }
  return out;
}

std::vector<double> link_weights(const NetworkConfig& config, const Assignment& assignment) {
  std::vector<double> w;
  w.reserve(config.links());
  for (int m = 0; m < config.cells; ++m)
    for (int n = 0; n < config.subcarriers; ++n) w.push_back(config.weight(m, assignment.user(m, n)));
  return w;
}

void SpcaState::validate() const {
  const std::size_t t = theta.size();
  if (r.size() != t || zeta.size() != t || v.size() != t || floor.size() != t)
    throw StateError("SpcaState: theta, r, zeta, v and floor must have equal length");
  if (!(epsilon >= 0.0)) throw StateError("SpcaState: epsilon must be >= 0");
  for (std::size_t i = 0; i < t; ++i) {
    if (!(theta[i] > 0.0) || !std::isfinite(theta[i]))
      throw StateError(fmt::format("SpcaState: theta[{}] = {} is not positive", i, theta[i]));
    if (!(r[i] > 0.0) || !std::isfinite(r[i]))
      throw StateError(fmt::format("SpcaState: r[{}] = {} is not positive", i, r[i]));
    if (!(zeta[i] > 0.0) || !std::isfinite(zeta[i]))
      throw StateError(fmt::format("SpcaState: zeta[{}] = {} is not positive", i, zeta[i]));
    if (!(floor[i] >= 0.0) || floor[i] > epsilon)
      throw StateError(fmt::format("SpcaState: floor[{}] = {} outside [0, epsilon]", i, floor[i]));
    if (!(v[i] >= floor[i]) || !std::isfinite(v[i]))
      throw StateError(fmt::format("SpcaState: v[{}] = {} is below the floor {}", i, v[i], floor[i]));
  }
}

double upper_estimate(double zeta, double v, double theta) { return 0.5 * (v / theta + theta * zeta * zeta); }

double Subproblem::objective_value(double psi) const {
  const int links = tree.leaves - tree.padding;
  if (method == ObjectiveMethod::gm) return std::pow(psi, static_cast<double>(tree.leaves) / links);
  return tree.leaves * std::log2(psi);
}

// Re(h g) = sum hr gr - hi gi, Im(h g) = sum hi gr + hr gi with g = [gr; gi].
AffineExpr real_part(std::span<const cdouble> h, int start) {
  const int nt = static_cast<int>(h.size());
  AffineExpr e;
  for (int a = 0; a < nt; ++a) {
    if (h[a].real() != 0.0) e.add(start + a, h[a].real());
    if (h[a].imag() != 0.0) e.add(start + nt + a, -h[a].imag());
  }
  return e;
}

AffineExpr imag_part(std::span<const cdouble> h, int start) {
  const int nt = static_cast<int>(h.size());
  AffineExpr e;
  for (int a = 0; a < nt; ++a) {
    if (h[a].imag() != 0.0) e.add(start + a, h[a].imag());
    if (h[a].real() != 0.0) e.add(start + nt + a, h[a].real());
  }
  return e;
}

Subproblem build_subproblem(const ChannelSet& channels, const Assignment& assignment, const WeightVector& weights,
                            const SpcaState& state, const NetworkConfig& config, ObjectiveMethod method) {
  const int M = config.cells, N = config.subcarriers, Nt = config.antennas, T = M * N;
  if (channels.cells() != M || channels.subcarriers() != N || channels.antennas() != Nt ||
      channels.users() != config.total_users())
    throw ShapeError("build_subproblem: channels do not match the network config");
  if (assignment.cells() != M || assignment.subcarriers() != N)
    throw ShapeError("build_subproblem: assignment does not match the network config");
  if (weights.size() != T || state.links() != T)
    throw ShapeError(fmt::format("build_subproblem: expected {} links, weights have {}, state has {}", T,
                                 weights.size(), state.links()));
  if (static_cast<int>(config.p_max.size()) != M) throw ShapeError("build_subproblem: p_max size");
  state.validate();

  Subproblem sp;
  sp.method = method;
  ConicProgram& prog = sp.program;
  VariableMap& map = sp.map;

  std::vector<int> beam(T);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < N; ++n) {
      const int t = m * N + n;
      beam[t] = prog.add_variables(2 * Nt);
      map.declare({VarKind::beam, m, n}, {beam[t], 2 * Nt});
    }
  std::vector<int> r(T), zeta(T), v(T);
  for (int t = 0; t < T; ++t) {
    r[t] = prog.add_variables(1);
    zeta[t] = prog.add_variables(1);
    v[t] = prog.add_variables(1);
    map.declare({VarKind::rate, t, 0}, {r[t], 1});
    map.declare({VarKind::zeta, t, 0}, {zeta[t], 1});
    map.declare({VarKind::aux, t, 0}, {v[t], 1});
  }

  // Per-BS power.
  for (int m = 0; m < M; ++m) {
    std::vector<AffineExpr> rows;
    rows.push_back(AffineExpr::value(std::sqrt(config.p_max[m])));
    for (int n = 0; n < N; ++n)
      for (int a = 0; a < 2 * Nt; ++a) rows.push_back(AffineExpr::variable(beam[m * N + n] + a));
    prog.add_second_order(rows);
  }

  // Per-link units for zeta and v keep the coefficients near the current signal amplitude.
  sp.zeta_scale.resize(T);
  sp.v_scale.resize(T);
  for (int t = 0; t < T; ++t) {
    sp.zeta_scale[t] = state.zeta[t];
    sp.v_scale[t] = state.v[t] > 0.0 ? state.v[t] : 1.0;
  }

  sp.degenerate.assign(T, 0);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < N; ++n) {
      const int t = m * N + n;
      const int kg = assignment.global_user(m, n);
      const auto h = channels.h(kg, m, n);
      if (std::all_of(h.begin(), h.end(), [](cdouble x) { return x == cdouble{}; })) {
        sp.degenerate[t] = 1;
        prog.pin(r[t], 1.0);
        prog.pin(zeta[t], 1.0 / sp.zeta_scale[t]);
        continue;
      }
      const double theta = state.theta[t];
      const double zs = sp.zeta_scale[t], vs = sp.v_scale[t];

      // Re(hg) - v/(2 theta) >= theta zeta^2 / 2 as a hyperbolic constraint with y = 1.
      AffineExpr u = real_part(h, beam[t]);
      u.add(v[t], -0.5 * vs / theta);
      const std::vector<AffineExpr> c3{AffineExpr(u).shift(1.0),
                                       AffineExpr::variable(zeta[t], zs * std::sqrt(2.0 * theta)),
                                       AffineExpr(u).shift(-1.0)};
      prog.add_second_order(c3);

      const std::vector<AffineExpr> c4{imag_part(h, beam[t])};
      prog.add_zero(c4);

      std::vector<AffineExpr> c6{AffineExpr::variable(zeta[t], zs), AffineExpr::value(1.0)};
      for (int mi = 0; mi < M; ++mi) {
        if (mi == m) continue;
        const auto hi = channels.h(kg, mi, n);
        c6.push_back(real_part(hi, beam[mi * N + n]));
        c6.push_back(imag_part(hi, beam[mi * N + n]));
      }
      prog.add_second_order(c6);
    }

  // Linearized rate coupling and floors.
  std::vector<AffineExpr> lin;
  for (int t = 0; t < T; ++t) {
    const double q = weights.q[t], ri = state.r[t];
    const double riq = std::pow(ri, q);
    const double slope = q * riq / ri;
    AffineExpr e = AffineExpr::variable(v[t], sp.v_scale[t]);
    e.add(r[t], -slope).shift(1.0 - riq + slope * ri);
    lin.push_back(std::move(e));
  }
  prog.add_nonnegative(lin);
  std::vector<AffineExpr> floors;
  for (int t = 0; t < T; ++t) {
    floors.push_back(AffineExpr::variable(r[t]));
    floors.push_back(AffineExpr::variable(v[t]).shift(-state.floor[t] / sp.v_scale[t]));
  }
  prog.add_nonnegative(floors);

  sp.tree = gm_tree(prog, r, &map);
  std::vector<AffineExpr> nodes;
  for (int node : sp.tree.nodes) nodes.push_back(AffineExpr::variable(node));
  if (!nodes.empty()) prog.add_nonnegative(nodes);
  prog.set_cost(sp.tree.root, -1.0);
  return sp;
}

namespace {

struct BeamShape {
  int cells = 0, subcarriers = 0, antennas = 0;
};

BeamShape beam_shape(const VariableMap& map) {
  BeamShape s;
  for (const auto& [h, range] : map.entries()) {
    if (h.kind != VarKind::beam) continue;
    s.cells = std::max(s.cells, h.i + 1);
    s.subcarriers = std::max(s.subcarriers, h.j + 1);
    s.antennas = range.count / 2;
  }
  if (s.cells == 0) throw MapError("extract_solution: map has no beam handles");
  return s;
}

}  // namespace

ExtractedSolution extract_solution(std::span<const double> x, const VariableMap& map) {
  const BeamShape bs = beam_shape(map);
  auto col = [&](VarHandle h) {
    const int i = map.index(h);
    if (i < 0 || i >= static_cast<int>(x.size())) throw ShapeError("extract_solution: x too short");
    return i;
  };
  ExtractedSolution out;
  out.beams = BeamformerSet(bs.cells, bs.subcarriers, bs.antennas);
  for (int m = 0; m < bs.cells; ++m)
    for (int n = 0; n < bs.subcarriers; ++n) {
      const int start = col({VarKind::beam, m, n});
      if (start + 2 * bs.antennas > static_cast<int>(x.size())) throw ShapeError("extract_solution: x too short");
      auto g = out.beams.g(m, n);
      for (int a = 0; a < bs.antennas; ++a) g[a] = {x[start + a], x[start + bs.antennas + a]};
    }
  const int T = map.count(VarKind::rate);
  for (int t = 0; t < T; ++t) {
    out.r.push_back(x[col({VarKind::rate, t, 0})]);
    out.zeta.push_back(x[col({VarKind::zeta, t, 0})]);
    out.v.push_back(x[col({VarKind::aux, t, 0})]);
  }
  return out;
}

ExtractedSolution extract_solution(std::span<const double> x, const Subproblem& sp) {
  ExtractedSolution out = extract_solution(x, sp.map);
  if (sp.zeta_scale.size() != out.zeta.size() || sp.v_scale.size() != out.v.size())
    throw ShapeError("extract_solution: scale vectors do not match the map");
  for (std::size_t t = 0; t < out.zeta.size(); ++t) {
    out.zeta[t] *= sp.zeta_scale[t];
    out.v[t] *= sp.v_scale[t];
  }
  return out;
}

void embed_beams(const BeamformerSet& beams, const VariableMap& map, std::span<double> x) {
  const int Nt = beams.antennas();
  for (int m = 0; m < beams.cells(); ++m)
    for (int n = 0; n < beams.subcarriers(); ++n) {
      const VarRange range = map.at({VarKind::beam, m, n});
      if (range.count != 2 * Nt || range.start + range.count > static_cast<int>(x.size()))
        throw ShapeError("embed_beams: beam block does not fit");
      const auto g = beams.g(m, n);
      for (int a = 0; a < Nt; ++a) {
        x[range.start + a] = g[a].real();
        x[range.start + Nt + a] = g[a].imag();
      }
    }
}

}  // namespace wsrm
