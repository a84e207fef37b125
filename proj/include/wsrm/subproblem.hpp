#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "wsrm/conic.hpp"
#include "wsrm/network.hpp"
#include "wsrm/rates.hpp"

namespace wsrm {

/// gm: report the geometric mean of the rate products; product_tree: report the
/// log of their product. Both build the same program.
enum class ObjectiveMethod : std::uint8_t { gm, product_tree };

const char* to_string(ObjectiveMethod method);
/// Accepts "gm", "tree" and "product-tree".
ObjectiveMethod parse_method(std::string_view name);

/// Scaled per-link weights delta(t) > 1 and exponents q(t) = 1 / delta(t).
struct WeightVector {
  std::vector<double> delta;
  std::vector<double> q;
  double scale = 1.0;  ///< s in delta = s * w
  int size() const { return static_cast<int>(delta.size()); }
};

/// delta = w * (1 + margin) / min(w). Throws ConfigError for w <= 0 or margin <= 0.
WeightVector scale_weights(std::span<const double> w, double margin);

/// Raw weight of the user served on each link t = m * N + n.
std::vector<double> link_weights(const NetworkConfig& config, const Assignment& assignment);

/// Parameters of one convex approximation, indexed by link t.
struct SpcaState {
  BeamformerSet beams;
  std::vector<double> theta;
  std::vector<double> r;
  std::vector<double> zeta;
  std::vector<double> v;
  /// Lower bound on v(t); at most epsilon.
  std::vector<double> floor;
  int iteration = 0;
  double epsilon = 1e-4;

  int links() const { return static_cast<int>(theta.size()); }
  /// Throws StateError on a non-positive theta, r or zeta, or v below its floor.
  void validate() const;
};

/// G(zeta, v, theta) = (v / theta + theta zeta^2) / 2 >= sqrt(v) zeta.
double upper_estimate(double zeta, double v, double theta);

struct Subproblem {
  ConicProgram program;
  VariableMap map;
  GeoMeanTree tree;
  ObjectiveMethod method = ObjectiveMethod::gm;
  std::vector<char> degenerate;  ///< per link: channel exactly zero
  /// The program's zeta and v columns hold zeta / zeta_scale and v / v_scale,
  /// with the scales taken from the state it was built around.
  std::vector<double> zeta_scale, v_scale;

  /// Method-specific reading of the root value psi:
  /// gm -> psi^(2^p / T), product_tree -> 2^p log2(psi).
  double objective_value(double psi) const;
};

/// Assembles the convex subproblem around `state`. Minimizes -psi, where psi is
/// the root of a geometric-mean tree over the rate products r(t).
Subproblem build_subproblem(const ChannelSet& channels, const Assignment& assignment, const WeightVector& weights,
                            const SpcaState& state, const NetworkConfig& config, ObjectiveMethod method);

struct ExtractedSolution {
  BeamformerSet beams;
  std::vector<double> r;
  std::vector<double> zeta;
  std::vector<double> v;
};

/// Undoes the real embedding. Dimensions come from the map; zeta and v are
/// returned as stored in x (unit scales).
ExtractedSolution extract_solution(std::span<const double> x, const VariableMap& map);
/// Same, with the subproblem's per-link scales applied.
ExtractedSolution extract_solution(std::span<const double> x, const Subproblem& sp);

/// Writes `beams` into the beam columns of x (inverse of extract_solution for beams).
void embed_beams(const BeamformerSet& beams, const VariableMap& map, std::span<double> x);

/// Real affine forms of h g over the stacked beam block starting at column `start`.
AffineExpr real_part(std::span<const cdouble> h, int start);
AffineExpr imag_part(std::span<const cdouble> h, int start);

}  // namespace wsrm
