#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

namespace wsrm {

enum class ConeKind : std::uint8_t { zero, nonnegative, second_order };

/// A second-order cone of dimension d encodes ||s[1..d-1]||_2 <= s[0].
struct Cone {
  ConeKind kind = ConeKind::nonnegative;
  int dim = 0;
  friend bool operator==(const Cone&, const Cone&) = default;
};

const char* to_string(ConeKind kind);

/// sum_k coef_k * x[var_k] + constant.
struct AffineExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  static AffineExpr variable(int var, double coef = 1.0) { return {{{var, coef}}, 0.0}; }
  static AffineExpr value(double c) { return {{}, c}; }

  AffineExpr& add(int var, double coef) {
    terms.emplace_back(var, coef);
    return *this;
  }
  AffineExpr& add(const AffineExpr& other, double scale = 1.0);
  AffineExpr& shift(double c) {
    constant += c;
    return *this;
  }
  double evaluate(std::span<const double> x) const;
};

/// minimize c'x  subject to  A x + s = b,  s in K_1 x ... x K_p.
///
/// Rows are appended cone by cone, so cone i owns a contiguous block of rows.
/// Each appended row stores the affine expression e(x) as the slack s = e(x),
/// i.e. A_row = -coefficients and b_row = constant.
class ConicProgram {
 public:
  using Triplet = Eigen::Triplet<double>;

  ConicProgram() = default;

  /// Assembles a program from raw parts without checking them; see validate().
  static ConicProgram from_parts(int variables, std::vector<double> c, std::vector<Triplet> a,
                                 std::vector<double> b, std::vector<Cone> cones);

  int add_variables(int count);
  void set_cost(int var, double coef);

  void add_cone(ConeKind kind, std::span<const AffineExpr> rows);
  void add_zero(std::span<const AffineExpr> rows) { add_cone(ConeKind::zero, rows); }
  void add_nonnegative(std::span<const AffineExpr> rows) { add_cone(ConeKind::nonnegative, rows); }
  void add_second_order(std::span<const AffineExpr> rows) { add_cone(ConeKind::second_order, rows); }

  /// Fixes x[var] = value through a zero-cone row.
  void pin(int var, double value);

  int num_variables() const { return variables_; }
  int num_rows() const { return static_cast<int>(b_.size()); }
  const std::vector<double>& c() const { return c_; }
  const std::vector<double>& b() const { return b_; }
  const std::vector<Triplet>& a_triplets() const { return a_; }
  const std::vector<Cone>& cones() const { return cones_; }

  Eigen::SparseMatrix<double> a_matrix() const;
  /// Row offset of every cone.
  std::vector<int> cone_offsets() const;
  /// s = b - A x.
  std::vector<double> slack(std::span<const double> x) const;

 private:
  int variables_ = 0;
  std::vector<double> c_;
  std::vector<Triplet> a_;
  std::vector<double> b_;
  std::vector<Cone> cones_;
};

/// Category of a named optimization variable.
enum class VarKind : std::uint8_t { beam, rate, zeta, aux, tree_node, padding };

struct VarHandle {
  VarKind kind = VarKind::beam;
  int i = 0;
  int j = 0;
  auto operator<=>(const VarHandle&) const = default;
};

std::string to_string(const VarHandle& h);

struct VarRange {
  int start = 0;
  int count = 0;
};

/// Named handles -> column ranges of a ConicProgram.
class VariableMap {
 public:
  void declare(VarHandle handle, VarRange range);
  /// Throws MapError for undeclared handles.
  VarRange at(VarHandle handle) const;
  int index(VarHandle handle) const { return at(handle).start; }
  bool contains(VarHandle handle) const { return ranges_.count(handle) != 0; }
  int count(VarKind kind) const;
  const std::map<VarHandle, VarRange>& entries() const { return ranges_; }

  /// Problems with the map against a program with `variables` columns:
  /// overlapping ranges and columns left without a handle.
  std::vector<std::string> check_coverage(int variables) const;

 private:
  std::map<VarHandle, VarRange> ranges_;
};

/// Appends the second-order cone ||[2w; x - y]||_2 <= x + y, which holds iff
/// w'w <= x y with x, y >= 0. Nonnegativity of x and y is implied by the cone.
void add_hyperbolic(ConicProgram& prog, std::span<const int> w, int x, int y);

/// Lorentz form s0^2 - ||s1||^2 of a second-order-cone block (>= 0 and s0 >= 0 iff inside).
double lorentz_form(std::span<const double> s);

struct GeoMeanTree {
  int root = -1;
  int leaves = 0;             ///< 2^p after padding
  int padding = 0;            ///< constant-1 leaves added
  std::vector<int> nodes;     ///< heap order: nodes[0] is the root
};

/// Builds a binary tree of hyperbolic constraints over the T leaf variables,
/// padding with variables pinned to 1 up to the next power of two 2^p. Every
/// feasible point satisfies root <= (prod leaves)^(1/2^p), with equality
/// attainable. For T = 1 the leaf itself is returned and nothing is added.
/// Nodes and padding are registered in `map` when given.
GeoMeanTree gm_tree(ConicProgram& prog, std::span<const int> leaves, VariableMap* map = nullptr);

struct Diagnostics {
  int variables = 0;
  int rows = 0;
  int cones = 0;
  int nonzeros = 0;
  std::vector<std::string> issues;
  bool ok() const { return issues.empty(); }
};

Diagnostics validate(const ConicProgram& prog);

/// Plain-text sparse dump; see docs/formats.md. Values round-trip exactly.
void write_text(const ConicProgram& prog, std::ostream& out);
ConicProgram read_text(std::istream& in);

}  // namespace wsrm
