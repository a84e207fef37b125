#include "wsrm/conic.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "wsrm/errors.hpp"

namespace wsrm {

const char* to_string(ConeKind kind) {
  switch (kind) {
    case ConeKind::zero: return "zero";
    case ConeKind::nonnegative: return "nonnegative";
    case ConeKind::second_order: return "second_order";
  }
  return "?";
}

AffineExpr& AffineExpr::add(const AffineExpr& other, double scale) {
  for (const auto& [var, coef] : other.terms) terms.emplace_back(var, scale * coef);
  constant += scale * other.constant;
  return *this;
}

double AffineExpr::evaluate(std::span<const double> x) const {
  double v = constant;
  for (const auto& [var, coef] : terms) v += coef * x[var];
  return v;
}

// --- ConicProgram -------------------------------------------------------------

ConicProgram ConicProgram::from_parts(int variables, std::vector<double> c, std::vector<Triplet> a,
                                      std::vector<double> b, std::vector<Cone> cones) {
  ConicProgram p;
  p.variables_ = variables;
  p.c_ = std::move(c);
  p.a_ = std::move(a);
  p.b_ = std::move(b);
  p.cones_ = std::move(cones);
  return p;
}

int ConicProgram::add_variables(int count) {
  const int first = variables_;
  variables_ += count;
  c_.resize(variables_, 0.0);
  return first;
}

void ConicProgram::set_cost(int var, double coef) {
  if (var < 0 || var >= variables_) throw ShapeError("set_cost: variable out of range");
  c_[var] = coef;
}

void ConicProgram::add_cone(ConeKind kind, std::span<const AffineExpr> rows) {
  if (rows.empty()) throw ShapeError("add_cone: empty cone");
  if (kind == ConeKind::second_order && rows.size() < 2)
    throw ShapeError("add_cone: second-order cone needs dimension >= 2");
  for (const AffineExpr& e : rows) {
    const int row = num_rows();
    for (const auto& [var, coef] : e.terms) {
      if (var < 0 || var >= variables_) throw ShapeError("add_cone: variable out of range");
      if (coef != 0.0) a_.emplace_back(row, var, -coef);
    }
    b_.push_back(e.constant);
  }
  if (!cones_.empty() && cones_.back().kind == kind && kind != ConeKind::second_order)
    cones_.back().dim += static_cast<int>(rows.size());
  else
    cones_.push_back({kind, static_cast<int>(rows.size())});
}

void ConicProgram::pin(int var, double value) {
  const AffineExpr row = AffineExpr::variable(var).shift(-value);
  add_zero({&row, 1});
}

Eigen::SparseMatrix<double> ConicProgram::a_matrix() const {
  Eigen::SparseMatrix<double> a(num_rows(), variables_);
  a.setFromTriplets(a_.begin(), a_.end());
  return a;
}

std::vector<int> ConicProgram::cone_offsets() const {
  std::vector<int> off;
  int row = 0;
  for (const Cone& k : cones_) {
    off.push_back(row);
    row += k.dim;
  }
  return off;
}

std::vector<double> ConicProgram::slack(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != variables_) throw ShapeError("slack: wrong vector length");
  std::vector<double> s = b_;
  for (const Triplet& t : a_) s[t.row()] -= t.value() * x[t.col()];
  return s;
}

// --- VariableMap --------------------------------------------------------------

std::string to_string(const VarHandle& h) {
  switch (h.kind) {
    case VarKind::beam: return fmt::format("g[{},{}]", h.i, h.j);
    case VarKind::rate: return fmt::format("r[{}]", h.i);
    case VarKind::zeta: return fmt::format("zeta[{}]", h.i);
    case VarKind::aux: return fmt::format("v[{}]", h.i);
    case VarKind::tree_node: return fmt::format("psi[{}]", h.i);
    case VarKind::padding: return fmt::format("pad[{}]", h.i);
  }
  return "?";
}

void VariableMap::declare(VarHandle handle, VarRange range) {
  if (range.count < 1) throw MapError("declare: empty range for " + to_string(handle));
  if (!ranges_.emplace(handle, range).second) throw MapError("declare: duplicate handle " + to_string(handle));
}

VarRange VariableMap::at(VarHandle handle) const {
  auto it = ranges_.find(handle);
  if (it == ranges_.end()) throw MapError("no variable named " + to_string(handle));
  return it->second;
}

int VariableMap::count(VarKind kind) const {
  int n = 0;
  for (const auto& [h, r] : ranges_)
    if (h.kind == kind) ++n;
  return n;
}

std::vector<std::string> VariableMap::check_coverage(int variables) const {
  std::vector<int> owner(variables, 0);
  std::vector<std::string> issues;
  for (const auto& [h, r] : ranges_) {
    if (r.start < 0 || r.start + r.count > variables) {
      issues.push_back(to_string(h) + " lies outside the program");
      continue;
    }
    for (int i = r.start; i < r.start + r.count; ++i) ++owner[i];
  }
  for (int i = 0; i < variables; ++i) {
    if (owner[i] == 0) issues.push_back(fmt::format("column {} has no handle", i));
    if (owner[i] > 1) issues.push_back(fmt::format("column {} has {} handles", i, owner[i]));
  }
  return issues;
}

// --- SOC utilities --------------------------------------------------------------

void add_hyperbolic(ConicProgram& prog, std::span<const int> w, int x, int y) {
  if (w.empty()) throw ShapeError("add_hyperbolic: w must be nonempty");
  std::vector<AffineExpr> rows;
  rows.reserve(w.size() + 2);
  rows.push_back(AffineExpr::variable(x).add(y, 1.0));
  for (int wi : w) rows.push_back(AffineExpr::variable(wi, 2.0));
  rows.push_back(AffineExpr::variable(x).add(y, -1.0));
  prog.add_second_order(rows);
}

double lorentz_form(std::span<const double> s) {
  double tail = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) tail += s[i] * s[i];
  return s[0] * s[0] - tail;
}

GeoMeanTree gm_tree(ConicProgram& prog, std::span<const int> leaves, VariableMap* map) {
  if (leaves.empty()) throw ShapeError("gm_tree: no leaves");
  GeoMeanTree tree;
  int width = 1;
  while (width < static_cast<int>(leaves.size())) width *= 2;
  tree.leaves = width;
  tree.padding = width - static_cast<int>(leaves.size());
  if (leaves.size() == 1) {
    tree.root = leaves[0];
    return tree;
  }

  std::vector<int> level(leaves.begin(), leaves.end());
  for (int i = 0; i < tree.padding; ++i) {
    const int pad = prog.add_variables(1);
    prog.pin(pad, 1.0);
    if (map) map->declare({VarKind::padding, i, 0}, {pad, 1});
    level.push_back(pad);
  }

  tree.nodes.assign(width - 1, -1);
  // Level j holds 2^j nodes at heap positions 2^j - 1 .. 2^(j+1) - 2.
  for (int parents = width / 2; parents >= 1; parents /= 2) {
    std::vector<int> next(parents);
    for (int i = 0; i < parents; ++i) {
      next[i] = prog.add_variables(1);
      const int heap = parents - 1 + i;
      tree.nodes[heap] = next[i];
      if (map) map->declare({VarKind::tree_node, heap, 0}, {next[i], 1});
      const int w[1] = {next[i]};
      add_hyperbolic(prog, w, level[2 * i], level[2 * i + 1]);
    }
    level = std::move(next);
  }
  tree.root = level[0];
  return tree;
}

// --- Diagnostics ----------------------------------------------------------------

Diagnostics validate(const ConicProgram& prog) {
  Diagnostics d;
  d.variables = prog.num_variables();
  d.rows = prog.num_rows();
  d.cones = static_cast<int>(prog.cones().size());
  d.nonzeros = static_cast<int>(prog.a_triplets().size());

  int cone_rows = 0;
  for (std::size_t i = 0; i < prog.cones().size(); ++i) {
    const Cone& k = prog.cones()[i];
    cone_rows += k.dim;
    if (k.dim <= 0) d.issues.push_back(fmt::format("cone {} is empty", i));
    if (k.kind == ConeKind::second_order && k.dim == 1)
      d.issues.push_back(fmt::format("second-order cone {} has dimension 1", i));
  }
  if (cone_rows != d.rows)
    d.issues.push_back(fmt::format("A has {} rows but the cones cover {}", d.rows, cone_rows));
  if (static_cast<int>(prog.c().size()) != d.variables)
    d.issues.push_back(fmt::format("c has {} entries for {} variables", prog.c().size(), d.variables));
  for (const auto& t : prog.a_triplets()) {
    if (t.row() < 0 || t.row() >= d.rows || t.col() < 0 || t.col() >= d.variables) {
      d.issues.push_back(fmt::format("entry ({}, {}) lies outside A", t.row(), t.col()));
      break;
    }
    if (!std::isfinite(t.value())) {
      d.issues.push_back(fmt::format("entry ({}, {}) is not finite", t.row(), t.col()));
      break;
    }
  }
  for (double v : prog.b())
    if (!std::isfinite(v)) {
      d.issues.push_back("b has non-finite entries");
      break;
    }
  for (double v : prog.c())
    if (!std::isfinite(v)) {
      d.issues.push_back("c has non-finite entries");
      break;
    }
  return d;
}

// --- Text format ------------------------------------------------------------------

namespace {

constexpr const char* kMagic = "wsrm-conic";
constexpr int kTextVersion = 1;

char cone_code(ConeKind k) {
  switch (k) {
    case ConeKind::zero: return 'z';
    case ConeKind::nonnegative: return 'l';
    case ConeKind::second_order: return 'q';
  }
  return '?';
}

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string tok;
    while (true) {
      if (!(in_ >> tok)) throw std::runtime_error("conic text: unexpected end of input");
      if (tok[0] != '#') return tok;
      std::string rest;
      std::getline(in_, rest);
    }
  }
  void expect(const std::string& w) {
    const std::string got = word();
    if (got != w) throw std::runtime_error("conic text: expected '" + w + "', found '" + got + "'");
  }
  long integer() {
    const std::string t = word();
    std::size_t used = 0;
    const long v = std::stol(t, &used);
    if (used != t.size()) throw std::runtime_error("conic text: bad integer '" + t + "'");
    return v;
  }
  double real() {
    const std::string t = word();
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw std::runtime_error("conic text: bad number '" + t + "'");
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_text(const ConicProgram& prog, std::ostream& out) {
  out << kMagic << ' ' << kTextVersion << '\n';
  out << "variables " << prog.num_variables() << '\n';
  out << "rows " << prog.num_rows() << '\n';
  out << "cones " << prog.cones().size() << '\n';
  for (const Cone& k : prog.cones()) out << cone_code(k.kind) << ' ' << k.dim << '\n';

  int nnz_c = 0;
  for (double v : prog.c()) nnz_c += v != 0.0;
  out << "c " << nnz_c << '\n';
  for (std::size_t j = 0; j < prog.c().size(); ++j)
    if (prog.c()[j] != 0.0) out << fmt::format("{} {:.17g}\n", j, prog.c()[j]);

  int nnz_b = 0;
  for (double v : prog.b()) nnz_b += v != 0.0;
  out << "b " << nnz_b << '\n';
  for (std::size_t i = 0; i < prog.b().size(); ++i)
    if (prog.b()[i] != 0.0) out << fmt::format("{} {:.17g}\n", i, prog.b()[i]);

  out << "A " << prog.a_triplets().size() << '\n';
  for (const auto& t : prog.a_triplets()) out << fmt::format("{} {} {:.17g}\n", t.row(), t.col(), t.value());
  out << "end\n";
}

ConicProgram read_text(std::istream& in) {
  TokenReader rd(in);
  rd.expect(kMagic);
  if (rd.integer() != kTextVersion) throw std::runtime_error("conic text: unsupported version");
  rd.expect("variables");
  const long n = rd.integer();
  rd.expect("rows");
  const long m = rd.integer();
  if (n < 0 || m < 0) throw std::runtime_error("conic text: negative size");
  rd.expect("cones");
  const long ncones = rd.integer();
  std::vector<Cone> cones;
  for (long i = 0; i < ncones; ++i) {
    const std::string code = rd.word();
    const int dim = static_cast<int>(rd.integer());
    if (code == "z") cones.push_back({ConeKind::zero, dim});
    else if (code == "l") cones.push_back({ConeKind::nonnegative, dim});
    else if (code == "q") cones.push_back({ConeKind::second_order, dim});
    else throw std::runtime_error("conic text: unknown cone code '" + code + "'");
  }

  auto index = [](long i, long bound, const char* what) {
    if (i < 0 || i >= bound) throw std::runtime_error(std::string("conic text: ") + what + " index out of range");
    return static_cast<int>(i);
  };

  std::vector<double> c(n, 0.0), b(m, 0.0);
  rd.expect("c");
  for (long k = 0, cnt = rd.integer(); k < cnt; ++k) {
    const int j = index(rd.integer(), n, "c");
    c[j] = rd.real();
  }
  rd.expect("b");
  for (long k = 0, cnt = rd.integer(); k < cnt; ++k) {
    const int i = index(rd.integer(), m, "b");
    b[i] = rd.real();
  }
  rd.expect("A");
  std::vector<ConicProgram::Triplet> a;
  for (long k = 0, cnt = rd.integer(); k < cnt; ++k) {
    const int i = index(rd.integer(), m, "A row");
    const int j = index(rd.integer(), n, "A column");
    a.emplace_back(i, j, rd.real());
  }
  rd.expect("end");
  return ConicProgram::from_parts(static_cast<int>(n), std::move(c), std::move(a), std::move(b), std::move(cones));
}

}  // namespace wsrm
