#include "wsrm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include <fmt/format.h>

#include "ldl.hpp"
#include "wsrm/errors.hpp"

namespace wsrm {

void SolverSettings::validate() const {
  if (max_iterations < 1) throw ConfigError("max_iterations", "must be >= 1");
  if (!(feasibility_tol > 0.0)) throw ConfigError("feasibility_tol", "must be positive");
  if (!(gap_tol > 0.0)) throw ConfigError("gap_tol", "must be positive");
  if (!(static_regularization >= 0.0)) throw ConfigError("static_regularization", "must be >= 0");
  if (refinement_steps < 0) throw ConfigError("refinement_steps", "must be >= 0");
  if (equilibration_passes < 0) throw ConfigError("equilibration_passes", "must be >= 0");
  if (!(step_fraction > 0.0 && step_fraction < 1.0))
    throw ConfigError("step_fraction", "must lie in (0, 1)");
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::primal_infeasible: return "primal-infeasible";
    case SolveStatus::dual_infeasible: return "dual-infeasible";
    case SolveStatus::max_iterations: return "max-iterations";
    case SolveStatus::numerical_failure: return "numerical-failure";
  }
  return "?";
}

namespace {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kMinStep = 1e-10;
constexpr double kSigmaMin = 1e-4;
// Iterations without a better merit before giving up.
constexpr int kStallWindow = 12;
// Pivot guard for the quasi-definite factorization.
constexpr double kDynamicEps = 1e-13;
constexpr double kDynamicDelta = 2e-7;
// Bounds on the accumulated equilibration factors.
constexpr double kScaleMin = 1e-4;
constexpr double kScaleMax = 1e4;
constexpr double kRefineAbs = 1e-12;
constexpr double kRefineRel = 1e-13;
constexpr double kRefineRatio = 5.0;

struct SocScaling {
  double eta = 1.0;
  double a = 1.0;
  Vec q;
};

// Layout of the inequality rows: nonnegative rows first, then one block per SOC.
class ConeSet {
 public:
  int nlp = 0;
  std::vector<int> soc_off;
  std::vector<int> soc_dim;

  int size() const { return soc_off.empty() ? nlp : soc_off.back() + soc_dim.back(); }
  int degree() const { return nlp + static_cast<int>(soc_off.size()); }

  Vec unit() const {
    Vec e = Vec::Zero(size());
    e.head(nlp).setOnes();
    for (int off : soc_off) e[off] = 1.0;
    return e;
  }

  // NT scaling point for (s, z) and lambda = W z. False if either leaves the interior.
  bool update(const Vec& s, const Vec& z) {
    lp_w_.resize(nlp);
    lambda.resize(size());
    for (int i = 0; i < nlp; ++i) {
      if (!(s[i] > 0.0) || !(z[i] > 0.0)) return false;
      lp_w_[i] = std::sqrt(s[i] / z[i]);
      lambda[i] = std::sqrt(s[i] * z[i]);
    }
    soc_.resize(soc_off.size());
    for (std::size_t k = 0; k < soc_off.size(); ++k) {
      const int off = soc_off[k], d = soc_dim[k];
      auto sk = s.segment(off, d);
      auto zk = z.segment(off, d);
      const double sres = sk[0] * sk[0] - sk.tail(d - 1).squaredNorm();
      const double zres = zk[0] * zk[0] - zk.tail(d - 1).squaredNorm();
      if (!(sk[0] > 0.0) || !(zk[0] > 0.0) || !(sres > 0.0) || !(zres > 0.0)) return false;
      const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
      const Vec sb = sk / snorm;
      const Vec zb = zk / znorm;
      const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
      SocScaling& w = soc_[k];
      w.a = (sb[0] + zb[0]) / (2.0 * gamma);
      w.q = (sb.tail(d - 1) - zb.tail(d - 1)) / (2.0 * gamma);
      w.eta = std::sqrt(snorm / znorm);
    }
    lambda.tail(size() - nlp) = apply_w(z).tail(size() - nlp);
    return true;
  }

  void set_identity() {
    lp_w_ = Vec::Ones(nlp);
    soc_.assign(soc_off.size(), SocScaling{});
    for (std::size_t k = 0; k < soc_off.size(); ++k) {
      soc_[k].a = 1.0;
      soc_[k].q = Vec::Zero(soc_dim[k] - 1);
    }
  }

  Vec apply_w(const Vec& v) const {
    Vec out(v.size());
    for (int i = 0; i < nlp; ++i) out[i] = lp_w_[i] * v[i];
    for (std::size_t k = 0; k < soc_off.size(); ++k) {
      const int off = soc_off[k], d = soc_dim[k];
      const SocScaling& w = soc_[k];
      const double v0 = v[off];
      const auto v1 = v.segment(off + 1, d - 1);
      const double zeta = w.q.dot(v1);
      out[off] = w.eta * (w.a * v0 + zeta);
      out.segment(off + 1, d - 1) = w.eta * (v1 + (v0 + zeta / (1.0 + w.a)) * w.q);
    }
    return out;
  }

  Vec apply_w2(const Vec& v) const { return apply_w(apply_w(v)); }

  // Dense W^2 block of SOC k: eta^2 (2 wb wb' - J), wb = (a, q).
  double w2_entry(std::size_t k, int r, int c) const {
    const SocScaling& w = soc_[k];
    const double wr = r == 0 ? w.a : w.q[r - 1];
    const double wc = c == 0 ? w.a : w.q[c - 1];
    double j = 0.0;
    if (r == c) j = r == 0 ? 1.0 : -1.0;
    return w.eta * w.eta * (2.0 * wr * wc - j);
  }
  double lp_w2(int i) const { return lp_w_[i] * lp_w_[i]; }

  Vec product(const Vec& u, const Vec& v) const {
    Vec w(u.size());
    w.head(nlp) = u.head(nlp).cwiseProduct(v.head(nlp));
    for (std::size_t k = 0; k < soc_off.size(); ++k) {
      const int off = soc_off[k], d = soc_dim[k];
      w[off] = u.segment(off, d).dot(v.segment(off, d));
      w.segment(off + 1, d - 1) = u[off] * v.segment(off + 1, d - 1) + v[off] * u.segment(off + 1, d - 1);
    }
    return w;
  }

  // u with lambda o u = v.
  Vec divide(const Vec& lam, const Vec& v) const {
    Vec u(v.size());
    u.head(nlp) = v.head(nlp).cwiseQuotient(lam.head(nlp));
    for (std::size_t k = 0; k < soc_off.size(); ++k) {
      const int off = soc_off[k], d = soc_dim[k];
      const double l0 = lam[off];
      const auto l1 = lam.segment(off + 1, d - 1);
      const double det = l0 * l0 - l1.squaredNorm();
      const double u0 = (l0 * v[off] - l1.dot(v.segment(off + 1, d - 1))) / det;
      u[off] = u0;
      u.segment(off + 1, d - 1) = (v.segment(off + 1, d - 1) - u0 * l1) / l0;
    }
    return u;
  }

  // Largest alpha with base + alpha d in the cone (base interior); +inf if unbounded.
  double max_step(const Vec& base, const Vec& d) const {
    double alpha = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nlp; ++i)
      if (d[i] < 0.0) alpha = std::min(alpha, -base[i] / d[i]);
    for (std::size_t k = 0; k < soc_off.size(); ++k) {
      const int off = soc_off[k], dim = soc_dim[k];
      const auto lk = base.segment(off, dim);
      const auto dk = d.segment(off, dim);
      const double n2 = lk[0] * lk[0] - lk.tail(dim - 1).squaredNorm();
      if (!(n2 > 0.0)) return 0.0;
      const double nrm = std::sqrt(n2);
      const Vec lb = lk / nrm;
      const double rho0 = (lb[0] * dk[0] - lb.tail(dim - 1).dot(dk.tail(dim - 1))) / nrm;
      const double factor = (rho0 + dk[0] / nrm) / (lb[0] + 1.0);
      const Vec rho1 = dk.tail(dim - 1) / nrm - factor * lb.tail(dim - 1);
      const double sigma = rho1.norm() - rho0;
      if (sigma > 0.0) alpha = std::min(alpha, 1.0 / sigma);
    }
    return alpha;
  }

  // Shifts r into the interior along the identity element.
  Vec bring_to_cone(const Vec& r) const {
    double alpha = -0.99;
    for (int i = 0; i < nlp; ++i)
      if (r[i] <= 0.0 && -r[i] > alpha) alpha = -r[i];
    for (std::size_t k = 0; k < soc_off.size(); ++k) {
      const int off = soc_off[k], d = soc_dim[k];
      const double cres = r[off] - r.segment(off + 1, d - 1).norm();
      if (cres <= 0.0 && -cres > alpha) alpha = -cres;
    }
    return r + (1.0 + alpha) * unit();
  }

  Vec lambda;

 private:
  Vec lp_w_;
  std::vector<SocScaling> soc_;
};

struct Metrics {
  double pres = 0.0, dres = 0.0;
  double pcost = 0.0, dcost = 0.0;
  double gap = 0.0;
  double bty = 0.0, ctx = 0.0;
  double pinf = std::numeric_limits<double>::infinity();
  double dinf = std::numeric_limits<double>::infinity();
};

struct Iterate {
  Vec x, y, z, s;
  double tau = 1.0, kappa = 1.0;
};

class IpmSolver {
 public:
  IpmSolver(const ConicProgram& prog, const SolverSettings& settings) : st_(settings) {
    n_ = prog.num_variables();
    const auto& cones = prog.cones();
    const auto offsets = prog.cone_offsets();

    std::vector<int> eq_rows, lp_rows;
    std::vector<std::pair<int, int>> socs;
    for (std::size_t k = 0; k < cones.size(); ++k) {
      const int off = offsets[k];
      for (int i = 0; i < cones[k].dim; ++i) {
        if (cones[k].kind == ConeKind::zero) eq_rows.push_back(off + i);
        if (cones[k].kind == ConeKind::nonnegative) lp_rows.push_back(off + i);
      }
      if (cones[k].kind == ConeKind::second_order) socs.emplace_back(off, cones[k].dim);
    }
    p_ = static_cast<int>(eq_rows.size());
    cs_.nlp = static_cast<int>(lp_rows.size());
    in_rows_ = lp_rows;
    for (auto [off, d] : socs) {
      cs_.soc_off.push_back(static_cast<int>(in_rows_.size()));
      cs_.soc_dim.push_back(d);
      for (int i = 0; i < d; ++i) in_rows_.push_back(off + i);
    }
    m_ = static_cast<int>(in_rows_.size());
    eq_rows_ = eq_rows;

    // Original data, for unscaled termination checks.
    a_full_ = prog.a_matrix();
    b_full_ = Eigen::Map<const Vec>(prog.b().data(), prog.num_rows());
    c_full_ = Eigen::Map<const Vec>(prog.c().data(), n_);
    a_full_t_ = a_full_.transpose();

    // New row index of each original row: eq rows, then inequality rows.
    const int rows = prog.num_rows();
    std::vector<int> new_row(rows, -1);
    for (int i = 0; i < p_; ++i) new_row[eq_rows_[i]] = i;
    for (int k = 0; k < m_; ++k) new_row[in_rows_[k]] = p_ + k;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(prog.a_triplets().size());
    for (const auto& t : prog.a_triplets()) trip.emplace_back(new_row[t.row()], t.col(), t.value());
    SpMat a(rows, n_);
    a.setFromTriplets(trip.begin(), trip.end());
    Vec bn(rows);
    for (int i = 0; i < rows; ++i) bn[new_row[i]] = b_full_[i];

    equilibrate(a);
    col_scale_ = col_scale_.cwiseMax(1e-300);

    SpMat at = a.transpose();
    a_eq_ = a.topRows(p_);
    g_ = a.bottomRows(m_);
    a_eq_t_ = a_eq_.transpose();
    g_t_ = g_.transpose();
    (void)at;

    const Vec b_scaled = bn.cwiseQuotient(row_scale_);
    b_ = b_scaled.head(p_);
    h_ = b_scaled.tail(m_);
    c_ = c_full_.cwiseQuotient(col_scale_);

    assemble_kkt();
  }

  Solution run() {
    Solution sol;
    Iterate it;
    if (!initial_point(it)) {
      sol.status = SolveStatus::numerical_failure;
      sol.message = "KKT factorization failed at the initial point";
      return finish(sol, it, Metrics{});
    }

    const int degree = cs_.degree();
    const Vec e = cs_.unit();
    Iterate best = it;
    double best_merit = std::numeric_limits<double>::infinity();
    int best_iter = 0;
    Metrics mt;

    for (int iter = 0;; ++iter) {
      sol.iterations = iter;
      // Residuals of the embedding in scaled space.
      const Vec rx = a_eq_t_ * it.y + g_t_ * it.z + c_ * it.tau;
      const Vec ry = -(a_eq_ * it.x) + b_ * it.tau;
      const Vec rz = -(g_ * it.x) + h_ * it.tau - it.s;
      const double rt = -c_.dot(it.x) - b_.dot(it.y) - h_.dot(it.z) - it.kappa;

      mt = metrics(it);
      if (st_.verbose)
        fmt::print(stderr, "{:3d} pcost {:+.6e} dcost {:+.6e} gap {:.2e} pres {:.2e} dres {:.2e} tau {:.2e} kap {:.2e}\n",
                   iter, mt.pcost, mt.dcost, mt.gap, mt.pres, mt.dres, it.tau, it.kappa);

      if (mt.pres <= st_.feasibility_tol && mt.dres <= st_.feasibility_tol && mt.gap <= st_.gap_tol) {
        sol.status = SolveStatus::optimal;
        return finish(sol, it, mt);
      }
      if (it.tau < it.kappa && mt.bty < 0.0 && mt.pinf <= st_.feasibility_tol) {
        sol.status = SolveStatus::primal_infeasible;
        return finish(sol, it, mt);
      }
      if (it.tau < it.kappa && mt.ctx < 0.0 && mt.dinf <= st_.feasibility_tol) {
        sol.status = SolveStatus::dual_infeasible;
        return finish(sol, it, mt);
      }
      const double merit = std::max({mt.pres, mt.dres, mt.gap});
      if (merit < best_merit) {
        best = it;
        best_merit = merit;
        best_iter = iter;
      }
      if (iter >= st_.max_iterations) {
        sol.status = SolveStatus::max_iterations;
        sol.message = "iteration limit reached";
        return finish(sol, best, metrics(best));
      }
      if (iter - best_iter >= kStallWindow) return fail(sol, best, "no progress");

      if (!cs_.update(it.s, it.z)) return fail(sol, best, "iterate left the cone");
      if (!factor(false)) return fail(sol, best, "KKT factorization failed");

      const Vec& lam = cs_.lambda;
      const double mu = (it.s.dot(it.z) + it.tau * it.kappa) / (degree + 1);

      // Direction for the tau column.
      Vec rhs1(n_ + p_ + m_);
      rhs1 << -c_, b_, h_;
      const Vec d1 = kkt_solve(rhs1, false);
      const double den =
          it.kappa / it.tau - c_.dot(d1.head(n_)) - b_.dot(d1.segment(n_, p_)) - h_.dot(d1.tail(m_));

      // Predictor.
      Vec rhs2(n_ + p_ + m_);
      rhs2 << -rx, ry, rz + it.s;
      Vec d2 = kkt_solve(rhs2, false);
      const double dtau_a = (-rt - it.kappa + c_.dot(d2.head(n_)) + b_.dot(d2.segment(n_, p_)) +
                             h_.dot(d2.tail(m_))) / den;
      const Vec dz_a = d2.tail(m_) + dtau_a * d1.tail(m_);
      const Vec wdz_a = cs_.apply_w(dz_a);
      const Vec wds_a = -lam - wdz_a;
      const double dkap_a = -it.kappa - it.kappa * dtau_a / it.tau;
      const double alpha_a = std::min(1.0, step_length(lam, wds_a, wdz_a, it, dtau_a, dkap_a));
      const double sigma = std::clamp(std::pow(1.0 - alpha_a, 3), kSigmaMin, 1.0);

      // Corrector.
      const Vec ds_rhs = -cs_.product(lam, lam) - cs_.product(wds_a, wdz_a) + sigma * mu * e;
      const Vec lds = cs_.divide(lam, ds_rhs);
      rhs2 << -(1.0 - sigma) * rx, (1.0 - sigma) * ry, (1.0 - sigma) * rz - cs_.apply_w(lds);
      d2 = kkt_solve(rhs2, false);
      const double dkap_rhs = -it.tau * it.kappa - dtau_a * dkap_a + sigma * mu;
      const double dtau = (-(1.0 - sigma) * rt + dkap_rhs / it.tau + c_.dot(d2.head(n_)) +
                           b_.dot(d2.segment(n_, p_)) + h_.dot(d2.tail(m_))) / den;
      const Vec d = d2 + dtau * d1;
      const Vec dz = d.tail(m_);
      const Vec wdz = cs_.apply_w(dz);
      const Vec wds = lds - wdz;
      const Vec ds = cs_.apply_w(wds);
      const double dkap = (dkap_rhs - it.kappa * dtau) / it.tau;

      const double alpha_max = step_length(lam, wds, wdz, it, dtau, dkap);
      const double alpha = std::min(1.0, st_.step_fraction * alpha_max);
      if (st_.verbose) fmt::print(stderr, "    alpha_a {:.3e} sigma {:.2e} alpha {:.3e} dtau {:.2e}\n", alpha_a, sigma, alpha, dtau);
      if (!std::isfinite(alpha) || alpha < kMinStep || !d.allFinite())
        return fail(sol, best, "step length collapsed");

      it.x += alpha * d.head(n_);
      it.y += alpha * d.segment(n_, p_);
      it.z += alpha * dz;
      it.s += alpha * ds;
      it.tau += alpha * dtau;
      it.kappa += alpha * dkap;
      if (!(it.tau > 0.0) || !(it.kappa > 0.0)) return fail(sol, best, "tau or kappa left the cone");
    }
  }

 private:
  // Ruiz-style scaling; rows of one SOC share a factor so the cone is preserved.
  void equilibrate(SpMat& a) {
    const int rows = p_ + m_;
    row_scale_ = Vec::Ones(rows);
    col_scale_ = Vec::Ones(n_);
    for (int pass = 0; pass < st_.equilibration_passes; ++pass) {
      Vec rmax = Vec::Zero(rows), cmax = Vec::Zero(n_);
      for (int j = 0; j < a.outerSize(); ++j)
        for (SpMat::InnerIterator itr(a, j); itr; ++itr) {
          const double v = std::abs(itr.value());
          rmax[itr.row()] = std::max(rmax[itr.row()], v);
          cmax[j] = std::max(cmax[j], v);
        }
      for (std::size_t k = 0; k < cs_.soc_off.size(); ++k) {
        const int off = p_ + cs_.soc_off[k], d = cs_.soc_dim[k];
        const double mx = rmax.segment(off, d).maxCoeff();
        rmax.segment(off, d).setConstant(mx);
      }
      auto factor_of = [](double v) { return v < 1e-6 ? 1.0 : std::sqrt(v); };
      Vec rf = rmax.unaryExpr(factor_of), cf = cmax.unaryExpr(factor_of);
      // Keep the accumulated scaling inside [kScaleMin, kScaleMax].
      for (int i = 0; i < rows; ++i) rf[i] = std::clamp(rf[i], row_scale_[i] / kScaleMax, row_scale_[i] / kScaleMin);
      for (int j = 0; j < n_; ++j) cf[j] = std::clamp(cf[j], col_scale_[j] / kScaleMax, col_scale_[j] / kScaleMin);
      for (int j = 0; j < a.outerSize(); ++j)
        for (SpMat::InnerIterator itr(a, j); itr; ++itr) itr.valueRef() /= rf[itr.row()] * cf[j];
      row_scale_ = row_scale_.cwiseProduct(rf);
      col_scale_ = col_scale_.cwiseProduct(cf);
    }
  }

  // Lower triangle of [dI A' G'; A -dI 0; G 0 -W^2 - dI] with slots for the W^2 blocks.
  void assemble_kkt() {
    const int dim = n_ + p_ + m_;
    const double reg = st_.static_regularization;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(a_eq_.nonZeros() + g_.nonZeros() + dim);
    for (int j = 0; j < n_; ++j) t.emplace_back(j, j, reg);
    for (int j = 0; j < a_eq_.outerSize(); ++j)
      for (SpMat::InnerIterator itr(a_eq_, j); itr; ++itr) t.emplace_back(n_ + itr.row(), j, itr.value());
    for (int i = 0; i < p_; ++i) t.emplace_back(n_ + i, n_ + i, -reg);
    for (int j = 0; j < g_.outerSize(); ++j)
      for (SpMat::InnerIterator itr(g_, j); itr; ++itr) t.emplace_back(n_ + p_ + itr.row(), j, itr.value());
    const int z0 = n_ + p_;
    for (int i = 0; i < cs_.nlp; ++i) t.emplace_back(z0 + i, z0 + i, -1.0);
    for (std::size_t k = 0; k < cs_.soc_off.size(); ++k) {
      const int off = z0 + cs_.soc_off[k], d = cs_.soc_dim[k];
      for (int c = 0; c < d; ++c)
        for (int r = c; r < d; ++r) t.emplace_back(off + r, off + c, r == c ? -1.0 : 0.0);
    }
    kkt_.resize(dim, dim);
    kkt_.setFromTriplets(t.begin(), t.end());
    kkt_.makeCompressed();

    lp_slots_.clear();
    for (int i = 0; i < cs_.nlp; ++i) lp_slots_.push_back(&kkt_.coeffRef(z0 + i, z0 + i));
    soc_slots_.assign(cs_.soc_off.size(), {});
    for (std::size_t k = 0; k < cs_.soc_off.size(); ++k) {
      const int off = z0 + cs_.soc_off[k], d = cs_.soc_dim[k];
      for (int c = 0; c < d; ++c)
        for (int r = c; r < d; ++r) soc_slots_[k].push_back(&kkt_.coeffRef(off + r, off + c));
    }
    std::vector<int> signs(dim, -1);
    std::fill(signs.begin(), signs.begin() + n_, 1);
    ldl_.analyze(kkt_, std::move(signs));
  }

  bool factor(bool identity) {
    const double reg = st_.static_regularization;
    for (int i = 0; i < cs_.nlp; ++i) *lp_slots_[i] = -(identity ? 1.0 : cs_.lp_w2(i)) - reg;
    for (std::size_t k = 0; k < cs_.soc_off.size(); ++k) {
      const int d = cs_.soc_dim[k];
      std::size_t slot = 0;
      for (int c = 0; c < d; ++c)
        for (int r = c; r < d; ++r) {
          const double w2 = identity ? (r == c ? 1.0 : 0.0) : cs_.w2_entry(k, r, c);
          *soc_slots_[k][slot++] = -w2 - (r == c ? reg : 0.0);
        }
    }
    return ldl_.factor(kkt_, kDynamicEps, kDynamicDelta);
  }

  // Unregularized KKT product.
  Vec kkt_multiply(const Vec& d, bool identity) const {
    const auto dx = d.head(n_);
    const auto dy = d.segment(n_, p_);
    const Vec dz = d.tail(m_);
    Vec out(d.size());
    out.head(n_) = a_eq_t_ * dy + g_t_ * dz;
    out.segment(n_, p_) = a_eq_ * dx;
    out.tail(m_) = g_ * dx - (identity ? dz : cs_.apply_w2(dz));
    return out;
  }

  // Iterative refinement against the unregularized matrix; stops once the
  // error is small or stops shrinking.
  Vec kkt_solve(const Vec& rhs, bool identity) const {
    Vec d = ldl_.solve(rhs);
    const double target = kRefineAbs + kRefineRel * rhs.lpNorm<Eigen::Infinity>();
    Vec err = rhs - kkt_multiply(d, identity);
    double norm = err.lpNorm<Eigen::Infinity>();
    for (int k = 0; k < st_.refinement_steps && norm > target; ++k) {
      const Vec trial = d + ldl_.solve(err);
      const Vec trial_err = rhs - kkt_multiply(trial, identity);
      const double trial_norm = trial_err.lpNorm<Eigen::Infinity>();
      if (!(trial_norm < norm)) break;
      const bool slow = trial_norm * kRefineRatio > norm;
      d = trial;
      err = trial_err;
      norm = trial_norm;
      if (slow) break;
    }
    return d;
  }

  bool initial_point(Iterate& it) {
    cs_.set_identity();
    if (!factor(true)) return false;
    Vec rhs(n_ + p_ + m_);
    rhs << Vec::Zero(n_), b_, h_;
    const Vec d1 = kkt_solve(rhs, true);
    it.x = d1.head(n_);
    it.s = cs_.bring_to_cone(-d1.tail(m_));
    rhs << -c_, Vec::Zero(p_), Vec::Zero(m_);
    const Vec d2 = kkt_solve(rhs, true);
    it.y = d2.segment(n_, p_);
    it.z = cs_.bring_to_cone(d2.tail(m_));
    it.tau = 1.0;
    it.kappa = 1.0;
    return it.x.allFinite() && it.s.allFinite() && it.y.allFinite() && it.z.allFinite();
  }

  double step_length(const Vec& lam, const Vec& wds, const Vec& wdz, const Iterate& it, double dtau,
                     double dkap) const {
    double alpha = std::min(cs_.max_step(lam, wds), cs_.max_step(lam, wdz));
    if (dtau < 0.0) alpha = std::min(alpha, -it.tau / dtau);
    if (dkap < 0.0) alpha = std::min(alpha, -it.kappa / dkap);
    return alpha;
  }

  // Unscaled primal/dual pieces in original row order, not divided by tau.
  void unscale(const Iterate& it, Vec& x, Vec& y, Vec& s) const {
    x = it.x.cwiseQuotient(col_scale_);
    y = Vec::Zero(b_full_.size());
    s = Vec::Zero(b_full_.size());
    for (int i = 0; i < p_; ++i) y[eq_rows_[i]] = it.y[i] / row_scale_[i];
    for (int k = 0; k < m_; ++k) {
      y[in_rows_[k]] = it.z[k] / row_scale_[p_ + k];
      s[in_rows_[k]] = it.s[k] * row_scale_[p_ + k];
    }
  }

  Metrics metrics(const Iterate& it) const {
    Metrics mt;
    Vec x, y, s;
    unscale(it, x, y, s);
    const Vec ax = a_full_ * x;
    const Vec aty = a_full_t_ * y;
    // Normalized by the data and the current iterate.
    mt.pres = (ax + s - it.tau * b_full_).norm() / it.tau /
              std::max(1.0, b_full_.norm() + (x.norm() + s.norm()) / it.tau);
    mt.dres = (aty + it.tau * c_full_).norm() / it.tau / std::max(1.0, c_full_.norm() + y.norm() / it.tau);
    mt.ctx = c_full_.dot(x);
    mt.bty = b_full_.dot(y);
    mt.pcost = mt.ctx / it.tau;
    mt.dcost = -mt.bty / it.tau;
    mt.gap = std::abs(mt.pcost - mt.dcost) / std::max(1.0, std::min(std::abs(mt.pcost), std::abs(mt.dcost)));
    if (mt.bty < 0.0) mt.pinf = aty.norm() / -mt.bty;
    if (mt.ctx < 0.0) mt.dinf = (ax + s).norm() / -mt.ctx;
    return mt;
  }

  Solution fail(Solution& sol, const Iterate& it, const std::string& why) {
    sol.status = SolveStatus::numerical_failure;
    sol.message = why;
    return finish(sol, it, metrics(it));
  }

  Solution finish(Solution& sol, const Iterate& it, const Metrics& mt) {
    Vec x, y, s;
    if (it.x.size() == n_) unscale(it, x, y, s);
    sol.primal_residual = mt.pres;
    sol.dual_residual = mt.dres;
    sol.gap = mt.gap;
    switch (sol.status) {
      case SolveStatus::primal_infeasible:
        sol.y = y / -mt.bty;
        sol.primal_objective = std::numeric_limits<double>::infinity();
        sol.dual_objective = std::numeric_limits<double>::infinity();
        if (sol.message.empty()) sol.message = fmt::format("Farkas residual {:.2e}", mt.pinf);
        break;
      case SolveStatus::dual_infeasible:
        sol.x = x / -mt.ctx;
        sol.s = s / -mt.ctx;
        sol.primal_objective = -std::numeric_limits<double>::infinity();
        sol.dual_objective = -std::numeric_limits<double>::infinity();
        if (sol.message.empty()) sol.message = fmt::format("unbounded ray residual {:.2e}", mt.dinf);
        break;
      default:
        if (x.size() == n_) {
          sol.x = x / it.tau;
          sol.y = y / it.tau;
          sol.s = s / it.tau;
        }
        sol.primal_objective = mt.pcost;
        sol.dual_objective = mt.dcost;
        break;
    }
    return sol;
  }

  SolverSettings st_;
  int n_ = 0, p_ = 0, m_ = 0;
  ConeSet cs_;
  std::vector<int> eq_rows_, in_rows_;
  SpMat a_full_, a_full_t_;
  Vec b_full_, c_full_;
  SpMat a_eq_, a_eq_t_, g_, g_t_;
  Vec b_, h_, c_;
  Vec row_scale_, col_scale_;
  SpMat kkt_;
  std::vector<double*> lp_slots_;
  std::vector<std::vector<double*>> soc_slots_;
  detail::QuasiDefiniteLdl ldl_;
};

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

}  // namespace

Solution solve(const ConicProgram& prog, const SolverSettings& settings) {
  settings.validate();
  const Diagnostics diag = validate(prog);
  if (!diag.ok()) throw ShapeError("solve: malformed program: " + diag.issues.front());
  IpmSolver solver(prog, settings);
  return solver.run();
}

double cone_violation(const ConicProgram& prog, std::span<const double> v, bool dual) {
  if (static_cast<int>(v.size()) != prog.num_rows()) throw ShapeError("cone_violation: size mismatch");
  double worst = 0.0;
  int off = 0;
  for (const Cone& k : prog.cones()) {
    const auto blk = v.subspan(off, k.dim);
    switch (k.kind) {
      case ConeKind::zero:
        if (!dual)
          for (double a : blk) worst = std::max(worst, std::abs(a));
        break;
      case ConeKind::nonnegative:
        for (double a : blk) worst = std::max(worst, -a);
        break;
      case ConeKind::second_order:
        worst = std::max(worst, norm2(blk.subspan(1)) - blk[0]);
        break;
    }
    off += k.dim;
  }
  return worst;
}

double ResidualReport::max_optimality_residual() const {
  return std::max({primal_residual, dual_residual, gap, primal_cone_violation, dual_cone_violation});
}

ResidualReport residuals(const ConicProgram& prog, const Solution& sol) {
  ResidualReport rep;
  const int n = prog.num_variables(), rows = prog.num_rows();
  const auto& b = prog.b();
  const auto& c = prog.c();

  auto at_times = [&](std::span<const double> y) {
    std::vector<double> out(n, 0.0);
    for (const auto& t : prog.a_triplets()) out[t.col()] += t.value() * y[t.row()];
    return out;
  };
  auto dot = [](std::span<const double> u, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
  };
  const double bnorm = norm2(b), cnorm = norm2(c);
  const bool have_x = sol.x.size() == n && sol.s.size() == rows;
  const bool have_y = sol.y.size() == rows;
  const std::span<const double> x(sol.x.data(), have_x ? n : 0);
  const std::span<const double> s(sol.s.data(), have_x ? rows : 0);
  const std::span<const double> y(sol.y.data(), have_y ? rows : 0);

  if (sol.status == SolveStatus::primal_infeasible) {
    if (!have_y) return rep;
    const auto aty = at_times(y);
    rep.certificate_value = dot(b, y);
    rep.certificate_residual = norm2(aty) / std::abs(rep.certificate_value);
    rep.dual_cone_violation = cone_violation(prog, y, true);
    rep.certificate_valid = rep.certificate_value < 0.0;
    return rep;
  }
  if (sol.status == SolveStatus::dual_infeasible) {
    if (!have_x) return rep;
    // A x + s = b - slack(x) + s - b  ->  A x = b - slack(x).
    const auto sl = prog.slack(x);
    std::vector<double> axs(rows);
    for (int i = 0; i < rows; ++i) axs[i] = b[i] - sl[i] + s[i];
    rep.certificate_value = dot(c, x);
    rep.certificate_residual = norm2(axs) / std::abs(rep.certificate_value);
    rep.primal_cone_violation = cone_violation(prog, s, false);
    rep.certificate_valid = rep.certificate_value < 0.0;
    return rep;
  }
  if (!have_x || !have_y) return rep;

  const auto sl = prog.slack(x);
  std::vector<double> pr(rows);
  for (int i = 0; i < rows; ++i) pr[i] = sl[i] - s[i];
  rep.primal_residual = norm2(pr) / (1.0 + bnorm);
  auto dr = at_times(y);
  for (int j = 0; j < n; ++j) dr[j] += c[j];
  rep.dual_residual = norm2(dr) / (1.0 + cnorm);
  rep.complementarity = dot(s, y);
  const double ctx = dot(c, x), bty = dot(b, y);
  rep.gap = std::abs(ctx + bty) / std::max(1.0, std::min(std::abs(ctx), std::abs(bty)));
  rep.primal_cone_violation = cone_violation(prog, s, false);
  rep.dual_cone_violation = cone_violation(prog, y, true);
  return rep;
}

// --- registry -----------------------------------------------------------------

struct SolverRegistry::Impl {
  mutable std::mutex mu;
  std::map<std::string, SolverFn> solvers;
};

SolverRegistry::SolverRegistry() : impl_(std::make_shared<Impl>()) {
  impl_->solvers["ipm"] = [](const ConicProgram& p, const SolverSettings& s) { return solve(p, s); };
}

SolverRegistry& SolverRegistry::instance() {
  static SolverRegistry reg;
  return reg;
}

void SolverRegistry::add(const std::string& name, SolverFn fn) {
  if (name.empty() || !fn) throw ConfigError("solver", "empty name or callable");
  std::lock_guard lock(impl_->mu);
  impl_->solvers[name] = std::move(fn);
}

SolverFn SolverRegistry::get(const std::string& name) const {
  std::lock_guard lock(impl_->mu);
  auto it = impl_->solvers.find(name);
  if (it == impl_->solvers.end()) throw ConfigError("solver", "unknown solver '" + name + "'");
  return it->second;
}

std::vector<std::string> SolverRegistry::names() const {
  std::lock_guard lock(impl_->mu);
  std::vector<std::string> out;
  for (const auto& [k, v] : impl_->solvers) out.push_back(k);
  return out;
}

}  // namespace wsrm
