#include "ldl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/OrderingMethods>

namespace wsrm::detail {

void QuasiDefiniteLdl::analyze(const SpMat& lower, std::vector<int> signs) {
  n_ = static_cast<int>(lower.rows());
  if (lower.cols() != n_ || static_cast<int>(signs.size()) != n_)
    throw std::invalid_argument("QuasiDefiniteLdl: shape mismatch");

  const SpMat full = lower.selfadjointView<Eigen::Lower>();
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> p;
  Eigen::AMDOrdering<int>()(full, p);
  perm_.assign(n_, 0);
  std::vector<int> inv(n_);
  if (p.size() == n_) {
    for (int i = 0; i < n_; ++i) perm_[i] = p.indices()[i];
  } else {
    for (int i = 0; i < n_; ++i) perm_[i] = i;
  }
  for (int i = 0; i < n_; ++i) inv[perm_[i]] = i;
  signs_.resize(n_);
  for (int i = 0; i < n_; ++i) signs_[i] = signs[perm_[i]];

  // Permuted upper triangle, keeping a map back to the source nonzeros.
  struct Entry {
    int row, col, src;
  };
  std::vector<Entry> entries;
  entries.reserve(lower.nonZeros());
  int k = 0;
  for (int j = 0; j < lower.outerSize(); ++j)
    for (SpMat::InnerIterator it(lower, j); it; ++it, ++k) {
      const int a = inv[it.row()], b = inv[j];
      entries.push_back({std::min(a, b), std::max(a, b), k});
    }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& x, const Entry& y) { return x.col != y.col ? x.col < y.col : x.row < y.row; });
  ap_.assign(n_ + 1, 0);
  ai_.resize(entries.size());
  slot_.assign(entries.size(), 0);
  for (std::size_t e = 0; e < entries.size(); ++e) {
    ++ap_[entries[e].col + 1];
    ai_[e] = entries[e].row;
    slot_[entries[e].src] = static_cast<int>(e);
  }
  for (int j = 0; j < n_; ++j) ap_[j + 1] += ap_[j];
  ax_.assign(entries.size(), 0.0);

  // Elimination tree and column counts of L.
  etree_.assign(n_, -1);
  lnz_.assign(n_, 0);
  std::vector<int> work(n_, -1);
  for (int j = 0; j < n_; ++j) {
    work[j] = j;
    for (int q = ap_[j]; q < ap_[j + 1]; ++q) {
      int i = ai_[q];
      while (work[i] != j) {
        if (etree_[i] == -1) etree_[i] = j;
        ++lnz_[i];
        work[i] = j;
        i = etree_[i];
      }
    }
  }
  lp_.assign(n_ + 1, 0);
  for (int i = 0; i < n_; ++i) lp_[i + 1] = lp_[i] + lnz_[i];
  li_.assign(lp_[n_], 0);
  lx_.assign(lp_[n_], 0.0);
  d_.assign(n_, 0.0);
  dinv_.assign(n_, 0.0);
}

bool QuasiDefiniteLdl::factor(const SpMat& lower, double eps, double delta) {
  if (lower.nonZeros() != static_cast<Eigen::Index>(slot_.size())) return false;
  const double* values = lower.valuePtr();
  for (std::size_t k = 0; k < slot_.size(); ++k) ax_[slot_[k]] = values[k];

  std::vector<double> y(n_, 0.0);
  std::vector<char> marked(n_, 0);
  std::vector<int> next(lp_.begin(), lp_.end() - 1), pattern(n_), stack(n_);
  bumped_ = 0;
  for (int k = 0; k < n_; ++k) {
    d_[k] = 0.0;
    int count = 0;
    for (int q = ap_[k]; q < ap_[k + 1]; ++q) {
      const int i = ai_[q];
      if (i == k) {
        d_[k] = ax_[q];
        continue;
      }
      y[i] = ax_[q];
      if (marked[i]) continue;
      int depth = 0;
      for (int j = i; j != -1 && j < k && !marked[j]; j = etree_[j]) {
        marked[j] = 1;
        stack[depth++] = j;
      }
      while (depth > 0) pattern[count++] = stack[--depth];
    }
    for (int t = count - 1; t >= 0; --t) {
      const int c = pattern[t];
      const double yc = y[c];
      for (int q = lp_[c]; q < next[c]; ++q) y[li_[q]] -= lx_[q] * yc;
      const int slot = next[c]++;
      li_[slot] = k;
      lx_[slot] = yc * dinv_[c];
      d_[k] -= yc * lx_[slot];
      y[c] = 0.0;
      marked[c] = 0;
    }
    if (signs_[k] * d_[k] <= eps) {
      d_[k] = signs_[k] * delta;
      ++bumped_;
    }
    if (!std::isfinite(d_[k])) return false;
    dinv_[k] = 1.0 / d_[k];
  }
  return true;
}

QuasiDefiniteLdl::Vec QuasiDefiniteLdl::solve(const Vec& b) const {
  Vec x(n_);
  for (int i = 0; i < n_; ++i) x[i] = b[perm_[i]];
  for (int i = 0; i < n_; ++i)
    for (int q = lp_[i]; q < lp_[i + 1]; ++q) x[li_[q]] -= lx_[q] * x[i];
  for (int i = 0; i < n_; ++i) x[i] *= dinv_[i];
  for (int i = n_ - 1; i >= 0; --i)
    for (int q = lp_[i]; q < lp_[i + 1]; ++q) x[i] -= lx_[q] * x[li_[q]];
  Vec out(n_);
  for (int i = 0; i < n_; ++i) out[perm_[i]] = x[i];
  return out;
}

}  // namespace wsrm::detail
