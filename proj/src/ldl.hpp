#pragma once

#include <vector>

#include <Eigen/SparseCore>

namespace wsrm::detail {

// Sparse LDL' for quasi-definite matrices. Pivots whose sign disagrees with the
// expected one, or that are too small, are replaced by sign * delta.
class QuasiDefiniteLdl {
 public:
  using SpMat = Eigen::SparseMatrix<double>;
  using Vec = Eigen::VectorXd;

  // pattern: lower triangle, compressed. signs[i] is +1 or -1.
  void analyze(const SpMat& lower, std::vector<int> signs);
  // Values are read from `lower`, whose pattern must match the analyzed one.
  bool factor(const SpMat& lower, double eps, double delta);
  Vec solve(const Vec& b) const;

  int dynamic_pivots() const { return bumped_; }
  long factor_nonzeros() const { return static_cast<long>(li_.size()); }

 private:
  int n_ = 0;
  std::vector<int> perm_;    // new -> old
  std::vector<int> signs_;   // in new order
  std::vector<int> ap_, ai_; // permuted upper triangle, CSC
  std::vector<int> slot_;    // nonzero k of `lower` -> position in ax_
  std::vector<double> ax_;
  std::vector<int> etree_, lnz_, lp_, li_;
  std::vector<double> lx_, d_, dinv_;
  int bumped_ = 0;
};

}  // namespace wsrm::detail
