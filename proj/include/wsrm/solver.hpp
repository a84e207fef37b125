#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wsrm/conic.hpp"

namespace wsrm {

struct SolverSettings {
  int max_iterations = 100;
  double feasibility_tol = 1e-8;
  double gap_tol = 1e-8;
  /// +delta on the primal block and -delta on the dual blocks of the KKT matrix.
  double static_regularization = 1e-8;
  int refinement_steps = 10;
  int equilibration_passes = 0;  ///< Ruiz passes; the subproblems are scaled by construction
  double step_fraction = 0.99;
  bool verbose = false;

  void validate() const;
};

enum class SolveStatus { optimal, primal_infeasible, dual_infeasible, max_iterations, numerical_failure };

const char* to_string(SolveStatus status);

/// Result of a conic solve in the program's original row order.
///
/// optimal:            x, s primal optimal; y dual optimal (A'y + c = 0, y in K*).
/// primal_infeasible:  y is a Farkas certificate scaled so b'y = -1; x, s are empty.
/// dual_infeasible:    x, s form an improving ray scaled so c'x = -1; y is empty.
/// otherwise:          the last (or best) iterate, for diagnostics.
struct Solution {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd s;
  SolveStatus status = SolveStatus::numerical_failure;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  /// |pcost - dcost| / max(1, min(|pcost|, |dcost|)).
  double gap = 0.0;
  /// ||Ax + s - b|| / max(1, ||b|| + ||x|| + ||s||).
  double primal_residual = 0.0;
  /// ||A'y + c|| / max(1, ||c|| + ||y||).
  double dual_residual = 0.0;
  int iterations = 0;
  std::string message;
};

/// Primal-dual interior-point method on the homogeneous self-dual embedding
/// with Nesterov-Todd scaling and a Mehrotra predictor-corrector step.
Solution solve(const ConicProgram& prog, const SolverSettings& settings = {});

/// Residuals recomputed from the program data with no reference to the solver.
struct ResidualReport {
  double primal_residual = 0.0;   ///< ||Ax + s - b|| / (1 + ||b||)
  double dual_residual = 0.0;     ///< ||A'y + c|| / (1 + ||c||)
  double complementarity = 0.0;   ///< s'y
  double gap = 0.0;               ///< |c'x + b'y| / max(1, min(|c'x|, |b'y|))
  double primal_cone_violation = 0.0;
  double dual_cone_violation = 0.0;

  /// Certificate checks; only filled for the matching status.
  double certificate_residual = 0.0;  ///< ||A'y|| / |b'y|  or  ||Ax + s|| / |c'x|
  double certificate_value = 0.0;     ///< b'y  or  c'x (must be negative)
  bool certificate_valid = false;

  double max_optimality_residual() const;
};

ResidualReport residuals(const ConicProgram& prog, const Solution& sol);

/// Largest violation of membership in the cone product (0 when inside).
double cone_violation(const ConicProgram& prog, std::span<const double> v, bool dual);

/// Something that maps (program, settings) to a solution.
using SolverFn = std::function<Solution(const ConicProgram&, const SolverSettings&)>;

/// Named solver back ends; "ipm" (the built-in solver) is always registered.
class SolverRegistry {
 public:
  static SolverRegistry& instance();
  void add(const std::string& name, SolverFn fn);
  SolverFn get(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  SolverRegistry();
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace wsrm
