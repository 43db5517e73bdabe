#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace flowdesign::lp {

// maximize c'x  s.t.  A_ub x <= b_ub,  A_eq x == b_eq,  lower <= x <= upper.
// Lower bounds must be finite; upper bounds may be +inf. Constraint blocks may
// have zero rows (their column count is then ignored).
struct LinearProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd A_ub;
  Eigen::VectorXd b_ub;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index n_vars() const { return c.size(); }
};

enum class Status { optimal, infeasible, unbounded, numerical_failure };

std::string_view to_string(Status s);

struct Options {
  double pivot_tol = 1e-10;
  double feasibility_tol = 1e-9;
  double check_tol = 1e-8;  // re-substitution check on the caller's data
  bool perturb_on_stall = true;
};

struct Solution {
  Status status = Status::numerical_failure;
  Eigen::VectorXd x;
  double objective = 0.0;
  std::int64_t pivots = 0;
  bool perturbed = false;      // stall fallback was used
  double max_violation = 0.0;  // measured on the unscaled problem
};

// Two-phase dense simplex with Bland's rule.
Solution solve(const LinearProgram& lp, const Options& opt = {});

struct Feasibility {
  Status status = Status::numerical_failure;  // optimal means feasible
  Eigen::VectorXd witness;
  std::int64_t pivots = 0;
  bool feasible() const { return status == Status::optimal; }
};

// Phase 1 only: finds a point of the polyhedron or reports infeasibility.
Feasibility check_feasible(const Eigen::MatrixXd& A_ub, const Eigen::VectorXd& b_ub,
                           const Eigen::MatrixXd& A_eq, const Eigen::VectorXd& b_eq,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           const Options& opt = {});

// Largest violation of the constraints and bounds of `lp` at x.
double max_violation(const LinearProgram& lp, const Eigen::VectorXd& x);

}  // namespace flowdesign::lp
