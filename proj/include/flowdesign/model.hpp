#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace flowdesign {

// Per-flow observed information m (inverse measurement variance, 1/packets^2).
using InformationVector = Eigen::VectorXd;
// Sampling rates / design weights xi, one per observation point.
using DesignVector = Eigen::VectorXd;

// Random-walk parameters of the tracked flows: innovation variance sigma_i^2
// (packets^2 per period) and mean volume mu_i (packets per period).
class FlowModel {
 public:
  FlowModel(Eigen::VectorXd sigma2, Eigen::VectorXd mu);

  std::size_t n_flows() const { return static_cast<std::size_t>(sigma2_.size()); }
  const Eigen::VectorXd& sigma2() const { return sigma2_; }
  const Eigen::VectorXd& mu() const { return mu_; }

  // Same flows with different mean volumes (plug-in estimates).
  FlowModel with_mu(Eigen::VectorXd mu) const { return FlowModel(sigma2_, std::move(mu)); }

 private:
  Eigen::VectorXd sigma2_;
  Eigen::VectorXd mu_;
};

// Everything a design solver needs: information map m = J xi, budget rows
// R xi <= b (or == b where row_is_equality), and per-variable bounds.
struct DesignProblem {
  Eigen::MatrixXd J;  // n_r x n_o, nonnegative
  Eigen::MatrixXd R;  // n_v x n_o
  Eigen::VectorXd b;  // n_v
  std::vector<bool> row_is_equality;  // n_v
  Eigen::VectorXd lower;  // n_o
  Eigen::VectorXd upper;  // n_o, +inf disables the cap

  std::size_t n_flows() const { return static_cast<std::size_t>(J.rows()); }
  std::size_t n_points() const { return static_cast<std::size_t>(J.cols()); }
  std::size_t n_rows() const { return static_cast<std::size_t>(R.rows()); }

  // Inequality budgets, xi in [0, 1] (or [0, inf) with cap = false).
  static DesignProblem with_budgets(Eigen::MatrixXd J, Eigen::MatrixXd R, Eigen::VectorXd b,
                                    bool cap = true);
};

struct ValidationIssue {
  enum class Severity { warning, error };
  enum class Kind { dimension_mismatch, negative_entry, negative_budget, bad_bounds, unobservable_flow };

  Severity severity;
  Kind kind;
  std::size_t index;  // flow, row, or variable the issue refers to
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const;  // no hard errors (warnings allowed)
  bool clean() const { return issues.empty(); }
  std::vector<std::size_t> unobservable_flows() const;
  // Throws InvalidArgument / InfeasibleError for the first hard error.
  void throw_if_error() const;
};

ValidationReport validate_problem(const DesignProblem& p);
ValidationReport validate_problem(const DesignProblem& p, const FlowModel& fm);

// Largest violation of the budget rows and bounds at xi (0 when feasible).
double constraint_violation(const DesignProblem& p, const DesignVector& xi);

// Absolute tolerance every solver output is re-checked against.
inline constexpr double kDesignTolerance = 1e-8;

// Throws NumericalError if xi violates the problem by more than `tol` or if
// J xi has a negative entry.
void assert_feasible_design(const DesignProblem& p, const DesignVector& xi,
                            double tol = kDesignTolerance);

}  // namespace flowdesign
