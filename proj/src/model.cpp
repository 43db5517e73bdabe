#include "flowdesign/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "flowdesign/errors.hpp"

namespace flowdesign {

FlowModel::FlowModel(Eigen::VectorXd sigma2, Eigen::VectorXd mu)
    : sigma2_(std::move(sigma2)), mu_(std::move(mu)) {
  if (sigma2_.size() < 1) throw InvalidArgument("FlowModel: need at least one flow");
  if (mu_.size() != sigma2_.size())
    throw InvalidArgument(fmt::format("FlowModel: {} innovation variances but {} means",
                                      sigma2_.size(), mu_.size()));
  for (Eigen::Index i = 0; i < sigma2_.size(); ++i) {
    if (!(sigma2_[i] > 0.0) || !std::isfinite(sigma2_[i]))
      throw InvalidArgument(fmt::format("FlowModel: sigma2[{}] = {} must be positive", i, sigma2_[i]));
    if (!(mu_[i] > 0.0) || !std::isfinite(mu_[i]))
      throw InvalidArgument(fmt::format("FlowModel: mu[{}] = {} must be positive", i, mu_[i]));
  }
}

DesignProblem DesignProblem::with_budgets(Eigen::MatrixXd J, Eigen::MatrixXd R, Eigen::VectorXd b,
                                          bool cap) {
  DesignProblem p;
  const auto n_o = J.cols();
  p.row_is_equality.assign(static_cast<std::size_t>(R.rows()), false);
  p.lower = Eigen::VectorXd::Zero(n_o);
  p.upper = Eigen::VectorXd::Constant(n_o, cap ? 1.0 : std::numeric_limits<double>::infinity());
  p.J = std::move(J);
  p.R = std::move(R);
  p.b = std::move(b);
  return p;
}

bool ValidationReport::ok() const {
  return std::none_of(issues.begin(), issues.end(), [](const ValidationIssue& i) {
    return i.severity == ValidationIssue::Severity::error;
  });
}

std::vector<std::size_t> ValidationReport::unobservable_flows() const {
  std::vector<std::size_t> out;
  for (const auto& i : issues)
    if (i.kind == ValidationIssue::Kind::unobservable_flow) out.push_back(i.index);
  return out;
}

void ValidationReport::throw_if_error() const {
  for (const auto& i : issues) {
    if (i.severity != ValidationIssue::Severity::error) continue;
    if (i.kind == ValidationIssue::Kind::negative_budget || i.kind == ValidationIssue::Kind::bad_bounds)
      throw InfeasibleError(i.message);
    throw InvalidArgument(i.message);
  }
}

namespace {

void add(ValidationReport& r, ValidationIssue::Severity s, ValidationIssue::Kind k, std::size_t idx,
         std::string msg) {
  r.issues.push_back({s, k, idx, std::move(msg)});
}

}  // namespace

ValidationReport validate_problem(const DesignProblem& p) {
  using S = ValidationIssue::Severity;
  using K = ValidationIssue::Kind;
  ValidationReport r;
  const auto n_o = p.J.cols();
  const auto n_v = p.R.rows();

  bool dims_ok = true;
  auto mismatch = [&](const std::string& what) {
    add(r, S::error, K::dimension_mismatch, 0, what);
    dims_ok = false;
  };
  if (p.J.rows() < 1 || n_o < 1) mismatch("J must have at least one row and one column");
  if (p.R.cols() != n_o && n_v > 0) mismatch(fmt::format("R has {} columns, J has {}", p.R.cols(), n_o));
  if (p.b.size() != n_v) mismatch(fmt::format("b has {} entries, R has {} rows", p.b.size(), n_v));
  if (static_cast<Eigen::Index>(p.row_is_equality.size()) != n_v)
    mismatch(fmt::format("row_is_equality has {} entries, R has {} rows", p.row_is_equality.size(), n_v));
  if (p.lower.size() != n_o) mismatch(fmt::format("lower has {} entries, J has {} columns", p.lower.size(), n_o));
  if (p.upper.size() != n_o) mismatch(fmt::format("upper has {} entries, J has {} columns", p.upper.size(), n_o));
  if (!dims_ok) return r;

  for (Eigen::Index i = 0; i < p.J.rows(); ++i) {
    bool any = false;
    for (Eigen::Index k = 0; k < n_o; ++k) {
      const double v = p.J(i, k);
      if (v < 0.0 || !std::isfinite(v)) {
        add(r, S::error, K::negative_entry, static_cast<std::size_t>(i),
            fmt::format("J({}, {}) = {} must be finite and nonnegative", i, k, v));
      }
      any = any || v > 0.0;
    }
    if (!any)
      add(r, S::warning, K::unobservable_flow, static_cast<std::size_t>(i),
          fmt::format("flow {} is unobservable (all-zero J row)", i + 1));
  }
  for (Eigen::Index j = 0; j < n_v; ++j) {
    if (p.b[j] < 0.0)
      add(r, S::error, K::negative_budget, static_cast<std::size_t>(j),
          fmt::format("budget row {} has b = {} < 0; infeasible with xi >= 0", j + 1, p.b[j]));
  }
  for (Eigen::Index k = 0; k < n_o; ++k) {
    if (!std::isfinite(p.lower[k]) || p.lower[k] > p.upper[k])
      add(r, S::error, K::bad_bounds, static_cast<std::size_t>(k),
          fmt::format("variable {} has bounds [{}, {}]", k + 1, p.lower[k], p.upper[k]));
  }
  return r;
}

ValidationReport validate_problem(const DesignProblem& p, const FlowModel& fm) {
  ValidationReport r = validate_problem(p);
  if (static_cast<Eigen::Index>(fm.n_flows()) != p.J.rows()) {
    r.issues.push_back({ValidationIssue::Severity::error, ValidationIssue::Kind::dimension_mismatch, 0,
                        fmt::format("flow model has {} flows, J has {} rows", fm.n_flows(), p.J.rows())});
  }
  return r;
}

double constraint_violation(const DesignProblem& p, const DesignVector& xi) {
  double worst = 0.0;
  const Eigen::VectorXd Rx = p.R * xi;
  for (Eigen::Index j = 0; j < p.R.rows(); ++j) {
    const double d = Rx[j] - p.b[j];
    worst = std::max(worst, p.row_is_equality[static_cast<std::size_t>(j)] ? std::abs(d) : d);
  }
  for (Eigen::Index k = 0; k < xi.size(); ++k) {
    worst = std::max(worst, p.lower[k] - xi[k]);
    worst = std::max(worst, xi[k] - p.upper[k]);
  }
  return worst;
}

void assert_feasible_design(const DesignProblem& p, const DesignVector& xi, double tol) {
  if (xi.size() != p.J.cols())
    throw NumericalError(fmt::format("design has {} entries, expected {}", xi.size(), p.J.cols()));
  const double v = constraint_violation(p, xi);
  if (v > tol) throw NumericalError(fmt::format("design violates constraints by {:.3g}", v));
  const Eigen::VectorXd m = p.J * xi;
  if (m.size() > 0 && m.minCoeff() < -tol)
    throw NumericalError(fmt::format("negative information {:.3g} at solver output", m.minCoeff()));
}

}  // namespace flowdesign
