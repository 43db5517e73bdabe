#include "flowdesign/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "flowdesign/errors.hpp"
#include "flowdesign/filtering.hpp"
#include "flowdesign/lp.hpp"

namespace flowdesign {

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::classical_E: return "classical";
    case Scheme::steady_state_E: return "steady_state";
    case Scheme::myopic: return "myopic";
    case Scheme::naive: return "naive";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "classical" || name == "classical_E") return Scheme::classical_E;
  if (name == "steady-state" || name == "steady_state" || name == "steady_state_E") return Scheme::steady_state_E;
  if (name == "myopic") return Scheme::myopic;
  if (name == "naive") return Scheme::naive;
  throw InvalidArgument(fmt::format("unknown scheme '{}'", name));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Budget rows split into the inequality and equality blocks of an LP.
struct BudgetBlocks {
  Eigen::MatrixXd A_ub, A_eq;
  Eigen::VectorXd b_ub, b_eq;
};

BudgetBlocks split_budgets(const DesignProblem& p) {
  std::vector<Eigen::Index> ub, eq;
  for (Eigen::Index j = 0; j < p.R.rows(); ++j)
    (p.row_is_equality[static_cast<std::size_t>(j)] ? eq : ub).push_back(j);
  BudgetBlocks out;
  const auto n_o = p.J.cols();
  out.A_ub.resize(static_cast<Eigen::Index>(ub.size()), n_o);
  out.b_ub.resize(static_cast<Eigen::Index>(ub.size()));
  out.A_eq.resize(static_cast<Eigen::Index>(eq.size()), n_o);
  out.b_eq.resize(static_cast<Eigen::Index>(eq.size()));
  for (std::size_t r = 0; r < ub.size(); ++r) {
    out.A_ub.row(static_cast<Eigen::Index>(r)) = p.R.row(ub[r]);
    out.b_ub[static_cast<Eigen::Index>(r)] = p.b[ub[r]];
  }
  for (std::size_t r = 0; r < eq.size(); ++r) {
    out.A_eq.row(static_cast<Eigen::Index>(r)) = p.R.row(eq[r]);
    out.b_eq[static_cast<Eigen::Index>(r)] = p.b[eq[r]];
  }
  return out;
}

[[noreturn]] void raise(lp::Status s, std::string_view what) {
  switch (s) {
    case lp::Status::infeasible:
      throw InfeasibleError(fmt::format("{}: constraints are infeasible", what));
    case lp::Status::unbounded:
      throw UnboundedError(fmt::format("{}: objective is unbounded (no budget limits some variable)", what));
    default:
      throw NumericalError(fmt::format("{}: LP solver failed ({})", what, lp::to_string(s)));
  }
}

// max theta s.t. theta - (J xi)_i <= offset_i, budgets, bounds; x = (theta, xi).
lp::LinearProgram theta_lp(const DesignProblem& p, const Eigen::VectorXd& offset) {
  const auto n_r = p.J.rows();
  const auto n_o = p.J.cols();
  const BudgetBlocks bb = split_budgets(p);

  lp::LinearProgram prog;
  prog.c = Eigen::VectorXd::Zero(n_o + 1);
  prog.c[0] = 1.0;

  prog.A_ub = Eigen::MatrixXd::Zero(n_r + bb.A_ub.rows(), n_o + 1);
  prog.b_ub.resize(prog.A_ub.rows());
  prog.A_ub.col(0).head(n_r).setOnes();
  prog.A_ub.block(0, 1, n_r, n_o) = -p.J;
  prog.b_ub.head(n_r) = offset;
  prog.A_ub.block(n_r, 1, bb.A_ub.rows(), n_o) = bb.A_ub;
  prog.b_ub.tail(bb.A_ub.rows()) = bb.b_ub;

  prog.A_eq = Eigen::MatrixXd::Zero(bb.A_eq.rows(), n_o + 1);
  prog.A_eq.rightCols(n_o) = bb.A_eq;
  prog.b_eq = bb.b_eq;

  prog.lower.resize(n_o + 1);
  prog.upper.resize(n_o + 1);
  prog.lower[0] = 0.0;
  prog.upper[0] = kInf;
  prog.lower.tail(n_o) = p.lower;
  prog.upper.tail(n_o) = p.upper;
  return prog;
}

DesignResult solve_theta_lp(const DesignProblem& p, const Eigen::VectorXd& offset, Scheme scheme,
                            std::string_view what) {
  const lp::LinearProgram prog = theta_lp(p, offset);
  const lp::Solution sol = lp::solve(prog);
  if (sol.status != lp::Status::optimal) raise(sol.status, what);

  DesignResult res;
  res.scheme = scheme;
  res.xi = sol.x.tail(p.J.cols());
  assert_feasible_design(p, res.xi);
  res.theta = (offset + p.J * res.xi).minCoeff();
  res.diagnostics.lp_pivots = sol.pivots;
  res.diagnostics.perturbed = sol.perturbed;
  res.diagnostics.max_violation = constraint_violation(p, res.xi);
  return res;
}

double min_steady_state(const Eigen::VectorXd& m, const Eigen::VectorXd& sigma2) {
  double out = kInf;
  for (Eigen::Index i = 0; i < m.size(); ++i)
    out = std::min(out, steady_state_info(std::max(m[i], 0.0), sigma2[i]));
  return out;
}

}  // namespace

DesignResult solve_classical_E(const DesignProblem& p) {
  const ValidationReport report = validate_problem(p);
  report.throw_if_error();
  DesignResult res = solve_theta_lp(p, Eigen::VectorXd::Zero(p.J.rows()), Scheme::classical_E, "classical E-optimal design");
  res.diagnostics.unobservable_flows = report.unobservable_flows();
  return res;
}

DesignResult solve_myopic(const DesignProblem& p, const FlowModel& fm, const Eigen::VectorXd& prior_info,
                          bool use_prediction) {
  const ValidationReport report = validate_problem(p, fm);
  report.throw_if_error();
  if (prior_info.size() != p.J.rows())
    throw InvalidArgument(fmt::format("myopic design: prior_info has {} entries, expected {}",
                                      prior_info.size(), p.J.rows()));
  Eigen::VectorXd a(prior_info.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!(prior_info[i] >= 0.0))
      throw InvalidArgument(fmt::format("myopic design: prior_info[{}] = {} must be nonnegative", i, prior_info[i]));
    a[i] = use_prediction ? predicted_info(prior_info[i], fm.sigma2()[i]) : prior_info[i];
  }
  DesignResult res = solve_theta_lp(p, a, Scheme::myopic, "myopic design");
  res.diagnostics.unobservable_flows = report.unobservable_flows();
  return res;
}

DesignResult solve_steady_state_E(const DesignProblem& p, const FlowModel& fm, double tol_theta) {
  const ValidationReport report = validate_problem(p, fm);
  report.throw_if_error();
  if (!(tol_theta > 0.0)) throw InvalidArgument("steady-state design: tol_theta must be positive");

  const auto n_r = p.J.rows();
  const auto n_o = p.J.cols();
  const BudgetBlocks bb = split_budgets(p);
  const Eigen::VectorXd& sigma2 = fm.sigma2();

  DesignResult res;
  res.scheme = Scheme::steady_state_E;
  res.diagnostics.unobservable_flows = report.unobservable_flows();

  const lp::Feasibility base = lp::check_feasible(bb.A_ub, bb.b_ub, bb.A_eq, bb.b_eq, p.lower, p.upper);
  res.diagnostics.lp_pivots += base.pivots;
  if (!base.feasible()) raise(base.status, "steady-state design");

  auto finish = [&](Eigen::VectorXd xi) {
    assert_feasible_design(p, xi);
    res.xi = std::move(xi);
    res.theta = min_steady_state(p.J * res.xi, sigma2);
    res.diagnostics.max_violation = constraint_violation(p, res.xi);
    return res;
  };
  if (!res.diagnostics.unobservable_flows.empty()) return finish(base.witness);

  // Upper end of the bracket: theta* <= steady_state_info(max (J xi)_i) for every i.
  double hi = 0.0;
  if (p.upper.allFinite()) {
    hi = min_steady_state(p.J * p.upper.cwiseMax(0.0), sigma2);
  } else {
    lp::LinearProgram total;
    total.c = p.J.colwise().sum().transpose();
    total.A_ub = bb.A_ub;
    total.b_ub = bb.b_ub;
    total.A_eq = bb.A_eq;
    total.b_eq = bb.b_eq;
    total.lower = p.lower;
    total.upper = p.upper;
    const lp::Solution s = lp::solve(total);
    res.diagnostics.lp_pivots += s.pivots;
    if (s.status != lp::Status::optimal) raise(s.status, "steady-state design (bracket)");
    hi = min_steady_state(Eigen::VectorXd::Constant(n_r, std::max(s.objective, 0.0)), sigma2);
  }

  auto probe = [&](double theta) {
    Eigen::MatrixXd A(bb.A_ub.rows() + n_r, n_o);
    Eigen::VectorXd b(A.rows());
    A.topRows(bb.A_ub.rows()) = bb.A_ub;
    b.head(bb.A_ub.rows()) = bb.b_ub;
    A.bottomRows(n_r) = -p.J;
    for (Eigen::Index i = 0; i < n_r; ++i) b[bb.A_ub.rows() + i] = -required_info(theta, sigma2[i]);
    lp::Feasibility f = lp::check_feasible(A, b, bb.A_eq, bb.b_eq, p.lower, p.upper);
    res.diagnostics.lp_pivots += f.pivots;
    ++res.diagnostics.bisection_steps;
    if (f.status == lp::Status::numerical_failure) raise(f.status, "steady-state design (probe)");
    return f;
  };

  double lo = 0.0;
  Eigen::VectorXd witness = base.witness;
  if (hi > 0.0) {
    if (auto top = probe(hi); top.feasible()) {
      lo = hi;
      witness = std::move(top.witness);
    }
  }
  while (hi - lo > tol_theta * hi && res.diagnostics.bisection_steps < 400) {
    const double mid = 0.5 * (lo + hi);
    if (auto f = probe(mid); f.feasible()) {
      lo = mid;
      witness = std::move(f.witness);
    } else {
      hi = mid;
    }
  }
  res.diagnostics.theta_lo = lo;
  res.diagnostics.theta_hi = hi;
  return finish(std::move(witness));
}

DesignResult solve_naive(const DesignProblem& p, const TraversalMatrix& traversal) {
  const ValidationReport report = validate_problem(p);
  report.throw_if_error();
  const auto n_v = p.R.rows();
  const auto n_o = p.J.cols();
  if (traversal.rows() != n_v || traversal.cols() != n_o)
    throw InvalidArgument(fmt::format("naive design: traversal is {}x{}, expected {}x{}", traversal.rows(),
                                      traversal.cols(), n_v, n_o));
  for (Eigen::Index k = 0; k < n_o; ++k) {
    const auto owners = (p.R.col(k).array() != 0.0).count();
    if (owners != 1)
      throw InvalidArgument(fmt::format("naive design: observation point {} belongs to {} budget rows", k + 1, owners));
  }

  DesignResult res;
  res.scheme = Scheme::naive;
  res.xi = Eigen::VectorXd::Zero(n_o);
  for (Eigen::Index j = 0; j < n_v; ++j) {
    double weight = 0.0;
    for (Eigen::Index k = 0; k < n_o; ++k)
      if (p.R(j, k) != 0.0 && traversal(j, k)) weight += p.R(j, k);
    if (weight <= 0.0) continue;
    const double rate = p.b[j] / weight;
    for (Eigen::Index k = 0; k < n_o; ++k)
      if (p.R(j, k) != 0.0 && traversal(j, k)) res.xi[k] = rate;
  }

  DesignProblem relaxed = p;
  std::fill(relaxed.row_is_equality.begin(), relaxed.row_is_equality.end(), false);
  assert_feasible_design(relaxed, res.xi);
  res.theta = (p.J * res.xi).minCoeff();
  res.diagnostics.max_violation = constraint_violation(p, res.xi);
  res.diagnostics.unobservable_flows = report.unobservable_flows();
  return res;
}

CanonicalSocp export_canonical_socp(const DesignProblem& p, const FlowModel& fm) {
  validate_problem(p, fm).throw_if_error();
  const auto n_r = p.J.rows();
  const auto n_o = p.J.cols();
  const auto n = n_o + 1;

  CanonicalSocp out;
  out.f = Eigen::VectorXd::Zero(n);
  out.f[0] = -1.0;
  out.n_hyperbolic = static_cast<std::size_t>(n_r);

  for (Eigen::Index i = 0; i < n_r; ++i) {
    const double inv_s2 = 1.0 / fm.sigma2()[i];
    SocpCone c;
    c.P = Eigen::MatrixXd::Zero(2, n);
    c.P(0, 0) = 2.0;
    c.P(1, 0) = -1.0;
    c.P.row(1).tail(n_o) = p.J.row(i);
    c.q = Eigen::Vector2d(0.0, -inv_s2);
    c.r.resize(n);
    c.r[0] = 1.0;
    c.r.tail(n_o) = p.J.row(i).transpose();
    c.s = inv_s2;
    out.cones.push_back(std::move(c));
  }
  auto linear = [&](const Eigen::RowVectorXd& row, double rhs, double sign) {
    SocpCone c;
    c.P = Eigen::MatrixXd::Zero(1, n);
    c.q = Eigen::VectorXd::Zero(1);
    c.r = Eigen::VectorXd::Zero(n);
    c.r.tail(n_o) = -sign * row.transpose();
    c.s = sign * rhs;
    out.cones.push_back(std::move(c));
  };
  for (Eigen::Index j = 0; j < p.R.rows(); ++j) linear(p.R.row(j), p.b[j], 1.0);
  for (Eigen::Index j = 0; j < p.R.rows(); ++j)
    if (p.row_is_equality[static_cast<std::size_t>(j)]) linear(p.R.row(j), p.b[j], -1.0);

  out.lower.resize(n);
  out.upper.resize(n);
  out.lower[0] = 0.0;
  out.upper[0] = kInf;
  out.lower.tail(n_o) = p.lower;
  out.upper.tail(n_o) = p.upper;
  return out;
}

double cone_residual(const SocpCone& cone, const Eigen::VectorXd& x) {
  return cone.r.dot(x) + cone.s - (cone.P * x + cone.q).norm();
}

}  // namespace flowdesign
