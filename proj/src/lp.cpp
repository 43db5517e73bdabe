#include "flowdesign/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <fmt/format.h>

#include "flowdesign/errors.hpp"

namespace flowdesign::lp {

std::string_view to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_dims(const LinearProgram& lp) {
  const auto n = lp.n_vars();
  auto fail = [](const std::string& what) { throw InvalidArgument("linear program: " + what); };
  if (lp.lower.size() != n || lp.upper.size() != n) fail("bounds must match the number of variables");
  if (lp.A_ub.rows() != lp.b_ub.size()) fail("A_ub rows must match b_ub");
  if (lp.A_eq.rows() != lp.b_eq.size()) fail("A_eq rows must match b_eq");
  if (lp.A_ub.rows() > 0 && lp.A_ub.cols() != n) fail("A_ub columns must match the number of variables");
  if (lp.A_eq.rows() > 0 && lp.A_eq.cols() != n) fail("A_eq columns must match the number of variables");
  for (Eigen::Index j = 0; j < n; ++j)
    if (!std::isfinite(lp.lower[j])) fail(fmt::format("lower bound of variable {} must be finite", j));
}

// Scaled, shifted, sign-normalized equality form  A y (+ slacks) = rhs,
// y >= 0, rhs >= 0, with x = col_scale .* (shift + y).
struct StandardForm {
  RowMatrix A;
  Eigen::VectorXd rhs;
  Eigen::VectorXd cost;  // over all columns; slacks cost 0
  std::vector<Eigen::Index> slack_basis;  // basic slack per row, or -1
  Eigen::Index n_struct = 0;
  Eigen::VectorXd col_scale;
  Eigen::VectorXd shift;
};

StandardForm to_standard_form(const LinearProgram& lp, bool perturb) {
  const Eigen::Index n = lp.n_vars();
  const Eigen::Index m_ub = lp.A_ub.rows();
  const Eigen::Index m_eq = lp.A_eq.rows();

  Eigen::MatrixXd Aub = m_ub > 0 ? lp.A_ub : Eigen::MatrixXd(0, n);
  Eigen::MatrixXd Aeq = m_eq > 0 ? lp.A_eq : Eigen::MatrixXd(0, n);
  Eigen::VectorXd bub = lp.b_ub;
  Eigen::VectorXd beq = lp.b_eq;

  // Row equilibration, then column equilibration.
  auto scale_rows = [](Eigen::MatrixXd& A, Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      const double s = A.row(i).cwiseAbs().maxCoeff();
      if (s > 0.0) {
        A.row(i) /= s;
        b[i] /= s;
      }
    }
  };
  scale_rows(Aub, bub);
  scale_rows(Aeq, beq);

  StandardForm sf;
  sf.n_struct = n;
  sf.col_scale = Eigen::VectorXd::Ones(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = 0.0;
    if (m_ub > 0) s = std::max(s, Aub.col(j).cwiseAbs().maxCoeff());
    if (m_eq > 0) s = std::max(s, Aeq.col(j).cwiseAbs().maxCoeff());
    if (s > 0.0) sf.col_scale[j] = 1.0 / s;
  }
  Aub = Aub * sf.col_scale.asDiagonal();
  Aeq = Aeq * sf.col_scale.asDiagonal();
  sf.shift = lp.lower.cwiseQuotient(sf.col_scale);
  const Eigen::VectorXd up = lp.upper.cwiseQuotient(sf.col_scale);

  std::vector<Eigen::Index> capped;
  for (Eigen::Index j = 0; j < n; ++j)
    if (std::isfinite(up[j])) capped.push_back(j);

  const Eigen::Index m_slack = m_ub + static_cast<Eigen::Index>(capped.size());
  const Eigen::Index m = m_slack + m_eq;
  const Eigen::Index n_cols = n + m_slack;

  sf.A = RowMatrix::Zero(m, n_cols);
  sf.rhs = Eigen::VectorXd::Zero(m);
  sf.slack_basis.assign(static_cast<std::size_t>(m), -1);

  for (Eigen::Index i = 0; i < m_ub; ++i) {
    sf.A.row(i).head(n) = Aub.row(i);
    sf.rhs[i] = bub[i] - Aub.row(i).dot(sf.shift);
  }
  for (std::size_t c = 0; c < capped.size(); ++c) {
    const auto i = m_ub + static_cast<Eigen::Index>(c);
    const auto j = capped[c];
    sf.A(i, j) = 1.0;
    sf.rhs[i] = up[j] - sf.shift[j];
  }
  for (Eigen::Index i = 0; i < m_slack; ++i) sf.A(i, n + i) = 1.0;
  for (Eigen::Index i = 0; i < m_eq; ++i) {
    sf.A.row(m_slack + i).head(n) = Aeq.row(i);
    sf.rhs[m_slack + i] = beq[i] - Aeq.row(i).dot(sf.shift);
  }

  if (perturb && m > 0) {
    // Deterministic, row-distinct relaxation used only after a stall.
    const double base = 1e-10 * std::max(1.0, sf.rhs.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < m; ++i)
      sf.rhs[i] += base * static_cast<double>(i + 1) / static_cast<double>(m);
  }

  for (Eigen::Index i = 0; i < m; ++i) {
    if (sf.rhs[i] < 0.0) {
      sf.A.row(i) *= -1.0;
      sf.rhs[i] = -sf.rhs[i];
    } else if (i < m_slack) {
      sf.slack_basis[static_cast<std::size_t>(i)] = n + i;
    }
  }

  sf.cost = Eigen::VectorXd::Zero(n_cols);
  sf.cost.head(n) = lp.c.cwiseProduct(sf.col_scale);
  return sf;
}

enum class Outcome { optimal, unbounded, stalled };

class Tableau {
 public:
  Tableau(const StandardForm& sf, const Options& opt) : opt_(opt) {
    const Eigen::Index m = sf.A.rows();
    n_cols_ = sf.A.cols();
    Eigen::Index n_art = 0;
    for (auto b : sf.slack_basis)
      if (b < 0) ++n_art;
    T_ = RowMatrix::Zero(m, n_cols_ + n_art);
    T_.leftCols(n_cols_) = sf.A;
    rhs_ = sf.rhs;
    basis_.resize(static_cast<std::size_t>(m));
    Eigen::Index a = n_cols_;
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto sb = sf.slack_basis[static_cast<std::size_t>(i)];
      if (sb >= 0) {
        basis_[static_cast<std::size_t>(i)] = sb;
      } else {
        T_(i, a) = 1.0;
        basis_[static_cast<std::size_t>(i)] = a++;
      }
    }
    rows_ = m;
    pivot_cap_ = 1000 + 50 * (m + T_.cols());
  }

  bool is_artificial(Eigen::Index j) const { return j >= n_cols_; }

  // Phase 1: maximize -sum(artificials). Returns the remaining infeasibility.
  std::optional<double> phase1() {
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(T_.cols());
    for (Eigen::Index j = n_cols_; j < T_.cols(); ++j) cost[j] = -1.0;
    price(cost);
    if (run(n_cols_) == Outcome::stalled) return std::nullopt;
    double infeas = 0.0;
    for (Eigen::Index i = 0; i < rows_; ++i)
      if (is_artificial(basis_[static_cast<std::size_t>(i)])) infeas += rhs_[i];
    return infeas;
  }

  // Pivots remaining zero-level artificials out; drops redundant rows and the
  // artificial columns.
  void drop_artificials() {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (!is_artificial(basis_[static_cast<std::size_t>(i)])) {
        keep.push_back(i);
        continue;
      }
      Eigen::Index best = -1;
      double best_abs = opt_.pivot_tol;
      for (Eigen::Index j = 0; j < n_cols_; ++j) {
        if (std::abs(T_(i, j)) > best_abs) {
          best_abs = std::abs(T_(i, j));
          best = j;
        }
      }
      if (best >= 0) {
        pivot(i, best);
        keep.push_back(i);
      }
    }
    for (Eigen::Index i = 0; i < rows_; ++i) rhs_[i] = std::max(rhs_[i], 0.0);

    RowMatrix T(static_cast<Eigen::Index>(keep.size()), n_cols_);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(keep.size()));
    std::vector<Eigen::Index> basis(keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) {
      T.row(static_cast<Eigen::Index>(r)) = T_.row(keep[r]).head(n_cols_);
      rhs[static_cast<Eigen::Index>(r)] = rhs_[keep[r]];
      basis[r] = basis_[static_cast<std::size_t>(keep[r])];
    }
    T_ = std::move(T);
    rhs_ = std::move(rhs);
    basis_ = std::move(basis);
    kept_rows_ = std::move(keep);
    rows_ = T_.rows();
  }

  Outcome phase2(const Eigen::VectorXd& cost) {
    price(cost);
    return run(n_cols_);
  }

  Eigen::VectorXd primal() const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n_cols_);
    for (Eigen::Index i = 0; i < rows_; ++i) y[basis_[static_cast<std::size_t>(i)]] = rhs_[i];
    return y;
  }

  // Recomputes the basic values from the untouched standard-form data.
  std::optional<Eigen::VectorXd> resolved_primal(const StandardForm& sf) const {
    if (rows_ == 0) return Eigen::VectorXd::Zero(n_cols_);
    Eigen::MatrixXd B(rows_, rows_);
    Eigen::VectorXd r(rows_);
    for (Eigen::Index i = 0; i < rows_; ++i) {
      r[i] = sf.rhs[kept_rows_[static_cast<std::size_t>(i)]];
      for (Eigen::Index c = 0; c < rows_; ++c)
        B(i, c) = sf.A(kept_rows_[static_cast<std::size_t>(i)], basis_[static_cast<std::size_t>(c)]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (!lu.isInvertible()) return std::nullopt;
    const Eigen::VectorXd yb = lu.solve(r);
    if (!yb.allFinite()) return std::nullopt;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n_cols_);
    for (Eigen::Index c = 0; c < rows_; ++c) y[basis_[static_cast<std::size_t>(c)]] = std::max(yb[c], 0.0);
    return y;
  }

  std::int64_t pivots() const { return pivots_; }

 private:
  void price(const Eigen::VectorXd& cost) {
    d_ = cost;
    for (Eigen::Index i = 0; i < rows_; ++i) {
      const double cb = cost[basis_[static_cast<std::size_t>(i)]];
      if (cb != 0.0) d_ -= cb * T_.row(i).transpose();
    }
    opt_tol_ = opt_.pivot_tol * std::max(1.0, cost.cwiseAbs().maxCoeff());
  }

  void pivot(Eigen::Index r, Eigen::Index q) {
    const double p = T_(r, q);
    T_.row(r) /= p;
    rhs_[r] /= p;
    T_(r, q) = 1.0;
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (i == r) continue;
      const double f = T_(i, q);
      if (f == 0.0) continue;
      T_.row(i) -= f * T_.row(r);
      T_(i, q) = 0.0;
      rhs_[i] -= f * rhs_[r];
      if (rhs_[i] < 0.0 && rhs_[i] > -opt_.feasibility_tol) rhs_[i] = 0.0;
    }
    if (d_.size() == T_.cols()) {
      const double f = d_[q];
      d_ -= f * T_.row(r).transpose();
      d_[q] = 0.0;
    }
    basis_[static_cast<std::size_t>(r)] = q;
    ++pivots_;
  }

  // Bland's rule: lowest-index improving column, lowest-index basic variable
  // among tied ratios. Columns >= `n_enter` never enter.
  Outcome run(Eigen::Index n_enter) {
    for (;;) {
      if (pivots_ > pivot_cap_) return Outcome::stalled;
      Eigen::Index q = -1;
      for (Eigen::Index j = 0; j < n_enter; ++j) {
        if (d_[j] > opt_tol_) {
          q = j;
          break;
        }
      }
      if (q < 0) return Outcome::optimal;

      Eigen::Index r = -1;
      double best = kInf;
      for (Eigen::Index i = 0; i < rows_; ++i) {
        const double a = T_(i, q);
        if (a <= opt_.pivot_tol) continue;
        const double ratio = rhs_[i] / a;
        const double tie = 1e-12 * std::max(1.0, std::abs(best));
        if (r < 0 || ratio < best - tie) {
          r = i;
          best = ratio;
        } else if (std::abs(ratio - best) <= tie &&
                   basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(r)]) {
          r = i;
          best = std::min(best, ratio);
        }
      }
      if (r < 0) return Outcome::unbounded;
      pivot(r, q);
    }
  }

  const Options& opt_;
  RowMatrix T_;
  Eigen::VectorXd rhs_;
  Eigen::VectorXd d_;
  std::vector<Eigen::Index> basis_;
  std::vector<Eigen::Index> kept_rows_;
  Eigen::Index rows_ = 0;
  Eigen::Index n_cols_ = 0;
  double opt_tol_ = 0.0;
  std::int64_t pivots_ = 0;
  std::int64_t pivot_cap_ = 0;
};

Eigen::VectorXd to_original(const StandardForm& sf, const Eigen::VectorXd& y) {
  return (sf.shift + y.head(sf.n_struct)).cwiseProduct(sf.col_scale);
}

struct Attempt {
  Status status;
  Eigen::VectorXd x;
  std::int64_t pivots;
  bool stalled;
  double residual = 0.0;  // phase-1 infeasibility, scaled units
};

Attempt attempt(const LinearProgram& lp, const Options& opt, bool perturb, bool phase1_only) {
  const StandardForm sf = to_standard_form(lp, perturb);
  Tableau tab(sf, opt);

  const auto infeas = tab.phase1();
  if (!infeas) return {Status::numerical_failure, {}, tab.pivots(), true};
  const double scale = std::max(1.0, sf.rhs.size() > 0 ? sf.rhs.cwiseAbs().maxCoeff() : 0.0);
  if (*infeas > opt.feasibility_tol * scale) return {Status::infeasible, {}, tab.pivots(), false};
  tab.drop_artificials();

  if (!phase1_only) {
    const Outcome out = tab.phase2(sf.cost);
    if (out == Outcome::stalled) return {Status::numerical_failure, {}, tab.pivots(), true};
    if (out == Outcome::unbounded) return {Status::unbounded, {}, tab.pivots(), false};
  }

  Eigen::VectorXd x = to_original(sf, tab.primal());
  double viol = max_violation(lp, x);
  if (const auto y = tab.resolved_primal(sf)) {
    Eigen::VectorXd x2 = to_original(sf, *y);
    const double viol2 = max_violation(lp, x2);
    if (viol2 <= viol) {
      x = std::move(x2);
      viol = viol2;
    }
  }
  return {Status::optimal, std::move(x), tab.pivots(), false, *infeas};
}

// A program infeasible by less than the phase-1 tolerance can still yield a
// witness that fails the re-check; with a nonzero residual that is reported
// as infeasible rather than as a solver failure.
Status recheck(const Attempt& a, double violation, const Options& opt) {
  if (violation <= opt.check_tol) return Status::optimal;
  return a.residual > 0.0 ? Status::infeasible : Status::numerical_failure;
}

}  // namespace

double max_violation(const LinearProgram& lp, const Eigen::VectorXd& x) {
  double worst = 0.0;
  if (lp.A_ub.rows() > 0) worst = std::max(worst, (lp.A_ub * x - lp.b_ub).maxCoeff());
  if (lp.A_eq.rows() > 0) worst = std::max(worst, (lp.A_eq * x - lp.b_eq).cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    worst = std::max(worst, lp.lower[j] - x[j]);
    if (std::isfinite(lp.upper[j])) worst = std::max(worst, x[j] - lp.upper[j]);
  }
  return worst;
}

Solution solve(const LinearProgram& lp, const Options& opt) {
  check_dims(lp);
  Solution sol;
  Attempt a = attempt(lp, opt, false, false);
  if (a.stalled && opt.perturb_on_stall) {
    const auto first = a.pivots;
    a = attempt(lp, opt, true, false);
    a.pivots += first;
    sol.perturbed = true;
  }
  sol.pivots = a.pivots;
  sol.status = a.status;
  if (a.status != Status::optimal) return sol;

  sol.x = std::move(a.x);
  sol.max_violation = max_violation(lp, sol.x);
  sol.objective = lp.c.dot(sol.x);
  sol.status = recheck(a, sol.max_violation, opt);
  return sol;
}

Feasibility check_feasible(const Eigen::MatrixXd& A_ub, const Eigen::VectorXd& b_ub,
                           const Eigen::MatrixXd& A_eq, const Eigen::VectorXd& b_eq,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           const Options& opt) {
  LinearProgram lp{Eigen::VectorXd::Zero(lower.size()), A_ub, b_ub, A_eq, b_eq, lower, upper};
  check_dims(lp);
  Attempt a = attempt(lp, opt, false, true);
  if (a.stalled && opt.perturb_on_stall) a = attempt(lp, opt, true, true);
  Feasibility f;
  f.status = a.status;
  f.pivots = a.pivots;
  if (a.status == Status::optimal) {
    f.status = recheck(a, max_violation(lp, a.x), opt);
    if (f.status == Status::optimal) f.witness = std::move(a.x);
  }
  return f;
}

}  // namespace flowdesign::lp
