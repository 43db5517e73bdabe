#include <doctest.h>

#include <functional>
#include <limits>
#include <optional>
#include <random>

#include "flowdesign/lp.hpp"

using namespace flowdesign;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

lp::LinearProgram make(VectorXd c, MatrixXd A, VectorXd b, VectorXd lo, VectorXd hi) {
  lp::LinearProgram p;
  p.c = std::move(c);
  p.A_ub = std::move(A);
  p.b_ub = std::move(b);
  p.A_eq = MatrixXd(0, p.c.size());
  p.b_eq = VectorXd(0);
  p.lower = std::move(lo);
  p.upper = std::move(hi);
  return p;
}

// Brute force over all vertices: every choice of n tight constraints among the
// inequality rows and bounds (finite boxes only).
std::optional<double> vertex_oracle(const lp::LinearProgram& p) {
  const Eigen::Index n = p.c.size();
  MatrixXd G(p.A_ub.rows() + 2 * n, n);
  VectorXd h(G.rows());
  G.topRows(p.A_ub.rows()) = p.A_ub;
  h.head(p.A_ub.rows()) = p.b_ub;
  for (Eigen::Index j = 0; j < n; ++j) {
    G.row(p.A_ub.rows() + 2 * j).setZero();
    G(p.A_ub.rows() + 2 * j, j) = 1.0;
    h[p.A_ub.rows() + 2 * j] = p.upper[j];
    G.row(p.A_ub.rows() + 2 * j + 1).setZero();
    G(p.A_ub.rows() + 2 * j + 1, j) = -1.0;
    h[p.A_ub.rows() + 2 * j + 1] = -p.lower[j];
  }
  const auto rows = G.rows();
  std::optional<double> best;
  std::vector<int> pick(static_cast<std::size_t>(n));
  std::function<void(Eigen::Index, Eigen::Index)> rec = [&](Eigen::Index start, Eigen::Index depth) {
    if (depth == n) {
      MatrixXd A(n, n);
      VectorXd r(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        A.row(i) = G.row(pick[static_cast<std::size_t>(i)]);
        r[i] = h[pick[static_cast<std::size_t>(i)]];
      }
      Eigen::FullPivLU<MatrixXd> lu(A);
      if (lu.rank() < n) return;
      const VectorXd x = lu.solve(r);
      if (((G * x - h).array() > 1e-9).any()) return;
      const double v = p.c.dot(x);
      if (!best || v > *best) best = v;
      return;
    }
    for (Eigen::Index i = start; i < rows; ++i) {
      pick[static_cast<std::size_t>(depth)] = static_cast<int>(i);
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST_CASE("classical worked example") {
  // x = (theta, xi1, xi2)
  MatrixXd A(3, 3);
  A << 1, -40, -10, 1, -10, -40, 0, 1, 1;
  const auto p = make((VectorXd(3) << 1, 0, 0).finished(), A, (VectorXd(3) << 0, 0, 1).finished(),
                      VectorXd::Zero(3), (VectorXd(3) << kInf, kInf, kInf).finished());
  const auto s = lp::solve(p);
  REQUIRE(s.status == lp::Status::optimal);
  CHECK(s.objective == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(s.x[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.x[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.max_violation <= 1e-8);
  CHECK_FALSE(s.perturbed);
}

TEST_CASE("degenerate and infeasible single-variable programs") {
  SUBCASE("x <= 0, x >= 0") {
    const auto s = lp::solve(make(VectorXd::Ones(1), MatrixXd::Ones(1, 1), VectorXd::Zero(1), VectorXd::Zero(1),
                                  VectorXd::Constant(1, kInf)));
    REQUIRE(s.status == lp::Status::optimal);
    CHECK(s.x[0] == doctest::Approx(0.0));
  }
  SUBCASE("x >= 1, x <= 0") {
    const auto s = lp::solve(make(VectorXd::Ones(1), MatrixXd::Ones(1, 1), VectorXd::Zero(1), VectorXd::Ones(1),
                                  VectorXd::Constant(1, kInf)));
    CHECK(s.status == lp::Status::infeasible);
  }
  SUBCASE("unbounded ray") {
    const auto s = lp::solve(make(VectorXd::Ones(2), (MatrixXd(1, 2) << 1, -1).finished(), VectorXd::Zero(1),
                                  VectorXd::Zero(2), VectorXd::Constant(2, kInf)));
    CHECK(s.status == lp::Status::unbounded);
  }
  CHECK(lp::to_string(lp::Status::infeasible) == "infeasible");
}

TEST_CASE("equality constraints and shifted bounds") {
  lp::LinearProgram p = make((VectorXd(2) << 1, 2).finished(), MatrixXd(0, 2), VectorXd(0),
                             (VectorXd(2) << -1, 0.5).finished(), (VectorXd(2) << 3, 2).finished());
  p.A_eq = (MatrixXd(1, 2) << 1, 1).finished();
  p.b_eq = VectorXd::Constant(1, 2.0);
  const auto s = lp::solve(p);
  REQUIRE(s.status == lp::Status::optimal);
  CHECK(s.x[0] == doctest::Approx(0.0));
  CHECK(s.x[1] == doctest::Approx(2.0));
  CHECK(s.objective == doctest::Approx(4.0));
}

TEST_CASE("check_feasible examples") {
  const MatrixXd none(0, 2);
  SUBCASE("budget with two information floors") {
    MatrixXd A(3, 2);
    A << 1, 1, -40, -10, -10, -40;
    const auto f = lp::check_feasible(A, (VectorXd(3) << 1, -20, -20).finished(), none, VectorXd(0),
                                      VectorXd::Zero(2), VectorXd::Constant(2, kInf));
    REQUIRE(f.feasible());
    CHECK(((A * f.witness - (VectorXd(3) << 1, -20, -20).finished()).array() <= 1e-9).all());
    CHECK((f.witness.array() >= -1e-12).all());
  }
  SUBCASE("budget too small") {
    MatrixXd A(2, 1);
    A << 1, -40;
    const auto f = lp::check_feasible(A, (VectorXd(2) << 0.01, -1).finished(), MatrixXd(0, 1), VectorXd(0),
                                      VectorXd::Zero(1), VectorXd::Constant(1, kInf));
    CHECK(f.status == lp::Status::infeasible);
  }
  SUBCASE("box only") {
    const auto f = lp::check_feasible(none, VectorXd(0), none, VectorXd(0), VectorXd::Zero(2), VectorXd::Ones(2));
    REQUIRE(f.feasible());
    CHECK((f.witness.array() >= 0).all());
    CHECK((f.witness.array() <= 1).all());
  }
}

TEST_CASE("random small programs match vertex enumeration") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> coef(-5, 5), dim(1, 6), nrows(1, 5), bnd(0, 4);
  int solved = 0, infeasible = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim(rng), m = nrows(rng);
    MatrixXd A(m, n);
    VectorXd b(m), c(n), lo(n), hi(n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = coef(rng) / 2.0;
      b[i] = coef(rng);
    }
    for (int j = 0; j < n; ++j) {
      c[j] = coef(rng);
      lo[j] = -bnd(rng) / 2.0;
      hi[j] = lo[j] + 1 + bnd(rng);
    }
    const auto p = make(c, A, b, lo, hi);
    const auto oracle = vertex_oracle(p);
    const auto s = lp::solve(p);
    CAPTURE(trial);
    if (!oracle) {
      CHECK(s.status == lp::Status::infeasible);
      ++infeasible;
      continue;
    }
    REQUIRE(s.status == lp::Status::optimal);
    CHECK(s.objective == doctest::Approx(*oracle).epsilon(1e-7).scale(1.0));
    CHECK(lp::max_violation(p, s.x) <= 1e-8);
    ++solved;
  }
  CHECK(solved > 50);
  CHECK(infeasible > 0);
}

TEST_CASE("identical input gives identical output") {
  MatrixXd A(3, 3);
  A << 1, -3, -1, 1, -1, -2, 0, 1, 1;
  const auto p = make((VectorXd(3) << 1, 0, 0).finished(), A, (VectorXd(3) << 0, 0, 1).finished(), VectorXd::Zero(3),
                      VectorXd::Constant(3, kInf));
  const auto a = lp::solve(p), b = lp::solve(p);
  CHECK(a.x == b.x);
  CHECK(a.pivots == b.pivots);
}
