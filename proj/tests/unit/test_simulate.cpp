#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "flowdesign/errors.hpp"
#include "flowdesign/filtering.hpp"
#include "flowdesign/simulate.hpp"

using namespace flowdesign;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Line a-b-c-d with flows a->d, b->d, a->b.
MeasurementModel line_model(double mu) {
  TopologySpec t;
  t.nodes = {"a", "b", "c", "d"};
  for (std::size_t i = 0; i + 1 < 4; ++i) {
    t.edges.push_back({i, i + 1});
    t.edges.push_back({i + 1, i});
  }
  t.budgets.assign(4, 0.01);
  t.flows = {{"a", "d", 1e6, mu, {}}, {"b", "d", 1e6, mu, {}}, {"a", "b", 1e6, mu, {}}};
  return build_measurement_model(t, route_flows(t));
}

// Single flow over two observation points.
MeasurementModel two_point_model() {
  TopologySpec t;
  t.nodes = {"a", "b", "c"};
  t.edges = {{0, 1}, {1, 0}, {1, 2}, {2, 1}};
  t.budgets.assign(3, 0.01);
  t.flows = {{"a", "c", 1.0, 100.0, {}}};
  return build_measurement_model(t, route_flows(t));
}

VectorXd dense_gls(const MeasurementModel& mm, const VectorXd& xi, const VectorXd& mu, const VectorXd& z) {
  VectorXd w(z.size());
  for (std::size_t g = 0; g < mm.n_measurements(); ++g)
    w[static_cast<Eigen::Index>(g)] = xi[static_cast<Eigen::Index>(mm.meas_point[g])] /
                                      mu[static_cast<Eigen::Index>(mm.meas_flow[g])];
  const MatrixXd A = mm.L.transpose() * w.asDiagonal() * mm.L;
  return A.ldlt().solve(mm.L.transpose() * w.asDiagonal() * z);
}

}  // namespace

TEST_CASE("random-walk traces") {
  const FlowModel fm(VectorXd::Constant(2, 1e-12), VectorXd::Constant(2, 50.0));
  const Trace flat = gen_random_walk_trace(fm, 10, fm.mu(), 1);
  CHECK(flat.periods() == 10);
  CHECK((flat.x.array() == 50.0).all());

  const FlowModel noisy(VectorXd::Constant(2, 400.0), VectorXd::Constant(2, 1e6));
  const Trace a = gen_random_walk_trace(noisy, 50, noisy.mu(), 9), b = gen_random_walk_trace(noisy, 50, noisy.mu(), 9);
  CHECK(a.x == b.x);
  CHECK(a.x != gen_random_walk_trace(noisy, 50, noisy.mu(), 10).x);
  CHECK((a.x.array() == a.x.array().round()).all());

  const FlowModel low(VectorXd::Constant(1, 1e4), VectorXd::Constant(1, 3.0));
  CHECK(gen_random_walk_trace(low, 500, low.mu(), 2, 5.0).x.minCoeff() >= 5.0);

  CHECK_THROWS_AS(gen_random_walk_trace(fm, 0, fm.mu(), 1), InvalidArgument);
  CHECK_THROWS_AS(gen_random_walk_trace(fm, 5, VectorXd::Zero(2), 1), InvalidArgument);
}

TEST_CASE("increment variance of a long walk") {
  const double s2 = 100.0;
  const FlowModel fm(VectorXd::Constant(1, s2), VectorXd::Constant(1, 1e9));
  const std::size_t T = 100000;
  const Trace tr = gen_random_walk_trace(fm, T, fm.mu(), 77);
  double sum = 0.0, sq = 0.0;
  double prev = fm.mu()[0];
  for (Eigen::Index t = 0; t < tr.x.rows(); ++t) {
    const double d = tr.x(t, 0) - prev;
    sum += d;
    sq += d * d;
    prev = tr.x(t, 0);
  }
  const double n = static_cast<double>(T);
  const double var = sq / n - (sum / n) * (sum / n);
  // Rounding to integers adds 1/12 to the increment variance.
  const double expected = s2 + 1.0 / 12.0;
  CHECK(std::abs(var - expected) <= 3.0 * expected * std::sqrt(2.0 / n));
}

TEST_CASE("trace CSV round trip and errors") {
  const auto dir = std::filesystem::temp_directory_path() / "flowdesign_trace_test";
  std::filesystem::create_directories(dir);
  const FlowModel fm(VectorXd::Constant(3, 25.0), VectorXd::Constant(3, 1000.0));
  const Trace tr = gen_random_walk_trace(fm, 20, fm.mu(), 4);
  write_trace_csv(dir / "trace.csv", tr);
  const Trace back = read_trace_csv(dir / "trace.csv");
  CHECK(back.x == tr.x);
  CHECK(back.source == TraceSource::file_replay);

  std::ofstream(dir / "bad.csv") << "t,flow_1,flow_3\n1,2,3\n";
  CHECK_THROWS_AS(read_trace_csv(dir / "bad.csv"), FormatError);
  std::ofstream(dir / "neg.csv") << "t,flow_1\n1,-2\n";
  CHECK_THROWS_AS(read_trace_csv(dir / "neg.csv"), FormatError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("packet sampling") {
  const auto mm = two_point_model();
  const VectorXd x = VectorXd::Constant(1, 1234.0);

  const auto full = sample_packets(x, mm, VectorXd::Ones(4), 1);
  for (std::size_t g = 0; g < mm.n_measurements(); ++g) {
    CHECK(full.present[g]);
    CHECK(full.sampled[g] == 1234);
    CHECK(full.z[static_cast<Eigen::Index>(g)] == 1234.0);
  }

  const auto none = sample_packets(x, mm, VectorXd::Zero(4), 1);
  for (std::size_t g = 0; g < mm.n_measurements(); ++g) {
    CHECK_FALSE(none.present[g]);
    CHECK(std::isnan(none.z[static_cast<Eigen::Index>(g)]));
  }

  CHECK_THROWS_AS(sample_packets(x, mm, VectorXd::Constant(4, 1.5), 1), InvalidArgument);
  CHECK_THROWS_AS(sample_packets(x, mm, VectorXd::Constant(4, -0.1), 1), InvalidArgument);

  const auto part = sample_packets(x, mm, VectorXd::Constant(4, 0.3), 3);
  for (std::size_t g = 0; g < mm.n_measurements(); ++g) {
    CHECK(part.sampled[g] >= 0);
    CHECK(part.sampled[g] <= 1234);
  }
}

TEST_CASE("binomial estimator moments") {
  const auto mm = two_point_model();
  const double X = 1e4, xi = 0.01;
  const int reps = 10000;
  Rng rng = make_stream(123, 0);
  double sum = 0.0, sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    const auto raw = sample_packets(VectorXd::Constant(1, X), mm, VectorXd::Constant(4, xi), rng);
    const double z = raw.z[0];
    sum += z;
    sq += z * z;
  }
  const double mean = sum / reps, var = sq / reps - mean * mean;
  const double var_exact = X * (1 - xi) / xi;
  CHECK(std::abs(mean - X) <= 3.0 * std::sqrt(var_exact / reps));
  CHECK(std::abs(var - var_exact) <= 3.0 * var_exact * std::sqrt(2.0 / reps));
}

TEST_CASE("GLS fusion") {
  const auto mm = two_point_model();
  const VectorXd mu = VectorXd::Constant(1, 100.0);
  RawMeasurements raw;
  raw.present = {true, true};
  raw.sampled = {0, 0};
  raw.z = (VectorXd(2) << 90.0, 120.0).finished();

  SUBCASE("equal rates") {
    const VectorXd xi = VectorXd::Constant(4, 0.01);
    const auto f = fuse_gls(raw, mm, xi, mu);
    CHECK(f.y[0] == doctest::Approx(105.0));
    CHECK(f.m[0] == doctest::Approx(2e-4));
  }
  SUBCASE("unequal rates weight by inverse variance") {
    VectorXd xi = VectorXd::Zero(4);
    xi[static_cast<Eigen::Index>(mm.meas_point[0])] = 0.02;
    xi[static_cast<Eigen::Index>(mm.meas_point[1])] = 0.01;
    const auto f = fuse_gls(raw, mm, xi, mu);
    CHECK(f.y[0] == doctest::Approx((2 * 90.0 + 120.0) / 3.0));
    CHECK(f.y[0] == doctest::Approx(dense_gls(mm, xi, mu, raw.z)[0]).epsilon(1e-12));
  }
  SUBCASE("nothing sampled") {
    raw.present = {false, false};
    const auto f = fuse_gls(raw, mm, VectorXd::Zero(4), mu);
    CHECK(f.m[0] == 0.0);
    CHECK(std::isnan(f.y[0]));
  }
  CHECK_THROWS_AS(fuse_gls(raw, mm, VectorXd::Constant(4, 0.01), VectorXd::Zero(1)), InvalidArgument);
}

TEST_CASE("fusion agrees with the dense GLS formula and tracks J xi") {
  const auto mm = line_model(1e5);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd xi = VectorXd::NullaryExpr(static_cast<Eigen::Index>(mm.n_points), [&](Eigen::Index) { return u(rng); });
    const VectorXd x = VectorXd::Constant(3, 1e5);
    const auto raw = sample_packets(x, mm, xi, static_cast<std::uint64_t>(trial));
    const auto f = fuse_gls(raw, mm, xi, mm.mu);
    const VectorXd ref = dense_gls(mm, xi, mm.mu, raw.z);
    CHECK((f.y - ref).cwiseAbs().maxCoeff() <= 1e-10 * ref.cwiseAbs().maxCoeff());
    CHECK((f.m - effective_information(mm, xi)).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("closed loop with constant rates reaches the steady-state MSE") {
  const double mu = 1e6;
  const auto mm = line_model(mu);
  const FlowModel fm = mm.flow_model();
  const VectorXd xi = VectorXd::Constant(static_cast<Eigen::Index>(mm.n_points), 0.02);
  const VectorXd m = effective_information(mm, xi);
  const VectorXd expected = steady_state_info(m, fm.sigma2()).cwiseInverse();

  const int reps = 200;
  const std::size_t T = 200, from = 100;
  VectorXd acc = VectorXd::Zero(3);
  for (int r = 0; r < reps; ++r) {
    const Trace tr = gen_random_walk_trace(fm, T, fm.mu(), 1000 + static_cast<std::uint64_t>(r));
    Rng rng = make_stream(55, static_cast<std::uint64_t>(r));
    FilterState st = FilterState::diffuse(fm.mu());
    for (std::size_t t = 0; t < T; ++t) {
      const VectorXd x = tr.x.row(static_cast<Eigen::Index>(t)).transpose();
      const auto f = fuse_gls(sample_packets(x, mm, xi, rng), mm, xi, fm.mu());
      st = predict_update(st, fm, f.m, f.y);
      if (t >= from) acc += (st.mean - x).array().square().matrix();
    }
  }
  acc /= static_cast<double>(reps * (T - from));
  for (Eigen::Index i = 0; i < 3; ++i) {
    CAPTURE(i);
    CHECK(acc[i] == doctest::Approx(expected[i]).epsilon(0.2));
  }
}

TEST_CASE("streams are reproducible and distinct") {
  Rng a = make_stream(1, 0), b = make_stream(1, 0), c = make_stream(1, 1), d = make_stream(2, 0);
  const auto va = a();
  CHECK(va == b());
  CHECK(va != c());
  CHECK(va != d());
}
