#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "flowdesign/errors.hpp"
#include "flowdesign/network.hpp"

using namespace flowdesign;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

TopologySpec undirected(std::vector<std::string> nodes, const std::vector<std::pair<int, int>>& links) {
  TopologySpec t;
  t.nodes = std::move(nodes);
  for (auto [u, v] : links) {
    t.edges.push_back({static_cast<std::size_t>(u), static_cast<std::size_t>(v)});
    t.edges.push_back({static_cast<std::size_t>(v), static_cast<std::size_t>(u)});
  }
  t.budgets.assign(t.nodes.size(), 0.01);
  return t;
}

std::vector<std::string> path_nodes(const TopologySpec& t, const Path& p) {
  std::vector<std::string> out;
  if (p.empty()) return out;
  out.push_back(t.nodes[t.edges[p.front()].from]);
  for (auto e : p) out.push_back(t.nodes[t.edges[e].to]);
  return out;
}

// Dense GLS oracle: L' D^-1 L with D^-1 = diag(xi_k(i) / mu_l(i)) built per measurement.
MatrixXd dense_precision(const MeasurementModel& mm, const VectorXd& xi) {
  VectorXd w(static_cast<Eigen::Index>(mm.n_measurements()));
  for (std::size_t g = 0; g < mm.n_measurements(); ++g)
    w[static_cast<Eigen::Index>(g)] = xi[static_cast<Eigen::Index>(mm.meas_point[g])] /
                                      mm.mu[static_cast<Eigen::Index>(mm.meas_flow[g])];
  return mm.L.transpose() * w.asDiagonal() * mm.L;
}

MeasurementModel random_model(std::uint64_t seed) {
  SynthParams sp;
  sp.nodes = 6 + seed % 5;
  sp.links = sp.nodes + 2;
  sp.top_fraction = 0.4;
  const TopologySpec t = synth_topology(sp, seed);
  return build_measurement_model(t, route_flows(t));
}

}  // namespace

TEST_CASE("routing") {
  SUBCASE("line") {
    auto t = undirected({"a", "b", "c"}, {{0, 1}, {1, 2}});
    t.flows.push_back({"a", "c", 1.0, 10.0, {}});
    const auto paths = route_flows(t);
    CHECK(path_nodes(t, paths[0]) == std::vector<std::string>{"a", "b", "c"});
    CHECK(paths[0].size() == 2);
  }
  SUBCASE("square tie-break") {
    auto t = undirected({"a", "b", "c", "d"}, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
    t.flows.push_back({"a", "c", 1.0, 10.0, {}});
    t.flows.push_back({"c", "a", 1.0, 10.0, {}});
    const auto paths = route_flows(t);
    CHECK(path_nodes(t, paths[0]) == std::vector<std::string>{"a", "b", "c"});
    CHECK(path_nodes(t, paths[1]) == std::vector<std::string>{"c", "b", "a"});
  }
  SUBCASE("explicit path") {
    auto t = undirected({"a", "b", "c", "d"}, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
    t.flows.push_back({"a", "c", 1.0, 10.0, {"a", "d", "c"}});
    CHECK(path_nodes(t, route_flows(t)[0]) == std::vector<std::string>{"a", "d", "c"});
    t.flows[0].path = {"a", "c"};
    CHECK_THROWS_AS(route_flows(t), InvalidArgument);
  }
  SUBCASE("disconnected pair") {
    auto t = undirected({"a", "b", "c"}, {{0, 1}});
    t.flows.push_back({"a", "c", 1.0, 10.0, {}});
    CHECK_THROWS_AS(route_flows(t), InvalidArgument);
  }
}

TEST_CASE("measurement model assembly") {
  SUBCASE("one flow across two routers") {
    auto t = undirected({"a", "b", "c"}, {{0, 1}, {1, 2}});
    t.budgets = {0.1, 0.2, 0.3};
    t.flows.push_back({"a", "c", 1.0, 100.0, {}});
    const auto mm = build_measurement_model(t, route_flows(t));
    CHECK(mm.n_measurements() == 2);
    CHECK(mm.L == MatrixXd::Ones(2, 1));
    // edges: a->b (0), b->a (1), b->c (2), c->b (3)
    CHECK(mm.J(0, 0) == doctest::Approx(0.01));
    CHECK(mm.J(0, 2) == doctest::Approx(0.01));
    CHECK(mm.J.row(0).sum() == doctest::Approx(0.02));
    CHECK(mm.R(1, 0) == 1.0);
    CHECK(mm.R(2, 2) == 1.0);
    CHECK(mm.R.colwise().sum() == MatrixXd::Ones(1, 4));
    CHECK(mm.b == (VectorXd(3) << 0.1, 0.2, 0.3).finished());

    const VectorXd xi = (VectorXd(4) << 0.01, 0, 0.01, 0).finished();
    CHECK(effective_information(mm, xi)[0] == doctest::Approx(2e-4));
    CHECK(dense_precision(mm, xi)(0, 0) == doctest::Approx(2e-4));
    CHECK(effective_information(mm, VectorXd::Zero(4))[0] == 0.0);
  }
  SUBCASE("two flows sharing a point") {
    auto t = undirected({"a", "b", "c"}, {{0, 1}, {1, 2}});
    t.flows.push_back({"a", "b", 1.0, 4.0, {}});
    t.flows.push_back({"a", "c", 1.0, 5.0, {}});
    const auto mm = build_measurement_model(t, route_flows(t));
    const auto psi = psi_diagonals(mm, mm.mu);
    int nonzero = 0;
    for (Eigen::Index g = 0; g < psi[0].size(); ++g) nonzero += psi[0][g] != 0.0;
    CHECK(nonzero == 2);
    CHECK(mm.J(0, 0) == doctest::Approx(0.25));
    CHECK(mm.J(1, 0) == doctest::Approx(0.2));
  }
  SUBCASE("single-node flow is unobservable") {
    auto t = undirected({"a", "b"}, {{0, 1}});
    t.flows.push_back({"a", "a", 1.0, 4.0, {}});
    const auto mm = build_measurement_model(t, route_flows(t));
    CHECK(mm.J.row(0).isZero());
    const auto rep = validate_problem(make_design_problem(mm, ConstraintMode::inequality), mm.flow_model());
    CHECK(rep.unobservable_flows().size() == 1);
  }
}

TEST_CASE("structural properties on random models") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    const auto mm = random_model(seed);
    CAPTURE(seed);
    const VectorXd xi = VectorXd::NullaryExpr(static_cast<Eigen::Index>(mm.n_points), [&](Eigen::Index) { return u(rng); });
    const VectorXd xi2 = VectorXd::NullaryExpr(xi.size(), [&](Eigen::Index) { return u(rng); });

    const MatrixXd prec = dense_precision(mm, xi);
    const MatrixXd off = prec - MatrixXd(prec.diagonal().asDiagonal());
    CHECK(off.cwiseAbs().maxCoeff() < 1e-14);
    CHECK((prec.diagonal() - effective_information(mm, xi)).cwiseAbs().maxCoeff() <= 1e-12 * prec.diagonal().maxCoeff());
    CHECK((gls_precision_dense(mm, xi, mm.mu) - prec).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((information_map(mm, mm.mu) - mm.J).cwiseAbs().maxCoeff() <= 1e-18);

    const VectorXd sum = effective_information(mm, xi + xi2);
    CHECK((sum - effective_information(mm, xi) - effective_information(mm, xi2)).cwiseAbs().maxCoeff() <= 1e-12 * sum.maxCoeff());

    std::size_t routed = 0;
    for (const auto& p : mm.paths) routed += p.size();
    CHECK(mm.n_measurements() == routed);

    for (std::size_t k = 0; k < mm.n_points; ++k)
      for (std::size_t i = 0; i < mm.n_flows; ++i) {
        const bool on_path = std::find(mm.paths[i].begin(), mm.paths[i].end(), k) != mm.paths[i].end();
        CHECK((mm.J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) > 0.0) == on_path);
      }
  }
}

TEST_CASE("equality mode pins untraversed points") {
  const auto mm = random_model(4);
  const auto p = make_design_problem(mm, ConstraintMode::equality_with_zeroing);
  const auto traversed = mm.traversed_points();
  for (std::size_t k = 0; k < mm.n_points; ++k)
    CHECK((p.upper[static_cast<Eigen::Index>(k)] == 0.0) == !traversed[k]);
  bool any_eq = false;
  for (bool e : p.row_is_equality) any_eq = any_eq || e;
  CHECK(any_eq);
  CHECK(parse_constraint_mode("equality") == ConstraintMode::equality_with_zeroing);
  CHECK(parse_constraint_mode(to_string(ConstraintMode::inequality)) == ConstraintMode::inequality);
}

TEST_CASE("synthetic topologies") {
  SynthParams sp;
  sp.kind = TopologyKind::line;
  sp.nodes = 3;
  CHECK(synth_topology(sp, 1).edges.size() == 4);
  sp.kind = TopologyKind::grid;
  CHECK(synth_topology(sp, 1).edges.size() == 8);
  sp.kind = TopologyKind::star;
  sp.nodes = 5;
  CHECK(synth_topology(sp, 1).edges.size() == 8);

  sp = SynthParams{};
  const auto a = synth_topology(sp, 1), b = synth_topology(sp, 1);
  CHECK(a.nodes.size() == 23);
  CHECK(a.edges.size() == 74);
  CHECK(a.nodes == b.nodes);
  REQUIRE(a.flows.size() == b.flows.size());
  for (std::size_t i = 0; i < a.flows.size(); ++i) {
    CHECK(a.flows[i].origin == b.flows[i].origin);
    CHECK(a.flows[i].mu == b.flows[i].mu);
  }
  for (std::size_t e = 0; e < a.edges.size(); ++e) CHECK(a.edges[e].to == b.edges[e].to);
  CHECK_NOTHROW(route_flows(a));
}

TEST_CASE("topology bundle round trip and errors") {
  const fs::path dir = fs::temp_directory_path() / "flowdesign_test_bundle";
  fs::remove_all(dir);
  SynthParams sp;
  sp.nodes = 7;
  sp.links = 9;
  const auto t = synth_topology(sp, 3);
  write_topology_bundle(dir, t);
  const auto back = read_topology_bundle(dir);
  CHECK(back.nodes == t.nodes);
  CHECK(back.edges.size() == t.edges.size());
  REQUIRE(back.flows.size() == t.flows.size());
  for (std::size_t i = 0; i < t.flows.size(); ++i) {
    CHECK(back.flows[i].sigma2 == t.flows[i].sigma2);
    CHECK(back.flows[i].mu == t.flows[i].mu);
  }
  CHECK(back.budgets == t.budgets);

  std::ofstream(dir / "budgets.csv") << "router,b\nn1,0.01\n";
  try {
    read_topology_bundle(dir);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.field().find("budgets.csv") != std::string::npos);
  }
  std::ofstream(dir / "flows.csv") << "origin,destination,sigma2\nn1,n2,1\n";
  CHECK_THROWS_AS(read_topology_bundle(dir), FormatError);
  fs::remove_all(dir);
}
