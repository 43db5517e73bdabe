#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flowdesign/design.hpp"
#include "flowdesign/model.hpp"

namespace flowdesign {

// Directed edge between node indices. Each edge is one observation point: the
// incoming interface of its head router `to`.
struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
};

struct FlowSpec {
  std::string origin;
  std::string destination;
  double sigma2 = 0.0;
  double mu = 0.0;
  std::vector<std::string> path;  // optional explicit node sequence
};

struct TopologySpec {
  std::vector<std::string> nodes;
  std::vector<Edge> edges;
  std::vector<FlowSpec> flows;
  std::vector<double> budgets;  // one per node

  std::size_t node_index(const std::string& id) const;  // throws if unknown
  void validate() const;
  FlowModel flow_model() const;
};

// Edge indices along a flow's route, origin first.
using Path = std::vector<std::size_t>;

// Hop-count shortest path per flow. Ties go to the lexicographically smallest
// node-id sequence. Explicit paths are checked and used as given.
std::vector<Path> route_flows(const TopologySpec& t);

enum class ConstraintMode { inequality, equality_with_zeroing };

std::string_view to_string(ConstraintMode m);
ConstraintMode parse_constraint_mode(std::string_view name);

struct MeasurementModel {
  std::size_t n_flows = 0;
  std::size_t n_points = 0;
  std::size_t n_routers = 0;
  std::vector<std::size_t> meas_point;  // k(i) per measurement
  std::vector<std::size_t> meas_flow;   // l(i) per measurement
  Eigen::MatrixXd L;                    // n_g x n_r
  std::vector<Eigen::VectorXd> psi;     // n_o diagonals of length n_g
  Eigen::MatrixXd J;                    // n_r x n_o
  Eigen::MatrixXd R;                    // n_v x n_o
  Eigen::VectorXd b;
  TraversalMatrix traversal;            // router j, point k carries a flow
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma2;
  std::vector<Path> paths;

  std::size_t n_measurements() const { return meas_point.size(); }
  FlowModel flow_model() const { return FlowModel(sigma2, mu); }
  // Observation points that carry at least one flow.
  std::vector<bool> traversed_points() const;
};

MeasurementModel build_measurement_model(const TopologySpec& t, const std::vector<Path>& paths);

// Psi_k diagonals for a given vector of per-flow means.
std::vector<Eigen::VectorXd> psi_diagonals(const MeasurementModel& mm, const Eigen::VectorXd& mu);

// [J]_{ik} = L_{.,i}' Psi_k L_{.,i}, with Psi built from `mu`.
Eigen::MatrixXd information_map(const MeasurementModel& mm, const Eigen::VectorXd& mu);

// m = J xi.
InformationVector effective_information(const MeasurementModel& mm, const DesignVector& xi);

// L' D^-1 L with D^-1 = sum_k xi_k Psi_k, assembled densely (no use of J).
Eigen::MatrixXd gls_precision_dense(const MeasurementModel& mm, const DesignVector& xi,
                                    const Eigen::VectorXd& mu);

// Design problem over the router budgets. In equality_with_zeroing mode every
// router that carries a flow must spend its whole budget and untraversed
// interfaces are pinned to 0. `J` overrides the stored map (plug-in means).
DesignProblem make_design_problem(const MeasurementModel& mm, ConstraintMode mode);
DesignProblem make_design_problem(const MeasurementModel& mm, ConstraintMode mode, const Eigen::MatrixXd& J);

enum class TopologyKind { line, star, grid, random };
TopologyKind parse_topology_kind(std::string_view name);

struct SynthParams {
  TopologyKind kind = TopologyKind::random;
  std::size_t nodes = 23;     // line, star, random
  std::size_t links = 37;     // random only
  std::size_t rows = 2;       // grid only
  std::size_t cols = 2;
  double top_fraction = 0.25;  // share of origin-destination pairs kept, by mean volume
  double budget = 0.01;
  double mu_log_mean = 11.5;   // log packets per period
  double mu_log_sd = 1.0;
  double innovation_cv = 0.05;  // sigma_i = cv * mu_i
};

// Reproducible synthetic topology: bidirectional links (two directed edges
// each), flows drawn over all ordered node pairs and filtered to the heaviest
// top_fraction, equal router budgets.
TopologySpec synth_topology(const SynthParams& params, std::uint64_t seed);

// Bundle of nodes.csv, links.csv, flows.csv, budgets.csv (see README).
TopologySpec read_topology_bundle(const std::filesystem::path& dir);
void write_topology_bundle(const std::filesystem::path& dir, const TopologySpec& t);

}  // namespace flowdesign
