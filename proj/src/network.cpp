#include "flowdesign/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>

#include "flowdesign/errors.hpp"

namespace flowdesign {

std::size_t TopologySpec::node_index(const std::string& id) const {
  const auto it = std::find(nodes.begin(), nodes.end(), id);
  if (it == nodes.end()) throw InvalidArgument(fmt::format("unknown node '{}'", id));
  return static_cast<std::size_t>(it - nodes.begin());
}

void TopologySpec::validate() const {
  if (nodes.empty()) throw InvalidArgument("topology has no nodes");
  std::set<std::string> seen;
  for (const auto& n : nodes)
    if (!seen.insert(n).second) throw InvalidArgument(fmt::format("duplicate node id '{}'", n));
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (edges[k].from >= nodes.size() || edges[k].to >= nodes.size())
      throw InvalidArgument(fmt::format("edge {} has an endpoint outside the node list", k + 1));
    if (edges[k].from == edges[k].to) throw InvalidArgument(fmt::format("edge {} is a self-loop", k + 1));
  }
  if (budgets.size() != nodes.size())
    throw InvalidArgument(fmt::format("{} budgets for {} routers", budgets.size(), nodes.size()));
  for (std::size_t j = 0; j < budgets.size(); ++j)
    if (!(budgets[j] >= 0.0)) throw InvalidArgument(fmt::format("router '{}' has negative budget", nodes[j]));
  if (flows.empty()) throw InvalidArgument("topology has no flows");
  for (std::size_t i = 0; i < flows.size(); ++i) {
    node_index(flows[i].origin);
    node_index(flows[i].destination);
    if (!(flows[i].mu > 0.0)) throw InvalidArgument(fmt::format("flow {} has mu <= 0", i + 1));
    if (!(flows[i].sigma2 > 0.0)) throw InvalidArgument(fmt::format("flow {} has sigma2 <= 0", i + 1));
  }
}

FlowModel TopologySpec::flow_model() const {
  Eigen::VectorXd s2(static_cast<Eigen::Index>(flows.size()));
  Eigen::VectorXd mu(s2.size());
  for (std::size_t i = 0; i < flows.size(); ++i) {
    s2[static_cast<Eigen::Index>(i)] = flows[i].sigma2;
    mu[static_cast<Eigen::Index>(i)] = flows[i].mu;
  }
  return FlowModel(std::move(s2), std::move(mu));
}

std::vector<Path> route_flows(const TopologySpec& t) {
  t.validate();
  const std::size_t n = t.nodes.size();
  std::vector<std::vector<std::size_t>> out_edges(n), in_edges(n);
  for (std::size_t k = 0; k < t.edges.size(); ++k) {
    out_edges[t.edges[k].from].push_back(k);
    in_edges[t.edges[k].to].push_back(k);
  }
  // Candidate next hops ordered by head id, then edge index.
  for (auto& oe : out_edges)
    std::stable_sort(oe.begin(), oe.end(), [&](std::size_t a, std::size_t b) {
      return t.nodes[t.edges[a].to] < t.nodes[t.edges[b].to];
    });

  constexpr auto kUnreached = std::numeric_limits<std::size_t>::max();
  std::vector<Path> paths;
  paths.reserve(t.flows.size());
  for (std::size_t f = 0; f < t.flows.size(); ++f) {
    const FlowSpec& flow = t.flows[f];
    const std::size_t src = t.node_index(flow.origin);
    const std::size_t dst = t.node_index(flow.destination);
    Path path;

    if (!flow.path.empty()) {
      if (flow.path.front() != flow.origin || flow.path.back() != flow.destination)
        throw InvalidArgument(fmt::format("flow {}: explicit path must run from origin to destination", f + 1));
      for (std::size_t h = 0; h + 1 < flow.path.size(); ++h) {
        const std::size_t u = t.node_index(flow.path[h]);
        const std::size_t v = t.node_index(flow.path[h + 1]);
        std::size_t found = kUnreached;
        for (std::size_t k : out_edges[u])
          if (t.edges[k].to == v && (found == kUnreached || k < found)) found = k;
        if (found == kUnreached)
          throw InvalidArgument(fmt::format("flow {}: no edge {} -> {}", f + 1, flow.path[h], flow.path[h + 1]));
        path.push_back(found);
      }
      paths.push_back(std::move(path));
      continue;
    }

    // Hop distances to the destination over reversed edges.
    std::vector<std::size_t> dist(n, kUnreached);
    std::deque<std::size_t> queue{dst};
    dist[dst] = 0;
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      for (std::size_t k : in_edges[v]) {
        const std::size_t u = t.edges[k].from;
        if (dist[u] == kUnreached) {
          dist[u] = dist[v] + 1;
          queue.push_back(u);
        }
      }
    }
    if (dist[src] == kUnreached)
      throw InvalidArgument(fmt::format("flow {} ({} -> {}): destination unreachable", f + 1, flow.origin,
                                        flow.destination));
    for (std::size_t u = src; u != dst;) {
      for (std::size_t k : out_edges[u]) {
        if (dist[t.edges[k].to] + 1 == dist[u]) {
          path.push_back(k);
          u = t.edges[k].to;
          break;
        }
      }
    }
    paths.push_back(std::move(path));
  }
  return paths;
}

std::string_view to_string(ConstraintMode m) {
  return m == ConstraintMode::inequality ? "inequality" : "equality_with_zeroing";
}

ConstraintMode parse_constraint_mode(std::string_view name) {
  if (name == "inequality") return ConstraintMode::inequality;
  if (name == "equality_with_zeroing" || name == "equality") return ConstraintMode::equality_with_zeroing;
  throw InvalidArgument(fmt::format("unknown constraint mode '{}'", name));
}

std::vector<bool> MeasurementModel::traversed_points() const {
  std::vector<bool> out(n_points, false);
  for (std::size_t k : meas_point) out[k] = true;
  return out;
}

MeasurementModel build_measurement_model(const TopologySpec& t, const std::vector<Path>& paths) {
  t.validate();
  if (paths.size() != t.flows.size())
    throw InvalidArgument(fmt::format("{} paths for {} flows", paths.size(), t.flows.size()));

  MeasurementModel mm;
  mm.n_flows = t.flows.size();
  mm.n_points = t.edges.size();
  mm.n_routers = t.nodes.size();
  mm.paths = paths;
  const FlowModel fm = t.flow_model();
  mm.mu = fm.mu();
  mm.sigma2 = fm.sigma2();

  std::vector<std::vector<bool>> on_path(mm.n_flows, std::vector<bool>(mm.n_points, false));
  for (std::size_t i = 0; i < mm.n_flows; ++i) {
    for (std::size_t k : paths[i]) {
      if (k >= mm.n_points) throw InvalidArgument(fmt::format("flow {}: edge index {} out of range", i + 1, k));
      on_path[i][k] = true;
    }
  }
  // One measurement per (observation point, flow through it), point-major.
  for (std::size_t k = 0; k < mm.n_points; ++k) {
    for (std::size_t i = 0; i < mm.n_flows; ++i) {
      if (!on_path[i][k]) continue;
      mm.meas_point.push_back(k);
      mm.meas_flow.push_back(i);
    }
  }
  const auto n_g = static_cast<Eigen::Index>(mm.n_measurements());
  mm.L = Eigen::MatrixXd::Zero(n_g, static_cast<Eigen::Index>(mm.n_flows));
  for (Eigen::Index g = 0; g < n_g; ++g) mm.L(g, static_cast<Eigen::Index>(mm.meas_flow[static_cast<std::size_t>(g)])) = 1.0;
  mm.psi = psi_diagonals(mm, mm.mu);
  mm.J = information_map(mm, mm.mu);

  const auto n_v = static_cast<Eigen::Index>(mm.n_routers);
  const auto n_o = static_cast<Eigen::Index>(mm.n_points);
  mm.R = Eigen::MatrixXd::Zero(n_v, n_o);
  mm.b.resize(n_v);
  for (Eigen::Index j = 0; j < n_v; ++j) mm.b[j] = t.budgets[static_cast<std::size_t>(j)];
  for (std::size_t k = 0; k < mm.n_points; ++k)
    mm.R(static_cast<Eigen::Index>(t.edges[k].to), static_cast<Eigen::Index>(k)) = 1.0;

  const std::vector<bool> used = mm.traversed_points();
  mm.traversal = TraversalMatrix::Constant(n_v, n_o, false);
  for (Eigen::Index k = 0; k < n_o; ++k)
    if (used[static_cast<std::size_t>(k)])
      mm.traversal(static_cast<Eigen::Index>(t.edges[static_cast<std::size_t>(k)].to), k) = true;
  return mm;
}

std::vector<Eigen::VectorXd> psi_diagonals(const MeasurementModel& mm, const Eigen::VectorXd& mu) {
  if (mu.size() != static_cast<Eigen::Index>(mm.n_flows)) throw InvalidArgument("psi: mu has wrong size");
  const auto n_g = static_cast<Eigen::Index>(mm.n_measurements());
  std::vector<Eigen::VectorXd> psi(mm.n_points, Eigen::VectorXd::Zero(n_g));
  for (Eigen::Index g = 0; g < n_g; ++g) {
    const double m = mu[static_cast<Eigen::Index>(mm.meas_flow[static_cast<std::size_t>(g)])];
    if (!(m > 0.0)) throw InvalidArgument("psi: mean volumes must be positive");
    psi[mm.meas_point[static_cast<std::size_t>(g)]][g] = 1.0 / m;
  }
  return psi;
}

Eigen::MatrixXd information_map(const MeasurementModel& mm, const Eigen::VectorXd& mu) {
  const std::vector<Eigen::VectorXd> psi = psi_diagonals(mm, mu);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mm.n_flows), static_cast<Eigen::Index>(mm.n_points));
  for (std::size_t k = 0; k < mm.n_points; ++k)
    for (Eigen::Index i = 0; i < J.rows(); ++i)
      J(i, static_cast<Eigen::Index>(k)) = mm.L.col(i).dot(psi[k].cwiseProduct(mm.L.col(i)));
  return J;
}

InformationVector effective_information(const MeasurementModel& mm, const DesignVector& xi) {
  if (xi.size() != mm.J.cols()) throw InvalidArgument("effective_information: xi has wrong size");
  return mm.J * xi;
}

Eigen::MatrixXd gls_precision_dense(const MeasurementModel& mm, const DesignVector& xi, const Eigen::VectorXd& mu) {
  const std::vector<Eigen::VectorXd> psi = psi_diagonals(mm, mu);
  const auto n_g = static_cast<Eigen::Index>(mm.n_measurements());
  Eigen::MatrixXd d_inv = Eigen::MatrixXd::Zero(n_g, n_g);
  for (std::size_t k = 0; k < mm.n_points; ++k) d_inv += xi[static_cast<Eigen::Index>(k)] * Eigen::MatrixXd(psi[k].asDiagonal());
  return mm.L.transpose() * d_inv * mm.L;
}

DesignProblem make_design_problem(const MeasurementModel& mm, ConstraintMode mode) {
  return make_design_problem(mm, mode, mm.J);
}

DesignProblem make_design_problem(const MeasurementModel& mm, ConstraintMode mode, const Eigen::MatrixXd& J) {
  DesignProblem p = DesignProblem::with_budgets(J, mm.R, mm.b, true);
  if (mode == ConstraintMode::equality_with_zeroing) {
    for (Eigen::Index j = 0; j < mm.R.rows(); ++j) {
      const bool carries = mm.traversal.row(j).any();
      // A router with no traversed interface cannot meet an equality budget
      // once its interfaces are pinned to zero; it stays an inequality.
      p.row_is_equality[static_cast<std::size_t>(j)] = carries;
    }
    const std::vector<bool> used = mm.traversed_points();
    for (std::size_t k = 0; k < used.size(); ++k)
      if (!used[k]) p.upper[static_cast<Eigen::Index>(k)] = 0.0;
  }
  return p;
}

TopologyKind parse_topology_kind(std::string_view name) {
  if (name == "line") return TopologyKind::line;
  if (name == "star") return TopologyKind::star;
  if (name == "grid") return TopologyKind::grid;
  if (name == "random") return TopologyKind::random;
  throw InvalidArgument(fmt::format("unknown topology kind '{}'", name));
}

TopologySpec synth_topology(const SynthParams& params, std::uint64_t seed) {
  std::size_t n = params.nodes;
  std::vector<std::pair<std::size_t, std::size_t>> links;
  std::mt19937_64 rng(seed);

  switch (params.kind) {
    case TopologyKind::line:
      if (n < 2) throw InvalidArgument("line topology needs at least 2 nodes");
      for (std::size_t v = 0; v + 1 < n; ++v) links.emplace_back(v, v + 1);
      break;
    case TopologyKind::star:
      if (n < 2) throw InvalidArgument("star topology needs at least 2 nodes");
      for (std::size_t v = 1; v < n; ++v) links.emplace_back(0, v);
      break;
    case TopologyKind::grid: {
      if (params.rows < 1 || params.cols < 1 || params.rows * params.cols < 2)
        throw InvalidArgument("grid topology needs at least 2 cells");
      n = params.rows * params.cols;
      for (std::size_t r = 0; r < params.rows; ++r) {
        for (std::size_t c = 0; c < params.cols; ++c) {
          const std::size_t v = r * params.cols + c;
          if (c + 1 < params.cols) links.emplace_back(v, v + 1);
          if (r + 1 < params.rows) links.emplace_back(v, v + params.cols);
        }
      }
      break;
    }
    case TopologyKind::random: {
      if (n < 2) throw InvalidArgument("random topology needs at least 2 nodes");
      const std::size_t max_links = n * (n - 1) / 2;
      if (params.links < n - 1 || params.links > max_links)
        throw InvalidArgument(fmt::format("random topology with {} nodes needs {}..{} links", n, n - 1, max_links));
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      std::set<std::pair<std::size_t, std::size_t>> have;
      auto add = [&](std::size_t a, std::size_t b) {
        const auto key = std::minmax(a, b);
        if (!have.insert({key.first, key.second}).second) return false;
        links.emplace_back(key.first, key.second);
        return true;
      };
      for (std::size_t i = 1; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        add(order[i], order[pick(rng)]);
      }
      std::uniform_int_distribution<std::size_t> any(0, n - 1);
      while (links.size() < params.links) {
        const std::size_t a = any(rng), b = any(rng);
        if (a != b) add(a, b);
      }
      break;
    }
  }
  if (!(params.top_fraction > 0.0 && params.top_fraction <= 1.0))
    throw InvalidArgument("top_fraction must lie in (0, 1]");

  TopologySpec t;
  const int width = static_cast<int>(fmt::format("{}", n).size());
  for (std::size_t v = 0; v < n; ++v) t.nodes.push_back(fmt::format("n{:0{}}", v + 1, width));
  for (const auto& [a, b] : links) {
    t.edges.push_back({a, b});
    t.edges.push_back({b, a});
  }
  t.budgets.assign(n, params.budget);

  struct Candidate {
    std::size_t o, d;
    double mu;
  };
  std::vector<Candidate> cands;
  std::normal_distribution<double> log_mu(params.mu_log_mean, params.mu_log_sd);
  for (std::size_t o = 0; o < n; ++o)
    for (std::size_t d = 0; d < n; ++d)
      if (o != d) cands.push_back({o, d, std::round(std::exp(log_mu(rng)))});
  const auto keep = static_cast<std::size_t>(
      std::max(1.0, std::ceil(params.top_fraction * static_cast<double>(cands.size()))));
  std::vector<std::size_t> idx(cands.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return cands[a].mu > cands[b].mu; });
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  for (std::size_t i : idx) {
    const Candidate& c = cands[i];
    const double mu = std::max(c.mu, 1.0);
    const double sd = params.innovation_cv * mu;
    t.flows.push_back({t.nodes[c.o], t.nodes[c.d], sd * sd, mu, {}});
  }
  return t;
}

}  // namespace flowdesign
