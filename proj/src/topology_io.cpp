#include <fstream>
#include <map>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "flowdesign/csv.hpp"
#include "flowdesign/errors.hpp"
#include "flowdesign/network.hpp"

namespace flowdesign {

namespace fs = std::filesystem;

TopologySpec read_topology_bundle(const fs::path& dir) {
  TopologySpec t;

  const csv::Table nodes = csv::read(dir / "nodes.csv");
  const auto c_id = nodes.column("id");
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < nodes.rows.size(); ++r) {
    const std::string& id = nodes.rows[r][c_id];
    if (id.empty()) throw FormatError("nodes.csv:id", fmt::format("row {} is empty", r + 1));
    if (!index.emplace(id, t.nodes.size()).second)
      throw FormatError("nodes.csv:id", fmt::format("duplicate node '{}'", id));
    t.nodes.push_back(id);
  }
  auto lookup = [&](const std::string& field, const std::string& id) {
    const auto it = index.find(id);
    if (it == index.end()) throw FormatError(field, fmt::format("unknown node '{}'", id));
    return it->second;
  };

  const csv::Table links = csv::read(dir / "links.csv");
  const auto c_u = links.column("u");
  const auto c_v = links.column("v");
  for (const auto& row : links.rows) {
    const std::size_t u = lookup("links.csv:u", row[c_u]);
    const std::size_t v = lookup("links.csv:v", row[c_v]);
    if (u == v) throw FormatError("links.csv", fmt::format("self-loop at '{}'", row[c_u]));
    t.edges.push_back({u, v});
    t.edges.push_back({v, u});
  }

  const csv::Table flows = csv::read(dir / "flows.csv");
  const auto c_o = flows.column("origin");
  const auto c_d = flows.column("destination");
  const auto c_s2 = flows.column("sigma2");
  const auto c_mu = flows.column("mu");
  const bool has_path = flows.has_column("path");
  for (std::size_t r = 0; r < flows.rows.size(); ++r) {
    FlowSpec f;
    f.origin = flows.rows[r][c_o];
    f.destination = flows.rows[r][c_d];
    lookup("flows.csv:origin", f.origin);
    lookup("flows.csv:destination", f.destination);
    f.sigma2 = flows.number(r, c_s2);
    f.mu = flows.number(r, c_mu);
    if (!(f.sigma2 > 0.0)) throw FormatError("flows.csv:sigma2", fmt::format("row {} must be positive", r + 1));
    if (!(f.mu > 0.0)) throw FormatError("flows.csv:mu", fmt::format("row {} must be positive", r + 1));
    if (has_path) {
      const std::string& p = flows.rows[r][flows.column("path")];
      if (!p.empty()) {
        for (const auto& hop : csv::split(p, ' '))
          if (!hop.empty()) f.path.push_back(hop);
      }
    }
    t.flows.push_back(std::move(f));
  }

  const csv::Table budgets = csv::read(dir / "budgets.csv");
  const auto c_router = budgets.column("router");
  const auto c_b = budgets.column("b");
  std::vector<bool> have(t.nodes.size(), false);
  t.budgets.assign(t.nodes.size(), 0.0);
  for (std::size_t r = 0; r < budgets.rows.size(); ++r) {
    const std::size_t j = lookup("budgets.csv:router", budgets.rows[r][c_router]);
    const double b = budgets.number(r, c_b);
    if (!(b >= 0.0)) throw FormatError("budgets.csv:b", fmt::format("router '{}' has negative budget", t.nodes[j]));
    t.budgets[j] = b;
    have[j] = true;
  }
  for (std::size_t j = 0; j < have.size(); ++j)
    if (!have[j]) throw FormatError("budgets.csv:router", fmt::format("router '{}' has no budget", t.nodes[j]));

  t.validate();
  return t;
}

void write_topology_bundle(const fs::path& dir, const TopologySpec& t) {
  t.validate();
  if (t.edges.size() % 2 != 0) throw InvalidArgument("topology bundle needs edges in bidirectional pairs");
  for (std::size_t k = 0; k < t.edges.size(); k += 2)
    if (t.edges[k].from != t.edges[k + 1].to || t.edges[k].to != t.edges[k + 1].from)
      throw InvalidArgument(fmt::format("edges {} and {} are not a bidirectional pair", k + 1, k + 2));

  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream os(dir / name);
    if (!os) throw Error(fmt::format("cannot write {}", (dir / name).string()));
    return os;
  };
  {
    auto os = open("nodes.csv");
    os << "id\n";
    for (const auto& n : t.nodes) os << n << '\n';
  }
  {
    auto os = open("links.csv");
    os << "u,v\n";
    for (std::size_t k = 0; k < t.edges.size(); k += 2)
      os << t.nodes[t.edges[k].from] << ',' << t.nodes[t.edges[k].to] << '\n';
  }
  {
    auto os = open("flows.csv");
    os << "origin,destination,sigma2,mu,path\n";
    for (const auto& f : t.flows) {
      std::string path;
      for (std::size_t h = 0; h < f.path.size(); ++h) path += (h ? " " : "") + f.path[h];
      os << fmt::format("{},{},{:.17g},{:.17g},{}\n", f.origin, f.destination, f.sigma2, f.mu, path);
    }
  }
  {
    auto os = open("budgets.csv");
    os << "router,b\n";
    for (std::size_t j = 0; j < t.nodes.size(); ++j) os << fmt::format("{},{:.17g}\n", t.nodes[j], t.budgets[j]);
  }
}

}  // namespace flowdesign
