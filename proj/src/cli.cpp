#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "flowdesign/errors.hpp"
#include "flowdesign/filtering.hpp"
#include "flowdesign/harness.hpp"

namespace flowdesign {

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

Instance instance_from(const std::string& topology_dir, const std::string& config_path) {
  if (!topology_dir.empty()) {
    Instance inst;
    inst.topology = read_topology_bundle(topology_dir);
    inst.model = build_measurement_model(inst.topology, route_flows(inst.topology));
    return inst;
  }
  if (!config_path.empty()) return load_instance(load_config(config_path));
  throw FormatError("--topology", "either --topology or --config is required");
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw Error(fmt::format("cannot write {}", p.string()));
  return os;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sampling-rate design for Kalman tracking of network flow volumes", "flowdesign"};
  app.require_subcommand(1);

  // design
  auto* design = app.add_subcommand("design", "Solve one design problem and export xi, theta and the canonical SOCP");
  std::string d_scheme = "steady-state", d_topology, d_config, d_out, d_mode = "inequality";
  bool d_no_cap = false;
  double d_tol = kThetaTol;
  design->add_option("--scheme", d_scheme, "classical | steady-state | myopic | naive")->capture_default_str();
  design->add_option("--topology", d_topology, "Topology bundle directory");
  design->add_option("--config", d_config, "Experiment config (topology keys are used)");
  design->add_option("--out", d_out, "Output directory")->required();
  design->add_option("--constraint-mode", d_mode, "inequality | equality_with_zeroing")->capture_default_str();
  design->add_flag("--no-cap", d_no_cap, "Drop the xi <= 1 cap");
  design->add_option("--tol-theta", d_tol, "Relative bisection tolerance")->capture_default_str();

  // simulate / idealized
  auto* simulate = app.add_subcommand("simulate", "Closed-loop sampling simulation -> CSV");
  auto* idealized = app.add_subcommand("idealized", "Analytic filter covariances under each scheme -> CSV");
  std::string r_config, r_out = ".";
  std::optional<std::uint64_t> r_seed;
  std::optional<std::size_t> r_reps;
  std::optional<unsigned> r_threads;
  for (auto* sub : {simulate, idealized}) {
    sub->add_option("--config", r_config, "Experiment config file")->required();
    sub->add_option("--out", r_out, "Output directory")->capture_default_str();
    if (sub == simulate) {
      sub->add_option("--seed", r_seed, "Override the sampling seed");
      sub->add_option("--replications", r_reps, "Override the replication count");
      sub->add_option("--threads", r_threads, "Worker threads (0 = all cores)");
    }
  }

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic topology bundle");
  SynthParams sp;
  std::string s_kind = "random", s_out;
  std::uint64_t s_seed = 1;
  std::size_t s_trace = 0;
  std::uint64_t s_trace_seed = 2;
  synth->add_option("--kind", s_kind, "line | star | grid | random")->capture_default_str();
  synth->add_option("--nodes", sp.nodes, "Node count (line, star, random)")->capture_default_str();
  synth->add_option("--links", sp.links, "Bidirectional links (random)")->capture_default_str();
  synth->add_option("--rows", sp.rows, "Grid rows")->capture_default_str();
  synth->add_option("--cols", sp.cols, "Grid columns")->capture_default_str();
  synth->add_option("--top-fraction", sp.top_fraction, "Share of heaviest flows kept")->capture_default_str();
  synth->add_option("--budget", sp.budget, "Per-router budget")->capture_default_str();
  synth->add_option("--seed", s_seed, "Generator seed")->capture_default_str();
  synth->add_option("--trace", s_trace, "Also write trace.csv with this many periods");
  synth->add_option("--trace-seed", s_trace_seed, "Seed for trace.csv")->capture_default_str();
  synth->add_option("--out", s_out, "Output directory")->required();

  // validate
  auto* validate = app.add_subcommand("validate", "Check a topology and its measurement model");
  std::string v_topology, v_config;
  validate->add_option("--topology", v_topology, "Topology bundle directory");
  validate->add_option("--config", v_config, "Experiment config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (design->parsed()) {
      const Instance inst = instance_from(d_topology, d_config);
      const ConstraintMode mode = parse_constraint_mode(d_mode);
      const Scheme scheme = parse_scheme(d_scheme);
      DesignProblem p = make_design_problem(inst.model, mode);
      if (d_no_cap)
        for (Eigen::Index k = 0; k < p.upper.size(); ++k)
          if (p.upper[k] > 0.0) p.upper[k] = std::numeric_limits<double>::infinity();
      const FlowModel fm = inst.model.flow_model();
      DesignResult res;
      switch (scheme) {
        case Scheme::classical_E: res = solve_classical_E(p); break;
        case Scheme::steady_state_E: res = solve_steady_state_E(p, fm, d_tol); break;
        case Scheme::myopic: res = solve_myopic(p, fm, Eigen::VectorXd::Zero(p.J.rows())); break;
        case Scheme::naive: res = solve_naive(p, inst.model.traversal); break;
      }
      fs::create_directories(d_out);
      {
        auto os = open_out(fs::path(d_out) / "xi.csv");
        os << fmt::format("# flowdesign xi v1 scheme={}\n", to_string(scheme));
        os << "op_id,from,to,xi\n";
        for (std::size_t k = 0; k < inst.model.n_points; ++k) {
          const Edge& e = inst.topology.edges[k];
          os << fmt::format("{},{},{},{:.17g}\n", k + 1, inst.topology.nodes[e.from], inst.topology.nodes[e.to],
                            res.xi[static_cast<Eigen::Index>(k)]);
        }
      }
      {
        auto os = open_out(fs::path(d_out) / "theta.txt");
        os << fmt::format("scheme {}\ntheta {:.17g}\n", to_string(scheme), res.theta);
        const Eigen::VectorXd m = p.J * res.xi;
        os << fmt::format("min_steady_state_info {:.17g}\n",
                          steady_state_info(m, fm.sigma2()).minCoeff());
        os << fmt::format("bisection_steps {}\nlp_pivots {}\n", res.diagnostics.bisection_steps, res.diagnostics.lp_pivots);
      }
      {
        auto os = open_out(fs::path(d_out) / "socp.txt");
        write_socp(os, export_canonical_socp(p, fm));
      }
      for (auto i : res.diagnostics.unobservable_flows) err << fmt::format("warning: flow {} is unobservable\n", i + 1);
      out << fmt::format("{} theta = {:.10g}\n", to_string(scheme), res.theta);
      return kExitOk;
    }

    if (simulate->parsed() || idealized->parsed()) {
      ExperimentConfig cfg = load_config(r_config);
      if (r_seed) cfg.seed = *r_seed;
      if (r_reps) cfg.replications = *r_reps;
      if (r_threads) cfg.threads = *r_threads;
      cfg.validate();
      const bool sim = simulate->parsed();
      const std::vector<MetricsSeries> series = sim ? run_simulation(cfg) : run_idealized(cfg);
      write_outputs(r_out, series, sim ? "simulation" : "idealized");
      {
        auto os = open_out(fs::path(r_out) / "config.used");
        os << to_text(cfg);
      }
      for (const auto& s : series)
        out << fmt::format("{:<13} median max MSE over t={}..{}: {:.6g}\n", to_string(s.scheme), s.window_from,
                           s.window_to, s.median);
      return kExitOk;
    }

    if (synth->parsed()) {
      sp.kind = parse_topology_kind(s_kind);
      const TopologySpec t = synth_topology(sp, s_seed);
      write_topology_bundle(s_out, t);
      if (s_trace > 0) {
        const FlowModel fm = t.flow_model();
        write_trace_csv(fs::path(s_out) / "trace.csv", gen_random_walk_trace(fm, s_trace, fm.mu(), s_trace_seed));
      }
      out << fmt::format("wrote {} nodes, {} observation points, {} flows to {}\n", t.nodes.size(), t.edges.size(),
                         t.flows.size(), s_out);
      return kExitOk;
    }

    if (validate->parsed()) {
      const Instance inst = instance_from(v_topology, v_config);
      const MeasurementModel& mm = inst.model;
      const FlowModel fm = mm.flow_model();
      const DesignProblem p = make_design_problem(mm, ConstraintMode::inequality);
      const ValidationReport report = validate_problem(p, fm);
      out << fmt::format("flows n_r = {}\nobservation points n_o = {}\nmeasurements n_g = {}\nrouters n_v = {}\n",
                         mm.n_flows, mm.n_points, mm.n_measurements(), mm.n_routers);
      const Eigen::VectorXd probe = Eigen::VectorXd::LinSpaced(p.J.cols(), 0.001, 0.01);
      const Eigen::MatrixXd prec = gls_precision_dense(mm, probe, mm.mu);
      const double off = (prec - Eigen::MatrixXd(prec.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
      const double diff = (prec.diagonal() - effective_information(mm, probe)).cwiseAbs().maxCoeff();
      out << fmt::format("GLS off-diagonal mass {:.3g}, |diag - J xi| {:.3g}\n", off, diff);
      for (const auto& i : report.issues)
        out << (i.severity == ValidationIssue::Severity::error ? "error: " : "warning: ") << i.message << '\n';
      if (!report.ok()) return kExitFailure;
      out << "ok\n";
      return kExitOk;
    }
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace flowdesign
