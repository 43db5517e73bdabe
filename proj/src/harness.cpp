#include "flowdesign/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "flowdesign/errors.hpp"
#include "flowdesign/filtering.hpp"

namespace flowdesign {

namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DesignVector design_for(Scheme scheme, const DesignProblem& p, const FlowModel& fm, const TraversalMatrix& traversal,
                        const Eigen::VectorXd& prior_info, const ExperimentConfig& cfg) {
  switch (scheme) {
    case Scheme::naive: return solve_naive(p, traversal).xi;
    case Scheme::classical_E: return solve_classical_E(p).xi;
    case Scheme::myopic: return solve_myopic(p, fm, prior_info, cfg.use_prediction).xi;
    case Scheme::steady_state_E: return solve_steady_state_E(p, fm, cfg.tol_theta).xi;
  }
  throw InvalidArgument("unknown scheme");
}

void finish_metrics(MetricsSeries& s, const ExperimentConfig& cfg) {
  const auto T = static_cast<Eigen::Index>(s.flow_mse.rows());
  s.max_mse.resize(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) s.max_mse[static_cast<std::size_t>(t)] = s.flow_mse.row(t).maxCoeff();
  std::tie(s.window_from, s.window_to) = median_window(static_cast<std::size_t>(T), cfg.median_from_fraction);
  s.median = median_of({s.max_mse.begin() + static_cast<std::ptrdiff_t>(s.window_from - 1),
                        s.max_mse.begin() + static_cast<std::ptrdiff_t>(s.window_to)});
}

}  // namespace

std::pair<std::size_t, std::size_t> median_window(std::size_t horizon, double fraction) {
  auto from = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(horizon))) + 1;
  from = std::min(from, horizon);
  return {from, horizon};
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Instance load_instance(const ExperimentConfig& cfg) {
  Instance inst;
  inst.topology = cfg.topology == "synth" ? synth_topology(cfg.synth, cfg.synth_seed) : read_topology_bundle(cfg.topology);
  inst.model = build_measurement_model(inst.topology, route_flows(inst.topology));
  return inst;
}

MetricsSeries run_idealized(const ExperimentConfig& cfg, const Instance& inst, Scheme scheme) {
  const MeasurementModel& mm = inst.model;
  const FlowModel fm = mm.flow_model();
  const DesignProblem p = make_design_problem(mm, cfg.constraint_mode);
  const auto n_r = static_cast<Eigen::Index>(mm.n_flows);
  const auto T = static_cast<Eigen::Index>(cfg.horizon);

  MetricsSeries s;
  s.scheme = scheme;
  s.flow_mse.resize(T, n_r);
  Eigen::VectorXd info = Eigen::VectorXd::Zero(n_r);
  DesignVector xi;
  for (Eigen::Index t = 0; t < T; ++t) {
    if (scheme == Scheme::myopic || t == 0) {
      xi = design_for(scheme, p, fm, mm.traversal, info, cfg);
      s.rates.push_back({s.rates.size() + 1, static_cast<std::size_t>(t + 1), xi});
    }
    info = propagate_info(info, fm.sigma2(), p.J * xi);
    for (Eigen::Index i = 0; i < n_r; ++i) s.flow_mse(t, i) = info[i] > 0.0 ? 1.0 / info[i] : kInf;
  }
  finish_metrics(s, cfg);
  return s;
}

std::vector<MetricsSeries> run_idealized(const ExperimentConfig& cfg) {
  cfg.validate();
  const Instance inst = load_instance(cfg);
  std::vector<MetricsSeries> out;
  for (Scheme s : cfg.schemes) out.push_back(run_idealized(cfg, inst, s));
  return out;
}

Trace load_trace(const ExperimentConfig& cfg, const Instance& inst) {
  Trace tr;
  if (cfg.trace == "synth") {
    const FlowModel fm = inst.model.flow_model();
    tr = gen_random_walk_trace(fm, cfg.horizon, fm.mu(), cfg.trace_seed, cfg.trace_floor);
  } else {
    tr = read_trace_csv(cfg.trace);
  }
  if (tr.n_flows() != inst.model.n_flows)
    throw FormatError("trace", fmt::format("trace has {} flows, topology has {}", tr.n_flows(), inst.model.n_flows));
  if (tr.periods() < cfg.horizon)
    throw FormatError("trace", fmt::format("trace has {} periods, horizon is {}", tr.periods(), cfg.horizon));
  return tr;
}

namespace {

struct Replication {
  Eigen::MatrixXd sq_err;  // T x n_r
  std::vector<BlockRates> rates;
};

Replication run_replication(const ExperimentConfig& cfg, const MeasurementModel& mm, const Trace& trace, Scheme scheme,
                            std::size_t rep) {
  const FlowModel fm = mm.flow_model();
  const auto n_r = static_cast<Eigen::Index>(mm.n_flows);
  const std::size_t T = cfg.horizon;
  Rng rng = make_stream(cfg.seed, rep);

  auto plugin = [&](const FilterState& st) -> Eigen::VectorXd {
    if (cfg.mu_mode == MuMode::true_mu) return fm.mu();
    return st.mean.cwiseMax(cfg.mu_floor);
  };

  Replication out;
  out.sq_err.resize(static_cast<Eigen::Index>(T), n_r);
  // Diffuse information; the mean starts at the prior guess mu.
  FilterState state = FilterState::diffuse(fm.mu());
  DesignVector xi;
  for (std::size_t t = 1; t <= T; ++t) {
    if ((t - 1) % cfg.block_size == 0) {
      const std::size_t block = (t - 1) / cfg.block_size + 1;
      const Scheme active = (block == 1 && cfg.warmup_scheme) ? *cfg.warmup_scheme : scheme;
      const Eigen::VectorXd mu_hat = plugin(state);
      const DesignProblem p = make_design_problem(mm, cfg.constraint_mode, information_map(mm, mu_hat));
      xi = design_for(active, p, fm.with_mu(mu_hat), mm.traversal, state.info, cfg).cwiseMax(0.0).cwiseMin(1.0);
      if (rep == 0) out.rates.push_back({block, t, xi});
    }
    const Eigen::VectorXd x_t = trace.x.row(static_cast<Eigen::Index>(t - 1)).transpose();
    const RawMeasurements raw = sample_packets(x_t, mm, xi, rng);
    const FusedObservation obs = fuse_gls(raw, mm, xi, plugin(state));
    state = predict_update(state, fm, obs.m, obs.y);
    out.sq_err.row(static_cast<Eigen::Index>(t - 1)) = (state.mean - x_t).array().square().transpose();
  }
  return out;
}

}  // namespace

MetricsSeries run_simulation(const ExperimentConfig& cfg, const Instance& inst, const Trace& trace, Scheme scheme) {
  cfg.validate();
  const std::size_t reps = cfg.replications;
  std::vector<Replication> results(reps);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= reps) return;
      try {
        results[r] = run_replication(cfg, inst.model, trace, scheme, r);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = reps;
        return;
      }
    }
  };
  unsigned n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, reps));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  MetricsSeries s;
  s.scheme = scheme;
  s.flow_mse = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cfg.horizon), static_cast<Eigen::Index>(inst.model.n_flows));
  // Reduction in replication order keeps the sums independent of scheduling.
  for (const Replication& r : results) s.flow_mse += r.sq_err;
  s.flow_mse /= static_cast<double>(reps);
  s.rates = std::move(results.front().rates);
  finish_metrics(s, cfg);
  return s;
}

std::vector<MetricsSeries> run_simulation(const ExperimentConfig& cfg) {
  cfg.validate();
  const Instance inst = load_instance(cfg);
  const Trace trace = load_trace(cfg, inst);
  std::vector<MetricsSeries> out;
  for (Scheme s : cfg.schemes) out.push_back(run_simulation(cfg, inst, trace, s));
  return out;
}

void write_outputs(const fs::path& dir, const std::vector<MetricsSeries>& series, std::string_view mode) {
  fs::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream os(dir / name);
    if (!os) throw Error(fmt::format("cannot write {}", (dir / name).string()));
    return os;
  };
  const std::size_t from = series.empty() ? 1 : series.front().window_from;
  const std::size_t to = series.empty() ? 0 : series.front().window_to;
  {
    auto os = open("metrics.csv");
    os << fmt::format("# flowdesign metrics v1 mode={} median_window={}-{}\n", mode, from, to);
    os << "t,max_mse,scheme\n";
    for (const auto& s : series)
      for (std::size_t t = 0; t < s.max_mse.size(); ++t)
        os << fmt::format("{},{:.17g},{}\n", t + 1, s.max_mse[t], to_string(s.scheme));
  }
  {
    auto os = open("flows.csv");
    os << fmt::format("# flowdesign flows v1 mode={}\n", mode);
    os << "t,flow_id,mse,scheme\n";
    for (const auto& s : series)
      for (Eigen::Index t = 0; t < s.flow_mse.rows(); ++t)
        for (Eigen::Index i = 0; i < s.flow_mse.cols(); ++i)
          os << fmt::format("{},{},{:.17g},{}\n", t + 1, i + 1, s.flow_mse(t, i), to_string(s.scheme));
  }
  for (const auto& s : series) {
    auto os = open(fmt::format("rates_{}.csv", to_string(s.scheme)));
    os << fmt::format("# flowdesign rates v1 mode={} scheme={}\n", mode, to_string(s.scheme));
    os << "block,op_id,xi\n";
    for (const auto& br : s.rates)
      for (Eigen::Index k = 0; k < br.xi.size(); ++k) os << fmt::format("{},{},{:.17g}\n", br.block, k + 1, br.xi[k]);
  }
  {
    auto os = open("summary.csv");
    os << fmt::format("# flowdesign summary v1 mode={}\n", mode);
    os << "scheme,median_max_mse,window_from,window_to\n";
    for (const auto& s : series)
      os << fmt::format("{},{:.17g},{},{}\n", to_string(s.scheme), s.median, s.window_from, s.window_to);
  }
}

}  // namespace flowdesign
