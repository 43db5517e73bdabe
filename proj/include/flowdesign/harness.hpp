#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flowdesign/design.hpp"
#include "flowdesign/network.hpp"
#include "flowdesign/simulate.hpp"

namespace flowdesign {

enum class MuMode { true_mu, plugin };

// Flat key = value experiment description. Keys are listed in README.md.
struct ExperimentConfig {
  std::string topology = "synth";  // "synth" or a topology bundle directory
  SynthParams synth;
  std::uint64_t synth_seed = 1;

  std::string trace = "synth";  // "synth" (random walk from mu) or a trace CSV
  std::uint64_t trace_seed = 2;
  double trace_floor = 1.0;

  std::vector<Scheme> schemes{Scheme::naive, Scheme::myopic, Scheme::steady_state_E};
  std::size_t horizon = 200;
  std::size_t block_size = 40;
  std::optional<Scheme> warmup_scheme = Scheme::naive;  // design used in block 1
  std::size_t replications = 200;
  std::uint64_t seed = 1;
  MuMode mu_mode = MuMode::plugin;
  ConstraintMode constraint_mode = ConstraintMode::inequality;
  double mu_floor = 1.0;
  double median_from_fraction = 0.2;  // median window is (fraction * T, T]
  bool use_prediction = true;
  double tol_theta = kThetaTol;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const;
};

// Parses config text; unknown keys and bad values raise FormatError naming
// the key. Relative paths are resolved against `base_dir`.
ExperimentConfig parse_config(std::istream& is, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
std::string to_text(const ExperimentConfig& cfg);

// Topology and measurement model an experiment runs on.
struct Instance {
  TopologySpec topology;
  MeasurementModel model;
};

Instance load_instance(const ExperimentConfig& cfg);

struct BlockRates {
  std::size_t block = 0;  // 1-based
  std::size_t start = 0;  // first period of the block, 1-based
  DesignVector xi;
};

struct MetricsSeries {
  Scheme scheme = Scheme::naive;
  std::vector<double> max_mse;  // per period t = 1..T
  Eigen::MatrixXd flow_mse;     // T x n_r
  std::vector<BlockRates> rates;
  std::size_t window_from = 1;  // median window, 1-based inclusive
  std::size_t window_to = 0;
  double median = 0.0;
};

// Median of max_mse over periods (fraction * T, T].
std::pair<std::size_t, std::size_t> median_window(std::size_t horizon, double fraction);
double median_of(std::vector<double> values);

// Filter covariances propagated analytically under each scheme (true means,
// no sampling noise). Fixed schemes design once; myopic re-solves every
// period from the current posterior information.
MetricsSeries run_idealized(const ExperimentConfig& cfg, const Instance& inst, Scheme scheme);
std::vector<MetricsSeries> run_idealized(const ExperimentConfig& cfg);

// Closed loop with binomial packet sampling, GLS fusion and Kalman filtering,
// rates redesigned at every block start. Errors are averaged over
// replications; rate logs come from replication 1.
MetricsSeries run_simulation(const ExperimentConfig& cfg, const Instance& inst, const Trace& trace, Scheme scheme);
std::vector<MetricsSeries> run_simulation(const ExperimentConfig& cfg);

Trace load_trace(const ExperimentConfig& cfg, const Instance& inst);

// metrics.csv, rates_<scheme>.csv, flows.csv, summary.csv.
void write_outputs(const std::filesystem::path& dir, const std::vector<MetricsSeries>& series, std::string_view mode);

// Command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace flowdesign
