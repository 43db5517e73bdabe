#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "flowdesign/model.hpp"
#include "flowdesign/network.hpp"

namespace flowdesign {

using Rng = std::mt19937_64;

// Independent stream for replication `index` of a run seeded with `base`.
Rng make_stream(std::uint64_t base, std::uint64_t index);

enum class TraceSource { synthetic_random_walk, file_replay };

// True flow volumes, one row per period (t = 1..T), one column per flow.
struct Trace {
  Eigen::MatrixXd x;
  TraceSource source = TraceSource::synthetic_random_walk;

  std::size_t periods() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t n_flows() const { return static_cast<std::size_t>(x.cols()); }
};

// Integer random walk: x(t) = max(floor, round(x(t-1) + eps)), eps ~ N(0, sigma2),
// starting from x(0) = x0.
Trace gen_random_walk_trace(const FlowModel& fm, std::size_t periods, const Eigen::VectorXd& x0,
                            std::uint64_t seed, double floor = 1.0);

// CSV with header t,flow_1,...,flow_nr and integer volumes.
Trace read_trace_csv(const std::filesystem::path& path);
void write_trace_csv(const std::filesystem::path& path, const Trace& trace);

// One period of sampled data, indexed by measurement (observation point,
// flow) pair of the measurement model.
struct RawMeasurements {
  std::vector<std::int64_t> sampled;  // N_i, packets kept
  Eigen::VectorXd z;                  // N_i / xi_k(i), NaN when absent
  std::vector<bool> present;          // false where xi_k(i) == 0
};

// Every packet of flow l(i) crossing point k(i) is kept independently with
// probability xi_k(i): N_i ~ Binomial(x_l(i), xi_k(i)).
RawMeasurements sample_packets(const Eigen::VectorXd& x_t, const MeasurementModel& mm, const DesignVector& xi,
                               Rng& rng);
RawMeasurements sample_packets(const Eigen::VectorXd& x_t, const MeasurementModel& mm, const DesignVector& xi,
                               std::uint64_t seed);

struct FusedObservation {
  Eigen::VectorXd y;     // NaN where m == 0
  InformationVector m;
};

// Diagonal GLS: per flow, the inverse-variance weighted mean of its present
// measurements with Var(z_i) = mu_plugin_l(i) / xi_k(i).
FusedObservation fuse_gls(const RawMeasurements& raw, const MeasurementModel& mm, const DesignVector& xi,
                          const Eigen::VectorXd& mu_plugin);

}  // namespace flowdesign
