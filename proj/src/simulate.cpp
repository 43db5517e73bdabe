#include "flowdesign/simulate.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "flowdesign/csv.hpp"
#include "flowdesign/errors.hpp"

namespace flowdesign {

Rng make_stream(std::uint64_t base, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5eedu};
  return Rng(seq);
}

Trace gen_random_walk_trace(const FlowModel& fm, std::size_t periods, const Eigen::VectorXd& x0,
                            std::uint64_t seed, double floor) {
  const auto n = static_cast<Eigen::Index>(fm.n_flows());
  if (periods < 1) throw InvalidArgument("random-walk trace needs at least one period");
  if (x0.size() != n) throw InvalidArgument("random-walk trace: x0 has wrong size");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(x0[i] > 0.0)) throw InvalidArgument(fmt::format("random-walk trace: x0[{}] must be positive", i));

  Rng rng = make_stream(seed, 0);
  std::normal_distribution<double> eps(0.0, 1.0);
  Trace tr;
  tr.source = TraceSource::synthetic_random_walk;
  tr.x.resize(static_cast<Eigen::Index>(periods), n);
  Eigen::VectorXd cur = x0;
  const Eigen::VectorXd sd = fm.sigma2().cwiseSqrt();
  for (Eigen::Index t = 0; t < tr.x.rows(); ++t) {
    for (Eigen::Index i = 0; i < n; ++i) cur[i] = std::max(floor, std::round(cur[i] + sd[i] * eps(rng)));
    tr.x.row(t) = cur.transpose();
  }
  return tr;
}

Trace read_trace_csv(const std::filesystem::path& path) {
  const csv::Table tab = csv::read(path);
  tab.column("t");
  if (tab.header.size() < 2) throw FormatError(tab.source, "trace needs at least one flow column");
  for (std::size_t c = 1; c < tab.header.size(); ++c)
    if (tab.header[c] != fmt::format("flow_{}", c))
      throw FormatError(tab.source, fmt::format("column {} should be 'flow_{}', got '{}'", c + 1, c, tab.header[c]));
  if (tab.rows.empty()) throw FormatError(tab.source, "trace has no periods");

  Trace tr;
  tr.source = TraceSource::file_replay;
  tr.x.resize(static_cast<Eigen::Index>(tab.rows.size()), static_cast<Eigen::Index>(tab.header.size() - 1));
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    for (std::size_t c = 1; c < tab.header.size(); ++c) {
      const long long v = tab.integer(r, c);
      if (v < 0) throw FormatError(fmt::format("{}:{}", tab.source, tab.header[c]), fmt::format("row {} is negative", r + 1));
      tr.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1)) = static_cast<double>(v);
    }
  }
  return tr;
}

void write_trace_csv(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream os(path);
  if (!os) throw Error(fmt::format("cannot write {}", path.string()));
  os << "t";
  for (std::size_t i = 0; i < trace.n_flows(); ++i) os << ",flow_" << (i + 1);
  os << '\n';
  for (Eigen::Index t = 0; t < trace.x.rows(); ++t) {
    os << (t + 1);
    for (Eigen::Index i = 0; i < trace.x.cols(); ++i) os << ',' << static_cast<long long>(trace.x(t, i));
    os << '\n';
  }
}

RawMeasurements sample_packets(const Eigen::VectorXd& x_t, const MeasurementModel& mm, const DesignVector& xi,
                               Rng& rng) {
  if (x_t.size() != static_cast<Eigen::Index>(mm.n_flows)) throw InvalidArgument("sample_packets: x has wrong size");
  if (xi.size() != static_cast<Eigen::Index>(mm.n_points)) throw InvalidArgument("sample_packets: xi has wrong size");
  for (Eigen::Index k = 0; k < xi.size(); ++k)
    if (!(xi[k] >= 0.0 && xi[k] <= 1.0))
      throw InvalidArgument(fmt::format("sample_packets: xi[{}] = {} outside [0, 1]", k, xi[k]));

  const std::size_t n_g = mm.n_measurements();
  RawMeasurements raw;
  raw.sampled.assign(n_g, 0);
  raw.present.assign(n_g, false);
  raw.z = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_g), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t g = 0; g < n_g; ++g) {
    const double rate = xi[static_cast<Eigen::Index>(mm.meas_point[g])];
    if (rate <= 0.0) continue;
    const double volume = x_t[static_cast<Eigen::Index>(mm.meas_flow[g])];
    if (!(volume >= 0.0)) throw InvalidArgument("sample_packets: volumes must be nonnegative");
    const auto packets = static_cast<std::int64_t>(std::llround(volume));
    std::int64_t kept = packets;
    if (rate < 1.0) {
      std::binomial_distribution<std::int64_t> draw(packets, rate);
      kept = draw(rng);
    }
    raw.sampled[g] = kept;
    raw.z[static_cast<Eigen::Index>(g)] = static_cast<double>(kept) / rate;
    raw.present[g] = true;
  }
  return raw;
}

RawMeasurements sample_packets(const Eigen::VectorXd& x_t, const MeasurementModel& mm, const DesignVector& xi,
                               std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  return sample_packets(x_t, mm, xi, rng);
}

FusedObservation fuse_gls(const RawMeasurements& raw, const MeasurementModel& mm, const DesignVector& xi,
                          const Eigen::VectorXd& mu_plugin) {
  const auto n_r = static_cast<Eigen::Index>(mm.n_flows);
  if (mu_plugin.size() != n_r) throw InvalidArgument("fuse_gls: mu_plugin has wrong size");
  if (raw.present.size() != mm.n_measurements()) throw InvalidArgument("fuse_gls: measurement count mismatch");
  for (Eigen::Index i = 0; i < n_r; ++i)
    if (!(mu_plugin[i] > 0.0)) throw InvalidArgument(fmt::format("fuse_gls: mu_plugin[{}] must be positive", i));

  Eigen::VectorXd weighted = Eigen::VectorXd::Zero(n_r);
  FusedObservation out;
  out.m = Eigen::VectorXd::Zero(n_r);
  for (std::size_t g = 0; g < raw.present.size(); ++g) {
    if (!raw.present[g]) continue;
    const auto i = static_cast<Eigen::Index>(mm.meas_flow[g]);
    const double w = xi[static_cast<Eigen::Index>(mm.meas_point[g])] / mu_plugin[i];
    out.m[i] += w;
    weighted[i] += w * raw.z[static_cast<Eigen::Index>(g)];
  }
  out.y = Eigen::VectorXd::Constant(n_r, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = 0; i < n_r; ++i)
    if (out.m[i] > 0.0) out.y[i] = weighted[i] / out.m[i];
  return out;
}

}  // namespace flowdesign
