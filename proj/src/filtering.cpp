#include "flowdesign/filtering.hpp"

#include <cmath>

#include <fmt/format.h>

#include "flowdesign/errors.hpp"

namespace flowdesign {

FilterState FilterState::diffuse(std::size_t n_flows) {
  const auto n = static_cast<Eigen::Index>(n_flows);
  return FilterState{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0};
}

FilterState FilterState::diffuse(const Eigen::VectorXd& initial_mean) {
  return FilterState{Eigen::VectorXd::Zero(initial_mean.size()), initial_mean, 0};
}

double predicted_info(double info, double sigma2) { return info / (1.0 + sigma2 * info); }

FilterState predict_update(const FilterState& state, const FlowModel& fm, const InformationVector& m,
                           const Eigen::VectorXd& y) {
  const auto n = static_cast<Eigen::Index>(fm.n_flows());
  if (state.info.size() != n || state.mean.size() != n || m.size() != n || y.size() != n)
    throw InvalidArgument(fmt::format("predict_update: expected {} flows", n));

  FilterState next = state;
  next.t = state.t + 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (m[i] < 0.0 || !std::isfinite(m[i]))
      throw InvalidArgument(fmt::format("predict_update: m[{}] = {} must be nonnegative", i, m[i]));
    const double prior = predicted_info(state.info[i], fm.sigma2()[i]);
    const double post = prior + m[i];
    next.info[i] = post;
    if (m[i] > 0.0) {
      const double gain = m[i] / post;
      next.mean[i] = state.mean[i] + gain * (y[i] - state.mean[i]);
    }
  }
  return next;
}

Eigen::VectorXd propagate_info(const Eigen::VectorXd& info, const Eigen::VectorXd& sigma2,
                               const InformationVector& m) {
  Eigen::VectorXd out(info.size());
  for (Eigen::Index i = 0; i < info.size(); ++i) out[i] = predicted_info(info[i], sigma2[i]) + m[i];
  return out;
}

double steady_state_info(double m, double sigma2) {
  if (!(sigma2 > 0.0))
    throw InvalidArgument(fmt::format("steady_state_info: sigma2 = {} must be positive", sigma2));
  if (m < 0.0) throw InvalidArgument(fmt::format("steady_state_info: m = {} must be nonnegative", m));
  const double half = 0.5 * m;
  return half + std::sqrt(half * half + m / sigma2);
}

Eigen::VectorXd steady_state_info(const InformationVector& m, const Eigen::VectorXd& sigma2) {
  Eigen::VectorXd out(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) out[i] = steady_state_info(m[i], sigma2[i]);
  return out;
}

double required_info(double target, double sigma2) {
  if (target <= 0.0) return 0.0;
  return target * target / (target + 1.0 / sigma2);
}

SteadyStateIteration iterate_to_steady_state(const FlowModel& fm, const InformationVector& m,
                                             double tol, std::int64_t max_iter,
                                             const Eigen::VectorXd& start) {
  if (!(tol > 0.0)) throw InvalidArgument("iterate_to_steady_state: tol must be positive");
  const auto n = static_cast<Eigen::Index>(fm.n_flows());
  if (m.size() != n) throw InvalidArgument("iterate_to_steady_state: dimension mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (m[i] < 0.0) throw InvalidArgument(fmt::format("iterate_to_steady_state: m[{}] < 0", i));

  Eigen::VectorXd info = start.size() == 0 ? Eigen::VectorXd::Zero(n) : start;
  if (info.size() != n) throw InvalidArgument("iterate_to_steady_state: start has wrong size");

  for (std::int64_t it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd next = propagate_info(info, fm.sigma2(), m);
    bool done = true;
    for (Eigen::Index i = 0; i < n && done; ++i) {
      const double delta = std::abs(next[i] - info[i]);
      done = delta <= tol * std::abs(next[i]);
    }
    info = next;
    if (done) return {info, it};
  }
  throw ConvergenceError(fmt::format("steady-state iteration did not converge in {} steps", max_iter),
                         info);
}

}  // namespace flowdesign
