#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "flowdesign/model.hpp"

namespace flowdesign {

// Posterior of a bank of independent scalar random-walk Kalman filters, kept
// in information form: info_i = 1 / Var(x_i(t) | data up to t). info_i == 0 is
// the diffuse prior.
struct FilterState {
  Eigen::VectorXd info;
  Eigen::VectorXd mean;
  std::int64_t t = 0;

  static FilterState diffuse(std::size_t n_flows);
  // Diffuse information with an initial guess for the mean.
  static FilterState diffuse(const Eigen::VectorXd& initial_mean);
};

// Information after the prediction step: info / (1 + sigma2 * info).
double predicted_info(double info, double sigma2);

// One Kalman step for every flow. y[i] is read only where m[i] > 0; flows with
// m[i] == 0 only run the prediction step.
FilterState predict_update(const FilterState& state, const FlowModel& fm, const InformationVector& m,
                           const Eigen::VectorXd& y);

// Covariance-only step (no observations); used for idealized analysis.
Eigen::VectorXd propagate_info(const Eigen::VectorXd& info, const Eigen::VectorXd& sigma2,
                               const InformationVector& m);

// Limiting posterior information for constant per-period information m and
// innovation variance sigma2: the nonnegative root of
//   sigma2 * s^2 - sigma2 * m * s - m = 0.
double steady_state_info(double m, double sigma2);
Eigen::VectorXd steady_state_info(const InformationVector& m, const Eigen::VectorXd& sigma2);

// Inverse of steady_state_info in m: the per-period information needed for the
// filter to settle at `target`, i.e. target^2 / (target + 1/sigma2).
double required_info(double target, double sigma2);

struct SteadyStateIteration {
  Eigen::VectorXd info;
  std::int64_t iterations = 0;
};

inline constexpr double kSteadyStateTol = 1e-10;
inline constexpr std::int64_t kSteadyStateMaxIter = 1'000'000;

// Runs the information recursion from `start` (diffuse if empty) until every
// flow's relative change drops below tol. Throws ConvergenceError after
// max_iter steps.
SteadyStateIteration iterate_to_steady_state(const FlowModel& fm, const InformationVector& m,
                                             double tol = kSteadyStateTol,
                                             std::int64_t max_iter = kSteadyStateMaxIter,
                                             const Eigen::VectorXd& start = {});

}  // namespace flowdesign
