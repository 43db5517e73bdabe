#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "flowdesign/model.hpp"

namespace flowdesign {

enum class Scheme { classical_E, steady_state_E, myopic, naive };

std::string_view to_string(Scheme s);
// Accepts "classical", "steady-state"/"steady_state", "myopic", "naive".
Scheme parse_scheme(std::string_view name);

struct DesignDiagnostics {
  std::int64_t lp_pivots = 0;
  int bisection_steps = 0;
  double theta_lo = 0.0;  // bisection bracket at exit
  double theta_hi = 0.0;
  double max_violation = 0.0;
  bool perturbed = false;
  std::vector<std::size_t> unobservable_flows;
};

// `theta` is the min over flows of the scheme's per-flow information at `xi`:
// J xi (classical, naive), predicted prior + J xi (myopic), or the filter's
// steady-state information (steady-state). The witness xi is one optimizer;
// it is not unique in general.
struct DesignResult {
  DesignVector xi;
  double theta = 0.0;
  Scheme scheme = Scheme::classical_E;
  DesignDiagnostics diagnostics;
};

// max_xi min_i (J xi)_i subject to the budget rows and bounds.
DesignResult solve_classical_E(const DesignProblem& p);

inline constexpr double kThetaTol = 1e-9;

// max_xi min_i steady_state_info((J xi)_i, sigma2_i), by bisection on theta:
// for fixed theta every hyperbolic constraint theta^2 <= m_i (theta + 1/sigma2_i)
// is the linear row (J xi)_i >= theta^2 / (theta + 1/sigma2_i), so each probe is
// an LP feasibility check. Stops once the bracket is within tol_theta
// (relative).
DesignResult solve_steady_state_E(const DesignProblem& p, const FlowModel& fm,
                                  double tol_theta = kThetaTol);

// One-period greedy design: max theta s.t. a_i + (J xi)_i >= theta, where a is
// prior_info advanced through the prediction step (or prior_info itself when
// use_prediction is false).
DesignResult solve_myopic(const DesignProblem& p, const FlowModel& fm,
                          const Eigen::VectorXd& prior_info, bool use_prediction = true);

using TraversalMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Equal rates on every traversed interface of a router, exhausting its budget;
// untraversed interfaces get 0. traversal is n_v x n_o; every column of R must
// have exactly one nonzero (each observation point belongs to one router).
DesignResult solve_naive(const DesignProblem& p, const TraversalMatrix& traversal);

// ||P x + q|| <= r'x + s over x = (theta, xi_1, ..., xi_{n_o}).
struct SocpCone {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::VectorXd r;
  double s = 0.0;
};

// minimize f'x subject to the cones. The first n_hyperbolic cones are the
// per-flow hyperbolic constraints, then one linear cone per budget row
// (b_j - R_j xi >= 0), then one reversed linear cone per equality row. Variable
// bounds are not cones and travel alongside.
struct CanonicalSocp {
  Eigen::VectorXd f;
  std::vector<SocpCone> cones;
  std::size_t n_hyperbolic = 0;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  std::size_t n_vars() const { return static_cast<std::size_t>(f.size()); }
};

CanonicalSocp export_canonical_socp(const DesignProblem& p, const FlowModel& fm);

// r'x + s - ||P x + q||; nonnegative iff x satisfies the cone.
double cone_residual(const SocpCone& cone, const Eigen::VectorXd& x);

// Plain-text stanza format; see README for the layout.
void write_socp(std::ostream& os, const CanonicalSocp& socp);
CanonicalSocp read_socp(std::istream& is);

}  // namespace flowdesign
