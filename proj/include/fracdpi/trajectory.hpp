#pragma once

// Coupled operational-time chain: at each step the beta-stable subordinator
// advances the backward physical clock while a walk-on-spheres jump moves the
// spatial state.  The chain stops at the first index where the clock crosses 0
// (time_crossing, checked first) or the state leaves the domain (spatial_exit).
//
// Draw order per step, fixed for reproducibility: clock increment (uniform +
// exponential), direction (d normals), radial jump (one uniform).

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fracdpi/domain.hpp"
#include "fracdpi/rng.hpp"
#include "fracdpi/sampler.hpp"
#include "fracdpi/types.hpp"

namespace fracdpi {

enum class StopCause { time_crossing, spatial_exit };

struct TrajectoryOutcome {
  // States with index < stopping index; index 0 is the start point itself.
  // All have t > 0 and x strictly inside the domain.
  std::vector<SpaceTimePoint> pre_stop_states;
  StopCause stop_cause = StopCause::time_crossing;
  SpaceTimePoint stop_state;
  long n_pre = 0;          // last accepted pre-stopping index
  bool truncated = false;  // step budget exhausted before either stop fired
};

// The subordinator crosses any fixed level in O(level^beta) operational time
// with overwhelming probability; the budget only bounds worst-case runtime.
inline long default_max_steps(double horizon, double ds) {
  return static_cast<long>(std::ceil(8.0 * horizon / ds)) + 10000;
}

// max_steps < 0 derives the budget from the start time; callers covering a
// whole run should pass default_max_steps(T, ds) so the budget is constant.
inline TrajectoryOutcome simulate_trajectory(const SpaceTimePoint& start, const DomainSpec& domain,
                                             const FracOrders& orders, double ds, RngStream& stream,
                                             JumpLaw law = JumpLaw::bgr, long max_steps = -1) {
  orders.validate();
  if (!(start.t > 0.0)) throw std::invalid_argument("simulate_trajectory: start.t must be > 0");
  if (!domain.contains(start.x))
    throw std::invalid_argument("simulate_trajectory: start.x must lie inside the domain");
  if (max_steps < 0) max_steps = default_max_steps(start.t, ds);

  const auto rule = WosStepRule::from_step(ds, domain.d, orders.alpha);
  const double ds_root = std::pow(ds, 1.0 / orders.beta);

  TrajectoryOutcome out;
  out.pre_stop_states.push_back(start);
  double y = 0.0;
  Eigen::VectorXd x = start.x;
  for (long step = 1; step <= max_steps; ++step) {
    y += ds_root * sample_positive_stable(orders.beta, stream);
    const double t_phys = start.t - y;
    // Two statements: operand order of * is unspecified, draw order is not.
    const Eigen::VectorXd direction = sample_sphere_direction(domain.d, stream);
    x += sample_jump_distance(rule, stream, law) * direction;
    if (t_phys <= 0.0) {
      out.stop_cause = StopCause::time_crossing;
      out.stop_state = SpaceTimePoint{t_phys, x};
      out.n_pre = step - 1;
      return out;
    }
    if (!domain.contains(x)) {
      out.stop_cause = StopCause::spatial_exit;
      out.stop_state = SpaceTimePoint{t_phys, x};
      out.n_pre = step - 1;
      return out;
    }
    out.pre_stop_states.push_back(SpaceTimePoint{t_phys, x});
  }
  // Budget exhausted: keep the last accepted state as the stop state and let
  // the payoff treat it like a crossing with the clock clamped to 0.
  out.truncated = true;
  out.stop_cause = StopCause::time_crossing;
  out.stop_state = out.pre_stop_states.back();
  out.n_pre = static_cast<long>(out.pre_stop_states.size()) - 1;
  return out;
}

// Terminal data contribution: initial datum if the clock crossed first (time
// clamped to 0, spatial state as just jumped), exterior datum at the jump
// endpoint otherwise.  `Problem` must expose u0(x) and g(t, x).
template <class Problem>
double evaluate_payoff(const TrajectoryOutcome& outcome, const Problem& problem) {
  if (outcome.stop_cause == StopCause::time_crossing) return problem.u0(outcome.stop_state.x);
  return problem.g(outcome.stop_state.t, outcome.stop_state.x);
}

}  // namespace fracdpi
