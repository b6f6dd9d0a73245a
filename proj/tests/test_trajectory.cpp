#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fracdpi/trajectory.hpp"

using namespace fracdpi;
using Catch::Matchers::WithinAbs;

namespace {

const FracOrders kOrders{1.5, 0.6};

DomainSpec huge_box(int d) {
  return DomainSpec::box(Eigen::VectorXd::Constant(d, -1e150),
                         Eigen::VectorXd::Constant(d, 1e150));
}

struct ZeroProblem {
  double u0(const Eigen::VectorXd&) const { return 0.0; }
  double g(double, const Eigen::VectorXd&) const { return 0.0; }
};

struct MarkerProblem {
  double u0(const Eigen::VectorXd&) const { return 1.0; }
  double g(double t, const Eigen::VectorXd&) const { return t; }
};

}  // namespace

TEST_CASE("tiny start times cross immediately") {
  const auto disk = DomainSpec::unit_ball(2);
  RngStream r(21, 1);
  for (int i = 0; i < 200; ++i) {
    const auto out =
        simulate_trajectory({1e-12, Eigen::VectorXd::Zero(2)}, disk, kOrders, 5e-3, r);
    REQUIRE(out.stop_cause == StopCause::time_crossing);
    REQUIRE(out.n_pre == 0);
    REQUIRE(out.pre_stop_states.size() == 1);
    REQUIRE(out.stop_state.t <= 0.0);
    REQUIRE_FALSE(out.truncated);
    // the spatial state still jumped once before the clock check
    REQUIRE(out.stop_state.x.norm() > 0.0);
  }
}

TEST_CASE("near-boundary starts mostly exit on the first jump") {
  const auto disk = DomainSpec::unit_ball(2);
  Eigen::VectorXd x0(2);
  x0 << 1.0 - 1e-9, 0.0;
  RngStream r(21, 2);
  const int n = 10000;
  int first_step_exits = 0;
  for (int i = 0; i < n; ++i) {
    const auto out = simulate_trajectory({1.0, x0}, disk, kOrders, 5e-3, r);
    if (out.stop_cause == StopCause::spatial_exit && out.n_pre == 0) ++first_step_exits;
  }
  // J >= r always, so every outward-halfspace direction leaves immediately.
  REQUIRE(first_step_exits >= static_cast<int>(0.40 * n));
}

TEST_CASE("path invariants hold and runs replay bitwise") {
  const auto disk = DomainSpec::unit_ball(2);
  RngStream coll(77, 1);
  const auto starts = sample_collocation(disk, 1.0, 400, coll);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    RngStream r(1234, 100 + i);
    const auto out = simulate_trajectory(starts[i], disk, kOrders, 0.01, r);

    REQUIRE(out.pre_stop_states.size() == static_cast<std::size_t>(out.n_pre) + 1);
    REQUIRE(out.pre_stop_states.front().t == starts[i].t);
    REQUIRE(out.pre_stop_states.front().x == starts[i].x);
    double prev_t = std::numeric_limits<double>::infinity();
    for (const auto& st : out.pre_stop_states) {
      REQUIRE(st.t > 0.0);
      REQUIRE(st.t < prev_t);
      REQUIRE(disk.contains(st.x));
      prev_t = st.t;
    }
    REQUIRE(out.stop_state.t < out.pre_stop_states.back().t);
    if (out.stop_cause == StopCause::time_crossing) {
      REQUIRE(out.stop_state.t <= 0.0);
    } else {
      REQUIRE(out.stop_state.t > 0.0);
      REQUIRE_FALSE(disk.contains(out.stop_state.x));
    }

    RngStream r2(1234, 100 + i);
    const auto replay = simulate_trajectory(starts[i], disk, kOrders, 0.01, r2);
    REQUIRE(replay.stop_cause == out.stop_cause);
    REQUIRE(replay.n_pre == out.n_pre);
    REQUIRE(replay.stop_state.t == out.stop_state.t);
    REQUIRE(replay.stop_state.x == out.stop_state.x);
    for (std::size_t k = 0; k < out.pre_stop_states.size(); ++k) {
      REQUIRE(replay.pre_stop_states[k].t == out.pre_stop_states[k].t);
      REQUIRE(replay.pre_stop_states[k].x == out.pre_stop_states[k].x);
    }
  }

  REQUIRE_THROWS_AS(simulate_trajectory({0.0, Eigen::VectorXd::Zero(2)}, disk, kOrders, 0.01,
                                        coll),
                    std::invalid_argument);
  Eigen::VectorXd outside = Eigen::VectorXd::Constant(2, 0.9);
  REQUIRE_THROWS_AS(simulate_trajectory({0.5, outside}, disk, kOrders, 0.01, coll),
                    std::invalid_argument);
}

TEST_CASE("time-crossing statistics match subordinator theory") {
  // Effectively unbounded domain: every stop is a clock crossing, and the
  // pre-stop sum of e^{-lambda Y} ds tests the weighted-kernel bound that
  // drives the contraction constant.
  const auto big = huge_box(2);
  const double ds = 5e-3, t0 = 1.0;
  const int n = 3000;
  const long budget = default_max_steps(t0, ds);
  double k2 = 0.0, k5 = 0.0, steps = 0.0, steps2 = 0.0;
  RngStream r(6001, 3);
  for (int i = 0; i < n; ++i) {
    const auto out =
        simulate_trajectory({t0, Eigen::VectorXd::Zero(2)}, big, kOrders, ds, r, JumpLaw::bgr,
                            budget);
    REQUIRE(out.stop_cause == StopCause::time_crossing);
    REQUIRE_FALSE(out.truncated);
    double s2 = 0.0, s5 = 0.0;
    for (const auto& st : out.pre_stop_states) {
      const double y = t0 - st.t;
      s2 += std::exp(-2.0 * y);
      s5 += std::exp(-5.0 * y);
    }
    k2 += s2 * ds;
    k5 += s5 * ds;
    const double l_star = static_cast<double>(out.n_pre) + 1.0;
    steps += l_star;
    steps2 += l_star * l_star;
  }
  // Kernel bound 1.1/lambda^beta (beta = 0.6).
  REQUIRE(k2 / n <= 1.1 * 0.65975395538644712969);
  REQUIRE(k5 / n <= 1.1 * 0.38073078774317569798);
  // ... and the estimate is genuinely near 1/lambda^beta, not trivially small.
  REQUIRE(k2 / n >= 0.85 * 0.65975395538644712969);
  REQUIRE(k5 / n >= 0.85 * 0.38073078774317569798);

  // First crossing of level t0: E[tau] = t0^beta / Gamma(1+beta); the discrete
  // index overshoots by O(ds).
  const double mean_s = steps / n * ds;
  const double sd = std::sqrt(std::max(steps2 / n - (steps / n) * (steps / n), 0.0)) * ds;
  const double expected = 1.0 / std::exp(log_gamma(1.6));
  REQUIRE(std::abs(mean_s - expected) < 3.0 * sd / std::sqrt(static_cast<double>(n)) + 2.0 * ds);
}

TEST_CASE("exit probability is stable under step halving") {
  const auto disk = DomainSpec::unit_ball(2);
  Eigen::VectorXd x0(2);
  x0 << 0.3, 0.2;
  const int n = 4000;
  double p[2];
  int k = 0;
  for (const double ds : {0.02, 0.01}) {
    RngStream r(5150, static_cast<std::uint64_t>(1000 + k));
    int exits = 0;
    for (int i = 0; i < n; ++i)
      exits += simulate_trajectory({1.0, x0}, disk, kOrders, ds, r).stop_cause ==
               StopCause::spatial_exit;
    p[k++] = static_cast<double>(exits) / n;
  }
  const double pbar = 0.5 * (p[0] + p[1]);
  const double se_diff = std::sqrt(2.0 * pbar * (1.0 - pbar) / n);
  REQUIRE(std::abs(p[0] - p[1]) < 3.0 * se_diff);
}

TEST_CASE("payoff routes to the initial or exterior datum") {
  const auto disk = DomainSpec::unit_ball(2);
  const MarkerProblem marker;
  const ZeroProblem zero;
  RngStream r(33, 7);
  int seen_cross = 0, seen_exit = 0;
  for (int i = 0; i < 300; ++i) {
    const auto out = simulate_trajectory({0.05, Eigen::VectorXd::Zero(2)}, disk, kOrders, 5e-3, r);
    REQUIRE(evaluate_payoff(out, zero) == 0.0);
    if (out.stop_cause == StopCause::time_crossing) {
      ++seen_cross;
      REQUIRE(evaluate_payoff(out, marker) == 1.0);
    } else {
      ++seen_exit;
      REQUIRE(evaluate_payoff(out, marker) == out.stop_state.t);
      REQUIRE(out.stop_state.t > 0.0);
    }
  }
  REQUIRE(seen_cross > 0);  // t = 0.05 crosses fast
  REQUIRE(seen_exit > 0);   // but jumps still escape the disk often
}

TEST_CASE("step budget exhaustion flags truncation") {
  const auto big = huge_box(2);
  RngStream r(44, 1);
  const auto out = simulate_trajectory({1.0, Eigen::VectorXd::Zero(2)}, big, kOrders, 1e-4, r,
                                       JumpLaw::bgr, 3);
  REQUIRE(out.truncated);
  REQUIRE(out.stop_cause == StopCause::time_crossing);
  REQUIRE(out.n_pre == 3);
  REQUIRE(out.pre_stop_states.size() == 4);
  REQUIRE(out.stop_state.t > 0.0);  // never actually crossed
  const MarkerProblem marker;
  REQUIRE(evaluate_payoff(out, marker) == 1.0);  // clamped initial-datum branch

  REQUIRE(default_max_steps(1.0, 2e-2) == 400 + 10000);
}
