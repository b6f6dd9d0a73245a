#pragma once

// Monte Carlo regression labels from stopped trajectories: per path, terminal
// payoff plus path quadrature of the reaction term f(t, u(t,x), x) along the
// pre-stopping states, averaged over the M paths of a collocation point, then
// blended with the current iterate (Picard relaxation).
//
// Reductions use compensated (Kahan) summation in a fixed order (path-major,
// then step order), so a label is bit-reproducible for given draws no matter
// how points are distributed over threads.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fracdpi/trajectory.hpp"
#include "fracdpi/types.hpp"

namespace fracdpi {

namespace detail {

struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double v) {
    const double y = v - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
};

}  // namespace detail

enum class QuadRule { rectangle, trapezoid };

// Right-point rule over f_1..f_N: ds * sum f_l.
inline double quad_rectangle(const std::vector<double>& f_values, double ds) {
  detail::KahanSum ks;
  for (const double f : f_values) ks.add(f);
  return ds * ks.s;
}

// Trapezoid over f_0..f_N (f_0 belongs to the start point): ds * sum (f_{l-1}+f_l)/2.
inline double quad_trapezoid(const std::vector<double>& f_values, double ds) {
  detail::KahanSum ks;
  for (std::size_t l = 1; l < f_values.size(); ++l)
    ks.add(0.5 * (f_values[l - 1] + f_values[l]));
  return ds * ks.s;
}

struct PointLabel {
  double raw = 0.0;
  double variance = 0.0;  // unbiased over paths; 0 when M = 1
  int truncated = 0;      // paths that exhausted the step budget
};

// One label from the M paths of a collocation point.  `u` is a batched
// evaluator of the frozen iterate: it receives a (1+d) x S matrix whose
// columns are (t; x) states and returns the S values u(t,x).  `problem` must
// expose f(t, u, x), u0(x), g(t, x).
template <class BatchedU, class Problem>
PointLabel make_label(const SpaceTimePoint& point, const std::vector<TrajectoryOutcome>& outcomes,
                      BatchedU&& u, const Problem& problem, QuadRule quad, double ds) {
  const std::size_t M = outcomes.size();
  if (M == 0) throw std::invalid_argument("make_label: need at least one path");
  const auto d = point.x.size();

  std::size_t total = 0;
  for (const auto& o : outcomes) total += o.pre_stop_states.size();
  Eigen::MatrixXd states(1 + d, static_cast<Eigen::Index>(total));
  Eigen::Index col = 0;
  for (const auto& o : outcomes)
    for (const auto& st : o.pre_stop_states) {
      states(0, col) = st.t;
      states.col(col).tail(d) = st.x;
      ++col;
    }
  const Eigen::VectorXd u_vals = u(states);

  PointLabel out;
  std::vector<double> path_values(M);
  std::vector<double> f_buf;
  detail::KahanSum mean_ks;
  col = 0;
  for (std::size_t m = 0; m < M; ++m) {
    const auto& o = outcomes[m];
    const std::size_t S = o.pre_stop_states.size();
    f_buf.resize(S);
    for (std::size_t l = 0; l < S; ++l) {
      const auto& st = o.pre_stop_states[l];
      f_buf[l] = problem.f(st.t, u_vals[col + static_cast<Eigen::Index>(l)], st.x);
    }
    col += static_cast<Eigen::Index>(S);

    double q;
    if (quad == QuadRule::trapezoid) {
      q = quad_trapezoid(f_buf, ds);
    } else {
      f_buf.erase(f_buf.begin());  // rectangle sums f_1..f_N only
      q = quad_rectangle(f_buf, ds);
    }
    const double v = evaluate_payoff(o, problem) + q;
    path_values[m] = v;
    mean_ks.add(v);
    out.truncated += o.truncated ? 1 : 0;
  }
  out.raw = mean_ks.s / static_cast<double>(M);
  if (M > 1) {
    detail::KahanSum var_ks;
    for (const double v : path_values) var_ks.add((v - out.raw) * (v - out.raw));
    out.variance = var_ks.s / static_cast<double>(M - 1);
  }
  return out;
}

// Picard relaxation: (1 - eta) * u_k(point) + eta * raw, elementwise.
// eta = 1 returns the raw labels bit-exactly.
inline Eigen::VectorXd relax_labels(const Eigen::VectorXd& raw, const Eigen::VectorXd& u_at_points,
                                    double eta) {
  if (!(eta > 0.0 && eta <= 1.0))
    throw std::invalid_argument("relax_labels: eta must lie in (0, 1]");
  if (raw.size() != u_at_points.size())
    throw std::invalid_argument("relax_labels: size mismatch");
  if (eta == 1.0) return raw;
  return (1.0 - eta) * u_at_points + eta * raw;
}

struct LabelBatch {
  std::vector<SpaceTimePoint> points;
  Eigen::VectorXd raw, relaxed, variance;
  std::vector<int> truncation_counts;
  long total_truncated = 0;
};

// Serial batch assembly over points (the solver parallelizes its own per-point
// loop; results are identical because every reduction here is per point).
template <class BatchedU, class Problem>
LabelBatch make_label_batch(const std::vector<SpaceTimePoint>& points,
                            const std::vector<std::vector<TrajectoryOutcome>>& outcomes,
                            BatchedU&& u, const Problem& problem, QuadRule quad, double ds,
                            double eta) {
  const std::size_t n = points.size();
  if (outcomes.size() != n) throw std::invalid_argument("make_label_batch: size mismatch");
  LabelBatch batch;
  batch.points = points;
  batch.raw.resize(static_cast<Eigen::Index>(n));
  batch.variance.resize(static_cast<Eigen::Index>(n));
  batch.truncation_counts.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto lbl = make_label(points[i], outcomes[i], u, problem, quad, ds);
    batch.raw[static_cast<Eigen::Index>(i)] = lbl.raw;
    batch.variance[static_cast<Eigen::Index>(i)] = lbl.variance;
    batch.truncation_counts[i] = lbl.truncated;
    batch.total_truncated += lbl.truncated;
  }
  const auto d = n == 0 ? 0 : points.front().x.size();
  Eigen::MatrixXd pts(1 + d, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    pts(0, static_cast<Eigen::Index>(i)) = points[i].t;
    pts.col(static_cast<Eigen::Index>(i)).tail(d) = points[i].x;
  }
  batch.relaxed = relax_labels(batch.raw, u(pts), eta);
  return batch;
}

}  // namespace fracdpi
