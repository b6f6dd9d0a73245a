#pragma once

// Error metrics: terminal-time slice RMSE on a uniform lattice restricted to
// the domain, spacetime RMSE on a seeded random ensemble, and least-squares
// convergence-order fits.  Evaluation grids are built once (they cache exact
// values) and are immutable afterwards; evaluation is read-only over frozen
// networks.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fracdpi/neural.hpp"
#include "fracdpi/problems.hpp"
#include "fracdpi/rng.hpp"
#include "fracdpi/sampler.hpp"

namespace fracdpi {

struct EvalGrid {
  Eigen::MatrixXd states;  // (1+d) x S columns (t; x)
  Eigen::VectorXd exact;   // u_ex at the columns
};

// Uniform resolution x resolution lattice over the bounding square of the
// first two coordinates (remaining coordinates zero), restricted to the open
// domain, at the terminal time.
inline EvalGrid make_slice_grid(const ProblemSpec& p, int resolution = 201) {
  if (!p.has_exact()) throw std::invalid_argument("make_slice_grid: problem has no exact solution");
  if (resolution < 2) throw std::invalid_argument("make_slice_grid: resolution must be >= 2");
  const int d = p.domain.d;
  const bool ball = p.domain.kind == DomainSpec::Kind::unit_ball;
  const double lo0 = ball ? -1.0 : p.domain.lo[0], hi0 = ball ? 1.0 : p.domain.hi[0];
  const double lo1 = d > 1 ? (ball ? -1.0 : p.domain.lo[1]) : 0.0;
  const double hi1 = d > 1 ? (ball ? 1.0 : p.domain.hi[1]) : 0.0;

  std::vector<Eigen::VectorXd> nodes;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < resolution; ++i) {
    x[0] = lo0 + (hi0 - lo0) * i / (resolution - 1);
    if (d == 1) {
      if (p.domain.contains(x)) nodes.push_back(x);
      continue;
    }
    for (int j = 0; j < resolution; ++j) {
      x[1] = lo1 + (hi1 - lo1) * j / (resolution - 1);
      if (p.domain.contains(x)) nodes.push_back(x);
    }
  }
  if (nodes.empty()) throw std::invalid_argument("make_slice_grid: no lattice node inside domain");

  EvalGrid g;
  g.states.resize(1 + d, static_cast<Eigen::Index>(nodes.size()));
  g.exact.resize(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(k);
    g.states(0, c) = p.horizon;
    g.states.col(c).tail(d) = nodes[k];
    g.exact[c] = p.exact(p.horizon, nodes[k]);
  }
  return g;
}

// n_times slices equally spaced in [0.1 T, T], pts_per_time fresh uniform
// positions per slice.  Positions come from the collocation sampler (its time
// draws are discarded, keeping one sampling code path).
inline EvalGrid make_spacetime_grid(const ProblemSpec& p, int n_times, int pts_per_time,
                                    RngStream& stream) {
  if (!p.has_exact())
    throw std::invalid_argument("make_spacetime_grid: problem has no exact solution");
  if (n_times < 1 || pts_per_time < 1)
    throw std::invalid_argument("make_spacetime_grid: need at least one time and point");
  const auto pts = sample_collocation(p.domain, p.horizon,
                                      static_cast<std::size_t>(n_times) * pts_per_time, stream);
  EvalGrid g;
  const int d = p.domain.d;
  g.states.resize(1 + d, static_cast<Eigen::Index>(pts.size()));
  g.exact.resize(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto l = static_cast<int>(k) / pts_per_time;
    // Divide before scaling so the last slice lands on the horizon exactly.
    const double frac = static_cast<double>(l) / std::max(n_times - 1, 1);
    const double t = n_times == 1 ? p.horizon : p.horizon * (0.1 + 0.9 * frac);
    const auto c = static_cast<Eigen::Index>(k);
    g.states(0, c) = t;
    g.states.col(c).tail(d) = pts[k].x;
    g.exact[c] = p.exact(t, pts[k].x);
  }
  return g;
}

template <class BatchedU>
double rmse_on(const EvalGrid& grid, BatchedU&& u) {
  const Eigen::VectorXd pred = u(grid.states);
  if (pred.size() != grid.exact.size())
    throw std::invalid_argument("rmse_on: evaluator returned wrong batch size");
  return std::sqrt((pred - grid.exact).squaredNorm() / static_cast<double>(grid.exact.size()));
}

template <class BatchedU>
double slice_rmse(BatchedU&& u, const ProblemSpec& p, int resolution = 201) {
  return rmse_on(make_slice_grid(p, resolution), u);
}
inline double slice_rmse(const NetworkState& net, const NetArchitecture& arch,
                         const ProblemSpec& p, int resolution = 201) {
  return slice_rmse(make_u_evaluator(net, arch), p, resolution);
}

template <class BatchedU>
double spacetime_rmse(BatchedU&& u, const ProblemSpec& p, RngStream& stream, int n_times = 10,
                      int pts_per_time = 1000) {
  return rmse_on(make_spacetime_grid(p, n_times, pts_per_time, stream), u);
}
inline double spacetime_rmse(const NetworkState& net, const NetArchitecture& arch,
                             const ProblemSpec& p, RngStream& stream, int n_times = 10,
                             int pts_per_time = 1000) {
  return spacetime_rmse(make_u_evaluator(net, arch), p, stream, n_times, pts_per_time);
}

// Least-squares slope of log(err) against log(x).
inline double fit_convergence_order(const std::vector<double>& xs,
                                    const std::vector<double>& errs) {
  if (xs.size() != errs.size() || xs.size() < 2)
    throw std::invalid_argument("fit_convergence_order: need two or more (x, err) pairs");
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(errs[i] > 0.0))
      throw std::domain_error("fit_convergence_order: entries must be positive");
    mx += std::log(xs[i]);
    my += std::log(errs[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = std::log(xs[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(errs[i]) - my);
  }
  if (!(sxx > 0.0)) throw std::domain_error("fit_convergence_order: xs must not be constant");
  return sxy / sxx;
}

}  // namespace fracdpi
