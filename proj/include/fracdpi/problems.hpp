#pragma once

// Benchmark problems: fractional orders, domain, initial/exterior data, the
// reaction f(t,u,x), the hard-constraint boundary factor, and (for the
// manufactured cases) the exact solution u_ex(t,x) = t^beta * profile(x).
// Reactions are assembled so that substituting u_ex solves the PDE exactly;
// profiles without a closed-form fractional Laplacian take a precomputed
// spectral ForcingGrid instead of the ball constant.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

#include "fracdpi/domain.hpp"
#include "fracdpi/forcing.hpp"
#include "fracdpi/specfun.hpp"
#include "fracdpi/types.hpp"

namespace fracdpi {

enum class Setting { A, B };  // A: quadratic reaction; B: cubic (u - u^3)

struct ProblemSpec {
  std::string name;
  FracOrders orders;
  DomainSpec domain;
  double horizon = 1.0;
  std::function<double(const Eigen::VectorXd&)> u0;                 // initial datum
  std::function<double(double, const Eigen::VectorXd&)> g;          // exterior datum
  std::function<double(double, double, const Eigen::VectorXd&)> f;  // reaction f(t, u, x)
  std::function<double(double, const Eigen::VectorXd&)> exact;      // empty when unknown
  std::function<double(const Eigen::VectorXd&)> phi;                // boundary factor

  bool has_exact() const { return static_cast<bool>(exact); }
};

// ---- spatial profiles ------------------------------------------------------

// (1 - |x|^2)_+^{alpha/2}: the ball eigen-profile with a constant fractional
// Laplacian inside the unit ball.
inline std::function<double(const Eigen::VectorXd&)> ball_profile(double alpha) {
  return [alpha](const Eigen::VectorXd& x) {
    const double s = 1.0 - x.squaredNorm();
    return s > 0.0 ? std::pow(s, 0.5 * alpha) : 0.0;
  };
}

// (1 - x1^2)_+^2 (1 - x2^2)_+^2 on the square
inline double square_profile(double x0, double x1) {
  const double a = std::max(0.0, 1.0 - x0 * x0), b = std::max(0.0, 1.0 - x1 * x1);
  return a * a * b * b;
}

struct DoubleBumpParams {
  Eigen::Vector2d c1{-0.35, 0.0}, c2{0.35, 0.0};
  double radius = 0.55;
  double amplitude = 0.8;  // weight of the second bump

  void validate() const {
    if (!(radius > 0.0)) throw std::invalid_argument("DoubleBumpParams: radius must be positive");
    if (c1.norm() + radius >= 1.0 || c2.norm() + radius >= 1.0)
      throw std::invalid_argument("DoubleBumpParams: bump supports must stay inside the unit disk");
    if ((c1 - c2).norm() >= 2.0 * radius)
      throw std::invalid_argument("DoubleBumpParams: bump supports must partially overlap");
  }
};

// psi(x) = bump(x - c1) + amplitude * bump(x - c2), bump(y) = (1-|y|^2/r^2)_+^{1+alpha/2}
inline std::function<double(double, double)> double_bump_profile(double alpha,
                                                                 const DoubleBumpParams& p = {}) {
  p.validate();
  const double expo = 1.0 + 0.5 * alpha, r2 = p.radius * p.radius;
  return [p, expo, r2](double x0, double x1) {
    const Eigen::Vector2d x(x0, x1);
    const double s1 = 1.0 - (x - p.c1).squaredNorm() / r2;
    const double s2 = 1.0 - (x - p.c2).squaredNorm() / r2;
    return (s1 > 0.0 ? std::pow(s1, expo) : 0.0) +
           p.amplitude * (s2 > 0.0 ? std::pow(s2, expo) : 0.0);
  };
}

// ---- factories -------------------------------------------------------------

namespace detail {

// f(t,u,x) for a manufactured u_ex = t^beta * profile whose fractional
// Laplacian is t^beta * op(x).  Setting A: f = u^2 + gA; B: f = (u - u^3) + gB,
// with g chosen so u_ex solves d_t^beta u + (-Delta)^{alpha/2} u = f(t,u,x).
template <class Profile, class Op>
std::function<double(double, double, const Eigen::VectorXd&)> manufactured_reaction(
    Setting setting, double beta, Profile prof, Op op) {
  const double gamma1b = std::exp(log_gamma(1.0 + beta));  // Caputo of t^beta
  if (setting == Setting::A)
    return [gamma1b, beta, prof, op](double t, double u, const Eigen::VectorXd& x) {
      const double ph = prof(x), tb = std::pow(t, beta);
      const double ga = gamma1b * ph + tb * op(x) - std::pow(t, 2.0 * beta) * ph * ph;
      return u * u + ga;
    };
  return [gamma1b, beta, prof, op](double t, double u, const Eigen::VectorXd& x) {
    const double ph = prof(x), tb = std::pow(t, beta);
    const double gb = gamma1b * ph + tb * op(x) - (tb * ph - std::pow(t, 3.0 * beta) * ph * ph * ph);
    return (u - u * u * u) + gb;
  };
}

inline void check_forcing(const ForcingGrid& forcing, double alpha, double support_hi,
                          const char* who) {
  if (forcing.n < 2 || forcing.values.rows() != forcing.n)
    throw std::invalid_argument(std::string(who) + ": forcing grid missing or empty");
  if (std::fabs(forcing.alpha - alpha) > 1e-12)
    throw std::invalid_argument(std::string(who) + ": forcing grid was built for alpha " +
                                std::to_string(forcing.alpha) + ", problem uses " +
                                std::to_string(alpha));
  if (!forcing.covers(-support_hi, support_hi))
    throw std::invalid_argument(std::string(who) + ": forcing grid box does not cover the support");
}

}  // namespace detail

// Unit ball in R^d, exact solution t^beta (1-|x|^2)_+^{alpha/2}; the operator
// term is the closed-form ball constant.
inline ProblemSpec make_ball_problem(int d, Setting setting, double alpha = 1.5,
                                     double beta = 0.6) {
  FracOrders orders{alpha, beta};
  orders.validate();
  ProblemSpec p;
  p.name = "ball_" + std::string(setting == Setting::A ? "A" : "B") + "_d" + std::to_string(d);
  p.orders = orders;
  p.domain = DomainSpec::unit_ball(d);
  const double C = frac_laplacian_ball_constant(d, alpha);
  auto prof = ball_profile(alpha);
  p.phi = prof;
  p.u0 = [](const Eigen::VectorXd&) { return 0.0; };
  p.g = [](double, const Eigen::VectorXd&) { return 0.0; };
  p.exact = [prof, beta](double t, const Eigen::VectorXd& x) { return std::pow(t, beta) * prof(x); };
  p.f = detail::manufactured_reaction(setting, beta, prof,
                                      [C](const Eigen::VectorXd&) { return C; });
  return p;
}

inline ProblemSpec make_disk_problem(Setting setting, double alpha = 1.5, double beta = 0.6) {
  ProblemSpec p = make_ball_problem(2, setting, alpha, beta);
  p.name = std::string("disk_") + (setting == Setting::A ? "A" : "B");
  return p;
}

// Square (-1,1)^2 with profile (1-x1^2)_+^2 (1-x2^2)_+^2; the operator term is
// interpolated from a precomputed spectral grid.
inline ProblemSpec make_square_problem(Setting setting, const ForcingGrid& forcing,
                                       double alpha = 1.5, double beta = 0.6) {
  FracOrders orders{alpha, beta};
  orders.validate();
  detail::check_forcing(forcing, alpha, 1.0, "make_square_problem");
  ProblemSpec p;
  p.name = std::string("square_") + (setting == Setting::A ? "A" : "B");
  p.orders = orders;
  p.domain = DomainSpec::box(Eigen::Vector2d(-1.0, -1.0), Eigen::Vector2d(1.0, 1.0));
  auto prof = [](const Eigen::VectorXd& x) { return square_profile(x[0], x[1]); };
  auto grid = std::make_shared<const ForcingGrid>(forcing);
  p.phi = prof;
  p.u0 = [](const Eigen::VectorXd&) { return 0.0; };
  p.g = [](double, const Eigen::VectorXd&) { return 0.0; };
  p.exact = [prof, beta](double t, const Eigen::VectorXd& x) { return std::pow(t, beta) * prof(x); };
  p.f = detail::manufactured_reaction(setting, beta, prof,
                                      [grid](const Eigen::VectorXd& x) { return grid->interpolate(x); });
  return p;
}

// Unit disk with the asymmetric two-bump exact solution t^beta psi(x) and a
// quadratic reaction; psi's fractional Laplacian comes from the spectral grid.
// The boundary factor stays the disk default, so the constraint is not aligned
// with the solution profile.
inline ProblemSpec make_double_bump_problem(const ForcingGrid& forcing,
                                            const DoubleBumpParams& params = {},
                                            double alpha = 1.5, double beta = 0.6) {
  FracOrders orders{alpha, beta};
  orders.validate();
  params.validate();
  detail::check_forcing(forcing, alpha, 1.0, "make_double_bump_problem");
  ProblemSpec p;
  p.name = "double_bump";
  p.orders = orders;
  p.domain = DomainSpec::unit_ball(2);
  auto bump = double_bump_profile(alpha, params);
  auto prof = [bump](const Eigen::VectorXd& x) { return bump(x[0], x[1]); };
  auto grid = std::make_shared<const ForcingGrid>(forcing);
  p.phi = ball_profile(alpha);
  p.u0 = [](const Eigen::VectorXd&) { return 0.0; };
  p.g = [](double, const Eigen::VectorXd&) { return 0.0; };
  p.exact = [prof, beta](double t, const Eigen::VectorXd& x) { return std::pow(t, beta) * prof(x); };
  p.f = detail::manufactured_reaction(Setting::A, beta, prof,
                                      [grid](const Eigen::VectorXd& x) { return grid->interpolate(x); });
  return p;
}

// Homogeneous problem on the unit ball: u0 = g = f = 0, exact solution 0.
// Every Monte Carlo label vanishes, so the solver must stay at the zero
// iterate; useful as an end-to-end smoke test.
inline ProblemSpec make_zero_problem(int d, double alpha = 1.5, double beta = 0.6) {
  FracOrders orders{alpha, beta};
  orders.validate();
  ProblemSpec p;
  p.name = "zero_d" + std::to_string(d);
  p.orders = orders;
  p.domain = DomainSpec::unit_ball(d);
  p.phi = ball_profile(alpha);
  p.u0 = [](const Eigen::VectorXd&) { return 0.0; };
  p.g = [](double, const Eigen::VectorXd&) { return 0.0; };
  p.f = [](double, double, const Eigen::VectorXd&) { return 0.0; };
  p.exact = [](double, const Eigen::VectorXd&) { return 0.0; };
  return p;
}

// Algebraic PDE residual of a manufactured solution u_ex = t^beta * profile:
//   Gamma(beta+1) profile(x) + t^beta op(x) - f(t, u_ex(t,x), x)
// where op is an independent evaluation of the profile's fractional Laplacian.
// Zero to rounding for closed-form op; grid-consistency level when op comes
// from a refined grid.
inline double manufactured_residual(const ProblemSpec& p,
                                    const std::function<double(const Eigen::VectorXd&)>& profile,
                                    const std::function<double(const Eigen::VectorXd&)>& op,
                                    double t, const Eigen::VectorXd& x) {
  if (!p.has_exact()) throw std::invalid_argument("manufactured_residual: no exact solution");
  const double gamma1b = std::exp(log_gamma(1.0 + p.orders.beta));
  return gamma1b * profile(x) + std::pow(t, p.orders.beta) * op(x) - p.f(t, p.exact(t, x), x);
}

}  // namespace fracdpi
