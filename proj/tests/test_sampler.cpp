#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fracdpi/sampler.hpp"

using namespace fracdpi;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Kolmogorov-Smirnov statistic of samples vs a cdf.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = cdf(xs[i]);
    ks = std::max(ks, std::max(std::abs(F - static_cast<double>(i) / n),
                               std::abs(F - static_cast<double>(i + 1) / n)));
  }
  return ks;
}

}  // namespace

TEST_CASE("domain membership is strict interior") {
  const auto ball = DomainSpec::unit_ball(3);
  Eigen::VectorXd x(3);
  x << 0.3, -0.4, 0.5;
  REQUIRE(ball.contains(x));
  x << 0.6, -0.8, 0.0;  // |x| = 1 exactly
  REQUIRE_FALSE(ball.contains(x));
  x << 0.0, 1.0000001, 0.0;
  REQUIRE_FALSE(ball.contains(x));

  Eigen::VectorXd lo(2), hi(2);
  lo << -1.0, -1.0;
  hi << 1.0, 1.0;
  const auto bx = DomainSpec::box(lo, hi);
  Eigen::VectorXd y(2);
  y << 0.999, -0.999;
  REQUIRE(bx.contains(y));
  y << 1.0, 0.0;
  REQUIRE_FALSE(bx.contains(y));

  REQUIRE_THROWS_AS(DomainSpec::unit_ball(0), std::invalid_argument);
  REQUIRE_THROWS_AS(DomainSpec::box(hi, lo), std::invalid_argument);
}

TEST_CASE("positive stable deterministic core matches references") {
  REQUIRE_THAT(positive_stable_from_uniforms(0.6, 0.3, 1.2),
               WithinRel(0.34697968260450865157, 1e-13));
  REQUIRE_THAT(positive_stable_from_uniforms(0.35, 0.77, 0.25),
               WithinRel(32.044863321236897091, 1e-13));
  REQUIRE_THAT(positive_stable_from_uniforms(0.6, 0.95, 0.02),
               WithinRel(277.8163175096821355, 1e-13));
  REQUIRE_THROWS_AS(positive_stable_from_uniforms(1.0, 0.5, 1.0), std::invalid_argument);

  // The wrapper consumes (uniform_pos, exponential) in that order.
  RngStream a(31, 4), b(31, 4);
  const double u = a.uniform_pos();
  const double e = a.exponential();
  REQUIRE(sample_positive_stable(0.6, b) == positive_stable_from_uniforms(0.6, u, e));

  RngStream c(31, 5), d(31, 5);
  REQUIRE(subordinator_increment(0.005, 0.6, c) ==
          std::pow(0.005, 1.0 / 0.6) * sample_positive_stable(0.6, d));
}

TEST_CASE("positive stable law has the right Laplace transform") {
  const int n = 100000;
  const double beta = 0.6;
  // Targets exp(-lambda^beta) for lambda in {0.5, 1, 2}, plus the composed
  // lambda = 2^{1/beta} whose transform is exactly exp(-2).
  const double lambdas[] = {0.5, 1.0, 2.0, 3.1748021039363989495};
  const double targets[] = {0.51697851862440230128, 0.36787944117144232160,
                            0.21965073408249827475, 0.13533528323661269189};
  RngStream r(777, 1);
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) draws[static_cast<std::size_t>(i)] = sample_positive_stable(beta, r);
  for (int k = 0; k < 4; ++k) {
    double s = 0.0, s2 = 0.0;
    for (const double eta : draws) {
      const double v = std::exp(-lambdas[k] * eta);
      s += v;
      s2 += v * v;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    INFO("lambda = " << lambdas[k]);
    REQUIRE(std::abs(mean - targets[k]) < 3.0 * se);
  }
}

TEST_CASE("subordinator increments compose across steps") {
  // 200 steps of ds = 0.005: Y is one-sided stable with E[e^{-Y}] = e^{-1}.
  const int n_paths = 20000, n_steps = 200;
  const double ds = 0.005, beta = 0.6;
  RngStream r(555, 9);
  double s = 0.0, s2 = 0.0;
  for (int p = 0; p < n_paths; ++p) {
    double y = 0.0;
    for (int k = 0; k < n_steps; ++k) y += subordinator_increment(ds, beta, r);
    const double v = std::exp(-y);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n_paths;
  const double se = std::sqrt((s2 / n_paths - mean * mean) / n_paths);
  REQUIRE(std::abs(mean - 0.36787944117144232160) < 3.0 * se);

  // Increments are strictly positive and shrink to 0 with ds.
  RngStream q(555, 10);
  for (int i = 0; i < 1000; ++i) REQUIRE(subordinator_increment(1e-8, beta, q) > 0.0);
}

TEST_CASE("sphere directions are unit and isotropic") {
  for (const int d : {2, 3, 20}) {
    RngStream r(808, static_cast<std::uint64_t>(d));
    const int n = (d == 3) ? 100000 : 20000;
    double m1 = 0.0, m11 = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd v = sample_sphere_direction(d, r);
      REQUIRE_THAT(v.norm(), WithinAbs(1.0, 1e-12));
      m1 += v[0];
      m11 += v[0] * v[0];
    }
    m1 /= n;
    m11 /= n;
    // Var(v_1) = 1/d; Var(v_1^2) = 3/(d(d+2)) - 1/d^2.
    const double se1 = std::sqrt(1.0 / d / n);
    const double se2 = std::sqrt((3.0 / (d * (d + 2.0)) - 1.0 / (d * d)) / n);
    INFO("d = " << d);
    REQUIRE(std::abs(m1) < 3.0 * se1);
    REQUIRE(std::abs(m11 - 1.0 / d) < 3.0 * se2);
  }
}

TEST_CASE("jump distance deterministic core matches quantile references") {
  const auto rule = WosStepRule{1.0, 2, 1.5};

  // omega = p gives the p-quantile J_p = r / sqrt(I^{-1}(1-p; a, b)).
  REQUIRE_THAT(jump_distance_from_uniform(rule, 0.25, JumpLaw::mirror),
               WithinRel(1.5170151551680716455, 1e-8));
  REQUIRE_THAT(jump_distance_from_uniform(rule, 0.50, JumpLaw::mirror),
               WithinRel(3.2736384457249627930, 1e-8));
  REQUIRE_THAT(jump_distance_from_uniform(rule, 0.75, JumpLaw::mirror),
               WithinRel(12.976830041875623253, 1e-6));
  REQUIRE_THAT(jump_distance_from_uniform(rule, 0.25, JumpLaw::bgr),
               WithinRel(1.0029824439210679597, 1e-9));
  REQUIRE_THAT(jump_distance_from_uniform(rule, 0.50, JumpLaw::bgr),
               WithinRel(1.0501978418625727779, 1e-9));
  REQUIRE_THAT(jump_distance_from_uniform(rule, 0.75, JumpLaw::bgr),
               WithinRel(1.3298276768034697796, 1e-9));

  // Clamped endpoints stay finite and respect J >= r.
  for (const auto law : {JumpLaw::mirror, JumpLaw::bgr}) {
    const double j0 = jump_distance_from_uniform(rule, 0.0, law);
    REQUIRE(j0 >= rule.radius);
    REQUIRE(j0 <= rule.radius * (1.0 + 1e-12));
    REQUIRE(std::isfinite(jump_distance_from_uniform(rule, 1.0, law)));
  }

  // Scaling in r is exact: J(r) = r * J(1) draw-for-draw.
  const auto rule2 = WosStepRule{0.037, 2, 1.5};
  REQUIRE_THAT(jump_distance_from_uniform(rule2, 0.5, JumpLaw::bgr),
               WithinRel(0.037 * 1.0501978418625727779, 1e-9));
}

TEST_CASE("jump distance empirical law matches the analytic cdf") {
  const auto rule = WosStepRule{1.0, 2, 1.5};
  const int n = 20000;
  struct Law {
    JumpLaw law;
    double a, b, tail10;  // P(J > 10 r)
  };
  const Law laws[] = {{JumpLaw::mirror, 0.25, 0.75, 0.28484786673760628025},
                      {JumpLaw::bgr, 0.75, 0.25, 0.0095208423572944170834}};
  for (const auto& L : laws) {
    RngStream r(909, static_cast<std::uint64_t>(L.law == JumpLaw::bgr));
    std::vector<double> js(n);
    int over10 = 0;
    for (int i = 0; i < n; ++i) {
      const double j = sample_jump_distance(rule, r, L.law);
      REQUIRE(j >= rule.radius);
      js[static_cast<std::size_t>(i)] = j;
      if (j > 10.0) ++over10;
    }
    const double ks = ks_statistic(js, [&](double g) {
      return 1.0 - beta_incomplete_reg(1.0 / (g * g), L.a, L.b);
    });
    INFO("law a=" << L.a << " b=" << L.b << " ks=" << ks);
    REQUIRE(ks < 0.012);  // 1.63/sqrt(n) is the 1% KS critical value
    const double se = std::sqrt(L.tail10 * (1.0 - L.tail10) / n);
    REQUIRE(std::abs(static_cast<double>(over10) / n - L.tail10) < 3.0 * se);
  }
}

TEST_CASE("wos step rule radius round-trips the operational step") {
  for (const auto& [ds, d, alpha] : {std::tuple{2e-2, 2, 1.5}, {5e-3, 20, 1.5}, {1e-2, 3, 0.8}}) {
    const auto rule = WosStepRule::from_step(ds, d, alpha);
    REQUIRE(rule.radius > 0.0);
    REQUIRE_THAT(mean_exit_time(rule.radius, d, alpha), WithinRel(ds, 1e-12));
  }
  REQUIRE_THROWS_AS(WosStepRule::from_step(-1.0, 2, 1.5), std::invalid_argument);
}

TEST_CASE("collocation points cover (0,T] x Omega uniformly") {
  const double T = 1.0;
  const int n = 100000;

  RngStream r1(11, 1);
  const auto ball2 = sample_collocation(DomainSpec::unit_ball(2), T, n, r1);
  REQUIRE(ball2.size() == static_cast<std::size_t>(n));
  double mt = 0.0, mr2 = 0.0;
  for (const auto& p : ball2) {
    REQUIRE(p.t > 0.0);
    REQUIRE(p.t <= T);
    REQUIRE(p.x.norm() < 1.0);
    mt += p.t;
    mr2 += p.x.squaredNorm();
  }
  // |x|^2 = U ~ Unif(0,1) in d=2, so both means target 1/2 with SE 1/sqrt(12n).
  const double se_u = 1.0 / std::sqrt(12.0 * n);
  REQUIRE(std::abs(mt / n - 0.5) < 3.0 * se_u * T);
  REQUIRE(std::abs(mr2 / n - 0.5) < 3.0 * se_u);

  // d = 20: |x|^20 ~ Unif(0,1).
  RngStream r2(11, 2);
  const auto ball20 = sample_collocation(DomainSpec::unit_ball(20), T, 20000, r2);
  double m20 = 0.0;
  for (const auto& p : ball20) m20 += std::pow(p.x.norm(), 20.0);
  REQUIRE(std::abs(m20 / 20000 - 0.5) < 3.0 / std::sqrt(12.0 * 20000.0));

  // Box coordinates are symmetric about 0.
  Eigen::VectorXd lo(2), hi(2);
  lo << -1.0, -1.0;
  hi << 1.0, 1.0;
  RngStream r3(11, 3);
  const auto sq = sample_collocation(DomainSpec::box(lo, hi), T, n, r3);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : sq) {
    REQUIRE(p.x.cwiseAbs().maxCoeff() < 1.0);
    mean += p.x;
  }
  const double se_c = std::sqrt(1.0 / 3.0 / n);  // Var(U(-1,1)) = 1/3
  REQUIRE(std::abs(mean[0] / n) < 3.0 * se_c);
  REQUIRE(std::abs(mean[1] / n) < 3.0 * se_c);

  REQUIRE_THROWS_AS(sample_collocation(DomainSpec::unit_ball(2), 0.0, 5, r3),
                    std::invalid_argument);
}
