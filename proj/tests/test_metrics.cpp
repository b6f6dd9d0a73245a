#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fracdpi/metrics.hpp"
#include "fracdpi/problems.hpp"
#include "fracdpi/rng.hpp"

using namespace fracdpi;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

auto exact_evaluator(const ProblemSpec& p) {
    return [&p](const Eigen::MatrixXd& states) {
        Eigen::VectorXd out(states.cols());
        const int d = p.domain.d;
        for (Eigen::Index i = 0; i < states.cols(); ++i)
            out[i] = p.exact(states(0, i), states.col(i).tail(d));
        return out;
    };
}

auto zero_evaluator() {
    return [](const Eigen::MatrixXd& states) {
        return Eigen::VectorXd(Eigen::VectorXd::Zero(states.cols()));
    };
}

}  // namespace

TEST_CASE("convergence-order fits recover power laws and reference slopes") {
    const std::vector<double> xs{4e-2, 2e-2, 1e-2, 5e-3};
    std::vector<double> lin, sqrt_law;
    for (double x : xs) {
        lin.push_back(3.7 * x);
        sqrt_law.push_back(0.2 * std::sqrt(x));
    }
    CHECK_THAT(fit_convergence_order(xs, lin), WithinAbs(1.0, 1e-12));
    CHECK_THAT(fit_convergence_order(xs, sqrt_law), WithinAbs(0.5, 1e-12));

    // scale invariance of the slope
    std::vector<double> scaled = sqrt_law;
    for (double& e : scaled) e *= 17.0;
    CHECK_THAT(fit_convergence_order(xs, scaled),
               WithinAbs(fit_convergence_order(xs, sqrt_law), 1e-12));

    // published step-size study: spacetime column fits ~0.81, slice ~0.74
    const std::vector<double> st{4.37e-2, 2.51e-2, 1.57e-2, 8.00e-3};
    const std::vector<double> sl{5.60e-2, 3.21e-2, 2.16e-2, 1.16e-2};
    CHECK_THAT(fit_convergence_order(xs, st), WithinRel(0.8025606928898867, 1e-12));
    CHECK_THAT(fit_convergence_order(xs, sl), WithinRel(0.7385448050411031, 1e-12));
    CHECK(std::fabs(fit_convergence_order(xs, st) - 0.81) < 0.05);

    CHECK_THROWS_AS(fit_convergence_order({1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_convergence_order({1.0, 2.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_convergence_order({1.0, 0.0}, {1.0, 1.0}), std::domain_error);
    CHECK_THROWS_AS(fit_convergence_order({1.0, 2.0}, {1.0, -0.5}), std::domain_error);
    CHECK_THROWS_AS(fit_convergence_order({2.0, 2.0}, {1.0, 0.5}), std::domain_error);
}

TEST_CASE("slice rmse matches direct lattice sums") {
    ProblemSpec p = make_disk_problem(Setting::A);
    CHECK(slice_rmse(exact_evaluator(p), p, 201) == 0.0);

    // zero predictor: RMSE is the RMS of t^beta phi over the in-disk lattice,
    // recomputed here with an independent double loop
    const int res = 101;
    double acc = 0.0;
    long count = 0;
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j) {
            Eigen::VectorXd x(2);
            x << -1.0 + 2.0 * i / (res - 1), -1.0 + 2.0 * j / (res - 1);
            if (!p.domain.contains(x)) continue;
            ++count;
            acc += std::pow(1.0 - x.squaredNorm(), 1.5);  // phi^2 at T=1
        }
    CHECK(count == make_slice_grid(p, res).states.cols());
    const double expect = std::sqrt(acc / static_cast<double>(count));
    CHECK_THAT(slice_rmse(zero_evaluator(), p, res), WithinRel(expect, 1e-13));

    // a biased predictor moves the metric by exactly the bias
    auto biased = [&p](const Eigen::MatrixXd& states) {
        Eigen::VectorXd out(states.cols());
        for (Eigen::Index i = 0; i < states.cols(); ++i)
            out[i] = p.exact(states(0, i), states.col(i).tail(2)) + 0.05;
        return out;
    };
    CHECK_THAT(slice_rmse(biased, p, res), WithinRel(0.05, 1e-12));

    // d > 2: cross-section through coordinates 1-2 with the rest zero
    ProblemSpec p5 = make_ball_problem(5, Setting::A);
    double acc5 = 0.0;
    long count5 = 0;
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j) {
            Eigen::VectorXd x(Eigen::VectorXd::Zero(5));
            x[0] = -1.0 + 2.0 * i / (res - 1);
            x[1] = -1.0 + 2.0 * j / (res - 1);
            if (!p5.domain.contains(x)) continue;
            ++count5;
            acc5 += std::pow(1.0 - x.squaredNorm(), 1.5);
        }
    CHECK_THAT(slice_rmse(zero_evaluator(), p5, res),
               WithinRel(std::sqrt(acc5 / static_cast<double>(count5)), 1e-13));

    ProblemSpec blind = p;
    blind.exact = nullptr;
    CHECK_THROWS_AS(slice_rmse(zero_evaluator(), blind, res), std::invalid_argument);
    CHECK_THROWS_AS(make_slice_grid(p, 1), std::invalid_argument);
}

TEST_CASE("spacetime rmse agrees with closed-form ensemble moments") {
    ProblemSpec p = make_disk_problem(Setting::A);
    RngStream s0(77, 1);
    CHECK(spacetime_rmse(exact_evaluator(p), p, s0) == 0.0);

    // zero predictor: mean square is (1/10) sum_l t_l^{2 beta} E[phi^2] with
    // E[phi^2] = integral of (1-r^2)^{3/2} over the uniform disk = 0.4
    RngStream s1(77, 2);
    const double rmse = spacetime_rmse(zero_evaluator(), p, s1);
    double ms = 0.0, var = 0.0;
    const double e2 = 0.4, e4 = 0.25;  // E[phi^2], E[phi^4]
    for (int l = 0; l < 10; ++l) {
        const double t = 0.1 + 0.9 * (l / 9.0);
        ms += std::pow(t, 1.2) * e2 / 10.0;
        var += (std::pow(t, 2.4) * (e4 - e2 * e2)) / 10.0;
    }
    const double se = std::sqrt(var / 10000.0);
    CHECK_THAT(rmse * rmse, WithinAbs(ms, 3.0 * se));

    // seed-reproducible, seed-sensitive
    RngStream s2(77, 2), s3(78, 2);
    CHECK(spacetime_rmse(zero_evaluator(), p, s2) == rmse);
    CHECK(spacetime_rmse(zero_evaluator(), p, s3) != rmse);

    // grids built from equal streams are bitwise identical
    RngStream g1(5, 9), g2(5, 9);
    const EvalGrid a = make_spacetime_grid(p, 10, 100, g1), b = make_spacetime_grid(p, 10, 100, g2);
    CHECK(a.states == b.states);
    CHECK(a.exact == b.exact);
    CHECK(a.states.row(0).minCoeff() == 0.1);
    CHECK(a.states.row(0).maxCoeff() == 1.0);

    auto bad = [](const Eigen::MatrixXd& m) { return Eigen::VectorXd(Eigen::VectorXd::Zero(m.cols() + 1)); };
    CHECK_THROWS_AS(rmse_on(a, bad), std::invalid_argument);
    CHECK_THROWS_AS(make_spacetime_grid(p, 0, 100, g1), std::invalid_argument);
}

TEST_CASE("network evaluators plug into the metrics") {
    ProblemSpec p = make_disk_problem(Setting::A);
    NetArchitecture arch;
    arch.input_dim = 3;
    arch.width = 8;
    arch.n_blocks = 1;
    arch.phi = p.phi;
    RngStream init(9, 1);
    const NetworkState net = init_network(arch, init);  // exact zero function

    const double direct = slice_rmse(zero_evaluator(), p, 101);
    CHECK(slice_rmse(net, arch, p, 101) == direct);
    RngStream sa(9, 2), sb(9, 2);
    CHECK(spacetime_rmse(net, arch, p, sa, 10, 200) ==
          spacetime_rmse(zero_evaluator(), p, sb, 10, 200));
}
