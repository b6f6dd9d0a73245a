#pragma once

// Outer Deep Picard driver.  The iterate starts at u^{(0)} == 0 (exact-zero
// network).  Each iteration draws a fresh collocation sample, simulates M
// coupled subordinator / walk-on-spheres paths per point, turns them into
// relaxed Monte Carlo labels against the frozen iterate, and retrains the
// network on those labels warm-started from the previous parameters.
//
// Reproducibility: every random draw comes from a stream keyed by
// (seed, purpose, iteration, point, path), and all cross-point reductions run
// in point-index order, so a run's records depend only on (config, problem)
// and never on the worker-thread count.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fracdpi/labels.hpp"
#include "fracdpi/metrics.hpp"
#include "fracdpi/neural.hpp"
#include "fracdpi/problems.hpp"
#include "fracdpi/rng.hpp"
#include "fracdpi/sampler.hpp"
#include "fracdpi/trajectory.hpp"

namespace fracdpi {

struct PicardConfig {
  int K = 10;    // Picard iterations
  int N = 1024;  // collocation points per iteration
  int M = 8;     // Monte Carlo paths per point
  double ds = 2e-2;
  double eta = 0.6;
  QuadRule quad = QuadRule::trapezoid;
  JumpLaw jump_law = JumpLaw::bgr;
  std::uint64_t seed = 0;
  bool reset_adam_moments = true;  // fresh moments each iteration, warm-started params
  int n_threads = 1;               // label-generation workers; never changes results
  long max_steps = -1;             // per-path step budget; -1 derives it from (T, ds)
  int slice_resolution = 201;
  int eval_times = 10;  // spacetime evaluation: slices x points per slice
  int eval_points_per_time = 1000;
  NetArchitecture arch;  // phi is replaced by the problem's boundary factor
  TrainConfig train;

  void validate() const {
    if (K < 1 || N < 1 || M < 1) throw std::invalid_argument("PicardConfig: K, N, M must be >= 1");
    if (!(ds > 0.0)) throw std::invalid_argument("PicardConfig: ds must be positive");
    if (!(eta > 0.0 && eta <= 1.0))
      throw std::invalid_argument("PicardConfig: eta must lie in (0, 1]");
    if (n_threads < 1) throw std::invalid_argument("PicardConfig: n_threads must be >= 1");
    if (max_steps == 0 || max_steps < -1)
      throw std::invalid_argument("PicardConfig: max_steps must be positive or -1");
    if (slice_resolution < 2)
      throw std::invalid_argument("PicardConfig: slice_resolution must be >= 2");
    if (eval_times < 1 || eval_points_per_time < 1)
      throw std::invalid_argument("PicardConfig: evaluation set sizes must be >= 1");
    train.validate();
  }
};

struct IterationRecord {
  int iteration = 0;  // 1-based
  // RMSE columns stay NaN when the problem carries no exact solution.
  double slice_rmse = std::numeric_limits<double>::quiet_NaN();
  double spacetime_rmse = std::numeric_limits<double>::quiet_NaN();
  // Mean/max over points of the variance of the M-path label mean (the
  // per-path sample variance divided by M); identically 0 when M = 1.
  double mean_label_variance = 0.0;
  double max_label_variance = 0.0;
  long truncated_paths = 0;
  bool truncation_warning = false;  // > 1% of the iteration's paths truncated
  double final_train_loss = 0.0;
  double seconds = 0.0;  // wall time; reporting only, excluded from metrics.csv
};

struct PicardRun {
  PicardConfig config;  // echo (with phi attached to the architecture)
  std::string problem_name;
  std::vector<IterationRecord> records;  // one per completed iteration
  std::vector<NetworkState> iterates;    // network snapshot after each iteration
  NetworkState net;                      // final (or last completed) state
  bool diverged = false;
  std::string divergence_message;
  std::vector<std::string> warnings;
};

inline PicardRun run_picard(const ProblemSpec& problem, const PicardConfig& config) {
  config.validate();
  problem.orders.validate();
  if (!problem.u0 || !problem.g || !problem.f || !problem.phi)
    throw std::invalid_argument("run_picard: problem must define u0, g, f, and phi");
  NetArchitecture arch = config.arch;
  if (arch.input_dim != problem.domain.d + 1)
    throw std::invalid_argument("run_picard: arch.input_dim must equal d + 1");
  arch.phi = problem.phi;  // hard constraint u = phi * v
  arch.validate();

  PicardRun run;
  run.config = config;
  run.config.arch = arch;
  run.problem_name = problem.name;

  RngStream init_stream(config.seed, make_stream_id(StreamPurpose::network_init, 0, 0, 0));
  run.net = init_network(arch, init_stream);  // exact zero function

  // Evaluation sets are fixed once per run (seed-derived), so the per-iteration
  // curves are comparable within and across configs.
  const bool scored = problem.has_exact();
  EvalGrid slice_grid, spacetime_grid;
  if (scored) {
    slice_grid = make_slice_grid(problem, config.slice_resolution);
    RngStream eval_stream(config.seed, make_stream_id(StreamPurpose::evaluation, 0, 0, 0));
    spacetime_grid =
        make_spacetime_grid(problem, config.eval_times, config.eval_points_per_time, eval_stream);
  }

  const auto u_net = make_u_evaluator(run.net, arch);
  const long budget =
      config.max_steps > 0 ? config.max_steps : default_max_steps(problem.horizon, config.ds);
  const int d = problem.domain.d;

  for (int k = 0; k < config.K; ++k) {
    const auto t_start = std::chrono::steady_clock::now();
    const auto iter_id = static_cast<std::uint64_t>(k + 1);

    RngStream coll_stream(config.seed, make_stream_id(StreamPurpose::collocation, iter_id, 0, 0));
    const std::vector<SpaceTimePoint> pts =
        sample_collocation(problem.domain, problem.horizon, config.N, coll_stream);

    // Simulation + labeling, parallel across points.  Each point's work reads
    // only frozen state and writes its own slot, so the partition is free.
    std::vector<PointLabel> labels(pts.size());
    auto process = [&](std::size_t first, std::size_t stride) {
      std::vector<TrajectoryOutcome> outcomes(static_cast<std::size_t>(config.M));
      for (std::size_t i = first; i < pts.size(); i += stride) {
        for (int m = 0; m < config.M; ++m) {
          RngStream path_stream(
              config.seed, make_stream_id(StreamPurpose::trajectory, iter_id, i,
                                          static_cast<std::uint64_t>(m)));
          outcomes[static_cast<std::size_t>(m)] =
              simulate_trajectory(pts[i], problem.domain, problem.orders, config.ds, path_stream,
                                  config.jump_law, budget);
        }
        labels[i] = make_label(pts[i], outcomes, u_net, problem, config.quad, config.ds);
      }
    };
    if (config.n_threads == 1) {
      process(0, 1);
    } else {
      std::vector<std::thread> workers;
      workers.reserve(static_cast<std::size_t>(config.n_threads));
      for (int w = 0; w < config.n_threads; ++w)
        workers.emplace_back(process, static_cast<std::size_t>(w),
                             static_cast<std::size_t>(config.n_threads));
      for (auto& worker : workers) worker.join();
    }

    Eigen::MatrixXd z(1 + d, config.N);
    Eigen::VectorXd raw(config.N), variance(config.N);
    long truncated = 0;
    for (int i = 0; i < config.N; ++i) {
      const auto& p = pts[static_cast<std::size_t>(i)];
      z(0, i) = p.t;
      z.col(i).tail(d) = p.x;
      const auto& lbl = labels[static_cast<std::size_t>(i)];
      raw[i] = lbl.raw;
      variance[i] = lbl.variance;
      truncated += lbl.truncated;
    }
    const Eigen::VectorXd targets = relax_labels(raw, u_net(z), config.eta);

    if (config.reset_adam_moments) {
      run.net.adam_m.setZero();
      run.net.adam_v.setZero();
      run.net.step_count = 0;
    }
    RngStream shuffle_stream(config.seed, make_stream_id(StreamPurpose::shuffle, iter_id, 0, 0));
    TrainResult trained;
    try {
      trained = train_regression(run.net, arch, z, targets, config.train, shuffle_stream);
    } catch (const std::runtime_error& err) {
      run.diverged = true;
      run.divergence_message = "iteration " + std::to_string(k + 1) + ": " + err.what();
      return run;  // partial records; net is the last completed iterate
    }
    run.net = std::move(trained.state);

    IterationRecord rec;
    rec.iteration = k + 1;
    rec.mean_label_variance = variance.mean() / static_cast<double>(config.M);
    rec.max_label_variance = variance.maxCoeff() / static_cast<double>(config.M);
    rec.truncated_paths = truncated;
    rec.final_train_loss =
        trained.loss_trace.empty() ? trained.initial_loss : trained.loss_trace.back();
    const double truncated_fraction = static_cast<double>(truncated) /
                                      (static_cast<double>(config.N) * static_cast<double>(config.M));
    if (truncated_fraction > 0.01) {
      rec.truncation_warning = true;
      run.warnings.push_back("iteration " + std::to_string(k + 1) + ": " +
                             std::to_string(100.0 * truncated_fraction) +
                             "% of paths exhausted the step budget");
    }
    if (scored) {
      rec.slice_rmse = rmse_on(slice_grid, u_net);
      rec.spacetime_rmse = rmse_on(spacetime_grid, u_net);
    }
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    run.records.push_back(rec);
    run.iterates.push_back(run.net);
  }
  return run;
}

struct LabelNoiseRow {
  int iteration = 0;
  double mean_variance = 0.0;
  double max_variance = 0.0;
  // mean_variance / spacetime_rmse^2: how far the Monte Carlo noise floor sits
  // from the achieved error; NaN when the run carries no exact solution.
  double variance_to_mse = std::numeric_limits<double>::quiet_NaN();
};

struct LabelNoiseReport {
  bool variance_defined = true;  // false for M = 1: single-path labels have no spread estimate
  std::vector<LabelNoiseRow> rows;  // one per completed iteration
};

inline LabelNoiseReport label_noise_report(const PicardRun& run) {
  LabelNoiseReport report;
  report.variance_defined = run.config.M > 1;
  report.rows.reserve(run.records.size());
  for (const auto& rec : run.records) {
    LabelNoiseRow row;
    row.iteration = rec.iteration;
    row.mean_variance = rec.mean_label_variance;
    row.max_variance = rec.max_label_variance;
    if (std::isfinite(rec.spacetime_rmse) && rec.spacetime_rmse > 0.0)
      row.variance_to_mse = rec.mean_label_variance / (rec.spacetime_rmse * rec.spacetime_rmse);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace fracdpi
