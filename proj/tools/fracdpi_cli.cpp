// Command-line front end: experiment runner, benchmark suites, sampler
// self-checks, and forcing-grid precomputation.
//
// Exit codes: 0 ok, 1 check failure, 2 invalid input, 3 divergence, 4 I/O.
//
// Environment overrides (everything else lives in config files so runs stay
// reproducible from their summaries): FRACDPI_OUTPUT_DIR replaces the output
// directory, FRACDPI_THREADS replaces the thread count.

#include <CLI11.hpp>

#include <fracdpi/forcing.hpp>
#include <fracdpi/io.hpp>
#include <fracdpi/picard.hpp>
#include <fracdpi/problems.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace fracdpi;

constexpr int exit_ok = 0, exit_check = 1, exit_invalid = 2, exit_diverged = 3, exit_io = 4;

std::optional<std::string> env_string(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

void apply_env_overrides(std::string& output_dir, int& n_threads) {
  if (const auto dir = env_string("FRACDPI_OUTPUT_DIR")) output_dir = *dir;
  if (const auto th = env_string("FRACDPI_THREADS")) {
    const int n = std::atoi(th->c_str());
    if (n < 1) throw std::invalid_argument("FRACDPI_THREADS must be a positive integer");
    n_threads = n;
  }
}

// ---- run -------------------------------------------------------------------

int cmd_run(const std::string& config_path) {
  RunSetup setup;
  ProblemSpec problem;
  try {
    setup = load_run_config(config_path);
    apply_env_overrides(setup.output_dir, setup.picard.n_threads);
    problem = make_configured_problem(setup);
    setup.picard.arch.input_dim = problem.domain.d + 1;
    setup.picard.validate();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run: %s\n", e.what());
    return exit_invalid;
  }

  std::error_code ec;
  std::filesystem::create_directories(setup.output_dir, ec);
  if (ec) {
    std::fprintf(stderr, "run: cannot create output directory %s: %s\n", setup.output_dir.c_str(),
                 ec.message().c_str());
    return exit_io;
  }

  std::printf("problem %s  d=%d  alpha=%g beta=%g T=%g\n", problem.name.c_str(), problem.domain.d,
              problem.orders.alpha, problem.orders.beta, problem.horizon);
  const PicardRun run = run_picard(problem, setup.picard);
  for (const auto& r : run.records)
    std::printf("iter %2d  slice %-12.6g spacetime %-12.6g loss %-12.6g %5.1fs\n", r.iteration,
                r.slice_rmse, r.spacetime_rmse, r.final_train_loss, r.seconds);
  for (const auto& w : run.warnings) std::printf("warning: %s\n", w.c_str());
  if (run.diverged) std::fprintf(stderr, "run: diverged: %s\n", run.divergence_message.c_str());

  const auto out = [&](const char* name) {
    return (std::filesystem::path(setup.output_dir) / name).string();
  };
  try {
    write_metrics_csv(run, out("metrics.csv"));
    write_summary_json(run, problem, out("summary.json"));
    for (std::size_t k = 0; k < run.iterates.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "iter_%03zu.bin", k + 1);
      save_checkpoint(run.iterates[k], run.config.arch, out(name));
    }
    if (setup.write_slice && problem.exact) {
      const EvalGrid slice = make_slice_grid(problem, setup.picard.slice_resolution);
      write_grid_csv(slice, forward_batch(run.net, run.config.arch, slice.states), out("slice.csv"));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run: %s\n", e.what());
    return exit_io;
  }
  std::printf("wrote %s and %s\n", out("metrics.csv").c_str(), out("summary.json").c_str());
  return run.diverged ? exit_diverged : exit_ok;
}

// ---- sample-check ----------------------------------------------------------

struct CheckRow {
  std::string name;
  double statistic, bound;
  bool pass;
};

int cmd_sample_check(double alpha, double beta, int d, long n, unsigned long seed) {
  try {
    FracOrders{alpha, beta}.validate();
    if (d < 1) throw std::invalid_argument("d must be >= 1");
    if (n < 100) throw std::invalid_argument("n_samples must be >= 100");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sample-check: %s\n", e.what());
    return exit_invalid;
  }

  std::vector<CheckRow> rows;
  const auto add = [&](const std::string& name, double stat, double bound) {
    rows.push_back({name, stat, bound, stat < bound});
  };

  // Subordinator Laplace transform at a few decay rates.
  {
    RngStream r(seed, 1);
    std::vector<double> draws(static_cast<std::size_t>(n));
    for (auto& s : draws) s = sample_positive_stable(beta, r);
    for (const double lam : {0.5, 1.0, 2.0}) {
      double mean = 0.0, m2 = 0.0;
      for (const double s : draws) {
        const double v = std::exp(-lam * s);
        mean += v;
        m2 += v * v;
      }
      mean /= static_cast<double>(n);
      m2 /= static_cast<double>(n);
      const double se = std::sqrt(std::max(m2 - mean * mean, 0.0) / static_cast<double>(n));
      char name[64];
      std::snprintf(name, sizeof name, "laplace lambda=%.1f", lam);
      add(name, std::fabs(mean - std::exp(-std::pow(lam, beta))), 3.0 * se);
    }
  }

  // Sphere directions: unit norm, isotropy of first-coordinate moments.
  {
    RngStream r(seed, 2);
    double m1 = 0.0, m11 = 0.0, worst_norm = 0.0;
    for (long i = 0; i < n; ++i) {
      const Eigen::VectorXd v = sample_sphere_direction(d, r);
      worst_norm = std::max(worst_norm, std::fabs(v.norm() - 1.0));
      m1 += v[0];
      m11 += v[0] * v[0];
    }
    m1 /= static_cast<double>(n);
    m11 /= static_cast<double>(n);
    const double se1 = std::sqrt(1.0 / d / static_cast<double>(n));
    const double var2 = 3.0 / (d * (d + 2.0)) - 1.0 / (static_cast<double>(d) * d);
    add("sphere unit norm", worst_norm, 1e-12);
    add("sphere mean v1", std::fabs(m1), 4.0 * se1);
    add("sphere mean v1^2", std::fabs(m11 - 1.0 / d), 4.0 * std::sqrt(var2 / static_cast<double>(n)));
  }

  // Jump radial law at r=1 against its closed-form CDF (mirror Beta law).
  {
    WosStepRule rule;
    rule.radius = 1.0;
    rule.d = d;
    rule.alpha = alpha;
    RngStream r(seed, 3);
    std::vector<double> js(static_cast<std::size_t>(n));
    for (auto& j : js) j = sample_jump_distance(rule, r, JumpLaw::mirror);
    std::sort(js.begin(), js.end());
    const double a = 1.0 - 0.5 * alpha, b = 0.5 * alpha;
    double ks = 0.0;
    for (std::size_t i = 0; i < js.size(); ++i) {
      const double f = 1.0 - beta_incomplete_reg(1.0 / (js[i] * js[i]), a, b);
      const double lo = static_cast<double>(i) / static_cast<double>(n);
      const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
      ks = std::max({ks, std::fabs(f - lo), std::fabs(f - hi)});
    }
    add("jump KS", ks, 1.63 / std::sqrt(static_cast<double>(n)));  // 1% critical value
  }

  // Incomplete-beta inverse round-trip at the jump-law exponents.
  {
    RngStream r(seed, 4);
    const double a = 1.0 - 0.5 * alpha, b = 0.5 * alpha, B = beta_complete(a, b);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double y = B * std::min(std::max(r.uniform(), 1e-12), 1.0 - 1e-12);
      const double z = beta_incomplete_inverse(y, a, b);
      worst = std::max(worst, std::fabs(beta_incomplete(z, a, b) - y));
    }
    add("beta inverse round-trip", worst, 1e-9);
  }

  bool all_pass = true;
  std::printf("%-28s %14s %14s  result\n", "check", "statistic", "bound");
  for (const auto& row : rows) {
    all_pass = all_pass && row.pass;
    std::printf("%-28s %14.6g %14.6g  %s\n", row.name.c_str(), row.statistic, row.bound,
                row.pass ? "pass" : "FAIL");
  }
  return all_pass ? exit_ok : exit_check;
}

// ---- precompute-forcing ----------------------------------------------------

int cmd_precompute_forcing(const std::string& profile_name, double h, double lo, double hi,
                           double alpha, const std::string& out_path) {
  std::function<double(double, double)> profile;
  if (profile_name == "square_phi_R")
    profile = [](double x0, double x1) { return square_profile(x0, x1); };
  else if (profile_name == "double_bump")
    profile = double_bump_profile(alpha);
  else {
    std::fprintf(stderr, "precompute-forcing: unknown profile \"%s\" (square_phi_R | double_bump)\n",
                 profile_name.c_str());
    return exit_invalid;
  }

  ForcingGrid grid;
  double residue = 0.0;
  try {
    grid = precompute_forcing_fft(profile, h, lo, hi, alpha, &residue);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "precompute-forcing: %s\n", e.what());
    return exit_invalid;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "precompute-forcing: %s\n", e.what());
    return exit_check;  // aliasing residue above tolerance
  }
  std::printf("grid %dx%d on [%g,%g]^2, alpha=%g, aliasing residue %.3g\n", grid.n, grid.n, grid.lo,
              grid.hi, grid.alpha, residue);
  try {
    save_forcing(grid, out_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "precompute-forcing: %s\n", e.what());
    return exit_io;
  }
  std::printf("wrote %s\n", out_path.c_str());
  return exit_ok;
}

// ---- bench -----------------------------------------------------------------

PicardConfig bench_config() {
  PicardConfig c;
  c.K = 6;
  c.N = 1024;
  c.M = 8;
  c.ds = 2e-2;
  c.eta = 0.6;
  c.seed = 1;
  c.arch.width = 64;
  c.arch.n_blocks = 2;
  c.train.learning_rate = 2e-4;
  c.train.batch_size = 256;
  c.train.n_steps = 1500;
  c.eval_times = 10;
  c.eval_points_per_time = 1000;
  return c;
}

struct BenchResult {
  double slice = std::numeric_limits<double>::quiet_NaN();
  double spacetime = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
};

BenchResult bench_run(const ProblemSpec& p, PicardConfig c, int n_threads) {
  BenchResult res;
  c.arch.input_dim = p.domain.d + 1;
  c.n_threads = n_threads;
  try {
    const PicardRun run = run_picard(p, c);
    if (run.diverged || run.records.empty()) {
      std::fprintf(stderr, "bench: run on %s %s\n", p.name.c_str(),
                   run.diverged ? run.divergence_message.c_str() : "produced no records");
      return res;
    }
    res.slice = run.records.back().slice_rmse;
    res.spacetime = run.records.back().spacetime_rmse;
    res.ok = std::isfinite(res.spacetime);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bench: run on %s failed: %s\n", p.name.c_str(), e.what());
  }
  return res;
}

int write_bench_csv(const std::string& path, const std::string& header,
                    const std::vector<std::string>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::fprintf(stderr, "bench: cannot open %s\n", path.c_str());
    return exit_io;
  }
  out << header << '\n';
  for (const auto& r : rows) out << r << '\n';
  if (!out) {
    std::fprintf(stderr, "bench: write failed for %s\n", path.c_str());
    return exit_io;
  }
  std::printf("wrote %s\n", path.c_str());
  return exit_ok;
}

int cmd_bench(const std::string& suite, std::string outdir) {
  int n_threads = 1;
  try {
    apply_env_overrides(outdir, n_threads);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bench: %s\n", e.what());
    return exit_invalid;
  }
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) {
    std::fprintf(stderr, "bench: cannot create %s: %s\n", outdir.c_str(), ec.message().c_str());
    return exit_io;
  }
  const auto out = [&](const char* name) {
    return (std::filesystem::path(outdir) / name).string();
  };
  bool any_failed = false;
  std::vector<std::string> rows;
  const auto row3 = [](double key, const BenchResult& r) {
    return format_double(key) + "," + format_double(r.slice) + "," + format_double(r.spacetime);
  };

  if (suite == "disk_relaxation") {
    const ProblemSpec p = make_disk_problem(Setting::A);
    for (const double eta : {1.0, 0.8, 0.6}) {
      PicardConfig c = bench_config();
      c.eta = eta;
      const BenchResult r = bench_run(p, c, n_threads);
      any_failed = any_failed || !r.ok;
      rows.push_back(row3(eta, r));
      std::printf("eta %.1f  slice %.4g  spacetime %.4g\n", eta, r.slice, r.spacetime);
    }
    const int rc = write_bench_csv(out("disk_relaxation.csv"), "eta,slice_rmse,spacetime_rmse", rows);
    if (rc != exit_ok) return rc;
  } else if (suite == "disk_ds_sweep") {
    const ProblemSpec p = make_disk_problem(Setting::A);
    std::vector<double> hs, errs;
    for (const double ds : {8e-2, 4e-2, 2e-2, 1e-2}) {
      PicardConfig c = bench_config();
      c.ds = ds;
      const BenchResult r = bench_run(p, c, n_threads);
      any_failed = any_failed || !r.ok;
      rows.push_back(row3(ds, r));
      std::printf("ds %.0e  slice %.4g  spacetime %.4g\n", ds, r.slice, r.spacetime);
      if (r.ok) {
        hs.push_back(ds);
        errs.push_back(r.spacetime);
      }
    }
    if (hs.size() >= 2)
      std::printf("fitted spacetime order in ds: %.2f\n", fit_convergence_order(hs, errs));
    const int rc = write_bench_csv(out("disk_ds_sweep.csv"), "ds,slice_rmse,spacetime_rmse", rows);
    if (rc != exit_ok) return rc;
  } else if (suite == "disk_mc_sweep") {
    const ProblemSpec p = make_disk_problem(Setting::A);
    for (const int M : {4, 8, 16, 32}) {
      PicardConfig c = bench_config();
      c.N = 512;
      c.M = M;
      const BenchResult r = bench_run(p, c, n_threads);
      any_failed = any_failed || !r.ok;
      rows.push_back(row3(M, r));
      std::printf("M %2d  slice %.4g  spacetime %.4g\n", M, r.slice, r.spacetime);
    }
    const int rc = write_bench_csv(out("disk_mc_sweep.csv"), "M,slice_rmse,spacetime_rmse", rows);
    if (rc != exit_ok) return rc;
  } else if (suite == "quad_compare") {
    const ProblemSpec p = make_disk_problem(Setting::A);
    for (const double ds : {4e-2, 2e-2}) {
      PicardConfig c = bench_config();
      c.ds = ds;
      c.quad = QuadRule::rectangle;
      const BenchResult rect = bench_run(p, c, n_threads);
      c.quad = QuadRule::trapezoid;
      const BenchResult trap = bench_run(p, c, n_threads);
      any_failed = any_failed || !rect.ok || !trap.ok;
      const double rel = std::fabs(rect.spacetime - trap.spacetime) /
                         std::max(std::min(rect.spacetime, trap.spacetime), 1e-300);
      rows.push_back(format_double(ds) + "," + format_double(rect.spacetime) + "," +
                     format_double(trap.spacetime) + "," + format_double(rel));
      std::printf("ds %.0e  rectangle %.4g  trapezoid %.4g  rel diff %.3g\n", ds, rect.spacetime,
                  trap.spacetime, rel);
    }
    const int rc = write_bench_csv(out("quad_compare.csv"),
                                   "ds,rectangle_spacetime,trapezoid_spacetime,rel_diff", rows);
    if (rc != exit_ok) return rc;
  } else if (suite == "square" || suite == "double_bump") {
    ProblemSpec p;
    try {
      const double h = 4.0 / 256.0;
      if (suite == "square") {
        const ForcingGrid g = precompute_forcing_fft(
            [](double x0, double x1) { return square_profile(x0, x1); }, h, -2.0, 2.0, 1.5);
        save_forcing(g, out("square_forcing.bin"));
        p = make_square_problem(Setting::A, g);
      } else {
        const ForcingGrid g = precompute_forcing_fft(double_bump_profile(1.5), h, -2.0, 2.0, 1.5);
        save_forcing(g, out("double_bump_forcing.bin"));
        p = make_double_bump_problem(g);
      }
    } catch (const std::exception& e) {
      std::fprintf(stderr, "bench: forcing precompute failed: %s\n", e.what());
      return exit_check;
    }
    PicardConfig c = bench_config();
    c.K = 4;
    const BenchResult r = bench_run(p, c, n_threads);
    any_failed = any_failed || !r.ok;
    rows.push_back(p.name + "," + format_double(r.slice) + "," + format_double(r.spacetime));
    std::printf("%s  slice %.4g  spacetime %.4g\n", p.name.c_str(), r.slice, r.spacetime);
    const int rc = write_bench_csv(out((suite + ".csv").c_str()), "problem,slice_rmse,spacetime_rmse",
                                   rows);
    if (rc != exit_ok) return rc;
  } else if (suite == "highdim_smoke") {
    const ProblemSpec p = make_ball_problem(20, Setting::A);
    PicardConfig c = bench_config();
    c.K = 2;
    c.N = 512;
    c.M = 4;
    c.train.n_steps = 400;
    const BenchResult r = bench_run(p, c, n_threads);
    any_failed = any_failed || !r.ok;
    rows.push_back("20," + format_double(r.slice) + "," + format_double(r.spacetime) + "," +
                   (r.ok ? "yes" : "no"));
    std::printf("d=20  slice %.4g  spacetime %.4g  finite %s\n", r.slice, r.spacetime,
                r.ok ? "yes" : "no");
    const int rc =
        write_bench_csv(out("highdim_smoke.csv"), "d,slice_rmse,spacetime_rmse,finite", rows);
    if (rc != exit_ok) return rc;
  } else {
    std::fprintf(stderr,
                 "bench: unknown suite \"%s\" (disk_relaxation | disk_ds_sweep | disk_mc_sweep | "
                 "quad_compare | square | double_bump | highdim_smoke)\n",
                 suite.c_str());
    return exit_invalid;
  }
  return any_failed ? exit_check : exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mesh-free Monte Carlo solver for space-time fractional diffusion"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a Picard experiment from a JSON config");
  run->add_option("config", config_path, "Path to the JSON run configuration")->required();

  double sc_alpha = 1.5, sc_beta = 0.6;
  int sc_d = 2;
  long sc_n = 100000;
  unsigned long sc_seed = 1;
  auto* check = app.add_subcommand("sample-check", "Statistical self-checks of the samplers");
  check->add_option("--alpha", sc_alpha, "Spatial fractional order in (0,2)");
  check->add_option("--beta", sc_beta, "Temporal fractional order in (0,1)");
  check->add_option("--d", sc_d, "Spatial dimension");
  check->add_option("--n-samples", sc_n, "Draws per check");
  check->add_option("--seed", sc_seed, "Base RNG seed");

  std::string pf_profile, pf_out = "forcing.bin";
  double pf_h = 4.0 / 1024.0, pf_lo = -2.0, pf_hi = 2.0, pf_alpha = 1.5;
  auto* pre = app.add_subcommand("precompute-forcing", "Tabulate a fractional-Laplacian forcing grid");
  pre->add_option("--profile", pf_profile, "Profile name: square_phi_R | double_bump")->required();
  pre->add_option("--spacing", pf_h, "Grid spacing");
  pre->add_option("--lo", pf_lo, "Box lower corner (both axes)");
  pre->add_option("--hi", pf_hi, "Box upper corner (both axes)");
  pre->add_option("--alpha", pf_alpha, "Spatial fractional order in (0,2)");
  pre->add_option("--out", pf_out, "Output grid file");

  std::string bench_suite, bench_outdir = "bench_out";
  auto* bench = app.add_subcommand("bench", "Run a benchmark suite and emit comparison CSVs");
  bench->add_option("suite", bench_suite,
                    "disk_relaxation | disk_ds_sweep | disk_mc_sweep | quad_compare | square | "
                    "double_bump | highdim_smoke")
      ->required();
  bench->add_option("--output-dir", bench_outdir, "Directory for suite CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_invalid;
  }

  if (run->parsed()) return cmd_run(config_path);
  if (check->parsed()) return cmd_sample_check(sc_alpha, sc_beta, sc_d, sc_n, sc_seed);
  if (pre->parsed()) return cmd_precompute_forcing(pf_profile, pf_h, pf_lo, pf_hi, pf_alpha, pf_out);
  if (bench->parsed()) return cmd_bench(bench_suite, bench_outdir);
  return exit_invalid;
}
