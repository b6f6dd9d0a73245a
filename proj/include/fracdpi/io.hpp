#pragma once

// Result emission and configuration loading: deterministic CSV writers, a
// versioned binary network checkpoint, a JSON run summary, and strict JSON
// config parsing (unknown keys rejected, every key optional with defaults).
//
// CSV numbers are printed with %.17g, which round-trips doubles exactly and
// is locale- and thread-independent, so equal runs emit byte-identical files.

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracdpi/labels.hpp"
#include "fracdpi/metrics.hpp"
#include "fracdpi/picard.hpp"
#include "fracdpi/problems.hpp"

namespace fracdpi {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- CSV emission ----------------------------------------------------------

// Deterministic per-iteration metrics; wall-clock timings deliberately live in
// the summary instead, so this file is byte-identical across thread counts.
inline void write_metrics_csv(const PicardRun& run, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
  out << "iteration,slice_rmse,spacetime_rmse,mean_label_variance,truncated_paths\n";
  for (const auto& r : run.records)
    out << r.iteration << ',' << format_double(r.slice_rmse) << ','
        << format_double(r.spacetime_rmse) << ',' << format_double(r.mean_label_variance) << ','
        << r.truncated_paths << '\n';
  if (!out) throw std::runtime_error("write_metrics_csv: write failed for " + path);
}

// One row per collocation point: coordinates, raw and relaxed labels, the
// per-path sample variance, and the truncated-path count.
inline void write_labels_csv(const LabelBatch& batch, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_labels_csv: cannot open " + path);
  const auto d = batch.points.empty() ? 0 : batch.points.front().x.size();
  out << 't';
  for (Eigen::Index k = 0; k < d; ++k) out << ",x" << k;
  out << ",raw,relaxed,variance,truncated\n";
  for (std::size_t i = 0; i < batch.points.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    out << format_double(batch.points[i].t);
    for (Eigen::Index k = 0; k < d; ++k) out << ',' << format_double(batch.points[i].x[k]);
    out << ',' << format_double(batch.raw[c]) << ',' << format_double(batch.relaxed[c]) << ','
        << format_double(batch.variance[c]) << ',' << batch.truncation_counts[i] << '\n';
  }
  if (!out) throw std::runtime_error("write_labels_csv: write failed for " + path);
}

// Evaluation-grid dump (terminal slice or spacetime set): coordinates,
// prediction, exact value, signed error.
inline void write_grid_csv(const EvalGrid& grid, const Eigen::VectorXd& predicted,
                           const std::string& path) {
  if (predicted.size() != grid.exact.size())
    throw std::invalid_argument("write_grid_csv: prediction size mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_grid_csv: cannot open " + path);
  const Eigen::Index d = grid.states.rows() - 1;
  out << 't';
  for (Eigen::Index k = 0; k < d; ++k) out << ",x" << k;
  out << ",predicted,exact,error\n";
  for (Eigen::Index c = 0; c < grid.states.cols(); ++c) {
    out << format_double(grid.states(0, c));
    for (Eigen::Index k = 0; k < d; ++k) out << ',' << format_double(grid.states(1 + k, c));
    out << ',' << format_double(predicted[c]) << ',' << format_double(grid.exact[c]) << ','
        << format_double(predicted[c] - grid.exact[c]) << '\n';
  }
  if (!out) throw std::runtime_error("write_grid_csv: write failed for " + path);
}

// ---- network checkpoints ---------------------------------------------------
// Layout: magic "FDPCKPT1", int64 {input_dim, width, n_blocks, step_count,
// n_params}, then params / adam_m / adam_v as raw little-endian doubles, then
// a FNV-1a checksum (uint64) of everything after the magic.

inline constexpr char checkpoint_magic[8] = {'F', 'D', 'P', 'C', 'K', 'P', 'T', '1'};

inline void save_checkpoint(const NetworkState& net, const NetArchitecture& arch,
                            const std::string& path) {
  const long P = arch.n_params();
  if (net.params.size() != P || net.adam_m.size() != P || net.adam_v.size() != P)
    throw std::invalid_argument("save_checkpoint: state does not match the architecture");
  std::vector<unsigned char> buf;
  buf.reserve(5 * sizeof(std::int64_t) + 3 * static_cast<std::size_t>(P) * sizeof(double));
  auto put = [&buf](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    buf.insert(buf.end(), b, b + n);
  };
  const std::int64_t header[5] = {arch.input_dim, arch.width, arch.n_blocks, net.step_count, P};
  put(header, sizeof header);
  put(net.params.data(), static_cast<std::size_t>(P) * sizeof(double));
  put(net.adam_m.data(), static_cast<std::size_t>(P) * sizeof(double));
  put(net.adam_v.data(), static_cast<std::size_t>(P) * sizeof(double));
  const std::uint64_t sum = detail::fnv1a(buf.data(), buf.size());

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write(checkpoint_magic, sizeof checkpoint_magic);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  out.write(reinterpret_cast<const char*>(&sum), sizeof sum);
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

// The stored architecture carries no boundary factor; attach the problem's phi
// before evaluating the returned state.
struct Checkpoint {
  NetArchitecture arch;
  NetworkState state;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[sizeof checkpoint_magic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, checkpoint_magic, sizeof magic) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);

  std::vector<unsigned char> rest(std::istreambuf_iterator<char>(in), {});
  if (rest.size() < 5 * sizeof(std::int64_t) + sizeof(std::uint64_t))
    throw std::runtime_error("load_checkpoint: truncated file " + path);
  const std::size_t payload = rest.size() - sizeof(std::uint64_t);
  std::uint64_t sum = 0;
  std::memcpy(&sum, rest.data() + payload, sizeof sum);
  if (detail::fnv1a(rest.data(), payload) != sum)
    throw std::runtime_error("load_checkpoint: checksum mismatch in " + path);

  std::int64_t header[5];
  std::memcpy(header, rest.data(), sizeof header);
  Checkpoint cp;
  cp.arch.input_dim = static_cast<int>(header[0]);
  cp.arch.width = static_cast<int>(header[1]);
  cp.arch.n_blocks = static_cast<int>(header[2]);
  cp.state.step_count = header[3];
  const std::int64_t P = header[4];
  if (cp.arch.input_dim < 2 || cp.arch.width < 1 || cp.arch.n_blocks < 1 ||
      cp.state.step_count < 0 || P != cp.arch.n_params() ||
      payload != sizeof header + 3 * static_cast<std::size_t>(P) * sizeof(double))
    throw std::runtime_error("load_checkpoint: inconsistent header in " + path);
  cp.state.params.resize(P);
  cp.state.adam_m.resize(P);
  cp.state.adam_v.resize(P);
  const std::size_t block = static_cast<std::size_t>(P) * sizeof(double);
  std::memcpy(cp.state.params.data(), rest.data() + sizeof header, block);
  std::memcpy(cp.state.adam_m.data(), rest.data() + sizeof header + block, block);
  std::memcpy(cp.state.adam_v.data(), rest.data() + sizeof header + 2 * block, block);
  return cp;
}

// ---- JSON configuration ----------------------------------------------------

// A full experiment description: problem selector plus solver configuration.
// Every key is optional; the defaults here are the documented ones.
struct RunSetup {
  std::string problem = "disk_A";  // disk_A|disk_B|ball_A|ball_B|square_A|square_B|double_bump|zero
  int dimension = 2;               // ball_* and zero selectors only
  double alpha = 1.5, beta = 0.6, horizon = 1.0;
  std::string forcing_path;  // required by square_* and double_bump
  std::string output_dir = "out";
  bool write_slice = false;  // dump the terminal slice grid as CSV after the run
  PicardConfig picard;
};

namespace detail {

template <class T>
T json_get(const nlohmann::json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(std::string("config: wrong type for key \"") + key + '"');
  }
}

inline QuadRule parse_quad(const std::string& s) {
  if (s == "trapezoid") return QuadRule::trapezoid;
  if (s == "rectangle") return QuadRule::rectangle;
  throw std::invalid_argument("config: quad must be \"trapezoid\" or \"rectangle\", got \"" + s +
                              '"');
}

inline JumpLaw parse_jump_law(const std::string& s) {
  if (s == "bgr") return JumpLaw::bgr;
  if (s == "mirror") return JumpLaw::mirror;
  throw std::invalid_argument("config: jump_law must be \"bgr\" or \"mirror\", got \"" + s + '"');
}

}  // namespace detail

inline RunSetup parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");
  static const std::set<std::string> known = {
      "problem",      "dimension",       "alpha",
      "beta",         "horizon",         "forcing",
      "output_dir",   "write_slice",     "K",
      "N",            "M",               "ds",
      "eta",          "quad",            "jump_law",
      "seed",         "reset_adam_moments", "n_threads",
      "max_steps",    "slice_resolution",   "eval_times",
      "eval_points_per_time", "width",   "n_blocks",
      "learning_rate", "batch_size",     "train_steps",
      "adam_beta1",   "adam_beta2",      "adam_eps"};
  for (const auto& item : j.items())
    if (known.find(item.key()) == known.end())
      throw std::invalid_argument("config: unknown key \"" + item.key() + '"');

  RunSetup s;
  s.problem = detail::json_get<std::string>(j, "problem", s.problem);
  s.dimension = detail::json_get<int>(j, "dimension", s.dimension);
  s.alpha = detail::json_get<double>(j, "alpha", s.alpha);
  s.beta = detail::json_get<double>(j, "beta", s.beta);
  s.horizon = detail::json_get<double>(j, "horizon", s.horizon);
  s.forcing_path = detail::json_get<std::string>(j, "forcing", s.forcing_path);
  s.output_dir = detail::json_get<std::string>(j, "output_dir", s.output_dir);
  s.write_slice = detail::json_get<bool>(j, "write_slice", s.write_slice);

  PicardConfig& c = s.picard;
  c.K = detail::json_get<int>(j, "K", c.K);
  c.N = detail::json_get<int>(j, "N", c.N);
  c.M = detail::json_get<int>(j, "M", c.M);
  c.ds = detail::json_get<double>(j, "ds", c.ds);
  c.eta = detail::json_get<double>(j, "eta", c.eta);
  c.quad = detail::parse_quad(detail::json_get<std::string>(j, "quad", "trapezoid"));
  c.jump_law = detail::parse_jump_law(detail::json_get<std::string>(j, "jump_law", "bgr"));
  c.seed = detail::json_get<std::uint64_t>(j, "seed", c.seed);
  c.reset_adam_moments = detail::json_get<bool>(j, "reset_adam_moments", c.reset_adam_moments);
  c.n_threads = detail::json_get<int>(j, "n_threads", c.n_threads);
  c.max_steps = detail::json_get<long>(j, "max_steps", c.max_steps);
  c.slice_resolution = detail::json_get<int>(j, "slice_resolution", c.slice_resolution);
  c.eval_times = detail::json_get<int>(j, "eval_times", c.eval_times);
  c.eval_points_per_time = detail::json_get<int>(j, "eval_points_per_time", c.eval_points_per_time);
  c.arch.width = detail::json_get<int>(j, "width", c.arch.width);
  c.arch.n_blocks = detail::json_get<int>(j, "n_blocks", c.arch.n_blocks);
  c.train.learning_rate = detail::json_get<double>(j, "learning_rate", c.train.learning_rate);
  c.train.batch_size = detail::json_get<int>(j, "batch_size", c.train.batch_size);
  c.train.n_steps = detail::json_get<int>(j, "train_steps", c.train.n_steps);
  c.train.adam_beta1 = detail::json_get<double>(j, "adam_beta1", c.train.adam_beta1);
  c.train.adam_beta2 = detail::json_get<double>(j, "adam_beta2", c.train.adam_beta2);
  c.train.adam_eps = detail::json_get<double>(j, "adam_eps", c.train.adam_eps);

  // Fail before any compute: orders, horizon, shapes, solver invariants.
  FracOrders{s.alpha, s.beta}.validate();
  if (!(s.horizon > 0.0)) throw std::invalid_argument("config: horizon must be positive");
  if (s.dimension < 1) throw std::invalid_argument("config: dimension must be >= 1");
  if (c.arch.width < 1 || c.arch.n_blocks < 1)
    throw std::invalid_argument("config: width and n_blocks must be >= 1");
  c.validate();
  return s;
}

inline RunSetup load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_run_config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }
  return parse_run_config(j);
}

// Builds the selected benchmark problem; forcing-backed problems load their
// precomputed operator grid here.
inline ProblemSpec make_configured_problem(const RunSetup& s) {
  ProblemSpec p;
  if (s.problem == "disk_A" || s.problem == "disk_B") {
    p = make_disk_problem(s.problem == "disk_A" ? Setting::A : Setting::B, s.alpha, s.beta);
  } else if (s.problem == "ball_A" || s.problem == "ball_B") {
    p = make_ball_problem(s.dimension, s.problem == "ball_A" ? Setting::A : Setting::B, s.alpha,
                          s.beta);
  } else if (s.problem == "square_A" || s.problem == "square_B") {
    if (s.forcing_path.empty())
      throw std::invalid_argument("config: problem \"" + s.problem +
                                  "\" needs a \"forcing\" grid file");
    p = make_square_problem(s.problem == "square_A" ? Setting::A : Setting::B,
                            load_forcing(s.forcing_path), s.alpha, s.beta);
  } else if (s.problem == "double_bump") {
    if (s.forcing_path.empty())
      throw std::invalid_argument("config: problem \"double_bump\" needs a \"forcing\" grid file");
    p = make_double_bump_problem(load_forcing(s.forcing_path), {}, s.alpha, s.beta);
  } else if (s.problem == "zero") {
    p = make_zero_problem(s.dimension, s.alpha, s.beta);
  } else {
    throw std::invalid_argument("config: unknown problem \"" + s.problem + '"');
  }
  p.horizon = s.horizon;
  return p;
}

// ---- run summary -----------------------------------------------------------

inline nlohmann::json config_to_json(const PicardConfig& c) {
  return nlohmann::json{{"K", c.K},
                        {"N", c.N},
                        {"M", c.M},
                        {"ds", c.ds},
                        {"eta", c.eta},
                        {"quad", c.quad == QuadRule::trapezoid ? "trapezoid" : "rectangle"},
                        {"jump_law", c.jump_law == JumpLaw::bgr ? "bgr" : "mirror"},
                        {"seed", c.seed},
                        {"reset_adam_moments", c.reset_adam_moments},
                        {"n_threads", c.n_threads},
                        {"max_steps", c.max_steps},
                        {"slice_resolution", c.slice_resolution},
                        {"eval_times", c.eval_times},
                        {"eval_points_per_time", c.eval_points_per_time},
                        {"width", c.arch.width},
                        {"n_blocks", c.arch.n_blocks},
                        {"learning_rate", c.train.learning_rate},
                        {"batch_size", c.train.batch_size},
                        {"train_steps", c.train.n_steps},
                        {"adam_beta1", c.train.adam_beta1},
                        {"adam_beta2", c.train.adam_beta2},
                        {"adam_eps", c.train.adam_eps}};
}

// Full effective configuration plus outcomes.  Wall-clock timings go here (and
// only here); non-finite metric values serialize as JSON null.
inline nlohmann::json run_to_summary(const PicardRun& run, const ProblemSpec& problem) {
  nlohmann::json j;
  j["problem"] = {{"name", problem.name},
                  {"alpha", problem.orders.alpha},
                  {"beta", problem.orders.beta},
                  {"horizon", problem.horizon},
                  {"dimension", problem.domain.d},
                  {"has_exact", problem.has_exact()}};
  j["config"] = config_to_json(run.config);
  j["iterations_completed"] = run.records.size();
  j["diverged"] = run.diverged;
  if (run.diverged) j["divergence_message"] = run.divergence_message;
  j["warnings"] = run.warnings;
  nlohmann::json seconds = nlohmann::json::array();
  double total = 0.0;
  for (const auto& r : run.records) {
    seconds.push_back(r.seconds);
    total += r.seconds;
  }
  j["seconds_per_iteration"] = seconds;
  j["total_seconds"] = total;
  if (!run.records.empty()) {
    const auto& last = run.records.back();
    j["final"] = {{"iteration", last.iteration},
                  {"slice_rmse", last.slice_rmse},
                  {"spacetime_rmse", last.spacetime_rmse},
                  {"mean_label_variance", last.mean_label_variance},
                  {"truncated_paths", last.truncated_paths},
                  {"train_loss", last.final_train_loss}};
  }
  return j;
}

inline void write_summary_json(const PicardRun& run, const ProblemSpec& problem,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_summary_json: cannot open " + path);
  out << run_to_summary(run, problem).dump(2) << '\n';
  if (!out) throw std::runtime_error("write_summary_json: write failed for " + path);
}

}  // namespace fracdpi
