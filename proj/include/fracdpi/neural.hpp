#pragma once

// Residual tanh MLP with the hard Dirichlet constraint u(t,x) = phi(x) v(t,x):
// input-affine lift to `width`, n_blocks residual blocks (two affine+tanh
// layers with identity skip), affine scalar head.  Parameters live in one flat
// vector (per-matrix column-major), mapped with Eigen views; forward and
// reverse passes are batched GEMMs.  Training is plain bias-corrected Adam on
// uniformly resampled mini-batches, single-threaded for bit-reproducibility.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracdpi/rng.hpp"

namespace fracdpi {

struct NetArchitecture {
  int input_dim = 3;  // d + 1
  int width = 64;
  int n_blocks = 2;
  // Boundary factor phi(x); must vanish identically outside the domain and on
  // its boundary.  The constant 1 surrogate turns the constraint off.
  std::function<double(const Eigen::VectorXd&)> phi;

  long n_params() const {
    const long w = width, in = input_dim;
    return w * in + w + n_blocks * (2 * w * w + 2 * w) + w + 1;
  }
  void validate() const {
    if (input_dim < 2 || width < 1 || n_blocks < 1 || !phi)
      throw std::invalid_argument("NetArchitecture: bad shape or missing phi");
  }
};

struct NetworkState {
  Eigen::VectorXd params, adam_m, adam_v;
  long step_count = 0;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 512;
  int n_steps = 8000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0) || batch_size < 1 || n_steps < 0 || !(adam_beta1 >= 0.0) ||
        !(adam_beta1 < 1.0) || !(adam_beta2 >= 0.0) || !(adam_beta2 < 1.0) || !(adam_eps > 0.0))
      throw std::invalid_argument("TrainConfig: invalid hyperparameter");
  }
};

namespace detail {

// Fixed traversal of the flat layout; all passes and the initializer share it.
struct ParamView {
  Eigen::Map<const Eigen::MatrixXd> w_in;
  Eigen::Map<const Eigen::VectorXd> b_in;
  std::vector<Eigen::Map<const Eigen::MatrixXd>> w1, w2;
  std::vector<Eigen::Map<const Eigen::VectorXd>> b1, b2;
  Eigen::Map<const Eigen::VectorXd> w_out;
  double b_out;

  ParamView(const Eigen::VectorXd& p, const NetArchitecture& a)
      : w_in(p.data(), a.width, a.input_dim), b_in(p.data() + a.width * a.input_dim, a.width),
        w_out(nullptr, 0), b_out(0.0) {
    const double* c = p.data() + a.width * (a.input_dim + 1);
    for (int k = 0; k < a.n_blocks; ++k) {
      w1.emplace_back(c, a.width, a.width);
      c += a.width * a.width;
      b1.emplace_back(c, a.width);
      c += a.width;
      w2.emplace_back(c, a.width, a.width);
      c += a.width * a.width;
      b2.emplace_back(c, a.width);
      c += a.width;
    }
    new (&w_out) Eigen::Map<const Eigen::VectorXd>(c, a.width);
    b_out = *(c + a.width);
  }
};

struct GradView {
  Eigen::Map<Eigen::MatrixXd> w_in;
  Eigen::Map<Eigen::VectorXd> b_in;
  std::vector<Eigen::Map<Eigen::MatrixXd>> w1, w2;
  std::vector<Eigen::Map<Eigen::VectorXd>> b1, b2;
  Eigen::Map<Eigen::VectorXd> w_out;
  double* b_out;

  GradView(Eigen::VectorXd& p, const NetArchitecture& a)
      : w_in(p.data(), a.width, a.input_dim), b_in(p.data() + a.width * a.input_dim, a.width),
        w_out(nullptr, 0), b_out(nullptr) {
    double* c = p.data() + a.width * (a.input_dim + 1);
    for (int k = 0; k < a.n_blocks; ++k) {
      w1.emplace_back(c, a.width, a.width);
      c += a.width * a.width;
      b1.emplace_back(c, a.width);
      c += a.width;
      w2.emplace_back(c, a.width, a.width);
      c += a.width * a.width;
      b2.emplace_back(c, a.width);
      c += a.width;
    }
    new (&w_out) Eigen::Map<Eigen::VectorXd>(c, a.width);
    b_out = c + a.width;
  }
};

struct ForwardCache {
  std::vector<Eigen::MatrixXd> h_in, t1, t2;  // per block
};

// Raw network value v(t,x) for a batch of column inputs; phi is applied by the
// callers that need the constrained u.
inline Eigen::RowVectorXd forward_v(const NetworkState& net, const NetArchitecture& arch,
                                    const Eigen::MatrixXd& z, ForwardCache* cache) {
  const ParamView P(net.params, arch);
  Eigen::MatrixXd h = (P.w_in * z).colwise() + P.b_in;
  if (cache) {
    cache->h_in.clear();
    cache->t1.clear();
    cache->t2.clear();
  }
  for (int k = 0; k < arch.n_blocks; ++k) {
    if (cache) cache->h_in.push_back(h);
    Eigen::MatrixXd t1 = ((P.w1[k] * h).colwise() + P.b1[k]).array().tanh().matrix();
    Eigen::MatrixXd t2 = ((P.w2[k] * t1).colwise() + P.b2[k]).array().tanh().matrix();
    h += t2;
    if (cache) {
      cache->t1.push_back(std::move(t1));
      cache->t2.push_back(std::move(t2));
    }
  }
  return (P.w_out.transpose() * h).array() + P.b_out;
}

}  // namespace detail

// Weights: scaled-uniform fan-in (limit sqrt(3/fan_in), unit variance scale);
// biases zero; head zero, so a fresh network is exactly the zero function.
// Draw order is the flat layout order, one uniform per weight entry.
inline NetworkState init_network(const NetArchitecture& arch, RngStream& stream) {
  arch.validate();
  NetworkState s;
  s.params = Eigen::VectorXd::Zero(arch.n_params());
  s.adam_m = Eigen::VectorXd::Zero(arch.n_params());
  s.adam_v = Eigen::VectorXd::Zero(arch.n_params());
  double* p = s.params.data();
  const auto fill = [&stream](double* dst, long count, double limit) {
    for (long i = 0; i < count; ++i) dst[i] = (2.0 * stream.uniform() - 1.0) * limit;
  };
  const long w = arch.width, in = arch.input_dim;
  fill(p, w * in, std::sqrt(3.0 / static_cast<double>(in)));
  p += w * in + w;  // skip b_in
  for (int k = 0; k < arch.n_blocks; ++k) {
    fill(p, w * w, std::sqrt(3.0 / static_cast<double>(w)));
    p += w * w + w;  // skip b1
    fill(p, w * w, std::sqrt(3.0 / static_cast<double>(w)));
    p += w * w + w;  // skip b2
  }
  // head stays zero
  return s;
}

// Constrained forward u(t,x) = phi(x) v(t,x) for one point.
inline double forward(const NetworkState& net, const NetArchitecture& arch, double t,
                      const Eigen::VectorXd& x) {
  const double ph = arch.phi(x);
  if (ph == 0.0) return 0.0;  // exact, independent of v
  Eigen::MatrixXd z(arch.input_dim, 1);
  z(0, 0) = t;
  z.col(0).tail(x.size()) = x;
  return ph * detail::forward_v(net, arch, z, nullptr)(0);
}

// Batched constrained forward over (1+d) x S columns (t; x).
inline Eigen::VectorXd forward_batch(const NetworkState& net, const NetArchitecture& arch,
                                     const Eigen::MatrixXd& states) {
  const Eigen::RowVectorXd v = detail::forward_v(net, arch, states, nullptr);
  Eigen::VectorXd out(states.cols());
  const int d = arch.input_dim - 1;
  for (Eigen::Index i = 0; i < states.cols(); ++i) {
    const double ph = arch.phi(states.col(i).tail(d));
    out[i] = ph == 0.0 ? 0.0 : ph * v[i];
  }
  return out;
}

// An evaluator closure matching the labels module's BatchedU concept.  The
// referenced state/arch must outlive the closure.
inline auto make_u_evaluator(const NetworkState& net, const NetArchitecture& arch) {
  return [&net, &arch](const Eigen::MatrixXd& states) { return forward_batch(net, arch, states); };
}

// Mean squared error over the batch and its exact reverse-mode gradient.
// z: (1+d) x B inputs; y: targets; phis: precomputed phi(x_i).
inline std::pair<double, Eigen::VectorXd> loss_and_gradient(const NetworkState& net,
                                                            const NetArchitecture& arch,
                                                            const Eigen::MatrixXd& z,
                                                            const Eigen::VectorXd& y,
                                                            const Eigen::VectorXd& phis) {
  arch.validate();
  const auto B = z.cols();
  if (B == 0 || y.size() != B || phis.size() != B)
    throw std::invalid_argument("loss_and_gradient: batch shape mismatch");

  detail::ForwardCache cache;
  const Eigen::RowVectorXd v = detail::forward_v(net, arch, z, &cache);
  const Eigen::ArrayXd u = phis.array() * v.transpose().array();
  const Eigen::ArrayXd r = u - y.array();
  const double loss = r.square().mean();
  if (!std::isfinite(loss))
    throw std::runtime_error("loss_and_gradient: non-finite loss (batch of " + std::to_string(B) +
                             ", first target " + std::to_string(y[0]) + ")");

  const detail::ParamView P(net.params, arch);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.params.size());
  detail::GradView G(grad, arch);

  // dL/dv_i = (2/B) r_i phi_i
  const Eigen::RowVectorXd dv =
      (2.0 / static_cast<double>(B)) * (r * phis.array()).matrix().transpose();
  // final hidden state, rebuilt from the last block's cache
  const Eigen::MatrixXd h_last = cache.h_in.back() + cache.t2.back();
  G.w_out = h_last * dv.transpose();
  *G.b_out = dv.sum();

  Eigen::MatrixXd dh = P.w_out * dv;  // width x B
  for (int k = arch.n_blocks - 1; k >= 0; --k) {
    const Eigen::MatrixXd da2 =
        (dh.array() * (1.0 - cache.t2[k].array().square())).matrix();
    G.w2[k] = da2 * cache.t1[k].transpose();
    G.b2[k] = da2.rowwise().sum();
    const Eigen::MatrixXd da1 =
        ((P.w2[k].transpose() * da2).array() * (1.0 - cache.t1[k].array().square())).matrix();
    G.w1[k] = da1 * cache.h_in[k].transpose();
    G.b1[k] = da1.rowwise().sum();
    dh += P.w1[k].transpose() * da1;
  }
  G.w_in = dh * z.transpose();
  G.b_in = dh.rowwise().sum();
  return {loss, std::move(grad)};
}

// Standard Adam with bias correction; increments step_count.
inline void adam_step(NetworkState& net, const Eigen::VectorXd& grad, const TrainConfig& cfg) {
  if (grad.size() != net.params.size())
    throw std::invalid_argument("adam_step: gradient shape mismatch");
  net.step_count += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  net.adam_m = b1 * net.adam_m + (1.0 - b1) * grad;
  net.adam_v = b2 * net.adam_v + (1.0 - b2) * grad.array().square().matrix();
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(net.step_count));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(net.step_count));
  net.params.array() -=
      cfg.learning_rate * (net.adam_m.array() / c1) /
      ((net.adam_v.array() / c2).sqrt() + cfg.adam_eps);
}

struct TrainResult {
  NetworkState state;
  std::vector<double> loss_trace;  // mini-batch MSE before each update
  double initial_loss = 0.0;       // full-dataset MSE of the warm-start state
};

// Supervised regression on (points, targets): n_steps Adam updates on
// mini-batches drawn uniformly with replacement.  Aborts (throws) if a
// mini-batch loss exceeds 1e6 x the initial full-dataset loss.
inline TrainResult train_regression(NetworkState net, const NetArchitecture& arch,
                                    const Eigen::MatrixXd& z_all, const Eigen::VectorXd& y_all,
                                    const TrainConfig& cfg, RngStream& stream) {
  arch.validate();
  cfg.validate();
  const auto N = z_all.cols();
  if (N == 0 || y_all.size() != N) throw std::invalid_argument("train_regression: empty dataset");
  const int d = arch.input_dim - 1;
  Eigen::VectorXd phi_all(N);
  for (Eigen::Index i = 0; i < N; ++i) phi_all[i] = arch.phi(z_all.col(i).tail(d));

  TrainResult res;
  res.initial_loss = loss_and_gradient(net, arch, z_all, y_all, phi_all).first;
  const double abort_level = 1e6 * std::max(res.initial_loss, 1e-12);
  res.loss_trace.reserve(static_cast<std::size_t>(cfg.n_steps));

  const auto B = static_cast<Eigen::Index>(cfg.batch_size);
  Eigen::MatrixXd zb(arch.input_dim, B);
  Eigen::VectorXd yb(B), phib(B);
  for (int step = 0; step < cfg.n_steps; ++step) {
    for (Eigen::Index j = 0; j < B; ++j) {
      const auto idx = static_cast<Eigen::Index>(stream.uniform() * static_cast<double>(N));
      zb.col(j) = z_all.col(idx);
      yb[j] = y_all[idx];
      phib[j] = phi_all[idx];
    }
    auto [loss, grad] = loss_and_gradient(net, arch, zb, yb, phib);
    if (loss > abort_level)
      throw std::runtime_error("train_regression: diverged at step " + std::to_string(step) +
                               " (mini-batch loss " + std::to_string(loss) + ", initial " +
                               std::to_string(res.initial_loss) + ")");
    res.loss_trace.push_back(loss);
    adam_step(net, grad, cfg);
  }
  res.state = std::move(net);
  return res;
}

}  // namespace fracdpi
