#pragma once

// Spectral precompute of q_alpha(x) = (-Delta)^{alpha/2} psi(x) for compactly
// supported 2D profiles: sample psi on a periodic grid, apply the Fourier
// multiplier |xi|^alpha on the discrete frequency lattice (zero mode removed),
// transform back, keep the real part.  Off-grid queries are multilinear.
// Single-threaded (FFTW planning is not thread-safe); grids are immutable
// after construction and safe for shared concurrent reads.

#include <fftw3.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracdpi/specfun.hpp"

namespace fracdpi {

struct ForcingGrid {
  int n = 0;                  // nodes per dimension
  double lo = 0.0, hi = 0.0;  // square periodic box [lo,hi]^2
  double alpha = 0.0;
  Eigen::MatrixXd values;     // (i,j) -> value at (lo + i*h, lo + j*h)

  double h() const { return (hi - lo) / static_cast<double>(n); }

  double interpolate(double x0, double x1) const {
    const double step = h();
    double u = (x0 - lo) / step, v = (x1 - lo) / step;
    auto cell = [this](double& c) {
      long i = static_cast<long>(std::floor(c));
      if (i < 0) i = 0;
      if (i > n - 2) i = n - 2;
      c -= static_cast<double>(i);
      if (c < 0.0) c = 0.0;
      if (c > 1.0) c = 1.0;
      return i;
    };
    const long i = cell(u), j = cell(v);
    return (1.0 - u) * ((1.0 - v) * values(i, j) + v * values(i, j + 1)) +
           u * ((1.0 - v) * values(i + 1, j) + v * values(i + 1, j + 1));
  }
  double interpolate(const Eigen::VectorXd& x) const { return interpolate(x[0], x[1]); }

  bool covers(double a, double b) const { return n > 0 && lo < a && hi > b; }
};

inline ForcingGrid precompute_forcing_fft(const std::function<double(double, double)>& profile,
                                          double h, double lo, double hi, double alpha,
                                          double* imag_residue = nullptr) {
  if (!profile || !(hi > lo) || !(h > 0.0) || !(alpha > 0.0) || !(alpha <= 2.0))
    throw std::invalid_argument("precompute_forcing_fft: bad box, spacing, or order");
  const double L = hi - lo;
  const long n = std::lround(L / h);
  if (n < 16 || n % 2 != 0 || std::fabs(static_cast<double>(n) * h - L) > 1e-9 * L)
    throw std::invalid_argument("precompute_forcing_fft: spacing must tile the box into an even node count >= 16");

  std::vector<std::complex<double>> buf(static_cast<std::size_t>(n) * n);
  const double hh = L / static_cast<double>(n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      buf[static_cast<std::size_t>(i) * n + j] = profile(lo + i * hh, lo + j * hh);

  auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_plan fwd = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), raw, raw,
                                   FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);

  const double two_pi_over_L = 2.0 * pi / L;
  for (long i = 0; i < n; ++i) {
    const double ki = static_cast<double>(i <= n / 2 ? i : i - n);
    for (long j = 0; j < n; ++j) {
      const double kj = static_cast<double>(j <= n / 2 ? j : j - n);
      const double xi = two_pi_over_L * std::sqrt(ki * ki + kj * kj);
      buf[static_cast<std::size_t>(i) * n + j] *= std::pow(xi, alpha);  // 0 at the zero mode
    }
  }

  fftw_plan bwd = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), raw, raw,
                                   FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);

  const double scale = 1.0 / static_cast<double>(n * n);
  double max_re = 0.0, max_im = 0.0;
  for (const auto& z : buf) {
    max_re = std::max(max_re, std::fabs(z.real()));
    max_im = std::max(max_im, std::fabs(z.imag()));
  }
  if (imag_residue) *imag_residue = max_im / std::max(max_re, 1e-300);
  if (max_im > 1e-8 * std::max(max_re, 1e-300))
    throw std::runtime_error("precompute_forcing_fft: imaginary residue " +
                             std::to_string(max_im / std::max(max_re, 1e-300)) +
                             " — profile not resolved by the periodic grid");

  ForcingGrid g;
  g.n = static_cast<int>(n);
  g.lo = lo;
  g.hi = hi;
  g.alpha = alpha;
  g.values.resize(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      g.values(i, j) = buf[static_cast<std::size_t>(i) * n + j].real() * scale;
  return g;
}

namespace detail {
inline std::uint64_t fnv1a(const unsigned char* p, std::size_t count) {
  std::uint64_t x = 1469598103934665603ull;
  for (std::size_t i = 0; i < count; ++i) {
    x ^= p[i];
    x *= 1099511628211ull;
  }
  return x;
}
inline std::uint64_t grid_checksum(const ForcingGrid& g) {
  return fnv1a(reinterpret_cast<const unsigned char*>(g.values.data()),
               sizeof(double) * static_cast<std::size_t>(g.n) * g.n);
}
}  // namespace detail

// Binary grid file: 8-byte magic "FRCGRD01", int64 n, doubles lo/hi/h/alpha,
// uint64 FNV-1a checksum of the value bytes, then n*n doubles in row-major
// order over the first index.  Native little-endian doubles.
inline constexpr char forcing_magic[8] = {'F', 'R', 'C', 'G', 'R', 'D', '0', '1'};

inline void save_forcing(const ForcingGrid& g, const std::string& path) {
  if (g.n < 2) throw std::invalid_argument("save_forcing: empty grid");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_forcing: cannot open " + path);
  out.write(forcing_magic, 8);
  const std::int64_t n = g.n;
  const double h = g.h();
  const std::uint64_t sum = detail::grid_checksum(g);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&g.lo), 8);
  out.write(reinterpret_cast<const char*>(&g.hi), 8);
  out.write(reinterpret_cast<const char*>(&h), 8);
  out.write(reinterpret_cast<const char*>(&g.alpha), 8);
  out.write(reinterpret_cast<const char*>(&sum), 8);
  out.write(reinterpret_cast<const char*>(g.values.data()),
            8 * static_cast<std::streamsize>(g.n) * g.n);
  if (!out) throw std::runtime_error("save_forcing: write failed for " + path);
}

inline ForcingGrid load_forcing(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_forcing: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, forcing_magic, 8) != 0)
    throw std::runtime_error("load_forcing: " + path + " is not a forcing grid file");
  std::int64_t n = 0;
  double lo = 0, hi = 0, h = 0, alpha = 0;
  std::uint64_t sum = 0;
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&lo), 8);
  in.read(reinterpret_cast<char*>(&hi), 8);
  in.read(reinterpret_cast<char*>(&h), 8);
  in.read(reinterpret_cast<char*>(&alpha), 8);
  in.read(reinterpret_cast<char*>(&sum), 8);
  if (!in || n < 2 || n > (1 << 16) || !(hi > lo))
    throw std::runtime_error("load_forcing: corrupt header in " + path);
  ForcingGrid g;
  g.n = static_cast<int>(n);
  g.lo = lo;
  g.hi = hi;
  g.alpha = alpha;
  if (std::fabs(g.h() - h) > 1e-12 * std::fabs(h))
    throw std::runtime_error("load_forcing: inconsistent spacing in " + path);
  g.values.resize(n, n);
  in.read(reinterpret_cast<char*>(g.values.data()), 8 * static_cast<std::streamsize>(n) * n);
  if (!in || in.gcount() != 8 * static_cast<std::streamsize>(n) * n)
    throw std::runtime_error("load_forcing: truncated value block in " + path);
  if (detail::grid_checksum(g) != sum)
    throw std::runtime_error("load_forcing: checksum mismatch in " + path);
  return g;
}

}  // namespace fracdpi
