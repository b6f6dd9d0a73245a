#pragma once
// Special functions for the fractional solver: log-gamma, (incomplete) beta,
// Gauss 2F1 on [0,1), and the exit-time constants of the alpha-stable ball walk.
// All routines are self-contained doubles; accuracy targets ~1e-12 relative.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fracdpi {

inline constexpr double pi = 3.14159265358979323846;

// Lanczos approximation, g=7, 9 terms; relative error ~1e-15 on the real line.
inline double log_gamma(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("log_gamma: x must be positive");
    static const double c[9] = {
        0.99999999999980993,    676.5203681218851,    -1259.1392167224028,
        771.32342877765313,     -176.61502916214059,  12.507343278686905,
        -0.13857109526572012,   9.9843695780195716e-6, 1.5056327351493116e-7};
    if (x < 0.5) {
        // reflection keeps the series argument >= 0.5
        return std::log(pi / std::sin(pi * x)) - log_gamma(1.0 - x);
    }
    const double y = x - 1.0;
    double a = c[0];
    for (int i = 1; i < 9; ++i) a += c[i] / (y + i);
    const double t = y + 7.5;
    return 0.91893853320467274178 + (y + 0.5) * std::log(t) - t + std::log(a);
}

inline double beta_complete(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta_complete: a,b must be positive");
    return std::exp(log_gamma(a) + log_gamma(b) - log_gamma(a + b));
}

namespace detail {

// Continued fraction for the regularized incomplete beta (Lentz's method).
// Valid/fast for z below the symmetry switch point a/(a+b).
inline double beta_cf(double z, double a, double b) {
    const double eps = std::numeric_limits<double>::epsilon();
    const double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * z / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * z / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d; if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c; if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * z / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d; if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c; if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

} // namespace detail

// Regularized lower incomplete beta I(z; a, b) in [0,1].
inline double beta_incomplete_reg(double z, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta_incomplete_reg: a,b must be positive");
    if (!(z >= 0.0 && z <= 1.0)) throw std::invalid_argument("beta_incomplete_reg: z must lie in [0,1]");
    if (z == 0.0) return 0.0;
    if (z == 1.0) return 1.0;
    const double ln_front = a * std::log(z) + b * std::log1p(-z)
                          - (log_gamma(a) + log_gamma(b) - log_gamma(a + b));
    // symmetry switch keeps the continued fraction in its fast region
    if (z < (a + 1.0) / (a + b + 2.0))
        return std::exp(ln_front) * detail::beta_cf(z, a, b) / a;
    return 1.0 - std::exp(ln_front) * detail::beta_cf(1.0 - z, b, a) / b;
}

// Lower incomplete beta B(z; a, b) = I(z; a, b) * B(a, b), non-regularized.
inline double beta_incomplete(double z, double a, double b) {
    return beta_incomplete_reg(z, a, b) * beta_complete(a, b);
}

// Inverse of the regularized incomplete beta: bracketed bisection, then a
// Newton polish in log z (robust when the quantile is many orders below 1).
inline double beta_incomplete_reg_inverse(double p, double a, double b) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("beta_incomplete_reg_inverse: p must lie in [0,1]");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    if (p > 0.5) return 1.0 - beta_incomplete_reg_inverse(1.0 - p, b, a);
    const double ln_norm = log_gamma(a) + log_gamma(b) - log_gamma(a + b);
    // Series start: I(z) = z^a/(a B) (1 + O(z)), so z0 = (p a B)^{1/a}; exact as
    // z -> 0, which is also where the quantile is most extreme.  Mid-range
    // starts are rough but the safeguarded Newton below mops them up.
    double z = std::exp((std::log(p) + std::log(a) + ln_norm) / a);
    if (!(z < 0.4)) z = 0.4;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double fval = beta_incomplete_reg(z, a, b) - p;
        (fval < 0.0 ? lo : hi) = z;
        // dI/d(ln z) = z * density; Newton step in log space cannot go negative
        const double dlog = std::exp(a * std::log(z) + (b - 1.0) * std::log1p(-z) - ln_norm);
        if (!(dlog > 0.0)) break;
        double step = fval / dlog;
        if (step > 30.0) step = 30.0;
        if (step < -30.0) step = -30.0;
        double zn = z * std::exp(-step);
        if (!(zn > lo && zn < hi))
            zn = (lo > 0.0) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);  // back into the bracket
        if (std::fabs(zn - z) <= 4e-16 * zn) { z = zn; break; }
        z = zn;
    }
    return z;
}

// Inverse of the non-regularized B(z; a, b); y in [0, B(a,b)].
inline double beta_incomplete_inverse(double y, double a, double b) {
    const double B = beta_complete(a, b);
    if (!(y >= 0.0 && y <= B)) throw std::invalid_argument("beta_incomplete_inverse: y outside [0, B(a,b)]");
    return beta_incomplete_reg_inverse(y / B, a, b);
}

namespace detail {

// Tanh-sinh (double-exponential) quadrature of f over (0,1); handles endpoint
// singularities that are integrable. The integrand receives both x and 1-x so
// neither endpoint suffers cancellation. Fixed rule: h = 4.8/2^6, |t| <= 4.8
// (the wide range keeps truncation error below 1e-13 even for x^{-0.9} spikes).
template <class F>
inline double tanh_sinh_01(F&& f) {
    const int levels = 6;
    const double tmax = 4.8;
    const double h = tmax / double(1 << levels);
    const int n = (1 << levels); // nodes at t = k*h, k = -n..n
    double sum = 0.0;
    for (int k = -n; k <= n; ++k) {
        const double t = k * h;
        const double s = 0.5 * pi * std::sinh(t);
        // 1/(1+e^{2s}) and its mirror give x and 1-x without cancellation
        const double x = 1.0 / (1.0 + std::exp(-2.0 * s));
        const double omx = 1.0 / (1.0 + std::exp(2.0 * s));
        const double w = 0.25 * pi * std::cosh(t) / (std::cosh(s) * std::cosh(s));
        // only exact zeros are unusable (negative-power overflow); the
        // complementary coordinate rounding to 1.0 is harmless
        if (x <= 0.0 || omx <= 0.0 || w < 1e-320) continue;
        sum += w * f(x, omx);
    }
    return sum * h;
}

} // namespace detail

// Gauss hypergeometric 2F1(a,b;c;z) for z in [0,1), via the Euler integral
// (requires c > b > 0, which covers every use in this library).
inline double gauss_2f1(double a, double b, double c, double z) {
    if (!(b > 0.0) || !(c > b)) throw std::invalid_argument("gauss_2f1: need c > b > 0");
    if (!(z >= 0.0 && z < 1.0)) throw std::invalid_argument("gauss_2f1: z must lie in [0,1)");
    if (z == 0.0) return 1.0;
    const double ln_pref = log_gamma(c) - log_gamma(b) - log_gamma(c - b);
    const double integral = detail::tanh_sinh_01([&](double s, double oms) {
        // 1 - z*s assembled as (1-s) + s*(1-z): stable when both s,z -> 1
        const double omzs = oms + s * (1.0 - z);
        return std::pow(s, b - 1.0) * std::pow(oms, c - b - 1.0) * std::pow(omzs, -a);
    });
    return std::exp(ln_pref) * integral;
}

// kappa_{d,alpha} = Gamma(d/2) / (2^alpha Gamma(1+alpha/2) Gamma((d+alpha)/2)).
// Mean exit time of the isotropic alpha-stable process from B_r is kappa * r^alpha.
inline double kappa_d_alpha(int d, double alpha) {
    if (d < 1) throw std::invalid_argument("kappa_d_alpha: d must be >= 1");
    if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("kappa_d_alpha: alpha must lie in (0,2)");
    return std::exp(log_gamma(0.5 * d) - alpha * std::log(2.0)
                    - log_gamma(1.0 + 0.5 * alpha) - log_gamma(0.5 * (d + alpha)));
}

// (-Delta)^{alpha/2} (1-|x|^2)_+^{alpha/2} = C_{d,alpha} inside the unit ball;
// coincides with 1/kappa_{d,alpha} (and with 2^alpha Gamma(1+alpha/2)^2 at d=2).
inline double frac_laplacian_ball_constant(int d, double alpha) {
    return 1.0 / kappa_d_alpha(d, alpha);
}

inline double mean_exit_time(double r, int d, double alpha) {
    if (!(r > 0.0)) throw std::invalid_argument("mean_exit_time: r must be positive");
    return kappa_d_alpha(d, alpha) * std::pow(r, alpha);
}

// E[tau_r^2] = alpha r^{2 alpha} kappa^2 int_0^1 w^{alpha/2-1} 2F1(-alpha/2, d/2; (d+alpha)/2; w) dw.
// Diagnostic only; nothing downstream consumes it.
inline double second_exit_moment(double r, int d, double alpha) {
    if (!(r > 0.0)) throw std::invalid_argument("second_exit_moment: r must be positive");
    const double kap = kappa_d_alpha(d, alpha);
    const double integral = detail::tanh_sinh_01([&](double w, double) {
        if (w >= 1.0) return 0.0; // node rounded onto the endpoint; weight is ~1e-80 there
        return std::pow(w, 0.5 * alpha - 1.0) * gauss_2f1(-0.5 * alpha, 0.5 * d, 0.5 * (d + alpha), w);
    });
    return alpha * std::pow(r, 2.0 * alpha) * kap * kap * integral;
}

} // namespace fracdpi
