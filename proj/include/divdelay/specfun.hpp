#pragma once

// Special functions behind the scale functions: standard normal, Gamma, the
// Hermite function H_nu for nu < 0 (integral representation), the parabolic
// cylinder function D_nu for nu <= 0 and the Whittaker pair M, W with second
// index -1/4, evaluated through D_nu.
//
// H_nu and D_nu are computed in log space: for the arguments the Ornstein-
// Uhlenbeck and square-root scale functions need, D_nu(-z) overflows long
// before the ratios that the solver consumes do.

#include "divdelay/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace divdelay {

struct Accuracy {
    double rel_tol = 1e-12;
    int quad_points = 1 << 16; // total Gauss-Kronrod node budget

    void validate() const {
        if (!(rel_tol > 0.0)) throw ConfigError("solver.rel_tol", "must be > 0");
        if (quad_points < 32) throw ConfigError("solver.quad_points", "must be >= 32");
    }
};

inline double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

/// Standard normal CDF. Uses erfc so the lower tail keeps full relative precision.
inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double gamma_fn(double x) {
    if (!(x > 0.0)) throw DomainError("gamma_fn: argument must be > 0");
    return std::tgamma(x);
}

namespace detail {

inline int gk_max_depth(const Accuracy& acc) {
    // Each bisection level doubles the interval count; 15 nodes per interval.
    int intervals = acc.quad_points / 15;
    int depth = 0;
    while ((1 << (depth + 1)) <= intervals && depth < 30) ++depth;
    return depth < 1 ? 1 : depth;
}

/// Sums quadrature pieces and checks the combined error against the combined L1 norm.
class PiecewiseIntegral {
public:
    explicit PiecewiseIntegral(const Accuracy& acc, double abs_tol = 0.0)
        : acc_(acc), abs_tol_(abs_tol) {}

    template <class F>
    void smooth(F&& f, double lo, double hi) {
        using boost::math::quadrature::gauss_kronrod;
        double err = 0.0, l1 = 0.0;
        sum_ += gauss_kronrod<double, 15>::integrate(
            f, lo, hi, static_cast<unsigned>(gk_max_depth(acc_)), acc_.rel_tol, &err, &l1);
        add(err, l1, lo, hi);
    }

    /// For integrands with an algebraic singularity (in some derivative) at an endpoint.
    template <class F>
    void endpoint_singular(F&& f, double lo, double hi) {
        static thread_local boost::math::quadrature::tanh_sinh<double> rule(15);
        double err = 0.0, l1 = 0.0;
        sum_ += rule.integrate(f, lo, hi, acc_.rel_tol, &err, &l1);
        add(err, l1, lo, hi);
    }

    double value() const {
        if (!std::isfinite(sum_) ||
            err_ > std::max(100.0 * acc_.rel_tol * std::max(l1_, 1e-300), abs_tol_))
            throw AccuracyError("quadrature did not converge on [" + std::to_string(lo_) + ", " +
                                std::to_string(hi_) + "], error estimate " +
                                std::to_string(err_ / std::max(l1_, 1e-300)) + " relative");
        return sum_;
    }

private:
    void add(double err, double l1, double lo, double hi) {
        err_ += err;
        l1_ += l1;
        lo_ = std::min(lo_, lo);
        hi_ = std::max(hi_, hi);
    }

    Accuracy acc_;
    double abs_tol_;
    double sum_ = 0.0;
    double err_ = 0.0;
    double l1_ = 0.0;
    double lo_ = INFINITY;
    double hi_ = -INFINITY;
};

/// log of  int_0^inf exp(-t^2 - 2 t x) t^(m-1) dt,  m > 0.
///
/// The integrand is rescaled by its value at the interior maximum (when there
/// is one) and split there. The piece touching t = 0 uses tanh-sinh unless
/// m is an integer, since t^(m-1) is singular or not smooth at 0.
inline double log_hermite_integral(double m, double x, const Accuracy& acc) {
    auto log_g = [&](double t) {
        return -t * t - 2.0 * t * x + (m == 1.0 ? 0.0 : (m - 1.0) * std::log(t));
    };
    // Stationary point of log_g: 2t^2 + 2xt - (m - 1) = 0.
    const double disc = x * x + 2.0 * (m - 1.0);
    double t_peak = 0.0;
    if (m > 1.0) t_peak = 0.5 * (-x + std::sqrt(disc));
    else if (m == 1.0) t_peak = x < 0.0 ? -x : 0.0;
    else if (x < 0.0 && disc > 0.0) t_peak = 0.5 * (-x + std::sqrt(disc));
    const double g_peak = t_peak > 0.0 ? log_g(t_peak) : 0.0;

    // Past the peak log_g falls at least quadratically.
    const double drop = -std::log(acc.rel_tol) + 10.0;
    const double t_end = t_peak + std::sqrt(drop) + 1.0;
    auto integrand = [&](double t) {
        if (t <= 0.0) return m == 1.0 ? std::exp(-g_peak) : (m > 1.0 ? 0.0 : INFINITY);
        return std::exp(log_g(t) - g_peak);
    };

    const bool rough = m != std::floor(m);
    PiecewiseIntegral sum(acc);
    const double first_end = t_peak > 0.0 ? t_peak : t_end;
    if (rough) sum.endpoint_singular(integrand, 0.0, first_end);
    else sum.smooth(integrand, 0.0, first_end);
    if (t_peak > 0.0) sum.smooth(integrand, t_peak, t_end);
    return g_peak + std::log(sum.value());
}

} // namespace detail

/// log H_nu(x), nu < 0, from  H_nu(x) = Gamma(-nu)^-1 int_0^inf exp(-t^2 - 2tx) t^(-nu-1) dt.
inline double log_hermite_H(double nu, double x, const Accuracy& acc = {}) {
    if (!(nu < 0.0)) throw DomainError("hermite_H: integral representation needs nu < 0");
    return detail::log_hermite_integral(-nu, x, acc) - std::lgamma(-nu);
}

inline double hermite_H(double nu, double x, const Accuracy& acc = {}) {
    return std::exp(log_hermite_H(nu, x, acc));
}

/// log D_nu(z) for nu <= 0, via D_nu(z) = 2^(-nu/2) e^(-z^2/4) H_nu(z / sqrt 2).
inline double log_pcf_D(double nu, double z, const Accuracy& acc = {}) {
    if (nu > 0.0) throw DomainError("pcf_D: only nu <= 0 is supported");
    if (nu == 0.0) return -0.25 * z * z;
    return -0.5 * nu * std::numbers::ln2 - 0.25 * z * z +
           log_hermite_H(nu, z / std::numbers::sqrt2, acc);
}

inline double pcf_D(double nu, double z, const Accuracy& acc = {}) {
    return std::exp(log_pcf_D(nu, z, acc));
}

/// D_nu'(z) / D_nu(z) from the recurrence D_nu' = -(z/2) D_nu + nu D_{nu-1}.
inline double pcf_D_log_derivative(double nu, double z, const Accuracy& acc = {}) {
    if (nu == 0.0) return -0.5 * z;
    return -0.5 * z + nu * std::exp(log_pcf_D(nu - 1.0, z, acc) - log_pcf_D(nu, z, acc));
}

inline double pcf_D_derivative(double nu, double z, const Accuracy& acc = {}) {
    const double d = pcf_D(nu, z, acc);
    if (nu == 0.0) return -0.5 * z * d;
    return -0.5 * z * d + nu * pcf_D(nu - 1.0, z, acc);
}

struct WhittakerValues {
    double m;
    double w;
};

/// M_{k,-1/4}(z) and W_{k,-1/4}(z), z > 0, built from D_nu with nu = 2k - 1/2 and
/// x = sqrt(2 z):
///   W(x^2/2) = 2^(-nu/2 - 1/4) sqrt(x) D_nu(x)
///   M(x^2/2) = Gamma((1 - nu)/2) / (2 sqrt(pi)) sqrt(x) (D_nu(-x) - D_nu(x))
inline WhittakerValues whittaker_pair(double k, double z, const Accuracy& acc = {}) {
    if (!(z > 0.0)) throw DomainError("whittaker_pair: z must be > 0");
    const double nu = 2.0 * k - 0.5;
    if (nu > 0.0) throw DomainError("whittaker_pair: requires k <= 1/4");
    const double x = std::sqrt(2.0 * z);
    const double d_pos = pcf_D(nu, x, acc);
    const double d_neg = pcf_D(nu, -x, acc);
    const double sx = std::sqrt(x);
    const double w = std::exp2(-0.5 * nu - 0.25) * sx * d_pos;
    const double m = gamma_fn(0.5 * (1.0 - nu)) / (2.0 * std::sqrt(std::numbers::pi)) * sx *
                     (d_neg - d_pos);
    return {m, w};
}

} // namespace divdelay
