#pragma once

// Value of a fixed threshold strategy (a, b). In the coordinates y = F(x) the
// function W = (J / phi) o F^{-1} is a straight line on [F(l), F(b)] through
// (F(l), -P/phi(l)); its slope beta is fixed by continuity at F(b), where W
// must equal the discounted one-cycle value e^{-alpha D}[R + H phi(a) W(F(a))].

#include "divdelay/errors.hpp"
#include "divdelay/kernels.hpp"
#include "divdelay/models.hpp"

#include <cmath>
#include <string>

namespace divdelay {

struct Strategy {
    double a = 0.0; // level after the payment
    double b = 0.0; // trigger level

    void validate(const ProblemSpec& spec) const {
        if (!(a >= spec.lower()))
            throw DomainError("strategy: a = " + std::to_string(a) + " is below the ruin level");
        if (!(a < b)) throw DomainError("strategy: requires a < b");
    }
};

namespace detail {

/// Quantities shared by the slope, the smooth-fit residual and the value function.
struct LinearPiece {
    double beta;
    double xi;
    double j_a;    // value at the post-payment level a
    double f_low;  // F(l)
    double phi_low;
};

inline LinearPiece linear_piece(const DelayKernel& kernel, const ScaleAt& s0, const ScaleAt& sa,
                                const ScaleAt& sb, const KernelAt& kb) {
    const auto& spec = kernel.spec();
    const double disc = std::exp(-spec.alpha * spec.delta);
    const double P = spec.penalty_P;
    const double f0 = s0.F();
    const double phi0 = s0.phi();

    // Slope with numerator and denominator multiplied through by phi(b).
    const double phi_a = sa.phi();
    const double phi_b = sb.phi();
    const double lift_a = sa.psi() - f0 * phi_a; // phi(a) (F(a) - F(l))
    const double num = P * (phi_b - disc * kb.h * phi_a) / phi0 + disc * kb.r;
    const double den = sb.psi() - f0 * phi_b - disc * kb.h * lift_a;
    if (!std::isfinite(num) || !std::isfinite(den) ||
        std::abs(den) <= 1e-14 * (std::abs(sb.psi()) + std::abs(f0 * phi_b)))
        throw NumericalError("slope_beta: degenerate denominator");
    const double beta = num / den;
    const double xi = -beta * f0 - P / phi0;
    return {beta, xi, beta * lift_a - P * phi_a / phi0, f0, phi0};
}

} // namespace detail

inline double slope_beta(const ScalePair& scale, const DelayKernel& kernel, double a, double b) {
    Strategy{a, b}.validate(kernel.spec());
    return detail::linear_piece(kernel, scale.at(scale.lower()), scale.at(a), scale.at(b),
                                kernel.eval(b, a))
        .beta;
}

/// beta minus the right derivative of W at F(b). Zero exactly when the line
/// meets the one-cycle value smoothly.
struct SmoothFit {
    double beta;
    double right_slope;
    double residual() const { return beta - right_slope; }
};

namespace detail {

inline SmoothFit smooth_fit(const DelayKernel& kernel, const ScaleAt& s0, const ScaleAt& sa,
                            double a, const ScaleAt& sb, double b) {
    const auto kb = kernel.eval(b, a);
    const auto piece = linear_piece(kernel, s0, sa, sb, kb);
    const auto t = DelayKernel::transformed(sb, kb);
    const auto& spec = kernel.spec();
    const double disc = std::exp(-spec.alpha * spec.delta);
    return {piece.beta, disc * (t.dR_dy + t.dH_dy * piece.j_a)};
}

} // namespace detail

inline SmoothFit smooth_fit(const ScalePair& scale, const DelayKernel& kernel, double a,
                            double b) {
    Strategy{a, b}.validate(kernel.spec());
    return detail::smooth_fit(kernel, scale.at(scale.lower()), scale.at(a), a, scale.at(b), b);
}

class ValueFunction {
public:
    ValueFunction(ScalePair scale, DelayKernel kernel, Strategy strategy)
        : scale_(std::move(scale)), kernel_(std::move(kernel)), strategy_(strategy) {
        strategy_.validate(kernel_.spec());
        piece_ = detail::linear_piece(kernel_, scale_.at(scale_.lower()), scale_.at(strategy_.a),
                                      scale_.at(strategy_.b),
                                      kernel_.eval(strategy_.b, strategy_.a));
    }

    double beta() const { return piece_.beta; }
    double xi() const { return piece_.xi; }
    double value_at_a() const { return piece_.j_a; }
    const Strategy& strategy() const { return strategy_; }
    const ProblemSpec& spec() const { return kernel_.spec(); }
    const ScalePair& scale() const { return scale_; }
    const DelayKernel& kernel() const { return kernel_; }

    /// beta psi + xi phi below b; the one-cycle value above b.
    double operator()(double x) const {
        if (x < scale_.lower()) throw DomainError("value function evaluated below the ruin level");
        if (x <= strategy_.b) {
            const auto s = scale_.at(x);
            return piece_.beta * (s.psi() - piece_.f_low * s.phi()) -
                   spec().penalty_P * s.phi() / piece_.phi_low;
        }
        return kernel_.cycle_value(x, strategy_.a, piece_.j_a);
    }

    /// W(y) = beta y + xi on the linear piece.
    double transformed_line(double y) const { return piece_.beta * y + piece_.xi; }

    double smooth_fit_gap() const {
        return std::abs(smooth_fit(scale_, kernel_, strategy_.a, strategy_.b).residual());
    }

private:
    ScalePair scale_;
    DelayKernel kernel_;
    Strategy strategy_;
    detail::LinearPiece piece_{};
};

inline ValueFunction build_value(const ScalePair& scale, const DelayKernel& kernel,
                                 Strategy strategy) {
    return ValueFunction(scale, kernel, strategy);
}

inline double eval_value(const ValueFunction& v, double x) { return v(x); }

} // namespace divdelay
