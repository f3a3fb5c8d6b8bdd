#pragma once

// One intervention cycle seen from the trigger level: for a start point x the
// discounted payoff of "wait the delay, then pay down to a" splits as
//
//   e^{alpha D} E^x[1{D < tau} e^{-alpha D} (X_D - a - lambda + J(a))] = r(x; a) + h(x) J(a)
//
// with h(x) = P^x(tau > D). With a ruin penalty P the cycle also loses
// P E^x[e^{-alpha tau}; tau <= D], folded into the effective r.

#include "divdelay/errors.hpp"
#include "divdelay/models.hpp"
#include "divdelay/specfun.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <variant>
#include <vector>

namespace divdelay {

/// r, h and first derivatives at one x (r is the effective r, penalty included).
struct KernelAt {
    double r;
    double dr;
    double h;
    double dh;
};

/// The same four quantities in the transformed coordinate y = F(x):
/// R = r/phi, H = h/phi and their y-derivatives.
struct TransformedKernelAt {
    double R;
    double H;
    double dR_dy;
    double dH_dy;
};

class DelayKernel {
public:
    explicit DelayKernel(ProblemSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        const double D = spec_.delta;
        if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&spec_.model)) {
            init_ou_like(ou->rho, D);
        } else if (const auto* sq = std::get_if<SquareRoot>(&spec_.model)) {
            init_ou_like(sq->rho, D);
        } else if (const auto* g = std::get_if<GeometricBM>(&spec_.model)) {
            gbm_power_ = 1.0 + 2.0 * g->mu / (g->sigma * g->sigma);
        }
    }

    const ProblemSpec& spec() const { return spec_; }

    /// Survival weight P^x(tau > delta).
    double h(double x) const { return eval(x, spec_.lower()).h; }
    double dh_dx(double x) const { return eval(x, spec_.lower()).dh; }

    /// The part of e^{alpha D} B not proportional to J(a); excludes the ruin penalty.
    double r(double x, double a) const { return eval_plain(x, a).r; }
    double dr_dx(double x, double a) const { return eval_plain(x, a).dr; }

    /// P E^x[e^{-alpha tau}; tau <= delta] for the OU model, zero otherwise.
    double penalty_term(double x) const { return penalty(x)[0]; }
    double dpenalty_dx(double x) const { return penalty(x)[1]; }

    /// r, h and derivatives with r := r - e^{alpha D} penalty_term.
    KernelAt eval(double x, double a) const {
        auto k = eval_plain(x, a);
        if (spec_.penalty_P > 0.0 && spec_.delta > 0.0) {
            const auto p = penalty(x);
            const double grow = std::exp(spec_.alpha * spec_.delta);
            k.r -= grow * p[0];
            k.dr -= grow * p[1];
        }
        return k;
    }

    /// Expected discounted value of one cycle started at x when the continuation
    /// value at a is j:  e^{-alpha D}(r + h j) - penalty_term.
    double cycle_value(double x, double a, double j) const {
        const auto k = eval_plain(x, a);
        return std::exp(-spec_.alpha * spec_.delta) * (k.r + k.h * j) - penalty_term(x);
    }

    /// R, H and y-derivatives at y = F(x), using (K/phi)'(x) / F'(x) for the slope.
    TransformedKernelAt transformed_at(const ScalePair& scale, double x, double a) const {
        return transformed(scale.at(x), eval(x, a));
    }

    static TransformedKernelAt transformed(const ScaleAt& s, const KernelAt& k) {
        const double phi = s.phi();
        // phi F' = psi (psi'/psi - phi'/phi)
        const double phi_dF = s.psi() * (s.dlog_psi - s.dlog_phi);
        return {k.r / phi, k.h / phi, (k.dr - k.r * s.dlog_phi) / phi_dF,
                (k.dh - k.h * s.dlog_phi) / phi_dF};
    }

    double kernel_R(const ScalePair& scale, double y, double a) const {
        return transformed_at(scale, scale.F_inv(y), a).R;
    }
    double kernel_H(const ScalePair& scale, double y) const {
        return transformed_at(scale, scale.F_inv(y), spec_.lower()).H;
    }
    double dR_dy(const ScalePair& scale, double y, double a) const {
        return transformed_at(scale, scale.F_inv(y), a).dR_dy;
    }
    double dH_dy(const ScalePair& scale, double y) const {
        return transformed_at(scale, scale.F_inv(y), spec_.lower()).dH_dy;
    }

    /// h'(x) as printed for the square-root model, -(e^{-rho D}/sqrt x) phi(u).
    /// Differs in sign and a sqrt(Q) factor from the derivative of h; reported by
    /// diagnostics only.
    double printed_sqrt_dh_dx(double x) const {
        if (!std::holds_alternative<SquareRoot>(spec_.model) || spec_.delta == 0.0) return 0.0;
        const double u = std::sqrt(x) * decay_ / std::sqrt(q_);
        return -decay_ / std::sqrt(x) * norm_pdf(u);
    }

private:
    void init_ou_like(double rho, double D) {
        decay_ = std::exp(-rho * D);
        q_ = -std::expm1(-2.0 * rho * D) / (2.0 * rho);
    }

    KernelAt eval_plain(double x, double a) const {
        const double lo = spec_.lower();
        if (x < lo) throw DomainError("kernel evaluated below the ruin level");
        if (a < lo) throw DomainError("kernel: a below the ruin level");
        const double c = a + spec_.lambda_fee;
        if (spec_.delta == 0.0) {
            if (x == lo) return {0.0, 1.0, 0.0, 0.0};
            return {x - c, 1.0, 1.0, 0.0};
        }
        return std::visit([&](const auto& m) { return eval_model(m, x, c); }, spec_.model);
    }

    KernelAt eval_model(const BrownianDrift& m, double x, double c) const {
        return brownian_kernel(m.mu, m.sigma, spec_.delta, x, c);
    }

    // Killed Brownian motion with drift started at x > 0, barrier at 0.
    static KernelAt brownian_kernel(double mu, double sigma, double D, double x, double c) {
        const double s = sigma * std::sqrt(D);
        const double u = (x + mu * D) / s;
        const double v = (-x + mu * D) / s;
        const double k = 2.0 * mu / (sigma * sigma);
        const double E = std::exp(-k * x);
        const double Nu = norm_cdf(u), Nv = norm_cdf(v);
        const double pu = norm_pdf(u), pv = norm_pdf(v);
        const double g = (-x + mu * D - c) * Nv + s * pv;
        const double r = (x + mu * D - c) * Nu + s * pu - E * g;
        const double dr = Nu - c * pu / s + k * E * g - E * (-Nv + c * pv / s);
        const double h = Nu - E * Nv;
        const double dh = pu / s + k * E * Nv + E * pv / s;
        return {r, dr, h, dh};
    }

    KernelAt eval_model(const OrnsteinUhlenbeck&, double x, double c) const {
        const double k = decay_ / std::sqrt(q_);
        const double h = 2.0 * norm_cdf(k * x) - 1.0;
        const double dh = 2.0 * k * norm_pdf(k * x);
        return {x * decay_ - c * h, decay_ - c * dh, h, dh};
    }

    KernelAt eval_model(const SquareRoot&, double x, double c) const {
        if (x == 0.0) return {0.0, INFINITY, 0.0, INFINITY};
        const double sx = std::sqrt(x);
        const double u = sx * decay_ / std::sqrt(q_);
        const double h = 2.0 * norm_cdf(u) - 1.0;
        const double pu = norm_pdf(u);
        const double decay2 = decay_ * decay_;
        const double r = (x * decay2 + q_ - c) * h + 2.0 * std::sqrt(q_ * x) * decay_ * pu;
        const double root_qx = std::sqrt(q_ * x);
        const double dh = decay_ * pu / root_qx;
        const double dr = decay2 * h + decay_ * pu * (2.0 * q_ - c) / root_qx;
        return {r, dr, h, dh};
    }

    KernelAt eval_model(const GeometricBM& m, double x, double c) const {
        const double D = spec_.delta;
        const double s2 = m.sigma * m.sigma;
        const double s = m.sigma * std::sqrt(D);
        const double y = std::log(x / m.d);
        // log(X/d) is a Brownian motion with drift mu - sigma^2/2 killed at 0.
        const double gamma = m.mu - 0.5 * s2;
        const auto surv = brownian_kernel(gamma, m.sigma, D, y, 0.0);
        const double h = surv.h;
        const double dh = surv.dh / x;

        const double eta = m.kernel_form == GbmKernelForm::exact ? m.mu + 0.5 * s2 : gamma;
        const double d1 = (y + eta * D) / s;
        const double d2 = (y - eta * D) / s;
        const double ratio = std::exp(-gbm_power_ * y); // (d/x)^{1 + 2 mu / sigma^2}
        const double grow = std::exp(m.mu * D);
        const double A = grow * x * (norm_cdf(d1) - ratio * norm_cdf(-d2));
        const double dA = grow * (norm_cdf(d1) + norm_pdf(d1) / s -
                                  ratio * ((1.0 - gbm_power_) * norm_cdf(-d2) - norm_pdf(d2) / s));
        return {A - c * h, dA - c * dh, h, dh};
    }

    // P * int_0^D e^{-alpha t} f(t; x) dt and its x-derivative, f the density of
    // the OU hitting time of 0. Integrated in s = sqrt(t).
    std::array<double, 2> penalty(double x) const {
        const double P = spec_.penalty_P;
        const double D = spec_.delta;
        if (P == 0.0 || D == 0.0) return {0.0, 0.0};
        if (x < 0.0) throw DomainError("penalty_term: x must be >= 0");
        if (x == 0.0) return {P, 0.0};
        const double rho = std::get<OrnsteinUhlenbeck>(spec_.model).rho;
        const double alpha = spec_.alpha;
        const double log_norm = std::log(x) - 0.5 * std::log(2.0 * std::numbers::pi);

        auto log_f = [&](double t) {
            const double sh = std::sinh(rho * t);
            return log_norm + 1.5 * (std::log(rho) - std::log(sh)) -
                   rho * x * x * std::exp(-rho * t) / (2.0 * sh) + 0.5 * rho * t - alpha * t;
        };
        auto value = [&](double s) {
            if (s <= 0.0) return 0.0;
            const double t = s * s;
            return 2.0 * s * std::exp(log_f(t));
        };
        auto slope = [&](double s) {
            if (s <= 0.0) return 0.0;
            const double t = s * s;
            const double w = 1.0 / x - rho * x * std::exp(-rho * t) / std::sinh(rho * t);
            return 2.0 * s * std::exp(log_f(t)) * w;
        };

        // The s-integrand peaks near s = x / sqrt 2 and decays like x / s^2 beyond;
        // cut at the peak and geometrically after it so no piece spans many scales.
        const double end = std::sqrt(D);
        const double peak = x / std::numbers::sqrt2;
        std::vector<double> cuts{0.0, 0.25 * peak, 0.5 * peak};
        for (double c = peak; c < end; c *= 4.0) cuts.push_back(c);
        cuts.push_back(end);
        auto integrate = [&](auto&& f) {
            // The hitting-time density integrates to at most 1.
            detail::PiecewiseIntegral sum(Accuracy{}, 1e-14);
            for (std::size_t i = 1; i < cuts.size(); ++i) {
                const double lo = std::min(cuts[i - 1], end);
                const double hi = std::min(cuts[i], end);
                if (hi > lo) sum.smooth(f, lo, hi);
            }
            return sum.value();
        };
        return {P * integrate(value), P * integrate(slope)};
    }

    ProblemSpec spec_;
    double decay_ = 1.0; // e^{-rho D}
    double q_ = 0.0;     // (1 - e^{-2 rho D}) / (2 rho)
    double gbm_power_ = 0.0;
};

} // namespace divdelay
