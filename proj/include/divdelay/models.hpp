#pragma once

// The four uncontrolled cash-reservoir diffusions, the problem data (discount,
// delay, fee, ruin penalty, solvency floor) and the increasing/decreasing
// solutions psi, phi of (A - alpha) u = 0 for each of them.

#include "divdelay/errors.hpp"
#include "divdelay/specfun.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>

namespace divdelay {

/// dX = mu dt + sigma dW
struct BrownianDrift {
    double mu = 0.0;
    double sigma = 1.0;
};

/// dX = -rho X dt + dW
struct OrnsteinUhlenbeck {
    double rho = 0.0;
};

/// dX = (1 - 2 rho X) dt + 2 sqrt(X) dW   (the square of an OU path)
struct SquareRoot {
    double rho = 0.0;
};

/// Which barrier-survival expectation E[X_D ; tau_d > D] the GBM kernel uses.
///  exact:   d1, d2 built with mu + sigma^2/2 (zero-strike down-and-out call).
///  printed: d1, d2 built with mu - sigma^2/2, the form the reference GBM thresholds were
///           produced with. Kept for reproduction only.
enum class GbmKernelForm { exact, printed };

/// dX = mu X dt + sigma X dW, ruined at d > 0.
struct GeometricBM {
    double mu = 0.0;
    double sigma = 1.0;
    double d = 1.0;
    GbmKernelForm kernel_form = GbmKernelForm::exact;
};

using ModelSpec = std::variant<BrownianDrift, OrnsteinUhlenbeck, SquareRoot, GeometricBM>;

inline std::string model_name(const ModelSpec& m) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, BrownianDrift>) return "brownian";
            else if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) return "ou";
            else if constexpr (std::is_same_v<T, SquareRoot>) return "sqrt";
            else return "gbm";
        },
        m);
}

/// Absorbing (ruin) level: 0, or d for GBM.
inline double left_boundary(const ModelSpec& m) {
    if (const auto* g = std::get_if<GeometricBM>(&m)) return g->d;
    return 0.0;
}

inline void validate(const ModelSpec& m) {
    std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, BrownianDrift>) {
                if (!(v.mu > 0.0)) throw ConfigError("model.mu", "must be > 0");
                if (!(v.sigma > 0.0)) throw ConfigError("model.sigma", "must be > 0");
            } else if constexpr (std::is_same_v<T, OrnsteinUhlenbeck> ||
                                 std::is_same_v<T, SquareRoot>) {
                if (!(v.rho > 0.0)) throw ConfigError("model.rho", "must be > 0");
            } else {
                if (!std::isfinite(v.mu)) throw ConfigError("model.mu", "must be finite");
                if (!(v.sigma > 0.0)) throw ConfigError("model.sigma", "must be > 0");
                if (!(v.d > 0.0)) throw ConfigError("model.d", "must be > 0");
            }
        },
        m);
}

struct ProblemSpec {
    ModelSpec model;
    double alpha = 0.1;      // discount rate
    double delta = 0.0;      // implementation delay
    double lambda_fee = 0.1; // fixed fee per payment
    double penalty_P = 0.0;  // ruin penalty (OU only)
    std::optional<double> a_min; // solvency floor; defaults to the ruin level

    double lower() const { return left_boundary(model); }
    double floor() const { return a_min.value_or(lower()); }

    void validate() const {
        divdelay::validate(model);
        if (!(alpha > 0.0)) throw ConfigError("model.alpha", "must be > 0");
        if (!(delta >= 0.0) || !std::isfinite(delta))
            throw ConfigError("model.delta", "must be >= 0");
        if (!(lambda_fee > 0.0)) throw ConfigError("model.lambda", "must be > 0");
        if (!(penalty_P >= 0.0)) throw ConfigError("model.penalty", "must be >= 0");
        if (penalty_P > 0.0 && !std::holds_alternative<OrnsteinUhlenbeck>(model))
            throw ConfigError("model.penalty", "a ruin penalty is only supported for the OU model");
        if (a_min && !(*a_min >= lower()))
            throw ConfigError("model.a_min", "must be >= the ruin level");
    }
};

inline double drift(const ModelSpec& m, double x) {
    return std::visit(
        [x](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, BrownianDrift>) return v.mu;
            else if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) return -v.rho * x;
            else if constexpr (std::is_same_v<T, SquareRoot>) return 1.0 - 2.0 * v.rho * x;
            else return v.mu * x;
        },
        m);
}

inline double vol(const ModelSpec& m, double x) {
    return std::visit(
        [x](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, BrownianDrift>) return v.sigma;
            else if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) return 1.0;
            else if constexpr (std::is_same_v<T, SquareRoot>) {
                if (x < 0.0) throw DomainError("vol: square-root model undefined for x < 0");
                return 2.0 * std::sqrt(x);
            } else return v.sigma * x;
        },
        m);
}

/// (A - alpha) u at x, given u, u', u''.
inline double generator_residual(const ProblemSpec& spec, double x, double u, double du,
                                 double d2u) {
    const double s = vol(spec.model, x);
    return 0.5 * s * s * d2u + drift(spec.model, x) * du - spec.alpha * u;
}

/// psi, phi and their logarithmic derivatives at one point.
struct ScaleAt {
    double log_psi;
    double log_phi;
    double dlog_psi; // psi'/psi
    double dlog_phi; // phi'/phi

    double psi() const { return std::exp(log_psi); }
    double phi() const { return std::exp(log_phi); }
    double dpsi() const { return log_psi == -INFINITY ? INFINITY : psi() * dlog_psi; }
    double dphi() const { return phi() * dlog_phi; }
    double F() const { return std::exp(log_psi - log_phi); }
    double dF() const { return F() * (dlog_psi - dlog_phi); }
};

/// Scale functions of one problem, restricted to the working domain [lower, x_max].
///
/// The normalisation follows the closed forms exactly (no rescaling), so slopes
/// in the transformed space are comparable across implementations:
///   BM:   psi = e^{D1 x}, phi = e^{D2 x}
///   OU:   psi = e^{rho x^2/2} D_nu(-x sqrt(2 rho)), phi = e^{rho x^2/2} D_nu(x sqrt(2 rho))
///   sqrt: psi = x^{-1/4} e^{rho x/2} M_{k,-1/4}(rho x), phi = same with W
///   GBM:  psi = x^{q - kappa}, phi = x^{-q - kappa}
/// with nu = -alpha/rho, k = -alpha/(2 rho) + 1/4.
class ScalePair {
public:
    ScalePair(ProblemSpec spec, double x_max, Accuracy acc = {})
        : spec_(std::move(spec)), acc_(acc), x_max_(x_max) {
        spec_.validate();
        acc_.validate();
        if (!(x_max_ > spec_.lower()))
            throw ConfigError("solver.x_max", "must exceed the ruin level");
        init_constants();
        const double limit = overflow_limit();
        if (x_max_ > limit)
            throw NumericalError("scale functions overflow beyond x = " + std::to_string(limit) +
                                 "; reduce x_max");
    }

    const ProblemSpec& spec() const { return spec_; }
    const Accuracy& accuracy() const { return acc_; }
    double lower() const { return spec_.lower(); }
    double x_max() const { return x_max_; }

    ScaleAt at(double x) const {
        if (x < lower()) throw DomainError("scale functions evaluated below the ruin level");
        return std::visit([&](const auto& m) { return eval(m, x); }, spec_.model);
    }

    double psi(double x) const { return at(x).psi(); }
    double phi(double x) const { return at(x).phi(); }
    double dpsi(double x) const { return at(x).dpsi(); }
    double dphi(double x) const { return at(x).dphi(); }
    double F(double x) const { return at(x).F(); }
    double dF(double x) const { return at(x).dF(); }

    /// Inverse of F on [lower, x_max] by bisection to full double resolution.
    double F_inv(double y) const {
        const double y_lo = F(lower());
        const double y_hi = F(x_max_);
        if (!(y >= y_lo && y <= y_hi))
            throw DomainError("F_inv: argument outside [F(lower), F(x_max)]");
        if (y == y_lo) return lower();
        if (y == y_hi) return x_max_;
        double lo = lower();
        double hi = x_max_;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            const auto s = at(mid);
            const bool below = y > 0.0 ? (s.log_psi - s.log_phi) < std::log(y) : s.F() < y;
            (below ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    /// Largest x at which psi, phi and F are all representable with margin.
    double overflow_limit() const {
        auto ok = [&](double x) {
            const auto s = at(x);
            return std::abs(s.log_psi) < 600.0 && std::abs(s.log_phi) < 600.0 &&
                   std::abs(s.log_psi - s.log_phi) < 600.0;
        };
        double lo = lower() + 1.0;
        if (!ok(lo)) return lower();
        double hi = lo;
        while (ok(hi)) {
            lo = hi;
            hi = lower() + 2.0 * (hi - lower());
            if (hi > 1e8) return hi;
        }
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (lo + hi);
            (ok(mid) ? lo : hi) = mid;
        }
        return lo;
    }

private:
    void init_constants() {
        const double alpha = spec_.alpha;
        if (const auto* bm = std::get_if<BrownianDrift>(&spec_.model)) {
            const double s2 = bm->sigma * bm->sigma;
            const double root = std::sqrt(bm->mu * bm->mu + 2.0 * alpha * s2);
            c1_ = (-bm->mu + root) / s2;
            c2_ = (-bm->mu - root) / s2;
        } else if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&spec_.model)) {
            nu_ = -alpha / ou->rho;
            c1_ = std::sqrt(2.0 * ou->rho);
        } else if (const auto* sq = std::get_if<SquareRoot>(&spec_.model)) {
            nu_ = -alpha / sq->rho;
            const double ar = alpha / sq->rho;
            // x^{-1/4} sqrt(sqrt(2 rho x)) = (2 rho)^{1/4}
            const double quarter = std::pow(2.0 * sq->rho, 0.25);
            c1_ = std::log(gamma_fn(0.5 * (1.0 + ar)) / (2.0 * std::sqrt(std::numbers::pi)) *
                           quarter);
            c2_ = std::log(std::exp2(0.5 * ar - 0.25) * quarter);
        } else {
            const auto& g = std::get<GeometricBM>(spec_.model);
            const double s2 = g.sigma * g.sigma;
            const double kappa = g.mu / s2 - 0.5;
            const double q = std::sqrt(kappa * kappa + 2.0 * alpha / s2);
            c1_ = q - kappa;
            c2_ = -q - kappa;
        }
    }

    ScaleAt eval(const BrownianDrift&, double x) const {
        return {c1_ * x, c2_ * x, c1_, c2_};
    }

    ScaleAt eval(const OrnsteinUhlenbeck& m, double x) const {
        const double z = c1_ * x;
        const double quad = 0.5 * m.rho * x * x;
        return {quad + log_pcf_D(nu_, -z, acc_), quad + log_pcf_D(nu_, z, acc_),
                m.rho * x - c1_ * pcf_D_log_derivative(nu_, -z, acc_),
                m.rho * x + c1_ * pcf_D_log_derivative(nu_, z, acc_)};
    }

    ScaleAt eval(const SquareRoot& m, double x) const {
        const double lin = 0.5 * m.rho * x;
        if (x == 0.0) {
            return {-INFINITY, c2_ + log_pcf_D(nu_, 0.0, acc_), INFINITY, -INFINITY};
        }
        const double X = std::sqrt(2.0 * m.rho * x);
        const double log_dn = log_pcf_D(nu_, -X, acc_);
        const double log_dp = log_pcf_D(nu_, X, acc_);
        const double ln = pcf_D_log_derivative(nu_, -X, acc_);
        const double lp = pcf_D_log_derivative(nu_, X, acc_);
        const double q = std::exp(log_dp - log_dn); // D(X)/D(-X) < 1
        const double dXdx = m.rho / X;
        return {c1_ + lin + log_dn + std::log1p(-q), c2_ + lin + log_dp,
                0.5 * m.rho + dXdx * (-ln - lp * q) / (1.0 - q), 0.5 * m.rho + dXdx * lp};
    }

    ScaleAt eval(const GeometricBM&, double x) const {
        const double lx = std::log(x);
        return {c1_ * lx, c2_ * lx, c1_ / x, c2_ / x};
    }

    ProblemSpec spec_;
    Accuracy acc_;
    double x_max_;
    double nu_ = 0.0;
    double c1_ = 0.0;
    double c2_ = 0.0;
};

struct HittingTransforms {
    double up;   // E^x[e^{-alpha tau_r}; tau_r < tau_l]
    double down; // E^x[e^{-alpha tau_l}; tau_l < tau_r]
};

inline HittingTransforms laplace_hitting(const ScalePair& scale, double x, double l, double r) {
    if (!(l <= x && x <= r && l < r))
        throw DomainError("laplace_hitting: requires l <= x <= r, l < r");
    if (x == r) return {1.0, 0.0};
    if (x == l) return {0.0, 1.0};
    const auto sl = scale.at(l);
    const auto sx = scale.at(x);
    const auto sr = scale.at(r);
    const double span = sr.F() - sl.F();
    return {std::exp(sx.log_phi - sr.log_phi) * (sx.F() - sl.F()) / span,
            std::exp(sx.log_phi - sl.log_phi) * (sr.F() - sx.F()) / span};
}

} // namespace divdelay
