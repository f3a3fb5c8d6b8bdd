#pragma once

// Checks of the structural assumptions the threshold-strategy optimality
// argument needs, evaluated on a grid for one post-payment level a:
//   r(a; a) < 0, r(x; a) > 0 somewhere, 0 < h < 1,
//   R and H increasing and concave in y = F(x) from some point on.
// Concavity in y is read off the sign of (A - alpha) applied to r and h, which
// has the sign of the second y-derivative.

#include "divdelay/errors.hpp"
#include "divdelay/kernels.hpp"
#include "divdelay/models.hpp"
#include "divdelay/transform.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace divdelay {

struct DiagnosticsGrid {
    int points = 200;
    std::optional<double> x_max; // defaults to the scale domain's x_max

    void validate() const {
        if (points < 8) throw ConfigError("diagnostics.points", "must be >= 8");
    }
};

/// Pass flag with the grid point and value that decided it.
struct Witness {
    bool pass = false;
    double x = std::numeric_limits<double>::quiet_NaN();
    double value = std::numeric_limits<double>::quiet_NaN();
};

/// Smallest grid x >= a from which a property holds at every later grid point.
struct Threshold {
    bool found = false;
    double x = std::numeric_limits<double>::quiet_NaN();
    double y = std::numeric_limits<double>::quiet_NaN();
};

struct DiagnosticsReport {
    double a = 0.0;
    double x_max = 0.0;
    Witness r_at_a_negative;
    bool a_at_ruin_level = false; // r(l; l) = 0 identically there
    // e^{-alpha D} h(a) < 1: the bound the fixed-point argument for J(a) actually
    // uses; weaker than r(a; a) < 0.
    Witness fixed_point_bound;
    Witness sup_r_positive;
    bool h_in_unit_interval = false;
    std::vector<double> h_violations;
    Threshold R_increasing_from;
    Threshold R_concave_from;
    Threshold H_increasing_from;
    Threshold H_concave_from;
    double smooth_fit_gap = std::numeric_limits<double>::quiet_NaN();
    // Square-root model only: sign of h' as printed against the derivative of h.
    std::optional<bool> printed_dh_negative;
    std::optional<bool> direct_dh_positive;

    bool all_pass() const {
        return r_at_a_negative.pass && sup_r_positive.pass &&
               h_in_unit_interval && R_increasing_from.found && R_concave_from.found &&
               H_increasing_from.found && H_concave_from.found;
    }

    std::vector<std::string> failures() const {
        std::vector<std::string> out;
        if (!r_at_a_negative.pass) out.emplace_back("r(a;a) < 0");
        if (!sup_r_positive.pass) out.emplace_back("sup r > 0");
        if (!h_in_unit_interval) out.emplace_back("0 < h < 1");
        if (!R_increasing_from.found) out.emplace_back("R eventually increasing");
        if (!R_concave_from.found) out.emplace_back("R eventually concave");
        if (!H_increasing_from.found) out.emplace_back("H eventually increasing");
        if (!H_concave_from.found) out.emplace_back("H eventually concave");
        return out;
    }
};

namespace detail {

/// lower + offsets log-spaced from 1e-4 (x_max - lower) to x_max - lower.
inline std::vector<double> log_grid(double lower, double x_max, int n) {
    std::vector<double> xs(static_cast<std::size_t>(n));
    const double span = x_max - lower;
    const double l0 = std::log(1e-4 * span);
    const double l1 = std::log(span);
    for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] =
        lower + std::exp(l0 + (l1 - l0) * i / (n - 1));
    xs.back() = x_max;
    return xs;
}

/// (A - alpha) applied to r(.; a) and h at x, second derivative by central
/// differences of the analytic first derivative.
inline std::array<double, 2> generator_on_kernel(const DelayKernel& kernel, double x, double a,
                                                 double x_max) {
    const auto& spec = kernel.spec();
    const double lo = spec.lower();
    double step = 1e-4 * (1.0 + std::abs(x));
    step = std::min(step, 0.5 * (x - lo));
    const double hi = std::min(x + step, x_max);
    const double lo_x = x - step;
    const auto k = kernel.eval(x, a);
    const auto kp = kernel.eval(hi, a);
    const auto km = kernel.eval(lo_x, a);
    const double d2r = (kp.dr - km.dr) / (hi - lo_x);
    const double d2h = (kp.dh - km.dh) / (hi - lo_x);
    return {generator_residual(spec, x, k.r, k.dr, d2r),
            generator_residual(spec, x, k.h, k.dh, d2h)};
}

inline Threshold threshold_from(const std::vector<double>& xs, const std::vector<char>& ok,
                                const ScalePair& scale) {
    Threshold t;
    std::size_t i = ok.size();
    while (i > 0 && ok[i - 1]) --i;
    if (i == ok.size()) return t;
    t.found = true;
    t.x = xs[i];
    t.y = scale.F(t.x);
    return t;
}

} // namespace detail

inline DiagnosticsReport check_hypotheses(const ScalePair& scale, const DelayKernel& kernel,
                                          double a, const DiagnosticsGrid& grid = {},
                                          std::optional<double> b = std::nullopt) {
    grid.validate();
    const auto& spec = kernel.spec();
    const double lo = spec.lower();
    if (!(a >= lo)) throw DomainError("check_hypotheses: a below the ruin level");
    const double x_max = grid.x_max.value_or(scale.x_max());
    if (!(x_max > a) || x_max > scale.x_max())
        throw ConfigError("diagnostics.x_max", "must lie in (a, scale x_max]");

    DiagnosticsReport rep;
    rep.a = a;
    rep.x_max = x_max;

    const double r_aa = kernel.eval(a, a).r;
    rep.r_at_a_negative = {r_aa < 0.0, a, r_aa};
    rep.a_at_ruin_level = a == lo;
    const double lag_weight = std::exp(-spec.alpha * spec.delta) * kernel.h(a);
    rep.fixed_point_bound = {lag_weight < 1.0, a, lag_weight};

    const auto xs = detail::log_grid(lo, x_max, grid.points);
    rep.h_in_unit_interval = true;
    Witness best{false, xs.front(), -std::numeric_limits<double>::infinity()};

    std::vector<double> tail;
    std::vector<char> r_inc, r_cav, h_inc, h_cav;
    for (double x : xs) {
        const auto k = kernel.eval(x, a);
        // h rounds to exactly 1 far above the barrier; only h <= 0 or h > 1 are violations.
        if (!(k.h > 0.0 && k.h <= 1.0)) {
            rep.h_in_unit_interval = false;
            rep.h_violations.push_back(x);
        }
        if (x >= a && k.r > best.value) best = {k.r > 0.0, x, k.r};
        if (x < a || x == lo) continue;
        const auto t = DelayKernel::transformed(scale.at(x), k);
        const auto gen = detail::generator_on_kernel(kernel, x, a, scale.x_max());
        tail.push_back(x);
        r_inc.push_back(t.dR_dy > 0.0);
        h_inc.push_back(t.dH_dy > 0.0);
        r_cav.push_back(gen[0] < 0.0);
        h_cav.push_back(gen[1] < 0.0);
    }
    rep.sup_r_positive = best;
    rep.R_increasing_from = detail::threshold_from(tail, r_inc, scale);
    rep.R_concave_from = detail::threshold_from(tail, r_cav, scale);
    rep.H_increasing_from = detail::threshold_from(tail, h_inc, scale);
    rep.H_concave_from = detail::threshold_from(tail, h_cav, scale);

    if (b) rep.smooth_fit_gap = std::abs(smooth_fit(scale, kernel, a, *b).residual());

    if (std::holds_alternative<SquareRoot>(spec.model) && spec.delta > 0.0) {
        bool printed_neg = true;
        bool direct_pos = true;
        for (double x : xs) {
            if (x <= lo) continue;
            printed_neg = printed_neg && kernel.printed_sqrt_dh_dx(x) < 0.0;
            // Far from 0 the density factor underflows to 0; only a negative value contradicts.
            direct_pos = direct_pos && kernel.dh_dx(x) >= 0.0;
        }
        rep.printed_dh_negative = printed_neg;
        rep.direct_dh_positive = direct_pos;
    }
    return rep;
}

} // namespace divdelay
