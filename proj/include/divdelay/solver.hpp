#pragma once

// Optimal thresholds. For a fixed a the trigger level b(a) is the root of the
// smooth-fit residual; a* maximises the resulting slope beta(a) over [a_min, a_hi].

#include "divdelay/diagnostics.hpp"
#include "divdelay/errors.hpp"
#include "divdelay/kernels.hpp"
#include "divdelay/models.hpp"
#include "divdelay/transform.hpp"

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace divdelay {

struct SolverConfig {
    std::optional<double> a_lo;  // defaults to the solvency floor
    double a_hi = 10.0;
    int a_points = 64;
    double b_offset = 1e-3;      // first scan point is a + b_offset
    double b_span = 20.0;        // initial bracket [a + b_offset, a + b_span]
    int b_scan_points = 64;
    std::optional<double> x_max; // defaults to min(10 (a_hi + b_span), overflow limit)
    double root_tol = 1e-10;
    double refine_tol = 1e-5;
    int max_iter = 200;
    Accuracy accuracy{};
    DiagnosticsGrid diagnostics{};

    void validate() const {
        if (a_lo && !std::isfinite(*a_lo)) throw ConfigError("solver.a_lo", "must be finite");
        if (!std::isfinite(a_hi)) throw ConfigError("solver.a_hi", "must be finite");
        if (a_points < 16) throw ConfigError("solver.a_points", "must be >= 16");
        if (!(b_offset > 0.0)) throw ConfigError("solver.b_offset", "must be > 0");
        if (!(b_span > b_offset)) throw ConfigError("solver.b_span", "must exceed b_offset");
        if (b_scan_points < 4) throw ConfigError("solver.b_scan_points", "must be >= 4");
        if (x_max && !std::isfinite(*x_max)) throw ConfigError("solver.x_max", "must be finite");
        if (!(root_tol > 0.0)) throw ConfigError("solver.root_tol", "must be > 0");
        if (!(refine_tol > 0.0)) throw ConfigError("solver.refine_tol", "must be > 0");
        if (max_iter < 10) throw ConfigError("solver.max_iter", "must be >= 10");
        accuracy.validate();
        diagnostics.validate();
    }
};

struct TriggerRoot {
    double b = 0.0;
    double beta = 0.0;
    int sign_changes = 0; // > 1 means the first (smallest) root was taken
};

struct BetaSample {
    double a = 0.0;
    double beta = std::numeric_limits<double>::quiet_NaN();
    double b = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    std::string error;
};

struct Optimum {
    double a = 0.0;
    double b = 0.0;
    double beta = 0.0;
};

struct SolveReport {
    Optimum optimum;
    std::optional<ValueFunction> value;
    std::vector<BetaSample> beta_curve;
    std::optional<DiagnosticsReport> diagnostics;
    std::optional<Optimum> comparison_delta0;
    std::vector<std::string> warnings;
    double x_max = 0.0;
};

/// Default working domain for a problem, honouring the overflow limit.
inline double default_x_max(const ProblemSpec& spec, const SolverConfig& cfg) {
    const ScalePair probe(spec, spec.lower() + 1.0, cfg.accuracy);
    const double limit = probe.overflow_limit();
    return std::min(10.0 * (cfg.a_hi + cfg.b_span), 0.999 * limit + 0.001 * spec.lower());
}

/// Root b > a of the smooth-fit residual for fixed a.
///
/// Scans [a + b_offset, a + b_span] on a uniform grid, doubles the bracket up to
/// x_max while no sign change is seen, and refines the first sign change with
/// TOMS 748.
inline TriggerRoot find_b(const ScalePair& scale, const DelayKernel& kernel, double a,
                          const SolverConfig& cfg = {}) {
    const auto& spec = kernel.spec();
    if (!(a >= spec.lower())) throw DomainError("find_b: a below the ruin level");
    const double x_max = scale.x_max();
    const auto s0 = scale.at(scale.lower());
    const auto sa = scale.at(a);
    auto residual = [&](double b) {
        return detail::smooth_fit(kernel, s0, sa, a, scale.at(b), b).residual();
    };

    double lo = a + cfg.b_offset;
    if (!(lo < x_max)) throw NumericalError("find_b: a + b_offset exceeds x_max");
    double hi = std::min(a + cfg.b_span, x_max);

    double prev_x = std::numeric_limits<double>::quiet_NaN();
    double prev_f = std::numeric_limits<double>::quiet_NaN();
    std::optional<std::pair<double, double>> bracket;
    std::pair<double, double> bracket_f{};
    int changes = 0;
    double start = lo;
    for (;;) {
        const int n = cfg.b_scan_points;
        for (int i = 0; i < n; ++i) {
            const double x = start + (hi - start) * i / (n - 1);
            if (x == prev_x) continue;
            double f;
            try {
                f = residual(x);
            } catch (const NumericalError&) {
                continue;
            }
            if (!std::isfinite(f)) continue;
            if (std::isfinite(prev_f) && ((prev_f < 0.0) != (f < 0.0))) {
                ++changes;
                if (!bracket) {
                    bracket = std::pair{prev_x, x};
                    bracket_f = {prev_f, f};
                }
            }
            if (f == 0.0) return {x, detail::linear_piece(kernel, s0, sa, scale.at(x),
                                                          kernel.eval(x, a)).beta,
                                  std::max(changes, 1)};
            prev_x = x;
            prev_f = f;
        }
        if (bracket || hi >= x_max) break;
        start = hi;
        hi = std::min(a + 2.0 * (hi - a), x_max);
    }
    if (!bracket)
        throw NumericalError("find_b: no sign change of the smooth-fit residual on (" +
                             std::to_string(lo) + ", " + std::to_string(x_max) +
                             "]; raise solver.x_max or check the model parameters");

    std::uintmax_t iters = static_cast<std::uintmax_t>(cfg.max_iter);
    const double tol = cfg.root_tol;
    auto stop = [tol](double l, double r) { return std::abs(r - l) <= tol * (1.0 + std::abs(l)); };
    const auto [l, r] = boost::math::tools::toms748_solve(residual, bracket->first, bracket->second,
                                                         bracket_f.first, bracket_f.second, stop,
                                                         iters);
    if (iters >= static_cast<std::uintmax_t>(cfg.max_iter))
        throw NumericalError("find_b: root refinement hit max_iter");
    const double b = 0.5 * (l + r);
    const double beta =
        detail::linear_piece(kernel, s0, sa, scale.at(b), kernel.eval(b, a)).beta;
    return {b, beta, changes};
}

namespace detail {

inline BetaSample sample_beta(const ScalePair& scale, const DelayKernel& kernel, double a,
                              const SolverConfig& cfg) {
    BetaSample s;
    s.a = a;
    try {
        const auto root = find_b(scale, kernel, a, cfg);
        s.b = root.b;
        s.beta = root.beta;
        s.ok = std::isfinite(root.beta);
        if (root.sign_changes > 1)
            s.error = "residual changes sign " + std::to_string(root.sign_changes) +
                      " times; smallest root taken";
    } catch (const NumericalError& e) {
        s.error = e.what();
    } catch (const AccuracyError& e) {
        s.error = e.what();
    }
    return s;
}

} // namespace detail

/// beta(a) and b(a) on a uniform grid of a.
inline std::vector<BetaSample> beta_curve(const ScalePair& scale, const DelayKernel& kernel,
                                          double a_lo, double a_hi, int n,
                                          const SolverConfig& cfg = {}) {
    if (n < 2 || !(a_hi > a_lo)) throw ConfigError("solver.a_points", "need n >= 2, a_hi > a_lo");
    std::vector<BetaSample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.push_back(detail::sample_beta(scale, kernel, a_lo + (a_hi - a_lo) * i / (n - 1), cfg));
    return out;
}

/// Grid search over a followed by golden-section refinement around the best grid
/// point. Optima on the lower boundary are accepted as such; between exactly tied
/// slopes the smaller a wins.
inline Optimum optimize_a(const ScalePair& scale, const DelayKernel& kernel,
                          const SolverConfig& cfg, std::vector<BetaSample>* curve = nullptr,
                          std::vector<std::string>* warnings = nullptr) {
    const auto& spec = kernel.spec();
    const double a_lo = std::max(cfg.a_lo.value_or(spec.floor()), spec.lower());
    const double a_hi = cfg.a_hi;
    if (!(a_hi > a_lo)) throw ConfigError("solver.a_hi", "must exceed the lower end of the a-range");

    auto samples = beta_curve(scale, kernel, a_lo, a_hi, cfg.a_points, cfg);
    auto better = [](double cand, double best) {
        return cand > best + 1e-12 * (1.0 + std::abs(best));
    };
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (!s.ok) continue;
        if (!s.error.empty() && warnings) warnings->push_back("a = " + std::to_string(s.a) + ": " + s.error);
        if (!best || better(s.beta, samples[*best].beta)) best = i;
    }
    if (!best) {
        const std::string why = samples.empty() ? std::string{} : samples.front().error;
        throw NumericalError("optimize_a: no a on the grid produced a trigger level (" + why + ")");
    }
    const std::size_t i = *best;
    Optimum opt{samples[i].a, samples[i].b, samples[i].beta};

    const double left = samples[i == 0 ? 0 : i - 1].a;
    const double right = samples[std::min(i + 1, samples.size() - 1)].a;
    auto eval_beta = [&](double a) {
        const auto s = detail::sample_beta(scale, kernel, a, cfg);
        return s.ok ? s : BetaSample{a, -std::numeric_limits<double>::infinity(), 0.0, false, {}};
    };

    // Golden-section search for the maximum of beta on [left, right].
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = left, hi = right;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    auto f1 = eval_beta(x1), f2 = eval_beta(x2);
    for (int it = 0; it < cfg.max_iter && hi - lo > cfg.refine_tol; ++it) {
        if (f1.beta >= f2.beta) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = eval_beta(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = eval_beta(x2);
        }
    }
    const auto& top = f1.beta >= f2.beta ? f1 : f2;
    if (top.ok && better(top.beta, opt.beta)) opt = {top.a, top.b, top.beta};
    if (curve) *curve = std::move(samples);
    return opt;
}

/// Full solve: optimum, value function, beta curve, diagnostics at a* and, on
/// request, the optimum of the same problem without delay.
inline SolveReport solve(const ProblemSpec& spec, const SolverConfig& cfg = {},
                         bool compare_delta0 = false) {
    spec.validate();
    cfg.validate();
    const double x_max = cfg.x_max.value_or(default_x_max(spec, cfg));
    ScalePair scale(spec, x_max, cfg.accuracy);
    DelayKernel kernel(spec);

    SolveReport rep;
    rep.x_max = x_max;
    rep.optimum = optimize_a(scale, kernel, cfg, &rep.beta_curve, &rep.warnings);
    rep.value.emplace(scale, kernel, Strategy{rep.optimum.a, rep.optimum.b});
    rep.diagnostics = check_hypotheses(scale, kernel, rep.optimum.a, cfg.diagnostics,
                                       rep.optimum.b);
    if (rep.optimum.a <= std::max(cfg.a_lo.value_or(spec.floor()), spec.lower()))
        rep.warnings.emplace_back("optimum on the lower end of the a-range");
    if (rep.optimum.b > 0.9 * x_max)
        rep.warnings.emplace_back("trigger level close to x_max");

    if (compare_delta0) {
        ProblemSpec undelayed = spec;
        undelayed.delta = 0.0;
        ScalePair s0(undelayed, x_max, cfg.accuracy);
        DelayKernel k0(undelayed);
        rep.comparison_delta0 = optimize_a(s0, k0, cfg);
    }
    return rep;
}

inline Optimum solve_delta0(const ProblemSpec& spec, const SolverConfig& cfg = {}) {
    ProblemSpec undelayed = spec;
    undelayed.delta = 0.0;
    return solve(undelayed, cfg, false).optimum;
}

} // namespace divdelay
