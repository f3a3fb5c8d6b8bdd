#pragma once

// Monte Carlo oracle for the delayed threshold strategy and for the one-cycle
// expectation behind the kernels. Euler-Maruyama on a fixed grid; the square-
// root model uses full truncation. Barrier crossings are detected on the grid,
// optionally refined by the Brownian-bridge crossing probability
//   exp(-2 (u0 - U)(u1 - U) / dt)
// in the coordinate u(x) with unit volatility (x / sigma, x, sqrt x, log(x) / sigma).
//
// Each path draws from its own stream keyed by (seed, path index), so results
// do not depend on how paths are spread over threads.

#include "divdelay/errors.hpp"
#include "divdelay/models.hpp"
#include "divdelay/transform.hpp"

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

namespace divdelay {

enum class SimScheme {
    automatic,       // full truncation for the square-root model, plain Euler otherwise
    euler,
    full_truncation, // drift and volatility evaluated at max(x, 0)
    root_transform,  // square-root model: Euler on Y = sqrt(X), dY = -rho Y dt + dW, X = Y^2
};

struct SimConfig {
    int n_paths = 10000;
    double dt = 1e-3;
    std::optional<double> horizon; // defaults to 50 / alpha
    std::uint64_t seed = 1;
    SimScheme scheme = SimScheme::automatic;
    bool bridge = false; // Brownian-bridge crossing correction
    int threads = 1;
    // Normals drawn per step; the step uses their scaled sum. A run with dt and
    // draws_per_step = 2 follows the same Brownian path as one with dt / 2 and 1.
    int draws_per_step = 1;

    double horizon_for(const ProblemSpec& spec) const { return horizon.value_or(50.0 / spec.alpha); }

    void validate(const ProblemSpec& spec) const {
        if (n_paths < 1000) throw ConfigError("sim.n_paths", "must be >= 1000");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sim.dt", "must be > 0");
        if (!(horizon_for(spec) >= 50.0 / spec.alpha * (1.0 - 1e-12)))
            throw ConfigError("sim.horizon", "must be >= 50 / alpha");
        if (threads < 1) throw ConfigError("sim.threads", "must be >= 1");
        if (draws_per_step < 1) throw ConfigError("sim.draws_per_step", "must be >= 1");
        if (scheme == SimScheme::euler && std::holds_alternative<SquareRoot>(spec.model))
            throw ConfigError("sim.scheme", "the square-root model needs full_truncation");
        if ((scheme == SimScheme::full_truncation || scheme == SimScheme::root_transform) &&
            !std::holds_alternative<SquareRoot>(spec.model))
            throw ConfigError("sim.scheme", "full_truncation and root_transform apply to the square-root model only");
    }
};

struct SimEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int n_paths = 0;
    int n_ruined = 0;
    int n_truncated = 0;
    long long n_payouts = 0;
    // e^{-alpha horizon} (b + P): bound on the value discarded by truncation.
    double truncation_bound = 0.0;
};

/// splitmix64 as a UniformRandomBitGenerator; one instance per path.
class PathStream {
public:
    using result_type = std::uint64_t;

    PathStream(std::uint64_t seed, std::uint64_t path)
        : state_(mix(seed ^ mix(path + 0x632be59bd9b4e019ULL))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

namespace detail {

/// Pairwise sum in index order; the result does not depend on thread count.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 16) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

template <class Fn>
void for_each_path(int n_paths, int threads, Fn&& fn) {
    const int t = std::max(1, std::min(threads, n_paths));
    if (t == 1) {
        for (int i = 0; i < n_paths; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int k = 0; k < t; ++k) {
        pool.emplace_back([&, k] {
            try {
                for (int i = k; i < n_paths; i += t) fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

/// Sample mean and standard error, accumulated about the first sample so a
/// constant sample has exactly zero error.
inline void mean_and_error(const std::vector<double>& v, SimEstimate& out) {
    const double n = static_cast<double>(v.size());
    out.n_paths = static_cast<int>(v.size());
    const double shift = v.front();
    std::vector<double> d(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) d[i] = v[i] - shift;
    const double dm = pairwise_sum(d) / n;
    out.mean = shift + dm;
    for (auto& x : d) x = (x - dm) * (x - dm);
    out.std_error = v.size() > 1 ? std::sqrt(pairwise_sum(d) / (n - 1.0) / n) : 0.0;
}

/// One Euler path of the uncontrolled diffusion with barrier monitoring.
class Stepper {
public:
    Stepper(const ProblemSpec& spec, const SimConfig& cfg, std::uint64_t path)
        : kind_(cfg.scheme == SimScheme::root_transform ? root_kind : spec.model.index()),
          lower_(spec.lower()), bridge_(cfg.bridge),
          draws_(cfg.draws_per_step), draw_scale_(1.0 / std::sqrt(double(cfg.draws_per_step))),
          rng_(cfg.seed, path), bridge_rng_(cfg.seed ^ 0x5851f42d4c957f2dULL, path) {
        std::visit(
            [this](const auto& m) {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, BrownianDrift> || std::is_same_v<T, GeometricBM>) {
                    p1_ = m.mu;
                    p2_ = m.sigma;
                } else {
                    p1_ = m.rho;
                }
            },
            spec.model);
        lower_u_ = unit_vol(lower_);
    }

    enum class Event { none, upper, lower };

    /// Advances x by h. Reports the first barrier crossed (lower checked first);
    /// on either crossing x is set to that barrier.
    Event step(double& x, double h, double upper = INFINITY) {
        double mu, s;
        switch (kind_) {
        case 0: mu = p1_; s = p2_; break;
        case 1: mu = -p1_ * x; s = 1.0; break;
        case 2: {
            const double xp = std::max(x, 0.0); // full truncation
            mu = 1.0 - 2.0 * p1_ * xp;
            s = 2.0 * std::sqrt(xp);
            break;
        }
        case root_kind: {
            const double y = std::sqrt(x);
            mu = -p1_ * y;
            s = 1.0;
            break;
        }
        default: mu = p1_ * x; s = p2_ * x; break;
        }
        double z = normal_(rng_);
        if (draws_ > 1) {
            for (int i = 1; i < draws_; ++i) z += normal_(rng_);
            z *= draw_scale_;
        }
        double next;
        if (kind_ == root_kind) {
            const double y = std::sqrt(x) + mu * h + std::sqrt(h) * z;
            next = y <= 0.0 ? 0.0 : y * y;
        } else {
            next = x + mu * h + s * std::sqrt(h) * z;
        }
        if (next <= lower_) {
            x = lower_;
            return Event::lower;
        }
        if (next >= upper) {
            x = upper;
            return Event::upper;
        }
        if (bridge_) {
            const double u0 = unit_vol(x), u1 = unit_vol(next);
            if (crossed(u0, u1, lower_u_, h)) {
                x = lower_;
                return Event::lower;
            }
            if (std::isfinite(upper)) {
                if (upper != upper_) {
                    upper_ = upper;
                    upper_u_ = unit_vol(upper);
                }
                if (crossed(u0, u1, upper_u_, h)) {
                    x = upper;
                    return Event::upper;
                }
            }
        }
        x = next;
        return Event::none;
    }

private:
    // Coordinate in which the diffusion has unit volatility.
    double unit_vol(double x) const {
        switch (kind_) {
        case 0: return x / p2_;
        case 1: return x;
        case 2:
        case root_kind: return std::sqrt(std::max(x, 0.0));
        default: return std::log(x) / p2_;
        }
    }

    bool crossed(double u0, double u1, double u, double h) {
        const double e = 2.0 * (u0 - u) * (u1 - u) / h;
        if (e > 40.0) return false; // probability below 4e-18; skip the draw
        return uniform_(bridge_rng_) < std::exp(-e);
    }

    static constexpr std::size_t root_kind = 4;
    std::size_t kind_; // index into ModelSpec, or root_kind
    double p1_ = 0.0;
    double p2_ = 0.0;
    double lower_;
    double lower_u_ = 0.0;
    double upper_ = INFINITY;
    double upper_u_ = INFINITY;
    bool bridge_;
    int draws_;
    double draw_scale_;
    PathStream rng_;
    PathStream bridge_rng_; // separate so coupled runs keep their normals aligned
    boost::random::normal_distribution<double> normal_;
    boost::random::uniform_01<double> uniform_;
};

struct LagOutcome {
    bool survived;
    double x_end; // state at the end of the lag when survived
    double tau;   // ruin time measured from the start of the lag otherwise
};

inline LagOutcome run_lag(Stepper& st, double x, double delta, double dt) {
    if (delta == 0.0) return {true, x, 0.0};
    const long n = std::max(1L, std::lround(delta / dt));
    const double h = delta / static_cast<double>(n);
    for (long k = 0; k < n; ++k) {
        if (st.step(x, h) == Stepper::Event::lower)
            return {false, x, h * static_cast<double>(k + 1)};
    }
    return {true, x, delta};
}

} // namespace detail

/// Discounted dividends minus the discounted ruin penalty under the strategy
/// (a, b) with delay, started at x0.
inline SimEstimate simulate_strategy(const ProblemSpec& spec, const Strategy& strategy, double x0,
                                     const SimConfig& cfg) {
    spec.validate();
    cfg.validate(spec);
    strategy.validate(spec);
    const double lo = spec.lower();
    if (!(x0 >= lo)) throw DomainError("simulate_strategy: x0 below the ruin level");

    const double horizon = cfg.horizon_for(spec);
    const double alpha = spec.alpha;
    const double P = spec.penalty_P;
    const double a = strategy.a;
    const double b = strategy.b;
    const auto n = static_cast<std::size_t>(cfg.n_paths);

    std::vector<double> value(n);
    std::vector<char> ruined(n), truncated(n);
    std::vector<long long> payouts(n);

    detail::for_each_path(cfg.n_paths, cfg.threads, [&](int i) {
        detail::Stepper st(spec, cfg, static_cast<std::uint64_t>(i));
        double x = x0;
        double t = 0.0;
        double v = 0.0;
        long long paid = 0;
        bool dead = x <= lo;
        bool cut = false;
        double ruin_time = 0.0;
        while (!dead && !cut) {
            // Wait for the trigger.
            while (x < b) {
                if (t >= horizon) {
                    cut = true;
                    break;
                }
                const double h = std::min(cfg.dt, horizon - t);
                const auto ev = st.step(x, h, b);
                t += h;
                if (ev == detail::Stepper::Event::lower) {
                    dead = true;
                    ruin_time = t;
                    break;
                }
            }
            if (dead || cut) break;
            // Trigger reached at t; the payment executes after the lag.
            const auto lag = detail::run_lag(st, x, spec.delta, cfg.dt);
            if (!lag.survived) {
                dead = true;
                ruin_time = t + lag.tau;
                break;
            }
            t += spec.delta;
            v += std::exp(-alpha * t) * (lag.x_end - a - spec.lambda_fee);
            ++paid;
            x = a;
            if (x <= lo) {
                dead = true;
                ruin_time = t;
            }
        }
        if (dead && P > 0.0) v -= P * std::exp(-alpha * ruin_time);
        const auto k = static_cast<std::size_t>(i);
        value[k] = v;
        ruined[k] = dead;
        truncated[k] = cut;
        payouts[k] = paid;
    });

    SimEstimate est;
    detail::mean_and_error(value, est);
    for (std::size_t k = 0; k < n; ++k) {
        est.n_ruined += ruined[k];
        est.n_truncated += truncated[k];
        est.n_payouts += payouts[k];
    }
    est.truncation_bound = std::exp(-alpha * horizon) * (b + P);
    return est;
}

/// One intervention cycle from x0 with the continuation value J(a) replaced by
/// j: E[1{D < tau} e^{-alpha D}(X_D - a - lambda + j)] - P E[e^{-alpha tau}; tau <= D],
/// for each (a, j) on common paths.
struct KernelQuery {
    double a;
    double j;
};

inline std::vector<SimEstimate> simulate_kernel_B_batch(const ProblemSpec& spec, double x0,
                                                        const std::vector<KernelQuery>& queries,
                                                        const SimConfig& cfg) {
    spec.validate();
    cfg.validate(spec);
    const double lo = spec.lower();
    if (!(x0 >= lo)) throw DomainError("simulate_kernel_B: x0 below the ruin level");
    for (const auto& q : queries)
        if (!(q.a >= lo)) throw DomainError("simulate_kernel_B: a below the ruin level");

    const auto n = static_cast<std::size_t>(cfg.n_paths);
    const double disc = std::exp(-spec.alpha * spec.delta);
    std::vector<detail::LagOutcome> lags(n);
    detail::for_each_path(cfg.n_paths, cfg.threads, [&](int i) {
        detail::Stepper st(spec, cfg, static_cast<std::uint64_t>(i));
        lags[static_cast<std::size_t>(i)] =
            x0 <= lo ? detail::LagOutcome{false, lo, 0.0}
                     : detail::run_lag(st, x0, spec.delta, cfg.dt);
    });

    std::vector<SimEstimate> out;
    out.reserve(queries.size());
    std::vector<double> value(n);
    for (const auto& q : queries) {
        const double c = q.a + spec.lambda_fee;
        int ruined = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const auto& lag = lags[k];
            if (lag.survived) {
                value[k] = disc * (lag.x_end - c + q.j);
            } else {
                ++ruined;
                // With no lag a start at the ruin level is worth nothing (h = r = 0 there).
                value[k] = spec.delta > 0.0 ? -spec.penalty_P * std::exp(-spec.alpha * lag.tau)
                                            : 0.0;
            }
        }
        SimEstimate est;
        detail::mean_and_error(value, est);
        est.n_ruined = ruined;
        out.push_back(est);
    }
    return out;
}

inline SimEstimate simulate_kernel_B(const ProblemSpec& spec, double x0, double a, double j_const,
                                     const SimConfig& cfg) {
    return simulate_kernel_B_batch(spec, x0, {{a, j_const}}, cfg).front();
}

/// E[1{D < tau} e^{-alpha D}], the discounted survival weight over the lag.
inline SimEstimate simulate_survival(const ProblemSpec& spec, double x0, const SimConfig& cfg) {
    spec.validate();
    cfg.validate(spec);
    if (!(x0 >= spec.lower())) throw DomainError("simulate_survival: x0 below the ruin level");
    const auto n = static_cast<std::size_t>(cfg.n_paths);
    const double disc = std::exp(-spec.alpha * spec.delta);
    std::vector<double> value(n);
    detail::for_each_path(cfg.n_paths, cfg.threads, [&](int i) {
        detail::Stepper st(spec, cfg, static_cast<std::uint64_t>(i));
        const bool alive =
            x0 > spec.lower() && detail::run_lag(st, x0, spec.delta, cfg.dt).survived;
        value[static_cast<std::size_t>(i)] = alive ? disc : 0.0;
    });
    SimEstimate est;
    detail::mean_and_error(value, est);
    return est;
}

} // namespace divdelay
