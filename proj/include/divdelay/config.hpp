#pragma once

// Flat "key = value" run configuration. Keys are namespaced model.*, solver.*,
// sim.* and output.*; '#' starts a comment. Errors carry the offending key and,
// when it came from the file, the line number.

#include "divdelay/errors.hpp"
#include "divdelay/models.hpp"
#include "divdelay/simulator.hpp"
#include "divdelay/solver.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace divdelay {

struct RunConfig {
    ProblemSpec problem;
    SolverConfig solver;
    SimConfig sim;
    std::vector<double> sim_points; // start points for the simulate command; empty = automatic
    int value_points = 201;
    std::optional<double> value_x_max; // defaults to 2 b*

    void validate() const {
        problem.validate();
        solver.validate();
        sim.validate(problem);
        if (value_points < 2) throw ConfigError("output.value_points", "must be >= 2");
        if (value_x_max && !(*value_x_max > problem.lower()))
            throw ConfigError("output.value_x_max", "must exceed the ruin level");
        for (double x : sim_points)
            if (!(x >= problem.lower())) throw ConfigError("sim.x0", "points must be >= the ruin level");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

class KeyValues {
public:
    void add(const std::string& key, const std::string& value, int line) {
        if (entries_.count(key))
            throw ConfigError(key, "line " + std::to_string(line) + ": duplicate key");
        entries_[key] = {value, line, false};
    }

    std::optional<std::string> take(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        it->second.used = true;
        return it->second.value;
    }

    int line_of(const std::string& key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    void reject_unused() const {
        for (const auto& [k, e] : entries_)
            if (!e.used) throw ConfigError(k, "line " + std::to_string(e.line) + ": unknown key");
    }

    double number(const std::string& key, const std::string& text) const {
        const std::string t = trim(text);
        double v = 0.0;
        const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (res.ec != std::errc{} || res.ptr != t.data() + t.size() || t.empty())
            throw ConfigError(key, where(key) + "not a number: '" + t + "'");
        return v;
    }

    long long integer(const std::string& key, const std::string& text) const {
        const std::string t = trim(text);
        long long v = 0;
        const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (res.ec != std::errc{} || res.ptr != t.data() + t.size() || t.empty())
            throw ConfigError(key, where(key) + "not an integer: '" + t + "'");
        return v;
    }

    bool boolean(const std::string& key, const std::string& text) const {
        const std::string t = trim(text);
        if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
        if (t == "false" || t == "0" || t == "no" || t == "off") return false;
        throw ConfigError(key, where(key) + "not a boolean: '" + t + "'");
    }

    std::string where(const std::string& key) const {
        const int line = line_of(key);
        return line > 0 ? "line " + std::to_string(line) + ": " : std::string{};
    }

private:
    struct Entry {
        std::string value;
        int line;
        bool used;
    };
    std::map<std::string, Entry> entries_;
};

} // namespace detail

inline RunConfig parse_config(std::istream& in) {
    detail::KeyValues kv;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "empty key");
        kv.add(key, detail::trim(line.substr(eq + 1)), line_no);
    }

    auto num = [&](const std::string& k) -> std::optional<double> {
        if (auto v = kv.take(k)) return kv.number(k, *v);
        return std::nullopt;
    };
    auto integer = [&](const std::string& k) -> std::optional<long long> {
        if (auto v = kv.take(k)) return kv.integer(k, *v);
        return std::nullopt;
    };
    auto as_int = [&](const std::string& k, long long v) {
        if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(k, kv.where(k) + "out of range");
        return static_cast<int>(v);
    };

    RunConfig cfg;
    const auto type = kv.take("model.type");
    if (!type) throw ConfigError("model.type", "missing (brownian, ou, sqrt or gbm)");
    const auto mu = num("model.mu");
    const auto sigma = num("model.sigma");
    const auto rho = num("model.rho");
    const auto d = num("model.d");
    const auto form = kv.take("model.gbm_kernel");
    auto need = [&](const std::optional<double>& v, const std::string& k) {
        if (!v) throw ConfigError(k, "required for model.type = " + *type);
        return *v;
    };
    if (*type == "brownian") {
        cfg.problem.model = BrownianDrift{need(mu, "model.mu"), need(sigma, "model.sigma")};
    } else if (*type == "ou") {
        cfg.problem.model = OrnsteinUhlenbeck{need(rho, "model.rho")};
    } else if (*type == "sqrt") {
        cfg.problem.model = SquareRoot{need(rho, "model.rho")};
    } else if (*type == "gbm") {
        GeometricBM g{need(mu, "model.mu"), need(sigma, "model.sigma"), need(d, "model.d")};
        if (form) {
            if (*form == "exact") g.kernel_form = GbmKernelForm::exact;
            else if (*form == "printed") g.kernel_form = GbmKernelForm::printed;
            else throw ConfigError("model.gbm_kernel", kv.where("model.gbm_kernel") +
                                                            "expected exact or printed");
        }
        cfg.problem.model = g;
    } else {
        throw ConfigError("model.type", kv.where("model.type") + "unknown model '" + *type + "'");
    }
    if (form && *type != "gbm")
        throw ConfigError("model.gbm_kernel", kv.where("model.gbm_kernel") + "only for gbm");
    const std::map<std::string, std::vector<std::string>> params{
        {"brownian", {"model.mu", "model.sigma"}},
        {"ou", {"model.rho"}},
        {"sqrt", {"model.rho"}},
        {"gbm", {"model.mu", "model.sigma", "model.d"}}};
    const auto& allowed = params.at(*type);
    for (const auto& [k, v] : std::map<std::string, std::optional<double>>{
             {"model.mu", mu}, {"model.sigma", sigma}, {"model.rho", rho}, {"model.d", d}}) {
        if (v && std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw ConfigError(k, kv.where(k) + "not a parameter of model.type = " + *type);
    }

    auto& p = cfg.problem;
    if (auto v = num("model.alpha")) p.alpha = *v;
    if (auto v = num("model.delta")) p.delta = *v;
    if (auto v = num("model.lambda")) p.lambda_fee = *v;
    if (auto v = num("model.penalty")) p.penalty_P = *v;
    if (auto v = num("model.a_min")) p.a_min = *v;

    auto& s = cfg.solver;
    if (auto v = num("solver.a_lo")) s.a_lo = *v;
    if (auto v = num("solver.a_hi")) s.a_hi = *v;
    if (auto v = integer("solver.a_points")) s.a_points = as_int("solver.a_points", *v);
    if (auto v = num("solver.b_offset")) s.b_offset = *v;
    if (auto v = num("solver.b_span")) s.b_span = *v;
    if (auto v = integer("solver.b_scan_points")) s.b_scan_points = as_int("solver.b_scan_points", *v);
    if (auto v = num("solver.x_max")) s.x_max = *v;
    if (auto v = num("solver.root_tol")) s.root_tol = *v;
    if (auto v = num("solver.refine_tol")) s.refine_tol = *v;
    if (auto v = integer("solver.max_iter")) s.max_iter = as_int("solver.max_iter", *v);
    if (auto v = num("solver.rel_tol")) s.accuracy.rel_tol = *v;
    if (auto v = integer("solver.quad_points")) s.accuracy.quad_points = as_int("solver.quad_points", *v);
    if (auto v = integer("solver.diagnostic_points"))
        s.diagnostics.points = as_int("solver.diagnostic_points", *v);

    auto& m = cfg.sim;
    if (auto v = integer("sim.n_paths")) m.n_paths = as_int("sim.n_paths", *v);
    if (auto v = num("sim.dt")) m.dt = *v;
    if (auto v = num("sim.horizon")) m.horizon = *v;
    if (auto v = integer("sim.seed")) {
        if (*v < 0) throw ConfigError("sim.seed", kv.where("sim.seed") + "must be >= 0");
        m.seed = static_cast<std::uint64_t>(*v);
    }
    if (auto v = kv.take("sim.bridge")) m.bridge = kv.boolean("sim.bridge", *v);
    if (auto v = integer("sim.threads")) m.threads = as_int("sim.threads", *v);
    if (auto v = integer("sim.draws_per_step")) m.draws_per_step = as_int("sim.draws_per_step", *v);
    if (auto v = kv.take("sim.scheme")) {
        if (*v == "auto") m.scheme = SimScheme::automatic;
        else if (*v == "euler") m.scheme = SimScheme::euler;
        else if (*v == "full_truncation") m.scheme = SimScheme::full_truncation;
        else if (*v == "root_transform") m.scheme = SimScheme::root_transform;
        else throw ConfigError("sim.scheme", kv.where("sim.scheme") +
                                                 "expected auto, euler, full_truncation or root_transform");
    }
    if (auto v = kv.take("sim.x0")) {
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) cfg.sim_points.push_back(kv.number("sim.x0", item));
    }
    if (auto v = integer("output.value_points")) cfg.value_points = as_int("output.value_points", *v);
    if (auto v = num("output.value_x_max")) cfg.value_x_max = *v;

    kv.reject_unused();
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        const int line = kv.line_of(e.field());
        if (line == 0) throw;
        throw ConfigError(e.field(), "line " + std::to_string(line) + ": " +
                                         std::string(e.what()).substr(e.field().size() + 2));
    }
    return cfg;
}

inline RunConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    return parse_config(in);
}

} // namespace divdelay
