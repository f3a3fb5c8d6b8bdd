// divdelay: optimal dividend thresholds under an implementation delay.
//
//   divdelay solve|curve|value|check|simulate --config <path> --out <dir> [--seed N] [--delta0]

#include "divdelay/divdelay.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace divdelay;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
        row_strings(header);
    }

    void row(const std::vector<double>& values) {
        std::vector<std::string> s;
        s.reserve(values.size());
        for (double v : values) s.push_back(num(v));
        row_strings(s);
    }

private:
    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    std::ofstream out_;
};

struct Options {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    bool delta0 = false;
};

RunConfig load(const Options& opt) {
    auto cfg = load_config(opt.config);
    if (opt.seed) cfg.sim.seed = *opt.seed;
    if (opt.delta0) cfg.problem.delta = 0.0;
    return cfg;
}

fs::path out_dir(const Options& opt) {
    fs::path dir(opt.out);
    fs::create_directories(dir);
    return dir;
}

void print_optimum(const char* label, const Optimum& o) {
    std::cout << label << "a = " << num(o.a) << "\n"
              << label << "b = " << num(o.b) << "\n"
              << label << "beta = " << num(o.beta) << "\n"
              << label << "b - a = " << num(o.b - o.a) << "\n";
}

void write_curve(const fs::path& path, const std::vector<BetaSample>& curve) {
    CsvWriter csv(path, {"a", "beta", "b"});
    for (const auto& s : curve)
        if (s.ok) csv.row({s.a, s.beta, s.b});
}

ValueFunction undelayed_value(const RunConfig& cfg, double x_max) {
    ProblemSpec p = cfg.problem;
    p.delta = 0.0;
    ScalePair scale(p, x_max, cfg.solver.accuracy);
    DelayKernel kernel(p);
    const auto o = optimize_a(scale, kernel, cfg.solver);
    return ValueFunction(scale, kernel, {o.a, o.b});
}

void write_value(const fs::path& dir, const RunConfig& cfg, const SolveReport& rep, bool diff) {
    const auto& v = *rep.value;
    const auto v0 = undelayed_value(cfg, rep.x_max);
    const double lo = cfg.problem.lower();
    const double hi = std::min(cfg.value_x_max.value_or(2.0 * rep.optimum.b), rep.x_max);
    CsvWriter csv(dir / "value.csv", {"x", "v", "v_delta0"});
    std::optional<CsvWriter> gap;
    if (diff) gap.emplace(dir / "value_difference.csv", std::vector<std::string>{"x", "v_delta0_minus_v"});
    const int n = cfg.value_points;
    for (int i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * i / (n - 1);
        const double a = v(x), b = v0(x);
        csv.row({x, a, b});
        if (gap) gap->row({x, b - a});
    }
}

int cmd_solve(const Options& opt) {
    const auto cfg = load(opt);
    const auto rep = solve(cfg.problem, cfg.solver, true);
    const auto dir = out_dir(opt);
    std::cout << "model = " << model_name(cfg.problem.model) << "\n";
    print_optimum("", rep.optimum);
    print_optimum("delta0.", *rep.comparison_delta0);
    for (const auto& w : rep.warnings) std::cout << "warning: " << w << "\n";
    write_curve(dir / "beta_curve.csv", rep.beta_curve);
    write_value(dir, cfg, rep, false);
    return 0;
}

int cmd_curve(const Options& opt) {
    const auto cfg = load(opt);
    const double x_max = cfg.solver.x_max.value_or(default_x_max(cfg.problem, cfg.solver));
    ScalePair scale(cfg.problem, x_max, cfg.solver.accuracy);
    DelayKernel kernel(cfg.problem);
    std::vector<BetaSample> curve;
    const auto o = optimize_a(scale, kernel, cfg.solver, &curve);
    print_optimum("", o);
    int failed = 0;
    for (const auto& s : curve)
        if (!s.ok) ++failed;
    if (failed) std::cout << "warning: " << failed << " grid points without a trigger level\n";
    write_curve(out_dir(opt) / "beta_curve.csv", curve);
    return 0;
}

int cmd_value(const Options& opt) {
    const auto cfg = load(opt);
    const auto rep = solve(cfg.problem, cfg.solver, false);
    print_optimum("", rep.optimum);
    write_value(out_dir(opt), cfg, rep, true);
    return 0;
}

nlohmann::json to_json(const Witness& w) {
    return {{"pass", w.pass}, {"x", w.x}, {"value", w.value}};
}

nlohmann::json to_json(const Threshold& t) {
    nlohmann::json j{{"found", t.found}};
    if (t.found) {
        j["x"] = t.x;
        j["y"] = t.y;
    }
    return j;
}

int cmd_check(const Options& opt) {
    const auto cfg = load(opt);
    const auto rep = solve(cfg.problem, cfg.solver, false);
    const auto& d = *rep.diagnostics;
    nlohmann::json j{{"a", d.a},
                     {"b", rep.optimum.b},
                     {"x_max", d.x_max},
                     {"r_at_a_negative", to_json(d.r_at_a_negative)},
                     {"a_at_ruin_level", d.a_at_ruin_level},
                     {"fixed_point_bound", to_json(d.fixed_point_bound)},
                     {"sup_r_positive", to_json(d.sup_r_positive)},
                     {"h_in_unit_interval", d.h_in_unit_interval},
                     {"h_violations", d.h_violations},
                     {"R_increasing_from", to_json(d.R_increasing_from)},
                     {"R_concave_from", to_json(d.R_concave_from)},
                     {"H_increasing_from", to_json(d.H_increasing_from)},
                     {"H_concave_from", to_json(d.H_concave_from)},
                     {"smooth_fit_gap", d.smooth_fit_gap},
                     {"all_pass", d.all_pass()},
                     {"failures", d.failures()}};
    if (d.printed_dh_negative) j["printed_dh_negative"] = *d.printed_dh_negative;
    if (d.direct_dh_positive) j["direct_dh_positive"] = *d.direct_dh_positive;
    std::ofstream(out_dir(opt) / "diagnostics.json") << j.dump(2) << "\n";

    std::cout << "a = " << num(d.a) << "\n";
    auto line = [](const char* name, bool ok) {
        std::cout << (ok ? "pass  " : "FAIL  ") << name << "\n";
    };
    line("r(a;a) < 0", d.r_at_a_negative.pass);
    line("sup r(x;a) > 0", d.sup_r_positive.pass);
    line("0 < h < 1", d.h_in_unit_interval);
    line("R eventually increasing", d.R_increasing_from.found);
    line("R eventually concave", d.R_concave_from.found);
    line("H eventually increasing", d.H_increasing_from.found);
    line("H eventually concave", d.H_concave_from.found);
    std::cout << "r(a;a) = " << num(d.r_at_a_negative.value) << "\n";
    std::cout << "smooth-fit gap = " << num(d.smooth_fit_gap) << "\n";
    return 0;
}

int cmd_simulate(const Options& opt) {
    const auto cfg = load(opt);
    const auto rep = solve(cfg.problem, cfg.solver, false);
    const auto& v = *rep.value;
    const double lo = cfg.problem.lower();
    const double b = rep.optimum.b;
    auto points = cfg.sim_points;
    if (points.empty()) points = {lo + 0.5 * (b - lo), lo + 0.9 * (b - lo), b + 0.5 * (b - lo)};
    CsvWriter csv(out_dir(opt) / "simulate.csv", {"x0", "analytic", "mc_mean", "mc_se", "z_score"});
    const Strategy s{rep.optimum.a, rep.optimum.b};
    for (double x : points) {
        const auto est = simulate_strategy(cfg.problem, s, x, cfg.sim);
        const double an = v(x);
        const double z = est.std_error > 0.0 ? (est.mean - an) / est.std_error : 0.0;
        csv.row({x, an, est.mean, est.std_error, z});
        std::cout << "x0 = " << num(x) << "  analytic = " << num(an) << "  mc = " << num(est.mean)
                  << " +- " << num(est.std_error) << "  z = " << num(z) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal dividend thresholds under an implementation delay"};
    app.require_subcommand(1);
    Options opt;
    auto add = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "problem configuration file")->required();
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--seed", opt.seed, "override sim.seed");
        sub->add_flag("--delta0", opt.delta0, "solve with the delay set to zero");
        return sub;
    };
    auto* solve_cmd = add("solve", "optimal (a*, b*, beta*), beta curve and value function");
    auto* curve_cmd = add("curve", "beta(a) and b(a) on the a-grid");
    auto* value_cmd = add("value", "value function with and without delay");
    auto* check_cmd = add("check", "structural assumptions at the optimum");
    auto* sim_cmd = add("simulate", "Monte Carlo check of the value function");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    try {
        if (solve_cmd->parsed()) return cmd_solve(opt);
        if (curve_cmd->parsed()) return cmd_curve(opt);
        if (value_cmd->parsed()) return cmd_value(opt);
        if (check_cmd->parsed()) return cmd_check(opt);
        if (sim_cmd->parsed()) return cmd_simulate(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const AccuracyError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const DomainError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
