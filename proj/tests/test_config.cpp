#include "divdelay/config.hpp"

#include <gtest/gtest.h>

#include <string>

using namespace divdelay;

namespace {

std::string field_of(const std::string& text) {
    try {
        parse_config_string(text);
    } catch (const ConfigError& e) {
        return e.field() + " | " + e.what();
    }
    return "no error";
}

const char* brownian = "model.type = brownian\nmodel.mu = 0.3\nmodel.sigma = 1.4\n";

} // namespace

TEST(Config, ParsesFullFile) {
    const auto cfg = parse_config_string(
        "# comment\n"
        "model.type = gbm\nmodel.mu = 0.05\nmodel.sigma = 1.5  # trailing\nmodel.d = 2\n"
        "model.gbm_kernel = exact\nmodel.alpha = 0.1\nmodel.delta = 0.5\nmodel.lambda = 0.2\n"
        "solver.a_points = 32\nsolver.x_max = 80\nsolver.rel_tol = 1e-10\n"
        "sim.n_paths = 5000\nsim.seed = 9\nsim.bridge = on\nsim.x0 = 2.5, 3\n"
        "output.value_points = 11\n");
    const auto& g = std::get<GeometricBM>(cfg.problem.model);
    EXPECT_EQ(g.d, 2.0);
    EXPECT_EQ(g.kernel_form, GbmKernelForm::exact);
    EXPECT_EQ(cfg.problem.delta, 0.5);
    EXPECT_EQ(cfg.solver.a_points, 32);
    EXPECT_EQ(*cfg.solver.x_max, 80.0);
    EXPECT_EQ(cfg.solver.accuracy.rel_tol, 1e-10);
    EXPECT_EQ(cfg.sim.seed, 9u);
    EXPECT_TRUE(cfg.sim.bridge);
    ASSERT_EQ(cfg.sim_points.size(), 2u);
    EXPECT_EQ(cfg.sim_points[1], 3.0);
    EXPECT_EQ(cfg.value_points, 11);
}

TEST(Config, NegativeDiscountNamesFieldAndLine) {
    const auto msg = field_of(std::string(brownian) + "model.alpha = -0.1\n");
    EXPECT_NE(msg.find("model.alpha |"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
}

TEST(Config, Rejections) {
    EXPECT_NE(field_of("model.mu = 1\n").find("model.type"), std::string::npos);
    EXPECT_NE(field_of("model.type = levy\n").find("model.type"), std::string::npos);
    EXPECT_NE(field_of(std::string(brownian) + "model.rho = 1\n").find("model.rho"), std::string::npos);
    EXPECT_NE(field_of(std::string(brownian) + "model.colour = red\n").find("unknown key"),
              std::string::npos);
    EXPECT_NE(field_of(std::string(brownian) + "model.mu = 0.4\n").find("duplicate"), std::string::npos);
    EXPECT_NE(field_of(std::string(brownian) + "model.alpha = fast\n").find("not a number"),
              std::string::npos);
    EXPECT_NE(field_of(std::string(brownian) + "sim.n_paths = 10\n").find("sim.n_paths"),
              std::string::npos);
    EXPECT_NE(field_of(std::string(brownian) + "model.penalty = 5\n").find("model.penalty"),
              std::string::npos);
    EXPECT_NE(field_of(std::string(brownian) + "model.gbm_kernel = exact\n").find("only for gbm"),
              std::string::npos);
    EXPECT_NE(field_of("model.type = ou\n").find("model.rho"), std::string::npos);
    EXPECT_NE(field_of("just words\n").find("expected"), std::string::npos);
    EXPECT_THROW(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST(Config, Defaults) {
    const auto cfg = parse_config_string(brownian);
    EXPECT_EQ(cfg.solver.a_points, 64);
    EXPECT_EQ(cfg.solver.refine_tol, 1e-5);
    EXPECT_EQ(cfg.sim.dt, 1e-3);
    EXPECT_FALSE(cfg.sim.bridge);
    EXPECT_TRUE(cfg.sim_points.empty());
}
