#include "divdelay/solver.hpp"
#include "divdelay/transform.hpp"
#include "reference_cases.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace divdelay;

TEST(SlopeBeta, ReferenceStrategies) {
    {
        const auto spec = cases::brownian(0.0);
        ScalePair s(spec, 50.0);
        EXPECT_NEAR(slope_beta(s, DelayKernel(spec), 0.850, 2.895), 1.466, 0.005);
    }
    {
        const auto spec = cases::ou();
        ScalePair s(spec, 50.0);
        EXPECT_NEAR(slope_beta(s, DelayKernel(spec), 0.0, 1.785), 8.706, 0.01);
    }
}

TEST(SlopeBeta, RejectsBadStrategies) {
    const auto spec = cases::brownian();
    ScalePair s(spec, 50.0);
    DelayKernel k(spec);
    EXPECT_THROW(slope_beta(s, k, 2.0, 1.0), DomainError);
    EXPECT_THROW(slope_beta(s, k, -0.1, 1.0), DomainError);
    const auto g = cases::gbm();
    EXPECT_THROW(slope_beta(ScalePair(g, 20.0), DelayKernel(g), 0.5, 3.0), DomainError);
}

struct StrategyCase {
    std::string name;
    ProblemSpec spec;
    Strategy strategy;
};

void PrintTo(const StrategyCase& c, std::ostream* os) { *os << c.name; }

class ValueProperties : public ::testing::TestWithParam<StrategyCase> {
protected:
    ValueFunction make() const {
        const auto& p = GetParam();
        return ValueFunction(ScalePair(p.spec, p.spec.lower() + 40.0), DelayKernel(p.spec), p.strategy);
    }
};

TEST_P(ValueProperties, ContinuityEquationAtTrigger) {
    const auto v = make();
    const auto& [a, b] = v.strategy();
    const auto& spec = v.spec();
    const auto& scale = v.scale();
    const auto t = v.kernel().transformed_at(scale, b, a);
    const double wa = v.transformed_line(scale.F(a));
    const double lhs = v.transformed_line(scale.F(b));
    const double rhs = std::exp(-spec.alpha * spec.delta) * (t.R + t.H * scale.phi(a) * wa);
    EXPECT_LT(std::abs(lhs - rhs), 1e-10 * (1.0 + std::abs(lhs)));
}

TEST_P(ValueProperties, LinearInTransformedCoordinates) {
    const auto v = make();
    const double lo = v.spec().lower();
    const double b = v.strategy().b;
    for (int k = 0; k <= 10; ++k) {
        const double x = lo + k * (b - lo) / 10.0;
        const auto s = v.scale().at(x);
        const double w = v(x) / s.phi();
        const double line = v.transformed_line(s.F());
        EXPECT_LT(std::abs(w - line), 1e-9 * (1.0 + std::abs(line))) << x;
    }
}

TEST_P(ValueProperties, InterceptAndBoundary) {
    const auto v = make();
    const auto& spec = v.spec();
    const auto s0 = v.scale().at(spec.lower());
    EXPECT_NEAR(v.xi(), -v.beta() * s0.F() - spec.penalty_P / s0.phi(), 1e-12 * (1.0 + std::abs(v.xi())));
    EXPECT_NEAR(v(spec.lower()), -spec.penalty_P, 1e-12);
    EXPECT_THROW(v(spec.lower() - 1e-3), DomainError);
}

TEST_P(ValueProperties, ContinuousAtTrigger) {
    const auto v = make();
    const double b = v.strategy().b;
    EXPECT_LT(std::abs(v(b - 1e-7) - v(b + 1e-7)), 1e-6);
}

TEST_P(ValueProperties, AboveTriggerIsOneCycle) {
    const auto v = make();
    const auto& spec = v.spec();
    const double a = v.strategy().a;
    const double j_a = v(a);
    for (double x : {v.strategy().b + 0.1, v.strategy().b + 1.0, v.strategy().b + 5.0}) {
        const double expect = std::exp(-spec.alpha * spec.delta) *
                                  (v.kernel().r(x, a) + v.kernel().h(x) * j_a) -
                              v.kernel().penalty_term(x);
        EXPECT_NEAR(v(x), expect, 1e-10 * (1.0 + std::abs(expect))) << x;
    }
}

TEST_P(ValueProperties, FixedPointConsistency) {
    const auto v = make();
    EXPECT_NEAR(v.value_at_a(), v(v.strategy().a), 1e-10 * (1.0 + std::abs(v.value_at_a())));
}

TEST_P(ValueProperties, GeneratorVanishesBelowTrigger) {
    const auto v = make();
    const auto& spec = v.spec();
    const double lo = spec.lower();
    const double b = v.strategy().b;
    for (int k = 1; k < 8; ++k) {
        const double x = lo + k * (b - lo) / 8.0;
        const double e = 1e-4 * (1.0 + x);
        const double d1 = (v(x + e) - v(x - e)) / (2.0 * e);
        const double d2 = (v(x + e) - 2.0 * v(x) + v(x - e)) / (e * e);
        const double res = generator_residual(spec, x, v(x), d1, d2);
        EXPECT_LT(std::abs(res), 1e-4 * (1.0 + std::abs(spec.alpha * v(x)))) << x;
    }
}

INSTANTIATE_TEST_SUITE_P(
    Strategies, ValueProperties,
    ::testing::Values(StrategyCase{"brownian", cases::brownian(), {0.755, 2.719}},
                      StrategyCase{"brownian_nodelay", cases::brownian(0.0), {0.850, 2.895}},
                      StrategyCase{"ou", cases::ou(), {0.0, 1.785}},
                      StrategyCase{"ou_penalty", cases::ou(0.25, 10.0), {4.290, 6.811}},
                      StrategyCase{"sqrt", cases::sqrt_model(), {0.09, 0.662}},
                      StrategyCase{"gbm", cases::gbm(), {1.0, 9.138}},
                      StrategyCase{"gbm_exact", cases::gbm(0.25, GbmKernelForm::exact), {1.5, 6.0}}),
    [](const auto& info) { return info.param.name; });

class SmoothFitControl : public ::testing::TestWithParam<cases::Named> {};

TEST_P(SmoothFitControl, HoldsAtRootOnly) {
    const auto& spec = GetParam().spec;
    const double lo = spec.lower();
    ScalePair scale(spec, lo + 60.0);
    DelayKernel k(spec);
    const double a = lo + 0.2;
    const auto root = find_b(scale, k, a);
    const auto at = smooth_fit(scale, k, a, root.b);
    EXPECT_LT(std::abs(at.residual()), 1e-6 * (1.0 + std::abs(at.beta)));
    EXPECT_NEAR(at.beta, root.beta, 1e-9 * (1.0 + std::abs(root.beta)));
    // Away from the root the residual is nonzero with opposite signs on either side.
    const double below = smooth_fit(scale, k, a, std::max(root.b - 0.05, 0.5 * (a + root.b))).residual();
    const double above = smooth_fit(scale, k, a, root.b + 0.05).residual();
    EXPECT_LT(below * above, 0.0) << below << " " << above;
}

INSTANTIATE_TEST_SUITE_P(AllModels, SmoothFitControl, ::testing::ValuesIn(cases::all_models()),
                         [](const auto& info) { return info.param.name; });
