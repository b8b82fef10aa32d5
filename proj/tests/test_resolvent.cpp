#include <gtest/gtest.h>

#include <cmath>

#include "supctrl/errors.hpp"
#include "supctrl/grid.hpp"
#include "supctrl/resolvent.hpp"
#include "support.hpp"

using namespace supctrl;
using testsupport::Gen;
using testsupport::rel;

namespace {

FundamentalPtr gbm_fs(bool numeric) {
    FundamentalOptions o;
    if (!numeric) return make_fundamental_solutions(DiffusionSpec::gbm(0.01, 0.1, 0.05), o);
    o.mode = SolutionMode::numeric;
    return make_fundamental_solutions(
        DiffusionSpec::generic(Expression::parse("0.01*x"), Expression::parse("0.1*x"), 0.05), o);
}

double multiplier(double mu, double sigma, double r, double eta) {
    return 1.0 / (r - mu * eta - 0.5 * sigma * sigma * eta * (eta - 1.0));
}

}  // namespace

TEST(Resolvent, ConstantFlow) {
    const ResolventKernel k(gbm_fs(false));
    for (double x : {0.1, 1.0, 10.0}) EXPECT_NEAR(resolvent(k, [](double) { return 1.0; }, x), 20.0, 1e-7);
}

TEST(Resolvent, PowerFlowMultiplier) {
    const double M = multiplier(0.01, 0.1, 0.05, 0.5);
    EXPECT_NEAR(M, 21.6216216216216, 1e-12);
    for (bool numeric : {false, true}) {
        const ResolventKernel k(gbm_fs(numeric));
        for (double x : {0.2, 1.0, 5.0}) {
            const Jet u = k.evaluate([](double t) { return std::sqrt(t); }, x);
            EXPECT_LT(rel(u.f, M * std::sqrt(x)), 1e-7) << numeric << " " << x;
            EXPECT_LT(rel(u.d1, 0.5 * M / std::sqrt(x)), 1e-6);
        }
    }
}

class InverseOperator : public ::testing::TestWithParam<int> {};

TEST_P(InverseOperator, GeneratorUndoesResolvent) {
    const bool numeric = GetParam() >= 3;
    const ResolventKernel k(gbm_fs(numeric));
    const char* flows[] = {"1 + 0*x", "x^0.5", "exp(-(log(x))^2)"};
    const Expression f = Expression::parse(flows[GetParam() % 3]);
    const JetFunction jf = [&](double x) { return f.eval(x); };
    for (double x : log_grid(0.05, 20.0, 30)) {
        const Jet u = k.evaluate(jf, x);
        const double res = generator_apply(k.spec(), u, x) + f.value(x);
        EXPECT_LT(std::fabs(res), 1e-6 * std::max(1e-3, std::fabs(f.value(x)))) << x;
    }
}

INSTANTIATE_TEST_SUITE_P(Flows, InverseOperator, ::testing::Range(0, 6));

TEST(Resolvent, GreenIsSymmetric) {
    const ResolventKernel k(gbm_fs(false));
    Gen gen(5);
    for (int t = 0; t < 10; ++t) {
        const double x = gen.log_uniform(0.1, 10), y = gen.log_uniform(0.1, 10);
        EXPECT_NEAR(k.green(x, y), k.green(y, x), 1e-14 * std::fabs(k.green(x, y)));
    }
}

TEST(Resolvent, DivergentTailsAreNamed) {
    const ResolventKernel k(gbm_fs(false));
    try {
        resolvent(k, [](double x) { return x * x * x; }, 1.0);
        FAIL() << "x^3 grows faster than psi";
    } catch (const IntegrabilityError& e) {
        EXPECT_EQ(e.side(), "upper");
    }
    try {
        resolvent(k, [](double x) { return std::pow(x, -5.0); }, 1.0);
        FAIL() << "x^-5 blows up faster than phi";
    } catch (const IntegrabilityError& e) {
        EXPECT_EQ(e.side(), "lower");
    }
}

TEST(Generator, Examples) {
    const auto spec = DiffusionSpec::gbm(0.01, 0.1, 0.05);
    EXPECT_DOUBLE_EQ(generator_apply(spec, Jet{1.0, 0.0, 0.0, 0.0}, 3.0), -0.05);
    for (double x : {0.5, 2.0}) {
        EXPECT_NEAR(generator_apply(spec, Jet{x, 1.0, 0.0, 0.0}, x), -0.04 * x, 1e-15);
        // Second differences at h = eps^(1/3) carry ~eps/h^2 roundoff.
        EXPECT_NEAR(generator_apply(spec, [](double t) { return t; }, x), -0.04 * x, 1e-6 * x);
    }
    const auto fs = gbm_fs(false);
    EXPECT_NEAR(generator_apply(spec, fs->psi(1.7), 1.7), 0.0, 1e-14);
    EXPECT_NEAR(generator_apply(spec, [&](double t) { return fs->psi(t).f; }, 1.7), 0.0, 1e-5 * fs->psi(1.7).f);
}

TEST(Generator, FiniteDifferencesMatchJets) {
    const auto spec = DiffusionSpec::generic(Expression::parse("0.02*x - 0.01"), Expression::parse("0.3*sqrt(x)"), 0.05);
    const Expression g = Expression::parse("x^3 - 2*x + exp(-x)");
    for (double x : {0.3, 1.0, 4.0}) {
        const double exact = generator_apply(spec, g.eval(x), x);
        const double tol = 1e-5 * (1 + std::fabs(g.value(x)) + std::fabs(exact));
        EXPECT_NEAR(generator_apply(spec, [&](double t) { return g.value(t); }, x), exact, tol);
    }
}

TEST(LFunctional, Examples) {
    const auto fs = gbm_fs(false);
    for (double x : {0.4, 2.0}) {
        const Jet u = fs->psi(x);
        EXPECT_NEAR(l_functional(*fs, u, u, x), 0.0, 1e-14);
        EXPECT_NEAR(l_functional(*fs, u, Jet{1.0, 0.0, 0.0, 0.0}, x), u.d1 / fs->scale_density(x), 1e-14);
    }
}

TEST(LFunctional, MatchesGeneratorIntegral) {
    const auto fs = gbm_fs(false);
    const auto& spec = fs->spec();
    auto check = [&](const Expression& g, double z, double y) {
        auto L = [&](double x) { return l_functional(*fs, fs->psi(x), g.eval(x), x); };
        auto integrand = [&](double t) { return generator_apply(spec, g.eval(t), t) * fs->psi(t).f * fs->speed_density(t); };
        const double rhs = integrate(integrand, z, y, {1e-13, 1e-12, 15}).value;
        EXPECT_NEAR(L(z) - L(y), rhs, 1e-6 * (1 + std::fabs(rhs))) << g.text() << " " << z << " " << y;
    };
    check(Expression::parse("x^2"), 0.5, 2.0);
    Gen gen(17);
    for (int t = 0; t < 20; ++t) {
        std::ostringstream os;
        os << gen.uniform(-2, 2) << " + " << gen.uniform(-2, 2) << "*x + " << gen.uniform(-1, 1) << "*x^2 + "
           << gen.uniform(-0.5, 0.5) << "*x^3";
        const double z = gen.log_uniform(0.1, 3.0);
        check(Expression::parse(os.str()), z, z * gen.uniform(1.1, 4.0));
    }
}
