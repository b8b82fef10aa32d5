#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>

#include "supctrl/control.hpp"
#include "supctrl/fundamental.hpp"
#include "supctrl/stopping.hpp"

namespace testsupport {

// Fixture parameters: GBM with a square-root flow and an exponential blend.
struct Fixture {
    double mu = 0.01, sigma = 0.1, r = 0.05;
    double K1 = 12.0, K2 = 10.0, nu = 0.1, eta = 0.5;
};

inline supctrl::ControlProblem fixture_problem(bool numeric = false, const Fixture& f = {}) {
    using namespace supctrl;
    FundamentalOptions o;
    DiffusionSpec spec = DiffusionSpec::gbm(f.mu, f.sigma, f.r);
    if (numeric) {
        std::ostringstream d, v;
        d.precision(17);
        v.precision(17);
        d << f.mu << "*x";
        v << f.sigma << "*x";
        spec = DiffusionSpec::generic(Expression::parse(d.str()), Expression::parse(v.str()), f.r);
        o.mode = SolutionMode::numeric;
    }
    return ControlProblem(make_fundamental_solutions(spec, o), PayoffSpec::power_exp_blend(f.eta, f.K1, f.K2, f.nu));
}

// Closed-form oracle for the fixture, written from the GBM formulas only.
struct GbmOracle {
    Fixture p;
    double kappa, theta, M;

    explicit GbmOracle(const Fixture& f = {}) : p(f) {
        const double a = 0.5 - f.mu / (f.sigma * f.sigma);
        const double disc = std::sqrt(a * a + 2.0 * f.r / (f.sigma * f.sigma));
        kappa = a + disc;
        theta = a - disc;
        M = 1.0 / (f.r - f.mu * f.eta - 0.5 * f.sigma * f.sigma * f.eta * (f.eta - 1.0));
    }

    double alpha(double x) const { return p.K2 + (p.K1 - p.K2) * std::exp(-p.nu * x); }
    double alpha_prime(double x) const { return -p.nu * (p.K1 - p.K2) * std::exp(-p.nu * x); }
    double Lambda(double x) const { return p.K2 * x + (p.K1 - p.K2) * (1.0 - std::exp(-p.nu * x)) / p.nu; }
    double A(double x) const { return Lambda(x) - M * std::pow(x, p.eta); }
    double A1(double x) const { return alpha(x) - M * p.eta * std::pow(x, p.eta - 1.0); }
    double A2(double x) const { return alpha_prime(x) - M * p.eta * (p.eta - 1.0) * std::pow(x, p.eta - 2.0); }

    // A'(y) / psi'(y) with psi = x^kappa; its maximiser is y*.
    double ratio(double y) const { return A1(y) / (kappa * std::pow(y, kappa - 1.0)); }
    // d/dy of ratio, up to the positive factor 1 / (kappa y^kappa).
    double ratio_slope(double y) const { return y * A2(y) - (kappa - 1.0) * A1(y); }

    double y_star() const {
        // The slope is positive near 0 and negative at the upper bound.
        double lo = 1e-9 * bracket_hi(), hi = bracket_hi();
        for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            (ratio_slope(mid) > 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
    // Lower bound needs e^{-t}(kappa - 1 + t) <= kappa - 1, i.e. kappa >= 2.
    double bracket_lo() const { return std::pow(M * p.eta * (kappa - p.eta) / ((kappa - 1.0) * p.K1), 1.0 / (1.0 - p.eta)); }
    double bracket_hi() const { return std::pow(M * p.eta * (kappa - p.eta) / ((kappa - 1.0) * p.K2), 1.0 / (1.0 - p.eta)); }

    double H(double y, double x) const {
        if (x <= y) return A1(y) * std::pow(x, kappa) / (kappa * std::pow(y, kappa - 1.0));
        return A(x) - A(y) + A1(y) * y / kappa;
    }
    double H_prime(double y, double x) const {
        if (x <= y) return A1(y) * std::pow(x / y, kappa - 1.0);
        return A1(x);
    }
    double Phi(double x) const { return A(x) - A1(x) * x / kappa; }
    double f(double y, double x) const { return Phi(x) - Phi(y); }
};

// Small deterministic generator for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : eng_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }

    // GBM fixtures with kappa > 1 and an interior optimal threshold.
    Fixture fixture() {
        Fixture f;
        f.sigma = uniform(0.08, 0.3);
        f.r = uniform(0.03, 0.08);
        f.mu = uniform(-0.02, 0.6 * f.r);
        f.eta = uniform(0.3, 0.7);
        f.K2 = uniform(5.0, 12.0);
        f.K1 = f.K2 + uniform(0.5, 4.0);
        f.nu = uniform(0.05, 0.3);
        return f;
    }

private:
    std::mt19937_64 eng_;
};

inline double rel(double a, double b) { return std::fabs(a - b) / std::max(1e-300, std::fabs(b)); }

}  // namespace testsupport
