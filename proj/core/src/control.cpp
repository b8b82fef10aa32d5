#include "supctrl/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "supctrl/errors.hpp"
#include "supctrl/roots.hpp"

namespace supctrl {

namespace {

constexpr QuadratureSettings kFine{1e-14, 1e-12, 15};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

ControlProblem::ControlProblem(FundamentalPtr fs, PayoffSpec payoff, ControlSettings cs, QuadratureSettings qs)
    : kernel_(std::move(fs), qs), payoff_(std::move(payoff)), flow_(kernel_, payoff_), cs_(cs) {
    if (!(cs_.scan_lo > 0.0) || !(cs_.x_max > cs_.scan_lo) || !spec().contains(cs_.x_max)) {
        throw DomainError("scan range must satisfy 0 < scan_lo < x_max < b");
    }
    if (cs_.grid_points < 10) throw DomainError("grid_points must be at least 10");
}

Jet ControlProblem::option_value(double x) const {
    const Jet a = payoff_.alpha(x);
    const Jet r = flow_(x);
    return {payoff_.cumulative(x) - r.f, a.f - r.d1, a.d1 - r.d2, a.d2 - r.d3};
}

double ControlProblem::generator_A(double x) const {
    const auto& s = spec();
    const Jet a = payoff_.alpha(x);
    const double v = s.volatility(x);
    return 0.5 * v * v * a.d1 + s.drift(x) * a.f - s.rate() * payoff_.cumulative(x) + payoff_.pi(x).f;
}

double ControlProblem::generator_A_derivative(double x) const {
    const auto& s = spec();
    const Jet a = payoff_.alpha(x);
    const Jet mu = s.drift_jet(x);
    const Jet sg = s.volatility_jet(x);
    return sg.f * sg.d1 * a.d1 + 0.5 * sg.f * sg.f * a.d2 + mu.d1 * a.f + mu.f * a.d1 - s.rate() * a.f +
           payoff_.pi(x).d1;
}

double ControlProblem::marginal_ratio(double y) const {
    return option_value(y).d1 / fundamentals().psi_hat0(y).d1;
}

double ControlProblem::phi_transform(double x) const {
    const Jet a = option_value(x);
    const Jet p = fundamentals().psi_hat0(x);
    return a.f - a.d1 * p.f / p.d1;
}

Jet ControlProblem::reflection_value(double y, double x) const {
    const Jet p_y = fundamentals().psi_hat0(y);
    const Jet a_y = option_value(y);
    const double c = a_y.d1 / p_y.d1;
    if (x >= y) {
        const Jet a = option_value(x);
        return {a.f - a_y.f + c * p_y.f, a.d1, a.d2, a.d3};
    }
    return c * fundamentals().psi_hat0(x);
}

Jet ControlProblem::total_value(double y, double x) const { return flow_(x) + reflection_value(y, x); }

double ControlProblem::foc_integral(double y) const {
    const auto& fs = fundamentals();
    auto g = [&](double t) { return fs.psi_hat0(t).f * generator_A(t) * fs.speed_density(t); };
    return integrate_state(spec(), g, 0.0, y, kFine).value;
}

double ControlProblem::foc(double y) const {
    const auto& fs = fundamentals();
    return spec().rate() * foc_integral(y) - generator_A(y) * fs.psi_hat0(y).d1 / fs.scale_density(y);
}

double ControlProblem::representing_f_derivative(double x) const {
    const auto& fs = fundamentals();
    const Jet p = fs.psi_hat0(x);
    const double v = spec().volatility(x);
    return 2.0 * fs.scale_density(x) * p.f / (v * v * p.d1 * p.d1) * foc(x);
}

double ControlProblem::f_tilde(double x) const {
    const Jet a = option_value(x);
    const Jet p = fundamentals().psi_hat0(x);
    return a.d1 - a.d2 * p.d1 / p.d2;
}

std::vector<CheckItem> ControlProblem::assumption_checks() const {
    std::vector<CheckItem> items;
    const auto grid = scan_grid();
    const int n = static_cast<int>(grid.size());

    {
        CheckItem it{"assumption_a_flow_integrable", true, 0.0, ""};
        try {
            kernel_.check_integrability([this](double x) { return std::fabs(payoff_.pi(x).f); }, spec().anchor());
            for (double x : {cs_.scan_lo, spec().anchor(), cs_.x_max}) {
                const double v = flow_(x).f;
                if (!std::isfinite(v)) {
                    it.pass = false;
                    it.detail = "R_r pi not finite at x = " + fmt(x);
                }
            }
        } catch (const IntegrabilityError& e) {
            it.pass = false;
            it.detail = e.what();
        }
        items.push_back(it);
    }

    std::vector<double> alpha(n);
    for (int i = 0; i < n; ++i) alpha[i] = payoff_.alpha(grid[i]).f;
    {
        CheckItem it{"assumption_b_alpha_positive", true, 0.0, ""};
        const auto mn = std::min_element(alpha.begin(), alpha.end());
        it.residual = *mn;
        if (!(*mn > 0.0)) {
            it.pass = false;
            it.detail = "alpha(" + fmt(grid[mn - alpha.begin()]) + ") = " + fmt(*mn);
        }
        items.push_back(it);
    }
    const int imax = static_cast<int>(std::max_element(alpha.begin(), alpha.end()) - alpha.begin());
    {
        CheckItem it{"assumption_b_alpha_maximum", imax < n - 1, grid[imax], ""};
        it.detail = it.pass ? "x_alpha = " + fmt(imax == 0 ? 0.0 : grid[imax])
                            : "alpha has no maximum below x_max (increasing toward b)";
        items.push_back(it);
    }
    {
        CheckItem it{"assumption_b_alpha_nonincreasing", true, 0.0, ""};
        // Values saturate in floating point, so the exact slope is tested too.
        for (int i = imax; i + 1 < n; ++i) {
            const double rise = alpha[i + 1] - alpha[i];
            const double slope = payoff_.alpha(grid[i]).d1;
            if (rise > 1e-12 * std::fabs(alpha[i]) || slope > 0.0) {
                it.pass = false;
                it.residual = std::max(rise, slope);
                it.detail = "alpha increases above x_alpha near x = " + fmt(grid[i]);
                break;
            }
        }
        items.push_back(it);
    }
    {
        // Lambda / psi_hat_0 has to decay over the last decade toward b.
        CheckItem it{"assumption_c_lambda_growth", true, 0.0, ""};
        const auto& fs = fundamentals();
        auto ratio = [&](double x) { return payoff_.cumulative(x) / fs.psi_hat0(x).f; };
        const double lo = cs_.x_max / 10.0;
        const auto tail = log_grid(lo, cs_.x_max, 21);
        double prev = std::fabs(ratio(tail[0]));
        for (std::size_t i = 1; i < tail.size(); ++i) {
            const double cur = std::fabs(ratio(tail[i]));
            if (!(cur <= prev)) {
                it.pass = false;
                it.detail = "|Lambda / psi_hat_0| not decreasing near x = " + fmt(tail[i]);
                break;
            }
            prev = cur;
        }
        it.residual = prev;
        if (it.pass && !(prev <= 0.5 * std::fabs(ratio(lo)))) {
            it.pass = false;
            it.detail = "|Lambda / psi_hat_0| decays too slowly over the last decade";
        }
        items.push_back(it);
    }
    return items;
}

std::vector<CheckItem> ControlProblem::condition_checks(ThresholdBracket* bracket) const {
    std::vector<CheckItem> items;
    const auto grid = scan_grid();
    const int n = static_cast<int>(grid.size());
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = generator_A(grid[i]);
    const int imax = static_cast<int>(std::max_element(g.begin(), g.end()) - g.begin());
    double scale = 0.0;
    for (double v : g) scale = std::max(scale, std::fabs(v));
    const double tol = 1e-9 * scale;

    const bool interior = imax > 0 && imax < n - 1;
    items.push_back({"condition_i_interior_max", interior, grid[imax],
                     interior ? "x_hat near " + fmt(grid[imax]) : "argmax of G_r A on the scan boundary"});

    CheckItem qc{"condition_i_quasi_concave", true, 0.0, ""};
    for (int i = 0; i + 1 < n; ++i) {
        const double step = g[i + 1] - g[i];
        const bool bad = i < imax ? step < -tol : step > tol;
        if (bad) {
            qc.pass = false;
            qc.residual = step;
            qc.detail = "G_r A not monotone on its side of x_hat near x = " + fmt(grid[i]);
            break;
        }
    }
    items.push_back(qc);

    const bool attainable = fundamentals().boundaries().lower_attainable();
    const double g0 = g.front();
    const bool lower_ok = attainable ? g0 > 0.0 : g0 >= -tol;
    items.push_back({"condition_ii_lower_limit", lower_ok, g0,
                     std::string(attainable ? "0 attainable, need G_r A(0+) > 0" : "0 unattainable, need G_r A(0+) >= 0") +
                         "; got " + fmt(g0)});

    const double gb = g.back();
    bool upper_ok = gb < -cs_.epsilon;
    const double tail_lo = cs_.x_max / 10.0;
    for (int i = n - 1; i > 0 && grid[i - 1] >= tail_lo; --i) {
        if (!(g[i] < g[i - 1])) upper_ok = false;
    }
    items.push_back({"condition_ii_upper_limit", upper_ok, gb,
                     "G_r A(x_max) = " + fmt(gb) + ", required < -" + fmt(cs_.epsilon) +
                         " and decreasing over the last decade"});

    CheckItem zero{"condition_zero_crossing", false, 0.0, "G_r A has no zero above x_hat"};
    if (interior) {
        auto neg = [this](double x) { return generator_A(x); };
        const auto ext = maximize(neg, grid[imax - 1], grid[imax + 1]);
        double x_hat = ext.value >= g[imax] ? ext.argmax : grid[imax];
        for (int i = imax + 1; i < n; ++i) {
            if (g[i] <= 0.0) {
                const double lo = grid[i - 1];
                const double x0 = g[i] == 0.0 ? grid[i] : find_root(neg, lo, grid[i], cs_.root_tol).root;
                zero.pass = true;
                zero.residual = x0;
                zero.detail = "x0 = " + fmt(x0);
                if (bracket) *bracket = {x_hat, x0};
                break;
            }
        }
    }
    items.push_back(zero);
    return items;
}

void ControlProblem::require_conditions() const {
    for (const auto& it : assumption_checks()) {
        if (!it.pass) throw AssumptionViolation(it.name, it.detail);
    }
    for (const auto& it : condition_checks()) {
        if (!it.pass) throw AssumptionViolation(it.name, it.detail);
    }
}

ControlSolution::ControlSolution(ControlProblem problem, ThresholdBracket bracket, double y_star,
                                 double foc_residual)
    : problem_(std::move(problem)), bracket_(bracket), y_star_(y_star), foc_residual_(foc_residual) {}

SmoothFit ControlSolution::smooth_fit() const {
    const double y = y_star_;
    const double scale = std::max(1.0, y);
    auto second_diff = [&](double c, double d) {
        return (V(c + d).f - 2.0 * V(c).f + V(c - d).f) / (d * d);
    };
    // Stencils stay inside one branch; three Richardson levels in h.
    auto extrapolate = [&](int side) {
        double d[4];
        for (int k = 0; k < 4; ++k) {
            const double h = 0.02 * std::ldexp(1.0, -k) * scale;
            d[k] = second_diff(y + side * h, 0.5 * h);
        }
        for (int level = 1; level < 4; ++level) {
            const double w = std::ldexp(1.0, level);
            for (int k = 0; k + level < 4; ++k) d[k] = (w * d[k + 1] - d[k]) / (w - 1.0);
        }
        return d[0];
    };
    SmoothFit s;
    s.left = extrapolate(-1);
    s.right = extrapolate(+1);
    s.relative_gap = std::fabs(s.left - s.right) / std::max(std::fabs(s.left), std::fabs(s.right));
    return s;
}

double ControlSolution::rep2_value(double x) const {
    const auto& fs = problem_.fundamentals();
    const double z = std::max(x, y_star_);
    return problem_.generator_A(y_star_) / problem_.spec().rate() -
           fs.scale_density(z) / fs.psi_hat0(z).d1 * problem_.foc_integral(z);
}

ControlSolution solve_threshold(const ControlProblem& problem) {
    problem.require_conditions();
    ThresholdBracket b;
    problem.condition_checks(&b);
    const auto r = find_root([&](double y) { return problem.foc(y); }, b.x_hat, b.x_zero,
                             problem.settings().root_tol);
    return ControlSolution(problem, b, r.root, r.residual);
}

double argmax_marginal_ratio(const ControlProblem& problem, const ThresholdBracket& bracket) {
    return maximize([&](double y) { return problem.marginal_ratio(y); }, bracket.x_hat, bracket.x_zero).argmax;
}

double prop_threshold(const ControlProblem& problem) {
    const auto grid = problem.scan_grid();
    const auto& fs = problem.fundamentals();
    for (double x : grid) {
        if (!(fs.psi_hat0(x).d2 > 0.0)) {
            throw AssumptionViolation("psi_hat_0_convex", "psi_hat_0'' <= 0 at x = " + fmt(x));
        }
    }
    auto ft = [&](double x) { return problem.f_tilde(x); };
    double prev = ft(grid[0]);
    if (prev >= 0.0) return grid[0];
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double cur = ft(grid[i]);
        if (cur >= 0.0) return find_root(ft, grid[i - 1], grid[i], problem.settings().root_tol).root;
        prev = cur;
    }
    throw NumericError("f~ stays negative on the scan grid");
}

SignScan sign_property_check(const ControlProblem& problem, double y, const std::vector<double>& grid,
                             double tol) {
    SignScan s;
    s.min_f = std::numeric_limits<double>::infinity();
    const double phi_y = problem.phi_transform(y);
    for (double x : grid) {
        const double v = problem.phi_transform(x) - phi_y;
        if (v < s.min_f) {
            s.min_f = v;
            s.argmin = x;
        }
    }
    s.region_nonneg = s.min_f >= -tol;
    return s;
}

SupremumIdentity supremum_identity_check(const ControlProblem& problem, double y, double x,
                                         const QuadratureSettings& qs) {
    const auto& fs = problem.fundamentals();
    const double phi_y = problem.phi_transform(y);
    auto density = [&](double z) {
        const Jet p = fs.psi_hat0(z);
        return (problem.phi_transform(z) - phi_y) * p.d1 / (p.f * p.f);
    };
    SupremumIdentity s;
    s.lhs = problem.reflection_value(y, x).f;
    s.rhs = fs.psi_hat0(x).f * integrate_state(problem.spec(), density, std::max(x, y), problem.spec().upper(), qs).value;
    s.abs_diff = std::fabs(s.lhs - s.rhs);
    return s;
}

namespace gbm_closed_form {

Constants constants(double mu, double sigma, double rate, double eta) {
    const auto e = gbm_exponents(mu, sigma, rate);
    return {e.kappa, e.theta, gbm_power_multiplier(mu, sigma, rate, eta)};
}

std::pair<double, double> bracket(const Constants& c, double eta, double K1, double K2) {
    const double num = c.M * eta * (c.kappa - eta);
    const double p = 1.0 / (1.0 - eta);
    return {std::pow(num / ((c.kappa - 1.0) * K1), p), std::pow(num / ((c.kappa - 1.0) * K2), p)};
}

double scalar_foc(const Constants& c, double eta, double K1, double K2, double nu, double y) {
    return c.M * eta * (c.kappa - eta) * std::pow(y, eta - 1.0) -
           (K1 - K2) * std::exp(-nu * y) * (c.kappa - 1.0 + nu * y) - (c.kappa - 1.0) * K2;
}

}  // namespace gbm_closed_form

}  // namespace supctrl
