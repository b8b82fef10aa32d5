#include "supctrl/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "supctrl/errors.hpp"
#include "supctrl/roots.hpp"

namespace supctrl {

namespace {

constexpr QuadratureSettings kTight{1e-14, 1e-11, 12};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

// Weights of the two exit points: E_x[e^{-int rho} g] = wz g(z) + wy g(y).
std::pair<double, double> exit_weights(const FundamentalSolutions& fs, double z, double y, double x) {
    const Jet pz = fs.psi(z), py = fs.psi(y), px = fs.psi(x);
    const Jet fz = fs.phi(z), fy = fs.phi(y), fx = fs.phi(x);
    auto v1 = [&](const Jet& p, const Jet& f) { return fy.d1 / py.d1 * p.d1 - f.d1; };
    auto v2 = [&](const Jet& p, const Jet& f) { return p.d1 - pz.d1 / fz.d1 * f.d1; };
    return {v1(px, fx) / v1(pz, fz), v2(px, fx) / v2(py, fy)};
}

}  // namespace

HatDiffusionSpec::HatDiffusionSpec(FundamentalPtr fs) : fs_(std::move(fs)) {}

double HatDiffusionSpec::drift(double x) const {
    const Jet s = base().volatility_jet(x);
    return base().drift(x) + s.d1 * s.f;
}

double HatDiffusionSpec::kill_rate(double x) const { return base().rate() - base().drift_jet(x).d1; }

double HatDiffusionSpec::scale_density(double x) const {
    const double v = base().volatility(x);
    return fs_->scale_density(x) / (v * v);
}

double HatDiffusionSpec::speed_density(double x) const { return 2.0 / fs_->scale_density(x); }

CheckItem HatDiffusionSpec::kill_rate_check(const std::vector<double>& grid) const {
    CheckItem it{"rho_positive", true, std::numeric_limits<double>::infinity(), ""};
    for (double x : grid) {
        const double r = kill_rate(x);
        it.residual = std::min(it.residual, r);
        if (!(r > 0.0) && it.pass) {
            it.pass = false;
            it.detail = "rho(" + fmt(x) + ") = " + fmt(r) + " <= 0";
        }
    }
    return it;
}

StoppingSolution::StoppingSolution(ControlSolution control)
    : control_(std::move(control)), hat_(control_.problem().kernel().fundamentals_ptr()) {
    if (hat_.fundamentals().boundaries().lower_attainable()) {
        throw UnsupportedModelError("the stopping representation requires 0 to be unattainable");
    }
}

double StoppingSolution::marginal_value(double x) const {
    const auto& p = control_.problem();
    const double y = y_star();
    if (x >= y) return p.option_value(x).d1;
    const auto& fs = p.fundamentals();
    return p.option_value(y).d1 * fs.psi(x).d1 / fs.psi(y).d1;
}

double StoppingSolution::marginal_value_sup(double x) const {
    const auto& p = control_.problem();
    const double hi = std::max(p.settings().x_max, 10.0 * x);
    const auto best = maximize_on_grid([&](double y) { return p.marginal_ratio(y); }, x, hi, 400);
    const double at_x = p.marginal_ratio(x);
    return std::max(best.value, at_x) * p.fundamentals().psi(x).d1;
}

double StoppingSolution::f_tilde_derivative(double x) const {
    const Jet a = control_.problem().option_value(x);
    const Jet p = control_.problem().fundamentals().psi(x);
    return -a.d3 * p.d1 / p.d2 + a.d2 * p.d1 * p.d3 / (p.d2 * p.d2);
}

double StoppingSolution::f_tilde_quotient(double x) const {
    const auto& p = control_.problem();
    const auto& fs = p.fundamentals();
    auto num = [&](double t) { return fs.psi(t).d1 * p.generator_A_derivative(t) * hat_.speed_density(t); };
    auto den = [&](double t) { return hat_.kill_rate(t) * fs.psi(t).d1 * hat_.speed_density(t); };
    const double n = integrate_state(p.spec(), num, 0.0, x, kTight).value;
    const double d = integrate_state(p.spec(), den, 0.0, x, kTight).value;
    return -n / d;
}

double StoppingSolution::rep4_value(double x) const {
    const auto& p = control_.problem();
    const auto& fs = p.fundamentals();
    auto g = [&](double z) {
        const Jet q = fs.psi(z);
        return p.f_tilde(z) * q.d2 / (q.d1 * q.d1);
    };
    const double lo = std::max(x, y_star());
    return fs.psi(x).d1 * integrate_state(p.spec(), g, lo, p.spec().upper(), kTight).value;
}

LinkageResidual linkage_check(const StoppingSolution& s, double x) {
    const auto& p = s.control().problem();
    const Jet q = p.fundamentals().psi(x);
    LinkageResidual r;
    r.f_prime = p.representing_f_derivative(x);
    r.rhs = s.f_tilde(x) * q.d2 * q.f / (q.d1 * q.d1);
    r.residual = r.f_prime - r.rhs;
    r.relative = std::fabs(r.residual) / (1.0 + std::fabs(r.f_prime));
    return r;
}

double ode2_residual(const HatDiffusionSpec& hat, int which, double x) {
    const Jet u = which > 0 ? hat.fundamentals().psi(x) : -hat.fundamentals().phi(x);
    const double v = hat.volatility(x);
    return 0.5 * v * v * u.d3 + hat.drift(x) * u.d2 - hat.kill_rate(x) * u.d1;
}

std::vector<CheckItem> stopping_value_bounds_check(const HatDiffusionSpec& hat, double lo, double hi, int points) {
    const auto& fs = hat.fundamentals();
    const StateMap& map = hat.base().map();
    const double slo = map.to_s(lo), shi = map.to_s(hi);
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i) grid[i] = map.to_x(slo + (shi - slo) * i / (points - 1));
    const double decade = std::log(10.0);

    std::vector<CheckItem> items;
    items.push_back(hat.kill_rate_check(grid));

    {
        CheckItem it{"phi_prime_to_minus_inf_at_0", true, 0.0, ""};
        double prev = fs.phi(grid[0]).d1;
        const double start = prev;
        double end = prev;
        for (int i = 1; i < points && map.to_s(grid[i]) <= slo + decade; ++i) {
            const double cur = fs.phi(grid[i]).d1;
            if (!(cur > prev)) it.pass = false;
            prev = end = cur;
        }
        it.residual = start;
        if (!(start < 0.0) || !(std::fabs(start) > 2.0 * std::fabs(end))) it.pass = false;
        if (!it.pass) it.detail = "phi' does not diverge monotonically over the last decade toward 0";
        items.push_back(it);
    }
    {
        CheckItem it{"psi_prime_to_inf_at_b", true, 0.0, ""};
        double prev = fs.psi(grid[points - 1]).d1;
        const double start = prev;
        double end = prev;
        for (int i = points - 2; i >= 0 && map.to_s(grid[i]) >= shi - decade; --i) {
            const double cur = fs.psi(grid[i]).d1;
            if (!(cur < prev)) it.pass = false;
            prev = end = cur;
        }
        it.residual = start;
        if (!(start > 2.0 * end) || !(end > 0.0)) it.pass = false;
        if (!it.pass) it.detail = "psi' does not diverge monotonically over the last decade toward b";
        items.push_back(it);
    }
    {
        CheckItem psi{"psi_convex", true, 0.0, ""};
        CheckItem phi{"phi_convex", true, 0.0, ""};
        for (double x : grid) {
            const Jet p = fs.psi(x), f = fs.phi(x);
            if (!(p.d1 > 0.0 && p.d2 > 0.0) && psi.pass) {
                psi.pass = false;
                psi.detail = "psi' not positive increasing at x = " + fmt(x);
            }
            if (!(f.d1 < 0.0 && f.d2 > 0.0) && phi.pass) {
                phi.pass = false;
                phi.detail = "-phi' not positive decreasing at x = " + fmt(x);
            }
        }
        items.push_back(psi);
        items.push_back(phi);
    }
    return items;
}

double two_sided_exit_value(const FundamentalSolutions& fs, const std::function<double(double)>& g, double z,
                            double y, double x) {
    if (!(z > 0.0 && z < x && x < y && fs.spec().contains(y))) {
        throw DomainError("two-sided exit needs 0 < z < x < y < b");
    }
    const auto [wz, wy] = exit_weights(fs, z, y, x);
    return wz * g(z) + wy * g(y);
}

GittinsResult gittins_signal(const ControlProblem& problem, double x, FlowMonotonicity dir,
                             const GittinsSettings& gs) {
    const auto& fs = problem.fundamentals();
    const auto& flow = problem.flow_value();
    const auto& payoff = problem.payoff();
    const double sign = dir == FlowMonotonicity::increasing ? 1.0 : -1.0;
    const double alpha_x = payoff.alpha(x).f;
    const double flow_x = flow(x).d1;
    const double b = problem.spec().upper();
    const double y_cap = std::isfinite(b) ? std::min(b * (1.0 - 1e-9), gs.right_ratio * x) : gs.right_ratio * x;
    const double lz_lo = std::log(gs.left_ratio * x);
    const double lx = std::log(x);
    const double ly_hi = std::log(y_cap);
    const double min_width = gs.min_relative_width * x;

    GittinsResult best;
    best.value = std::numeric_limits<double>::infinity();
    best.min_denominator = std::numeric_limits<double>::infinity();

    auto consider = [&](double lz, double ly) {
        if (lz < lz_lo - 1e-12 || lz >= lx || ly <= lx || ly > ly_hi + 1e-12) return;
        const double z = std::exp(lz), y = std::exp(ly);
        if (x - z < min_width || y - x < min_width) return;
        const auto [wz, wy] = exit_weights(fs, z, y, x);
        const double num = alpha_x - wz * payoff.alpha(z).f - wy * payoff.alpha(y).f;
        const double den = flow_x - wz * flow(z).d1 - wy * flow(y).d1;
        ++best.intervals;
        best.min_denominator = std::min(best.min_denominator, den);
        if (!(den > 0.0)) {
            best.denominator_positive = false;
            return;
        }
        const double key = sign * num / den;
        if (key < best.value) {
            best.value = key;
            best.z = z;
            best.y = y;
        }
    };

    double hz = (lx - lz_lo) / gs.left_points;
    double hy = (ly_hi - lx) / gs.right_points;
    for (int i = 0; i < gs.left_points; ++i) {
        for (int j = 1; j <= gs.right_points; ++j) consider(lz_lo + i * hz, lx + j * hy);
    }
    for (int k = 0; k < gs.refinements && std::isfinite(best.value); ++k) {
        hz *= 0.5;
        hy *= 0.5;
        const double cz = std::log(best.z), cy = std::log(best.y);
        for (int i = -2; i <= 2; ++i) {
            for (int j = -2; j <= 2; ++j) consider(cz + i * hz, cy + j * hy);
        }
    }
    best.value *= sign;
    return best;
}

GittinsCrossing locate_gittins_crossing(const ControlProblem& problem, double center, FlowMonotonicity dir,
                                        double cell, double half_width, const GittinsSettings& gs) {
    GittinsCrossing out;
    const int k_max = static_cast<int>(std::floor(half_width / cell - 0.5));
    double prev_x = 0.0, prev_v = 0.0;
    for (int k = -k_max - 1; k <= k_max; ++k) {
        const double x = center * (1.0 + (k + 0.5) * cell);
        const double v = gittins_signal(problem, x, dir, gs).value - 1.0;
        if (k > -k_max - 1 && std::isfinite(v) && std::isfinite(prev_v) && (prev_v < 0.0) != (v < 0.0)) {
            out = {true, prev_x, x, prev_v, v};
            return out;
        }
        prev_x = x;
        prev_v = v;
    }
    return out;
}

}  // namespace supctrl
