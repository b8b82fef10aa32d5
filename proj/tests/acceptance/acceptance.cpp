// Acceptance run on the canonical GBM instance. One PASS/FAIL line per criterion;
// exit status 1 when any criterion fails.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "supctrl/commands.hpp"
#include "supctrl/config.hpp"
#include "supctrl/grid.hpp"
#include "supctrl/montecarlo.hpp"
#include "supctrl/roots.hpp"
#include "supctrl/stopping.hpp"

using namespace supctrl;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

struct Context {
    ExperimentConfig cfg;
    ControlProblem problem;
    ControlSolution solution;
    StoppingSolution stopping;

    explicit Context(ExperimentConfig c)
        : cfg(std::move(c)), problem(build_problem(cfg)), solution(solve_threshold(problem)), stopping(solution) {}
};

Outcome constants(const Context& ctx) {
    using big = boost::multiprecision::cpp_bin_float_50;
    const big mu("0.01"), sigma("0.1"), r("0.05"), eta("0.5");
    const big s2 = sigma * sigma;
    const big a = big("0.5") - mu / s2;
    const big disc = sqrt(a * a + 2 * r / s2);
    const big kappa = a + disc, theta = a - disc;
    const big M = 1 / (r - mu * eta - s2 * eta * (eta - 1) / 2);
    // The same numbers in the reduced forms -0.5 +- sqrt(10.25) and 1/0.04625.
    const big k2 = big("-0.5") + sqrt(big("10.25")), t2 = big("-0.5") - sqrt(big("10.25"));
    const big m2 = 1 / big("0.04625");
    const bool forms = abs(kappa - k2) < big("1e-40") && abs(theta - t2) < big("1e-40") && abs(M - m2) < big("1e-40");

    const auto c = gbm_closed_form::constants(ctx.cfg.mu, ctx.cfg.sigma, ctx.cfg.rate, ctx.cfg.eta);
    const auto& fs = ctx.problem.fundamentals();
    const double psi_exp = fs.psi(2.0).d1 * 2.0 / fs.psi(2.0).f;
    const double phi_exp = fs.phi(2.0).d1 * 2.0 / fs.phi(2.0).f;
    const double err = std::max({rel(c.kappa, kappa.convert_to<double>()), rel(c.theta, theta.convert_to<double>()),
                                 rel(c.M, M.convert_to<double>()), rel(psi_exp, kappa.convert_to<double>()),
                                 rel(phi_exp, theta.convert_to<double>()),
                                 rel(ctx.problem.flow_value().multiplier(), M.convert_to<double>())});
    return {forms && err < 1e-12, fmt("kappa=%.15g theta=%.15g M=%.15g max_rel_err=%.2e", c.kappa, c.theta, c.M, err)};
}

Outcome threshold_routes(const Context& ctx) {
    const auto t0 = Clock::now();
    const ControlSolution s = solve_threshold(ctx.problem);
    const double y_foc = s.y_star();
    const auto c = gbm_closed_form::constants(ctx.cfg.mu, ctx.cfg.sigma, ctx.cfg.rate, ctx.cfg.eta);
    const auto [lo, hi] = gbm_closed_form::bracket(c, ctx.cfg.eta, ctx.cfg.K1, ctx.cfg.K2);
    const double y_scalar =
        find_root([&](double y) { return gbm_closed_form::scalar_foc(c, ctx.cfg.eta, ctx.cfg.K1, ctx.cfg.K2, ctx.cfg.nu, y); },
                  lo, hi, 1e-13)
            .root;
    const double y_max = argmax_marginal_ratio(ctx.problem, s.bracket());
    const double y_prop = prop_threshold(ctx.problem);
    const double ys[] = {y_foc, y_scalar, y_max, y_prop};
    const double spread = *std::max_element(ys, ys + 4) - *std::min_element(ys, ys + 4);
    const double secs = seconds_since(t0);
    bool inside = true;
    for (double y : ys) inside = inside && lo < y && y < hi;
    char buf[320];
    std::snprintf(buf, sizeof buf, "y*=%.12g scalar=%.12g argmax=%.12g prop=%.12g spread=%.2e bracket=(%.6g, %.6g) %.2fs",
                  y_foc, y_scalar, y_max, y_prop, spread, lo, hi, secs);
    return {spread < 1e-6 && inside && secs < 5.0, buf};
}

Outcome supremum_identity(const Context& ctx) {
    const auto t0 = Clock::now();
    const double ys = ctx.solution.y_star();
    const auto xs = log_grid(0.1, 10.0, 20);
    const auto yg = linear_grid(0.5 * ys, 2.0 * ys, 20);
    double worst = 0.0;
    for (double x : xs) {
        for (double y : yg) {
            const auto r = supremum_identity_check(ctx.problem, y, x);
            worst = std::max(worst, r.abs_diff / (1.0 + std::fabs(r.lhs)));
        }
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-7 && secs < 30.0, fmt("max |H - E f(M_T)1| / (1+|H|) = %.2e over 20x20, %.2fs", worst, secs)};
}

Outcome monte_carlo_control(const Context& ctx) {
    const auto t0 = Clock::now();
    const double y = ctx.solution.y_star();
    const double x0 = ctx.cfg.x0;
    const double H = ctx.solution.H(x0).f;
    const McEstimate reflected = simulate_reflected_payoff(ctx.problem, ctx.cfg.sim, y, x0);
    const auto sup = simulate_supremum_at_exp_time(ctx.problem.spec(), ctx.cfg.sim, x0);
    const McEstimate sampled = estimate_from_samples(
        sup, [&](double m) { return m >= y ? ctx.problem.representing_f(y, m) : 0.0; }, ctx.cfg.sim.antithetic);
    auto ok = [&](double a, double sa, double b, double sb) {
        return std::fabs(a - b) <= 3.0 * std::hypot(sa, sb) + 0.015 * std::fabs(H);
    };
    const bool pass = ok(reflected.mean, reflected.std_error, H, 0.0) && ok(sampled.mean, sampled.std_error, H, 0.0) &&
                      ok(reflected.mean, reflected.std_error, sampled.mean, sampled.std_error);
    const double secs = seconds_since(t0);
    char buf[320];
    std::snprintf(buf, sizeof buf, "H=%.6f reflected=%.6f+-%.6f f(M_T)=%.6f+-%.6f paths=%zu dt=%g %.1fs", H,
                  reflected.mean, reflected.std_error, sampled.mean, sampled.std_error, ctx.cfg.sim.n_paths,
                  ctx.cfg.sim.dt, secs);
    return {pass && secs < 300.0, buf};
}

Outcome sign_property(const Context& ctx) {
    const double y = ctx.solution.y_star();
    const auto grid = figure_grid(ctx.cfg, y);
    const auto opt = sign_property_check(ctx.problem, y, grid);
    const auto low = sign_property_check(ctx.problem, 0.75 * y, grid);
    const auto high = sign_property_check(ctx.problem, 1.25 * y, grid);
    const bool pass = opt.min_f >= -1e-8 && opt.min_f <= 1e-8 && opt.argmin == y && low.min_f < -1e-3 &&
                      high.min_f < -1e-3;
    return {pass, fmt("min f(.,y*)=%.2e at %.10g; min f(.,0.75y*)=%.4g; min f(.,1.25y*)=%.4g", opt.min_f, opt.argmin,
                      low.min_f, high.min_f)};
}

Outcome smooth_fit(const Context& ctx) {
    const auto sf = ctx.solution.smooth_fit();
    const double y = ctx.solution.y_star();
    const double fp = ctx.problem.representing_f_derivative(y);
    const double ft = ctx.problem.f_tilde(y);
    return {sf.relative_gap < 1e-4 && std::fabs(fp) < 1e-6 && std::fabs(ft) < 1e-6,
            fmt("V''(y*-)=%.10g V''(y*+)=%.10g gap=%.2e |f'(y*)|,|f~(y*)| <= %.2e", sf.left, sf.right, sf.relative_gap,
                std::max(std::fabs(fp), std::fabs(ft)))};
}

double worst_linkage(const StoppingSolution& s) {
    double worst = 0.0;
    for (double x : linear_grid(s.y_star(), 10.0, 100)) worst = std::max(worst, linkage_check(s, x).relative);
    return worst;
}

Context generic_context(const ExperimentConfig& base) {
    ExperimentConfig g = base;
    g.model_kind = "generic";
    char d[64], v[64];
    std::snprintf(d, sizeof d, "%.17g*x", base.mu);
    std::snprintf(v, sizeof v, "%.17g*x", base.sigma);
    g.drift_expr = d;
    g.volatility_expr = v;
    return Context(g);
}

Outcome linkage(const Context& ctx, const Context& generic) {
    const double closed = worst_linkage(ctx.stopping);
    const double numeric = worst_linkage(generic.stopping);
    return {closed < 1e-6 && numeric < 1e-5,
            fmt("max relative residual: closed form %.2e, generic ODE %.2e (100 points on [y*, 10])", closed, numeric)};
}

Outcome monte_carlo_stopping(const Context& ctx) {
    const auto t0 = Clock::now();
    const double y = ctx.solution.y_star();
    const double exact = ctx.stopping.marginal_value(ctx.cfg.x0);
    const McEstimate e = simulate_hat_stopping(ctx.problem, ctx.cfg.sim, y, ctx.cfg.x0);
    const double gap = std::fabs(e.mean - exact);
    const bool pass = gap <= 3.0 * e.std_error + e.truncation_bound;
    char buf[256];
    std::snprintf(buf, sizeof buf, "H'(1)=%.8f estimate=%.8f+-%.8f gap=%.2f se truncation<=%.1e paths=%zu %.1fs",
                  exact, e.mean, e.std_error, gap / e.std_error, e.truncation_bound, ctx.cfg.sim.n_paths,
                  seconds_since(t0));
    return {pass, buf};
}

Outcome gittins(const Context& ctx) {
    const double y = ctx.solution.y_star();
    const auto c = locate_gittins_crossing(ctx.problem, y, FlowMonotonicity::increasing);
    const double width = c.hi - c.lo;
    const bool pass = c.found && c.lo <= y && y <= c.hi && width <= 0.005 * y;
    return {pass, fmt("gamma-1 changes sign on [%.8g, %.8g] (width %.3g%% of y*), y*=%.8g", c.lo, c.hi,
                      100.0 * width / y, y)};
}

Outcome generic_vs_closed(const Context& ctx, const Context& generic) {
    const double ya = ctx.solution.y_star(), yb = generic.solution.y_star();
    double worst_v = 0.0;
    for (double x : log_grid(ctx.cfg.report_lo, ctx.cfg.report_hi, ctx.cfg.report_points)) {
        worst_v = std::max(worst_v, rel(generic.solution.V(x).f, ctx.solution.V(x).f));
    }
    const double dy = rel(yb, ya);
    return {dy < 1e-5 && worst_v < 1e-5, fmt("y* rel diff %.2e, max V rel diff %.2e on the report grid", dy, worst_v)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string path = argc > 1 ? argv[1] : std::string(SUPCTRL_CONFIG_DIR) + "/section4.conf";
    int failed = 0;
    auto line = [&](int n, const char* name, const std::function<Outcome()>& run) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %2d %-24s %s  %s\n", n, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    };
    try {
        const Context ctx(load_config(path));
        const Context generic = generic_context(ctx.cfg);
        line(1, "gbm_constants", [&] { return constants(ctx); });
        line(2, "threshold_routes", [&] { return threshold_routes(ctx); });
        line(3, "supremum_identity", [&] { return supremum_identity(ctx); });
        line(4, "mc_control", [&] { return monte_carlo_control(ctx); });
        line(5, "sign_property", [&] { return sign_property(ctx); });
        line(6, "smooth_fit", [&] { return smooth_fit(ctx); });
        line(7, "linkage", [&] { return linkage(ctx, generic); });
        line(8, "mc_stopping", [&] { return monte_carlo_stopping(ctx); });
        line(9, "gittins_crossing", [&] { return gittins(ctx); });
        line(10, "generic_vs_closed_form", [&] { return generic_vs_closed(ctx, generic); });
    } catch (const std::exception& e) {
        std::printf("setup FAIL %s\n", e.what());
        return 1;
    }
    std::printf("%d of 10 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
