#include "supctrl/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "supctrl/errors.hpp"
#include "supctrl/roots.hpp"
#include "supctrl/stopping.hpp"

namespace supctrl {

namespace {

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(15) << v;
    return os.str();
}

std::string full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void kv(std::ostream& out, const std::string& key, const std::string& value) { out << key << " = " << value << '\n'; }
void kv(std::ostream& out, const std::string& key, double value) { kv(out, key, num(value)); }

const char* mode_name(SolutionMode m) { return m == SolutionMode::numeric ? "numeric" : "closed_form"; }

void header(std::ostream& out, const std::string& command, const ControlProblem& p) {
    kv(out, "command", command);
    kv(out, "model", p.spec().describe());
    kv(out, "payoff", p.payoff().describe());
    kv(out, "solution_mode", mode_name(p.fundamentals().mode()));
}

void item(std::ostream& out, const std::string& prefix, const CheckItem& it) {
    std::string v = std::string(it.pass ? "PASS" : "FAIL") + " residual=" + num(it.residual);
    if (!it.detail.empty()) v += " detail=" + it.detail;
    kv(out, prefix + "." + it.name, v);
}

// Unwraps assumption and condition items so reports show every failure.
std::vector<CheckItem> structural_items(const ControlProblem& p, ThresholdBracket* bracket) {
    std::vector<CheckItem> items = p.assumption_checks();
    bool ok = std::all_of(items.begin(), items.end(), [](const CheckItem& i) { return i.pass; });
    if (ok) {
        auto cond = p.condition_checks(bracket);
        items.insert(items.end(), cond.begin(), cond.end());
    }
    return items;
}

void require(const std::vector<CheckItem>& items) {
    for (const auto& it : items) {
        if (!it.pass) throw AssumptionViolation(it.name, it.detail.empty() ? "check failed" : it.detail);
    }
}

std::optional<StoppingSolution> try_stopping(const ControlSolution& sol) {
    if (sol.problem().fundamentals().boundaries().lower_attainable()) return std::nullopt;
    return StoppingSolution(sol);
}

CheckItem bounded(const std::string& name, double residual, double tol, const std::string& detail = "") {
    CheckItem it{name, std::isfinite(residual) && residual <= tol, residual, detail};
    if (!it.pass && it.detail.empty()) it.detail = "exceeds " + num(tol);
    return it;
}

// |estimate - analytic| against 3 std errors plus a relative floor.
CheckItem mc_item(const std::string& name, const McEstimate& e, double analytic, double floor) {
    const double diff = std::fabs(e.mean - analytic);
    const double band = 3.0 * e.std_error + floor * std::fabs(analytic) + e.truncation_bound;
    CheckItem it{name, diff <= band, diff,
                 "estimate=" + num(e.mean) + " se=" + num(e.std_error) + " analytic=" + num(analytic)};
    return it;
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
    if (dynamic_cast<const AssumptionViolation*>(&e) || dynamic_cast<const UnsupportedModelError*>(&e) ||
        dynamic_cast<const IntegrabilityError*>(&e)) {
        return kExitAssumption;
    }
    if (dynamic_cast<const DomainError*>(&e)) return kExitConfig;
    return kExitNumeric;
}

int cmd_solve(const ExperimentConfig& cfg, std::ostream& out) {
    const ControlProblem p = build_problem(cfg);
    header(out, "solve", p);
    ThresholdBracket bracket;
    const auto items = structural_items(p, &bracket);
    for (const auto& it : items) item(out, "check", it);
    require(items);

    const ControlSolution sol = solve_threshold(p);
    const double y = sol.y_star();
    kv(out, "y_star", full(y));
    kv(out, "bracket.x_hat", sol.bracket().x_hat);
    kv(out, "bracket.x_zero", sol.bracket().x_zero);
    kv(out, "foc_residual", sol.foc_residual());
    const SmoothFit sf = sol.smooth_fit();
    kv(out, "smooth_fit.left", sf.left);
    kv(out, "smooth_fit.right", sf.right);
    kv(out, "smooth_fit.relative_gap", sf.relative_gap);
    kv(out, "f_prime_at_y_star", p.representing_f_derivative(y));
    kv(out, "f_tilde_at_y_star", p.f_tilde(y));

    const auto stop = try_stopping(sol);
    if (!stop) kv(out, "stopping", "skipped (0 is attainable)");
    kv(out, "grid.columns", stop ? "x V H H_prime" : "x V H");
    const auto grid = log_grid(cfg.report_lo, cfg.report_hi, cfg.report_points);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid[i];
        std::string row = num(x) + " " + num(sol.V(x).f) + " " + num(sol.H(x).f);
        if (stop) row += " " + num(stop->marginal_value(x));
        char key[32];
        std::snprintf(key, sizeof key, "grid.%03zu", i);
        kv(out, key, row);
    }
    kv(out, "status", "ok");
    return kExitOk;
}

std::vector<double> figure_grid(const ExperimentConfig& cfg, double y_star) {
    std::vector<double> g = linear_grid(cfg.figure_lo, cfg.figure_hi, 399);
    if (std::find(g.begin(), g.end(), y_star) == g.end()) g.push_back(y_star);
    std::sort(g.begin(), g.end());
    return g;
}

int cmd_figure1(const ExperimentConfig& cfg, std::ostream& out) {
    const ControlProblem p = build_problem(cfg);
    const ControlSolution sol = solve_threshold(p);
    const double y = sol.y_star();
    const double lo = 0.75 * y, hi = 1.25 * y;
    out << "x,f_optimal,f_low,f_high\n";
    for (double x : figure_grid(cfg, y)) {
        const double f_opt = p.representing_f(y, x);
        out << full(x) << ',' << full(f_opt) << ',' << full(p.representing_f(lo, x)) << ','
            << full(p.representing_f(hi, x)) << '\n';
    }
    return kExitOk;
}

std::vector<Figure1Row> read_figure1_csv(std::istream& in) {
    std::vector<Figure1Row> rows;
    std::string line;
    if (!std::getline(in, line) || line != "x,f_optimal,f_low,f_high") {
        throw ConfigError("figure1 csv: unexpected header");
    }
    int n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        Figure1Row r{};
        char* p = line.data();
        char* end = nullptr;
        double* fields[] = {&r.x, &r.f_optimal, &r.f_low, &r.f_high};
        for (int k = 0; k < 4; ++k) {
            *fields[k] = std::strtod(p, &end);
            if (end == p || (k < 3 && *end != ',') || (k == 3 && *end != '\0')) {
                throw ConfigError("figure1 csv: malformed line " + std::to_string(n));
            }
            p = end + 1;
        }
        rows.push_back(r);
    }
    return rows;
}

int cmd_verify(const ExperimentConfig& cfg, bool skip_mc, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const ControlProblem p = build_problem(cfg);
    header(out, "verify", p);
    const auto& fs = p.fundamentals();
    const auto& spec = p.spec();
    const bool numeric = fs.mode() == SolutionMode::numeric;
    std::vector<CheckItem> items;
    const auto grid = log_grid(cfg.report_lo, cfg.report_hi, 60);

    {
        double worst = 0.0;
        for (double x : grid) {
            const Jet a = fs.psi(x), b = fs.phi(x);
            const double w = (a.d1 * b.f - b.d1 * a.f) / fs.scale_density(x);
            worst = std::max(worst, std::fabs(w / fs.wronskian() - 1.0));
        }
        items.push_back(bounded("wronskian_constant", worst, 1e-8));
    }
    {
        double wp = 0.0, wf = 0.0;
        for (double x : grid) {
            const Jet a = fs.psi(x), b = fs.phi(x);
            wp = std::max(wp, std::fabs(generator_apply(spec, a, x)) / (spec.rate() * a.f));
            wf = std::max(wf, std::fabs(generator_apply(spec, b, x)) / (spec.rate() * b.f));
        }
        items.push_back(bounded("psi_harmonic", wp, 1e-8));
        items.push_back(bounded("phi_harmonic", wf, 1e-8));
    }
    {
        const Expression g = Expression::parse("1/(1+x)^2");
        const JetFunction f = [&](double x) { return g.eval(x); };
        double worst = 0.0;
        for (double x : {0.2, 0.5, 1.0, 2.0, 5.0}) {
            const Jet u = p.kernel().evaluate(f, x);
            worst = std::max(worst, std::fabs(generator_apply(spec, u, x) + g.value(x)) / g.value(x));
        }
        items.push_back(bounded("resolvent_inverse", worst, 1e-6));
    }

    ThresholdBracket bracket;
    const auto structural = structural_items(p, &bracket);
    items.insert(items.end(), structural.begin(), structural.end());
    const bool solvable = std::all_of(structural.begin(), structural.end(), [](const CheckItem& i) { return i.pass; });

    if (solvable) {
        const ControlSolution sol = solve_threshold(p);
        const double y = sol.y_star();
        kv(out, "y_star", full(y));
        {
            const double ya = argmax_marginal_ratio(p, sol.bracket());
            double yp = NAN;
            std::string detail;
            try {
                yp = prop_threshold(p);
            } catch (const AssumptionViolation& e) {
                detail = e.what();
            }
            double worst = std::max(std::fabs(ya - y), std::fabs(yp - y)) / y;
            if (spec.is_gbm() && p.payoff().power_flow() && p.payoff().exp_blend()) {
                const auto& g = spec.gbm_coefficients();
                const auto* e = p.payoff().exp_blend();
                const double eta = p.payoff().power_flow()->eta;
                const auto c = gbm_closed_form::constants(g.mu, g.sigma, spec.rate(), eta);
                const auto [blo, bhi] = gbm_closed_form::bracket(c, eta, e->K1, e->K2);
                const double ys = find_root([&](double v) { return gbm_closed_form::scalar_foc(c, eta, e->K1, e->K2, e->nu, v); },
                                            blo, bhi, 1e-14 * bhi)
                                      .root;
                worst = std::max(worst, std::fabs(ys - y) / y);
                if (!(y > blo && y < bhi)) detail = "y* outside the closed-form bracket";
            }
            CheckItem it = bounded("threshold_routes_agree", worst, 1e-6, detail);
            if (!detail.empty()) it.pass = false;
            items.push_back(it);
        }
        {
            const SmoothFit sf = sol.smooth_fit();
            items.push_back(bounded("smooth_fit", sf.relative_gap, 1e-4));
            items.push_back(bounded("f_prime_at_y_star", std::fabs(p.representing_f_derivative(y)), 1e-6));
            items.push_back(bounded("f_tilde_at_y_star", std::fabs(p.f_tilde(y)), 1e-6));
        }
        {
            double worst = 0.0;
            for (double x : log_grid(0.5 * y, 3.0 * y, 5)) {
                for (double yy : log_grid(0.75 * y, 1.5 * y, 5)) {
                    const auto s = supremum_identity_check(p, yy, x);
                    worst = std::max(worst, s.abs_diff / (1.0 + std::fabs(s.lhs)));
                }
            }
            items.push_back(bounded("supremum_identity", worst, 1e-7));
        }
        {
            const auto fg = figure_grid(cfg, y);
            const SignScan opt = sign_property_check(p, y, fg);
            const SignScan low = sign_property_check(p, 0.75 * y, fg);
            const SignScan high = sign_property_check(p, 1.25 * y, fg);
            CheckItem it{"sign_property", opt.region_nonneg && low.min_f < -1e-3 && high.min_f < -1e-3, opt.min_f,
                         "min_f(y*)=" + num(opt.min_f) + " min_f(0.75y*)=" + num(low.min_f) +
                             " min_f(1.25y*)=" + num(high.min_f)};
            items.push_back(it);
        }
        const auto stop = try_stopping(sol);
        if (stop) {
            double worst = 0.0;
            for (double x : linear_grid(y, std::max(10.0, 2.0 * y), 25)) {
                worst = std::max(worst, linkage_check(*stop, x).relative);
            }
            items.push_back(bounded("linkage", worst, numeric ? 1e-5 : 1e-6));
            double sup_gap = 0.0;
            for (double x : {0.5 * y, 0.9 * y, y, 1.5 * y}) {
                const double mv = stop->marginal_value(x);
                sup_gap = std::max(sup_gap, std::fabs(stop->marginal_value_sup(x) - mv) / std::fabs(mv));
            }
            items.push_back(bounded("marginal_value_sup_form", sup_gap, 1e-6));
            for (const auto& it : stopping_value_bounds_check(stop->hat(), cfg.solver.scan_lo, cfg.solver.x_max)) {
                items.push_back(it);
            }
            const auto dir = FlowMonotonicity::increasing;
            const GittinsCrossing gc = locate_gittins_crossing(p, y, dir);
            CheckItem it{"gittins_crossing", gc.found && gc.lo <= y && y <= gc.hi && gc.hi - gc.lo <= 0.005 * y,
                         gc.found ? (gc.hi - gc.lo) / y : NAN,
                         gc.found ? "cell=[" + num(gc.lo) + ", " + num(gc.hi) + "]" : "no sign change"};
            items.push_back(it);
        }

        if (!skip_mc) {
            SimConfig sim = cfg.sim;
            sim.n_paths = cfg.verify_paths;
            const double x0 = cfg.x0;
            const auto samples = simulate_supremum_at_exp_time(spec, sim, x0);
            const double law = x0 >= y ? 1.0 : fs.psi_hat0(x0).f / fs.psi_hat0(y).f;
            items.push_back(mc_item("mc_supremum_law",
                                    estimate_from_samples(samples, [y](double m) { return m >= y ? 1.0 : 0.0; },
                                                          sim.antithetic),
                                    law, 0.01));
            const double h = sol.H(x0).f;
            items.push_back(mc_item("mc_f_sampling",
                                    estimate_from_samples(samples,
                                                          [&](double m) { return m >= y ? sol.f(m) : 0.0; },
                                                          sim.antithetic),
                                    h, 0.01));
            items.push_back(mc_item("mc_reflected_payoff", simulate_reflected_payoff(p, sim, y, x0), h, 0.01));
            if (stop && x0 < y) {
                items.push_back(
                    mc_item("mc_hat_stopping", simulate_hat_stopping(p, sim, y, x0), stop->marginal_value(x0), 0.01));
            }
        }
    }

    int failed = 0;
    for (const auto& it : items) {
        item(out, "verify", it);
        if (!it.pass) ++failed;
    }
    kv(out, "verify.items", static_cast<double>(items.size()));
    kv(out, "verify.failed", static_cast<double>(failed));
    kv(out, "verify.seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    kv(out, "status", failed == 0 ? "ok" : "fail");
    return failed == 0 ? kExitOk : kExitNumeric;
}

int cmd_simulate(const ExperimentConfig& cfg, std::ostream& out) {
    const ControlProblem p = build_problem(cfg);
    header(out, "simulate", p);
    const ControlSolution sol = solve_threshold(p);
    const double y = sol.y_star();
    const double x0 = cfg.x0;
    const SimConfig& sim = cfg.sim;
    kv(out, "y_star", full(y));
    kv(out, "x0", x0);
    kv(out, "paths", static_cast<double>(sim.n_paths));
    kv(out, "dt", sim.dt);
    kv(out, "seed", std::to_string(sim.seed));
    kv(out, "horizon", sim.horizon == HorizonPolicy::discount_weight ? "discount" : "exponential");
    if (const auto w = step_size_warning(p.spec(), sim, x0); !w.empty()) kv(out, "warning", w);

    auto report = [&](const std::string& key, const McEstimate& e, double analytic) {
        kv(out, key + ".mean", e.mean);
        kv(out, key + ".std_error", e.std_error);
        kv(out, key + ".n_effective", static_cast<double>(e.n_effective));
        if (e.truncation_bound > 0.0) kv(out, key + ".truncation_bound", e.truncation_bound);
        kv(out, key + ".analytic", analytic);
    };

    const auto samples = simulate_supremum_at_exp_time(p.spec(), sim, x0);
    const auto& fs = p.fundamentals();
    report("supremum_law",
           estimate_from_samples(samples, [y](double m) { return m >= y ? 1.0 : 0.0; }, sim.antithetic),
           x0 >= y ? 1.0 : fs.psi_hat0(x0).f / fs.psi_hat0(y).f);
    report("f_sampling",
           estimate_from_samples(samples, [&](double m) { return m >= y ? sol.f(m) : 0.0; }, sim.antithetic),
           sol.H(x0).f);
    for (const auto& [tag, level] : {std::pair{"reflected_low", 0.75}, {"reflected_opt", 1.0}, {"reflected_high", 1.25}}) {
        report(tag, simulate_reflected_payoff(p, sim, level * y, x0), p.reflection_value(level * y, x0).f);
    }
    if (const auto stop = try_stopping(sol); stop && x0 < y) {
        report("hat_stopping", simulate_hat_stopping(p, sim, y, x0), stop->marginal_value(x0));
    }
    kv(out, "status", "ok");
    return kExitOk;
}

int run_command(const std::string& name, const ExperimentConfig& cfg, bool skip_mc, std::ostream& out,
                std::ostream& err) {
    std::ostringstream buf;
    int code = kExitOk;
    try {
        if (name == "solve") code = cmd_solve(cfg, buf);
        else if (name == "figure1") code = cmd_figure1(cfg, buf);
        else if (name == "verify") code = cmd_verify(cfg, skip_mc, buf);
        else if (name == "simulate") code = cmd_simulate(cfg, buf);
        else throw ConfigError("unknown command '" + name + "'");
    } catch (const std::exception& e) {
        code = exit_code_for(e);
        if (name != "figure1") {
            kv(buf, "status", "error");
            kv(buf, "error", e.what());
        }
        err << "error: " << e.what() << '\n';
    }
    out << buf.str();
    if (code == kExitConfig || cfg.out_dir.empty()) return code;
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    const std::string file = cfg.out_dir + "/" + name + (name == "figure1" ? ".csv" : ".txt");
    std::ofstream f(file);
    if (!f) {
        err << "error: cannot write " << file << '\n';
        return code == kExitOk ? kExitNumeric : code;
    }
    f << buf.str();
    return code;
}

}  // namespace supctrl
