#include "supctrl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "supctrl/errors.hpp"

namespace supctrl {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Line {
    std::string value;
    int number;
};

class Reader {
public:
    Reader(std::map<std::string, Line> entries, std::string source)
        : entries_(std::move(entries)), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        auto it = entries_.find(key);
        const std::string where = it == entries_.end() ? source_ : source_ + ":" + std::to_string(it->second.number);
        throw ConfigError(where + ": " + key + ": " + msg);
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    void number(const std::string& key, double& out) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return;
        const std::string& v = it->second.value;
        if (v == "inf" || v == "infinity") {
            out = std::numeric_limits<double>::infinity();
            return;
        }
        double d = 0.0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), d);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size()) fail(key, "expected a number, got '" + v + "'");
        out = d;
    }

    template <class Int>
    void integer(const std::string& key, Int& out) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return;
        const std::string& v = it->second.value;
        Int n{};
        const auto res = std::from_chars(v.data(), v.data() + v.size(), n);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size()) fail(key, "expected an integer, got '" + v + "'");
        out = n;
    }

    void boolean(const std::string& key, bool& out) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return;
        const std::string& v = it->second.value;
        if (v == "true" || v == "1" || v == "yes") out = true;
        else if (v == "false" || v == "0" || v == "no") out = false;
        else fail(key, "expected true or false, got '" + v + "'");
    }

    void text(const std::string& key, std::string& out) const {
        auto it = entries_.find(key);
        if (it != entries_.end()) out = it->second.value;
    }

    void choice(const std::string& key, std::string& out, std::initializer_list<const char*> allowed) const {
        text(key, out);
        for (const char* a : allowed) {
            if (out == a) return;
        }
        std::string list;
        for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
        fail(key, "must be one of " + list + ", got '" + out + "'");
    }

    void expression(const std::string& key, const std::string& text) const {
        try {
            (void)Expression::parse(text);
        } catch (const ConfigError& e) {
            fail(key, e.what());
        }
    }

private:
    std::map<std::string, Line> entries_;
    std::string source_;
};

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "model.kind",        "model.mu",          "model.sigma",          "model.drift",
        "model.volatility",  "model.rate",        "model.upper",          "model.anchor",
        "model.solution",    "payoff.flow",       "payoff.eta",           "payoff.flow_expr",
        "payoff.return",     "payoff.K1",         "payoff.K2",            "payoff.nu",
        "payoff.alpha_expr", "payoff.lambda_expr", "solver.root_tol",     "solver.grid_points",
        "solver.scan_lo",    "solver.x_max",      "solver.epsilon",       "solver.quad_abs",
        "solver.quad_rel",   "solver.quad_depth", "solver.report_lo",     "solver.report_hi",
        "solver.report_points", "simulation.paths", "simulation.dt",      "simulation.seed",
        "simulation.antithetic", "simulation.horizon", "simulation.bridge", "simulation.x0",
        "simulation.verify_paths", "output.dir", "output.figure_lo", "output.figure_hi",
    };
    return keys;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
    std::map<std::string, Line> entries;
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(number) + ": ";
        if (eq == std::string::npos) throw ConfigError(where + "expected 'section.key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.find('.') == std::string::npos) throw ConfigError(where + "key '" + key + "' has no section");
        if (!known_keys().count(key)) throw ConfigError(where + "unknown key '" + key + "'");
        if (value.empty()) throw ConfigError(where + key + ": empty value");
        if (entries.count(key)) {
            throw ConfigError(where + "duplicate key '" + key + "' (first set on line " +
                              std::to_string(entries[key].number) + ")");
        }
        entries[key] = {value, number};
    }

    const Reader r(std::move(entries), source);
    ExperimentConfig c;
    c.source = source;

    r.choice("model.kind", c.model_kind, {"gbm", "generic"});
    r.number("model.mu", c.mu);
    r.number("model.sigma", c.sigma);
    r.text("model.drift", c.drift_expr);
    r.text("model.volatility", c.volatility_expr);
    r.number("model.rate", c.rate);
    r.number("model.upper", c.upper);
    r.number("model.anchor", c.anchor);
    std::string solution = c.model_kind == "gbm" ? "closed_form" : "numeric";
    r.choice("model.solution", solution, {"closed_form", "numeric"});
    c.solution = solution == "numeric" ? SolutionMode::numeric : SolutionMode::closed_form;

    if (c.model_kind == "gbm") {
        if (r.has("model.drift") || r.has("model.volatility")) {
            r.fail(r.has("model.drift") ? "model.drift" : "model.volatility", "only valid with model.kind = generic");
        }
        if (r.has("model.upper") && std::isfinite(c.upper)) r.fail("model.upper", "gbm lives on (0, inf)");
        if (!(c.sigma > 0.0)) r.fail("model.sigma", "must be positive");
    } else {
        if (c.drift_expr.empty()) r.fail("model.drift", "required with model.kind = generic");
        if (c.volatility_expr.empty()) r.fail("model.volatility", "required with model.kind = generic");
        r.expression("model.drift", c.drift_expr);
        r.expression("model.volatility", c.volatility_expr);
        if (c.solution == SolutionMode::closed_form) r.fail("model.solution", "closed_form needs model.kind = gbm");
        if (!(c.upper > 0.0)) r.fail("model.upper", "must be positive");
    }
    if (!(c.rate > 0.0)) r.fail("model.rate", "must be positive");
    if (!(c.anchor > 0.0 && c.anchor < c.upper)) r.fail("model.anchor", "must lie inside the state space");

    r.choice("payoff.flow", c.flow_kind, {"power", "expression"});
    r.number("payoff.eta", c.eta);
    r.text("payoff.flow_expr", c.flow_expr);
    if (c.flow_kind == "expression") {
        if (c.flow_expr.empty()) r.fail("payoff.flow_expr", "required with payoff.flow = expression");
        r.expression("payoff.flow_expr", c.flow_expr);
    }
    r.choice("payoff.return", c.return_kind, {"exp_blend", "expression"});
    r.number("payoff.K1", c.K1);
    r.number("payoff.K2", c.K2);
    r.number("payoff.nu", c.nu);
    r.text("payoff.alpha_expr", c.alpha_expr);
    r.text("payoff.lambda_expr", c.lambda_expr);
    if (c.return_kind == "expression") {
        if (c.alpha_expr.empty()) r.fail("payoff.alpha_expr", "required with payoff.return = expression");
        r.expression("payoff.alpha_expr", c.alpha_expr);
        if (!c.lambda_expr.empty()) r.expression("payoff.lambda_expr", c.lambda_expr);
    } else if (!(c.nu > 0.0)) {
        r.fail("payoff.nu", "must be positive");
    }

    r.number("solver.root_tol", c.solver.root_tol);
    r.integer("solver.grid_points", c.solver.grid_points);
    r.number("solver.scan_lo", c.solver.scan_lo);
    r.number("solver.x_max", c.solver.x_max);
    r.number("solver.epsilon", c.solver.epsilon);
    r.number("solver.quad_abs", c.quadrature.abs_tol);
    r.number("solver.quad_rel", c.quadrature.rel_tol);
    r.integer("solver.quad_depth", c.quadrature.max_depth);
    r.number("solver.report_lo", c.report_lo);
    r.number("solver.report_hi", c.report_hi);
    r.integer("solver.report_points", c.report_points);
    if (!(c.solver.root_tol > 0.0)) r.fail("solver.root_tol", "must be positive");
    if (c.solver.grid_points < 10) r.fail("solver.grid_points", "must be at least 10");
    if (!(c.solver.scan_lo > 0.0 && c.solver.scan_lo < c.solver.x_max)) r.fail("solver.scan_lo", "must lie in (0, x_max)");
    if (!(c.report_lo > 0.0 && c.report_lo < c.report_hi)) r.fail("solver.report_lo", "must lie in (0, report_hi)");
    if (c.report_points < 2) r.fail("solver.report_points", "must be at least 2");

    r.integer("simulation.paths", c.sim.n_paths);
    r.number("simulation.dt", c.sim.dt);
    r.integer("simulation.seed", c.sim.seed);
    r.boolean("simulation.antithetic", c.sim.antithetic);
    std::string horizon = "exponential";
    r.choice("simulation.horizon", horizon, {"exponential", "discount"});
    c.sim.horizon = horizon == "discount" ? HorizonPolicy::discount_weight : HorizonPolicy::exponential_time;
    r.boolean("simulation.bridge", c.sim.bridge);
    r.number("simulation.x0", c.x0);
    r.integer("simulation.verify_paths", c.verify_paths);
    if (c.sim.n_paths == 0) r.fail("simulation.paths", "must be positive");
    if (c.sim.antithetic && c.sim.n_paths % 2) r.fail("simulation.paths", "must be even with antithetic pairs");
    if (!(c.sim.dt > 0.0)) r.fail("simulation.dt", "must be positive");
    if (!(c.x0 > 0.0 && c.x0 < c.upper)) r.fail("simulation.x0", "must lie inside the state space");
    if (c.verify_paths < 2) r.fail("simulation.verify_paths", "must be at least 2");
    if (c.sim.antithetic && c.verify_paths % 2) c.verify_paths += 1;

    r.text("output.dir", c.out_dir);
    r.number("output.figure_lo", c.figure_lo);
    r.number("output.figure_hi", c.figure_hi);
    if (!(c.figure_lo > 0.0 && c.figure_lo < c.figure_hi && c.figure_hi < c.upper)) {
        r.fail("output.figure_lo", "figure range must satisfy 0 < figure_lo < figure_hi < b");
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    return parse_config(in, path);
}

DiffusionSpec build_diffusion(const ExperimentConfig& cfg) {
    if (cfg.model_kind == "gbm") return DiffusionSpec::gbm(cfg.mu, cfg.sigma, cfg.rate, cfg.anchor);
    return DiffusionSpec::generic(Expression::parse(cfg.drift_expr), Expression::parse(cfg.volatility_expr), cfg.rate,
                                  cfg.upper, cfg.anchor);
}

PayoffSpec build_payoff(const ExperimentConfig& cfg) {
    PayoffSpec::Flow flow = cfg.flow_kind == "power" ? PayoffSpec::Flow(PowerFlow{cfg.eta})
                                                     : PayoffSpec::Flow(Expression::parse(cfg.flow_expr));
    PayoffSpec::Return ret = cfg.return_kind == "exp_blend"
                                 ? PayoffSpec::Return(ExpBlendReturn{cfg.K1, cfg.K2, cfg.nu})
                                 : PayoffSpec::Return(Expression::parse(cfg.alpha_expr));
    std::optional<Expression> lambda;
    if (cfg.return_kind == "expression" && !cfg.lambda_expr.empty()) lambda = Expression::parse(cfg.lambda_expr);
    return PayoffSpec(std::move(flow), std::move(ret), std::move(lambda));
}

FundamentalOptions build_fundamental_options(const ExperimentConfig& cfg) {
    FundamentalOptions o;
    o.mode = cfg.model_kind == "generic" ? SolutionMode::numeric : cfg.solution;
    o.kappa_perturbation = cfg.kappa_perturbation;
    return o;
}

ControlProblem build_problem(const ExperimentConfig& cfg) {
    const DiffusionSpec spec = build_diffusion(cfg);
    spec.validate();
    if (spec.is_gbm() && !(cfg.rate > cfg.mu)) {
        throw UnsupportedModelError("gbm with r <= mu has kappa <= 1; the reflection problem is not supported");
    }
    auto fs = make_fundamental_solutions(spec, build_fundamental_options(cfg));
    return ControlProblem(std::move(fs), build_payoff(cfg), cfg.solver, cfg.quadrature);
}

}  // namespace supctrl
