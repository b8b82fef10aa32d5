#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>

#include "supctrl/control.hpp"
#include "supctrl/fundamental.hpp"
#include "supctrl/montecarlo.hpp"

namespace supctrl {

/// Experiment description read from flat `section.key = value` text.
///
///   model.kind        gbm | generic
///   model.mu, model.sigma                 (gbm)
///   model.drift, model.volatility         (generic, expressions in x)
///   model.rate, model.upper, model.anchor
///   model.solution    closed_form | numeric (gbm only; generic is numeric)
///   payoff.flow       power | expression;  payoff.eta, payoff.flow_expr
///   payoff.return     exp_blend | expression
///   payoff.K1, payoff.K2, payoff.nu, payoff.alpha_expr, payoff.lambda_expr
///   solver.root_tol, solver.grid_points, solver.scan_lo, solver.x_max,
///   solver.epsilon, solver.quad_abs, solver.quad_rel, solver.quad_depth,
///   solver.report_lo, solver.report_hi, solver.report_points
///   simulation.paths, simulation.dt, simulation.seed, simulation.antithetic,
///   simulation.horizon (exponential | discount), simulation.bridge,
///   simulation.x0, simulation.verify_paths
///   output.dir, output.figure_lo, output.figure_hi
///
/// '#' starts a comment. Expressions use + - * / ^, exp, log, sqrt and x.
struct ExperimentConfig {
    std::string model_kind = "gbm";
    double mu = 0.01;
    double sigma = 0.1;
    std::string drift_expr;
    std::string volatility_expr;
    double rate = 0.05;
    double upper = std::numeric_limits<double>::infinity();
    double anchor = 1.0;
    SolutionMode solution = SolutionMode::closed_form;

    std::string flow_kind = "power";
    double eta = 0.5;
    std::string flow_expr;
    std::string return_kind = "exp_blend";
    double K1 = 12.0;
    double K2 = 10.0;
    double nu = 0.1;
    std::string alpha_expr;
    std::string lambda_expr;

    ControlSettings solver;
    QuadratureSettings quadrature;
    double report_lo = 0.1;
    double report_hi = 10.0;
    int report_points = 25;

    SimConfig sim;
    double x0 = 1.0;
    std::size_t verify_paths = 20000;

    std::string out_dir = "out";
    double figure_lo = 0.01;
    double figure_hi = 4.0;

    /// Debug hook, set from the command line only.
    double kappa_perturbation = 0.0;

    std::string source = "<config>";
};

/// Throws ConfigError with a `source:line:` prefix on malformed lines,
/// unknown or duplicate keys and bad values.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

DiffusionSpec build_diffusion(const ExperimentConfig& cfg);
PayoffSpec build_payoff(const ExperimentConfig& cfg);
FundamentalOptions build_fundamental_options(const ExperimentConfig& cfg);

/// Diffusion, fundamentals and payoff assembled into a control problem.
/// Rejects GBM with r <= mu (kappa <= 1) as unsupported.
ControlProblem build_problem(const ExperimentConfig& cfg);

}  // namespace supctrl
