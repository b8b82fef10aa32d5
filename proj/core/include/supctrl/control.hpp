#pragma once

#include <vector>

#include "supctrl/grid.hpp"
#include "supctrl/payoff.hpp"
#include "supctrl/resolvent.hpp"

namespace supctrl {

struct ControlSettings {
    double root_tol = 1e-10;
    int grid_points = 2000;  // log-spaced scan grid on [scan_lo, x_max]
    double scan_lo = 1e-4;
    double x_max = 500.0;
    double epsilon = 1e-6;  // eventual negativity: (G_r A)(x_max) < -epsilon
};

/// Location of the optimal threshold: x_hat = argmax G_r A, x0 the first
/// zero of G_r A above x_hat.
struct ThresholdBracket {
    double x_hat = 0.0;
    double x_zero = 0.0;
};

/// The reflection problem for a diffusion and a payoff: option value A,
/// reflection values H_y, the representing function f and the optimality
/// conditions. Cheap to copy; evaluation is const and thread-safe.
class ControlProblem {
public:
    ControlProblem(FundamentalPtr fs, PayoffSpec payoff, ControlSettings cs = {}, QuadratureSettings qs = {});

    const FundamentalSolutions& fundamentals() const noexcept { return kernel_.fundamentals(); }
    const DiffusionSpec& spec() const noexcept { return kernel_.spec(); }
    const ResolventKernel& kernel() const noexcept { return kernel_; }
    const PayoffSpec& payoff() const noexcept { return payoff_; }
    const FlowValue& flow_value() const noexcept { return flow_; }
    const ControlSettings& settings() const noexcept { return cs_; }

    /// A = Lambda - R_r pi with three derivatives.
    Jet option_value(double x) const;
    /// (G_r A)(x) = sigma^2 alpha' / 2 + mu alpha - r Lambda + pi.
    double generator_A(double x) const;
    /// d/dx (G_r A).
    double generator_A_derivative(double x) const;

    /// A'(y) / psi_hat_0'(y).
    double marginal_ratio(double y) const;
    /// Phi(x) = A(x) - A'(x) psi_hat_0(x) / psi_hat_0'(x); f(x, y) = Phi(x) - Phi(y).
    double phi_transform(double x) const;

    /// H_y(x) with derivatives in x.
    Jet reflection_value(double y, double x) const;
    /// F_y = R_r pi + H_y.
    Jet total_value(double y, double x) const;
    double representing_f(double y, double x) const { return phi_transform(x) - phi_transform(y); }
    /// d/dx f(x, y) through the integral form of d/dx (A'/psi_hat_0').
    double representing_f_derivative(double x) const;

    /// int_0^y psi_hat_0 (G_r A) m'.
    double foc_integral(double y) const;
    /// r int_0^y psi_hat_0 (G_r A) m' - (G_r A)(y) psi_hat_0'(y) / S'(y).
    double foc(double y) const;

    /// f~(x) = A'(x) - A''(x) psi_hat_0'(x) / psi_hat_0''(x).
    double f_tilde(double x) const;

    /// Assumptions on pi, alpha and Lambda; pass/fail items, no throw.
    std::vector<CheckItem> assumption_checks() const;
    /// Interior maximum and end-point sign conditions on G_r A; fills the bracket when they hold.
    std::vector<CheckItem> condition_checks(ThresholdBracket* bracket = nullptr) const;

    /// Throws AssumptionViolation naming the first failing item.
    void require_conditions() const;

    /// Grid used by scans.
    std::vector<double> scan_grid() const { return log_grid(cs_.scan_lo, cs_.x_max, cs_.grid_points); }

private:
    ResolventKernel kernel_;
    PayoffSpec payoff_;
    FlowValue flow_;
    ControlSettings cs_;
};

struct SmoothFit {
    double left = 0.0;   // V''(y*-) extrapolated
    double right = 0.0;  // V''(y*+) extrapolated
    double relative_gap = 0.0;
};

struct SignScan {
    double min_f = 0.0;
    double argmin = 0.0;
    bool region_nonneg = false;
};

/// Solved threshold and the value functions built on it.
class ControlSolution {
public:
    ControlSolution(ControlProblem problem, ThresholdBracket bracket, double y_star, double foc_residual);

    const ControlProblem& problem() const noexcept { return problem_; }
    double y_star() const noexcept { return y_star_; }
    const ThresholdBracket& bracket() const noexcept { return bracket_; }
    double foc_residual() const noexcept { return foc_residual_; }

    Jet H(double x) const { return problem_.reflection_value(y_star_, x); }
    /// V = F_{y*}.
    Jet V(double x) const { return problem_.total_value(y_star_, x); }
    double f(double x) const { return problem_.representing_f(y_star_, x); }

    /// Richardson-extrapolated one-sided second differences of V at y*.
    SmoothFit smooth_fit() const;

    /// f^(x) = (G_r A)(y*)/r - S'(x v y*)/psi_hat_0'(x v y*) int_0^{x v y*} psi_hat_0 (G_r A) m'.
    double rep2_value(double x) const;

private:
    ControlProblem problem_;
    ThresholdBracket bracket_;
    double y_star_;
    double foc_residual_;
};

/// Verifies the conditions, brackets y* in (x_hat, x0) and solves the FOC.
ControlSolution solve_threshold(const ControlProblem& problem);

/// argmax of A'/psi_hat_0' by direct maximisation on the bracket.
double argmax_marginal_ratio(const ControlProblem& problem, const ThresholdBracket& bracket);

/// inf{y : f~(y) >= 0} by grid scan and bracketed refinement; requires
/// psi_hat_0 convex on the scan grid (AssumptionViolation otherwise).
double prop_threshold(const ControlProblem& problem);

/// Scan of f(., y) on `grid`; region_nonneg when f >= -tol everywhere.
SignScan sign_property_check(const ControlProblem& problem, double y, const std::vector<double>& grid,
                             double tol = 1e-8);

struct SupremumIdentity {
    double lhs = 0.0;  // H_y(x)
    double rhs = 0.0;  // E_x[f(M_T) 1{M_T >= y}]
    double abs_diff = 0.0;
};

/// Both sides of H_y(x) = E_x[f(M_T) 1{M_T >= y}]; the right side integrates
/// f against the law P_x[M_T >= z] = psi_hat_0(x) / psi_hat_0(z), z >= x.
SupremumIdentity supremum_identity_check(const ControlProblem& problem, double y, double x,
                                         const QuadratureSettings& qs = {1e-14, 1e-10, 10});

/// Closed-form pieces for the GBM / power flow / exponential-blend instance.
namespace gbm_closed_form {

struct Constants {
    double kappa, theta, M;
};

Constants constants(double mu, double sigma, double rate, double eta);
/// Bracket ((M eta (kappa-eta) / ((kappa-1) K1))^{1/(1-eta)}, same with K2).
std::pair<double, double> bracket(const Constants& c, double eta, double K1, double K2);
/// M eta (kappa - eta) y^{eta-1} - (K1-K2) e^{-nu y}(kappa - 1 + nu y) - (kappa-1) K2.
double scalar_foc(const Constants& c, double eta, double K1, double K2, double nu, double y);

}  // namespace gbm_closed_form

}  // namespace supctrl
