#pragma once

#include <functional>
#include <vector>

#include "supctrl/control.hpp"

namespace supctrl {

/// X^ with drift mu + sigma sigma', volatility sigma, killed at rate
/// rho = r - mu'. Its killed fundamental solutions are psi' and -phi'.
class HatDiffusionSpec {
public:
    explicit HatDiffusionSpec(FundamentalPtr fs);

    const DiffusionSpec& base() const noexcept { return fs_->spec(); }
    const FundamentalSolutions& fundamentals() const noexcept { return *fs_; }

    double drift(double x) const;
    double volatility(double x) const { return base().volatility(x); }
    double kill_rate(double x) const;
    /// S^' = S' / sigma^2.
    double scale_density(double x) const;
    /// m^' = 2 / S'.
    double speed_density(double x) const;

    /// rho > 0 on the grid (the kill rate must stay positive).
    CheckItem kill_rate_check(const std::vector<double>& grid) const;

private:
    FundamentalPtr fs_;
};

/// Marginal value H'_{y*}, the stopping representing function f~ and the
/// identities tying them to the control solution. Requires 0 unattainable.
class StoppingSolution {
public:
    explicit StoppingSolution(ControlSolution control);

    const ControlSolution& control() const noexcept { return control_; }
    const HatDiffusionSpec& hat() const noexcept { return hat_; }
    double y_star() const noexcept { return control_.y_star(); }

    /// A'(x) on [y*, b), A'(y*) psi'(x) / psi'(y*) below.
    double marginal_value(double x) const;
    /// sup_{y >= x} {A'(y) / psi'(y)} psi'(x) by scalar maximisation.
    double marginal_value_sup(double x) const;

    double f_tilde(double x) const { return control_.problem().f_tilde(x); }
    double f_tilde_derivative(double x) const;
    /// -int_0^x psi' (G_r A)' m^' / int_0^x rho psi' m^'.
    double f_tilde_quotient(double x) const;

    /// psi'(x) int_{x v y*}^b f~(z) psi''(z) / psi'(z)^2 dz.
    double rep4_value(double x) const;

private:
    ControlSolution control_;
    HatDiffusionSpec hat_;
};

struct LinkageResidual {
    double f_prime = 0.0;  // integral route
    double rhs = 0.0;      // f~ psi'' psi / psi'^2
    double residual = 0.0;
    double relative = 0.0;  // |residual| / (1 + |f'|)
};

/// f'(x) - f~(x) psi''(x) psi(x) / psi'(x)^2 for x >= y*.
LinkageResidual linkage_check(const StoppingSolution& s, double x);

/// 1/2 sigma^2 v'' + (mu + sigma sigma') v' - rho v for v = psi' (which = +1)
/// or v = -phi' (which = -1).
double ode2_residual(const HatDiffusionSpec& hat, int which, double x);

/// Endpoint divergence of phi' at 0 and psi' at b over the last grid decade,
/// convexity of psi and phi, and rho > 0.
std::vector<CheckItem> stopping_value_bounds_check(const HatDiffusionSpec& hat, double lo, double hi,
                                                   int points = 400);

/// E_x[e^{-int rho} g(X^_tau)] for the first exit tau of X^ from (z, y).
double two_sided_exit_value(const FundamentalSolutions& fs, const std::function<double(double)>& g, double z,
                            double y, double x);

enum class FlowMonotonicity { increasing, decreasing };

struct GittinsSettings {
    int left_points = 40;
    int right_points = 40;
    double left_ratio = 1e-4;   // z in (left_ratio x, x)
    double right_ratio = 50.0;  // y in (x, min(b, right_ratio x))
    double min_relative_width = 1e-3;  // both x - z and y - x at least this times x
    int refinements = 12;  // halvings of the lattice spacing around the incumbent
};

struct GittinsResult {
    double value = 0.0;  // gamma^ (increasing) or gamma_check (decreasing)
    double z = 0.0;      // optimal interval
    double y = 0.0;
    double min_denominator = 0.0;
    bool denominator_positive = true;
    int intervals = 0;
};

/// Ratio [alpha(x) - E e^{-int rho} alpha] / [(R_r pi)'(x) - E e^{-int rho} (R_r pi)'] minimised
/// (increasing flow) or maximised (decreasing flow) over interval exit times.
GittinsResult gittins_signal(const ControlProblem& problem, double x, FlowMonotonicity dir,
                             const GittinsSettings& gs = {});

struct GittinsCrossing {
    bool found = false;
    double lo = 0.0;  // cell [lo, hi] where gamma - 1 changes sign
    double hi = 0.0;
    double value_lo = 0.0;
    double value_hi = 0.0;
};

/// Scans gamma - 1 on the lattice x_k = center (1 + (k + 1/2) cell),
/// |x_k / center - 1| <= half_width, and returns the first sign change.
GittinsCrossing locate_gittins_crossing(const ControlProblem& problem, double center, FlowMonotonicity dir,
                                        double cell = 0.0025, double half_width = 0.05,
                                        const GittinsSettings& gs = {});

}  // namespace supctrl
