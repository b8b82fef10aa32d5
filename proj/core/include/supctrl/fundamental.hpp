#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "supctrl/boundary.hpp"
#include "supctrl/diffusion.hpp"
#include "supctrl/jet.hpp"

namespace supctrl {

enum class SolutionMode {
    closed_form,  ///< psi = x^kappa, phi = x^theta; GBM only
    numeric,      ///< ODE integration in the StateMap coordinate
};

struct FundamentalOptions {
    SolutionMode mode = SolutionMode::closed_form;
    /// Tabulation range for the numeric mode; outside it the solutions are
    /// continued with their local exponent.
    double x_lo = 1e-6;
    double x_hi = 1e3;
    double nodes_per_unit = 200.0;  // in the StateMap coordinate
    double ode_tol = 1e-13;
    /// Debug hook: multiplies kappa by (1 + perturbation) in closed-form
    /// mode. Breaks r-harmonicity on purpose.
    double kappa_perturbation = 0.0;
    std::optional<BoundaryClassification> boundaries;
};

/// Increasing (psi) and decreasing (phi) positive solutions of
/// (1/2) sigma^2 u'' + mu u' - r u = 0, plus the scale and speed densities
/// consistent with them. Jets carry u, u', u'', u'''.
///
/// Immutable after construction.
class FundamentalSolutions {
public:
    virtual ~FundamentalSolutions() = default;

    virtual Jet psi(double x) const = 0;
    virtual Jet phi(double x) const = 0;
    virtual double scale_density(double x) const = 0;

    /// B = (psi' phi - phi' psi) / S', evaluated at the anchor.
    double wronskian() const noexcept { return wronskian_; }
    double speed_density(double x) const;

    /// psi_z(x) = psi(x) - psi(z)/phi(z) phi(x), killed at z > 0.
    Jet killed_psi(double z, double x) const;
    /// Limit z -> 0 of killed_psi: subtracts psi(0)/phi(0) phi when 0 is
    /// regular, otherwise equals psi.
    Jet psi_hat0(double x) const;

    const DiffusionSpec& spec() const noexcept { return spec_; }
    const BoundaryClassification& boundaries() const noexcept { return boundaries_; }
    SolutionMode mode() const noexcept { return mode_; }

    /// psi(0+) / phi(0+) used by psi_hat0 for a regular lower boundary.
    virtual double zero_ratio() const = 0;

protected:
    FundamentalSolutions(DiffusionSpec spec, BoundaryClassification b, SolutionMode mode)
        : spec_(std::move(spec)), boundaries_(b), mode_(mode) {}

    DiffusionSpec spec_;
    BoundaryClassification boundaries_;
    SolutionMode mode_;
    double wronskian_ = 0.0;
};

using FundamentalPtr = std::shared_ptr<const FundamentalSolutions>;

/// Builds fundamental solutions; classifies the boundaries first unless
/// the options already carry a classification.
FundamentalPtr make_fundamental_solutions(const DiffusionSpec& spec, const FundamentalOptions& opts = {});

/// Roots of the GBM indicial equation (1/2) s^2 k (k - 1) + m k - r = 0.
struct GbmExponents {
    double kappa;
    double theta;
};
GbmExponents gbm_exponents(double mu, double sigma, double rate);

/// Completes (u, u') of an r-harmonic function to a jet using the ODE and
/// its derivative: u'' = 2 (r u - mu u') / sigma^2 and
/// u''' = [2 (r u' - mu' u' - mu u'') - (sigma^2)' u''] / sigma^2.
Jet complete_harmonic(const DiffusionSpec& spec, double x, double u, double du);

}  // namespace supctrl
