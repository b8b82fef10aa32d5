#pragma once

#include <functional>
#include <string>

#include "supctrl/fundamental.hpp"
#include "supctrl/jet.hpp"
#include "supctrl/quadrature.hpp"

namespace supctrl {

using JetFunction = std::function<Jet(double)>;

/// Integral of f over (a, b) inside the state interval, computed in the
/// StateMap coordinate. `a` may be 0 and `b` may equal the upper boundary;
/// those ends become infinite limits.
QuadratureResult integrate_state(const DiffusionSpec& spec, const Integrand& f, double a, double b,
                                 const QuadratureSettings& s = {});

/// Green kernel of the resolvent R_r built from psi_hat_0 and phi.
class ResolventKernel {
public:
    explicit ResolventKernel(FundamentalPtr fs, QuadratureSettings qs = {});

    const FundamentalSolutions& fundamentals() const noexcept { return *fs_; }
    const FundamentalPtr& fundamentals_ptr() const noexcept { return fs_; }
    const DiffusionSpec& spec() const noexcept { return fs_->spec(); }
    const QuadratureSettings& settings() const noexcept { return qs_; }

    /// G(x, y) = B^-1 phi(x v y) psi_hat_0(x ^ y); the resolvent density
    /// with respect to the speed measure.
    double green(double x, double y) const;

    /// R_r f at x with first and second derivatives from differentiating
    /// the Green representation; d3 is NaN.
    Jet evaluate(const Integrand& f, double x) const;

    /// As evaluate, with the third derivative completed from the ODE
    /// G_r u = -f, which needs f'.
    Jet evaluate(const JetFunction& f, double x) const;

    /// Decade-by-decade estimate of both Green integrals of |f| around x.
    /// Throws IntegrabilityError naming the divergent side.
    void check_integrability(const Integrand& f, double x) const;

private:
    struct Parts {
        double lower;  // int_0^x psi_hat_0 f m'
        double upper;  // int_x^b phi f m'
    };
    Parts green_integrals(const Integrand& f, double x) const;

    FundamentalPtr fs_;
    QuadratureSettings qs_;
};

/// R_r f at x after an integrability pre-check of f.
double resolvent(const ResolventKernel& kernel, const Integrand& f, double x);

/// (1/2) sigma^2 g'' + mu g' - r g from an analytic jet of g at x.
double generator_apply(const DiffusionSpec& spec, const Jet& g, double x);

/// Same with g'' and g' from second-order central differences,
/// h = eps^(1/3) max(1, |x|).
double generator_apply(const DiffusionSpec& spec, const Integrand& g, double x);

/// (L_u g)(x) = [g(x) u'(x) - g'(x) u(x)] / S'(x).
double l_functional(const FundamentalSolutions& fs, const Jet& u, const Jet& g, double x);

}  // namespace supctrl
