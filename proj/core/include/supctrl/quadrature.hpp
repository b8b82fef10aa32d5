#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace supctrl {

struct QuadratureSettings {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    unsigned max_depth = 12;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    double l1 = 0.0;

    bool converged(const QuadratureSettings& s) const {
        return std::isfinite(value) && error <= std::max(s.abs_tol, s.rel_tol * l1);
    }
};

using Integrand = std::function<double(double)>;

/// Adaptive Gauss-Kronrod (31 point) quadrature on [a, b]. Either limit may
/// be infinite.
QuadratureResult integrate(const Integrand& f, double a, double b, const QuadratureSettings& s = {});

/// Quadrature of f over [a, b] subset of (0, inf] after the substitution
/// x = e^t. `a` may be 0 and `b` may be +inf; both ends map to infinite
/// t-limits, which keeps integrable power singularities at 0 tame.
QuadratureResult integrate_log(const Integrand& f, double a, double b, const QuadratureSettings& s = {});

/// Outcome of a decade-by-decade convergence test of an improper integral.
enum class TailBehavior { finite, divergent, ambiguous };

/// Ratio test on the logarithms of successive decade contributions.
/// `log_contributions[k]` is log of the (positive) integral over the k-th
/// block moving toward the endpoint; -inf marks an empty block.
TailBehavior classify_tail(const double* log_contributions, std::size_t n);

std::string to_string(TailBehavior t);

}  // namespace supctrl
