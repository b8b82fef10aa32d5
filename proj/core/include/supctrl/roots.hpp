#pragma once

#include <cstdint>
#include <functional>

namespace supctrl {

struct RootResult {
    double root = 0.0;
    double residual = 0.0;
    std::uintmax_t iterations = 0;
};

/// Bracketed root of f on [lo, hi] (TOMS 748). Requires a sign change;
/// throws NumericError otherwise. Terminates when the bracket is narrower
/// than `x_tol`.
RootResult find_root(const std::function<double(double)>& f, double lo, double hi, double x_tol,
                     std::uintmax_t max_iter = 200);

struct ExtremumResult {
    double argmax = 0.0;
    double value = 0.0;
};

/// Brent maximisation of f on [lo, hi]; the argmax is resolved to about
/// sqrt(epsilon) relative, the limit for a smooth maximum.
ExtremumResult maximize(const std::function<double(double)>& f, double lo, double hi,
                        std::uintmax_t max_iter = 500);

/// Grid search on a log-spaced grid followed by Brent refinement in the
/// neighbouring cells. Suited to functions with a single interior maximum.
ExtremumResult maximize_on_grid(const std::function<double(double)>& f, double lo, double hi,
                                int grid_points);

}  // namespace supctrl
