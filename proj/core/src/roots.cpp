#include "supctrl/roots.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "supctrl/errors.hpp"

namespace supctrl {

RootResult find_root(const std::function<double(double)>& f, double lo, double hi, double x_tol,
                     std::uintmax_t max_iter) {
    const double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return {lo, 0.0, 0};
    if (fhi == 0.0) return {hi, 0.0, 0};
    if (!(std::signbit(flo) != std::signbit(fhi)) || !std::isfinite(flo) || !std::isfinite(fhi)) {
        std::ostringstream os;
        os.precision(10);
        os << "no sign change on bracket [" << lo << ", " << hi << "]: f = (" << flo << ", " << fhi << ")";
        throw NumericError(os.str());
    }
    std::uintmax_t iters = max_iter;
    auto tol = [x_tol](double a, double b) { return std::fabs(b - a) <= x_tol; };
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
    if (iters >= max_iter) throw NumericError("root finder exhausted its iteration budget");
    const double fa = f(a);
    const double fb = f(b);
    RootResult r;
    r.iterations = iters;
    if (std::fabs(fa) <= std::fabs(fb)) {
        r.root = a;
        r.residual = fa;
    } else {
        r.root = b;
        r.residual = fb;
    }
    return r;
}

ExtremumResult maximize(const std::function<double(double)>& f, double lo, double hi,
                        std::uintmax_t max_iter) {
    std::uintmax_t iters = max_iter;
    auto neg = [&f](double x) { return -f(x); };
    const int bits = std::numeric_limits<double>::digits / 2;
    auto [x, v] = boost::math::tools::brent_find_minima(neg, lo, hi, bits, iters);
    return {x, -v};
}

ExtremumResult maximize_on_grid(const std::function<double(double)>& f, double lo, double hi,
                                int grid_points) {
    const double llo = std::log(lo);
    const double step = (std::log(hi) - llo) / (grid_points - 1);
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid_points; ++i) {
        const double v = f(std::exp(llo + step * i));
        if (v > best_v) {
            best_v = v;
            best = i;
        }
    }
    const double a = std::exp(llo + step * std::max(0, best - 1));
    const double b = std::exp(llo + step * std::min(grid_points - 1, best + 1));
    auto r = maximize(f, a, b);
    if (r.value < best_v) return {std::exp(llo + step * best), best_v};
    return r;
}

}  // namespace supctrl
