#include "supctrl/quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace supctrl {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

}  // namespace

QuadratureResult integrate(const Integrand& f, double a, double b, const QuadratureSettings& s) {
    QuadratureResult r;
    if (a == b) return r;
    r.value = GK::integrate(f, a, b, s.max_depth, s.rel_tol, &r.error, &r.l1);
    return r;
}

QuadratureResult integrate_log(const Integrand& f, double a, double b, const QuadratureSettings& s) {
    const double ta = a <= 0.0 ? -std::numeric_limits<double>::infinity() : std::log(a);
    const double tb = std::isinf(b) ? std::numeric_limits<double>::infinity() : std::log(b);
    auto g = [&f](double t) {
        const double x = std::exp(t);
        if (x == 0.0 || !std::isfinite(x)) return 0.0;
        const double v = f(x) * x;
        return std::isfinite(v) ? v : 0.0;
    };
    return integrate(g, ta, tb, s);
}

TailBehavior classify_tail(const double* log_contributions, std::size_t n) {
    if (n < 4) return TailBehavior::ambiguous;
    // Average log-ratio over the final three block pairs.
    double sum = 0.0;
    int count = 0;
    for (std::size_t k = n - 3; k < n; ++k) {
        const double prev = log_contributions[k - 1];
        const double cur = log_contributions[k];
        if (std::isinf(cur) && cur < 0) return TailBehavior::finite;
        if (std::isinf(prev) && prev < 0) return TailBehavior::divergent;
        if (!std::isfinite(cur)) return TailBehavior::divergent;
        sum += cur - prev;
        ++count;
    }
    const double mean_log_ratio = sum / count;
    if (mean_log_ratio < std::log(0.9)) return TailBehavior::finite;
    if (mean_log_ratio > std::log(0.98)) return TailBehavior::divergent;
    return TailBehavior::ambiguous;
}

std::string to_string(TailBehavior t) {
    switch (t) {
        case TailBehavior::finite: return "finite";
        case TailBehavior::divergent: return "divergent";
        case TailBehavior::ambiguous: return "ambiguous";
    }
    return "?";
}

}  // namespace supctrl
