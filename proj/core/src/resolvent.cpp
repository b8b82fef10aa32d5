#include "supctrl/resolvent.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "supctrl/errors.hpp"

namespace supctrl {

QuadratureResult integrate_state(const DiffusionSpec& spec, const Integrand& f, double a, double b,
                                 const QuadratureSettings& s) {
    const StateMap& map = spec.map();
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double sa = a <= 0.0 ? -inf : map.to_s(a);
    const double sb = b >= spec.upper() ? inf : map.to_s(b);
    auto g = [&](double t) {
        const double x = map.to_x(t);
        if (!spec.contains(x)) return 0.0;
        const double v = f(x) * map.dx_ds(x);
        return std::isfinite(v) ? v : 0.0;
    };
    return integrate(g, sa, sb, s);
}

ResolventKernel::ResolventKernel(FundamentalPtr fs, QuadratureSettings qs) : fs_(std::move(fs)), qs_(qs) {}

double ResolventKernel::green(double x, double y) const {
    const double lo = std::min(x, y);
    const double hi = std::max(x, y);
    return fs_->phi(hi).f * fs_->psi_hat0(lo).f / fs_->wronskian();
}

ResolventKernel::Parts ResolventKernel::green_integrals(const Integrand& f, double x) const {
    const auto& fs = *fs_;
    auto lower = [&](double y) { return fs.psi_hat0(y).f * f(y) * fs.speed_density(y); };
    auto upper = [&](double y) { return fs.phi(y).f * f(y) * fs.speed_density(y); };
    const auto& spec = fs.spec();
    const double b = spec.upper();
    return {integrate_state(spec, lower, 0.0, x, qs_).value, integrate_state(spec, upper, x, b, qs_).value};
}

Jet ResolventKernel::evaluate(const Integrand& f, double x) const {
    const auto& fs = *fs_;
    const Parts p = green_integrals(f, x);
    const double inv_b = 1.0 / fs.wronskian();
    const Jet ph = fs.phi(x);
    const Jet ps = fs.psi_hat0(x);
    const double jump = (ph.d1 * ps.f - ps.d1 * ph.f) * f(x) * fs.speed_density(x);
    return {inv_b * (ph.f * p.lower + ps.f * p.upper), inv_b * (ph.d1 * p.lower + ps.d1 * p.upper),
            inv_b * (ph.d2 * p.lower + ps.d2 * p.upper + jump), std::numeric_limits<double>::quiet_NaN()};
}

Jet ResolventKernel::evaluate(const JetFunction& f, double x) const {
    Jet u = evaluate([&f](double y) { return f(y).f; }, x);
    const auto& spec = fs_->spec();
    const Jet mu = spec.drift_jet(x);
    const Jet sg = spec.volatility_jet(x);
    const double s2 = sg.f * sg.f;
    const double r = spec.rate();
    u.d3 = (2.0 * (r * u.d1 - mu.d1 * u.d1 - mu.f * u.d2 - f(x).d1) - 2.0 * sg.f * sg.d1 * u.d2) / s2;
    return u;
}

void ResolventKernel::check_integrability(const Integrand& f, double x) const {
    const auto& fs = *fs_;
    const auto& spec = fs.spec();
    const StateMap& map = spec.map();
    constexpr int kBlocks = 10;
    const double width = std::log(10.0);
    const double s0 = map.to_s(x);
    QuadratureSettings qs;
    qs.rel_tol = 1e-6;
    qs.max_depth = 8;

    auto side = [&](int dir, const char* name) {
        std::vector<double> logs(kBlocks);
        for (int k = 0; k < kBlocks; ++k) {
            const double a = s0 + dir * width * k;
            const double b = s0 + dir * width * (k + 1);
            auto g = [&](double s) {
                const double y = map.to_x(s);
                if (!spec.contains(y)) return 0.0;
                const double kernel = dir < 0 ? fs.psi_hat0(y).f : fs.phi(y).f;
                return std::fabs(kernel * f(y)) * fs.speed_density(y) * map.dx_ds(y);
            };
            const auto r = integrate(g, std::min(a, b), std::max(a, b), qs);
            if (!std::isfinite(r.value)) {
                throw IntegrabilityError(name, "non-finite Green integral block");
            }
            logs[k] = r.value > 0.0 ? std::log(r.value) : -std::numeric_limits<double>::infinity();
        }
        const auto t = classify_tail(logs.data(), logs.size());
        if (t != TailBehavior::finite) {
            std::ostringstream os;
            os << "Green integral toward the " << name << " boundary is " << to_string(t);
            throw IntegrabilityError(name, os.str());
        }
    };
    side(-1, "lower");
    side(+1, "upper");
}

double resolvent(const ResolventKernel& kernel, const Integrand& f, double x) {
    kernel.check_integrability(f, x);
    return kernel.evaluate(f, x).f;
}

double generator_apply(const DiffusionSpec& spec, const Jet& g, double x) {
    const double v = spec.volatility(x);
    return 0.5 * v * v * g.d2 + spec.drift(x) * g.d1 - spec.rate() * g.f;
}

double generator_apply(const DiffusionSpec& spec, const Integrand& g, double x) {
    const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::fabs(x));
    const double gp = g(x + h);
    const double g0 = g(x);
    const double gm = g(x - h);
    const Jet j{g0, (gp - gm) / (2.0 * h), (gp - 2.0 * g0 + gm) / (h * h), 0.0};
    return generator_apply(spec, j, x);
}

double l_functional(const FundamentalSolutions& fs, const Jet& u, const Jet& g, double x) {
    return (g.f * u.d1 - g.d1 * u.f) / fs.scale_density(x);
}

}  // namespace supctrl
