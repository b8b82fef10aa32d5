#include "supctrl/fundamental.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "supctrl/errors.hpp"

namespace supctrl {

double FundamentalSolutions::speed_density(double x) const {
    const double v = spec_.volatility(x);
    return 2.0 / (v * v * scale_density(x));
}

Jet FundamentalSolutions::killed_psi(double z, double x) const {
    if (z <= 0.0) return psi_hat0(x);
    const Jet pz = psi(z);
    const Jet fz = phi(z);
    return psi(x) - (pz.f / fz.f) * phi(x);
}

Jet FundamentalSolutions::psi_hat0(double x) const {
    if (boundaries_.lower == BoundaryType::regular) {
        const double ratio = zero_ratio();
        if (ratio != 0.0) return psi(x) - ratio * phi(x);
    }
    return psi(x);
}

GbmExponents gbm_exponents(double mu, double sigma, double rate) {
    const double s2 = sigma * sigma;
    const double half = 0.5 - mu / s2;
    const double root = std::sqrt(half * half + 2.0 * rate / s2);
    return {half + root, half - root};
}

Jet complete_harmonic(const DiffusionSpec& spec, double x, double u, double du) {
    const Jet mu = spec.drift_jet(x);
    const Jet sg = spec.volatility_jet(x);
    const double s2 = sg.f * sg.f;
    const double ds2 = 2.0 * sg.f * sg.d1;
    const double r = spec.rate();
    const double d2 = 2.0 * (r * u - mu.f * du) / s2;
    const double d3 = (2.0 * (r * du - mu.d1 * du - mu.f * d2) - ds2 * d2) / s2;
    return {u, du, d2, d3};
}

namespace {

class GbmSolutions final : public FundamentalSolutions {
public:
    GbmSolutions(DiffusionSpec spec, BoundaryClassification b, double kappa_perturbation)
        : FundamentalSolutions(std::move(spec), b, SolutionMode::closed_form) {
        const auto& c = spec_.gbm_coefficients();
        const auto e = gbm_exponents(c.mu, c.sigma, spec_.rate());
        kappa_ = e.kappa * (1.0 + kappa_perturbation);
        theta_ = e.theta;
        scale_exp_ = -2.0 * c.mu / (c.sigma * c.sigma);
        const double a = spec_.anchor();
        const Jet p = psi(a);
        const Jet f = phi(a);
        wronskian_ = (p.d1 * f.f - f.d1 * p.f) / scale_density(a);
    }

    Jet psi(double x) const override { return power(x, kappa_); }
    Jet phi(double x) const override { return power(x, theta_); }
    double scale_density(double x) const override { return std::pow(x / spec_.anchor(), scale_exp_); }
    double zero_ratio() const override { return 0.0; }

private:
    static Jet power(double x, double k) {
        const double v = std::pow(x, k);
        const double inv = 1.0 / x;
        return {v, k * v * inv, k * (k - 1.0) * v * inv * inv, k * (k - 1.0) * (k - 2.0) * v * inv * inv * inv};
    }

    double kappa_ = 0.0;
    double theta_ = 0.0;
    double scale_exp_ = 0.0;
};

using State = std::array<double, 3>;

// Quintic Hermite interpolation on a unit cell: values p, first derivatives
// m and second derivatives a (already scaled by the cell width).
struct Quintic {
    double value;
    double slope;  // per unit t
};

Quintic quintic(double t, double p0, double p1, double m0, double m1, double a0, double a1) {
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
    const double h1 = 10 * t3 - 15 * t4 + 6 * t5;
    const double g0 = t - 6 * t3 + 8 * t4 - 3 * t5;
    const double g1 = -4 * t3 + 7 * t4 - 3 * t5;
    const double k0 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
    const double k1 = 0.5 * (t3 - 2 * t4 + t5);
    const double dh0 = -30 * t2 + 60 * t3 - 30 * t4;
    const double dg0 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    const double dg1 = -12 * t2 + 28 * t3 - 15 * t4;
    const double dk0 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
    const double dk1 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
    return {p0 * h0 + p1 * h1 + m0 * g0 + m1 * g1 + a0 * k0 + a1 * k1,
            (p0 - p1) * dh0 + m0 * dg0 + m1 * dg1 + a0 * dk0 + a1 * dk1};
}

double cubic_hermite(double t, double p0, double p1, double m0, double m1) {
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * m1;
}

class NumericSolutions final : public FundamentalSolutions {
public:
    NumericSolutions(DiffusionSpec spec, BoundaryClassification b, const FundamentalOptions& o)
        : FundamentalSolutions(std::move(spec), b, SolutionMode::numeric) {
        const StateMap& map = spec_.map();
        double x_hi = o.x_hi;
        if (std::isfinite(spec_.upper())) x_hi = std::min(x_hi, spec_.upper() - 1e-9 * spec_.upper());
        s_lo_ = map.to_s(o.x_lo);
        const double s_hi = map.to_s(x_hi);
        if (!(s_hi > s_lo_)) throw DomainError("empty tabulation range for fundamental solutions");
        n_ = static_cast<int>(std::ceil((s_hi - s_lo_) * o.nodes_per_unit));
        h_ = (s_hi - s_lo_) / n_;
        const int nodes = n_ + 1;
        lpsi_.resize(nodes);
        ppsi_.resize(nodes);
        qpsi_.resize(nodes);
        lphi_.resize(nodes);
        pphi_.resize(nodes);
        qphi_.resize(nodes);
        ls_.resize(nodes);
        dls_.resize(nodes);

        integrate_up(o.ode_tol);
        integrate_down(o.ode_tol);

        // Normalise psi(anchor) = phi(anchor) = S'(anchor) = 1.
        const double sa = map.to_s(spec_.anchor());
        const auto shift_psi = eval_log(sa, lpsi_, ppsi_, qpsi_).value;
        const auto shift_phi = eval_log(sa, lphi_, pphi_, qphi_).value;
        const double shift_s = eval_scale(sa);
        for (int i = 0; i < nodes; ++i) {
            lpsi_[i] -= shift_psi;
            lphi_[i] -= shift_phi;
            ls_[i] -= shift_s;
        }
        const double a = spec_.anchor();
        const Jet p = psi(a);
        const Jet f = phi(a);
        wronskian_ = (p.d1 * f.f - f.d1 * p.f) / scale_density(a);
    }

    Jet psi(double x) const override { return harmonic(x, lpsi_, ppsi_, qpsi_); }
    Jet phi(double x) const override { return harmonic(x, lphi_, pphi_, qphi_); }
    double scale_density(double x) const override { return std::exp(eval_scale(spec_.map().to_s(x))); }

    double zero_ratio() const override {
        // psi(0+) and phi(0+) from the continuation below the table.
        const double psi0 = ppsi_.front() > 1e-10 ? 0.0 : std::exp(lpsi_.front());
        if (pphi_.front() < -1e-10) return 0.0;
        return psi0 / std::exp(lphi_.front());
    }

private:
    // Riccati form in s: l' = P, P' = (2/a)(r - c P) - P^2, with
    // a = sigma^2 / X'^2 and c = mu / X' - sigma^2 X'' / (2 X'^3).
    struct Coeffs {
        double a, c, dls;
    };

    Coeffs coeffs(double s) const {
        const StateMap& map = spec_.map();
        const double x = map.to_x(s);
        const double j1 = map.dx_ds(x);
        const double j2 = map.d2x_ds2(x);
        const double mu = spec_.drift(x);
        const double sg = spec_.volatility(x);
        const double s2 = sg * sg;
        return {s2 / (j1 * j1), mu / j1 - 0.5 * s2 * j2 / (j1 * j1 * j1), -2.0 * mu * j1 / s2};
    }

    double riccati(double s, double p) const {
        const Coeffs k = coeffs(s);
        return 2.0 / k.a * (spec_.rate() - k.c * p) - p * p;
    }

    // Frozen-coefficient exponents: roots of (a/2) p^2 + c p - r = 0.
    std::pair<double, double> local_exponents(double s) const {
        const Coeffs k = coeffs(s);
        const double disc = std::sqrt(k.c * k.c + 2.0 * k.a * spec_.rate());
        return {(-k.c + disc) / k.a, (-k.c - disc) / k.a};
    }

    void integrate_up(double tol) {
        namespace odeint = boost::numeric::odeint;
        State y{0.0, local_exponents(s_lo_).first, 0.0};
        auto rhs = [this](const State& u, State& du, double s) {
            du[0] = u[1];
            du[1] = riccati(s, u[1]);
            du[2] = coeffs(s).dls;
        };
        std::vector<double> times(n_ + 1);
        for (int i = 0; i <= n_; ++i) times[i] = s_lo_ + h_ * i;
        int idx = 0;
        auto observer = [&](const State& u, double s) {
            lpsi_[idx] = u[0];
            ppsi_[idx] = u[1];
            qpsi_[idx] = riccati(s, u[1]);
            ls_[idx] = u[2];
            dls_[idx] = coeffs(s).dls;
            ++idx;
        };
        auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
        odeint::integrate_times(stepper, rhs, y, times.begin(), times.end(), h_ * 0.1, observer);
        check_finite(lpsi_, "psi");
    }

    void integrate_down(double tol) {
        namespace odeint = boost::numeric::odeint;
        // Reversed coordinate w = -s so the integration runs forward.
        const double s_hi = s_lo_ + h_ * n_;
        State y{0.0, local_exponents(s_hi).second, 0.0};
        auto rhs = [this](const State& u, State& du, double w) {
            du[0] = -u[1];
            du[1] = -riccati(-w, u[1]);
            du[2] = 0.0;
        };
        std::vector<double> times(n_ + 1);
        for (int i = 0; i <= n_; ++i) times[i] = -(s_hi - h_ * i);
        int idx = n_;
        auto observer = [&](const State& u, double w) {
            lphi_[idx] = u[0];
            pphi_[idx] = u[1];
            qphi_[idx] = riccati(-w, u[1]);
            --idx;
        };
        auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
        odeint::integrate_times(stepper, rhs, y, times.begin(), times.end(), h_ * 0.1, observer);
        check_finite(lphi_, "phi");
    }

    static void check_finite(const std::vector<double>& v, const char* what) {
        for (double d : v) {
            if (!std::isfinite(d)) throw NumericError(std::string("ODE integration for ") + what + " diverged");
        }
    }

    struct LogEval {
        double value;  // log u
        double slope;  // d log u / ds
    };

    LogEval eval_log(double s, const std::vector<double>& l, const std::vector<double>& p,
                     const std::vector<double>& q) const {
        const double u = (s - s_lo_) / h_;
        if (u <= 0.0) return {l.front() + p.front() * (s - s_lo_), p.front()};
        if (u >= n_) return {l.back() + p.back() * (s - s_lo_ - h_ * n_), p.back()};
        const int i = std::min(static_cast<int>(u), n_ - 1);
        const double t = u - i;
        const auto r = quintic(t, l[i], l[i + 1], p[i] * h_, p[i + 1] * h_, q[i] * h_ * h_, q[i + 1] * h_ * h_);
        return {r.value, r.slope / h_};
    }

    double eval_scale(double s) const {
        const double u = (s - s_lo_) / h_;
        if (u <= 0.0) return ls_.front() + dls_.front() * (s - s_lo_);
        if (u >= n_) return ls_.back() + dls_.back() * (s - s_lo_ - h_ * n_);
        const int i = std::min(static_cast<int>(u), n_ - 1);
        const double t = u - i;
        return cubic_hermite(t, ls_[i], ls_[i + 1], dls_[i] * h_, dls_[i + 1] * h_);
    }

    Jet harmonic(double x, const std::vector<double>& l, const std::vector<double>& p,
                 const std::vector<double>& q) const {
        const StateMap& map = spec_.map();
        const auto e = eval_log(map.to_s(x), l, p, q);
        const double u = std::exp(e.value);
        return complete_harmonic(spec_, x, u, u * e.slope / map.dx_ds(x));
    }

    double s_lo_ = 0.0;
    double h_ = 0.0;
    int n_ = 0;
    std::vector<double> lpsi_, ppsi_, qpsi_, lphi_, pphi_, qphi_, ls_, dls_;
};

}  // namespace

FundamentalPtr make_fundamental_solutions(const DiffusionSpec& spec, const FundamentalOptions& opts) {
    const BoundaryClassification b = opts.boundaries ? *opts.boundaries : classify_boundaries(spec);
    if (opts.mode == SolutionMode::closed_form) {
        if (!spec.is_gbm()) throw UnsupportedModelError("closed-form fundamental solutions require a GBM model");
        return std::make_shared<GbmSolutions>(spec, b, opts.kappa_perturbation);
    }
    return std::make_shared<NumericSolutions>(spec, b, opts);
}

}  // namespace supctrl
