#include "supctrl/diffusion.hpp"

#include <sstream>

#include "supctrl/errors.hpp"
#include "supctrl/quadrature.hpp"

namespace supctrl {

DiffusionSpec DiffusionSpec::gbm(double mu, double sigma, double rate, double anchor) {
    DiffusionSpec d;
    d.gbm_ = GbmCoefficients{mu, sigma};
    d.rate_ = rate;
    d.anchor_ = anchor;
    d.validate();
    return d;
}

DiffusionSpec DiffusionSpec::generic(Expression drift, Expression volatility, double rate, double upper,
                                     double anchor) {
    DiffusionSpec d;
    d.expr_ = ExpressionCoefficients{std::move(drift), std::move(volatility)};
    d.rate_ = rate;
    d.upper_ = upper;
    d.anchor_ = anchor;
    d.map_ = StateMap(upper);
    d.validate();
    return d;
}

DiffusionSpec DiffusionSpec::with_anchor(double anchor) const {
    DiffusionSpec d = *this;
    d.anchor_ = anchor;
    d.require_inside(anchor, "anchor");
    return d;
}

void DiffusionSpec::require_inside(double x, const char* what) const {
    if (!contains(x)) {
        std::ostringstream os;
        os << what << " " << x << " outside the state interval (0, " << upper_ << ")";
        throw DomainError(os.str());
    }
}

double DiffusionSpec::drift(double x) const {
    return visit_coefficients([x](const auto& c) { return c.drift(x); });
}

double DiffusionSpec::volatility(double x) const {
    return visit_coefficients([x](const auto& c) { return c.volatility(x); });
}

Jet DiffusionSpec::drift_jet(double x) const {
    if (gbm_) return {gbm_->mu * x, gbm_->mu, 0.0, 0.0};
    return expr_->drift_expr.eval(x);
}

Jet DiffusionSpec::volatility_jet(double x) const {
    if (gbm_) return {gbm_->sigma * x, gbm_->sigma, 0.0, 0.0};
    return expr_->volatility_expr.eval(x);
}

void DiffusionSpec::validate() const {
    if (!(rate_ > 0.0) || !std::isfinite(rate_)) throw DomainError("discount rate must be positive");
    if (!(upper_ > 0.0)) throw DomainError("upper boundary must be positive");
    if (gbm_ && !(gbm_->sigma > 0.0)) throw DomainError("GBM volatility must be positive");
    if (gbm_ && std::isfinite(upper_)) throw DomainError("GBM lives on (0, inf)");
    require_inside(anchor_, "anchor");

    // Probe points spread over the interval in the integration coordinate.
    for (int k = -40; k <= 40; ++k) {
        const double s = map_.to_s(anchor_) + 0.25 * k;
        const double x = map_.to_x(s);
        if (!contains(x)) continue;
        const double v = volatility(x);
        if (!(v > 0.0) || !std::isfinite(v)) {
            std::ostringstream os;
            os << "volatility must be positive on the interval; sigma(" << x << ") = " << v;
            throw DomainError(os.str());
        }
        const double eps = 0.05 * map_.dx_ds(x);
        auto g = [this](double y) { return (1.0 + std::fabs(drift(y))) / (volatility(y) * volatility(y)); };
        QuadratureSettings qs;
        qs.rel_tol = 1e-6;
        qs.max_depth = 8;
        const auto r = integrate(g, x - eps, x + eps, qs);
        if (!std::isfinite(r.value)) {
            std::ostringstream os;
            os << "(1 + |mu|) / sigma^2 not locally integrable near x = " << x;
            throw DomainError(os.str());
        }
    }
}

double DiffusionSpec::log_scale_density(double x) const {
    require_inside(x, "state");
    if (gbm_) return -2.0 * gbm_->mu / (gbm_->sigma * gbm_->sigma) * std::log(x / anchor_);
    auto integrand = [this](double t) {
        const double v = volatility(t);
        return 2.0 * drift(t) / (v * v);
    };
    QuadratureSettings qs;
    qs.rel_tol = 1e-12;
    qs.abs_tol = 1e-14;
    return -integrate(integrand, anchor_, x, qs).value;
}

double DiffusionSpec::speed_density(double x) const {
    const double v = volatility(x);
    return 2.0 / (v * v * scale_density(x));
}

std::string DiffusionSpec::describe() const {
    std::ostringstream os;
    os.precision(10);
    if (gbm_) {
        os << "gbm(mu=" << gbm_->mu << ", sigma=" << gbm_->sigma << ")";
    } else {
        os << "generic(drift=" << expr_->drift_expr.text() << ", volatility=" << expr_->volatility_expr.text()
           << ")";
    }
    os << " r=" << rate_ << " b=" << upper_;
    return os.str();
}

}  // namespace supctrl
