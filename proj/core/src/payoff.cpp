#include "supctrl/payoff.hpp"

#include <cmath>
#include <sstream>

#include "supctrl/errors.hpp"
#include "supctrl/fundamental.hpp"

namespace supctrl {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Jet power_jet(double x, double p) {
    const double v = std::pow(x, p);
    const double inv = 1.0 / x;
    return {v, p * v * inv, p * (p - 1.0) * v * inv * inv, p * (p - 1.0) * (p - 2.0) * v * inv * inv * inv};
}

}  // namespace

PayoffSpec::PayoffSpec(Flow pi, Return alpha, std::optional<Expression> lambda)
    : pi_(std::move(pi)), alpha_(std::move(alpha)), lambda_(std::move(lambda)) {
    if (const auto* b = exp_blend(); b && !(b->nu > 0.0)) throw DomainError("exp_blend requires nu > 0");
}

Jet PayoffSpec::pi(double x) const {
    return std::visit(Overloaded{[x](const PowerFlow& p) { return power_jet(x, p.eta); },
                                 [x](const Expression& e) { return e.eval(x); }},
                      pi_);
}

Jet PayoffSpec::alpha(double x) const {
    return std::visit(Overloaded{[x](const ExpBlendReturn& a) {
                                     const double e = std::exp(-a.nu * x);
                                     const double d = (a.K1 - a.K2) * e;
                                     return Jet{a.K2 + d, -a.nu * d, a.nu * a.nu * d, -a.nu * a.nu * a.nu * d};
                                 },
                                 [x](const Expression& e) { return e.eval(x); }},
                      alpha_);
}

bool PayoffSpec::analytic_cumulative() const noexcept { return lambda_.has_value() || exp_blend() != nullptr; }

double PayoffSpec::cumulative(double x) const {
    if (lambda_) return lambda_->value(x);
    if (const auto* a = exp_blend()) return a->K2 * x + (a->K1 - a->K2) * -std::expm1(-a->nu * x) / a->nu;
    QuadratureSettings qs;
    qs.rel_tol = 1e-13;
    qs.max_depth = 15;
    return integrate([this](double z) { return alpha(z).f; }, 0.0, x, qs).value;
}

std::string PayoffSpec::describe() const {
    std::ostringstream os;
    os.precision(12);
    std::visit(Overloaded{[&](const PowerFlow& p) { os << "pi=x^" << p.eta; },
                          [&](const Expression& e) { os << "pi=" << e.text(); }},
               pi_);
    std::visit(Overloaded{[&](const ExpBlendReturn& a) {
                              os << " alpha=exp_blend(K1=" << a.K1 << ", K2=" << a.K2 << ", nu=" << a.nu << ")";
                          },
                          [&](const Expression& e) { os << " alpha=" << e.text(); }},
               alpha_);
    if (lambda_) os << " Lambda=" << lambda_->text();
    return os.str();
}

double gbm_power_multiplier(double mu, double sigma, double rate, double eta) {
    const auto e = gbm_exponents(mu, sigma, rate);
    if (eta >= e.kappa) {
        throw IntegrabilityError("upper", "x^eta grows at least as fast as psi (eta >= kappa)");
    }
    if (eta <= e.theta) {
        throw IntegrabilityError("lower", "x^eta blows up at least as fast as phi at 0 (eta <= theta)");
    }
    return 1.0 / (rate - mu * eta - 0.5 * sigma * sigma * eta * (eta - 1.0));
}

FlowValue::FlowValue(ResolventKernel kernel, const PayoffSpec& payoff)
    : kernel_(std::move(kernel)), payoff_(payoff) {
    const auto& fs = kernel_.fundamentals();
    const auto& spec = fs.spec();
    const auto* p = payoff_.power_flow();
    if (p && spec.is_gbm() && fs.mode() == SolutionMode::closed_form) {
        const auto& c = spec.gbm_coefficients();
        multiplier_ = gbm_power_multiplier(c.mu, c.sigma, spec.rate(), p->eta);
        eta_ = p->eta;
        return;
    }
    kernel_.check_integrability([this](double x) { return payoff_.pi(x).f; }, spec.anchor());
}

Jet FlowValue::operator()(double x) const {
    if (multiplier_) return *multiplier_ * power_jet(x, eta_);
    return kernel_.evaluate([this](double y) { return payoff_.pi(y); }, x);
}

}  // namespace supctrl
