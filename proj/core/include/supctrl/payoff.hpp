#pragma once

#include <optional>
#include <variant>

#include "supctrl/expression.hpp"
#include "supctrl/jet.hpp"
#include "supctrl/resolvent.hpp"

namespace supctrl {

/// pi(x) = x^eta.
struct PowerFlow {
    double eta = 0.5;
};

/// alpha(x) = K1 e^{-nu x} + K2 (1 - e^{-nu x}).
struct ExpBlendReturn {
    double K1 = 12.0;
    double K2 = 10.0;
    double nu = 0.1;
};

/// Flow payoff pi and marginal control return alpha with the cumulative
/// return Lambda(x) = int_0^x alpha.
class PayoffSpec {
public:
    using Flow = std::variant<PowerFlow, Expression>;
    using Return = std::variant<ExpBlendReturn, Expression>;

    PayoffSpec(Flow pi, Return alpha, std::optional<Expression> lambda = std::nullopt);

    static PayoffSpec power_exp_blend(double eta, double K1, double K2, double nu) {
        return PayoffSpec(PowerFlow{eta}, ExpBlendReturn{K1, K2, nu});
    }

    Jet pi(double x) const;
    Jet alpha(double x) const;
    /// Analytic when the return is an exponential blend or a Lambda
    /// expression was supplied; quadrature of alpha otherwise.
    double cumulative(double x) const;
    bool analytic_cumulative() const noexcept;

    const Flow& flow() const noexcept { return pi_; }
    const Return& marginal_return() const noexcept { return alpha_; }
    const PowerFlow* power_flow() const noexcept { return std::get_if<PowerFlow>(&pi_); }
    const ExpBlendReturn* exp_blend() const noexcept { return std::get_if<ExpBlendReturn>(&alpha_); }

    std::string describe() const;

private:
    Flow pi_;
    Return alpha_;
    std::optional<Expression> lambda_;
};

/// x -> (R_r pi)(x) with three derivatives. Closed form M x^eta for a power
/// flow under GBM with closed-form fundamentals, Green quadrature otherwise.
class FlowValue {
public:
    FlowValue(ResolventKernel kernel, const PayoffSpec& payoff);

    Jet operator()(double x) const;
    bool analytic() const noexcept { return multiplier_.has_value(); }
    /// M of the closed form; only meaningful when analytic().
    double multiplier() const { return multiplier_.value_or(0.0); }

private:
    ResolventKernel kernel_;
    PayoffSpec payoff_;
    std::optional<double> multiplier_;
    double eta_ = 0.0;
};

/// M = 1 / (r - mu eta - sigma^2 eta (eta - 1) / 2) for pi = x^eta under
/// GBM. Throws IntegrabilityError when eta lies outside (theta, kappa).
double gbm_power_multiplier(double mu, double sigma, double rate, double eta);

}  // namespace supctrl
