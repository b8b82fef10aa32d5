#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "supctrl/expression.hpp"
#include "supctrl/jet.hpp"

namespace supctrl {

/// Coordinate on the state interval used for integration and tabulation.
/// For b = inf the map is s = ln x; for finite b it is s = ln(x / (b - x)).
/// Both send the endpoints to -inf and +inf.
class StateMap {
public:
    explicit StateMap(double upper = std::numeric_limits<double>::infinity()) : b_(upper) {}

    bool logit() const noexcept { return std::isfinite(b_); }

    double to_s(double x) const { return logit() ? std::log(x / (b_ - x)) : std::log(x); }

    double to_x(double s) const {
        if (!logit()) return std::exp(s);
        return s > 0 ? b_ / (1.0 + std::exp(-s)) : b_ * std::exp(s) / (1.0 + std::exp(s));
    }

    /// dx/ds evaluated at x = to_x(s).
    double dx_ds(double x) const { return logit() ? x * (b_ - x) / b_ : x; }

    /// d^2x/ds^2 evaluated at x = to_x(s).
    double d2x_ds2(double x) const { return logit() ? dx_ds(x) * (b_ - 2.0 * x) / b_ : x; }

private:
    double b_;
};

/// Coefficients of geometric Brownian motion: drift mu*x, volatility sigma*x.
struct GbmCoefficients {
    double mu = 0.0;
    double sigma = 0.0;

    double drift(double x) const noexcept { return mu * x; }
    double volatility(double x) const noexcept { return sigma * x; }
    double drift_derivative(double) const noexcept { return mu; }
    double volatility_derivative(double) const noexcept { return sigma; }
};

/// Coefficients given as parsed expressions in x.
struct ExpressionCoefficients {
    Expression drift_expr;
    Expression volatility_expr;

    double drift(double x) const { return drift_expr.value(x); }
    double volatility(double x) const { return volatility_expr.value(x); }
    double drift_derivative(double x) const { return drift_expr.eval(x).d1; }
    double volatility_derivative(double x) const { return volatility_expr.eval(x).d1; }
};

/// A one-dimensional diffusion dX = mu(X)dt + sigma(X)dW on (0, b) killed at
/// the constant rate r.
///
/// The scale density is normalised to one at `anchor()`; everything built on
/// top only uses ratios in which that constant cancels.
class DiffusionSpec {
public:
    static DiffusionSpec gbm(double mu, double sigma, double rate, double anchor = 1.0);
    static DiffusionSpec generic(Expression drift, Expression volatility, double rate,
                                 double upper = std::numeric_limits<double>::infinity(),
                                 double anchor = 1.0);

    bool is_gbm() const noexcept { return gbm_.has_value(); }
    const GbmCoefficients& gbm_coefficients() const { return *gbm_; }

    double rate() const noexcept { return rate_; }
    double upper() const noexcept { return upper_; }
    double anchor() const noexcept { return anchor_; }
    const StateMap& map() const noexcept { return map_; }

    DiffusionSpec with_anchor(double anchor) const;

    bool contains(double x) const noexcept { return x > 0.0 && x < upper_; }

    double drift(double x) const;
    double volatility(double x) const;
    Jet drift_jet(double x) const;
    Jet volatility_jet(double x) const;

    /// Checks positivity of the rate and volatility and local integrability
    /// of (1 + |mu|) / sigma^2 on sampled compact subintervals. Throws
    /// DomainError.
    void validate() const;

    /// ln S'(x) = -int_anchor^x 2 mu / sigma^2.
    double log_scale_density(double x) const;
    double scale_density(double x) const { return std::exp(log_scale_density(x)); }
    /// m'(x) = 2 / (sigma^2(x) S'(x)).
    double speed_density(double x) const;

    /// Calls fn with a coefficient object exposing inline drift(x) and
    /// volatility(x); lets hot loops avoid the generic dispatch.
    template <class Fn>
    decltype(auto) visit_coefficients(Fn&& fn) const {
        if (gbm_) return fn(*gbm_);
        return fn(*expr_);
    }

    std::string describe() const;

private:
    DiffusionSpec() = default;
    void require_inside(double x, const char* what) const;

    std::optional<GbmCoefficients> gbm_;
    std::optional<ExpressionCoefficients> expr_;
    double rate_ = 0.0;
    double upper_ = std::numeric_limits<double>::infinity();
    double anchor_ = 1.0;
    StateMap map_;
};

}  // namespace supctrl
