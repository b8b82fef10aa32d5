#pragma once

#include <cmath>

namespace supctrl {

/// Truncated Taylor jet: a value together with its first three derivatives
/// with respect to the state variable.
///
/// Arithmetic propagates derivatives exactly (Leibniz and Faa di Bruno up to
/// third order), so coefficient functions built from jets supply analytic
/// derivatives to every module that needs them.
struct Jet {
    double f = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double d3 = 0.0;

    static constexpr Jet constant(double c) { return {c, 0.0, 0.0, 0.0}; }
    static constexpr Jet variable(double x) { return {x, 1.0, 0.0, 0.0}; }
};

namespace detail {

// g(u) given g, g', g'', g''' evaluated at u.f
constexpr Jet compose(const Jet& u, double g0, double g1, double g2, double g3) {
    return {g0,
            g1 * u.d1,
            g2 * u.d1 * u.d1 + g1 * u.d2,
            g3 * u.d1 * u.d1 * u.d1 + 3.0 * g2 * u.d1 * u.d2 + g1 * u.d3};
}

}  // namespace detail

constexpr Jet operator+(const Jet& a, const Jet& b) {
    return {a.f + b.f, a.d1 + b.d1, a.d2 + b.d2, a.d3 + b.d3};
}
constexpr Jet operator-(const Jet& a, const Jet& b) {
    return {a.f - b.f, a.d1 - b.d1, a.d2 - b.d2, a.d3 - b.d3};
}
constexpr Jet operator-(const Jet& a) { return {-a.f, -a.d1, -a.d2, -a.d3}; }

constexpr Jet operator*(const Jet& a, const Jet& b) {
    return {a.f * b.f,
            a.d1 * b.f + a.f * b.d1,
            a.d2 * b.f + 2.0 * a.d1 * b.d1 + a.f * b.d2,
            a.d3 * b.f + 3.0 * a.d2 * b.d1 + 3.0 * a.d1 * b.d2 + a.f * b.d3};
}

constexpr Jet operator*(double c, const Jet& a) { return {c * a.f, c * a.d1, c * a.d2, c * a.d3}; }
constexpr Jet operator*(const Jet& a, double c) { return c * a; }
constexpr Jet operator+(const Jet& a, double c) { return {a.f + c, a.d1, a.d2, a.d3}; }
constexpr Jet operator+(double c, const Jet& a) { return a + c; }
constexpr Jet operator-(const Jet& a, double c) { return {a.f - c, a.d1, a.d2, a.d3}; }
constexpr Jet operator-(double c, const Jet& a) { return {c - a.f, -a.d1, -a.d2, -a.d3}; }

inline Jet reciprocal(const Jet& a) {
    const double inv = 1.0 / a.f;
    const double inv2 = inv * inv;
    return detail::compose(a, inv, -inv2, 2.0 * inv2 * inv, -6.0 * inv2 * inv2);
}

inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
inline Jet operator/(const Jet& a, double c) { return a * (1.0 / c); }
inline Jet operator/(double c, const Jet& a) { return c * reciprocal(a); }

inline Jet exp(const Jet& a) {
    const double e = std::exp(a.f);
    return detail::compose(a, e, e, e, e);
}

inline Jet log(const Jet& a) {
    const double inv = 1.0 / a.f;
    return detail::compose(a, std::log(a.f), inv, -inv * inv, 2.0 * inv * inv * inv);
}

inline Jet sqrt(const Jet& a) {
    const double s = std::sqrt(a.f);
    return detail::compose(a, s, 0.5 / s, -0.25 / (s * a.f), 0.375 / (s * a.f * a.f));
}

/// a^p for a constant exponent p.
inline Jet pow(const Jet& a, double p) {
    if (p == 0.0) return Jet::constant(1.0);
    const double v = a.f;
    if (p == 1.0) return a;
    if (p == 2.0) return a * a;
    const double g0 = std::pow(v, p);
    const double g1 = p * std::pow(v, p - 1.0);
    const double g2 = p * (p - 1.0) * std::pow(v, p - 2.0);
    const double g3 = p * (p - 1.0) * (p - 2.0) * std::pow(v, p - 3.0);
    return detail::compose(a, g0, g1, g2, g3);
}

inline Jet pow(const Jet& a, const Jet& b) {
    if (b.d1 == 0.0 && b.d2 == 0.0 && b.d3 == 0.0) return pow(a, b.f);
    return exp(b * log(a));
}

}  // namespace supctrl
