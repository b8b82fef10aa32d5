#include "supctrl/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "supctrl/errors.hpp"

namespace supctrl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

// log of int_0^h exp(g0 + (g1 - g0) t / h) dt, exact for log-linear integrands.
double log_cell(double g0, double g1, double h) {
    if (g0 == kNegInf || g1 == kNegInf) return std::log(0.5 * h) + log_add(g0, g1);
    const double d = g1 - g0;
    if (std::fabs(d) < 1e-8) return std::log(h) + g0 + 0.5 * d;
    if (d > 0) return std::log(h) + g1 + std::log(-std::expm1(-d) / d);
    return std::log(h) + g0 + std::log(std::expm1(d) / d);
}

// Runs both Feller tests toward one endpoint (dir = -1 lower, +1 upper).
FellerTests side_tests(const DiffusionSpec& spec, int dir, const ClassificationSettings& cs) {
    const StateMap& map = spec.map();
    const double s_c = map.to_s(spec.anchor());
    const double h = std::log(10.0) / cs.nodes_per_decade;
    const int n_nodes = cs.decades * cs.nodes_per_decade + 1;

    auto dL_ds = [&](double s) {
        const double x = map.to_x(s);
        const double v = spec.volatility(x);
        return -2.0 * spec.drift(x) * map.dx_ds(x) / (v * v);
    };

    std::vector<double> a(n_nodes), b(n_nodes);
    double L = 0.0;
    double s_prev = s_c;
    for (int i = 0; i < n_nodes; ++i) {
        const double s = s_c + dir * h * i;
        if (i > 0) {
            // Simpson on the cell [s_prev, s]
            L += (s - s_prev) / 6.0 * (dL_ds(s_prev) + 4.0 * dL_ds(0.5 * (s_prev + s)) + dL_ds(s));
        }
        s_prev = s;
        const double x = map.to_x(s);
        const double jac = map.dx_ds(x);
        const double v = spec.volatility(x);
        if (!(jac > 0.0) || !spec.contains(x)) {
            a[i] = b[i] = kNegInf;
            continue;
        }
        a[i] = L + std::log(jac);
        b[i] = std::log(2.0) - 2.0 * std::log(v) - L + std::log(jac);
    }

    std::vector<double> log_s(n_nodes, kNegInf), log_m(n_nodes, kNegInf);
    for (int i = 1; i < n_nodes; ++i) {
        log_s[i] = log_add(log_s[i - 1], log_cell(a[i - 1], a[i], h));
        log_m[i] = log_add(log_m[i - 1], log_cell(b[i - 1], b[i], h));
    }

    std::vector<double> sigma_dec(cs.decades, kNegInf), n_dec(cs.decades, kNegInf);
    for (int i = 0; i + 1 < n_nodes; ++i) {
        const int k = i / cs.nodes_per_decade;
        const double half = std::log(0.5 * h);
        sigma_dec[k] = log_add(sigma_dec[k], half + log_add(a[i] + log_m[i], a[i + 1] + log_m[i + 1]));
        n_dec[k] = log_add(n_dec[k], half + log_add(b[i] + log_s[i], b[i + 1] + log_s[i + 1]));
    }

    FellerTests t;
    t.sigma = classify_tail(sigma_dec.data(), sigma_dec.size());
    t.n = classify_tail(n_dec.data(), n_dec.size());
    return t;
}

BoundaryType decide(const FellerTests& t, const char* which) {
    if (t.sigma == TailBehavior::ambiguous || t.n == TailBehavior::ambiguous) {
        std::ostringstream os;
        os << "Feller test inconclusive at the " << which << " boundary (Sigma " << to_string(t.sigma)
           << ", N " << to_string(t.n) << ")";
        throw NumericError(os.str());
    }
    const bool sigma_finite = t.sigma == TailBehavior::finite;
    const bool n_finite = t.n == TailBehavior::finite;
    if (sigma_finite && n_finite) return BoundaryType::regular;
    if (sigma_finite) return BoundaryType::exit;
    if (n_finite) return BoundaryType::entrance;
    return BoundaryType::natural;
}

}  // namespace

std::string to_string(BoundaryType t) {
    switch (t) {
        case BoundaryType::natural: return "natural";
        case BoundaryType::exit: return "exit";
        case BoundaryType::entrance: return "entrance";
        case BoundaryType::regular: return "regular";
    }
    return "?";
}

BoundaryClassification feller_classification(const DiffusionSpec& spec, const ClassificationSettings& s) {
    BoundaryClassification c;
    c.lower_tests = side_tests(spec, -1, s);
    c.upper_tests = side_tests(spec, +1, s);
    c.lower = decide(c.lower_tests, "lower");
    c.upper = decide(c.upper_tests, "upper");
    return c;
}

BoundaryClassification classify_boundaries(const DiffusionSpec& spec, const ClassificationSettings& s) {
    auto c = feller_classification(spec, s);
    if (c.upper != BoundaryType::natural) {
        throw UnsupportedModelError("upper boundary is " + to_string(c.upper) +
                                    "; only natural upper boundaries are supported");
    }
    return c;
}

}  // namespace supctrl
