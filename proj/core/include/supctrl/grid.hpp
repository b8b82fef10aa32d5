#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace supctrl {

/// n points log-spaced from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    const double a = std::log(lo);
    const double step = n > 1 ? (std::log(hi) - a) / (n - 1) : 0.0;
    for (int i = 0; i < n; ++i) g[i] = std::exp(a + step * i);
    g.front() = lo;
    if (n > 1) g.back() = hi;
    return g;
}

/// n points uniformly spaced from lo to hi inclusive.
inline std::vector<double> linear_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    const double step = n > 1 ? (hi - lo) / (n - 1) : 0.0;
    for (int i = 0; i < n; ++i) g[i] = lo + step * i;
    if (n > 1) g.back() = hi;
    return g;
}

/// One named pass/fail item in a verification report.
struct CheckItem {
    std::string name;
    bool pass = false;
    double residual = 0.0;
    std::string detail;
};

}  // namespace supctrl
