#pragma once

#include <cmath>
#include <utility>

namespace ambicon {

/// exp with the exponent clamped to [-700, 700]; *saturated is set when the
/// clamp fired.  Degenerate-band sequences intentionally drive exponents
/// large, so saturation is a reported state, not an error.
inline double safe_exp(double x, bool* saturated = nullptr) {
    if (x > 700.0) {
        if (saturated) *saturated = true;
        x = 700.0;
    } else if (x < -700.0) {
        if (saturated) *saturated = true;
        x = -700.0;
    }
    return std::exp(x);
}

inline double clip(double x, double lo, double hi) {
    return x < lo ? lo : (x > hi ? hi : x);
}

/// Golden-section minimization on [a, b] for a unimodal f.
/// Returns (argmin, min).  Tolerance is on the bracket width.
template <class F>
std::pair<double, double> golden_min(F&& f, double a, double b,
                                     double tol = 1e-12, int max_iter = 200) {
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

/// Golden-section maximization wrapper.
template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b,
                                     double tol = 1e-12, int max_iter = 200) {
    auto neg = [&f](double x) { return -f(x); };
    auto [x, v] = golden_min(neg, a, b, tol, max_iter);
    return {x, -v};
}

}  // namespace ambicon
