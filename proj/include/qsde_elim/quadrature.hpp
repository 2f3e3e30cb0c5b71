// quadrature.hpp: Adaptive Simpson integration, used as an independent
// cross-check for closed-form integrals.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace qsde_elim {

namespace detail {

template <class T, class F>
T simpson_step(const F& f, double a, double b, T fa, T fm, T fb, T whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const T flm = f(lm), frm = f(rm);
    const T left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const T right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const T delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Integral of f over [a, b]; T is double or std::complex<double>.
template <class T = double, class F>
T adaptive_simpson(const F& f, double a, double b, double tol = 1e-10, int max_depth = 50) {
    if (b == a) return T{};
    if (b < a) return -adaptive_simpson<T>(f, b, a, tol, max_depth);
    const T fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const T whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Same, but splits [a, b] at the supplied interior points first so that
// kinks and jumps never sit inside a Simpson panel.
template <class T = double, class F>
T adaptive_simpson_split(const F& f, double a, double b, std::vector<double> cuts, double tol = 1e-10) {
    cuts.push_back(a);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    T total{};
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = std::max(a, cuts[i]), hi = std::min(b, cuts[i + 1]);
        if (hi > lo) total += adaptive_simpson<T>(f, lo, hi, tol);
    }
    return total;
}

}  // namespace qsde_elim
