// ode.hpp: Adaptive Dormand-Prince 5(4) integrator for Eigen-valued linear
// flows with piecewise-smooth coefficients.
//
// The right-hand side is called as f(t, y, anchor), where anchor is the left
// end of the current smooth segment. Coefficients should be evaluated on the
// piece containing anchor so the stage at a segment's right end sees the left
// limit rather than the next piece.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qsde_elim/errors.hpp"
#include "qsde_elim/operator_core.hpp"

namespace qsde_elim {

struct OdeOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    long max_steps = 5'000'000;
};

struct OdeStats {
    long steps = 0;
    long rejected = 0;
    long evaluations = 0;
    double est_error = 0.0;  // sum of accepted local error estimates, relative to the solution norm
};

namespace detail {

template <class State>
double scaled_rms(const State& err, const State& y0, const State& y1, const OdeOptions& o) {
    double acc = 0.0;
    const Eigen::Index n = err.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sc = o.atol + o.rtol * std::max(std::abs(y0.data()[i]), std::abs(y1.data()[i]));
        const double e = std::abs(err.data()[i]) / sc;
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(n, 1)));
}

}  // namespace detail

// Integrates y' = f(t, y, anchor) from t0 to t1, stopping exactly at every
// breakpoint inside (t0, t1). The observer is called as obs(t, y) after each
// accepted step.
template <class State, class Rhs, class Observer>
State integrate(const Rhs& f, State y, double t0, double t1, std::vector<double> breakpoints, const OdeOptions& opt,
                OdeStats& stats, const Observer& obs) {
    if (t1 < t0) throw ParameterError("integrate: t1 < t0");
    std::vector<double> stops;
    for (double b : breakpoints)
        if (b > t0 && b < t1) stops.push_back(b);
    stops.push_back(t1);
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

    // Dormand-Prince tableau
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    double t = t0;
    double h = 0.0;
    for (double stop : stops) {
        const double anchor = t;
        const double span = stop - t;
        if (span <= 0.0) continue;
        State k1 = f(t, y, anchor);
        ++stats.evaluations;
        if (h <= 0.0) {
            // initial step from the scale of y and y'
            const double yn = y.norm(), fn = k1.norm();
            h = (fn > 0.0 && yn > 0.0) ? 0.01 * yn / fn : 1e-3 * span;
        }
        h = std::min(h, span);
        while (t < stop) {
            if (stats.steps + stats.rejected >= opt.max_steps)
                throw AccuracyError("integrate: step budget exhausted at t = " + std::to_string(t));
            bool last = false;
            if (t + h >= stop || (stop - t - h) < 1e-12 * span) {
                h = stop - t;
                last = true;
            }
            const State k2 = f(t + c2 * h, State(y + h * (a21 * k1)), anchor);
            const State k3 = f(t + c3 * h, State(y + h * (a31 * k1 + a32 * k2)), anchor);
            const State k4 = f(t + c4 * h, State(y + h * (a41 * k1 + a42 * k2 + a43 * k3)), anchor);
            const State k5 = f(t + c5 * h, State(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)), anchor);
            const State k6 =
                f(t + h, State(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)), anchor);
            State ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            const State k7 = f(t + h, ynew, anchor);
            stats.evaluations += 6;
            const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            const double en = detail::scaled_rms(err, y, ynew, opt);
            if (!std::isfinite(en)) throw NumericError("integrate: non-finite state at t = " + std::to_string(t));
            if (en <= 1.0) {
                t = last ? stop : t + h;
                const double yn = std::max(ynew.norm(), 1e-300);
                stats.est_error += err.norm() / yn;
                y = std::move(ynew);
                k1 = k7;
                ++stats.steps;
                obs(t, y);
                const double fac = en > 0.0 ? std::min(5.0, std::max(0.2, 0.9 * std::pow(en, -0.2))) : 5.0;
                h *= fac;
            } else {
                ++stats.rejected;
                h *= std::max(0.1, 0.9 * std::pow(en, -0.2));
                if (h < 1e-14 * std::max(1.0, std::abs(t)))
                    throw AccuracyError("integrate: step size underflow at t = " + std::to_string(t));
            }
        }
        t = stop;
    }
    return y;
}

template <class State, class Rhs>
State integrate(const Rhs& f, State y, double t0, double t1, std::vector<double> breakpoints, const OdeOptions& opt,
                OdeStats& stats) {
    return integrate(f, std::move(y), t0, t1, std::move(breakpoints), opt, stats, [](double, const State&) {});
}

}  // namespace qsde_elim
