// regulated.hpp: Ornstein-Uhlenbeck correlation kernel, piecewise-polynomial
// regulated functions and their exponential smoothings.
//
// All integrals against the kernel are evaluated in closed form; every
// exponential is arranged to decay, so results stay accurate for very sharp
// kernels (small epsilon).

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "qsde_elim/errors.hpp"
#include "qsde_elim/operator_core.hpp"
#include "qsde_elim/quadrature.hpp"

namespace qsde_elim {

// G(tau) = (gamma / 4 eps) exp(-gamma |tau| / 2 eps)
struct OUKernel {
    double gamma;
    double epsilon;

    OUKernel(double g, double e) : gamma(g), epsilon(e) {
        if (!(g > 0.0) || !(e > 0.0) || !std::isfinite(g) || !std::isfinite(e))
            throw ParameterError("OUKernel: gamma and epsilon must be positive and finite");
    }
    double rate() const { return gamma / (2.0 * epsilon); }
    double peak() const { return gamma / (4.0 * epsilon); }
};

inline double kernel_eval(const OUKernel& K, double tau) { return K.peak() * std::exp(-K.rate() * std::abs(tau)); }

// Integral of G over [a, b], infinite endpoints allowed.
inline double kernel_mass(const OUKernel& K, double a, double b) {
    if (a > b) throw ParameterError("kernel_mass: a > b");
    auto F = [&](double x) {
        if (std::isinf(x)) return x > 0 ? 0.5 : -0.5;
        const double half = 0.5 * -std::expm1(-K.rate() * std::abs(x));
        return x >= 0 ? half : -half;
    };
    return F(b) - F(a);
}

// ---------------------------------------------------------------------------
// Polynomial helpers. Coefficients are stored in ascending order.

using Poly = std::vector<cplx>;

inline cplx poly_eval(const Poly& p, double u) {
    cplx acc{};
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * u + *it;
    return acc;
}

inline double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Coefficients of q(v) = p(c + s*v) for s = +1 or -1.
inline Poly poly_affine(const Poly& p, double c, double s) {
    const int n = static_cast<int>(p.size());
    Poly q(n, cplx{});
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j <= k; ++j) {
            // binom(k, j) c^(k-j) (s v)^j
            const double coef = binomial(k, j) * std::pow(c, k - j) * std::pow(s, j);
            q[j] += p[k] * coef;
        }
    }
    return q;
}

inline Poly poly_mul(const Poly& a, const Poly& b) {
    if (a.empty() || b.empty()) return {};
    Poly r(a.size() + b.size() - 1, cplx{});
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

inline Poly poly_conj(const Poly& p) {
    Poly q(p);
    for (auto& c : q) c = std::conj(c);
    return q;
}

// J_k(kappa, h) = integral_0^h v^k exp(-kappa v) dv, for kappa >= 0, h >= 0.
inline double decay_moment(int k, double kappa, double h) {
    if (h <= 0.0) return 0.0;
    const double x = kappa * h;
    if (x <= k + 40.0) {
        // h^{k+1} e^{-x} sum_j x^j / ((k+1)(k+2)...(k+1+j))
        double term = 1.0 / (k + 1), sum = term;
        for (int j = 1; j < 2000; ++j) {
            term *= x / (k + 1 + j);
            sum += term;
            if (term < 1e-17 * sum) break;
        }
        return std::pow(h, k + 1) * std::exp(-x) * sum;
    }
    // k!/kappa^{k+1} (1 - e^{-x} sum_{j<=k} x^j/j!)
    double partial = 0.0, term = 1.0, fact = 1.0;
    for (int j = 0; j <= k; ++j) {
        if (j > 0) {
            term *= x / j;
            fact *= j;
        }
        partial += term;
    }
    return fact / std::pow(kappa, k + 1) * (1.0 - std::exp(-x) * partial);
}

// integral_0^h q(v) exp(-kappa v) dv
inline cplx decay_integral(const Poly& q, double kappa, double h) {
    cplx acc{};
    for (std::size_t k = 0; k < q.size(); ++k)
        if (q[k] != cplx{}) acc += q[k] * decay_moment(static_cast<int>(k), kappa, h);
    return acc;
}

// ---------------------------------------------------------------------------

struct Segment {
    double start;
    double end;
    Poly poly;  // in the local variable u = t - start
};

// Compactly supported piecewise polynomial on [0, support_end); zero outside.
// Piece i lives on [breakpoints[i], breakpoints[i+1]) and is a polynomial of
// degree <= 3 in u = t - breakpoints[i]. Point evaluation returns the right
// limit.
class RegulatedFunction {
public:
    static constexpr std::size_t kMaxDegree = 3;

    RegulatedFunction() : breakpoints_{0.0} {}

    RegulatedFunction(std::vector<double> breakpoints, std::vector<Poly> pieces)
        : breakpoints_(std::move(breakpoints)), pieces_(std::move(pieces)) {
        if (breakpoints_.empty() || breakpoints_.front() != 0.0)
            throw ParameterError("RegulatedFunction: breakpoints must start at 0");
        if (pieces_.size() + 1 != breakpoints_.size())
            throw ParameterError("RegulatedFunction: need exactly one piece per interval");
        for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i)
            if (!(breakpoints_[i + 1] > breakpoints_[i]) || !std::isfinite(breakpoints_[i + 1]))
                throw ParameterError("RegulatedFunction: breakpoints must be finite and strictly increasing");
        for (auto& p : pieces_) {
            if (p.size() > kMaxDegree + 1) throw ParameterError("RegulatedFunction: piece degree exceeds 3");
            for (const auto& c : p)
                if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
                    throw NumericError("RegulatedFunction: non-finite coefficient");
        }
    }

    // value on [a, b), zero elsewhere
    static RegulatedFunction constant(cplx value, double a, double b) {
        if (!(a >= 0.0) || !(b > a)) throw ParameterError("RegulatedFunction::constant: need 0 <= a < b");
        return from_segments({Segment{a, b, {value}}});
    }

    // Non-overlapping segments in any order; uncovered stretches are zero.
    static RegulatedFunction from_segments(std::vector<Segment> segs) {
        std::sort(segs.begin(), segs.end(), [](const Segment& x, const Segment& y) { return x.start < y.start; });
        std::vector<double> bps{0.0};
        std::vector<Poly> pieces;
        for (const auto& s : segs) {
            if (!(s.start >= 0.0) || !(s.end > s.start))
                throw ParameterError("RegulatedFunction: segment needs 0 <= start < end");
            if (s.start < bps.back()) throw ParameterError("RegulatedFunction: overlapping segments");
            if (s.start > bps.back()) {
                pieces.push_back({});
                bps.push_back(s.start);
            }
            pieces.push_back(s.poly);
            bps.push_back(s.end);
        }
        return RegulatedFunction(std::move(bps), std::move(pieces));
    }

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<Poly>& pieces() const { return pieces_; }
    double support_end() const { return breakpoints_.back(); }
    bool is_zero() const {
        for (const auto& p : pieces_)
            for (const auto& c : p)
                if (c != cplx{}) return false;
        return true;
    }

    cplx right_limit(double t) const {
        if (t < 0.0 || t >= support_end()) return {};
        const std::size_t i = piece_index(t);
        return poly_eval(pieces_[i], t - breakpoints_[i]);
    }

    cplx left_limit(double t) const {
        if (t <= 0.0 || t > support_end()) return {};
        auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
        return poly_eval(pieces_[i], t - breakpoints_[i]);
    }

    cplx operator()(double t) const { return right_limit(t); }

    // Value at t of the polynomial piece that contains anchor (right-limit
    // sense). Lets an integrator reach a segment's closed right end.
    cplx on_piece(double anchor, double t) const {
        if (anchor < 0.0 || anchor >= support_end()) return {};
        const std::size_t i = piece_index(anchor);
        return poly_eval(pieces_[i], t - breakpoints_[i]);
    }

    bool jumps_at(double t) const { return right_limit(t) != left_limit(t); }

    // g(s) chi_[0, s_end](s)
    RegulatedFunction truncated(double s_end) const {
        if (s_end < 0.0) throw ParameterError("RegulatedFunction::truncated: negative end");
        std::vector<double> bps{0.0};
        std::vector<Poly> pcs;
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            if (breakpoints_[i] >= s_end) break;
            pcs.push_back(pieces_[i]);
            bps.push_back(std::min(breakpoints_[i + 1], s_end));
        }
        return RegulatedFunction(std::move(bps), std::move(pcs));
    }

    RegulatedFunction conj() const {
        std::vector<Poly> pcs;
        for (const auto& p : pieces_) pcs.push_back(poly_conj(p));
        return RegulatedFunction(breakpoints_, std::move(pcs));
    }

    RegulatedFunction scaled(cplx c) const {
        std::vector<Poly> pcs(pieces_);
        for (auto& p : pcs)
            for (auto& x : p) x *= c;
        return RegulatedFunction(breakpoints_, std::move(pcs));
    }

    std::vector<Segment> segments() const {
        std::vector<Segment> out;
        for (std::size_t i = 0; i < pieces_.size(); ++i)
            if (!pieces_[i].empty()) out.push_back({breakpoints_[i], breakpoints_[i + 1], pieces_[i]});
        return out;
    }

private:
    // index i with breakpoints[i] <= t < breakpoints[i+1]; requires 0 <= t < end
    std::size_t piece_index(double t) const {
        auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
        std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin());
        if (i == 0) return 0;
        return std::min(i - 1, pieces_.size() - 1);
    }

    std::vector<double> breakpoints_;
    std::vector<Poly> pieces_;
};

// Sorted union of the breakpoints of several functions.
inline std::vector<double> merged_breakpoints(std::initializer_list<const RegulatedFunction*> fs) {
    std::vector<double> out;
    for (const auto* f : fs) out.insert(out.end(), f->breakpoints().begin(), f->breakpoints().end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Polynomial of f on a cell starting at a (the cell must lie inside one piece
// of f), re-expressed in the local variable u = t - a.
inline Poly local_poly(const RegulatedFunction& f, double a) {
    const auto& bps = f.breakpoints();
    if (a >= f.support_end()) return {};
    auto it = std::upper_bound(bps.begin(), bps.end(), a);
    const std::size_t i = static_cast<std::size_t>(it - bps.begin()) - 1;
    return poly_affine(f.pieces()[i], a - bps[i], 1.0);
}

// integral_0^inf f(t)^* g(t) dt
inline cplx inner_product(const RegulatedFunction& f, const RegulatedFunction& g) {
    const auto cells = merged_breakpoints({&f, &g});
    cplx acc{};
    for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
        const double a = cells[c], b = cells[c + 1];
        const Poly pq = poly_mul(poly_conj(local_poly(f, a)), local_poly(g, a));
        double hp = b - a;
        for (const auto& coef : pq) {
            acc += coef * hp / static_cast<double>(&coef - pq.data() + 1);
            hp *= (b - a);
        }
    }
    return acc;
}

enum class Side { plus, minus };

// g^+(t) = 2 int_0^inf g(t+tau) G(tau) dtau,  g^-(t) = 2 int_0^t g(t-tau) G(tau) dtau
inline cplx smooth(const RegulatedFunction& g, Side side, double t, const OUKernel& K) {
    if (t < 0.0) throw ParameterError("smooth: t < 0");
    const double kappa = K.rate();
    const auto& bps = g.breakpoints();
    const auto& pcs = g.pieces();
    cplx acc{};
    for (std::size_t i = 0; i < pcs.size(); ++i) {
        if (pcs[i].empty()) continue;
        const double a = bps[i], b = bps[i + 1];
        if (side == Side::plus) {
            if (b <= t) continue;
            const double s0 = std::max(a, t);
            const Poly q = poly_affine(pcs[i], s0 - a, 1.0);
            acc += std::exp(-kappa * (s0 - t)) * decay_integral(q, kappa, b - s0);
        } else {
            if (a >= t) continue;
            const double s1 = std::min(b, t);
            const Poly q = poly_affine(pcs[i], s1 - a, -1.0);
            acc += std::exp(-kappa * (t - s1)) * decay_integral(q, kappa, s1 - a);
        }
    }
    return kappa * acc;
}

// |4 int_0^{min(t,tau)} G(t-s) G(s-tau) ds - [G(t-tau) - G(tau) e^{-gamma t/2eps}]|,
// left side by adaptive quadrature.
inline double convolution_identity_residual(const OUKernel& K, double t, double tau) {
    if (t < 0.0 || tau < 0.0) throw ParameterError("convolution_identity_residual: negative time");
    const double m = std::min(t, tau);
    const double lhs =
        4.0 * adaptive_simpson<double>([&](double s) { return kernel_eval(K, t - s) * kernel_eval(K, s - tau); }, 0.0,
                                       m, 1e-12);
    const double rhs = kernel_eval(K, t - tau) - kernel_eval(K, tau) * std::exp(-K.rate() * t);
    return std::abs(lhs - rhs);
}

namespace detail {

// int_0^h int_0^x p(x) q(y) e^{-kappa (x - y)} dy dx
inline cplx lower_triangle(const Poly& p, const Poly& q, double kappa, double h) {
    // Substitute y = x - w and integrate over x in [w, h] first; the remaining
    // integrand in w is a polynomial times e^{-kappa w}.
    cplx acc{};
    for (std::size_t l = 0; l < p.size(); ++l) {
        if (p[l] == cplx{}) continue;
        for (std::size_t m = 0; m < q.size(); ++m) {
            if (q[m] == cplx{}) continue;
            // int_w^h x^l (x - w)^m dx = sum_i C(l,i) w^{l-i} (h-w)^{m+i+1}/(m+i+1)
            Poly r(l + m + 2, cplx{});
            for (std::size_t i = 0; i <= l; ++i) {
                const int n = static_cast<int>(m + i + 1);
                const double c = binomial(static_cast<int>(l), static_cast<int>(i)) / n;
                for (int j = 0; j <= n; ++j)
                    r[l - i + j] += c * binomial(n, j) * std::pow(h, n - j) * ((j % 2) ? -1.0 : 1.0);
            }
            acc += p[l] * q[m] * decay_integral(r, kappa, h);
        }
    }
    return acc;
}

}  // namespace detail

// [A(f), A(g)^dag] = int int f(t)^* G(t - s) g(s) ds dt = 1/2 int f^* (g^+ + g^-)
inline cplx smeared_commutator(const RegulatedFunction& f, const RegulatedFunction& g, const OUKernel& K) {
    const double kappa = K.rate();
    const auto cells = merged_breakpoints({&f, &g});
    const std::size_t nc = cells.size() - 1;
    std::vector<Poly> fp(nc), gp(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        fp[c] = poly_conj(local_poly(f, cells[c]));
        gp[c] = local_poly(g, cells[c]);
    }
    // Per cell: integrals weighted by e^{-kappa(b - x)} (toward the right edge)
    // and e^{-kappa(x - a)} (toward the left edge).
    std::vector<cplx> f_right(nc), f_left(nc), g_right(nc), g_left(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        const double h = cells[c + 1] - cells[c];
        f_left[c] = decay_integral(fp[c], kappa, h);
        f_right[c] = decay_integral(poly_affine(fp[c], h, -1.0), kappa, h);
        g_left[c] = decay_integral(gp[c], kappa, h);
        g_right[c] = decay_integral(poly_affine(gp[c], h, -1.0), kappa, h);
    }
    cplx acc{};
    for (std::size_t i = 0; i < nc; ++i) {
        if (fp[i].empty()) continue;
        for (std::size_t j = 0; j < nc; ++j) {
            if (gp[j].empty()) continue;
            if (i == j) {
                const double h = cells[i + 1] - cells[i];
                acc += detail::lower_triangle(fp[i], gp[i], kappa, h) + detail::lower_triangle(gp[i], fp[i], kappa, h);
            } else if (j < i) {
                acc += f_left[i] * g_right[j] * std::exp(-kappa * (cells[i] - cells[j + 1]));
            } else {
                acc += f_right[i] * g_left[j] * std::exp(-kappa * (cells[j] - cells[i + 1]));
            }
        }
    }
    return K.peak() * acc;
}

}  // namespace qsde_elim
