// dyson.hpp: Combinatorics of the Dyson/Wick expansion: set partitions, Wick
// pairings, Goldstone diagrams, exact simplex integrals of kernel products,
// the Pule bound, the Omega majorant and double diagrams.
//
// Index convention: vertex 1 is the earliest time; a pairing J sends a
// creator at vertex i to the annihilator at a later vertex J(i) > i.

#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "qsde_elim/errors.hpp"
#include "qsde_elim/regulated.hpp"

namespace qsde_elim {

using Bits = std::vector<int>;

// ---------------------------------------------------------------------------
// Set partitions and occupation sequences

struct GoldstoneDiagram {
    int n = 0;
    std::vector<std::vector<int>> parts;  // 1-based vertices, each part sorted, parts ordered by first vertex

    // Every part is a run of consecutive vertices.
    bool time_consecutive() const {
        for (const auto& p : parts)
            for (std::size_t k = 1; k < p.size(); ++k)
                if (p[k] != p[k - 1] + 1) return false;
        return true;
    }
};

inline bool operator==(const GoldstoneDiagram& a, const GoldstoneDiagram& b) { return a.n == b.n && a.parts == b.parts; }

inline constexpr int kMaxEnumeration = 10;
inline constexpr int kMaxSimplexOrder = 6;

inline std::uint64_t bell_number(int n) {
    // Bell triangle
    std::vector<std::uint64_t> row{1};
    for (int i = 1; i <= n; ++i) {
        std::vector<std::uint64_t> next{row.back()};
        for (auto x : row) next.push_back(next.back() + x);
        row = std::move(next);
    }
    return row.front();
}

inline GoldstoneDiagram make_diagram(std::vector<std::vector<int>> parts) {
    GoldstoneDiagram d;
    for (auto& p : parts) {
        std::sort(p.begin(), p.end());
        d.n += static_cast<int>(p.size());
    }
    std::sort(parts.begin(), parts.end());
    d.parts = std::move(parts);
    std::vector<int> seen;
    for (const auto& p : d.parts) seen.insert(seen.end(), p.begin(), p.end());
    std::sort(seen.begin(), seen.end());
    for (int i = 0; i < static_cast<int>(seen.size()); ++i)
        if (seen[i] != i + 1) throw ParameterError("make_diagram: parts must partition {1..n}");
    return d;
}

// All set partitions of {1..n}, generated from restricted growth strings.
inline std::vector<GoldstoneDiagram> enumerate_partitions(int n) {
    if (n < 1) throw ParameterError("enumerate_partitions: n must be >= 1");
    if (n > kMaxEnumeration) throw CapacityError("enumerate_partitions: n exceeds 10");
    std::vector<GoldstoneDiagram> out;
    std::vector<int> a(n, 0);
    std::function<void(int, int)> rec = [&](int i, int maxv) {
        if (i == n) {
            std::vector<std::vector<int>> parts(maxv + 1);
            for (int k = 0; k < n; ++k) parts[a[k]].push_back(k + 1);
            out.push_back({n, std::move(parts)});
            return;
        }
        for (int v = 0; v <= maxv + 1; ++v) {
            a[i] = v;
            rec(i + 1, std::max(maxv, v));
        }
    };
    a[0] = 0;
    rec(1, 0);
    return out;
}

struct OccupationSequence {
    std::vector<int> counts;  // counts[j-1] = number of parts with j vertices

    int E() const {
        int e = 0;
        for (std::size_t j = 0; j < counts.size(); ++j) e += static_cast<int>(j + 1) * counts[j];
        return e;
    }
    int N() const { return std::accumulate(counts.begin(), counts.end(), 0); }
    int n(int j) const { return j >= 1 && j <= static_cast<int>(counts.size()) ? counts[j - 1] : 0; }
};

inline bool operator==(const OccupationSequence& a, const OccupationSequence& b) {
    const std::size_t m = std::max(a.counts.size(), b.counts.size());
    for (std::size_t j = 1; j <= m; ++j)
        if (a.n(static_cast<int>(j)) != b.n(static_cast<int>(j))) return false;
    return true;
}

inline OccupationSequence occupation(const GoldstoneDiagram& d) {
    OccupationSequence s;
    for (const auto& p : d.parts) {
        if (s.counts.size() < p.size()) s.counts.resize(p.size(), 0);
        ++s.counts[p.size() - 1];
    }
    return s;
}

// Occupation sequences with E = n (integer partitions of n).
inline std::vector<OccupationSequence> occupations_with_E(int n) {
    std::vector<OccupationSequence> out;
    std::vector<int> counts(n, 0);
    std::function<void(int, int)> rec = [&](int remaining, int j) {
        if (remaining == 0) {
            OccupationSequence s{counts};
            while (!s.counts.empty() && s.counts.back() == 0) s.counts.pop_back();
            out.push_back(s);
            return;
        }
        if (j == 0) return;
        for (int c = remaining / j; c >= 0; --c) {
            counts[j - 1] = c;
            rec(remaining - c * j, j - 1);
        }
        counts[j - 1] = 0;
    };
    rec(n, n);
    return out;
}

// ---------------------------------------------------------------------------
// Wick pairings

struct WickPairing {
    int n = 0;
    Bits alpha, beta;    // alpha[i-1] = 1: creator at vertex i; beta[i-1] = 1: annihilator at vertex i
    std::vector<int> J;  // J[i-1] = partner vertex of the creator at i, 0 if alpha_i = 0

    std::vector<std::pair<int, int>> contractions() const {
        std::vector<std::pair<int, int>> out;
        for (int i = 1; i <= n; ++i)
            if (J[i - 1] > 0) out.emplace_back(i, J[i - 1]);
        return out;
    }
};

// All increasing bijections J: P(alpha) -> Q(beta) with J(i) > i.
inline std::vector<WickPairing> enumerate_pairings(const Bits& alpha, const Bits& beta) {
    if (alpha.size() != beta.size()) throw DimensionError("enumerate_pairings: alpha and beta lengths differ");
    const int n = static_cast<int>(alpha.size());
    if (n > 12) throw CapacityError("enumerate_pairings: length exceeds 12");
    std::vector<int> P, Q;
    for (int i = 0; i < n; ++i) {
        if (alpha[i]) P.push_back(i + 1);
        if (beta[i]) Q.push_back(i + 1);
    }
    std::vector<WickPairing> out;
    if (P.size() != Q.size()) return out;
    std::vector<int> J(n, 0);
    std::vector<bool> used(n + 1, false);
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k == P.size()) {
            out.push_back({n, alpha, beta, J});
            return;
        }
        const int i = P[k];
        for (int q : Q) {
            if (q <= i || used[q]) continue;
            used[q] = true;
            J[i - 1] = q;
            rec(k + 1);
            used[q] = false;
        }
        J[i - 1] = 0;
    };
    rec(0);
    return out;
}

// Forced roles of a partition: chains i_1 < i_2 < ... inside each part with J(i_k) = i_{k+1}.
inline WickPairing diagram_pairing(const GoldstoneDiagram& d) {
    WickPairing w{d.n, Bits(d.n, 0), Bits(d.n, 0), std::vector<int>(d.n, 0)};
    for (const auto& p : d.parts)
        for (std::size_t k = 0; k + 1 < p.size(); ++k) {
            w.alpha[p[k] - 1] = 1;
            w.beta[p[k + 1] - 1] = 1;
            w.J[p[k] - 1] = p[k + 1];
        }
    return w;
}

// Connected components of a pairing, as a partition.
inline GoldstoneDiagram pairing_diagram(const WickPairing& w) {
    std::vector<std::vector<int>> parts;
    for (int i = 1; i <= w.n; ++i) {
        if (w.beta[i - 1]) continue;  // not a chain start
        std::vector<int> chain{i};
        int v = i;
        while (w.J[v - 1] > 0) {
            v = w.J[v - 1];
            chain.push_back(v);
        }
        parts.push_back(chain);
    }
    return make_diagram(std::move(parts));
}

inline void require_increasing(const std::vector<double>& times, std::size_t n, const char* who) {
    if (times.size() != n) throw DimensionError(std::string(who) + ": times length mismatch");
    for (std::size_t i = 1; i < n; ++i)
        if (!(times[i] > times[i - 1])) throw ParameterError(std::string(who) + ": times must be strictly increasing");
}

// <Phi| prod_{k=n..1} [a_k^dag]^{alpha_k} [a_k]^{beta_k} Phi> via Wick's lemma.
inline double wick_vacuum_moment(const Bits& alpha, const Bits& beta, const std::vector<double>& times,
                                 const OUKernel& K) {
    require_increasing(times, alpha.size(), "wick_vacuum_moment");
    double total = 0.0;
    for (const auto& w : enumerate_pairings(alpha, beta)) {
        double prod = 1.0;
        for (auto [i, j] : w.contractions()) prod *= kernel_eval(K, times[j - 1] - times[i - 1]);
        total += prod;
    }
    return total;
}

// Same moment by commuting annihilators to the right through creators, one
// commutator [a_s, a_t^dag] = G(s - t) at a time.
inline double normal_order_oracle(const Bits& alpha, const Bits& beta, const std::vector<double>& times,
                                  const OUKernel& K) {
    if (alpha.size() != beta.size()) throw DimensionError("normal_order_oracle: alpha and beta lengths differ");
    const int n = static_cast<int>(alpha.size());
    if (n > 8) throw CapacityError("normal_order_oracle: n exceeds 8");
    require_increasing(times, alpha.size(), "normal_order_oracle");
    struct Op {
        bool creator;
        double s;
    };
    std::vector<Op> word;  // left to right
    for (int k = n - 1; k >= 0; --k) {
        if (alpha[k]) word.push_back({true, times[k]});
        if (beta[k]) word.push_back({false, times[k]});
    }
    std::function<double(const std::vector<Op>&)> vev = [&](const std::vector<Op>& w) -> double {
        if (w.empty()) return 1.0;
        if (w.front().creator) return 0.0;  // <Phi| a^dag = 0
        int a = -1;
        for (int k = static_cast<int>(w.size()) - 1; k >= 0; --k)
            if (!w[k].creator) {
                a = k;
                break;
            }
        double total = 0.0;
        for (std::size_t c = a + 1; c < w.size(); ++c) {
            std::vector<Op> rest;
            for (std::size_t k = 0; k < w.size(); ++k)
                if (static_cast<int>(k) != a && k != c) rest.push_back(w[k]);
            total += kernel_eval(K, w[a].s - w[c].s) * vev(rest);
        }
        return total;
    };
    return vev(word);
}

// ---------------------------------------------------------------------------
// Simplex integrals

namespace detail {

using mpfloat = boost::multiprecision::cpp_bin_float_50;

// Divided difference of y -> exp(c y) on sorted integer nodes (repeats allowed).
inline mpfloat exp_divided_difference(const std::vector<int>& nodes, const mpfloat& c) {
    const int n = static_cast<int>(nodes.size()) - 1;
    const int ymax = nodes.back();
    if (abs(c) * ymax <= 1) {
        // sum_{k>=n} c^k / k! h_{k-n}(nodes)
        const int terms = 120;
        std::vector<mpfloat> h(terms + 1, mpfloat(0));
        h[0] = 1;
        for (int y : nodes)
            for (int j = 1; j <= terms; ++j) h[j] += y * h[j - 1];
        mpfloat ck = 1, sum = 0;
        for (int k = 1; k <= n; ++k) ck *= c / k;  // c^n / n!
        for (int j = 0; j <= terms; ++j) {
            const mpfloat term = ck * h[j];
            sum += term;
            if (j > 10 && abs(term) < mpfloat(1e-45) * abs(sum)) break;
            ck *= c / (n + j + 1);
        }
        return sum;
    }
    std::vector<mpfloat> dd(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) dd[i] = exp(c * nodes[i]);
    for (int k = 1; k <= n; ++k) {
        for (int i = 0; i + k <= n; ++i) {
            if (nodes[i + k] == nodes[i]) {
                mpfloat v = exp(c * nodes[i]);
                for (int q = 1; q <= k; ++q) v *= c / q;
                dd[i] = v;
            } else {
                dd[i] = (dd[i + 1] - dd[i]) / (nodes[i + k] - nodes[i]);
            }
        }
    }
    return dd[0];
}

}  // namespace detail

// int over 0 < s_1 < ... < s_n < t of prod_{i -> J(i)} G(s_J(i) - s_i).
inline double simplex_integral(const WickPairing& w, double t, const OUKernel& K) {
    if (w.n < 1) throw ParameterError("simplex_integral: empty diagram");
    if (w.n > kMaxSimplexOrder) throw CapacityError("simplex_integral: n exceeds 6");
    if (t < 0.0) throw ParameterError("simplex_integral: t < 0");
    if (t == 0.0) return 0.0;
    const int n = w.n;
    // gap k (1-based, u_k = s_k - s_{k-1}) is crossed by m_k contractions;
    // gaps 1 and n+1 carry none.
    std::vector<int> m(n + 1, 0);
    int pairs = 0;
    for (auto [i, j] : w.contractions()) {
        ++pairs;
        for (int k = i + 1; k <= j; ++k) ++m[k - 1];
    }
    std::sort(m.begin(), m.end());
    using detail::mpfloat;
    const mpfloat kappa = K.rate();
    const mpfloat c = -kappa * t;
    mpfloat g = detail::exp_divided_difference(m, c);
    mpfloat value = g / pow(kappa, n) * ((n % 2) ? -1 : 1) * pow(mpfloat(K.peak()), pairs);
    return static_cast<double>(value);
}

inline double simplex_integral(const GoldstoneDiagram& d, double t, const OUKernel& K) {
    return simplex_integral(diagram_pairing(d), t, K);
}

// ---------------------------------------------------------------------------
// Time-consecutive limit law

// Component sizes in increasing time order, e.g. (3,1,2,3).
inline GoldstoneDiagram time_consecutive_diagram(const std::vector<int>& r) {
    std::vector<std::vector<int>> parts;
    int v = 1;
    for (int size : r) {
        if (size < 1) throw ParameterError("time_consecutive_diagram: sizes must be positive");
        std::vector<int> p;
        for (int k = 0; k < size; ++k) p.push_back(v++);
        parts.push_back(p);
    }
    return make_diagram(std::move(parts));
}

inline double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

struct LimitSweepReport {
    std::vector<double> epsilons;
    std::vector<double> values;
    bool time_consecutive = false;
    double target = 0.0;             // limit t^m / (2^{n-m} m!) for time-consecutive diagrams, else 0
    std::vector<double> errors;      // |value - target| (time-consecutive) or value / value at first eps
    bool monotone = false;           // errors strictly decreasing
    double final_rel_err = 0.0;      // time-consecutive: |value - target| / target at the last eps
    double vanishing_ratio = 0.0;    // non-time-consecutive: value(last eps) / value(first eps)
    bool pass = false;
};

// Sweep of one diagram's simplex integral along decreasing epsilons.
// Time-consecutive: pass iff errors decrease and final relative error < 1%.
// Otherwise: pass iff the last value is below 5% of the first.
inline LimitSweepReport diagram_limit_sweep(const GoldstoneDiagram& d, double t, double gamma,
                                            const std::vector<double>& epsilons) {
    if (d.n > kMaxSimplexOrder) throw CapacityError("diagram_limit_sweep: n exceeds 6");
    if (epsilons.empty()) throw ParameterError("diagram_limit_sweep: empty sweep");
    LimitSweepReport rep;
    rep.epsilons = epsilons;
    rep.time_consecutive = d.time_consecutive();
    const int m = static_cast<int>(d.parts.size());
    rep.target = rep.time_consecutive ? std::pow(t, m) / (std::pow(2.0, d.n - m) * factorial(m)) : 0.0;
    for (double eps : epsilons) rep.values.push_back(simplex_integral(d, t, OUKernel(gamma, eps)));
    for (double v : rep.values)
        rep.errors.push_back(rep.time_consecutive ? std::abs(v - rep.target) : v / rep.values.front());
    rep.monotone = true;
    for (std::size_t k = 1; k < rep.errors.size(); ++k)
        if (!(rep.errors[k] < rep.errors[k - 1])) rep.monotone = false;
    if (rep.time_consecutive) {
        rep.final_rel_err = std::abs(rep.values.back() - rep.target) / rep.target;
        const bool exact = d.n == m;  // no contractions: value is eps-independent
        rep.pass = (rep.monotone || exact) && rep.final_rel_err < 0.01;
    } else {
        rep.vanishing_ratio = rep.values.back() / rep.values.front();
        rep.pass = rep.vanishing_ratio < 0.05;
    }
    return rep;
}

inline LimitSweepReport time_consecutive_limit_check(const std::vector<int>& r, double t, double gamma,
                                                     const std::vector<double>& epsilons) {
    int n = std::accumulate(r.begin(), r.end(), 0);
    if (n > kMaxSimplexOrder) throw CapacityError("time_consecutive_limit_check: sum of r exceeds 6");
    return diagram_limit_sweep(time_consecutive_diagram(r), t, gamma, epsilons);
}

// ---------------------------------------------------------------------------
// Pule bound and the Omega majorant

struct PuleReport {
    double lhs;
    double rhs;
    bool holds;
};

inline PuleReport pule_check(const OccupationSequence& occ, double t, const OUKernel& K) {
    const int E = occ.E(), N = occ.N();
    if (E < 1) throw ParameterError("pule_check: empty occupation sequence");
    if (E > kMaxSimplexOrder) throw CapacityError("pule_check: E exceeds 6");
    double lhs = 0.0;
    for (const auto& d : enumerate_partitions(E))
        if (occupation(d) == occ) lhs += simplex_integral(d, t, K);
    double denom = std::pow(2.0, E - N);
    for (std::size_t j = 0; j < occ.counts.size(); ++j) denom *= factorial(occ.counts[j]);
    const double rhs = std::pow(t, N) / denom;
    return {lhs, rhs, lhs <= rhs + 1e-12};
}

struct BoundParameters {
    double C;    // max coefficient bound
    double C11;  // (4/gamma) ||E11||
    double t;
};

struct OmegaReport {
    double A = 0.0, B = 0.0;
    std::vector<double> per_n;  // per_n[k] = Omega(k+1) / (||v1|| ||v2||)
    double total = 0.0;         // 1 + sum of per_n (the n = 0 term is 1)
    double closed_form = 0.0;
    bool degenerate = false;    // C11 = 0 branch
};

// Omega(n) = sum_{E(occ) = n} e^{A E + B N} / prod n_j!  summed for n <= cutoff,
// against the closed form exp(e^{A+B} / (1 - e^A)).
//
// For C11 = 0 every part with three or more vertices carries a vanishing
// factor, leaving singletons (one C) and pairs (two C's, one kernel):
// Omega(n) = sum_{n1 + 2 n2 = n} C^n t^{n1 + n2} / (2^{n2} n1! n2!), total exp(C t + C^2 t / 2).
inline OmegaReport omega_series(const BoundParameters& p, int cutoff = 12) {
    if (!(p.C11 >= 0.0) || !(p.C >= 0.0) || !(p.t >= 0.0)) throw ParameterError("omega_series: negative parameter");
    if (p.C11 >= 2.0) throw DivergenceError("omega_series: C11 / 2 >= 1, series diverges");
    if (cutoff < 1 || cutoff > 40) throw CapacityError("omega_series: cutoff must be in 1..40");
    OmegaReport rep;
    rep.total = 1.0;
    if (p.C11 == 0.0) {
        rep.degenerate = true;
        for (int n = 1; n <= cutoff; ++n) {
            double s = 0.0;
            for (int n2 = 0; 2 * n2 <= n; ++n2) {
                const int n1 = n - 2 * n2;
                s += std::pow(p.C, n) * std::pow(p.t, n1 + n2) / (std::pow(2.0, n2) * factorial(n1) * factorial(n2));
            }
            rep.per_n.push_back(s);
            rep.total += s;
        }
        rep.closed_form = std::exp(p.C * p.t + 0.5 * p.C * p.C * p.t);
        return rep;
    }
    rep.A = std::log(p.C11 / 2.0);
    rep.B = std::log(std::max(p.t, 1.0)) + std::log(std::max(p.C * p.C, 1.0)) +
            std::log(std::max(1.0 / (p.C11 * p.C11), 1.0)) + std::log(2.0);
    for (int n = 1; n <= cutoff; ++n) {
        double s = 0.0;
        for (const auto& occ : occupations_with_E(n)) {
            double denom = 1.0;
            for (int c : occ.counts) denom *= factorial(c);
            s += std::exp(rep.A * occ.E() + rep.B * occ.N()) / denom;
        }
        rep.per_n.push_back(s);
        rep.total += s;
    }
    rep.closed_form = std::exp(std::exp(rep.A + rep.B) / (1.0 - std::exp(rep.A)));
    return rep;
}

// ---------------------------------------------------------------------------
// Double diagrams (two time blocks with cross contractions)

struct DoubleDiagram {
    std::vector<int> r, l;
    Bits kappa, lambda;

    // i-th nonzero position (1-based), as kappa(i) and lambda(i)
    static std::vector<int> nonzero_positions(const Bits& b) {
        std::vector<int> out;
        for (std::size_t k = 0; k < b.size(); ++k)
            if (b[k]) out.push_back(static_cast<int>(k + 1));
        return out;
    }
    std::vector<int> kappa_index() const { return nonzero_positions(kappa); }
    std::vector<int> lambda_index() const { return nonzero_positions(lambda); }

    // Cross contractions (s-block component, t-block component), connected inside out.
    std::vector<std::pair<int, int>> cross_pairs() const {
        const auto ki = kappa_index(), li = lambda_index();
        std::vector<std::pair<int, int>> out;
        for (std::size_t i = 0; i < ki.size() && i < li.size(); ++i) out.emplace_back(ki[i], li[i]);
        return out;
    }
};

inline bool operator==(const DoubleDiagram& a, const DoubleDiagram& b) {
    return a.r == b.r && a.l == b.l && a.kappa == b.kappa && a.lambda == b.lambda;
}

inline std::vector<std::vector<int>> compositions(int n) {
    std::vector<std::vector<int>> out;
    if (n == 0) return {{}};
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int rem) {
        if (rem == 0) {
            out.push_back(cur);
            return;
        }
        for (int k = 1; k <= rem; ++k) {
            cur.push_back(k);
            rec(rem - k);
            cur.pop_back();
        }
    };
    rec(n);
    return out;
}

inline std::vector<Bits> bit_patterns(std::size_t len) {
    std::vector<Bits> out;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << len); ++mask) {
        Bits b(len);
        for (std::size_t k = 0; k < len; ++k) b[k] = (mask >> k) & 1;
        out.push_back(b);
    }
    return out;
}

inline constexpr int kMaxDoubleStreaming = 16;

// Visits every double diagram with |r| = n, |l| = m; the visitor returns false
// to stop early. Streaming allows sizes beyond the materialised cap.
template <class Visitor>
void for_each_double_diagram(int n, int m, Visitor&& visit) {
    if (n < 0 || m < 0) throw ParameterError("for_each_double_diagram: negative size");
    if (n + m > kMaxDoubleStreaming) throw CapacityError("for_each_double_diagram: n + m exceeds 16");
    for (const auto& r : compositions(n))
        for (const auto& l : compositions(m)) {
            const auto ks = bit_patterns(r.size());
            const auto ls = bit_patterns(l.size());
            for (const auto& k : ks)
                for (const auto& lb : ls)
                    if (std::accumulate(k.begin(), k.end(), 0) == std::accumulate(lb.begin(), lb.end(), 0))
                        if (!visit(DoubleDiagram{r, l, k, lb})) return;
        }
}

inline std::vector<DoubleDiagram> enumerate_double_diagrams(int n, int m) {
    if (n + m > kMaxEnumeration) throw CapacityError("enumerate_double_diagrams: n + m exceeds 10");
    std::vector<DoubleDiagram> out;
    for_each_double_diagram(n, m, [&](DoubleDiagram d) {
        out.push_back(std::move(d));
        return true;
    });
    return out;
}

}  // namespace qsde_elim
