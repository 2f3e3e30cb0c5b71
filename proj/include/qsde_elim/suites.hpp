// suites.hpp: Named residual checks over the algebraic, kernel and diagram
// layers, used by the command-line verify and diagrams runs.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "qsde_elim/dyson.hpp"
#include "qsde_elim/elimination.hpp"
#include "qsde_elim/regulated.hpp"

namespace qsde_elim {

struct Check {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

inline Check below(std::string name, double value, double threshold) {
    return {std::move(name), value, threshold, std::isfinite(value) && value < threshold};
}

inline bool all_pass(const std::vector<Check>& cs) {
    for (const auto& c : cs)
        if (!c.pass) return false;
    return true;
}

// Algebraic identities of the eliminated model.
inline std::vector<Check> elimination_checks(const PrelimModel& m, double tol = 1e-10) {
    std::vector<Check> out;
    const auto rep = validate_prelim(m);
    out.push_back({"validate.margin", rep.margin, 0.0, rep.valid});
    if (!rep.valid) return out;
    const LimitModel lm = eliminate(m);
    const char* hp[] = {"hp.S_dag_S", "hp.S_S_dag", "hp.H_hermitian", "hp.L00_identity"};
    const auto hr = hp_unitarity_residuals(lm);
    for (int i = 0; i < 4; ++i) out.push_back(below(hp[i], hr[i], tol));
    const char* ev[] = {"evans.L11", "evans.L10", "evans.L01", "evans.L00"};
    const auto er = evans_consistency_residuals(evans_matrix(m), lm);
    for (int i = 0; i < 4; ++i) out.push_back(below(ev[i], er[i], tol));
    if (spectral_norm(m.E11) <= 0.45 * m.gamma) {
        const RegulatedFunction f1 = RegulatedFunction::constant(cplx(0.3, -0.2), 0.0, 1.0);
        const RegulatedFunction f2 = RegulatedFunction::constant(cplx(-0.1, 0.4), 0.0, 1.0);
        const auto rr = resummation_residual(m, f1, f2, 0.5, 80);
        out.push_back(below("resummation.series", rr.series_residual, 1e-9));
        out.push_back(below("resummation.bridge", rr.bridge_residual, tol));
    }
    return out;
}

// Kernel normalisation, convolution identity and the midpoint law.
inline std::vector<Check> regulated_checks(double gamma) {
    std::vector<Check> out;
    double mass = 0.0, conv = 0.0;
    for (double eps : {0.1, 0.01, 0.001}) {
        const OUKernel K(gamma, eps);
        mass = std::max(mass, std::abs(kernel_mass(K, -INFINITY, INFINITY) - 1.0));
        for (double t : {0.2, 0.7, 1.3})
            for (double tau : {0.05, 0.4, 1.0}) conv = std::max(conv, convolution_identity_residual(K, t, tau));
    }
    out.push_back(below("kernel.unit_mass", mass, 1e-12));
    out.push_back(below("kernel.convolution", conv, 1e-8));
    const auto g = RegulatedFunction::from_segments({{0.0, 0.5, {cplx(1.0, 0.0)}}, {0.5, 1.0, {cplx(-0.5, 0.5)}}});
    const cplx target = 0.5 * (g.right_limit(0.5) + g.left_limit(0.5));
    double prev = INFINITY, last = 0.0;
    bool monotone = true;
    for (double eps : {0.1, 0.01, 0.001}) {
        const OUKernel K(gamma, eps);
        last = std::abs(0.5 * (smooth(g, Side::plus, 0.5, K) + smooth(g, Side::minus, 0.5, K)) - target);
        if (prev > 1e-15 && !(last < prev)) monotone = false;
        prev = last;
    }
    out.push_back({"kernel.midpoint_law", last, 1e-6, monotone && last < 1e-6});
    return out;
}

// Wick moments against the normal-ordering oracle and Bell counts.
inline std::vector<Check> wick_checks(int cases, int n_max, unsigned seed) {
    std::vector<Check> out;
    std::uint64_t bell_bad = 0;
    for (int n = 1; n <= n_max; ++n)
        if (enumerate_partitions(n).size() != bell_number(n)) ++bell_bad;
    out.push_back({"dyson.bell_counts", static_cast<double>(bell_bad), 1.0, bell_bad == 0});
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> nd(1, n_max), bit(0, 1);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        const int n = nd(rng);
        Bits a(n), b(n);
        for (int i = 0; i < n; ++i) a[i] = bit(rng), b[i] = bit(rng);
        std::vector<double> ts(n);
        double acc = 0.0;
        for (auto& x : ts) acc += 0.05 + 0.4 * ud(rng), x = acc;
        const OUKernel K(0.5 + 3.0 * ud(rng), 0.05 + 0.5 * ud(rng));
        const double w = wick_vacuum_moment(a, b, ts, K), o = normal_order_oracle(a, b, ts, K);
        worst = std::max(worst, std::abs(w - o) / std::max(1.0, std::abs(o)));
    }
    out.push_back(below("dyson.wick_vs_oracle", worst, 1e-12));
    return out;
}

struct DiagramSuiteConfig {
    double gamma = 2.0;
    std::vector<double> t_grid{0.5, 1.0, 2.0};
    std::vector<double> eps_grid{0.1, 0.03, 0.01};
    int pule_max_E = 5;
    int limit_max_n = 4;
    std::vector<double> limit_eps_factors{0.3, 0.1, 0.03, 0.01, 0.003, 0.001};
    double limit_t = 1.0;
    BoundParameters omega{1.0, 1.0, 1.0};
    int omega_cutoff = 12;
    double omega_tol = 1e-4;
};

inline std::vector<Check> diagram_checks(const DiagramSuiteConfig& c) {
    std::vector<Check> out;
    int violations = 0, cases = 0;
    double worst_ratio = 0.0;
    for (double t : c.t_grid)
        for (double eps : c.eps_grid) {
            const OUKernel K(c.gamma, eps);
            for (int E = 1; E <= c.pule_max_E; ++E)
                for (const auto& occ : occupations_with_E(E)) {
                    const auto r = pule_check(occ, t, K);
                    ++cases;
                    if (!r.holds) ++violations;
                    worst_ratio = std::max(worst_ratio, r.lhs / r.rhs);
                }
        }
    out.push_back({"pule.violations(" + std::to_string(cases) + " cases)", static_cast<double>(violations), 1.0,
                   violations == 0});
    out.push_back({"pule.max_lhs_over_rhs", worst_ratio, 1.0, worst_ratio <= 1.0 + 1e-12});

    std::vector<double> eps;
    for (double f : c.limit_eps_factors) eps.push_back(f * c.limit_t);
    int failed = 0, total = 0;
    double worst_tc = 0.0, worst_vanish = 0.0;
    for (int n = 1; n <= c.limit_max_n; ++n)
        for (const auto& d : enumerate_partitions(n)) {
            const auto r = diagram_limit_sweep(d, c.limit_t, c.gamma, eps);
            ++total;
            if (!r.pass) ++failed;
            if (r.time_consecutive) worst_tc = std::max(worst_tc, r.final_rel_err);
            else worst_vanish = std::max(worst_vanish, r.vanishing_ratio);
        }
    out.push_back({"limit.failed_diagrams(" + std::to_string(total) + ")", static_cast<double>(failed), 1.0,
                   failed == 0});
    out.push_back(below("limit.time_consecutive_rel_err", worst_tc, 0.01));
    out.push_back(below("limit.vanishing_ratio", worst_vanish, 0.05));

    const auto om = omega_series(c.omega, c.omega_cutoff);
    out.push_back(below("omega.partial_sum_gap", std::abs(om.total - om.closed_form), c.omega_tol));
    return out;
}

}  // namespace qsde_elim
