// convergence.hpp: Epsilon sweeps comparing pre-limit matrix elements with
// the eliminated model, scenario builders and the collision cross-check.

#pragma once

#include <cmath>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "qsde_elim/collision.hpp"
#include "qsde_elim/flows.hpp"

namespace qsde_elim {

enum class SweepMode { unitary, heisenberg, weyl };

inline const char* to_string(SweepMode m) {
    switch (m) {
        case SweepMode::unitary: return "unitary";
        case SweepMode::heisenberg: return "heisenberg";
        case SweepMode::weyl: return "weyl";
    }
    return "?";
}

inline SweepMode parse_sweep_mode(const std::string& s) {
    if (s == "unitary") return SweepMode::unitary;
    if (s == "heisenberg") return SweepMode::heisenberg;
    if (s == "weyl") return SweepMode::weyl;
    throw ParameterError("unknown sweep mode '" + s + "'");
}

struct Scenario {
    std::string name;
    PrelimModel prelim;
    ExponentialVectorSpec bra, ket;
    std::optional<Matrix> X;  // system observable
    std::optional<RegulatedFunction> g;
    double horizon = 1.0;
    std::vector<double> epsilons{0.2, 0.1, 0.05, 0.025};
    std::vector<Eigen::Index> osc_dims{8, 10, 12, 16};
};

inline void validate_scenario(const Scenario& s, SweepMode mode) {
    require_valid(s.prelim, "scenario");
    const Eigen::Index d = s.prelim.dim();
    if (s.bra.v.size() != d || s.ket.v.size() != d) throw DimensionError("scenario: bra/ket do not match the system");
    if (!(s.horizon > 0.0)) throw ParameterError("scenario: horizon must be > 0");
    if (s.epsilons.empty()) throw ParameterError("scenario: no epsilons");
    if (s.osc_dims.size() != s.epsilons.size()) throw ParameterError("scenario: osc_dims and epsilons differ in length");
    for (std::size_t i = 0; i < s.epsilons.size(); ++i) {
        if (!(s.epsilons[i] > 0.0)) throw ParameterError("scenario: epsilons must be positive");
        if (i > 0 && !(s.epsilons[i] < s.epsilons[i - 1]))
            throw ParameterError("scenario: epsilons must be strictly decreasing");
    }
    for (const RegulatedFunction* f : {&s.bra.f, &s.ket.f, s.g ? &*s.g : nullptr}) {
        if (f && f->jumps_at(s.horizon)) throw AmbiguityError("scenario: horizon sits on a discontinuity");
    }
    if (s.X && (s.X->rows() != d || s.X->cols() != d)) throw DimensionError("scenario: X must be square of system dim");
    if (mode == SweepMode::heisenberg && !s.X) throw ParameterError("scenario: heisenberg mode needs an observable");
    if (mode == SweepMode::weyl && !s.g) throw ParameterError("scenario: weyl mode needs g");
}

struct SweepRow {
    double epsilon = 0.0;
    Eigen::Index osc_dim = 0;
    cplx prelim_value{};
    cplx limit_value{};
    double abs_err = 0.0;
    double rel_err = 0.0;
    FlowDiagnostics diagnostics;
    bool retried = false;
};

struct ConvergenceReport {
    std::string name;
    SweepMode mode = SweepMode::unitary;
    cplx limit_value{};
    std::vector<SweepRow> rows;
    double slope = NAN;  // least-squares slope of log(abs_err) against log(epsilon)
    bool monotone = false;
    double final_rel_err = NAN;
    bool pass = false;
    std::vector<std::string> warnings;
};

constexpr double kSweepRelTarget = 0.02;

// Runs fn(i) for i in [0, n) on up to `jobs` threads; results keep index order.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, int jobs, const Fn& fn) {
    std::vector<T> out(n);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(jobs)) {
        std::vector<std::future<T>> batch;
        for (std::size_t i = start; i < std::min(n, start + static_cast<std::size_t>(jobs)); ++i)
            batch.push_back(std::async(std::launch::async, [&fn, i] { return fn(i); }));
        for (std::size_t k = 0; k < batch.size(); ++k) out[start + k] = batch[k].get();
    }
    return out;
}

// Limit-model matrix element; the Weyl argument enters with its sign flipped.
inline FlowResult limit_matrix_element(const Scenario& s, SweepMode mode, const FlowTolerances& tol = {}) {
    FlowTask task{hp_from_limit(eliminate(s.prelim)), s.bra, s.ket, {}, {}, s.horizon, tol};
    if (mode == SweepMode::unitary) return cocycle_matrix_element(task);
    task.X = s.X;
    if (mode == SweepMode::weyl) task.g = s.g->scaled(-1.0);
    return heisenberg_weyl_matrix_element(task);
}

inline FlowResult prelim_matrix_element(const Scenario& s, SweepMode mode, double epsilon, Eigen::Index osc_dim,
                                        const FlowTolerances& tol = {}) {
    if (mode == SweepMode::unitary)
        return interaction_picture_matrix_element(s.prelim, epsilon, osc_dim, s.bra, s.ket, s.horizon, tol);
    FlowTask task{prelim_as_hp(s.prelim, epsilon, osc_dim), s.bra, s.ket, {}, {}, s.horizon, tol};
    task.X = kron(*s.X, identity(osc_dim));
    if (mode == SweepMode::weyl) task.g = s.g;
    return heisenberg_weyl_matrix_element(task);
}

inline double fitted_slope(const std::vector<SweepRow>& rows) {
    std::vector<double> xs, ys;
    for (const auto& r : rows)
        if (r.abs_err > 0.0) {
            xs.push_back(std::log(r.epsilon));
            ys.push_back(std::log(r.abs_err));
        }
    if (xs.size() < 2) return NAN;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= xs.size();
    my /= ys.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
    return sxx > 0 ? sxy / sxx : NAN;
}

inline ConvergenceReport sweep_epsilon(const Scenario& s, SweepMode mode, int jobs = 1,
                                       const FlowTolerances& tol = {}) {
    validate_scenario(s, mode);
    ConvergenceReport rep;
    rep.name = s.name;
    rep.mode = mode;
    rep.limit_value = limit_matrix_element(s, mode, tol).value;
    const Eigen::Index d = s.prelim.dim();
    const Eigen::Index max_osc = kMaxFlowDim / d;

    struct Outcome {
        SweepRow row;
        std::string warning;
    };
    auto run = [&](std::size_t i) {
        Outcome o;
        SweepRow& row = o.row;
        row.epsilon = s.epsilons[i];
        row.osc_dim = s.osc_dims[i];
        FlowResult fr = prelim_matrix_element(s, mode, row.epsilon, row.osc_dim, tol);
        if (fr.diagnostics.truncation_flag) {
            const Eigen::Index bigger = std::min(row.osc_dim + 8, max_osc);
            if (bigger == row.osc_dim)
                throw AccuracyError("sweep_epsilon: truncation leak at epsilon " + std::to_string(row.epsilon) +
                                    " and no room to enlarge the oscillator");
            o.warning = "epsilon " + std::to_string(row.epsilon) + ": top-level weight " +
                        std::to_string(fr.diagnostics.osc_top_level_weight) + ", retried with osc_dim " +
                        std::to_string(bigger);
            row.osc_dim = bigger;
            row.retried = true;
            fr = prelim_matrix_element(s, mode, row.epsilon, row.osc_dim, tol);
            if (fr.diagnostics.truncation_flag)
                throw AccuracyError("sweep_epsilon: truncation leak persists at epsilon " +
                                    std::to_string(row.epsilon));
        }
        row.prelim_value = fr.value;
        row.diagnostics = fr.diagnostics;
        return o;
    };
    const auto outcomes = parallel_map<Outcome>(s.epsilons.size(), jobs, run);

    const double scale = std::abs(rep.limit_value);
    const double floor = 100.0 * tol.rel * std::max(1.0, scale);
    for (const auto& o : outcomes) {
        SweepRow row = o.row;
        if (!o.warning.empty()) rep.warnings.push_back(o.warning);
        if (row.diagnostics.accuracy_flag)
            rep.warnings.push_back("epsilon " + std::to_string(row.epsilon) + ": integrator error estimate " +
                                   std::to_string(row.diagnostics.est_error) + " above budget");
        row.limit_value = rep.limit_value;
        row.abs_err = std::abs(row.prelim_value - rep.limit_value);
        row.rel_err = scale > 0.0 ? row.abs_err / scale : row.abs_err;
        if (!std::isfinite(row.abs_err)) throw NumericError("sweep_epsilon: non-finite error");
        rep.rows.push_back(row);
    }
    // strictly decreasing, where rows already inside the integrator noise floor count as converged
    rep.monotone = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        const double prev = rep.rows[i - 1].abs_err, cur = rep.rows[i].abs_err;
        if (!(cur < prev) && !(cur <= floor && prev <= floor)) rep.monotone = false;
    }
    rep.final_rel_err = rep.rows.back().rel_err;
    rep.slope = fitted_slope(rep.rows);
    rep.pass = rep.monotone && rep.final_rel_err < kSweepRelTarget;
    return rep;
}

// ---------------------------------------------------------------- scenarios

// Spin operators for total spin J = j2 / 2 in the basis |J, J>, ..., |J, -J>.
struct SpinOperators {
    Matrix Fz, Fx, Fy;
};

inline SpinOperators spin_operators(int j2) {
    if (j2 < 1) throw ParameterError("spin_operators: 2J must be >= 1");
    const Eigen::Index n = j2 + 1;
    const double J = 0.5 * j2;
    Matrix Fz = Matrix::Zero(n, n), Fp = Matrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double m = J - static_cast<double>(k);
        Fz(k, k) = m;
        if (k > 0) Fp(k - 1, k) = std::sqrt(J * (J + 1) - m * (m + 1));  // F+ |m> = c |m+1>
    }
    const Matrix Fm = Fp.adjoint();
    return {Fz, Matrix(0.5 * (Fp + Fm)), Matrix((Fp - Fm) / cplx(0.0, 2.0))};
}

inline ExponentialVectorSpec basis_spec(Eigen::Index d, Eigen::Index k) { return {Vector::Unit(d, k), 0.0, {}}; }

// Bounded surrogate of a dispersive atom-cavity model: E11 = -(g0^2/Delta) diag(c_i)
// with c_i = cos^2(pi i / levels), no emission channel, E00 = diag(0, 1, ..).
inline Scenario scenario_doherty(double kappa, double g0, double Delta, int levels) {
    if (levels < 1) throw ParameterError("scenario_doherty: levels must be >= 1");
    if (!(kappa > 0.0) || Delta == 0.0) throw ParameterError("scenario_doherty: need kappa > 0, Delta != 0");
    const double s = g0 * g0 / Delta;
    if (!(std::abs(s) < kappa)) throw PreconditionError("scenario_doherty: requires g0^2/Delta < kappa");
    Scenario sc;
    sc.name = "doherty";
    sc.prelim = PrelimModel::zero(levels, 2.0 * kappa);
    Matrix diag = Matrix::Zero(levels, levels);
    for (int i = 0; i < levels; ++i) {
        const double c = std::cos(M_PI * i / levels);
        sc.prelim.E11(i, i) = -s * c * c;
        sc.prelim.E00(i, i) = static_cast<double>(i);
        diag(i, i) = c * c;
    }
    sc.bra = sc.ket = basis_spec(levels, 0);
    sc.X = diag;
    return sc;
}

// Collective spin J = j2 / 2 dispersively coupled to a driven mode:
// E11 = chi Fz, E10 = E01 = drive I, E00 given (zero by default).
inline Scenario scenario_spin(int j2, double chi, double drive, double gamma,
                              const std::optional<Matrix>& E00 = std::nullopt) {
    const auto ops = spin_operators(j2);
    if (!(std::abs(chi) * 0.5 * j2 < 0.5 * gamma)) throw PreconditionError("scenario_spin: requires chi J < gamma/2");
    const Eigen::Index n = j2 + 1;
    Scenario sc;
    sc.name = "spin";
    sc.prelim = PrelimModel::zero(n, gamma);
    sc.prelim.E11 = chi * ops.Fz;
    sc.prelim.E10 = drive * identity(n);
    sc.prelim.E01 = sc.prelim.E10;
    if (E00) {
        if (E00->rows() != n || E00->cols() != n) throw DimensionError("scenario_spin: E00 has the wrong size");
        sc.prelim.E00 = *E00;
    }
    sc.bra = sc.ket = basis_spec(n, 0);
    sc.X = Matrix(2.0 * ops.Fz);
    return sc;
}

// ----------------------------------------------------- alpha independence

struct AlphaReport {
    std::vector<cplx> alphas;                // ket oscillator amplitudes
    std::vector<double> epsilons;            // largest and smallest of the sweep
    std::vector<std::vector<cplx>> values;   // [epsilon][alpha], prefactor-normalised
    std::vector<double> spreads;             // max pairwise deviation per epsilon
    double final_rel_err = NAN;              // of the sweep at the scenario's own alpha
    bool within_bound = false;               // spread at smallest epsilon <= 2 final_rel_err
    bool shrinks = false;                    // spread decreases from largest to smallest epsilon
};

inline double max_pairwise(const std::vector<cplx>& v) {
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j) m = std::max(m, std::abs(v[i] - v[j]));
    return m;
}

inline AlphaReport alpha_independence_check(const Scenario& s, const std::vector<cplx>& alphas, int jobs = 1,
                                            const FlowTolerances& tol = {}) {
    validate_scenario(s, SweepMode::unitary);
    if (alphas.size() < 2) throw ParameterError("alpha_independence_check: need at least two amplitudes");
    AlphaReport rep;
    rep.alphas = alphas;
    const std::size_t last = s.epsilons.size() - 1;
    const std::vector<std::size_t> idx = last > 0 ? std::vector<std::size_t>{0, last} : std::vector<std::size_t>{0};
    const std::size_t na = alphas.size();
    auto run = [&](std::size_t k) {
        const std::size_t e = idx[k / na];
        Scenario sc = s;
        sc.ket.alpha = alphas[k % na];
        Eigen::Index osc = s.osc_dims[e];
        FlowResult r = prelim_matrix_element(sc, SweepMode::unitary, s.epsilons[e], osc, tol);
        if (r.diagnostics.truncation_flag) {
            osc = std::min(osc + 8, kMaxFlowDim / s.prelim.dim());
            r = prelim_matrix_element(sc, SweepMode::unitary, s.epsilons[e], osc, tol);
        }
        return r.normalized;
    };
    const auto flat = parallel_map<cplx>(idx.size() * na, jobs, run);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        rep.epsilons.push_back(s.epsilons[idx[k]]);
        rep.values.emplace_back(flat.begin() + static_cast<long>(k * na), flat.begin() + static_cast<long>((k + 1) * na));
        rep.spreads.push_back(max_pairwise(rep.values.back()));
    }
    rep.final_rel_err = sweep_epsilon(s, SweepMode::unitary, jobs, tol).final_rel_err;
    rep.within_bound = rep.spreads.back() <= 2.0 * rep.final_rel_err;
    rep.shrinks = rep.spreads.size() > 1 && rep.spreads.back() < rep.spreads.front();
    return rep;
}

// ------------------------------------------------- collision cross-check

struct CrossCheckReport {
    std::string label;
    cplx flow_value{};
    RefinementReport collision;
    double rel_diff = NAN;    // flow against the finest collision value
    double min_ratio = NAN;   // smallest refinement factor per halving
    bool pass = false;
};

constexpr double kCrossCheckTol = 1e-3;
constexpr double kRefinementFactor = 1.8;

inline CrossCheckReport finish_cross_check(std::string label, cplx flow, RefinementReport rr) {
    CrossCheckReport c;
    c.label = std::move(label);
    c.flow_value = flow;
    c.collision = std::move(rr);
    c.rel_diff = std::abs(c.collision.values.back() - flow) / std::max(std::abs(flow), 1e-300);
    c.min_ratio = INFINITY;
    for (double r : c.collision.ratios) c.min_ratio = std::min(c.min_ratio, r);
    c.pass = c.rel_diff < kCrossCheckTol && c.min_ratio >= kRefinementFactor;
    return c;
}

// Pre-limit value at (epsilon, osc_dim) by flow and by the collision model at
// dt0, dt0/2, ... (levels values).
inline CrossCheckReport cross_check_prelim(const Scenario& s, SweepMode mode, double epsilon, Eigen::Index osc_dim,
                                           double dt0 = 4e-4, int levels = 4, int bin_dim = 2) {
    validate_scenario(s, mode);
    const cplx flow = prelim_matrix_element(s, mode, epsilon, osc_dim).value;
    const HPModel U = prelim_as_hp(s.prelim, epsilon, osc_dim);
    std::optional<Matrix> X;
    std::optional<RegulatedFunction> g;
    std::optional<HPModel> V;
    if (mode == SweepMode::unitary) V = oscillator_only_hp(s.prelim.dim(), s.prelim.gamma, epsilon, osc_dim);
    else X = kron(*s.X, identity(osc_dim));
    if (mode == SweepMode::weyl) g = s.g;
    auto sim = [&](double dt) {
        return simulate(U, s.bra, s.ket, X, g, s.horizon, {dt, bin_dim}, V ? &*V : nullptr);
    };
    return finish_cross_check(s.name + "/" + to_string(mode) + "/prelim eps=" + std::to_string(epsilon), flow,
                              refine(sim, dt0, levels));
}

// Limit-model value by flow and by the collision model.
inline CrossCheckReport cross_check_limit(const Scenario& s, SweepMode mode, double dt0 = 4e-4, int levels = 4,
                                          int bin_dim = 2) {
    validate_scenario(s, mode);
    const cplx flow = limit_matrix_element(s, mode).value;
    const HPModel L = hp_from_limit(eliminate(s.prelim));
    const HPModel trivial{identity(L.dim()), Matrix::Zero(L.dim(), L.dim()), Matrix::Zero(L.dim(), L.dim()), 1};
    std::optional<Matrix> X;
    std::optional<RegulatedFunction> g;
    if (mode != SweepMode::unitary) X = s.X;
    if (mode == SweepMode::weyl) g = s.g->scaled(-1.0);
    auto sim = [&](double dt) {
        return simulate(L, s.bra, s.ket, X, g, s.horizon, {dt, bin_dim},
                        mode == SweepMode::unitary ? &trivial : nullptr);
    };
    return finish_cross_check(s.name + "/" + to_string(mode) + "/limit", flow, refine(sim, dt0, levels));
}

}  // namespace qsde_elim
