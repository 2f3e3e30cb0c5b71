// flows.hpp: Matrix elements of HP cocycles between exponential vectors,
// computed by integrating finite-dimensional flows on the initial space.
//
// The general engine evaluates
//     <u1 (x) e(f1) | V_t^dag (Z (x) W(g_t]) ) U_t | u2 (x) e(f2)>
// for two HP cocycles U, V on the same initial space. Writing the matrix
// element as tr(R_t Z) <e(f1)|e(f2)>, the dual operator obeys
//     R' = (K_U - g^* P_U + m) R + R (K_V' + g^* P_V)^dag + P_U R P_V^dag
// with K_U = G00 + f1^* G10 + f2 G01 + f1^* f2 G11 (blocks of U),
// K_V' = G00 + f2^* G10 + f1 G01 + f2^* f1 G11 (blocks of V),
// P_U = G10 + f2 G11, P_V = G10 + f1 G11 and m = -|g|^2/2 + f1^* g - g^* f2,
// and R_0 = u2 u1^dag.

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "qsde_elim/hp_model.hpp"
#include "qsde_elim/ode.hpp"

namespace qsde_elim {

struct EvansBlocks {
    Matrix G00, G01, G10, G11;
};

inline EvansBlocks evans_blocks(const HPModel& m) {
    const Eigen::Index n = m.dim();
    return {Matrix(-I_unit * m.H - 0.5 * m.L.adjoint() * m.L), Matrix(-m.L.adjoint() * m.S), m.L,
            Matrix(m.S - identity(n))};
}

struct FlowTolerances {
    double rel = 1e-9;     // integrator relative tolerance
    double abs = 1e-12;    // integrator absolute tolerance
    double budget = 1e-6;  // accumulated error estimate above which a result is flagged
};

struct FlowTask {
    HPModel model;
    ExponentialVectorSpec bra, ket;
    std::optional<Matrix> X;
    std::optional<RegulatedFunction> g;
    double horizon = 1.0;
    FlowTolerances tol;
};

struct FlowDiagnostics {
    long steps = 0;
    double est_error = 0.0;
    double osc_top_level_weight = 0.0;
    bool accuracy_flag = false;
    bool truncation_flag = false;
};

struct FlowResult {
    cplx value{};       // raw matrix element
    cplx prefactor{};   // exp(alpha1^* alpha2 + <f1, f2>)
    cplx normalized{};  // value / prefactor
    FlowDiagnostics diagnostics;
};

// Fraction of the Frobenius mass of R in the top oscillator level (rows or columns).
inline double top_level_weight(const Matrix& R, Eigen::Index osc_dim) {
    if (osc_dim <= 1) return 0.0;
    const double total = R.squaredNorm();
    if (total == 0.0) return 0.0;
    double top = 0.0;
    const Eigen::Index n = R.rows();
    for (Eigen::Index i = osc_dim - 1; i < n; i += osc_dim) top += R.row(i).squaredNorm() + R.col(i).squaredNorm();
    return top / total;
}

inline double top_level_weight(const Vector& v, Eigen::Index osc_dim) {
    if (osc_dim <= 1) return 0.0;
    const double total = v.squaredNorm();
    if (total == 0.0) return 0.0;
    double top = 0.0;
    for (Eigen::Index i = osc_dim - 1; i < v.size(); i += osc_dim) top += std::norm(v(i));
    return top / total;
}

namespace detail {

inline std::vector<double> flow_breakpoints(std::initializer_list<const RegulatedFunction*> fs) {
    return merged_breakpoints(fs);
}

inline OdeOptions ode_options(const FlowTolerances& tol) {
    if (!(tol.rel > 0.0) || !(tol.abs > 0.0)) throw ParameterError("flow tolerances must be positive");
    OdeOptions o;
    o.rtol = tol.rel;
    o.atol = tol.abs;
    return o;
}

inline void finish_diagnostics(FlowDiagnostics& d, const OdeStats& st, const FlowTolerances& tol) {
    d.steps = st.steps;
    d.est_error = st.est_error;
    d.accuracy_flag = st.est_error > tol.budget;
    d.truncation_flag = d.osc_top_level_weight > kTopLevelFlag;
}

// Integrates the dual operator R for the sandwich V^dag (Z (x) W(g)) U.
inline Matrix sandwich_flow(const EvansBlocks& gu, const EvansBlocks& gv, Matrix R, const RegulatedFunction& f1,
                            const RegulatedFunction& f2, const RegulatedFunction* g, double t,
                            const FlowTolerances& tol, Eigen::Index osc_dim, FlowDiagnostics& diag) {
    const RegulatedFunction zero;
    const RegulatedFunction& gg = g ? *g : zero;
    const Eigen::Index n = R.rows();
    const Matrix Id = identity(n);
    auto rhs = [&](double s, const Matrix& Y, double anchor) -> Matrix {
        const cplx F1 = f1.on_piece(anchor, s), F2 = f2.on_piece(anchor, s), G = gg.on_piece(anchor, s);
        const cplx F1c = std::conj(F1), F2c = std::conj(F2), Gc = std::conj(G);
        const Matrix PU = gu.G10 + F2 * gu.G11;
        const Matrix PV = gv.G10 + F1 * gv.G11;
        const cplx m = -0.5 * std::norm(G) + F1c * G - Gc * F2;
        const Matrix left = gu.G00 + F1c * gu.G10 + F2 * gu.G01 + F1c * F2 * gu.G11 - Gc * PU + m * Id;
        const Matrix right = gv.G00 + F2c * gv.G10 + F1 * gv.G01 + F2c * F1 * gv.G11 + Gc * PV;
        Matrix out = left * Y;
        out.noalias() += Y * right.adjoint();
        out.noalias() += PU * Y * PV.adjoint();
        return out;
    };
    OdeStats st;
    diag.osc_top_level_weight = top_level_weight(R, osc_dim);
    auto obs = [&](double, const Matrix& Y) {
        diag.osc_top_level_weight = std::max(diag.osc_top_level_weight, top_level_weight(Y, osc_dim));
    };
    Matrix out = integrate(rhs, std::move(R), 0.0, t, flow_breakpoints({&f1, &f2, &gg}), ode_options(tol), st, obs);
    finish_diagnostics(diag, st, tol);
    return out;
}

inline void check_horizon(double t, const char* who) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError(std::string(who) + ": horizon must be > 0");
}

}  // namespace detail

// <psi1 | U_t psi2> for the cocycle of task.model (X and g must be absent).
inline FlowResult cocycle_matrix_element(const FlowTask& task) {
    check_hp(task.model, "cocycle_matrix_element");
    detail::check_horizon(task.horizon, "cocycle_matrix_element");
    if (task.X || task.g) throw ParameterError("cocycle_matrix_element: observable and Weyl insertion not allowed");
    const EvansBlocks G = evans_blocks(task.model);
    const Vector u = initial_vector(task.bra, task.model), v = initial_vector(task.ket, task.model);
    const RegulatedFunction &f1 = task.bra.f, &f2 = task.ket.f;
    auto rhs = [&](double s, const Vector& y, double anchor) -> Vector {
        const cplx F1c = std::conj(f1.on_piece(anchor, s)), F2 = f2.on_piece(anchor, s);
        return G.G00 * y + F1c * (G.G10 * y) + F2 * (G.G01 * y) + (F1c * F2) * (G.G11 * y);
    };
    FlowResult res;
    OdeStats st;
    const Eigen::Index od = task.model.osc_dim;
    res.diagnostics.osc_top_level_weight = top_level_weight(v, od);
    auto obs = [&](double, const Vector& y) {
        res.diagnostics.osc_top_level_weight = std::max(res.diagnostics.osc_top_level_weight, top_level_weight(y, od));
    };
    const Vector k = integrate(rhs, v, 0.0, task.horizon, detail::flow_breakpoints({&f1, &f2}),
                               detail::ode_options(task.tol), st, obs);
    detail::finish_diagnostics(res.diagnostics, st, task.tol);
    res.prefactor = exponential_prefactor(task.bra, task.ket);
    res.value = u.dot(k) * std::exp(inner_product(f1, f2)) * spectator_overlap(task.bra, task.ket, task.model);
    res.normalized = res.value / res.prefactor;
    return res;
}

// <psi1 | U_t^dag (X (x) W(g_t])) U_t | psi2>; X defaults to the identity.
inline FlowResult heisenberg_weyl_matrix_element(const FlowTask& task) {
    check_hp(task.model, "heisenberg_weyl_matrix_element");
    detail::check_horizon(task.horizon, "heisenberg_weyl_matrix_element");
    const Eigen::Index n = task.model.dim();
    const Matrix X = task.X ? *task.X : identity(n);
    if (X.rows() != n || X.cols() != n) throw DimensionError("heisenberg_weyl_matrix_element: X must match model dim");
    const EvansBlocks G = evans_blocks(task.model);
    const Vector u = initial_vector(task.bra, task.model), v = initial_vector(task.ket, task.model);
    FlowResult res;
    const RegulatedFunction* g = task.g ? &*task.g : nullptr;
    const Matrix R = detail::sandwich_flow(G, G, Matrix(v * u.adjoint()), task.bra.f, task.ket.f, g, task.horizon,
                                           task.tol, task.model.osc_dim, res.diagnostics);
    res.prefactor = exponential_prefactor(task.bra, task.ket);
    res.value = (R * X).trace() * std::exp(inner_product(task.bra.f, task.ket.f)) *
                spectator_overlap(task.bra, task.ket, task.model);
    res.normalized = res.value / res.prefactor;
    return res;
}

// <psi1 | V_t^dag U_t | psi2> for the pre-limit model at epsilon, with V the
// oscillator-only evolution.
inline FlowResult interaction_picture_matrix_element(const PrelimModel& m, double epsilon, Eigen::Index osc_dim,
                                                     const ExponentialVectorSpec& bra,
                                                     const ExponentialVectorSpec& ket, double t,
                                                     const FlowTolerances& tol = {}) {
    detail::check_horizon(t, "interaction_picture_matrix_element");
    const HPModel U = prelim_as_hp(m, epsilon, osc_dim);
    const HPModel V = oscillator_only_hp(m.dim(), m.gamma, epsilon, osc_dim);
    check_hp(U, "interaction_picture_matrix_element");
    const Vector u = initial_vector(bra, U), v = initial_vector(ket, U);
    FlowResult res;
    const Matrix R = detail::sandwich_flow(evans_blocks(U), evans_blocks(V), Matrix(v * u.adjoint()), bra.f, ket.f,
                                           nullptr, t, tol, osc_dim, res.diagnostics);
    res.prefactor = exponential_prefactor(bra, ket);
    res.value = R.trace() * std::exp(inner_product(bra.f, ket.f));
    res.normalized = res.value / res.prefactor;
    return res;
}

}  // namespace qsde_elim
