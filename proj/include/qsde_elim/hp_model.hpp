// hp_model.hpp: Hudson-Parthasarathy triples and exponential-vector boundary
// data shared by the flow integrator and the collision simulator.

#pragma once

#include <string>

#include "qsde_elim/elimination.hpp"

namespace qsde_elim {

constexpr Eigen::Index kMaxFlowDim = 256;
constexpr double kTopLevelFlag = 1e-6;

struct HPModel {
    Matrix S, L, H;
    Eigen::Index osc_dim = 1;  // > 1 when the last tensor factor is a truncated oscillator

    Eigen::Index dim() const { return S.rows(); }
    Eigen::Index sys_dim() const { return dim() / osc_dim; }
};

inline HPModel hp_from_limit(const LimitModel& lm) { return {lm.S, lm.L, lm.H, 1}; }

inline void check_hp(const HPModel& m, const char* who) {
    const Eigen::Index n = m.dim();
    if (n == 0 || m.S.cols() != n || m.L.rows() != n || m.L.cols() != n || m.H.rows() != n || m.H.cols() != n)
        throw DimensionError(std::string(who) + ": S, L, H must be square of equal size");
    if (m.osc_dim < 1 || n % m.osc_dim != 0) throw DimensionError(std::string(who) + ": osc_dim does not divide dim");
    if (n > kMaxFlowDim) throw CapacityError(std::string(who) + ": model dimension exceeds 256");
    for (double r : hp_unitarity_residuals(LimitModel{m.S, m.L, m.H}))
        if (!(r < 1e-8)) throw PreconditionError(std::string(who) + ": HP unitarity residual " + std::to_string(r));
}

// Joint system (x) oscillator model at finite epsilon.
inline HPModel prelim_as_hp(const PrelimModel& m, double epsilon, Eigen::Index osc_dim) {
    require_valid(m, "prelim_as_hp");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ParameterError("prelim_as_hp: epsilon must be > 0");
    if (osc_dim < 4) throw ParameterError("prelim_as_hp: osc_dim must be >= 4");
    const Eigen::Index d = m.dim();
    if (d * osc_dim > kMaxFlowDim) throw CapacityError("prelim_as_hp: d * osc_dim exceeds 256");
    const auto osc = truncated_oscillator(osc_dim);
    const Matrix Is = identity(d), Io = identity(osc_dim);
    HPModel hp;
    hp.osc_dim = osc_dim;
    hp.S = identity(d * osc_dim);
    hp.L = std::sqrt(m.gamma / epsilon) * kron(Is, osc.b);
    hp.H = (1.0 / epsilon) * kron(m.E11, osc.n_op) +
           (1.0 / std::sqrt(epsilon)) * (kron(m.E10, osc.b_dag) + kron(m.E01, osc.b)) + kron(m.E00, Io);
    return hp;
}

// Oscillator-reservoir evolution alone (S = I, L = sqrt(gamma/epsilon) b,
// H = 0), ampliated to system (x) oscillator.
inline HPModel oscillator_only_hp(Eigen::Index sys_dim, double gamma, double epsilon, Eigen::Index osc_dim) {
    if (!(epsilon > 0.0) || !(gamma > 0.0)) throw ParameterError("oscillator_only_hp: gamma, epsilon must be > 0");
    if (sys_dim * osc_dim > kMaxFlowDim) throw CapacityError("oscillator_only_hp: dimension exceeds 256");
    const auto osc = truncated_oscillator(osc_dim);
    HPModel hp;
    hp.osc_dim = osc_dim;
    hp.S = identity(sys_dim * osc_dim);
    hp.L = std::sqrt(gamma / epsilon) * kron(identity(sys_dim), osc.b);
    hp.H = Matrix::Zero(sys_dim * osc_dim, sys_dim * osc_dim);
    return hp;
}

// u (x) e(alpha) (x) e(f): system vector, oscillator amplitude, field profile.
struct ExponentialVectorSpec {
    Vector v;
    cplx alpha{};
    RegulatedFunction f;
};

inline cplx exponential_prefactor(const ExponentialVectorSpec& bra, const ExponentialVectorSpec& ket) {
    return std::exp(std::conj(bra.alpha) * ket.alpha + inner_product(bra.f, ket.f));
}

// Initial-space vector: v (x) |alpha> when the model carries an oscillator,
// otherwise v alone (the oscillator is then a spectator).
inline Vector initial_vector(const ExponentialVectorSpec& s, const HPModel& m) {
    if (s.v.size() != m.sys_dim()) throw DimensionError("initial_vector: vector does not match the system dimension");
    if (m.osc_dim == 1) return s.v;
    return kron(s.v, coherent_vector(s.alpha, m.osc_dim));
}

// Spectator factor <alpha1|alpha2> that the initial-space overlap does not carry.
inline cplx spectator_overlap(const ExponentialVectorSpec& bra, const ExponentialVectorSpec& ket, const HPModel& m) {
    return m.osc_dim == 1 ? std::exp(std::conj(bra.alpha) * ket.alpha) : cplx(1.0);
}

}  // namespace qsde_elim
