// collision.hpp: Repeated-interaction simulator of HP cocycles.
//
// The field is cut into bins of width dt, each a truncated oscillator of
// bin_dim levels. One slot couples the initial space to one bin through a
// first-order block matrix made unitary by polar decomposition. Matrix
// elements between coherent bin states are contracted backwards in time, one
// bin at a time. Slot matrices use bin-major ordering: index = k * dim + i for
// bin level k and initial-space index i.

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "qsde_elim/hp_model.hpp"

namespace qsde_elim {

struct SlotUnitary {
    double dt = 0.0;
    int bin_dim = 2;
    Eigen::Index model_dim = 0;
    Matrix U;

    // <k| U |l> as an operator on the initial space
    Matrix block(int k, int l) const {
        return U.block(k * model_dim, l * model_dim, model_dim, model_dim);
    }
};

inline SlotUnitary slot_unitary(const HPModel& m, double dt, int bin_dim = 2) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("slot_unitary: dt must be > 0");
    if (bin_dim != 2 && bin_dim != 3) throw ParameterError("slot_unitary: bin_dim must be 2 or 3");
    check_hp(m, "slot_unitary");
    const Eigen::Index n = m.dim();
    const Matrix In = identity(n);
    const auto bin = truncated_oscillator(bin_dim);
    const Matrix Ib = identity(bin_dim);
    const Matrix drift = -I_unit * m.H - 0.5 * m.L.adjoint() * m.L;
    // A = I + sqrt(dt) (b^dag (x) L - b (x) L^dag) + dt I (x) drift
    const Matrix A = identity(bin_dim * n) +
                     std::sqrt(dt) * (kron(bin.b_dag, m.L) - kron(bin.b, Matrix(m.L.adjoint()))) + dt * kron(Ib, drift);
    // gauge acts once per photon in the bin
    Matrix gauge = Matrix::Zero(bin_dim * n, bin_dim * n);
    Matrix Sk = In;
    for (int k = 0; k < bin_dim; ++k) {
        gauge.block(k * n, k * n, n, n) = Sk;
        Sk = m.S * Sk;
    }
    const Matrix M = A * gauge;
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > 1e-12 * sv(0)))
        throw NumericError("slot_unitary: block matrix is rank deficient");
    SlotUnitary out;
    out.dt = dt;
    out.bin_dim = bin_dim;
    out.model_dim = n;
    out.U = svd.matrixU() * svd.matrixV().adjoint();
    return out;
}

// Truncated unnormalised coherent bin state.
inline Vector bin_state(cplx beta, int bin_dim) { return coherent_vector(beta, bin_dim); }

// exp(g b^dag - g^* b) on the truncated bin.
inline Matrix bin_weyl(cplx g, int bin_dim) {
    const auto bin = truncated_oscillator(bin_dim);
    const Matrix Kg = g * bin.b_dag - std::conj(g) * bin.b;
    return Kg.exp();
}

struct CollisionOptions {
    double dt = 1e-4;
    int bin_dim = 2;
};

namespace detail {

// T = U (I (x) |beta>), returned as bin_dim stacked blocks T_k = sum_l <k|U|l> beta_l.
inline std::vector<Matrix> slot_on_bin_state(const SlotUnitary& s, const Vector& beta) {
    std::vector<Matrix> T(s.bin_dim, Matrix::Zero(s.model_dim, s.model_dim));
    for (int k = 0; k < s.bin_dim; ++k)
        for (int l = 0; l < s.bin_dim; ++l)
            if (beta(l) != cplx{}) T[k] += beta(l) * s.block(k, l);
    return T;
}

}  // namespace detail

// <psi1 | V^dag (X (x) W(g_t])) U | psi2> by sequential contraction over bins.
// U is generated by `model`; V by `bra_model` when given, otherwise V = U.
// The result follows the raw-value convention of the flow integrator.
inline cplx simulate(const HPModel& model, const ExponentialVectorSpec& bra, const ExponentialVectorSpec& ket,
                     const std::optional<Matrix>& X, const std::optional<RegulatedFunction>& g, double t,
                     const CollisionOptions& opt = {}, const HPModel* bra_model = nullptr) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError("simulate: horizon must be > 0");
    if (!(opt.dt > 0.0)) throw ParameterError("simulate: dt must be > 0");
    const double bins_real = t / opt.dt;
    if (bins_real > 1e6) throw CapacityError("simulate: t / dt exceeds 1e6");
    const long nbins = std::max(1L, std::lround(bins_real));
    const double dt = t / static_cast<double>(nbins);
    const HPModel& vm = bra_model ? *bra_model : model;
    if (vm.dim() != model.dim() || vm.osc_dim != model.osc_dim)
        throw DimensionError("simulate: bra model does not match ket model");
    const Eigen::Index n = model.dim();
    const Matrix Xm = X ? *X : identity(n);
    if (Xm.rows() != n || Xm.cols() != n) throw DimensionError("simulate: X must match model dim");

    const SlotUnitary su = slot_unitary(model, dt, opt.bin_dim);
    const SlotUnitary sv = bra_model ? slot_unitary(vm, dt, opt.bin_dim) : su;
    const int b = opt.bin_dim;
    const double sq = std::sqrt(dt);

    Matrix Y = Xm;
    cplx bin_overlaps = 1.0;
    for (long k = nbins - 1; k >= 0; --k) {
        const double s = static_cast<double>(k) * dt;
        const Vector b1 = bin_state(bra.f(s) * sq, b), b2 = bin_state(ket.f(s) * sq, b);
        bin_overlaps *= b1.dot(b2);
        const auto TU = detail::slot_on_bin_state(su, b2);
        const auto TV = detail::slot_on_bin_state(sv, b1);
        const cplx gk = g ? (*g)(s) * sq : cplx{};
        Matrix next = Matrix::Zero(n, n);
        if (gk == cplx{}) {
            for (int i = 0; i < b; ++i) next.noalias() += TV[i].adjoint() * (Y * TU[i]);
        } else {
            const Matrix B = bin_weyl(gk, b);
            for (int i = 0; i < b; ++i) {
                Matrix C = Matrix::Zero(n, n);
                for (int j = 0; j < b; ++j) C += B(i, j) * TU[j];
                next.noalias() += TV[i].adjoint() * (Y * C);
            }
        }
        Y = std::move(next);
    }
    const Vector u = initial_vector(bra, model), v = initial_vector(ket, model);
    const cplx field = std::exp(inner_product(bra.f, ket.f)) / bin_overlaps;
    return u.dot(Y * v) * field * spectator_overlap(bra, ket, model);
}

// Values at dt, dt/2, dt/4, ... and the ratios of successive differences.
struct RefinementReport {
    std::vector<double> dts;
    std::vector<cplx> values;
    std::vector<double> ratios;  // |v(dt_k) - v(dt_{k+1})| / |v(dt_{k+1}) - v(dt_{k+2})|
    cplx extrapolated{};         // 2 v(dt_last) - v(dt_prev)
};

template <class Sim>
RefinementReport refine(const Sim& sim, double dt0, int levels) {
    if (levels < 2) throw ParameterError("refine: need at least two levels");
    RefinementReport r;
    double dt = dt0;
    for (int k = 0; k < levels; ++k, dt *= 0.5) {
        r.dts.push_back(dt);
        r.values.push_back(sim(dt));
    }
    for (int k = 0; k + 2 < levels; ++k) {
        const double num = std::abs(r.values[k] - r.values[k + 1]);
        const double den = std::abs(r.values[k + 1] - r.values[k + 2]);
        r.ratios.push_back(den > 0.0 ? num / den : INFINITY);
    }
    r.extrapolated = 2.0 * r.values[levels - 1] - r.values[levels - 2];
    return r;
}

}  // namespace qsde_elim
