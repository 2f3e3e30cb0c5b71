// elimination.hpp: Limit coefficients of the adiabatically eliminated model,
// the associated Evans block matrix and the algebraic identities tying them
// together.

#pragma once

#include <array>
#include <cmath>
#include <sstream>

#include "qsde_elim/errors.hpp"
#include "qsde_elim/operator_core.hpp"
#include "qsde_elim/regulated.hpp"

namespace qsde_elim {

// Pre-limit data: H(eps) = (1/eps) E11 (x) b^dag b + (1/sqrt eps)(E10 (x) b^dag + E01 (x) b) + E00,
// emission sqrt(gamma/eps) b.
struct PrelimModel {
    double gamma = 1.0;
    Matrix E11, E10, E01, E00;

    Eigen::Index dim() const { return E11.rows(); }

    static PrelimModel zero(Eigen::Index d, double gamma) {
        const Matrix Z = Matrix::Zero(d, d);
        return {gamma, Z, Z, Z, Z};
    }
};

struct ValidationReport {
    double herm_E11 = 0.0;  // ||E11 - E11^dag||
    double herm_E00 = 0.0;  // ||E00 - E00^dag||
    double pair_E01 = 0.0;  // ||E01 - E10^dag||
    double norm_E11 = 0.0;
    double margin = 0.0;  // gamma/2 - ||E11||
    bool valid = false;

    std::string summary() const {
        std::ostringstream os;
        os << "herm_E11=" << herm_E11 << " herm_E00=" << herm_E00 << " pair_E01=" << pair_E01
           << " norm_E11=" << norm_E11 << " margin=" << margin;
        return os.str();
    }
};

struct InvalidModelError : PreconditionError {
    InvalidModelError(const std::string& what, ValidationReport r)
        : PreconditionError(what + ": " + r.summary()), report(r) {}
    ValidationReport report;
};

inline void check_shapes(const PrelimModel& m) {
    const Eigen::Index d = m.E11.rows();
    for (const Matrix* M : {&m.E11, &m.E10, &m.E01, &m.E00}) {
        if (M->rows() != d || M->cols() != d || d == 0)
            throw DimensionError("PrelimModel: E11, E10, E01, E00 must all be d x d with d > 0");
        require_finite(*M, "PrelimModel");
    }
    if (!(m.gamma > 0.0) || !std::isfinite(m.gamma)) throw ParameterError("PrelimModel: gamma must be positive");
}

inline ValidationReport validate_prelim(const PrelimModel& m) {
    check_shapes(m);
    ValidationReport r;
    r.herm_E11 = hermiticity_residual(m.E11);
    r.herm_E00 = hermiticity_residual(m.E00);
    r.pair_E01 = spectral_norm(Matrix(m.E01 - m.E10.adjoint()));
    r.norm_E11 = spectral_norm(m.E11);
    r.margin = 0.5 * m.gamma - r.norm_E11;
    r.valid = r.herm_E11 < 1e-12 && r.herm_E00 < 1e-12 && r.pair_E01 < 1e-12 && r.margin > 0.0;
    return r;
}

inline void require_valid(const PrelimModel& m, const char* who) {
    const auto r = validate_prelim(m);
    if (!r.valid) throw InvalidModelError(std::string(who) + ": model not valid for elimination", r);
}

// Hudson-Parthasarathy triple of the limit evolution.
struct LimitModel {
    Matrix S;  // scattering
    Matrix L;  // emission
    Matrix H;  // Hamiltonian
};

// Blocks in Evans labelling: L11 = S - I, L10 = L, L01 = -L^dag S, L00 = -iH - L^dag L / 2.
struct EvansMatrix {
    Matrix L00, L01, L10, L11;

    const Matrix& operator()(int alpha, int beta) const {
        if (alpha) return beta ? L11 : L10;
        return beta ? L01 : L00;
    }
};

// Im{X} = (X - X^dag) / 2i
inline Matrix operator_imag(const Matrix& X) { return (X - X.adjoint()) / cplx(0.0, 2.0); }

inline Matrix resolvent_factor(const PrelimModel& m) {
    return 0.5 * m.gamma * identity(m.dim()) + I_unit * m.E11;
}

inline LimitModel eliminate(const PrelimModel& m) {
    require_valid(m, "eliminate");
    const Eigen::Index d = m.dim();
    const Matrix A = resolvent_factor(m);
    const Matrix B = 0.5 * m.gamma * identity(d) - I_unit * m.E11;
    const Matrix left = solve(A, B);
    const Matrix right = solve(Matrix(A.transpose()), Matrix(B.transpose())).transpose();
    const double quotient_gap = spectral_norm(Matrix(left - right));
    if (!(quotient_gap < 1e-12))
        throw NumericError("eliminate: left and right quotients disagree by " + std::to_string(quotient_gap));
    LimitModel lm;
    lm.S = left;
    lm.L = I_unit * std::sqrt(m.gamma) * solve(A, m.E10);
    lm.H = m.E00 + operator_imag(m.E01 * solve(A, m.E10));
    return lm;
}

// Direct formula L_ab = [-i E_ab - E_a1 (gamma/2 + i E11)^{-1} E_1b] (-2/sqrt gamma)^{a+b}
inline EvansMatrix evans_matrix(const PrelimModel& m) {
    require_valid(m, "evans_matrix");
    const Matrix A = resolvent_factor(m);
    const Matrix* E[2][2] = {{&m.E00, &m.E01}, {&m.E10, &m.E11}};
    const double c = -2.0 / std::sqrt(m.gamma);
    Matrix blocks[2][2];
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            blocks[a][b] = (-I_unit * *E[a][b] - *E[a][1] * solve(A, *E[1][b])) * std::pow(c, a + b);
    return {blocks[0][0], blocks[0][1], blocks[1][0], blocks[1][1]};
}

// Evans blocks reconstructed from an HP triple.
inline EvansMatrix evans_from_limit(const LimitModel& lm) {
    const Eigen::Index d = lm.S.rows();
    return {Matrix(-I_unit * lm.H - 0.5 * lm.L.adjoint() * lm.L), Matrix(-lm.L.adjoint() * lm.S), lm.L,
            Matrix(lm.S - identity(d))};
}

// ||S^dag S - I||, ||S S^dag - I||, ||H - H^dag||, ||L00 + L00^dag + L10^dag L10||
inline std::array<double, 4> hp_unitarity_residuals(const LimitModel& lm) {
    const Eigen::Index d = lm.S.rows();
    const EvansMatrix ev = evans_from_limit(lm);
    return {spectral_norm(Matrix(lm.S.adjoint() * lm.S - identity(d))),
            spectral_norm(Matrix(lm.S * lm.S.adjoint() - identity(d))), hermiticity_residual(lm.H),
            spectral_norm(Matrix(ev.L00 + ev.L00.adjoint() + ev.L10.adjoint() * ev.L10))};
}

// Block-wise distance between the direct Evans matrix and the one rebuilt from
// the limit triple, ordered (L11, L10, L01, L00).
inline std::array<double, 4> evans_consistency_residuals(const EvansMatrix& ev, const LimitModel& lm) {
    const EvansMatrix rb = evans_from_limit(lm);
    return {spectral_norm(Matrix(ev.L11 - rb.L11)), spectral_norm(Matrix(ev.L10 - rb.L10)),
            spectral_norm(Matrix(ev.L01 - rb.L01)), spectral_norm(Matrix(ev.L00 - rb.L00))};
}

struct CheckedCoefficients {
    Matrix E11, E10, E01, E00;

    const Matrix& operator()(int alpha, int beta) const {
        if (alpha) return beta ? E11 : E10;
        return beta ? E01 : E00;
    }
};

inline cplx continuous_value(const RegulatedFunction& f, double t, const char* who) {
    if (f.jumps_at(t))
        throw AmbiguityError(std::string(who) + ": t = " + std::to_string(t) + " is a discontinuity of a field amplitude");
    return f(t);
}

// Limits of the commuted-through coefficients at a continuity point t.
inline CheckedCoefficients checked_coefficients(const PrelimModel& m, const RegulatedFunction& f1,
                                                const RegulatedFunction& f2, double t) {
    require_valid(m, "checked_coefficients");
    if (t < 0.0) throw ParameterError("checked_coefficients: t < 0");
    const cplx a1 = std::conj(continuous_value(f1, t, "checked_coefficients"));
    const cplx a2 = continuous_value(f2, t, "checked_coefficients");
    const double c4 = 4.0 / m.gamma, c2 = 2.0 / std::sqrt(m.gamma);
    CheckedCoefficients out;
    out.E11 = c4 * m.E11;
    out.E10 = -c2 * m.E10 + c4 * a2 * m.E11;
    out.E01 = -c2 * m.E01 + c4 * a1 * m.E11;
    out.E00 = m.E00 - c2 * a2 * m.E01 - c2 * a1 * m.E10 + c4 * a1 * a2 * m.E11;
    return out;
}

struct ResummationReport {
    double series_residual;  // || sum_{r<=R} E^(r) / (i^r 2^{r-1}) - closed form ||
    double bridge_residual;  // || closed form - sum_ab [f1*]^a L_ab [f2]^b ||
};

inline ResummationReport resummation_residual(const PrelimModel& m, const RegulatedFunction& f1,
                                              const RegulatedFunction& f2, double t, int R) {
    if (R < 1) throw ParameterError("resummation_residual: R must be >= 1");
    const auto v = validate_prelim(m);
    if (!v.valid || v.norm_E11 > 0.45 * m.gamma)
        throw InvalidModelError("resummation_residual: requires ||E11|| <= 0.45 gamma", v);
    const auto ec = checked_coefficients(m, f1, f2, t);
    const Eigen::Index d = m.dim();

    // E^(1) = E00, E^(r) = E01 E11^{r-2} E10; weight 1 / (i^r 2^{r-1})
    Matrix series = ec.E00 / I_unit;
    Matrix tail = ec.E10;  // E11^{r-2} E10
    cplx weight = 1.0 / I_unit;
    for (int r = 2; r <= R; ++r) {
        weight /= 2.0 * I_unit;
        if (r > 2) tail = ec.E11 * tail;
        series += weight * (ec.E01 * tail);
    }
    const Matrix closed = -I_unit * ec.E00 - 0.5 * ec.E01 * solve(Matrix(identity(d) + 0.5 * I_unit * ec.E11), ec.E10);

    const EvansMatrix ev = evans_matrix(m);
    const cplx a1 = std::conj(f1(t)), a2 = f2(t);
    const Matrix bridge = ev.L00 + a2 * ev.L01 + a1 * ev.L10 + a1 * a2 * ev.L11;
    return {spectral_norm(Matrix(series - closed)), spectral_norm(Matrix(closed - bridge))};
}

}  // namespace qsde_elim
