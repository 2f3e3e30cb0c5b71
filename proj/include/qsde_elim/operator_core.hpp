// operator_core.hpp: Dense complex matrices, truncated oscillator ladder
// operators, exponential (coherent) vectors and a few linear-algebra helpers.

#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>

#include "qsde_elim/errors.hpp"

namespace qsde_elim {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr cplx I_unit{0.0, 1.0};

inline bool all_finite(const Matrix& M) {
    for (Eigen::Index j = 0; j < M.cols(); ++j)
        for (Eigen::Index i = 0; i < M.rows(); ++i)
            if (!std::isfinite(M(i, j).real()) || !std::isfinite(M(i, j).imag())) return false;
    return true;
}

inline void require_finite(const Matrix& M, const std::string& what) {
    if (M.rows() == 0 || M.cols() == 0) throw DimensionError(what + ": empty matrix");
    if (!all_finite(M)) throw NumericError(what + ": non-finite entry");
}

inline Matrix identity(Eigen::Index n) { return Matrix::Identity(n, n); }

inline Matrix adjoint(const Matrix& M) { return M.adjoint(); }

// Largest singular value.
inline double spectral_norm(const Matrix& M) {
    if (M.rows() != M.cols())
        throw DimensionError("spectral_norm: matrix is " + std::to_string(M.rows()) + "x" +
                             std::to_string(M.cols()) + ", expected square");
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(0);
}

// ||M - M^dag||
inline double hermiticity_residual(const Matrix& M) { return spectral_norm(Matrix(M - M.adjoint())); }

struct TruncatedOscillator {
    Eigen::Index dim;
    Matrix b;      // annihilator, b(k-1, k) = sqrt(k)
    Matrix b_dag;  // creator
    Matrix n_op;   // b_dag * b = diag(0, 1, ..., N-1)
};

inline TruncatedOscillator truncated_oscillator(Eigen::Index N) {
    if (N < 2) throw ParameterError("truncated_oscillator: N must be >= 2, got " + std::to_string(N));
    Matrix b = Matrix::Zero(N, N);
    for (Eigen::Index k = 1; k < N; ++k) b(k - 1, k) = std::sqrt(static_cast<double>(k));
    Matrix b_dag = b.adjoint();
    Matrix n_op = b_dag * b;
    return {N, std::move(b), std::move(b_dag), std::move(n_op)};
}

// Unnormalised exponential vector exp(alpha b^dag)|0>, truncated to N levels:
// component k = alpha^k / sqrt(k!).
inline Vector coherent_vector(cplx alpha, Eigen::Index N) {
    if (N < 2) throw ParameterError("coherent_vector: N must be >= 2");
    if (std::norm(alpha) > 50.0) throw ParameterError("coherent_vector: |alpha|^2 exceeds 50");
    Vector v(N);
    v(0) = 1.0;
    for (Eigen::Index k = 1; k < N; ++k) v(k) = v(k - 1) * alpha / std::sqrt(static_cast<double>(k));
    return v;
}

inline constexpr Eigen::Index kKronCap = 4096;

inline Matrix kron(const Matrix& A, const Matrix& B, Eigen::Index cap = kKronCap) {
    const Eigen::Index rows = A.rows() * B.rows();
    const Eigen::Index cols = A.cols() * B.cols();
    if (rows > cap || cols > cap)
        throw CapacityError("kron: result " + std::to_string(rows) + "x" + std::to_string(cols) +
                            " exceeds cap " + std::to_string(cap));
    Matrix K(rows, cols);
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

inline Vector kron(const Vector& u, const Vector& v) {
    Vector w(u.size() * v.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) w.segment(i * v.size(), v.size()) = u(i) * v;
    return w;
}

// 2-norm condition number via singular values; +inf for exactly singular input.
inline double condition_estimate(const Matrix& A) {
    Eigen::JacobiSVD<Matrix> svd(A);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

inline constexpr double kMaxCondition = 1e12;

// X with A X = B.
inline Matrix solve(const Matrix& A, const Matrix& B) {
    if (A.rows() != A.cols()) throw DimensionError("solve: A must be square");
    if (A.rows() != B.rows()) throw DimensionError("solve: row mismatch between A and B");
    const double cond = condition_estimate(A);
    if (!(cond < kMaxCondition)) throw SingularityError("solve: matrix is singular or ill-conditioned", cond);
    return A.partialPivLu().solve(B);
}

}  // namespace qsde_elim
