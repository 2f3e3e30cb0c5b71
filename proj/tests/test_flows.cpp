#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "qsde_elim/flows.hpp"
#include "test_support.hpp"

using namespace qsde_elim;
using qsde_elim::testing::random_complex;
using qsde_elim::testing::random_hermitian;
using qsde_elim::testing::random_prelim;

namespace {

ExponentialVectorSpec vac(Eigen::Index d, Eigen::Index k = 0) {
    Vector v = Vector::Zero(d);
    v(k) = 1.0;
    return {v, 0.0, {}};
}

HPModel random_limit_hp(std::mt19937& rng, Eigen::Index d) {
    return hp_from_limit(eliminate(random_prelim(rng, d, 2.0, 0.3)));
}

// tr(rho_t X) for rho' = -i[H, rho] + L rho L^dag - {L^dag L, rho}/2, rho_0 = v u^dag,
// by exponentiating the column-stacked superoperator.
cplx lindblad_oracle(const HPModel& m, const Vector& u, const Vector& v, const Matrix& X, double t) {
    const Eigen::Index n = m.dim();
    const Matrix I = identity(n);
    const Matrix LdL = m.L.adjoint() * m.L;
    auto sup = [&](const Matrix& A, const Matrix& B) { return kron(Matrix(B.transpose()), A); };  // rho -> A rho B
    const Matrix gen = -I_unit * sup(m.H, I) + I_unit * sup(I, m.H) + sup(m.L, m.L.adjoint()) - 0.5 * sup(LdL, I) -
                       0.5 * sup(I, LdL);
    const Matrix rho0 = v * u.adjoint();
    const Vector r0 = Eigen::Map<const Vector>(rho0.data(), n * n);
    const Matrix prop = (gen * t).exp();
    const Vector rt = prop * r0;
    const Matrix rho = Eigen::Map<const Matrix>(rt.data(), n, n);
    return (rho * X).trace();
}

// Model seen by vacuum when the field carries the constant coherent amplitude f.
HPModel coherently_driven(const HPModel& m, cplx f) {
    HPModel out = m;
    const Matrix LS = m.L.adjoint() * m.S * f;
    out.L = m.L + m.S * f;
    out.H = m.H + (LS - LS.adjoint()) / cplx(0.0, 2.0);
    return out;
}

}  // namespace

TEST(PrelimAsHp, Examples) {
    auto z = prelim_as_hp(PrelimModel::zero(2, 2.0), 0.5, 6);
    EXPECT_EQ(z.H.norm(), 0.0);
    EXPECT_LT((z.L - 2.0 * kron(identity(2), truncated_oscillator(6).b)).norm(), 1e-14);

    auto m = PrelimModel::zero(1, 1.0);
    m.E00(0, 0) = 1.0;
    EXPECT_LT((prelim_as_hp(m, 0.3, 4).H - identity(4)).norm(), 1e-15);

    PrelimModel spin = PrelimModel::zero(2, 4.0);
    spin.E11(0, 0) = 0.5;
    spin.E11(1, 1) = -0.5;
    spin.E10 = identity(2);
    spin.E01 = identity(2);
    auto hp = prelim_as_hp(spin, 0.1, 8);
    EXPECT_LT(hermiticity_residual(hp.H), 1e-12);
    for (double r : hp_unitarity_residuals(LimitModel{hp.S, hp.L, hp.H})) EXPECT_LT(r, 1e-12);

    EXPECT_THROW(prelim_as_hp(spin, 0.1, 3), ParameterError);
    EXPECT_THROW(prelim_as_hp(spin, 0.0, 8), ParameterError);
    EXPECT_THROW(prelim_as_hp(spin, 0.1, 129), CapacityError);
}

TEST(Cocycle, TrivialModel) {
    HPModel m{identity(2), Matrix::Zero(2, 2), Matrix::Zero(2, 2), 1};
    FlowTask task{m, vac(2), vac(2), {}, {}, 1.3, {}};
    task.bra.v = Vector::Ones(2);
    task.bra.alpha = cplx(0.2, 0.1);
    task.ket.alpha = cplx(-0.4, 0.3);
    task.bra.f = RegulatedFunction::constant(cplx(0.5, -0.1), 0.0, 2.0);
    task.ket.f = RegulatedFunction::constant(0.7, 0.2, 0.9);
    auto r = cocycle_matrix_element(task);
    EXPECT_LT(std::abs(r.value - r.prefactor), 1e-14);
    EXPECT_LT(std::abs(r.normalized - 1.0), 1e-14);
}

TEST(Cocycle, ScalarEmissionDecay) {
    for (double gamma : {1.0, 2.0, 4.0}) {
        PrelimModel pm = PrelimModel::zero(1, gamma);
        pm.E10(0, 0) = cplx(0.6, 0.8);
        pm.E01(0, 0) = cplx(0.6, -0.8);
        FlowTask task{hp_from_limit(eliminate(pm)), vac(1), vac(1), {}, {}, 1.7, {}};
        auto r = cocycle_matrix_element(task);
        EXPECT_NEAR(std::abs(r.value), std::exp(-2.0 / gamma * 1.7), 1e-9);
    }
}

TEST(Cocycle, VacuumCompressionContracts) {
    std::mt19937 rng(31);
    for (int rep = 0; rep < 10; ++rep) {
        FlowTask task{random_limit_hp(rng, 3), vac(3), vac(3), {}, {}, 1.0, {}};
        task.bra.v = random_complex(rng, 3, 1);
        task.ket.v = task.bra.v;
        task.bra.f = task.ket.f = RegulatedFunction::constant(cplx(0.4, -0.3), 0.0, 0.6);
        auto r = cocycle_matrix_element(task);
        EXPECT_LE(std::abs(r.value), task.bra.v.squaredNorm() * std::abs(r.prefactor) * (1 + 1e-9));
    }
}

TEST(Cocycle, AgreesWithHeisenbergSandwichOnVacuum) {
    // |<u|U v>|^2 route versus tr(rho P) route for a projector: both see the same cocycle
    std::mt19937 rng(5);
    HPModel m = random_limit_hp(rng, 2);
    FlowTask task{m, vac(2), vac(2), {}, {}, 0.8, {}};
    auto c = cocycle_matrix_element(task);
    EXPECT_LE(std::norm(c.value), 1.0 + 1e-12);
    FlowTask h = task;
    h.X = Matrix(task.bra.v * task.bra.v.adjoint());
    auto hw = heisenberg_weyl_matrix_element(h);
    EXPECT_GE(hw.value.real() + 1e-10, std::norm(c.value));
}

TEST(Interaction, TrivialModelIsEpsilonIndependent) {
    auto m = PrelimModel::zero(2, 2.0);
    ExponentialVectorSpec b = vac(2), k = vac(2);
    b.v = Vector::Ones(2);
    b.alpha = cplx(0.3, -0.2);
    k.alpha = cplx(0.5, 0.0);
    b.f = RegulatedFunction::constant(0.3, 0.0, 1.0);
    k.f = RegulatedFunction::constant(cplx(0.0, 0.4), 0.0, 0.5);
    const cplx expect = std::exp(std::conj(b.alpha) * k.alpha + inner_product(b.f, k.f));
    std::vector<cplx> vals;
    for (double eps : {0.2, 0.05, 0.01}) {
        auto r = interaction_picture_matrix_element(m, eps, 16, b, k, 1.0);
        vals.push_back(r.value);
        EXPECT_LT(std::abs(r.value - expect), 1e-9 * std::abs(expect));
    }
    EXPECT_LT(std::abs(vals[0] - vals[2]), 1e-9);
}

TEST(Interaction, ScalarEnergyPhase) {
    auto m = PrelimModel::zero(1, 2.0);
    m.E00(0, 0) = 0.7;
    ExponentialVectorSpec b = vac(1), k = vac(1);
    k.alpha = 0.4;
    auto r = interaction_picture_matrix_element(m, 0.1, 12, b, k, 1.5);
    EXPECT_LT(std::abs(r.normalized - std::exp(-I_unit * 0.7 * 1.5)), 1e-9);
}

TEST(Interaction, ScalarEmissionClosedForm) {
    // d = 1, E10 = 1, gamma = 2, vacuum data: <U~_t> = exp(-t + eps (1 - e^{-t/eps}))
    auto m = PrelimModel::zero(1, 2.0);
    m.E10(0, 0) = 1.0;
    m.E01(0, 0) = 1.0;
    for (double eps : {0.2, 0.1, 0.05}) {
        auto r = interaction_picture_matrix_element(m, eps, 14, vac(1), vac(1), 1.0);
        const double exact = std::exp(-1.0 + eps * (1.0 - std::exp(-1.0 / eps)));
        EXPECT_LT(std::abs(r.value - exact), 1e-8) << eps;
        EXPECT_FALSE(r.diagnostics.truncation_flag);
    }
}

TEST(Heisenberg, IdentityConservation) {
    std::mt19937 rng(77);
    for (int rep = 0; rep < 8; ++rep) {
        const Eigen::Index d = 1 + rep % 4;
        FlowTask task{random_limit_hp(rng, d), vac(d), vac(d), {}, {}, 1.1, {}};
        task.bra.v = random_complex(rng, d, 1);
        task.ket.v = random_complex(rng, d, 1);
        task.bra.alpha = cplx(0.2, 0.3);
        task.bra.f = RegulatedFunction::from_segments({{0.0, 0.5, {cplx(0.3, 0.1), cplx(0.2, 0.0)}}});
        task.ket.f = RegulatedFunction::constant(cplx(-0.4, 0.2), 0.2, 1.5);
        auto r = heisenberg_weyl_matrix_element(task);
        EXPECT_LT(std::abs(r.normalized - task.bra.v.dot(task.ket.v)), 1e-9);
    }
}

TEST(Heisenberg, WeylCharacteristicFunction) {
    HPModel m{identity(1), Matrix::Zero(1, 1), Matrix::Zero(1, 1), 1};
    FlowTask task{m, vac(1), vac(1), {}, {}, 2.0, {}};
    task.bra.f = RegulatedFunction::constant(cplx(0.3, -0.2), 0.0, 1.5);
    task.ket.f = RegulatedFunction::from_segments({{0.1, 1.2, {cplx(0.5, 0.1), cplx(0.0, 0.3)}}});
    task.g = RegulatedFunction::from_segments({{0.0, 0.8, {cplx(0.3, 0.2), cplx(-0.1, 0.0)}}});
    auto r = heisenberg_weyl_matrix_element(task);
    // W(g) e(f2) = exp(-||g||^2/2 - <g, f2>) e(f2 + g)
    const auto& g = *task.g;
    const cplx closed = std::exp(-0.5 * inner_product(g, g) - inner_product(g, task.ket.f) +
                                 inner_product(task.bra.f, task.ket.f) + inner_product(task.bra.f, g));
    EXPECT_LT(std::abs(r.value - closed), 1e-8 * std::abs(closed));
}

TEST(Heisenberg, MatchesLindbladOracle) {
    std::mt19937 rng(8);
    for (int rep = 0; rep < 4; ++rep) {
        const Eigen::Index d = 2 + rep % 2;
        HPModel m = random_limit_hp(rng, d);
        const Matrix X = random_complex(rng, d, d);
        FlowTask task{m, vac(d), vac(d), X, {}, 0.9, {}};
        task.bra.v = random_complex(rng, d, 1);
        task.ket.v = random_complex(rng, d, 1);
        auto r = heisenberg_weyl_matrix_element(task);
        const cplx ref = lindblad_oracle(m, task.bra.v, task.ket.v, X, 0.9);
        EXPECT_LT(std::abs(r.normalized - ref), 1e-8 * (1.0 + std::abs(ref)));

        // coherent drive, gauge active
        const cplx f(0.4, -0.3);
        task.bra.f = task.ket.f = RegulatedFunction::constant(f, 0.0, 5.0);
        auto rc = heisenberg_weyl_matrix_element(task);
        const cplx refc = lindblad_oracle(coherently_driven(m, f), task.bra.v, task.ket.v, X, 0.9);
        EXPECT_LT(std::abs(rc.normalized - refc), 1e-8 * (1.0 + std::abs(refc)));
    }
}

TEST(Heisenberg, AdjointSymmetry) {
    std::mt19937 rng(19);
    for (int rep = 0; rep < 5; ++rep) {
        const Eigen::Index d = 2;
        FlowTask a{random_limit_hp(rng, d), vac(d), vac(d), random_complex(rng, d, d), {}, 1.0, {}};
        a.bra.v = random_complex(rng, d, 1);
        a.ket.v = random_complex(rng, d, 1);
        a.bra.f = RegulatedFunction::constant(cplx(0.2, 0.5), 0.0, 0.7);
        a.ket.f = RegulatedFunction::from_segments({{0.3, 1.4, {cplx(-0.3, 0.1), cplx(0.1, 0.1)}}});
        a.g = RegulatedFunction::constant(cplx(0.25, -0.1), 0.0, 0.6);
        FlowTask b = a;
        std::swap(b.bra, b.ket);
        b.X = Matrix(a.X->adjoint());
        b.g = a.g->scaled(-1.0);
        const cplx va = heisenberg_weyl_matrix_element(a).value, vb = heisenberg_weyl_matrix_element(b).value;
        EXPECT_LT(std::abs(va - std::conj(vb)), 1e-10 * (1.0 + std::abs(va)));
    }
}

TEST(Heisenberg, TighterToleranceChangesLittle) {
    std::mt19937 rng(3);
    auto pm = random_prelim(rng, 2, 3.0, 0.3);
    FlowTask task{prelim_as_hp(pm, 0.1, 10), vac(2), vac(2), {}, {}, 1.0, {}};
    task.X = kron(random_hermitian(rng, 2), identity(10));
    task.ket.f = RegulatedFunction::constant(0.3, 0.0, 1.0);
    task.bra.f = task.ket.f;
    auto coarse = heisenberg_weyl_matrix_element(task);
    task.tol.rel = 1e-10;
    auto fine = heisenberg_weyl_matrix_element(task);
    EXPECT_LT(std::abs(coarse.value - fine.value), 1e-7 * std::abs(fine.value));
    EXPECT_FALSE(coarse.diagnostics.accuracy_flag);
    EXPECT_GT(coarse.diagnostics.steps, 0);
}

TEST(Diagnostics, TopLevelWeightFlagsTruncation) {
    auto m = PrelimModel::zero(1, 2.0);
    ExponentialVectorSpec k = vac(1);
    k.alpha = 1.5;
    auto small = interaction_picture_matrix_element(m, 0.1, 6, vac(1), k, 0.2);
    EXPECT_TRUE(small.diagnostics.truncation_flag);
    auto big = interaction_picture_matrix_element(m, 0.1, 24, vac(1), k, 0.2);
    EXPECT_FALSE(big.diagnostics.truncation_flag);
}

TEST(Flows, RejectsBadTasks) {
    HPModel bad{2.0 * identity(2), Matrix::Zero(2, 2), Matrix::Zero(2, 2), 1};
    FlowTask t{bad, vac(2), vac(2), {}, {}, 1.0, {}};
    EXPECT_THROW(cocycle_matrix_element(t), PreconditionError);
    t.model.S = identity(2);
    t.horizon = 0.0;
    EXPECT_THROW(cocycle_matrix_element(t), ParameterError);
    t.horizon = 1.0;
    t.X = identity(3);
    EXPECT_THROW(heisenberg_weyl_matrix_element(t), DimensionError);
}
