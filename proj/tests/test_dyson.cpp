#include <gtest/gtest.h>

#include <random>
#include <set>

#include "qsde_elim/dyson.hpp"
#include "qsde_elim/quadrature.hpp"

using namespace qsde_elim;

namespace {

// Nested quadrature over 0 < s_1 < ... < s_n < t (n <= 3).
double simplex_quadrature(const WickPairing& w, double t, const OUKernel& K) {
    const auto pairs = w.contractions();
    std::vector<double> s(w.n);
    auto integrand = [&]() {
        double p = 1.0;
        for (auto [i, j] : pairs) p *= kernel_eval(K, s[j - 1] - s[i - 1]);
        return p;
    };
    std::function<double(int, double)> level = [&](int k, double upper) -> double {
        // integrate s_k over [0, upper]
        return adaptive_simpson<double>(
            [&](double x) {
                s[k - 1] = x;
                return k == 1 ? integrand() : level(k - 1, x);
            },
            0.0, upper, 1e-11, 30);
    };
    return level(w.n, t);
}

std::set<std::vector<std::vector<int>>> as_set(const std::vector<GoldstoneDiagram>& ds) {
    std::set<std::vector<std::vector<int>>> out;
    for (const auto& d : ds) out.insert(d.parts);
    return out;
}

}  // namespace

TEST(Partitions, BellCounts) {
    const std::uint64_t bell[] = {1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975};
    for (int n = 1; n <= 10; ++n) {
        EXPECT_EQ(bell_number(n), bell[n]);
        auto ps = enumerate_partitions(n);
        EXPECT_EQ(ps.size(), bell[n]);
        if (n <= 7) EXPECT_EQ(as_set(ps).size(), ps.size());
    }
    EXPECT_THROW(enumerate_partitions(11), CapacityError);
}

TEST(Partitions, ContainsNineVertexExample) {
    auto target = make_diagram({{1, 3}, {2}, {4, 6, 8}, {5}, {7, 9}});
    auto ps = enumerate_partitions(9);
    EXPECT_NE(std::find(ps.begin(), ps.end(), target), ps.end());
}

TEST(Occupation, Examples) {
    auto occ = occupation(make_diagram({{1, 3}, {2}, {4, 6, 8}, {5}, {7, 9}}));
    EXPECT_EQ(occ.counts, (std::vector<int>{2, 2, 1}));
    EXPECT_EQ(occ.E(), 9);
    EXPECT_EQ(occ.N(), 5);
    auto single = occupation(make_diagram({{1}, {2}, {3}, {4}}));
    EXPECT_EQ(single.counts, std::vector<int>{4});
    EXPECT_EQ(single.N(), 4);
    auto whole = occupation(make_diagram({{1, 2, 3, 4, 5}}));
    EXPECT_EQ(whole.counts, (std::vector<int>{0, 0, 0, 0, 1}));
    EXPECT_EQ(whole.E(), 5);
    EXPECT_EQ(whole.N(), 1);
}

TEST(Pairings, SmallCases) {
    auto a = enumerate_pairings({1, 0}, {0, 1});
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].J[0], 2);
    EXPECT_EQ(enumerate_pairings({1, 1, 0, 0}, {0, 0, 1, 1}).size(), 2u);
    EXPECT_TRUE(enumerate_pairings({0, 1}, {1, 0}).empty());
    EXPECT_TRUE(enumerate_pairings({1, 1}, {0, 1}).empty());
}

TEST(Pairings, PartitionDuality) {
    for (int n = 1; n <= 6; ++n) {
        std::size_t total = 0;
        std::set<std::vector<std::vector<int>>> seen;
        for (const auto& a : bit_patterns(n))
            for (const auto& b : bit_patterns(n))
                for (const auto& w : enumerate_pairings(a, b)) {
                    ++total;
                    auto d = pairing_diagram(w);
                    seen.insert(d.parts);
                    auto back = diagram_pairing(d);
                    EXPECT_EQ(back.alpha, w.alpha);
                    EXPECT_EQ(back.beta, w.beta);
                    EXPECT_EQ(back.J, w.J);
                }
        EXPECT_EQ(total, bell_number(n));
        EXPECT_EQ(seen.size(), bell_number(n));
    }
}

TEST(WickMoment, Examples) {
    OUKernel K(2.0, 0.5);
    EXPECT_NEAR(wick_vacuum_moment({1, 0}, {0, 1}, {0.0, 1.0}, K), std::exp(-2.0), 1e-15);
    EXPECT_NEAR(normal_order_oracle({1, 0}, {0, 1}, {0.0, 1.0}, K), std::exp(-2.0), 1e-15);
    EXPECT_EQ(wick_vacuum_moment({0, 1}, {1, 0}, {0.0, 1.0}, K), 0.0);
    EXPECT_EQ(normal_order_oracle({1, 1, 0}, {0, 0, 1}, {0.0, 0.1, 0.2}, K), 0.0);
    OUKernel K2(2.0, 0.3);
    const std::vector<double> s{0.0, 0.2, 0.5, 1.0};
    EXPECT_NEAR(wick_vacuum_moment({1, 1, 0, 0}, {0, 0, 1, 1}, s, K2), normal_order_oracle({1, 1, 0, 0}, {0, 0, 1, 1}, s, K2),
                1e-12);
    EXPECT_THROW(normal_order_oracle(Bits(9, 0), Bits(9, 0), std::vector<double>(9), K), CapacityError);
    EXPECT_THROW(wick_vacuum_moment({1, 0}, {0, 1}, {1.0, 0.5}, K), ParameterError);
}

TEST(WickMoment, OracleAgreementRandom) {
    std::mt19937 rng(77);
    std::uniform_int_distribution<int> nd(1, 6), bit(0, 1);
    std::uniform_real_distribution<double> ud(0.0, 2.0), ed(0.05, 1.0);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const int n = nd(rng);
        Bits a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = bit(rng);
            b[i] = bit(rng);
        }
        std::vector<double> s(n);
        for (auto& x : s) x = ud(rng);
        std::sort(s.begin(), s.end());
        OUKernel K(1.0 + ud(rng), ed(rng));
        worst = std::max(worst, std::abs(wick_vacuum_moment(a, b, s, K) - normal_order_oracle(a, b, s, K)));
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(Simplex, ClosedForms) {
    OUKernel K(2.0, 0.1);
    auto pair = diagram_pairing(make_diagram({{1, 2}}));
    const double expected = 0.5 - 0.05 * (1.0 - std::exp(-10.0));
    EXPECT_NEAR(simplex_integral(pair, 1.0, K), expected, 1e-14);
    EXPECT_NEAR(simplex_integral(pair, 1.0, K), 0.45 + 0.05 * std::exp(-10.0), 1e-14);
    EXPECT_NEAR(simplex_integral(make_diagram({{1}}), 1.7, K), 1.7, 1e-15);
    EXPECT_NEAR(simplex_integral(make_diagram({{1}, {2}, {3}}), 2.0, K), 8.0 / 6.0, 1e-14);
    EXPECT_THROW(simplex_integral(make_diagram({{1}, {2}, {3}, {4}, {5}, {6}, {7}}), 1.0, K), CapacityError);
}

TEST(Simplex, AgreesWithQuadrature) {
    for (double eps : {0.5, 0.1}) {
        OUKernel K(2.0, eps);
        for (int n = 1; n <= 3; ++n)
            for (const auto& d : enumerate_partitions(n)) {
                const auto w = diagram_pairing(d);
                const double exact = simplex_integral(w, 1.0, K);
                EXPECT_NEAR(exact, simplex_quadrature(w, 1.0, K), 1e-8 * std::max(1.0, exact))
                    << "n=" << n << " eps=" << eps;
            }
    }
}

TEST(Simplex, SmallKappaBranchContinuous) {
    // Taylor branch and divided-difference table meet without a jump.
    auto d = make_diagram({{1, 3}, {2, 4}});
    const double t = 1.0;
    for (double x : {0.999, 1.0, 1.001}) {
        // kappa * t * max(m) = x with max(m) = 2
        const double kappa = x / 2.0;
        OUKernel K(2.0, 1.0 / kappa);
        const double a = simplex_integral(d, t, K);
        OUKernel K2(2.0, 1.0 / (kappa * (1 + 1e-9)));
        const double b = simplex_integral(d, t, K2);
        EXPECT_NEAR(a, b, 1e-8 * a);
    }
    // tiny kappa: product of kernels ~ peak^2 (1 - O(kappa)), volume 1/24
    OUKernel tiny(2.0, 1e8);
    EXPECT_NEAR(simplex_integral(d, 1.0, tiny), std::pow(tiny.peak(), 2) / 24.0, 1e-7 * std::pow(tiny.peak(), 2));
}

TEST(TimeConsecutive, Limits) {
    const std::vector<double> sweep{0.3, 0.1, 0.03, 0.01, 0.003, 0.001};
    auto r2 = time_consecutive_limit_check({2}, 1.0, 2.0, sweep);
    EXPECT_TRUE(r2.pass);
    EXPECT_NEAR(r2.values.back(), 0.5, 0.005);
    auto r11 = time_consecutive_limit_check({1, 1}, 1.0, 2.0, sweep);
    for (double v : r11.values) EXPECT_NEAR(v, 0.5, 1e-14);
    EXPECT_TRUE(r11.pass);
    auto crossed = make_diagram({{1, 3}, {2, 4}});
    EXPECT_FALSE(crossed.time_consecutive());
    auto rep = diagram_limit_sweep(crossed, 1.0, 2.0, sweep);
    EXPECT_LT(rep.values.back(), 0.01 * rep.values.front());
    EXPECT_TRUE(rep.pass);
}

TEST(Pule, Examples) {
    OUKernel K(2.0, 0.1);
    auto two = pule_check({{2}}, 1.3, K);
    EXPECT_NEAR(two.lhs, 1.3 * 1.3 / 2.0, 1e-14);
    EXPECT_NEAR(two.rhs, 1.3 * 1.3 / 2.0, 1e-14);
    EXPECT_TRUE(two.holds);
    auto pair = pule_check({{0, 1}}, 1.0, K);
    EXPECT_NEAR(pair.lhs, 0.450002, 1e-6);
    EXPECT_DOUBLE_EQ(pair.rhs, 0.5);
    EXPECT_TRUE(pair.holds);
}

TEST(Pule, ExhaustiveSmallGrid) {
    for (int E = 1; E <= 5; ++E)
        for (const auto& occ : occupations_with_E(E))
            for (double t : {0.5, 1.0, 2.0})
                for (double eps : {0.5, 0.1, 0.02}) {
                    auto r = pule_check(occ, t, OUKernel(2.0, eps));
                    EXPECT_TRUE(r.holds) << "E=" << E << " t=" << t << " eps=" << eps << " lhs=" << r.lhs
                                         << " rhs=" << r.rhs;
                }
}

TEST(Omega, ClosedFormAndPartialSums) {
    auto rep = omega_series({1.0, 1.0, 1.0}, 12);
    EXPECT_NEAR(rep.A, std::log(0.5), 1e-15);
    EXPECT_NEAR(rep.B, std::log(2.0), 1e-15);
    EXPECT_NEAR(rep.closed_form, std::exp(2.0), 1e-12);
    EXPECT_LE(rep.total, rep.closed_form);
    // partial sums increase toward the closed form
    auto longer = omega_series({1.0, 1.0, 1.0}, 30);
    EXPECT_GT(longer.total, rep.total);
    EXPECT_LE(longer.total, longer.closed_form);
    EXPECT_THROW(omega_series({1.0, 2.0, 1.0}), DivergenceError);
}

TEST(Omega, ClosedFormMatchesProductFormula) {
    // prod_k exp(e^{kA+B}) = exp(e^{A+B} / (1 - e^A)), checked against the
    // per-n sums with a long cutoff for a fast-converging case
    auto rep = omega_series({0.5, 0.5, 1.0}, 40);
    EXPECT_NEAR(rep.total, rep.closed_form, 1e-10 * rep.closed_form);
}

TEST(Omega, DegenerateBranch) {
    auto rep = omega_series({1.0, 0.0, 1.0}, 30);
    EXPECT_TRUE(rep.degenerate);
    EXPECT_NEAR(rep.closed_form, std::exp(1.5), 1e-12);
    EXPECT_NEAR(rep.total, rep.closed_form, 1e-9 * rep.closed_form);
}

TEST(DoubleDiagrams, PaperExample) {
    DoubleDiagram ex{{1, 4, 2}, {3, 1, 1, 1, 1, 2}, {0, 1, 1}, {1, 0, 0, 1, 0, 0}};
    bool found = false;
    for_each_double_diagram(7, 9, [&](const DoubleDiagram& d) {
        found = d == ex;
        return !found;
    });
    EXPECT_TRUE(found);
    EXPECT_THROW(enumerate_double_diagrams(7, 9), CapacityError);
    EXPECT_EQ(ex.kappa_index(), (std::vector<int>{2, 3}));
    EXPECT_EQ(ex.lambda_index(), (std::vector<int>{1, 4}));
    auto cp = ex.cross_pairs();
    ASSERT_EQ(cp.size(), 2u);
    EXPECT_EQ(cp[0], std::make_pair(2, 1));
    EXPECT_EQ(cp[1], std::make_pair(3, 4));
}

TEST(DoubleDiagrams, TrivialAndBalanced) {
    auto one = enumerate_double_diagrams(1, 0);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].r, std::vector<int>{1});
    EXPECT_EQ(one[0].kappa, Bits{0});
    EXPECT_TRUE(one[0].l.empty());
    for (const auto& d : enumerate_double_diagrams(3, 4)) {
        EXPECT_EQ(std::accumulate(d.kappa.begin(), d.kappa.end(), 0), std::accumulate(d.lambda.begin(), d.lambda.end(), 0));
        EXPECT_EQ(std::accumulate(d.r.begin(), d.r.end(), 0), 3);
        EXPECT_EQ(std::accumulate(d.l.begin(), d.l.end(), 0), 4);
    }
    EXPECT_THROW(enumerate_double_diagrams(6, 5), CapacityError);
}
