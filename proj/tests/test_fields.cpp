#include "chibag/fields.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace chibag;

class KillingDims : public ::testing::TestWithParam<int> {};

TEST_P(KillingDims, IdentitiesAndConvergence)
{
    const int n = GetParam();
    const CliffordRep rep = build_rep(n);
    SampleGrid g;
    g.n = n;
    g.points = n == 2 ? 21 : 11;
    for (Sign s : {Sign::plus, Sign::minus}) {
        const KillingReport r = verify_killing(rep, s, g);
        EXPECT_TRUE(r.pass) << "sign " << to_string(s);
        EXPECT_LT(r.residual_norm, 1e-10);
        EXPECT_LT(r.residual_dnorm, 1e-10);
        EXPECT_LT(r.residual_bc, 1e-12);
        EXPECT_GE(r.observed_order, 1.8);
    }
}

INSTANTIATE_TEST_SUITE_P(Dimensions, KillingDims, ::testing::Values(2, 3, 4));

TEST(Fields, ParallelSpinorIsAdmissibleForBagMinus)
{
    for (int n = 2; n <= 5; ++n) {
        const CliffordRep rep = build_rep(n);
        const Spinor phi = boundary_compatible_parallel(rep);
        EXPECT_NEAR(phi.norm(), 1.0, 1e-14);
        EXPECT_LT((chiral_projector(rep, inner_normal(n), Sign::minus).matrix * phi).norm(), 1e-14);
    }
}

TEST(Fields, ExactDiracMatchesFiniteDifferences)
{
    const CliffordRep rep = build_rep(3);
    Point p(3);
    p << 0.3, -0.7, 0.4;
    for (Sign s : {Sign::plus, Sign::minus}) {
        const Spinor fd = dirac_flat_oracle(rep, killing_field(rep, s), p, 1e-4);
        EXPECT_LT((fd - killing_dirac_exact(rep, s, p)).norm(), 1e-7);
        // D psi = +-(n/2) f psi
        const Spinor target = double(sign_value(s)) * 1.5 * conformal_factor(p) * killing_test_spinor(rep, s, p);
        EXPECT_LT((killing_dirac_exact(rep, s, p) - target).norm(), 1e-13);
    }
}

// the squared modulus of D psi carries the factor (n/2)^2; the unit factor only fits n = 2
TEST(Fields, DiracModulusCarriesHalfDimensionSquared)
{
    for (int n = 2; n <= 4; ++n) {
        const CliffordRep rep = build_rep(n);
        Point p = Point::Constant(n, 0.37);
        const double f = conformal_factor(p);
        const double m = killing_dirac_exact(rep, Sign::plus, p).squaredNorm();
        EXPECT_NEAR(m, 0.25 * n * n * std::pow(f, n + 1), 1e-12);
    }
}

TEST(Fields, CorruptedExponentFailsVerification)
{
    const CliffordRep rep = build_rep(2);
    const Spinor phi0 = boundary_compatible_parallel(rep);
    const SpinorField wrong = [&](const Point& p) -> Spinor {
        const Mat id = Mat::Identity(rep.d, rep.d);
        return std::pow(conformal_factor(p), 1.1) / std::sqrt(2.0) * ((id - clifford_matrix(rep, p)) * phi0);
    };
    SampleGrid g;
    const KillingReport r = verify_killing(rep, Sign::plus, g, 1e-3, wrong);
    EXPECT_FALSE(r.pass);
    EXPECT_GT(r.residual_norm, 1e-3);
}

TEST(Fields, ScaledArgumentKeepsModulusIdentity)
{
    const CliffordRep rep = build_rep(3);
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> u(-2, 2);
    for (double eps : {1.0, 0.3, 0.01}) {
        Point p(3);
        p << u(gen), u(gen), std::abs(u(gen));
        const Point q = p / eps;
        EXPECT_NEAR(killing_test_spinor(rep, Sign::plus, q).squaredNorm(), std::pow(conformal_factor(q), 2), 1e-12);
    }
}

TEST(Fields, CutoffProfile)
{
    const double delta = 0.5;
    EXPECT_EQ(cutoff(0.0, delta), 1.0);
    EXPECT_EQ(cutoff(delta, delta), 1.0);
    EXPECT_EQ(cutoff(2 * delta, delta), 0.0);
    EXPECT_NEAR(cutoff(1.5 * delta, delta), 0.5, 1e-15);
    // slope against a central difference
    for (double r : {0.55, 0.7, 0.9}) {
        const double fd = (cutoff(r - 1e-6, delta) - cutoff(r + 1e-6, delta)) / 2e-6;
        EXPECT_NEAR(cutoff_slope(r, delta), fd, 1e-6);
    }
}

TEST(Fields, TestSpinorFamilySupportAndBoundaryCondition)
{
    const CliffordRep rep = build_rep(2);
    const Mat bm = chiral_projector(rep, inner_normal(2), Sign::minus).matrix;
    for (double x = -1.2; x <= 1.2; x += 0.05) {
        Point p(2);
        p << x, 0.0;
        EXPECT_LT((bm * test_spinor_family(rep, 0.1, 0.5, p)).norm(), 1e-14);
    }
    Point far(2);
    far << 0.8, 0.7;
    EXPECT_EQ(test_spinor_family(rep, 0.1, 0.5, far).norm(), 0.0);
}
