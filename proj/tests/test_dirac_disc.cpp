#include "chibag/dirac_disc.hpp"
#include "chibag/lanczos.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace chibag;

namespace {

std::vector<double> dense_eigs(const DiracMatrix& m)
{
    const Eigen::VectorXd isq = m.mass.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXcd c = isq.asDiagonal() * Eigen::MatrixXcd(m.op) * isq.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (c + c.adjoint()));
    std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    return v;
}

Grid small_half(int n, double h = 0.25) { return Grid::half_space(n, h, 1.0, 1.0); }

} // namespace

TEST(Grid, HalfSpaceHasEvenNormalCount)
{
    for (double h : {0.1, 0.2, 0.25}) {
        const Grid g = Grid::half_space(2, h, 1.0, 1.0);
        EXPECT_EQ(g.count.back() % 2, 0) << "h = " << h;
        EXPECT_EQ(g.lo.back(), 0.0);
    }
}

TEST(Grid, RejectsIncommensurateExtent) { EXPECT_THROW(Grid::box(2, 0.3, {0, 0}, {1, 1}), std::invalid_argument); }

TEST(Grid, WeightsSumToVolume)
{
    const Grid g = Grid::box(3, 0.25, {-1, -1, 0}, {1, 1, 1.5});
    double s = 0;
    for (long i = 0; i < g.nodes(); ++i) s += g.weight(i);
    EXPECT_NEAR(s, 2 * 2 * 1.5, 1e-12);
}

// periodic central differences: eigenvalues +- sqrt(sum sin^2(k_i h)) / h
TEST(Assembly, PeriodicSymbol)
{
    const int N = 8;
    const double h = 0.5;
    const CliffordRep rep = build_rep(2);
    const DiracMatrix m = assemble_flat(rep, Grid::periodic_box(2, h, N));
    std::vector<double> got = dense_eigs(m), want;
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) {
            const double ka = 2 * M_PI * a / N, kb = 2 * M_PI * b / N;
            const double s = std::sqrt(std::sin(ka) * std::sin(ka) + std::sin(kb) * std::sin(kb)) / h;
            want.push_back(s);
            want.push_back(-s);
        }
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    ASSERT_EQ(got.size(), want.size());
    for (size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Assembly, SbpPropertyOnBox)
{
    // Q + Q^T is the boundary matrix and gamma is skew-Hermitian, so A - A^* lives on boundary nodes
    const CliffordRep rep = build_rep(2);
    const Grid g = small_half(2);
    const DiracMatrix m = assemble_flat(rep, g);
    const SpMat b = m.op - SpMat(m.op.adjoint());
    EXPECT_GT(b.cwiseAbs().sum(), 1e-3);
    for (int k = 0; k < b.outerSize(); ++k)
        for (SpMat::InnerIterator it(b, k); it; ++it) {
            if (std::abs(it.value()) < 1e-15) continue;
            EXPECT_FALSE(g.face_normals(it.row() / rep.d).empty());
        }
}

class BoundarySchemes : public ::testing::TestWithParam<std::tuple<int, BoundaryScheme, Sign>> {};

TEST_P(BoundarySchemes, ReducedOperatorIsHermitian)
{
    const auto [n, scheme, sign] = GetParam();
    const CliffordRep rep = build_rep(n);
    const Grid g = small_half(n);
    for (const ScalarField& f : {constant_factor(1.0), hemisphere_factor()}) {
        const DiracMatrix m = apply_bc(assemble_conformal(rep, g, f), rep, sign, scheme);
        EXPECT_LT(hermiticity_defect(m), 1e-12);
        EXPECT_TRUE((m.mass.array() > 0).all());
    }
}

INSTANTIATE_TEST_SUITE_P(All, BoundarySchemes,
                         ::testing::Combine(::testing::Values(2, 3),
                                            ::testing::Values(BoundaryScheme::strong, BoundaryScheme::weak),
                                            ::testing::Values(Sign::plus, Sign::minus)));

TEST(Assembly, UnitFactorReproducesFlat)
{
    const CliffordRep rep = build_rep(2);
    const Grid g = small_half(2);
    const DiracMatrix a = assemble_flat(rep, g), b = assemble_conformal(rep, g, constant_factor(1.0));
    EXPECT_EQ(max_abs(a.op - b.op), 0.0);
    EXPECT_EQ((a.mass - b.mass).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Assembly, RejectsNonPositiveFactor)
{
    const CliffordRep rep = build_rep(2);
    EXPECT_THROW(assemble_conformal(rep, small_half(2), constant_factor(0.0)), std::invalid_argument);
}

TEST(Assembly, ConstantFactorScalesSpectrum)
{
    const CliffordRep rep = build_rep(2);
    const Grid g = small_half(2);
    const double c = 2.5;
    for (BoundaryScheme s : {BoundaryScheme::strong, BoundaryScheme::weak}) {
        auto a = dense_eigs(apply_bc(assemble_conformal(rep, g, constant_factor(1.0)), rep, Sign::minus, s));
        auto b = dense_eigs(apply_bc(assemble_conformal(rep, g, constant_factor(c)), rep, Sign::minus, s));
        ASSERT_EQ(a.size(), b.size());
        for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(c * b[i], a[i], 1e-12 * std::max(1.0, std::abs(a[i])));
    }
}

TEST(Constraint, KillingSpinorNeedsNoProjection)
{
    const CliffordRep rep = build_rep(2);
    const Grid g = small_half(2, 0.1);
    const DiracMatrix m = apply_chiral_bc(assemble_flat(rep, g), rep, Sign::minus);
    const Eigen::VectorXcd v = sample(g, rep.d, killing_field(rep, Sign::plus));
    const Eigen::VectorXcd back = prolong(m, restrict_to(m, v));
    for (long node = 0; node < g.nodes(); ++node) {
        if (!g.is_physical_boundary(node) || g.face_normals(node).size() != 1) continue;
        EXPECT_LT((sample_node(m, back, node) - sample_node(m, v, node)).norm(), 1e-12);
    }
}

TEST(Constraint, ProjectedRandomSpinorSatisfiesCondition)
{
    const CliffordRep rep = build_rep(3);
    const Grid g = small_half(3);
    const DiracMatrix m = apply_chiral_bc(assemble_flat(rep, g), rep, Sign::minus);
    std::mt19937 gen(9);
    std::normal_distribution<double> nd;
    Eigen::VectorXcd v(g.nodes() * rep.d);
    for (auto& z : v) z = cplx(nd(gen), nd(gen));
    const Eigen::VectorXcd p = prolong(m, restrict_to(m, v));
    const Mat nuG = clifford_matrix(rep, inner_normal(3)) * rep.chirality;
    for (long node = 0; node < g.nodes(); ++node) {
        if (!g.is_physical_boundary(node)) continue;
        const Spinor s = sample_node(m, p, node);
        EXPECT_LT((nuG * s - s).norm(), 1e-12);
    }
}

TEST(Constraint, ChiralityFlipLandsInOppositeSubspace)
{
    const CliffordRep rep = build_rep(2);
    const Mat bp = chiral_projector(rep, inner_normal(2), Sign::plus).matrix;
    for (double x = -1; x <= 1; x += 0.25) {
        Point p(2);
        p << x, 0;
        const Spinor psi = killing_test_spinor(rep, Sign::plus, p);
        // psi = phi+ + phi-  with Gamma phi+- = +-phi+-, so phi+ - phi- = Gamma psi
        EXPECT_LT((bp * (rep.chirality * psi)).norm(), 1e-14);
    }
}

TEST(Covariance, UnitFactorIsExact)
{
    const CliffordRep rep = build_rep(2);
    EXPECT_EQ(covariance_residual(rep, small_half(2, 0.1), constant_factor(1.0), killing_field(rep, Sign::plus)), 0.0);
}

TEST(Covariance, KillingSpinorConvergesAtSecondOrder)
{
    const CliffordRep rep = build_rep(2);
    const auto box = [](double h) { return Grid::box(2, h, {-1.0, 0.0}, {1.0, 1.0}); };
    const double r1 = covariance_residual(rep, box(0.05), hemisphere_factor(), killing_field(rep, Sign::plus));
    const double r2 = covariance_residual(rep, box(0.025), hemisphere_factor(), killing_field(rep, Sign::plus));
    EXPECT_GE(std::log2(r1 / r2), 1.8);
}

TEST(Laplacian, FlatNeumannHasConstantKernel)
{
    const Grid g = Grid::half_space(3, 0.25, 1.0, 1.0);
    const LaplacianPencil lp = assemble_conformal_laplacian(g, constant_factor(1.0));
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(g.nodes());
    EXPECT_LT((lp.stiffness * one).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Laplacian, HemisphereCurvatureAndConstantMode)
{
    const Grid g = Grid::half_space(3, 0.25, 1.0, 1.0);
    const LaplacianPencil lp = assemble_conformal_laplacian(g, hemisphere_factor());
    EXPECT_LT((lp.curvature.array() - 6.0).abs().maxCoeff(), 1e-5);
    EigOptions e;
    e.k = 1;
    const auto r = smallest_eigs<double>(lp.stiffness, lp.mass, e);
    EXPECT_NEAR(r.eigenvalues.front(), 6.0, 1e-5);
}

TEST(Laplacian, RejectsTwoDimensions)
{
    EXPECT_THROW(assemble_conformal_laplacian(small_half(2), hemisphere_factor()), std::invalid_argument);
}

TEST(Laplacian, RejectsBoundaryMeanCurvature)
{
    const ScalarField tilted = [](const Point& p) { return std::exp(0.3 * p(2)); };
    EXPECT_THROW(assemble_conformal_laplacian(Grid::half_space(3, 0.25, 1.0, 1.0), tilted), std::invalid_argument);
}

TEST(Io, CoordinateListRoundTrip)
{
    const CliffordRep rep = build_rep(2);
    const DiracMatrix m = apply_bc(assemble_conformal(rep, small_half(2), hemisphere_factor()), rep, Sign::minus,
                                   BoundaryScheme::weak);
    std::stringstream ss;
    export_coo(m.op, ss);
    const SpMat back = import_coo(ss);
    EXPECT_EQ(max_abs(back - m.op), 0.0);
}

TEST(Io, ConfigParsing)
{
    std::istringstream good("# comment\nn = 3\nh = 0.1\nR_max = 4\nmodel = flat\nsign = plus\nwilson_term = 0.5\n");
    const DiscConfig c = read_config(good);
    EXPECT_EQ(c.n, 3);
    EXPECT_EQ(c.h, 0.1);
    EXPECT_EQ(c.R_max, 4.0);
    EXPECT_EQ(c.model, "flat");
    EXPECT_EQ(c.sign, Sign::plus);
    EXPECT_EQ(c.wilson_term, 0.5);
    std::istringstream bad("n = 2\ncolour = red\n");
    EXPECT_THROW(read_config(bad), std::invalid_argument);
}

TEST(Wilson, KeepsHermiticityAndBreaksPairing)
{
    const CliffordRep rep = build_rep(2);
    const Grid g = small_half(2);
    const DiracMatrix p = apply_bc(assemble_flat(rep, g, 1.0), rep, Sign::plus, BoundaryScheme::weak);
    const DiracMatrix m = apply_bc(assemble_flat(rep, g, 1.0), rep, Sign::minus, BoundaryScheme::weak);
    EXPECT_LT(hermiticity_defect(m), 1e-12);
    auto a = dense_eigs(p), b = dense_eigs(m);
    double defect = 0;
    for (size_t i = 0; i < a.size(); ++i) defect = std::max(defect, std::abs(a[i] + b[b.size() - 1 - i]));
    EXPECT_GT(defect, 1e-3);
}
