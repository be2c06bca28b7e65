#include "chibag/spectral.hpp"

#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace chibag;

namespace {

using SpD = Eigen::SparseMatrix<double>;

// Neumann Laplacian on [0, 1] with trapezoidal mass: A = stiffness / h, M = h (1/2 at the ends)
std::pair<SpD, Eigen::VectorXd> neumann_1d(double h)
{
    const int N = int(std::lround(1.0 / h)) + 1;
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i + 1 < N; ++i) {
        t.emplace_back(i, i, 1 / h);
        t.emplace_back(i + 1, i + 1, 1 / h);
        t.emplace_back(i, i + 1, -1 / h);
        t.emplace_back(i + 1, i, -1 / h);
    }
    SpD A(N, N);
    A.setFromTriplets(t.begin(), t.end());
    Eigen::VectorXd m = Eigen::VectorXd::Constant(N, h);
    m(0) = m(N - 1) = h / 2;
    return {A, m};
}

} // namespace

TEST(Eigensolver, NeumannDenseAndSparse)
{
    const double pi2 = std::numbers::pi * std::numbers::pi;
    for (double h : {0.01, 0.001}) {
        auto [A, m] = neumann_1d(h);
        EigOptions o;
        o.k = 2;
        o.tol = 1e-10;
        const auto r = smallest_eigs<double>(A, m, o);
        ASSERT_EQ(r.eigenvalues.size(), 2u);
        EXPECT_NEAR(r.eigenvalues[0], 0.0, 1e-6) << h;
        EXPECT_NEAR(r.eigenvalues[1] / pi2, 1.0, 1e-3) << h;
        if (A.rows() > 400) EXPECT_TRUE(r.converged);
    }
}

TEST(Eigensolver, DiagonalPencil)
{
    SpD A(3, 3);
    A.insert(0, 0) = 3;
    A.insert(1, 1) = -1;
    A.insert(2, 2) = 2;
    EigOptions o;
    o.k = 1;
    const auto r = smallest_eigs<double>(A, Eigen::VectorXd::Ones(3), o);
    EXPECT_NEAR(r.eigenvalues.front(), -1.0, 1e-12);
}

TEST(Eigensolver, RejectsBadInput)
{
    SpD A(3, 3);
    A.setIdentity();
    EXPECT_THROW(smallest_eigs<double>(A, Eigen::VectorXd::Ones(2)), std::invalid_argument);
    EXPECT_THROW(smallest_eigs<double>(A, -Eigen::VectorXd::Ones(3)), std::invalid_argument);
    EigOptions o;
    o.k = 0;
    EXPECT_THROW(smallest_eigs<double>(A, Eigen::VectorXd::Ones(3), o), std::invalid_argument);
}

#ifdef CHIBAG_HAVE_UMFPACK
TEST(Eigensolver, BackendsAgree)
{
    auto [A, m] = neumann_1d(0.002);
    EigOptions o;
    o.k = 4;
    o.tol = 1e-10;
    o.shift = 1.0;
    o.backend = Backend::umfpack;
    const auto a = smallest_eigs<double>(A, m, o);
    o.backend = Backend::sparse_lu;
    const auto b = smallest_eigs<double>(A, m, o);
    ASSERT_EQ(a.eigenvalues.size(), b.eigenvalues.size());
    for (size_t i = 0; i < a.eigenvalues.size(); ++i)
        EXPECT_NEAR(a.eigenvalues[i], b.eigenvalues[i], 1e-8 * std::max(1.0, std::abs(a.eigenvalues[i])));
}
#endif

TEST(Eigensolver, ClusterMerging)
{
    const auto c = cluster_eigenvalues({1.0, 1.0 + 1e-9, 2.0, -1.0});
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c[1].multiplicity, 2);
}

TEST(Models, NamesRoundTrip)
{
    for (Model m : {Model::flat, Model::hemisphere, Model::disk, Model::perturbed})
        EXPECT_EQ(parse_model(to_string(m)), m);
    EXPECT_THROW(parse_model("torus"), std::invalid_argument);
}

TEST(Symmetry, FlatAndHemisphere)
{
    const CliffordRep rep = build_rep(2);
    PencilOptions o;
    o.h = 0.25;
    o.R_max = 2;
    o.model = Model::flat;
    EXPECT_TRUE(spectral_symmetry_check(rep, o, 6).pass);
    o.model = Model::hemisphere;
    const SymmetryReport r = spectral_symmetry_check(rep, o, 4);
    EXPECT_TRUE(r.pass) << r.max_pair_defect;
    EXPECT_LT(r.max_pair_defect, 1e-8);
}

TEST(Symmetry, MismatchedPencilsAreRejected)
{
    const CliffordRep rep = build_rep(2);
    PencilOptions o;
    o.h = 0.25;
    o.R_max = 2;
    o.sign = Sign::plus;
    const DiracMatrix p = build_pencil(rep, o);
    o.sign = Sign::minus;
    o.h = 0.5;
    const DiracMatrix m = build_pencil(rep, o);
    EXPECT_THROW(spectral_symmetry_check(p, m), std::invalid_argument);
    EXPECT_THROW(spectral_symmetry_check(p, p), std::invalid_argument);
}

TEST(Hemisphere, CoarseSanity)
{
    PencilOptions o;
    o.h = 0.1;
    o.R_max = 4;
    const HemisphereReport r = hemisphere_spectrum(o, 8, 1e-10);
    EXPECT_NEAR(r.target_lambda, 1.0, 1e-15);
    EXPECT_NEAR(r.target_vol, 2 * std::numbers::pi, 1e-12);
    EXPECT_NEAR(r.lambda1, 1.0, 0.1);
    for (double res : r.spectrum.residuals) EXPECT_LT(res, 1e-8);
    // the continuum Killing mode lives in the lambda_1 cluster, and that cluster holds the
    // 2^n taste copies
    EXPECT_GT(r.profile_overlap, 0.95);
    EXPECT_EQ(r.cluster_size, 4);
    o.sign = Sign::plus;
    EXPECT_GT(hemisphere_spectrum(o, 8, 1e-10).profile_overlap, 0.95);
}

TEST(Hemisphere, TasteCopiesAreNodallyRough)
{
    // each taste alternates in sign along some axis, so the nodal indicator cannot single out the
    // physical mode; a smooth sampled field scores O(h^2)
    PencilOptions o;
    o.h = 0.1;
    o.R_max = 4;
    const CliffordRep rep = build_rep(2);
    const DiracMatrix m = build_pencil(rep, o);
    const Eigen::VectorXcd smooth = restrict_to(m, sample(m.grid, m.d, hemisphere_mode(rep, Sign::plus)));
    EXPECT_LT(roughness_indicator(m, smooth), 0.02);
    Eigen::VectorXcd checker = smooth;
    for (long node = 0; node < m.grid.nodes(); ++node) {
        const auto idx = m.grid.multi_index(node);
        int parity = 0;
        for (int a = 0; a < m.grid.n; ++a) parity += idx[a];
        if (parity % 2) checker.segment(node * m.d, m.d) *= -1;
    }
    EXPECT_GT(roughness_indicator(m, restrict_to(m, checker)), 0.8);
}

TEST(Hijazi, RequiresDimensionThree)
{
    PencilOptions o;
    o.n = 2;
    EXPECT_THROW(hijazi_check(o), std::invalid_argument);
}

TEST(Disk, BesselRootAgainstBracketedSolve)
{
    // J_0(k) = J_1(k) has its first positive root in (1, 2)
    auto g = [](double k) { return std::cyl_bessel_j(0.0, k) - std::cyl_bessel_j(1.0, k); };
    boost::uintmax_t iters = 200;
    const auto [lo, hi] =
        boost::math::tools::toms748_solve(g, 1.0, 2.0, boost::math::tools::eps_tolerance<double>(50), iters);
    const double oracle = 0.5 * (lo + hi);
    EXPECT_NEAR(oracle, 1.434695650819176, 1e-12);
    EXPECT_NEAR(disk_bessel_root(), oracle, 1e-10);
}
