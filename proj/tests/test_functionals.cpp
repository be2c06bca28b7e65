#include "chibag/functionals.hpp"
#include "chibag/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace chibag;

namespace {

// omega_n by the recurrence omega_n = 2 pi omega_{n-2} / (n - 1)
double area_by_recurrence(int n)
{
    if (n == 0) return 2.0;
    if (n == 1) return 2 * std::numbers::pi;
    return 2 * std::numbers::pi * area_by_recurrence(n - 2) / (n - 1);
}

double surface_volume_closed_form(double eps, double alpha, double delta)
{
    const double pi = std::numbers::pi;
    const double c = 2 * eps * eps / (eps * eps + alpha * alpha);
    const double inner = pi * 2 * std::pow(eps, 4) * (1 / (eps * eps) - 1 / (eps * eps + alpha * alpha));
    return inner + c * c * 0.5 * pi * (4 * delta * delta - alpha * alpha);
}

} // namespace

TEST(Constants, SphereAreas)
{
    EXPECT_NEAR(sphere_area(1), 2 * std::numbers::pi, 1e-14);
    EXPECT_NEAR(sphere_area(2), 4 * std::numbers::pi, 1e-14);
    for (int n = 0; n <= 8; ++n) EXPECT_NEAR(sphere_area(n), area_by_recurrence(n), 1e-12) << n;
    EXPECT_THROW(sphere_area(-1), std::invalid_argument);
}

TEST(Constants, SphereConstant)
{
    EXPECT_NEAR(sphere_constant(2), std::sqrt(2 * std::numbers::pi), 1e-14);
    for (int n = 2; n <= 6; ++n)
        EXPECT_NEAR(sphere_constant(n), 0.5 * n * std::pow(0.5 * area_by_recurrence(n), 1.0 / n), 1e-12);
    EXPECT_THROW(sphere_constant(1), std::invalid_argument);
}

TEST(Constants, MomentIdentity)
{
    for (int n = 2; n <= 6; ++n) {
        const MomentReport m = moment_integral(n);
        EXPECT_LT(m.residual, 1e-10) << n;
        EXPECT_NEAR(m.lhs, sphere_area(n), 1e-10) << n;
    }
}

TEST(Holder, InequalityAndEqualityCase)
{
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int n : {2, 3, 4}) {
        Eigen::VectorXd m(50), f(50), psi(50);
        for (int i = 0; i < 50; ++i) {
            m(i) = u(gen);
            f(i) = u(gen);
            psi(i) = u(gen);
        }
        const HolderChain h = holder_chain(m, f, psi, n);
        EXPECT_LE(h.lhs, h.rhs * (1 + 1e-14));
        // f proportional to |psi|^{2/(n+1)}
        const Eigen::VectorXd g = 1.7 * psi.array().abs().pow(2.0 / (n + 1));
        const HolderChain e = holder_chain(m, g, psi, n);
        EXPECT_NEAR(e.lhs / e.rhs, 1.0, 1e-12);
    }
    EXPECT_THROW(holder_chain(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(3), 2),
                 std::invalid_argument);
}

TEST(DiscreteFunctionals, RayleighQuotientsOnEigenvectors)
{
    const CliffordRep rep = build_rep(2);
    PencilOptions o;
    o.h = 0.25;
    o.R_max = 2;
    const DiracMatrix D = build_pencil(rep, o);
    const SpectrumResult s = solve_pencil(D, 4, 1e-12, true);
    for (size_t i = 0; i < s.eigenvalues.size(); ++i) {
        const double l = s.eigenvalues[i];
        EXPECT_NEAR(rayleigh_sq(D, s.vectors[i]), l * l, 1e-8);
        EXPECT_NEAR(rayleigh_abs(D, s.vectors[i]), std::abs(l), 1e-8);
    }
}

TEST(DiscreteFunctionals, ScaleInvarianceOfJ)
{
    const CliffordRep rep = build_rep(2);
    PencilOptions o;
    o.h = 0.25;
    o.R_max = 2;
    const DiracMatrix D = build_pencil(rep, o);
    std::mt19937 gen(9);
    std::normal_distribution<double> nd;
    Eigen::VectorXcd psi(D.dofs());
    for (auto& v : psi) v = cplx(nd(gen), nd(gen));
    psi += restrict_to(D, sample(D.grid, D.d, hemisphere_mode(rep, Sign::plus))) * 5.0;
    const double J = conformal_functional(D, psi, 2);
    for (cplx c : {cplx(3.0, 0), cplx(0, -0.2), cplx(1e3, 1e3)})
        EXPECT_NEAR(conformal_functional(D, c * psi, 2) / J, 1.0, 1e-12);
    EXPECT_THROW(conformal_functional(D, Eigen::VectorXcd::Zero(D.dofs()), 2), std::invalid_argument);
    EXPECT_THROW(rayleigh_sq(D, Eigen::VectorXcd::Ones(3)), std::invalid_argument);
}

TEST(Quadrature, HalfBallVolumes)
{
    const auto one = [](const Point&) { return Eigen::VectorXd::Ones(1).eval(); };
    const double R = 1.3;
    const auto q2 = half_ball_integrate(2, {0.0, 0.5, R}, one);
    EXPECT_TRUE(q2.converged);
    EXPECT_NEAR(q2.values[0], std::numbers::pi * R * R / 2, 1e-10);
    const auto q3 = half_ball_integrate(3, {0.0, R}, one);
    EXPECT_NEAR(q3.values[0], 2 * std::numbers::pi * R * R * R / 3, 1e-10);
    // a t-odd integrand on the half-ball: int t = pi R^4 / 4 in 3-D
    const auto tq = half_ball_integrate(3, {0.0, R}, [](const Point& p) { return Eigen::VectorXd::Constant(1, p(2)); });
    EXPECT_NEAR(tq.values[0], std::numbers::pi * std::pow(R, 4) / 4, 1e-10);
}

TEST(Quadrature, GradedBreaks)
{
    const auto b = graded_breaks(0.01, 1.0, {0.3});
    EXPECT_EQ(b.front(), 0.0);
    EXPECT_EQ(b.back(), 1.0);
    EXPECT_NE(std::find(b.begin(), b.end(), 0.3), b.end());
}

TEST(Scan, TestSpinorDiracMatchesDifferences)
{
    for (int n : {2, 3}) {
        const CliffordRep rep = build_rep(n);
        const double eps = 0.1, delta = 0.5;
        const SpinorField field = [&](const Point& p) { return test_spinor_family(rep, eps, delta, p); };
        for (double r : {0.05, 0.3, 0.6, 0.8}) {
            Point p = Point::Constant(n, r / std::sqrt(double(n)));
            const Spinor exact = test_spinor_dirac(rep, eps, delta, p);
            EXPECT_LT((exact - dirac_flat_oracle(rep, field, p, 1e-4)).norm(), 1e-5 * std::max(1.0, exact.norm()));
        }
    }
}

TEST(Scan, PowerLawFitRecovery)
{
    std::vector<double> x, y;
    for (double e : {0.2, 0.1, 0.05, 0.025, 0.0125}) {
        x.push_back(e);
        y.push_back(2.0 + 3.0 * std::pow(e, 1.5));
    }
    const PowerFit f = fit_power_law(x, y);
    EXPECT_NEAR(f.c, 2.0, 1e-8);
    EXPECT_NEAR(f.a, 3.0, 1e-6);
    EXPECT_NEAR(f.p, 1.5, 1e-6);
    EXPECT_THROW(fit_power_law({1, 2}, {1, 2}), std::invalid_argument);
}

TEST(Scan, ArgumentValidation)
{
    EXPECT_THROW(epsilon_scan(2, 0.5, {0.1, 0.05, 0.025}), std::invalid_argument);
    EXPECT_THROW(epsilon_scan(2, 0.5, {0.1, 0.05, 0.05, 0.01}), std::invalid_argument);
    EXPECT_THROW(epsilon_scan(2, 0.5, {0.6, 0.1, 0.05, 0.01}), std::invalid_argument);
    EXPECT_THROW(epsilon_scan(2, 0.5, {0.1, 0.05, 0.01, -0.01}), std::invalid_argument);
}

TEST(Scan, ThreeDimensionalLimit)
{
    const RayleighReport r = epsilon_scan(3, 0.5, {0.1, 0.05, 0.025, 0.0125});
    EXPECT_TRUE(r.monotone);
    EXPECT_NEAR(r.target, sphere_constant(3), 1e-15);
    EXPECT_LT(r.relative_error, 0.02) << r.J_inf;
    for (const ScanPoint& p : r.points) {
        EXPECT_TRUE(p.quad_converged);
        EXPECT_GT(p.J, r.target);
    }
}

TEST(Surface, VolumeMatchesClosedForm)
{
    for (double eps : {0.2, 0.1, 0.05}) {
        const SurfaceReport s = surface_family(eps, 0.3);
        EXPECT_TRUE(s.quad_converged);
        EXPECT_NEAR(s.volume / surface_volume_closed_form(eps, 0.3, 0.3), 1.0, 1e-9);
        EXPECT_EQ(s.continuity_defect, 0.0);
        EXPECT_NEAR(s.target_volume, 2 * std::numbers::pi * eps * eps, 1e-15);
    }
    const SurfaceReport wide = surface_family(0.1, 0.3, 0.6);
    EXPECT_NEAR(wide.volume / surface_volume_closed_form(0.1, 0.3, 0.6), 1.0, 1e-9);
}

TEST(Surface, TrendsAndValidation)
{
    double last_product = 1e300, last_error = 1e300;
    for (double eps : {0.2, 0.1, 0.05}) {
        const SurfaceReport s = surface_family(eps, 0.3);
        EXPECT_LT(s.product, last_product);
        EXPECT_LT(s.volume_rel_error, last_error);
        last_product = s.product;
        last_error = s.volume_rel_error;
    }
    EXPECT_THROW(surface_family(0.4, 0.3), std::invalid_argument);
    EXPECT_THROW(surface_family(0.1, 0.3, 0.2), std::invalid_argument);
    EXPECT_THROW(surface_family(0.0, 0.3), std::invalid_argument);
}
