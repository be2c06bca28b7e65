#pragma once

#include "clifford.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace chibag {

// A point of the closed half-space: p = (x_1, ..., x_{n-1}, t), t = p(n-1) >= 0.
using Point = Eigen::VectorXd;
using SpinorField = std::function<Spinor(const Point&)>;

inline double normal_coord(const Point& p) { return p(p.size() - 1); }

inline RVec inner_normal(int n)
{
    RVec nu = RVec::Zero(n);
    nu(n - 1) = 1.0;
    return nu;
}

// f = 2 / (1 + r^2)
inline double conformal_factor(const Point& p) { return 2.0 / (1.0 + p.squaredNorm()); }

inline Spinor boundary_compatible_parallel(const CliffordRep& rep)
{
    const Mat proj = chiral_projector(rep, inner_normal(rep.n), Sign::plus).matrix;
    for (int k = 0; k < rep.d; ++k) {
        Spinor phi = proj.col(k);
        if (phi.norm() > 1e-8) return phi / phi.norm();
    }
    throw std::logic_error("boundary_compatible_parallel: projector vanished on every basis seed");
}

// psi(+-)(p) = f^{n/2} (Id -+ p.) Phi0 / sqrt 2
inline Spinor killing_test_spinor(const CliffordRep& rep, Sign sign, const Point& p)
{
    const Spinor phi0 = boundary_compatible_parallel(rep);
    const double f = conformal_factor(p);
    const Mat id = Mat::Identity(rep.d, rep.d);
    const Mat g = clifford_matrix(rep, p);
    return std::pow(f, 0.5 * rep.n) / std::sqrt(2.0) * ((id - double(sign_value(sign)) * g) * phi0);
}

// D_xi psi(+-) by the product rule, using grad f = -f^2 p and sum_i g_i g_i = -n.
inline Spinor killing_dirac_exact(const CliffordRep& rep, Sign sign, const Point& p)
{
    const Spinor phi0 = boundary_compatible_parallel(rep);
    const int n = rep.n;
    const double f = conformal_factor(p);
    const double s = sign_value(sign);
    const Mat id = Mat::Identity(rep.d, rep.d);
    const Mat g = clifford_matrix(rep, p);
    const RVec grad_amp = (0.5 * n) * std::pow(f, 0.5 * n - 1.0) * (-f * f) * p;
    const Spinor a = clifford_matrix(rep, grad_amp) * ((id - s * g) * phi0);
    const Spinor b = std::pow(f, 0.5 * n) * (s * n) * phi0;
    return (a + b) / std::sqrt(2.0);
}

inline SpinorField killing_field(const CliffordRep& rep, Sign sign)
{
    return [rep, sign](const Point& p) { return killing_test_spinor(rep, sign, p); };
}

// Second-order finite-difference D_xi = sum g_i d_i; one-sided in t within h of the boundary.
inline Spinor dirac_flat_oracle(const CliffordRep& rep, const SpinorField& field, const Point& p, double h)
{
    Spinor out = Spinor::Zero(rep.d);
    for (int i = 0; i < rep.n; ++i) {
        Point e = Point::Zero(rep.n);
        e(i) = h;
        Spinor di;
        if (i == rep.n - 1 && normal_coord(p) < h)
            di = (-3.0 * field(p) + 4.0 * field(p + e) - field(p + 2 * e)) / (2 * h);
        else
            di = (field(p + e) - field(p - e)) / (2 * h);
        out += rep.gamma[i] * di;
    }
    return out;
}

struct SampleGrid {
    int n = 2;
    double half_width = 2.0;  // tangential coordinates in [-L, L]
    double height = 2.0;      // t in [0, T]
    int points = 21;          // per axis (the first axis uses 2*points-1 for n=2 to get 41x21)

    std::vector<Point> nodes() const
    {
        std::vector<int> counts(n, points);
        if (n == 2) counts[0] = 2 * points - 1;
        std::vector<Point> out;
        std::vector<int> idx(n, 0);
        while (true) {
            Point p(n);
            for (int k = 0; k < n; ++k) {
                if (k == n - 1)
                    p(k) = height * idx[k] / double(counts[k] - 1);
                else
                    p(k) = -half_width + 2 * half_width * idx[k] / double(counts[k] - 1);
            }
            out.push_back(p);
            int k = 0;
            while (k < n && ++idx[k] == counts[k]) idx[k++] = 0;
            if (k == n) break;
        }
        return out;
    }
};

struct KillingReport {
    double residual_pde = 0;     // max |D psi -+ (n/2) f psi| with the FD oracle at step h
    double residual_pde_half = 0;  // same at step h/2
    double observed_order = 0;
    double residual_norm = 0;    // max | |psi|^2 - f^{n-1} |
    double residual_dnorm = 0;   // max | |D psi|^2 - (n/2)^2 f^{n+1} |
    double residual_bc = 0;      // max |B^- psi| on t = 0
    int grid_points = 0;
    double h = 0;
    bool pass = false;
};

struct KillingTolerances {
    double algebraic = 1e-10;
    double pde_constant = 100.0;  // residual_pde < C h^2
    double min_order = 1.8;
};

// The pointwise modulus of D psi uses the product-rule derivative; the PDE residual uses the
// independent FD oracle.  The literal identity |D psi|^2 = f^{n+1} only holds for n = 2;
// in general |D psi|^2 = (n/2)^2 f^{n+1}.
inline KillingReport verify_killing(const CliffordRep& rep, Sign sign, const SampleGrid& grid, double h = 1e-3,
                                    const SpinorField& field_override = {}, const KillingTolerances& tol = {})
{
    KillingReport r;
    r.h = h;
    const SpinorField field = field_override ? field_override : killing_field(rep, sign);
    const int n = rep.n;
    const double s = sign_value(sign);
    const Mat bminus = chiral_projector(rep, inner_normal(n), Sign::minus).matrix;
    const auto nodes = grid.nodes();
    r.grid_points = int(nodes.size());
    for (const auto& p : nodes) {
        const double f = conformal_factor(p);
        const Spinor psi = field(p);
        const Spinor target = s * 0.5 * n * f * psi;
        r.residual_pde = std::max(r.residual_pde, (dirac_flat_oracle(rep, field, p, h) - target).norm());
        r.residual_pde_half =
            std::max(r.residual_pde_half, (dirac_flat_oracle(rep, field, p, 0.5 * h) - target).norm());
        r.residual_norm = std::max(r.residual_norm, std::abs(psi.squaredNorm() - std::pow(f, n - 1)));
        const Spinor dpsi = killing_dirac_exact(rep, sign, p);
        r.residual_dnorm =
            std::max(r.residual_dnorm, std::abs(dpsi.squaredNorm() - 0.25 * n * n * std::pow(f, n + 1)));
        if (normal_coord(p) == 0.0) r.residual_bc = std::max(r.residual_bc, (bminus * psi).norm());
    }
    r.observed_order = std::log2(r.residual_pde / r.residual_pde_half);
    r.pass = r.residual_norm < tol.algebraic && r.residual_dnorm < tol.algebraic && r.residual_bc < tol.algebraic &&
             r.residual_pde < tol.pde_constant * h * h && r.observed_order >= tol.min_order;
    return r;
}

// C^2 quintic step: s(u) = 6u^5 - 15u^4 + 10u^3 on [0,1]
inline double smoothstep5(double u)
{
    if (u <= 0) return 0;
    if (u >= 1) return 1;
    return u * u * u * (u * (6 * u - 15) + 10);
}

inline double cutoff(double r, double delta) { return 1.0 - smoothstep5((r - delta) / delta); }
inline double cutoff(const Point& p, double delta) { return cutoff(p.norm(), delta); }

// |d eta / dr|
inline double cutoff_slope(double r, double delta)
{
    const double u = (r - delta) / delta;
    if (u <= 0 || u >= 1) return 0.0;
    return 30 * u * u * (u - 1) * (u - 1) / delta;
}

// psi_eps(p) = eta(p) psi+(p / eps)
inline Spinor test_spinor_family(const CliffordRep& rep, double eps, double delta, const Point& p)
{
    const double eta = cutoff(p, delta);
    if (eta == 0.0) return Spinor::Zero(rep.d);
    return eta * killing_test_spinor(rep, Sign::plus, Point(p / eps));
}

} // namespace chibag
