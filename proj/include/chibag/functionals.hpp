#pragma once

#include "constants.hpp"
#include "dirac_disc.hpp"
#include "fields.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace chibag {

// ---------------------------------------------------------------------------------------------
// Discrete functionals.  psi is in the coordinates of D (reduced coordinates after a strong
// reduction, nodal otherwise); integrals are mass-weighted sums and D psi = M^{-1} A psi.

inline double pairing(const DiracMatrix& D, const Eigen::VectorXcd& psi)
{
    return std::real(psi.dot(D.op * psi));
}

inline double dirac_energy(const DiracMatrix& D, const Eigen::VectorXcd& psi)
{
    const Eigen::VectorXcd a = D.op * psi;
    return (a.array().abs2() / D.mass.array()).sum();
}

inline double rayleigh_sq(const DiracMatrix& D, const Eigen::VectorXcd& psi)
{
    if (psi.size() != D.dofs()) throw std::invalid_argument("rayleigh_sq: vector and operator sizes differ");
    const double den = (psi.array().abs2() * D.mass.array()).sum();
    if (den == 0) throw std::invalid_argument("rayleigh_sq: zero spinor");
    return dirac_energy(D, psi) / den;
}

inline double rayleigh_abs(const DiracMatrix& D, const Eigen::VectorXcd& psi)
{
    if (psi.size() != D.dofs()) throw std::invalid_argument("rayleigh_abs: vector and operator sizes differ");
    const double den = std::abs(pairing(D, psi));
    if (den == 0) throw std::invalid_argument("rayleigh_abs: vanishing pairing");
    return dirac_energy(D, psi) / den;
}

// J(psi) = (int |D psi|^{2n/(n+1)})^{(n+1)/n} / |int Re<D psi, psi>|, with |D psi| taken per node
inline double conformal_functional(const DiracMatrix& D, const Eigen::VectorXcd& psi, int n)
{
    if (psi.size() != D.dofs()) throw std::invalid_argument("conformal_functional: vector and operator sizes differ");
    const double den = std::abs(pairing(D, psi));
    if (den == 0) throw std::invalid_argument("conformal_functional: vanishing pairing");
    const Eigen::VectorXcd dpsi = prolong(D, (D.op * psi).cwiseQuotient(D.mass.cast<cplx>()));
    const Grid& g = D.grid;
    const double q = double(n) / (n + 1);
    double num = 0;
    for (long node = 0; node < g.nodes(); ++node) {
        const double w = g.weight(node) * std::pow(D.node_factor(node), g.n);
        num += w * std::pow(dpsi.segment(node * D.d, D.d).squaredNorm(), q);
    }
    return std::pow(num, (n + 1.0) / n) / den;
}

struct HolderChain {
    double lhs = 0;  // (sum m |psi|^{2n/(n+1)})^{(n+1)/n}
    double rhs = 0;  // (sum m f^{-1} |psi|^2) (sum m f^n)^{1/n}
};

// |psi| holds pointwise moduli; m positive weights; f positive
inline HolderChain holder_chain(const Eigen::VectorXd& m, const Eigen::VectorXd& f, const Eigen::VectorXd& psi, int n)
{
    if (m.size() != f.size() || m.size() != psi.size()) throw std::invalid_argument("holder_chain: size mismatch");
    HolderChain h;
    const Eigen::ArrayXd a = psi.array().abs2();
    h.lhs = std::pow((m.array() * a.pow(double(n) / (n + 1))).sum(), (n + 1.0) / n);
    h.rhs = (m.array() * a / f.array()).sum() * std::pow((m.array() * f.array().pow(n)).sum(), 1.0 / n);
    return h;
}

// ---------------------------------------------------------------------------------------------
// Quadrature over the half-ball {|p| < R, t >= 0} in polar coordinates: Gauss-Legendre on each
// radial panel between consecutive breakpoints, tensor Gauss-Legendre over the half-sphere of
// directions.  Each panel is halved until two successive levels agree.

struct QuadratureResult {
    std::vector<double> values;
    double rel_change = 0;  // between the last two refinement levels
    int level = 0;
    bool converged = false;
};

namespace detail {

// unit directions on the upper half-sphere with their weights (sum = omega_{n-1}/2)
inline std::vector<std::pair<Point, double>> half_sphere_rule(int n, int m)
{
    using GL = boost::math::quadrature::gauss<double, 16>;
    auto nodes = [&](double a, double b, int reps) {
        std::vector<std::pair<double, double>> out;
        for (int r = 0; r < reps; ++r) {
            const double lo = a + (b - a) * r / reps, hi = a + (b - a) * (r + 1) / reps;
            const double c = 0.5 * (lo + hi), s = 0.5 * (hi - lo);
            const auto& x = GL::abscissa();
            const auto& w = GL::weights();
            for (size_t i = 0; i < x.size(); ++i) {
                if (x[i] == 0) {
                    out.emplace_back(c, s * w[i]);
                    continue;
                }
                out.emplace_back(c + s * x[i], s * w[i]);
                out.emplace_back(c - s * x[i], s * w[i]);
            }
        }
        return out;
    };
    std::vector<std::pair<Point, double>> rule;
    const double pi = std::numbers::pi;
    if (n == 2) {
        for (auto [th, w] : nodes(0, pi, m)) {
            Point p(2);
            p << std::cos(th), std::sin(th);
            rule.emplace_back(p, w);
        }
    } else if (n == 3) {
        // polar angle measured from the normal axis
        for (auto [th, wt] : nodes(0, 0.5 * pi, m))
            for (auto [ph, wp] : nodes(0, 2 * pi, 2 * m)) {
                Point p(3);
                p << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
                rule.emplace_back(p, wt * wp * std::sin(th));
            }
    } else {
        throw std::invalid_argument("half_sphere_rule: n must be 2 or 3");
    }
    return rule;
}

} // namespace detail

// integrates each component of F over the half-ball; F returns a fixed-size vector of reals
inline QuadratureResult half_ball_integrate(int n, std::vector<double> breaks,
                                            const std::function<Eigen::VectorXd(const Point&)>& F,
                                            double rel_tol = 1e-10, int max_level = 6)
{
    using GL = boost::math::quadrature::gauss<double, 20>;
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    const auto dirs = detail::half_sphere_rule(n, 1);
    auto run = [&](int level) {
        Eigen::VectorXd acc;
        const int split = 1 << level;
        for (size_t b = 0; b + 1 < breaks.size(); ++b)
            for (int s = 0; s < split; ++s) {
                const double lo = breaks[b] + (breaks[b + 1] - breaks[b]) * s / split;
                const double hi = breaks[b] + (breaks[b + 1] - breaks[b]) * (s + 1) / split;
                const double c = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
                auto add = [&](double r, double wr) {
                    for (const auto& [u, wu] : dirs) {
                        const Eigen::VectorXd v = F(Point(r * u)) * (wr * wu * std::pow(r, n - 1));
                        if (acc.size() == 0)
                            acc = v;
                        else
                            acc += v;
                    }
                };
                const auto& x = GL::abscissa();
                const auto& w = GL::weights();
                for (size_t i = 0; i < x.size(); ++i) {
                    add(c + hw * x[i], hw * w[i]);
                    if (x[i] != 0) add(c - hw * x[i], hw * w[i]);
                }
            }
        return acc;
    };
    QuadratureResult q;
    Eigen::VectorXd prev = run(0);
    for (int level = 1; level <= max_level; ++level) {
        const Eigen::VectorXd cur = run(level);
        double change = 0;
        for (int i = 0; i < cur.size(); ++i)
            change = std::max(change, std::abs(cur(i) - prev(i)) / std::max(std::abs(cur(i)), 1e-300));
        q.values.assign(cur.data(), cur.data() + cur.size());
        q.rel_change = change;
        q.level = level;
        if (change < rel_tol) {
            q.converged = true;
            break;
        }
        prev = cur;
    }
    return q;
}

// breakpoints graded geometrically around the scale eps, plus the given extra points, up to R
inline std::vector<double> graded_breaks(double eps, double R, const std::vector<double>& extra = {})
{
    std::vector<double> b{0.0};
    for (double s = 0.125 * eps; s < R; s *= 2) b.push_back(s);
    for (double e : extra)
        if (e > 0 && e < R) b.push_back(e);
    b.push_back(R);
    return b;
}

// ---------------------------------------------------------------------------------------------
// epsilon-scan of J on the flat half-space with the cutoff test spinor eta(p) psi+(p/eps)

struct ScanPoint {
    double eps = 0;
    double J = 0;
    double numerator = 0;    // int |D psi|^{2n/(n+1)}
    double denominator = 0;  // int Re<D psi, psi>
    double quad_change = 0;
    bool quad_converged = false;
};

struct RayleighReport {
    std::vector<ScanPoint> points;  // eps strictly decreasing
    double J_inf = 0;
    double fit_a = 0;
    double fit_p = 0;
    double fit_residual = 0;
    double target = 0;
    double relative_error = 0;
    bool monotone = false;
    bool pass = false;
};

// D (eta psi+(p/eps)) = gamma(grad eta) psi+(p/eps) + (eta/eps) (D psi+)(p/eps)
inline Spinor test_spinor_dirac(const CliffordRep& rep, double eps, double delta, const Point& p)
{
    const double r = p.norm();
    const double eta = cutoff(r, delta);
    const Point q = p / eps;
    Spinor out = (eta / eps) * killing_dirac_exact(rep, Sign::plus, q);
    const double slope = cutoff_slope(r, delta);
    if (slope != 0 && r > 0) out -= clifford_matrix(rep, (slope / r) * p) * killing_test_spinor(rep, Sign::plus, q);
    return out;
}

inline ScanPoint evaluate_scan_point(const CliffordRep& rep, double eps, double delta, double quad_tol = 1e-10)
{
    const int n = rep.n;
    const double q = double(n) / (n + 1);
    auto F = [&](const Point& p) {
        Eigen::VectorXd v(2);
        if (cutoff(p.norm(), delta) == 0.0) return Eigen::VectorXd::Zero(2).eval();
        const Spinor psi = test_spinor_family(rep, eps, delta, p);
        const Spinor dpsi = test_spinor_dirac(rep, eps, delta, p);
        v(0) = std::pow(dpsi.squaredNorm(), q);
        v(1) = std::real(psi.dot(dpsi));
        return v;
    };
    const auto quad = half_ball_integrate(n, graded_breaks(eps, 2 * delta, {delta}), F, quad_tol);
    ScanPoint s;
    s.eps = eps;
    s.numerator = quad.values[0];
    s.denominator = quad.values[1];
    s.J = std::pow(s.numerator, (n + 1.0) / n) / std::abs(s.denominator);
    s.quad_change = quad.rel_change;
    s.quad_converged = quad.converged;
    return s;
}

struct PowerFit {
    double c = 0, a = 0, p = 0, residual = 0;
};

// least squares y = c + a x^p: linear in (c, a) for fixed p, p by grid search then golden section
inline PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double pmin = 0.25,
                              double pmax = 8.0)
{
    if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("fit_power_law: need >= 3 points");
    auto solve = [&](double p) {
        Eigen::MatrixXd A(x.size(), 2);
        Eigen::VectorXd b(x.size());
        for (size_t i = 0; i < x.size(); ++i) {
            A(i, 0) = 1.0;
            A(i, 1) = std::pow(x[i], p);
            b(i) = y[i];
        }
        const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
        PowerFit f{c(0), c(1), p, (A * c - b).norm()};
        return f;
    };
    PowerFit best = solve(pmin);
    const int steps = 400;
    for (int i = 1; i <= steps; ++i) {
        const PowerFit f = solve(pmin + (pmax - pmin) * i / steps);
        if (f.residual < best.residual) best = f;
    }
    double lo = std::max(pmin, best.p - (pmax - pmin) / steps), hi = std::min(pmax, best.p + (pmax - pmin) / steps);
    const double g = 0.5 * (std::sqrt(5.0) - 1);
    for (int it = 0; it < 80; ++it) {
        const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
        if (solve(m1).residual < solve(m2).residual)
            hi = m2;
        else
            lo = m1;
    }
    const PowerFit f = solve(0.5 * (lo + hi));
    return f.residual <= best.residual ? f : best;
}

inline RayleighReport epsilon_scan(int n, double delta, const std::vector<double>& eps_list, double tol = 0.02,
                                   double quad_tol = 1e-10)
{
    if (eps_list.size() < 4) throw std::invalid_argument("epsilon_scan: need at least 4 eps values");
    for (size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0) || eps_list[i] > delta)
            throw std::invalid_argument("epsilon_scan: eps values must lie in (0, delta]");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
            throw std::invalid_argument("epsilon_scan: eps list must be strictly decreasing");
    }
    const CliffordRep rep = build_rep(n);
    RayleighReport r;
    std::vector<double> xs, ys;
    for (double eps : eps_list) {
        r.points.push_back(evaluate_scan_point(rep, eps, delta, quad_tol));
        xs.push_back(eps);
        ys.push_back(r.points.back().J);
    }
    const PowerFit f = fit_power_law(xs, ys);
    r.J_inf = f.c;
    r.fit_a = f.a;
    r.fit_p = f.p;
    r.fit_residual = f.residual;
    r.target = sphere_constant(n);
    r.relative_error = std::abs(r.J_inf - r.target) / r.target;
    r.monotone = true;
    for (size_t i = 1; i < ys.size(); ++i)
        if (!(ys[i] < ys[i - 1])) r.monotone = false;
    bool quad_ok = true;
    for (const auto& p : r.points) quad_ok = quad_ok && p.quad_converged;
    r.pass = quad_ok && r.relative_error < tol;
    return r;
}

// ---------------------------------------------------------------------------------------------
// Surfaces: the metric g_eps = f_eps^2 xi on the flat half-disk M = B+(2 delta), with
// f_eps = 2 eps^2 / (eps^2 + r^2) for r <= alpha and constant beyond.

inline double surface_factor(double r, double eps, double alpha)
{
    const double rr = std::min(r, alpha);
    return 2 * eps * eps / (eps * eps + rr * rr);
}

struct SurfaceReport {
    double eps = 0, alpha = 0, delta = 0;
    double lambda_bound = 0;  // Rayleigh quotient of the transferred test spinor in g_eps
    double volume = 0;        // Vol(M, g_eps)
    double product = 0;
    double target_volume = 0;  // 2 pi eps^2
    double volume_rel_error = 0;
    double continuity_defect = 0;  // |f(alpha-) - f(alpha+)|
    bool quad_converged = false;
};

// Rayleigh quotient of phi = f_eps^{-1/2} psi_eps in g_eps, psi_eps = eta psi+(x/eps).  With
// D_g phi = f^{-3/2} D_xi psi and dv_g = f^2 dx the integrands are f^{-1}|D psi|^2 and Re<D psi, psi>.
inline SurfaceReport surface_family(double eps, double alpha, double delta = 0)
{
    if (delta == 0) delta = alpha;
    if (!(eps > 0) || eps > alpha || alpha > delta)
        throw std::invalid_argument("surface_family: need 0 < eps <= alpha <= delta");
    const CliffordRep rep = build_rep(2);
    SurfaceReport s;
    s.eps = eps;
    s.alpha = alpha;
    s.delta = delta;
    const double c = 2 * eps * eps / (eps * eps + alpha * alpha);
    s.continuity_defect =
        std::abs(surface_factor(alpha, eps, alpha) - c) + std::abs(surface_factor(std::nextafter(alpha, 1e9), eps, alpha) - c);
    const double R = 2 * delta;
    auto F = [&](const Point& p) {
        Eigen::VectorXd v(3);
        const double f = surface_factor(p.norm(), eps, alpha);
        const Spinor psi = test_spinor_family(rep, eps, delta, p);
        const Spinor dpsi = test_spinor_dirac(rep, eps, delta, p);
        const double fg = std::pow(f, -1.5);      // f^{-(n+1)/2}
        const double fs = std::pow(f, -0.5);      // f^{-(n-1)/2}
        const Spinor dphi = fg * dpsi;
        const Spinor phi = fs * psi;
        v(0) = dphi.squaredNorm() * f * f;
        v(1) = std::real(phi.dot(dphi)) * f * f;
        v(2) = f * f;
        return v;
    };
    const auto q = half_ball_integrate(2, graded_breaks(eps, R, {alpha, delta}), F);
    s.lambda_bound = q.values[0] / std::abs(q.values[1]);
    s.volume = q.values[2];
    s.product = s.lambda_bound * std::sqrt(s.volume);
    s.target_volume = 2 * std::numbers::pi * eps * eps;
    s.volume_rel_error = std::abs(s.volume - s.target_volume) / s.target_volume;
    s.quad_converged = q.converged;
    return s;
}

} // namespace chibag
