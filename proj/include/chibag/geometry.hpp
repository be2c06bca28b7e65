#pragma once

#include "clifford.hpp"
#include "fields.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace chibag {

using RMat = Eigen::MatrixXd;

// Expansion of g^{ij} - delta^{ij} (tangential block) at q in the monomials t, t^2, x^a t, x^a x^b.
struct MetricExpansion {
    RMat t;                  // = 2 h
    RMat tt;                 // = 3 h h + R~_nn
    std::vector<RMat> xt;    // [a]
    std::vector<RMat> xx;    // [pair index of (a <= b)], coefficient of the monomial x^a x^b
    double fit_residual = 0; // max over entries
    double condition = 0;    // of the scaled design matrix
};

inline int pair_index(int a, int b, int m)
{
    if (a > b) std::swap(a, b);
    return a * m - a * (a - 1) / 2 + (b - a);
}

// Metric in Fermi form dt^2 + g_ij(x,t) dx^i dx^j; the last coordinate is t.
struct MetricChart {
    int n = 2;
    std::string name;
    std::function<RMat(const Point&)> metric;
    double radius = std::numeric_limits<double>::infinity();  // queries with |p| >= radius are rejected
    std::optional<MetricExpansion> declared;                    // analytic expansion of g^{-1} at q

    RMat g(const Point& p) const
    {
        if (p.size() != n) throw std::invalid_argument("MetricChart(" + name + "): point has wrong dimension");
        if (!(p.norm() < radius))
            throw std::out_of_range("MetricChart(" + name + "): point outside the chart domain");
        return metric(p);
    }
};

namespace detail {

inline MetricExpansion zero_expansion(int m)
{
    MetricExpansion e;
    e.t = RMat::Zero(m, m);
    e.tt = RMat::Zero(m, m);
    e.xt.assign(m, RMat::Zero(m, m));
    e.xx.assign(m * (m + 1) / 2, RMat::Zero(m, m));
    return e;
}

inline RMat embed_tangential(const RMat& gt)
{
    const int m = int(gt.rows());
    RMat g = RMat::Identity(m + 1, m + 1);
    g.topLeftCorner(m, m) = gt;
    return g;
}

} // namespace detail

inline MetricChart flat_chart(int n)
{
    MetricChart c;
    c.n = n;
    c.name = "flat";
    c.metric = [n](const Point&) { return RMat::Identity(n, n).eval(); };
    c.declared = detail::zero_expansion(n - 1);
    return c;
}

// Round hemisphere: dt^2 + cos^2 t sigma(x), sigma the round S^{n-1} metric in normal coordinates.
inline MetricChart fermi_chart_hemisphere(int n)
{
    if (n < 2) throw std::invalid_argument("fermi_chart_hemisphere: n must be >= 2");
    const int m = n - 1;
    MetricChart c;
    c.n = n;
    c.name = "hemisphere";
    c.radius = 0.5 * std::numbers::pi;
    c.metric = [m](const Point& p) {
        const Eigen::VectorXd x = p.head(m);
        const double t = p(m);
        const double rho = x.norm();
        RMat sigma = RMat::Identity(m, m);
        if (m > 1 && rho > 0) {
            const Eigen::VectorXd u = x / rho;
            const double s = std::sin(rho) / rho;
            sigma = u * u.transpose() + s * s * (RMat::Identity(m, m) - u * u.transpose());
        }
        return detail::embed_tangential(std::cos(t) * std::cos(t) * sigma);
    };
    MetricExpansion e = detail::zero_expansion(m);
    e.tt = RMat::Identity(m, m);  // cos^{-2} t = 1 + t^2 + ...
    // sigma^{ij} = delta + (rho^2 delta_ij - x_i x_j) / 3 + O(rho^4)
    if (m > 1)
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b) {
                RMat& k = e.xx[pair_index(a, b, m)];
                if (a == b) {
                    k = RMat::Identity(m, m) / 3.0;
                    k(a, a) -= 1.0 / 3.0;
                } else {
                    k(a, b) = k(b, a) = -1.0 / 3.0;
                }
            }
    c.declared = e;
    return c;
}

// Flat half-plane above the curve t = kappa x^2 / 2, in Fermi coordinates (s, t) of the curve:
// ds^2 = dt^2 + (1 - k(s) t)^2 ds^2 with k the curvature at arclength s.
inline MetricChart graph_chart(double kappa)
{
    MetricChart c;
    c.n = 2;
    c.name = "graph:" + std::to_string(kappa);
    c.radius = kappa != 0 ? 0.5 / std::abs(kappa) : std::numeric_limits<double>::infinity();
    auto curvature_at = [kappa](double s) {
        // invert s(x) = int_0^x sqrt(1 + kappa^2 u^2) du by Newton
        double x = s;
        for (int it = 0; it < 50; ++it) {
            const double q = kappa * x;
            const double sx = q == 0 ? x : 0.5 * (x * std::sqrt(1 + q * q) + std::asinh(q) / kappa);
            const double dx = (sx - s) / std::sqrt(1 + q * q);
            x -= dx;
            if (std::abs(dx) < 1e-16 * std::max(1.0, std::abs(x))) break;
        }
        return kappa / std::pow(1 + kappa * kappa * x * x, 1.5);
    };
    c.metric = [curvature_at](const Point& p) {
        const double w = 1 - curvature_at(p(0)) * p(1);
        RMat g = RMat::Identity(2, 2);
        g(0, 0) = w * w;
        return g;
    };
    MetricExpansion e = detail::zero_expansion(1);
    e.t(0, 0) = 2 * kappa;
    e.tt(0, 0) = 3 * kappa * kappa;
    c.declared = e;
    return c;
}

// n = 3, g_ij = (1 + c x_1 t) delta_ij
inline MetricChart synthetic_chart(double c0 = 0.1)
{
    MetricChart c;
    c.n = 3;
    c.name = "synthetic";
    c.radius = 1.0 / std::sqrt(std::abs(c0) + 1e-300);
    c.metric = [c0](const Point& p) { return detail::embed_tangential((1 + c0 * p(0) * p(2)) * RMat::Identity(2, 2)); };
    MetricExpansion e = detail::zero_expansion(2);
    e.xt[0] = -c0 * RMat::Identity(2, 2);
    c.declared = e;
    return c;
}

// n = 4, parallel-hypersurface form g(x,t) = (I - t S(x))^2 with S symmetric and affine in x.
// Three tangential directions, so the 3-form W does not vanish identically.
inline MetricChart synthetic_generic_chart()
{
    const int m = 3;
    RMat S0(m, m), S1(m, m), S2(m, m), S3(m, m);
    S0 << 0.3, 0.05, 0.0, 0.05, -0.2, 0.04, 0.0, 0.04, 0.1;
    S1 << 0.1, 0.2, 0.0, 0.2, 0.0, 0.1, 0.0, 0.1, -0.1;
    S2 << 0.0, 0.1, 0.15, 0.1, 0.2, 0.0, 0.15, 0.0, 0.0;
    S3 << -0.1, 0.0, 0.1, 0.0, 0.1, 0.2, 0.1, 0.2, 0.0;
    const std::vector<RMat> Sx{S1, S2, S3};
    MetricChart c;
    c.n = 4;
    c.name = "synthetic:generic";
    c.radius = 0.8;
    c.metric = [=](const Point& p) {
        RMat S = S0;
        for (int a = 0; a < m; ++a) S += p(a) * Sx[a];
        const RMat A = RMat::Identity(m, m) - p(m) * S;
        return detail::embed_tangential(A * A);
    };
    // (I - tS)^{-2} = I + 2 t S + 3 t^2 S^2 + ...
    MetricExpansion e = detail::zero_expansion(m);
    e.t = 2 * S0;
    e.tt = 3 * S0 * S0;
    for (int a = 0; a < m; ++a) e.xt[a] = 2 * Sx[a];
    c.declared = e;
    return c;
}

inline MetricChart chart_by_name(const std::string& name, int n = 3)
{
    if (name == "flat") return flat_chart(n);
    if (name == "hemisphere") return fermi_chart_hemisphere(n);
    if (name.rfind("graph:", 0) == 0) return graph_chart(std::stod(name.substr(6)));
    if (name == "synthetic") return synthetic_chart();
    if (name.rfind("synthetic:", 0) == 0) {
        const std::string arg = name.substr(10);
        if (arg == "generic") return synthetic_generic_chart();
        return synthetic_chart(std::stod(arg));
    }
    throw std::invalid_argument("unknown chart '" + name + "'");
}

// ---------------------------------------------------------------------------------------------
// B with B^2 = G^{-1}, tangential block by eigendecomposition

struct FrameData {
    RMat B;
    RMat Binv;
};

inline FrameData sqrt_inverse_metric(const RMat& G)
{
    const int n = int(G.rows());
    if (G.cols() != n) throw std::invalid_argument("sqrt_inverse_metric: matrix is not square");
    if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw std::invalid_argument("sqrt_inverse_metric: not symmetric");
    if (std::abs(G(n - 1, n - 1) - 1) > 1e-12 || G.row(n - 1).head(n - 1).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("sqrt_inverse_metric: not in Fermi block form");
    Eigen::SelfAdjointEigenSolver<RMat> es(G.topLeftCorner(n - 1, n - 1));
    const double lmin = es.eigenvalues().minCoeff();
    if (!(lmin > 0))
        throw std::invalid_argument("sqrt_inverse_metric: metric not positive definite (eigenvalue " +
                                    std::to_string(lmin) + ")");
    const RMat V = es.eigenvectors();
    const Eigen::VectorXd s = es.eigenvalues().cwiseSqrt();
    FrameData f;
    f.B = RMat::Identity(n, n);
    f.Binv = RMat::Identity(n, n);
    f.B.topLeftCorner(n - 1, n - 1) = V * s.cwiseInverse().asDiagonal() * V.transpose();
    f.Binv.topLeftCorner(n - 1, n - 1) = V * s.asDiagonal() * V.transpose();
    return f;
}

inline FrameData frame(const MetricChart& c, const Point& p) { return sqrt_inverse_metric(c.g(p)); }

// centred difference with one Richardson step: (4 D(h/2) - D(h)) / 3
template <typename F>
auto richardson_derivative(const F& fun, const Point& p, int axis, double h = 1e-4)
{
    auto central = [&](double s) {
        Point a = p, b = p;
        a(axis) += s;
        b(axis) -= s;
        return ((fun(a) - fun(b)) / (2 * s)).eval();
    };
    return ((4.0 * central(0.5 * h) - central(h)) / 3.0).eval();
}

// Gamma^l_rs as a vector over l of n x n matrices (r, s)
using Christoffel = std::vector<RMat>;

inline Christoffel christoffel(const MetricChart& c, const Point& p, double h = 1e-4)
{
    const int n = c.n;
    std::vector<RMat> dg(n);
    for (int k = 0; k < n; ++k) dg[k] = richardson_derivative([&](const Point& q) { return c.g(q); }, p, k, h);
    const RMat ginv = c.g(p).inverse();
    Christoffel G(n, RMat::Zero(n, n));
    for (int l = 0; l < n; ++l)
        for (int r = 0; r < n; ++r)
            for (int s = 0; s < n; ++s) {
                double v = 0;
                for (int k = 0; k < n; ++k) v += ginv(l, k) * (dg[r](s, k) + dg[s](r, k) - dg[k](r, s));
                G[l](r, s) = 0.5 * v;
            }
    return G;
}

// derivatives d_r B as a vector over r
inline std::vector<RMat> frame_derivatives(const MetricChart& c, const Point& p, double h = 1e-4)
{
    std::vector<RMat> dB(c.n);
    for (int r = 0; r < c.n; ++r) dB[r] = richardson_derivative([&](const Point& q) { return frame(c, q).B; }, p, r, h);
    return dB;
}

// Gamma~^k_ij = (b^r_i d_r(b^l_j) + b^r_i b^s_j Gamma^l_rs) (b^{-1})^k_l, stored as T[k](i, j)
inline std::vector<RMat> tilde_christoffel(const MetricChart& c, const Point& p, double h = 1e-4)
{
    const int n = c.n;
    const FrameData f = frame(c, p);
    const auto dB = frame_derivatives(c, p, h);
    const Christoffel G = christoffel(c, p, h);
    std::vector<RMat> out(n, RMat::Zero(n, n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(n);  // components along d_l
            for (int r = 0; r < n; ++r) {
                v += f.B(r, i) * dB[r].col(j);
                for (int s = 0; s < n; ++s)
                    for (int l = 0; l < n; ++l) v(l) += f.B(r, i) * f.B(s, j) * G[l](r, s);
            }
            const Eigen::VectorXd k = f.Binv * v;
            for (int kk = 0; kk < n; ++kk) out[kk](i, j) = k(kk);
        }
    return out;
}

// max |Gamma~^k_ij + Gamma~^j_ik| and max |Gamma~^n_in|
inline std::pair<double, double> tilde_christoffel_defects(const std::vector<RMat>& T)
{
    const int n = int(T.size());
    double anti = 0, normal = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) anti = std::max(anti, std::abs(T[k](i, j) + T[j](i, k)));
    for (int i = 0; i < n; ++i) normal = std::max(normal, std::abs(T[n - 1](i, n - 1)));
    return {anti, normal};
}

struct CorrectionFields {
    std::vector<double> W;  // W[(i n + j) n + k], tangential indices, the coefficient in front of e_i e_j e_k
    Eigen::VectorXd T;      // coefficient of e_j (tangential)
    RMat Z;                 // coefficient of e_i e_j (tangential, i != j)
    double H = 0;           // mean curvature of the level set, inner normal convention
    Mat W_op, T_op, Z_op;   // Clifford actions on the spinor module (when built with a rep)
};

inline CorrectionFields correction_fields(const MetricChart& c, const Point& p, const CliffordRep* rep = nullptr,
                                          double h = 1e-4)
{
    const int n = c.n;
    const int m = n - 1;
    const FrameData f = frame(c, p);
    const auto dB = frame_derivatives(c, p, h);
    const Christoffel G = christoffel(c, p, h);
    const auto Tt = tilde_christoffel(c, p, h);
    CorrectionFields cf;
    cf.W.assign(size_t(n) * n * n, 0.0);
    // b^r_i d_r(b^l_j)(b^{-1})^k_l
    auto bdb = [&](int i, int j, int k) {
        double v = 0;
        for (int r = 0; r < n; ++r)
            for (int l = 0; l < n; ++l) v += f.B(r, i) * dB[r](l, j) * f.Binv(k, l);
        return 0.25 * v;
    };
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                if (i != j && j != k && i != k) cf.W[(i * n + j) * n + k] = bdb(i, j, k);
    cf.T = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) cf.T(j) += 0.25 * (Tt[i](i, j) - Tt[j](i, i));
    cf.Z = RMat::Zero(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            double v = 0;
            for (int l = 0; l < n; ++l) {
                v += dB[n - 1](l, i) * f.Binv(j, l);
                for (int r = 0; r < n; ++r) v += f.B(r, j) * G[l](r, n - 1) * f.Binv(i, l);
            }
            cf.Z(i, j) = 0.25 * v;
        }
    double trace = 0;
    for (int i = 0; i < m; ++i) trace += Tt[i](i, n - 1);  // g(grad_{e_i} nu, e_i)
    cf.H = m > 0 ? -trace / m : 0.0;
    if (rep) {
        const int d = rep->d;
        cf.W_op = Mat::Zero(d, d);
        cf.T_op = Mat::Zero(d, d);
        cf.Z_op = Mat::Zero(d, d);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k)
                    if (i != j && j != k && i != k)
                        cf.W_op += cf.W[(i * n + j) * n + k] * rep->gamma[i] * rep->gamma[j] * rep->gamma[k];
        for (int j = 0; j < m; ++j) cf.T_op += cf.T(j) * rep->gamma[j];
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                if (i != j) cf.Z_op += cf.Z(i, j) * rep->gamma[i] * rep->gamma[j];
    }
    return cf;
}

// ---------------------------------------------------------------------------------------------
// Polynomial fits at q: tensor stencil of half-width `radius` with `points` nodes per axis, all
// monomials of total degree <= 4 in the scaled coordinates, least squares.

struct StencilFit {
    std::vector<std::vector<int>> exponents;
    RMat design;
    double condition = 0;
    std::vector<Point> nodes;
    double radius = 0;
};

inline StencilFit make_stencil(int n, double radius, int points, int degree = 4)
{
    StencilFit s;
    s.radius = radius;
    std::vector<int> e(n, 0);
    std::function<void(int, int)> rec = [&](int k, int left) {
        if (k == n) {
            s.exponents.push_back(e);
            return;
        }
        for (int a = 0; a <= left; ++a) {
            e[k] = a;
            rec(k + 1, left - a);
        }
        e[k] = 0;
    };
    rec(0, degree);
    std::vector<int> idx(n, 0);
    while (true) {
        Point p(n);
        for (int k = 0; k < n; ++k) p(k) = radius * (-1.0 + 2.0 * idx[k] / (points - 1));
        s.nodes.push_back(p);
        int k = 0;
        while (k < n && ++idx[k] == points) idx[k++] = 0;
        if (k == n) break;
    }
    s.design.resize(s.nodes.size(), s.exponents.size());
    for (size_t i = 0; i < s.nodes.size(); ++i)
        for (size_t j = 0; j < s.exponents.size(); ++j) {
            double v = 1;
            for (int k = 0; k < n; ++k) v *= std::pow(s.nodes[i](k) / radius, s.exponents[j][k]);
            s.design(i, j) = v;
        }
    Eigen::JacobiSVD<RMat> svd(s.design);
    s.condition = svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
    return s;
}

// fits every entry of the tangential block of F(p) and returns the expansion record
inline MetricExpansion fit_expansion(const StencilFit& s, int n, const std::function<RMat(const Point&)>& F)
{
    const int m = n - 1;
    const long P = long(s.nodes.size());
    std::vector<RMat> samples;
    samples.reserve(P);
    for (const auto& p : s.nodes) samples.push_back(F(p));
    const auto qr = s.design.colPivHouseholderQr();
    MetricExpansion e = detail::zero_expansion(m);
    e.condition = s.condition;
    auto find = [&](const std::vector<int>& ex) {
        for (size_t j = 0; j < s.exponents.size(); ++j)
            if (s.exponents[j] == ex) return int(j);
        throw std::logic_error("fit_expansion: monomial missing");
    };
    auto mono = [&](int a, int b) {  // a, b in 0..n-1 (n-1 means t); b = -1 for degree one
        std::vector<int> ex(n, 0);
        ++ex[a];
        if (b >= 0) ++ex[b];
        return find(ex);
    };
    const double r = s.radius;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            Eigen::VectorXd y(P);
            for (long k = 0; k < P; ++k) y(k) = samples[k](i, j) - (i == j ? 1.0 : 0.0);
            const Eigen::VectorXd c = qr.solve(y);
            e.fit_residual = std::max(e.fit_residual, (s.design * c - y).cwiseAbs().maxCoeff());
            e.t(i, j) = c(mono(m, -1)) / r;
            e.tt(i, j) = c(mono(m, m)) / (r * r);
            for (int a = 0; a < m; ++a) {
                e.xt[a](i, j) = c(mono(a, m)) / (r * r);
                for (int b = a; b < m; ++b) e.xx[pair_index(a, b, m)](i, j) = c(mono(a, b)) / (r * r);
            }
        }
    return e;
}

inline double max_coeff_difference(const MetricExpansion& a, const MetricExpansion& b)
{
    double d = std::max((a.t - b.t).cwiseAbs().maxCoeff(), (a.tt - b.tt).cwiseAbs().maxCoeff());
    for (size_t k = 0; k < a.xt.size(); ++k) d = std::max(d, (a.xt[k] - b.xt[k]).cwiseAbs().maxCoeff());
    for (size_t k = 0; k < a.xx.size(); ++k) d = std::max(d, (a.xx[k] - b.xx[k]).cwiseAbs().maxCoeff());
    return d;
}

struct ExpansionReport {
    MetricExpansion fitted;
    std::optional<MetricExpansion> declared;
    double max_difference = std::numeric_limits<double>::quiet_NaN();  // against declared
    bool well_conditioned = false;
    bool pass = false;
};

inline ExpansionReport metric_expansion_coeffs(const MetricChart& c, double radius = 1e-2, int points = 5,
                                               double tol = 1e-6)
{
    const StencilFit s = make_stencil(c.n, radius, points);
    ExpansionReport r;
    r.fitted = fit_expansion(s, c.n, [&](const Point& p) { return RMat(c.g(p).inverse()); });
    r.declared = c.declared;
    r.well_conditioned = s.condition < 1e8;
    if (r.declared) {
        r.max_difference = max_coeff_difference(r.fitted, *r.declared);
        r.pass = r.well_conditioned && r.max_difference < tol;
    } else {
        r.pass = r.well_conditioned;
    }
    return r;
}

// Expansion of B (and B^{-1}) predicted from that of G^{-1} = I + A: with A = A1 + A2 (degree one
// and two), B = I + A/2 - A^2/8 and B^{-1} = I - A/2 + 3 A^2/8 through second order.
inline MetricExpansion predicted_frame_expansion(const MetricExpansion& g, bool inverse)
{
    const int m = int(g.t.rows());
    const double c1 = inverse ? -0.5 : 0.5, c2 = inverse ? 0.375 : -0.125;
    MetricExpansion b = detail::zero_expansion(m);
    // only t is a degree-one monomial in Fermi coordinates at q
    b.t = c1 * g.t;
    b.tt = c1 * g.tt + c2 * g.t * g.t;
    for (int a = 0; a < m; ++a) b.xt[a] = c1 * g.xt[a];
    for (size_t k = 0; k < g.xx.size(); ++k) b.xx[k] = c1 * g.xx[k];
    return b;
}

struct BExpansionReport {
    MetricExpansion fitted_B, fitted_Binv;
    MetricExpansion predicted_B, predicted_Binv;
    double max_difference = 0;
    bool pass = false;
};

inline BExpansionReport b_expansion_check(const MetricChart& c, double radius = 1e-2, int points = 5, double tol = 1e-6)
{
    const StencilFit s = make_stencil(c.n, radius, points);
    BExpansionReport r;
    const MetricExpansion gfit = fit_expansion(s, c.n, [&](const Point& p) { return RMat(c.g(p).inverse()); });
    r.fitted_B = fit_expansion(s, c.n, [&](const Point& p) { return frame(c, p).B; });
    r.fitted_Binv = fit_expansion(s, c.n, [&](const Point& p) { return frame(c, p).Binv; });
    r.predicted_B = predicted_frame_expansion(gfit, false);
    r.predicted_Binv = predicted_frame_expansion(gfit, true);
    r.max_difference = std::max(max_coeff_difference(r.fitted_B, r.predicted_B),
                                max_coeff_difference(r.fitted_Binv, r.predicted_Binv));
    r.pass = r.max_difference < tol;
    return r;
}

// ---------------------------------------------------------------------------------------------
// log-log slopes of |W|, |Z|, |T| (operator norms of their Clifford actions) along a ray

struct SlopeEntry {
    std::vector<double> norms;
    double slope = std::numeric_limits<double>::quiet_NaN();
    bool vanishes = false;
};

struct OrderScanReport {
    std::vector<double> radii;
    SlopeEntry W, Z, T, H;
    bool pass = false;
};

inline SlopeEntry fit_slope(const std::vector<double>& radii, const std::vector<double>& norms, double floor = 1e-10)
{
    SlopeEntry e;
    e.norms = norms;
    double mx = 0;
    for (double v : norms) mx = std::max(mx, v);
    if (mx < floor) {
        e.vanishes = true;
        return e;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double N = double(radii.size());
    for (size_t i = 0; i < radii.size(); ++i) {
        const double x = std::log(radii[i]), y = std::log(std::max(norms[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    e.slope = (N * sxy - sx * sy) / (N * sxx - sx * sx);
    return e;
}

inline OrderScanReport order_estimate_scan(const MetricChart& c, const std::vector<double>& radii,
                                           std::optional<Point> direction = std::nullopt)
{
    if (radii.size() < 2) throw std::invalid_argument("order_estimate_scan: need at least two radii");
    for (size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] < radii[i - 1])) throw std::invalid_argument("order_estimate_scan: radii must decrease");
    if (radii.front() / radii.back() < 10.0 - 1e-12)
        throw std::invalid_argument("order_estimate_scan: radii must span at least one decade");
    Point u = direction ? *direction : Point(Point::Ones(c.n));
    u /= u.norm();
    const CliffordRep rep = build_rep(c.n);
    OrderScanReport r;
    r.radii = radii;
    std::vector<double> w, z, t, hh;
    for (double rad : radii) {
        const CorrectionFields cf = correction_fields(c, Point(rad * u), &rep);
        w.push_back(op_norm(cf.W_op));
        z.push_back(op_norm(cf.Z_op));
        t.push_back(op_norm(cf.T_op));
        hh.push_back(std::abs(cf.H));
    }
    r.W = fit_slope(radii, w);
    r.Z = fit_slope(radii, z);
    r.T = fit_slope(radii, t);
    r.H = fit_slope(radii, hh);
    auto ok = [](const SlopeEntry& e, double bound) { return e.vanishes || e.slope >= bound; };
    r.pass = ok(r.W, 1.9) && ok(r.Z, 1.9) && ok(r.T, 0.9);
    return r;
}

inline std::vector<double> default_scan_radii()
{
    std::vector<double> r;
    for (double v = 0.2; v > 0.0015; v /= 2) r.push_back(v);
    return r;
}

// ---------------------------------------------------------------------------------------------
// D_g psi-bar two ways at an interior point p:
//  left:  sum_i e_i . (e_i(psi) + 1/4 sum_jk Gamma~^k_ij e_j e_k psi), with Gamma~ from the Koszul
//         formula on the frame brackets (no Christoffel symbols involved)
//  right: D_xi psi + sum (b^j_i - delta) d_i . d_j psi + W + T + nu.Z - (n-1)/2 H nu.
struct DiracIdentityResidual {
    double residual = 0;
    double lhs_norm = 0;
};

inline std::vector<RMat> tilde_christoffel_koszul(const MetricChart& c, const Point& p, double h = 1e-4)
{
    const int n = c.n;
    const FrameData f = frame(c, p);
    const auto dB = frame_derivatives(c, p, h);
    // C^c_ab: [e_a, e_b] = (b^r_a d_r b^l_b - b^r_b d_r b^l_a) d_l, expressed in the frame
    std::vector<RMat> C(n, RMat::Zero(n, n));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
            for (int r = 0; r < n; ++r) v += f.B(r, a) * dB[r].col(b) - f.B(r, b) * dB[r].col(a);
            const Eigen::VectorXd k = f.Binv * v;
            for (int cc = 0; cc < n; ++cc) C[cc](a, b) = k(cc);
        }
    std::vector<RMat> T(n, RMat::Zero(n, n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) T[k](i, j) = 0.5 * (C[k](i, j) - C[i](j, k) + C[j](k, i));
    return T;
}

inline DiracIdentityResidual dirac_identity_check(const MetricChart& c, const CliffordRep& rep, const SpinorField& psi,
                                            const Point& p, double h = 1e-3)
{
    const int n = c.n;
    if (rep.n != n) throw std::invalid_argument("dirac_identity_check: representation dimension differs");
    const FrameData f = frame(c, p);
    std::vector<Spinor> dpsi(n);
    for (int r = 0; r < n; ++r) {
        Point a = p, b = p;
        a(r) += h;
        b(r) -= h;
        dpsi[r] = (psi(a) - psi(b)) / (2 * h);
    }
    const Spinor v = psi(p);
    const auto Tk = tilde_christoffel_koszul(c, p);
    Spinor lhs = Spinor::Zero(rep.d);
    for (int i = 0; i < n; ++i) {
        Spinor nab = Spinor::Zero(rep.d);
        for (int r = 0; r < n; ++r) nab += f.B(r, i) * dpsi[r];
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                if (Tk[k](i, j) != 0) nab += 0.25 * Tk[k](i, j) * (rep.gamma[j] * (rep.gamma[k] * v));
        lhs += rep.gamma[i] * nab;
    }
    const CorrectionFields cf = correction_fields(c, p, &rep);
    Spinor rhs = Spinor::Zero(rep.d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) rhs += f.B(j, i) * (rep.gamma[i] * dpsi[j]);  // D_xi + (b - delta) terms
    const Mat& nu = rep.gamma[n - 1];
    rhs += cf.W_op * v + cf.T_op * v + nu * (cf.Z_op * v) - 0.5 * (n - 1) * cf.H * (nu * v);
    DiracIdentityResidual r;
    r.residual = (lhs - rhs).norm();
    r.lhs_norm = lhs.norm();
    return r;
}

// random interior points with |p| <= rmax, t >= 0, fixed seed
inline std::vector<Point> random_chart_points(int n, int count, double rmax, unsigned seed = 20240607)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<Point> out;
    while (int(out.size()) < count) {
        Point p(n);
        for (int k = 0; k < n; ++k) p(k) = rmax * uni(gen);
        p(n - 1) = std::abs(p(n - 1));
        if (p.norm() <= rmax && p(n - 1) > 0.05 * rmax) out.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Curvature from Christoffel symbols, derivatives by Richardson-extrapolated differences.
// R(d_i, d_j) d_k = R^l_kij d_l with R^l_kij = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik;
// stored lowered as R_lkij at index ((l n + k) n + i) n + j.

struct Curvature {
    int n = 0;
    std::vector<double> riemann;
    RMat ricci;     // Ric_kj = R^i_kij
    double scalar = 0;

    double R(int l, int k, int i, int j) const { return riemann[((size_t(l) * n + k) * n + i) * n + j]; }
};

inline Curvature metric_curvature(const std::function<RMat(const Point&)>& metric, int n, const Point& p,
                                  double h = 1e-2)
{
    auto gamma = [&](const Point& q) {
        std::vector<RMat> dg(n);
        for (int k = 0; k < n; ++k) dg[k] = richardson_derivative(metric, q, k, 1e-3);
        const RMat ginv = metric(q).inverse();
        RMat flat = RMat::Zero(n * n, n);  // row l n + r, column s
        for (int l = 0; l < n; ++l)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s) {
                    double v = 0;
                    for (int k = 0; k < n; ++k) v += ginv(l, k) * (dg[r](s, k) + dg[s](r, k) - dg[k](r, s));
                    flat(l * n + r, s) = 0.5 * v;
                }
        return flat;
    };
    const RMat G = gamma(p);
    std::vector<RMat> dG(n);
    for (int k = 0; k < n; ++k) dG[k] = richardson_derivative(gamma, p, k, h);
    auto Gm = [&](int l, int r, int s) { return G(l * n + r, s); };
    auto dGm = [&](int i, int l, int r, int s) { return dG[i](l * n + r, s); };
    const RMat g = metric(p);
    Curvature c;
    c.n = n;
    std::vector<double> up(size_t(n) * n * n * n, 0.0);
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double v = dGm(i, l, j, k) - dGm(j, l, i, k);
                    for (int m = 0; m < n; ++m) v += Gm(l, i, m) * Gm(m, j, k) - Gm(l, j, m) * Gm(m, i, k);
                    up[((size_t(l) * n + k) * n + i) * n + j] = v;
                }
    c.riemann.assign(up.size(), 0.0);
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double v = 0;
                    for (int m = 0; m < n; ++m) v += g(l, m) * up[((size_t(m) * n + k) * n + i) * n + j];
                    c.riemann[((size_t(l) * n + k) * n + i) * n + j] = v;
                }
    c.ricci = RMat::Zero(n, n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) c.ricci(k, j) += up[((size_t(i) * n + k) * n + i) * n + j];
    const RMat ginv = g.inverse();
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) c.scalar += ginv(k, j) * c.ricci(k, j);
    return c;
}

inline Curvature chart_curvature(const MetricChart& c, const Point& p)
{
    return metric_curvature([&](const Point& q) { return c.g(q); }, c.n, p);
}

inline double chart_scalar_curvature(const MetricChart& c, const Point& p) { return chart_curvature(c, p).scalar; }

// intrinsic curvature of the boundary {t = 0} at the boundary point x
inline Curvature boundary_curvature(const MetricChart& c, const Point& x)
{
    const int m = c.n - 1;
    if (m < 2) throw std::invalid_argument("boundary_curvature: boundary must have dimension >= 2");
    return metric_curvature(
        [&](const Point& y) {
            Point p = Point::Zero(c.n);
            p.head(m) = y;
            return RMat(c.g(p).topLeftCorner(m, m));
        },
        m, x);
}

// Codazzi at q: R_ijkn = h_ik,j - h_jk,i (tangential i, j, k), with h and its derivatives read off
// the declared expansion (g^{ij} = delta + 2 h t + g^{ij}_{,ta} x^a t + ..., so d_a h = xt[a] / 2
// to first order).
struct CodazziReport {
    double max_defect = 0;
    double max_component = 0;
    bool pass = false;
};

inline CodazziReport codazzi_check(const MetricChart& c, double tol = 1e-6)
{
    if (!c.declared) throw std::invalid_argument("codazzi_check: chart declares no expansion");
    const int n = c.n, m = n - 1;
    const Curvature K = chart_curvature(c, Point::Zero(n));
    const MetricExpansion& e = *c.declared;
    CodazziReport r;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) {
                const double lhs = K.R(i, j, k, n - 1);
                const double rhs = 0.5 * e.xt[j](i, k) - 0.5 * e.xt[i](j, k);
                r.max_defect = std::max(r.max_defect, std::abs(lhs - rhs));
                r.max_component = std::max(r.max_component, std::abs(lhs));
            }
    r.pass = r.max_defect < tol;
    return r;
}

// Linear part of T at q against -1/4 Ric^bdry_aj x^a - 1/2 Ric_tj t (Ric^bdry of the boundary
// metric, Ric the ambient one).  T is differentiated along each axis by a central difference.
struct TDevelopmentReport {
    RMat fitted;     // column a: dT / dx^a (a = n-1 is t)
    RMat predicted;
    double max_defect = 0;
    bool pass = false;
};

inline TDevelopmentReport t_development_check(const MetricChart& c, double step = 1e-3, double tol = 1e-5)
{
    const int n = c.n, m = n - 1;
    TDevelopmentReport r;
    r.fitted = RMat::Zero(m, n);
    for (int a = 0; a < n; ++a) {
        Point p = Point::Zero(n), q = Point::Zero(n);
        p(a) = step;
        q(a) = -step;
        r.fitted.col(a) = (correction_fields(c, p).T - correction_fields(c, q).T) / (2 * step);
    }
    r.predicted = RMat::Zero(m, n);
    if (m >= 2) r.predicted.leftCols(m) = -0.25 * boundary_curvature(c, Point::Zero(m)).ricci;
    const Curvature K = chart_curvature(c, Point::Zero(n));
    r.predicted.col(m) = -0.5 * K.ricci.row(n - 1).head(m).transpose();
    r.max_defect = (r.fitted - r.predicted).cwiseAbs().maxCoeff();
    r.pass = r.max_defect < tol;
    return r;
}

} // namespace chibag
