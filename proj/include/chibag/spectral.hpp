#pragma once

#include "constants.hpp"
#include "dirac_disc.hpp"
#include "lanczos.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace chibag {

using SpectrumResult = SpectrumResultT<cplx>;

enum class Model { flat, hemisphere, disk, perturbed };

inline std::string to_string(Model m)
{
    switch (m) {
    case Model::flat: return "flat";
    case Model::hemisphere: return "hemisphere";
    case Model::disk: return "disk";
    case Model::perturbed: return "perturbed";
    }
    return "?";
}

inline Model parse_model(const std::string& s)
{
    if (s == "flat") return Model::flat;
    if (s == "hemisphere" || s == "hemi") return Model::hemisphere;
    if (s == "disk") return Model::disk;
    if (s == "perturbed") return Model::perturbed;
    throw std::invalid_argument("unknown model '" + s + "'");
}

inline ScalarField model_factor(Model m)
{
    switch (m) {
    case Model::flat: return constant_factor(1.0);
    case Model::hemisphere: return hemisphere_factor();
    case Model::disk: return disk_factor(0.5);
    case Model::perturbed:
        return [](const Point& p) { return conformal_factor(p) * (1.0 + 0.1 * std::exp(-p.squaredNorm())); };
    }
    throw std::logic_error("model_factor: unreachable");
}

struct PencilOptions {
    int n = 2;
    double h = 0.05;
    double R_max = 6.0;
    Model model = Model::hemisphere;
    Sign sign = Sign::minus;
    BoundaryScheme scheme = BoundaryScheme::weak;
    double wilson_term = 0.0;
};

inline Grid pencil_grid(const PencilOptions& o) { return Grid::half_space(o.n, o.h, o.R_max, o.R_max); }

inline DiracMatrix build_pencil(const CliffordRep& rep, const PencilOptions& o)
{
    if (rep.n != o.n) throw std::invalid_argument("build_pencil: representation dimension differs from n");
    const Grid g = pencil_grid(o);
    DiracMatrix full = assemble_conformal(rep, g, model_factor(o.model), to_string(o.model), o.wilson_term);
    return apply_bc(full, rep, o.sign, o.scheme);
}

// SparseLU beats UMFPACK on the 2-D grids; nested dissection wins in 3-D
inline Backend default_backend(int n) { return n == 2 ? Backend::sparse_lu : Backend::automatic; }

inline SpectrumResult solve_pencil(const DiracMatrix& m, int k, double tol, bool keep_vectors = false)
{
    EigOptions e;
    e.backend = default_backend(m.grid.n);
    e.k = k;
    e.tol = tol;
    e.keep_vectors = keep_vectors;
    return smallest_eigs<cplx>(m.op, m.mass, e);
}

// smallest |lambda| over the spectrum (the solver already orders by distance to 0)
inline double lambda_one(const SpectrumResult& r)
{
    double best = std::numeric_limits<double>::infinity();
    for (double v : r.eigenvalues) best = std::min(best, std::abs(v));
    return best;
}

// Oscillation share of a nodal vector: sum over edges |v_i - v_j|^2 w / (4 n sum w |v|^2), in [0,1].
// Smooth modes give O(h^2); a pure checkerboard gives 1.
inline double roughness_indicator(const DiracMatrix& m, const Eigen::VectorXcd& reduced)
{
    const Eigen::VectorXcd v = prolong(m, reduced);
    const Grid& g = m.grid;
    const int d = m.d;
    double num = 0, den = 0;
    detail::for_each_edge(g, [&](long i, long j, double w, int) {
        num += w * g.h * (v.segment(i * d, d) - v.segment(j * d, d)).squaredNorm();
    });
    for (long node = 0; node < g.nodes(); ++node) den += g.weight(node) * v.segment(node * d, d).squaredNorm();
    // w h is the cross-section measure of the edge
    return num / (4.0 * g.n * den) * g.h;
}

// Share (in the M-norm) of the sampled field that lies in the span of the computed eigenvectors
// with |lambda - target| <= window.  Naive central differences replicate each physical mode over
// 2^n tastes whose nodal vectors alternate in sign, so nodal roughness alone cannot tell the
// physical mode apart; the overlap with the continuum profile can.
inline double profile_overlap(const DiracMatrix& m, const SpectrumResult& s, const SpinorField& field, double target,
                              double window)
{
    if (s.vectors.size() != s.eigenvalues.size())
        throw std::invalid_argument("profile_overlap: spectrum was computed without eigenvectors");
    const Eigen::VectorXcd phi = restrict_to(m, sample(m.grid, m.d, field));
    auto inner = [&](const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
        return (a.conjugate().array() * m.mass.cast<cplx>().array() * b.array()).sum();
    };
    std::vector<const Eigen::VectorXcd*> sel;
    for (size_t i = 0; i < s.eigenvalues.size(); ++i)
        if (std::abs(s.eigenvalues[i] - target) <= window) sel.push_back(&s.vectors[i]);
    const double norm2 = std::real(inner(phi, phi));
    if (sel.empty() || norm2 == 0) return 0;
    const int k = int(sel.size());
    Eigen::MatrixXcd G(k, k);
    Eigen::VectorXcd c(k);
    for (int i = 0; i < k; ++i) {
        c(i) = inner(*sel[i], phi);
        for (int j = 0; j < k; ++j) G(i, j) = inner(*sel[i], *sel[j]);
    }
    const Eigen::VectorXcd y = G.ldlt().solve(c);
    return std::sqrt(std::max(0.0, std::real((c.adjoint() * y)(0, 0))) / norm2);
}

// continuum eigenmode with eigenvalue sign(s) n/2 of the conformal hemisphere model, in the
// variables of the assembled pencil (phi = f^{-(n-1)/2} psi)
inline SpinorField hemisphere_mode(const CliffordRep& rep, Sign s)
{
    const SpinorField psi = killing_field(rep, s);
    const double e = -0.5 * (rep.n - 1);
    return [psi, e](const Point& p) { return Spinor(std::pow(conformal_factor(p), e) * psi(p)); };
}

// Reference mode for the lambda_1 cluster of a hemisphere pencil and the sign of its eigenvalue.
// Under the minus condition psi+ carries +n/2; under the plus condition its chirality image
// carries -n/2 when n is even.  Nothing is wired up for odd n under the plus condition.
struct ReferenceMode {
    SpinorField field;
    int eigen_sign = 1;
};

inline std::optional<ReferenceMode> hemisphere_reference(const CliffordRep& rep, Sign pencil_sign)
{
    const SpinorField base = hemisphere_mode(rep, Sign::plus);
    if (pencil_sign == Sign::minus) return ReferenceMode{base, 1};
    if (rep.n % 2 == 1) return std::nullopt;
    const Mat G = rep.chirality;
    return ReferenceMode{[base, G](const Point& p) { return Spinor(G * base(p)); }, -1};
}

struct HemisphereReport {
    double lambda1 = 0;
    double vol = 0;
    double product = 0;
    double target_lambda = 0;
    double target_vol = 0;
    double target_product = 0;
    double roughness = 0;        // of the first returned eigenvector
    double profile_overlap = 0;  // continuum mode against the lambda_1 cluster of its sign
    int cluster_size = 0;        // computed eigenvalues in that cluster (5% window)
    SpectrumResult spectrum;
};

// lambda_1 from the conformal model, Vol from the discrete weight sum, product lambda_1 Vol^{1/n}
inline HemisphereReport hemisphere_spectrum(const PencilOptions& o, int k = 4, double tol = 1e-10)
{
    const CliffordRep rep = build_rep(o.n);
    const DiracMatrix m = build_pencil(rep, o);
    HemisphereReport r;
    r.spectrum = solve_pencil(m, k, tol, true);
    r.lambda1 = lambda_one(r.spectrum);
    r.vol = volume(m);
    r.product = r.lambda1 * std::pow(r.vol, 1.0 / o.n);
    r.target_lambda = 0.5 * o.n;
    r.target_vol = 0.5 * sphere_area(o.n);
    r.target_product = r.target_lambda * std::pow(r.target_vol, 1.0 / o.n);
    if (!r.spectrum.vectors.empty()) r.roughness = roughness_indicator(m, r.spectrum.vectors.front());
    const double window = 0.05 * r.lambda1;
    r.profile_overlap = std::numeric_limits<double>::quiet_NaN();
    if (const auto ref = hemisphere_reference(rep, o.sign)) {
        const double target = ref->eigen_sign * r.lambda1;
        for (double v : r.spectrum.eigenvalues) r.cluster_size += std::abs(v - target) <= window;
        r.profile_overlap = profile_overlap(m, r.spectrum, ref->field, target, window);
    }
    return r;
}

struct SymmetryReport {
    std::vector<double> plus, minus;  // sorted ascending
    double max_pair_defect = 0;        // max |lambda+_i + lambda-_{k-1-i}|
    bool pass = false;
};

// Spec+ = -Spec- on identical grids.  Both matrices must come from the same grid and model.
inline SymmetryReport spectral_symmetry_check(const DiracMatrix& plus, const DiracMatrix& minus, int k = 4,
                                              double tol = 1e-8, double solver_tol = 1e-12)
{
    if (!plus.grid.same_as(minus.grid) || plus.model != minus.model || plus.dofs() != minus.dofs())
        throw std::invalid_argument("spectral_symmetry_check: the two pencils live on different grids");
    if (plus.sign != Sign::plus || minus.sign != Sign::minus)
        throw std::invalid_argument("spectral_symmetry_check: expected one plus and one minus pencil");
    SymmetryReport r;
    r.plus = solve_pencil(plus, k, solver_tol).eigenvalues;
    r.minus = solve_pencil(minus, k, solver_tol).eigenvalues;
    std::sort(r.plus.begin(), r.plus.end());
    std::sort(r.minus.begin(), r.minus.end());
    for (int i = 0; i < k; ++i) r.max_pair_defect = std::max(r.max_pair_defect, std::abs(r.plus[i] + r.minus[k - 1 - i]));
    r.pass = r.max_pair_defect < tol;
    return r;
}

inline SymmetryReport spectral_symmetry_check(const CliffordRep& rep, PencilOptions o, int k = 4, double tol = 1e-8)
{
    o.sign = Sign::plus;
    const DiracMatrix p = build_pencil(rep, o);
    o.sign = Sign::minus;
    const DiracMatrix m = build_pencil(rep, o);
    return spectral_symmetry_check(p, m, k, tol);
}

struct HijaziReport {
    double lambda1 = 0;
    double lambda1_sq = 0;
    double mu1 = 0;
    double bound = 0;         // n/(4(n-1)) mu_1
    double relative_gap = 0;  // (lambda_1^2 - bound) / bound
    bool inequality = false;  // lambda_1^2 >= bound (1 - budget)
};

// lambda_1^2 >= n/(4(n-1)) mu_1(L_g) with a relative discretization budget
inline HijaziReport hijazi_check(const PencilOptions& o, double budget = 0.05, double tol = 1e-8)
{
    if (o.n < 3) throw std::invalid_argument("hijazi_check: requires n >= 3");
    const CliffordRep rep = build_rep(o.n);
    HijaziReport r;
    r.lambda1 = lambda_one(solve_pencil(build_pencil(rep, o), 2, tol));
    r.lambda1_sq = r.lambda1 * r.lambda1;
    const LaplacianPencil lp = assemble_conformal_laplacian(pencil_grid(o), model_factor(o.model));
    EigOptions e;
    e.k = 1;
    e.tol = tol;
    r.mu1 = smallest_eigs<double>(lp.stiffness, lp.mass, e).eigenvalues.front();
    r.bound = o.n / (4.0 * (o.n - 1)) * r.mu1;
    r.relative_gap = (r.lambda1_sq - r.bound) / std::abs(r.bound);
    r.inequality = r.lambda1_sq >= r.bound * (1.0 - budget);
    return r;
}

// Smallest positive k with J_m(k) = s J_{m+1}(k) over m = 0..mmax, s = +-1: the radial
// reduction of the flat unit-disk Dirac problem under the chiral bag condition.  Bisection on a
// fine bracket scan.
inline double disk_bessel_root(int mmax = 4, double tol = 1e-12)
{
    double best = std::numeric_limits<double>::infinity();
    for (int m = 0; m <= mmax; ++m)
        for (double s : {1.0, -1.0}) {
            auto g = [&](double k) { return std::cyl_bessel_j(double(m), k) - s * std::cyl_bessel_j(double(m + 1), k); };
            const double step = 1e-3;
            for (double a = step; a < std::min(best, 20.0); a += step) {
                const double b = a + step;
                if (g(a) * g(b) > 0) continue;
                double lo = a, hi = b;
                while (hi - lo > tol) {
                    const double mid = 0.5 * (lo + hi);
                    (g(lo) * g(mid) <= 0 ? hi : lo) = mid;
                }
                best = std::min(best, 0.5 * (lo + hi));
                break;
            }
        }
    return best;
}

} // namespace chibag
