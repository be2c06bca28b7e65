#pragma once

#include "clifford.hpp"
#include "fields.hpp"

#include <Eigen/Sparse>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace chibag {

using SpMat = Eigen::SparseMatrix<cplx>;
using RSpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<cplx>;
using RTriplet = Eigen::Triplet<double>;
using ScalarField = std::function<double(const Point&)>;

// Tensor grid with uniform spacing h.  Non-periodic axes carry nodes at both ends;
// periodic axes have `count` nodes with period count*h.
struct Grid {
    int n = 2;
    double h = 0.1;
    std::vector<double> lo;
    std::vector<int> count;
    std::vector<bool> periodic;

    static Grid box(int n, double h, const std::vector<double>& lo, const std::vector<double>& hi)
    {
        if (h <= 0) throw std::invalid_argument("Grid: h must be positive");
        Grid g;
        g.n = n;
        g.h = h;
        g.lo = lo;
        g.periodic.assign(n, false);
        for (int k = 0; k < n; ++k) {
            const double cells = (hi[k] - lo[k]) / h;
            const int c = int(std::lround(cells));
            if (std::abs(cells - c) > 1e-9 * std::max(1.0, cells))
                throw std::invalid_argument("Grid: extent is not a multiple of h on axis " + std::to_string(k));
            if (c < 2) throw std::invalid_argument("Grid: fewer than 3 nodes on axis " + std::to_string(k));
            g.count.push_back(c + 1);
        }
        return g;
    }

    // Tangential axes in [-L, L], normal axis in [0, T'] with T' = T or T + h.  Central differences
    // only couple nodes of opposite parity; with an odd node count on every axis the two parity
    // classes carry different numbers of DOFs after the bag reduction, which forces exact zero
    // modes.  The normal axis is therefore given an even node count.
    static Grid half_space(int n, double h, double half_width, double height)
    {
        std::vector<double> lo(n, -half_width), hi(n, half_width);
        lo[n - 1] = 0.0;
        const long cells = std::lround(height / h);
        hi[n - 1] = (cells % 2 == 0) ? height + h : height;
        return box(n, h, lo, hi);
    }

    static Grid periodic_box(int n, double h, int nodes_per_axis)
    {
        Grid g;
        g.n = n;
        g.h = h;
        g.lo.assign(n, 0.0);
        g.count.assign(n, nodes_per_axis);
        g.periodic.assign(n, true);
        return g;
    }

    long nodes() const
    {
        long c = 1;
        for (int k : count) c *= k;
        return c;
    }

    long stride(int axis) const
    {
        long s = 1;
        for (int k = 0; k < axis; ++k) s *= count[k];
        return s;
    }

    std::vector<int> multi_index(long node) const
    {
        std::vector<int> idx(n);
        for (int k = 0; k < n; ++k) {
            idx[k] = int(node % count[k]);
            node /= count[k];
        }
        return idx;
    }

    long linear(const std::vector<int>& idx) const
    {
        long node = 0;
        for (int k = n - 1; k >= 0; --k) node = node * count[k] + idx[k];
        return node;
    }

    Point coord(long node) const
    {
        const auto idx = multi_index(node);
        Point p(n);
        for (int k = 0; k < n; ++k) p(k) = lo[k] + h * idx[k];
        return p;
    }

    // 1-D SBP norm weight of index i on axis k (h, or h/2 at ends)
    double weight_1d(int axis, int i) const
    {
        if (periodic[axis]) return h;
        return (i == 0 || i == count[axis] - 1) ? 0.5 * h : h;
    }

    double weight(long node) const
    {
        const auto idx = multi_index(node);
        double w = 1;
        for (int k = 0; k < n; ++k) w *= weight_1d(k, idx[k]);
        return w;
    }

    // inner unit normals of the faces the node sits on
    std::vector<RVec> face_normals(long node) const
    {
        const auto idx = multi_index(node);
        std::vector<RVec> out;
        for (int k = 0; k < n; ++k) {
            if (periodic[k]) continue;
            if (idx[k] == 0 || idx[k] == count[k] - 1) {
                RVec nu = RVec::Zero(n);
                nu(k) = idx[k] == 0 ? 1.0 : -1.0;
                out.push_back(nu);
            }
        }
        return out;
    }

    bool is_physical_boundary(long node) const
    {
        return !periodic[n - 1] && lo[n - 1] == 0.0 && multi_index(node)[n - 1] == 0;
    }

    bool same_as(const Grid& o) const
    {
        return n == o.n && h == o.h && lo == o.lo && count == o.count && periodic == o.periodic;
    }
};

struct DiracMatrix {
    SpMat op;             // Hermitian after reduction
    Eigen::VectorXd mass; // diagonal volume weights
    SpMat embed;          // full DOF <- reduced DOF (identity before reduction)
    Grid grid;
    int d = 0;
    bool reduced = false;
    Sign sign = Sign::minus;
    std::string model = "flat";
    Eigen::VectorXd node_factor;  // conformal factor f at nodes (ones for flat)

    long dofs() const { return op.rows(); }
};

namespace detail {

// SBP first-derivative matrix Q on axis `axis` (tensor with the norm weights of the other axes)
// contributes gamma_axis (x) Q_axis.  Returns entries (row node, col node, value).
inline void for_each_q_entry(const Grid& g, int axis, const std::function<void(long, long, double)>& emit)
{
    const long N = g.nodes();
    const long st = g.stride(axis);
    const int c = g.count[axis];
    for (long node = 0; node < N; ++node) {
        const auto idx = g.multi_index(node);
        double wperp = 1;
        for (int k = 0; k < g.n; ++k)
            if (k != axis) wperp *= g.weight_1d(k, idx[k]);
        const int i = idx[axis];
        if (g.periodic[axis]) {
            const long up = node + (i == c - 1 ? -(c - 1) * st : st);
            const long dn = node + (i == 0 ? (c - 1) * st : -st);
            emit(node, up, 0.5 * wperp);
            emit(node, dn, -0.5 * wperp);
            continue;
        }
        if (i > 0) emit(node, node - st, -0.5 * wperp);
        if (i < c - 1) emit(node, node + st, 0.5 * wperp);
        if (i == 0) emit(node, node, -0.5 * wperp);
        if (i == c - 1) emit(node, node, 0.5 * wperp);
    }
}

// scalar SBP-consistent Neumann stiffness: sum over edges of w_e (u_i - u_j)^2
inline void for_each_edge(const Grid& g, const std::function<void(long, long, double, int)>& emit)
{
    const long N = g.nodes();
    for (int axis = 0; axis < g.n; ++axis) {
        const long st = g.stride(axis);
        const int c = g.count[axis];
        for (long node = 0; node < N; ++node) {
            const auto idx = g.multi_index(node);
            const int i = idx[axis];
            long other;
            if (i < c - 1)
                other = node + st;
            else if (g.periodic[axis])
                other = node - (c - 1) * st;
            else
                continue;
            double wperp = 1;
            for (int k = 0; k < g.n; ++k)
                if (k != axis) wperp *= g.weight_1d(k, idx[k]);
            emit(node, other, wperp / g.h, axis);
        }
    }
}

inline Mat intersect_admissible(const CliffordRep& rep, const std::vector<RVec>& normals, Sign sign)
{
    if (normals.empty()) return Mat::Identity(rep.d, rep.d);
    if (normals.size() == 1) return admissible_basis(rep, normals[0], sign);
    // common kernel of the B(sign) projectors
    Mat stacked(rep.d * normals.size(), rep.d);
    for (size_t j = 0; j < normals.size(); ++j)
        stacked.middleRows(j * rep.d, rep.d) = chiral_projector(rep, normals[j], sign).matrix;
    Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > 1e-10) ++rank;
    return svd.matrixV().rightCols(rep.d - rank);
}

} // namespace detail

// Full (unconstrained) SBP operator sum_k gamma_k (x) Q_k with diagonal mass.
// wilson_term r > 0 adds r h/2 times the scalar Neumann stiffness (Hermitian, off by default;
// it breaks the +/- spectral pairing).
inline DiracMatrix assemble_flat(const CliffordRep& rep, const Grid& grid, double wilson_term = 0.0)
{
    if (grid.n != rep.n) throw std::invalid_argument("assemble_flat: grid and representation dimensions differ");
    for (int k = 0; k < grid.n; ++k)
        if (grid.count[k] < 3) throw std::invalid_argument("assemble_flat: grid too coarse");
    const int d = rep.d;
    std::vector<Triplet> trip;
    trip.reserve(size_t(grid.nodes()) * d * (2 * grid.n + 1));
    for (int axis = 0; axis < grid.n; ++axis) {
        const Mat& gm = rep.gamma[axis];
        detail::for_each_q_entry(grid, axis, [&](long r, long c, double v) {
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    if (gm(a, b) != cplx(0)) trip.emplace_back(r * d + a, c * d + b, gm(a, b) * v);
        });
    }
    if (wilson_term > 0) {
        const double s = 0.5 * wilson_term * grid.h;
        detail::for_each_edge(grid, [&](long i, long j, double w, int) {
            for (int a = 0; a < d; ++a) {
                trip.emplace_back(i * d + a, i * d + a, s * w);
                trip.emplace_back(j * d + a, j * d + a, s * w);
                trip.emplace_back(i * d + a, j * d + a, -s * w);
                trip.emplace_back(j * d + a, i * d + a, -s * w);
            }
        });
    }
    DiracMatrix m;
    const long ndof = grid.nodes() * d;
    m.op.resize(ndof, ndof);
    m.op.setFromTriplets(trip.begin(), trip.end());
    m.mass.resize(ndof);
    for (long node = 0; node < grid.nodes(); ++node) m.mass.segment(node * d, d).setConstant(grid.weight(node));
    m.embed.resize(ndof, ndof);
    m.embed.setIdentity();
    m.grid = grid;
    m.d = d;
    m.node_factor = Eigen::VectorXd::Ones(grid.nodes());
    return m;
}

// Eliminates the B(sign)-components at every boundary node: boundary DOFs are expressed in an
// orthonormal basis of the admissible eigenspace of nu.Gamma (intersection of them on edges and
// corners, which is {0}).  Reduced operator is P* A P, exactly Hermitian.
inline DiracMatrix apply_chiral_bc(const DiracMatrix& full, const CliffordRep& rep, Sign sign)
{
    if (full.reduced) throw std::invalid_argument("apply_chiral_bc: matrix is already reduced");
    const Grid& g = full.grid;
    const int d = full.d;
    std::vector<Triplet> trip;
    long col = 0;
    std::map<std::vector<int>, Mat> cache;  // keyed by the face signature
    for (long node = 0; node < g.nodes(); ++node) {
        const auto normals = g.face_normals(node);
        std::vector<int> key;
        for (const auto& nu : normals)
            for (int k = 0; k < g.n; ++k)
                if (nu(k) != 0) key.push_back(nu(k) > 0 ? k + 1 : -(k + 1));
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, detail::intersect_admissible(rep, normals, sign)).first;
        const Mat& basis = it->second;
        for (int j = 0; j < basis.cols(); ++j, ++col)
            for (int a = 0; a < d; ++a)
                if (std::abs(basis(a, j)) > 0) trip.emplace_back(node * d + a, col, basis(a, j));
    }
    DiracMatrix out;
    out.embed.resize(full.op.rows(), col);
    out.embed.setFromTriplets(trip.begin(), trip.end());
    const SpMat pa = out.embed.adjoint();
    out.op = pa * full.op * out.embed;
    out.op.prune(cplx(0), 0.0);
    const SpMat mp = pa * SpMat(full.mass.cast<cplx>().asDiagonal()) * out.embed;
    out.mass = mp.diagonal().real();
    out.grid = g;
    out.d = d;
    out.reduced = true;
    out.sign = sign;
    out.model = full.model;
    out.node_factor = full.node_factor;
    return out;
}

// Weak form of the same condition: keep all d components on boundary nodes and add the penalty
// gamma(nu) B(sign) (x) E_face.  Together with the SBP boundary term -gamma(nu)/2 this leaves the
// Hermitian part of A plus (s/2) Gamma (x) E_face, s = +1 for B-, with f^{n-1} in the conformal
// model.  The penalty does not reference the face orientation, so every doubler taste sees one
// consistent bag sign on all faces; the strong elimination flips the sign seen by some tastes on
// the truncation faces.
inline DiracMatrix apply_chiral_bc_weak(const DiracMatrix& full, const CliffordRep& rep, Sign sign)
{
    if (full.reduced) throw std::invalid_argument("apply_chiral_bc_weak: matrix is already reduced");
    const Grid& g = full.grid;
    const int d = full.d;
    const int n = g.n;
    const double s = sign == Sign::minus ? 1.0 : -1.0;
    std::vector<Triplet> trip;
    for (long node = 0; node < g.nodes(); ++node) {
        const auto idx = g.multi_index(node);
        double e = 0;
        for (int k = 0; k < n; ++k) {
            if (g.periodic[k] || (idx[k] != 0 && idx[k] != g.count[k] - 1)) continue;
            double w = 1;
            for (int j = 0; j < n; ++j)
                if (j != k) w *= g.weight_1d(j, idx[j]);
            e += w;
        }
        if (e == 0) continue;
        const double c = 0.5 * s * e * std::pow(full.node_factor(node), n - 1);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                if (rep.chirality(a, b) != cplx(0)) trip.emplace_back(node * d + a, node * d + b, c * rep.chirality(a, b));
    }
    SpMat pen(full.op.rows(), full.op.cols());
    pen.setFromTriplets(trip.begin(), trip.end());
    DiracMatrix out = full;
    out.op = 0.5 * (full.op + SpMat(full.op.adjoint())) + pen;
    out.op.prune(cplx(0), 0.0);
    out.reduced = true;
    out.sign = sign;
    return out;
}

enum class BoundaryScheme { strong, weak };

inline DiracMatrix apply_bc(const DiracMatrix& full, const CliffordRep& rep, Sign sign, BoundaryScheme scheme)
{
    return scheme == BoundaryScheme::strong ? apply_chiral_bc(full, rep, sign) : apply_chiral_bc_weak(full, rep, sign);
}

// D_{f^2 xi} = f^{-(n+1)/2} D_xi f^{(n-1)/2}: weak form F^{(n-1)/2} A F^{(n-1)/2}, mass f^n w.
inline DiracMatrix assemble_conformal(const CliffordRep& rep, const Grid& grid, const ScalarField& f,
                                      const std::string& model = "conformal", double wilson_term = 0.0)
{
    DiracMatrix m = assemble_flat(rep, grid, wilson_term);
    const int d = rep.d;
    const int n = rep.n;
    Eigen::VectorXd fn(grid.nodes()), scale(m.op.rows());
    for (long node = 0; node < grid.nodes(); ++node) {
        const double fv = f(grid.coord(node));
        if (!(fv > 0)) throw std::invalid_argument("assemble_conformal: conformal factor must be positive");
        fn(node) = fv;
        scale.segment(node * d, d).setConstant(std::pow(fv, 0.5 * (n - 1)));
        m.mass.segment(node * d, d) *= std::pow(fv, n);
    }
    const SpMat s = SpMat(scale.cast<cplx>().asDiagonal());
    m.op = s * m.op * s;
    m.node_factor = fn;
    m.model = model;
    return m;
}

inline ScalarField hemisphere_factor() { return [](const Point& p) { return conformal_factor(p); }; }

// Conformal factor of the flat unit disk pulled back to the half-plane by the Moebius map
// z -> (z - ia)/(z + ia); the disk centre sits at (0, a) with local scale 1/(2a).
inline ScalarField disk_factor(double a = 0.5)
{
    return [a](const Point& p) { return 2 * a / (p(0) * p(0) + (p(1) + a) * (p(1) + a)); };
}

inline ScalarField constant_factor(double c)
{
    return [c](const Point&) { return c; };
}

inline Spinor sample_node(const DiracMatrix& m, const Eigen::VectorXcd& full, long node)
{
    return full.segment(node * m.d, m.d);
}

// samples a field at every node into the full DOF vector
inline Eigen::VectorXcd sample(const Grid& g, int d, const SpinorField& field)
{
    Eigen::VectorXcd v(g.nodes() * d);
    for (long node = 0; node < g.nodes(); ++node) v.segment(node * d, d) = field(g.coord(node));
    return v;
}

// full vector -> reduced coordinates (orthogonal projection, since the embedding has orthonormal columns)
inline Eigen::VectorXcd restrict_to(const DiracMatrix& m, const Eigen::VectorXcd& full)
{
    return m.embed.adjoint() * full;
}

inline Eigen::VectorXcd prolong(const DiracMatrix& m, const Eigen::VectorXcd& reduced) { return m.embed * reduced; }

inline double max_abs(const SpMat& a)
{
    double r = 0;
    for (int k = 0; k < a.outerSize(); ++k)
        for (SpMat::InnerIterator it(a, k); it; ++it) r = std::max(r, std::abs(it.value()));
    return r;
}

inline double hermiticity_defect(const DiracMatrix& m)
{
    const SpMat diff = m.op - SpMat(m.op.adjoint());
    return max_abs(diff);
}

// Apply D = M^{-1} A to a full nodal vector (interior rows are plain central differences).
inline Eigen::VectorXcd apply_dirac(const DiracMatrix& m, const Eigen::VectorXcd& v)
{
    Eigen::VectorXcd out = m.op * v;
    return out.cwiseQuotient(m.mass.cast<cplx>());
}

inline double volume(const DiracMatrix& m)
{
    double v = 0;
    for (long node = 0; node < m.grid.nodes(); ++node)
        v += m.grid.weight(node) * std::pow(m.node_factor(node), m.grid.n);
    return v;
}

// ---------------------------------------------------------------------------------------------
// Covariance check through the Levi-Civita route:
//   D_g phi = f^{-1} [ sum g_i d_i phi + (n-1)/2 gamma(grad ln f) phi ]   for g = f^2 xi,
// compared with f^{-(n+1)/2} D_xi psi at interior nodes, phi = f^{-(n-1)/2} psi.
inline double covariance_residual(const CliffordRep& rep, const Grid& grid, const ScalarField& f,
                                  const SpinorField& psi)
{
    const int n = rep.n;
    const double h = grid.h;
    auto phi = [&](const Point& p) -> Spinor { return std::pow(f(p), -0.5 * (n - 1)) * psi(p); };
    double worst = 0;
    for (long node = 0; node < grid.nodes(); ++node) {
        const auto idx = grid.multi_index(node);
        bool interior = true;
        for (int k = 0; k < n; ++k)
            if (!grid.periodic[k] && (idx[k] == 0 || idx[k] == grid.count[k] - 1)) interior = false;
        if (!interior) continue;
        const Point p = grid.coord(node);
        const double fp = f(p);
        Spinor dphi = Spinor::Zero(rep.d), dpsi = Spinor::Zero(rep.d);
        RVec grad_ln_f(n);
        for (int k = 0; k < n; ++k) {
            Point e = Point::Zero(n);
            e(k) = h;
            dphi += rep.gamma[k] * ((phi(p + e) - phi(p - e)) / (2 * h));
            dpsi += rep.gamma[k] * ((psi(p + e) - psi(p - e)) / (2 * h));
            grad_ln_f(k) = (std::log(f(p + e)) - std::log(f(p - e))) / (2 * h);
        }
        const Spinor lhs = (dphi + 0.5 * (n - 1) * clifford_mul(rep, grad_ln_f, phi(p))) / fp;
        const Spinor rhs = std::pow(fp, -0.5 * (n + 1)) * dpsi;
        worst = std::max(worst, (lhs - rhs).norm());
    }
    return worst;
}

// ---------------------------------------------------------------------------------------------
// Conformal Laplacian pencil in the metric g = f^2 xi:
//   Q(u) = a int f^{n-2} |grad u|^2 + int R_g f^n u^2,  M = f^n,  a = 4(n-1)/(n-2),
// Neumann (natural) on every face.  The mean curvature of t = 0 is required to vanish.
struct LaplacianPencil {
    RSpMat stiffness;
    Eigen::VectorXd mass;
    Eigen::VectorXd curvature;  // R_g at nodes
    Grid grid;
};

inline double scalar_curvature(const ScalarField& f, const Point& p, int n, double step = 1e-4)
{
    const double a = 4.0 * (n - 1) / (n - 2);
    const double e = 0.5 * (n - 2);
    auto u = [&](const Point& q) { return std::pow(f(q), e); };
    double lap = 0;
    const double u0 = u(p);
    for (int k = 0; k < n; ++k) {
        Point dp = Point::Zero(n);
        dp(k) = step;
        lap += (u(p + dp) - 2 * u0 + u(p - dp)) / (step * step);
    }
    return -a * std::pow(f(p), -0.5 * (n + 2)) * lap;
}

inline LaplacianPencil assemble_conformal_laplacian(const Grid& grid, const ScalarField& f)
{
    const int n = grid.n;
    if (n < 3) throw std::invalid_argument("assemble_conformal_laplacian: requires n >= 3");
    const double a = 4.0 * (n - 1) / (n - 2);
    LaplacianPencil lp;
    lp.grid = grid;
    const long N = grid.nodes();
    lp.mass.resize(N);
    lp.curvature.resize(N);
    for (long node = 0; node < N; ++node) {
        const Point p = grid.coord(node);
        const double fv = f(p);
        if (!(fv > 0)) throw std::invalid_argument("assemble_conformal_laplacian: conformal factor must be positive");
        lp.mass(node) = grid.weight(node) * std::pow(fv, n);
        lp.curvature(node) = scalar_curvature(f, p, n);
        if (grid.is_physical_boundary(node)) {
            Point q = p;
            const double s = 1e-5;
            q(n - 1) = s;
            const double dt = (std::log(f(q)) - std::log(fv)) / s;
            if (std::abs(dt) > 1e-4)
                throw std::invalid_argument("assemble_conformal_laplacian: boundary mean curvature must vanish");
        }
    }
    std::vector<RTriplet> trip;
    detail::for_each_edge(grid, [&](long i, long j, double w, int) {
        const Point mid = 0.5 * (grid.coord(i) + grid.coord(j));
        const double we = a * w * std::pow(f(mid), n - 2);
        trip.emplace_back(i, i, we);
        trip.emplace_back(j, j, we);
        trip.emplace_back(i, j, -we);
        trip.emplace_back(j, i, -we);
    });
    for (long node = 0; node < N; ++node) trip.emplace_back(node, node, lp.curvature(node) * lp.mass(node));
    lp.stiffness.resize(N, N);
    lp.stiffness.setFromTriplets(trip.begin(), trip.end());
    return lp;
}

// ---------------------------------------------------------------------------------------------
// coordinate-list export: one "row col re im" line per stored entry
inline void export_coo(const SpMat& a, std::ostream& os)
{
    os.precision(17);
    os << "% " << a.rows() << " " << a.cols() << " " << a.nonZeros() << "\n";
    for (int k = 0; k < a.outerSize(); ++k)
        for (SpMat::InnerIterator it(a, k); it; ++it)
            os << it.row() << " " << it.col() << " " << it.value().real() << " " << it.value().imag() << "\n";
}

inline SpMat import_coo(std::istream& is)
{
    std::string line;
    long rows = 0, cols = 0, nnz = 0;
    std::vector<Triplet> trip;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (line[0] == '%') {
            char c;
            ls >> c >> rows >> cols >> nnz;
            continue;
        }
        long r, c;
        double re, im;
        ls >> r >> c >> re >> im;
        trip.emplace_back(r, c, cplx(re, im));
    }
    SpMat a(rows, cols);
    a.setFromTriplets(trip.begin(), trip.end());
    return a;
}

struct DiscConfig {
    int n = 2;
    double h = 0.05;
    double R_max = 6.0;
    std::string model = "hemisphere";
    Sign sign = Sign::minus;
    double wilson_term = 0.0;
};

// key = value lines, '#' comments; unknown keys are rejected
inline DiscConfig read_config(std::istream& is)
{
    DiscConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        if (trim(line).empty()) continue;
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "n")
            c.n = std::stoi(val);
        else if (key == "h")
            c.h = std::stod(val);
        else if (key == "R_max")
            c.R_max = std::stod(val);
        else if (key == "model")
            c.model = val;
        else if (key == "sign") {
            if (val == "minus" || val == "-")
                c.sign = Sign::minus;
            else if (val == "plus" || val == "+")
                c.sign = Sign::plus;
            else
                throw std::invalid_argument("config: bad sign '" + val + "'");
        } else if (key == "wilson_term")
            c.wilson_term = std::stod(val);
        else
            throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    return c;
}

} // namespace chibag
