#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#ifdef CHIBAG_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace chibag {

enum class Backend { automatic, umfpack, sparse_lu };

struct EigOptions {
    int k = 4;
    double tol = 1e-10;
    double shift = 0.0;
    int block = 2;
    int basis = 0;          // Krylov basis size; 0 picks max(2k + 8 block, 40)
    int max_restarts = 200;
    bool keep_vectors = false;
    Backend backend = Backend::automatic;  // automatic: UMFPACK when built with it
};

template <typename Scalar>
struct SpectrumResultT {
    std::vector<double> eigenvalues;  // sorted by |lambda - shift| ascending
    std::vector<double> residuals;    // ||M^{-1/2}(A v - lambda M v)|| / ||v||_M
    std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> vectors;  // M-normalised, if requested
    double shift = 0;
    bool shift_perturbed = false;
    int iterations = 0;   // restart cycles
    int solves = 0;       // applications of the factorized operator
    double tol = 0;
    bool converged = false;
    long dofs = 0;
};

namespace detail {

template <typename Scalar>
class ShiftedSolver {
public:
    using SpM = Eigen::SparseMatrix<Scalar>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    explicit ShiftedSolver(Backend b = Backend::automatic)
    {
#ifdef CHIBAG_HAVE_UMFPACK
        use_umf_ = b != Backend::sparse_lu;
#else
        if (b == Backend::umfpack) throw std::invalid_argument("ShiftedSolver: built without UMFPACK");
#endif
    }

    // UmfPackLU keeps a reference to its matrix, so the solver owns a copy
    bool factor(const SpM& a)
    {
        mat_ = a;
#ifdef CHIBAG_HAVE_UMFPACK
        if (use_umf_) {
            // nested dissection keeps the 3-D fill manageable
            umf_.umfpackControl()(UMFPACK_ORDERING) = UMFPACK_ORDERING_METIS;
            umf_.compute(mat_);
            return umf_.info() == Eigen::Success;
        }
#endif
        lu_.analyzePattern(mat_);
        lu_.factorize(mat_);
        return lu_.info() == Eigen::Success;
    }

    Vec solve(const Vec& b)
    {
#ifdef CHIBAG_HAVE_UMFPACK
        if (use_umf_) return umf_.solve(b);
#endif
        return lu_.solve(b);
    }

private:
    SpM mat_;
#ifdef CHIBAG_HAVE_UMFPACK
    bool use_umf_ = true;
    Eigen::UmfPackLU<SpM> umf_;
#endif
    Eigen::SparseLU<SpM, Eigen::COLAMDOrdering<int>> lu_;
};

} // namespace detail

// k eigenpairs of A v = lambda M v (A Hermitian, M diagonal positive) nearest the shift.
// Block Krylov-Schur on T = M^{1/2} (A - shift M)^{-1} M^{1/2}.  The first start column is the
// mass-normalised all-ones vector; further block columns come from a fixed-seed generator.
template <typename Scalar>
SpectrumResultT<Scalar> smallest_eigs(const Eigen::SparseMatrix<Scalar>& A, const Eigen::VectorXd& mass,
                                      const EigOptions& opt = {})
{
    using SpM = Eigen::SparseMatrix<Scalar>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using DMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    const long N = A.rows();
    if (A.cols() != N || mass.size() != N) throw std::invalid_argument("smallest_eigs: dimension mismatch");
    if (opt.k < 1) throw std::invalid_argument("smallest_eigs: k must be >= 1");
    if ((mass.array() <= 0).any()) throw std::invalid_argument("smallest_eigs: mass must be positive");

    SpectrumResultT<Scalar> res;
    res.tol = opt.tol;
    res.dofs = N;
    const int k = int(std::min<long>(opt.k, N));
    const int b = int(std::max(1L, std::min<long>(opt.block, N)));

    // small problems: dense
    if (N <= 400) {
        DMat dense = DMat(A);
        const Eigen::VectorXd isq = mass.cwiseSqrt().cwiseInverse();
        DMat c = isq.asDiagonal() * dense * isq.asDiagonal();
        c = 0.5 * (c + c.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<DMat> es(c);
        std::vector<int> order(N);
        for (int i = 0; i < N; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
            return std::abs(es.eigenvalues()(x) - opt.shift) < std::abs(es.eigenvalues()(y) - opt.shift);
        });
        for (int i = 0; i < k; ++i) {
            const double lam = es.eigenvalues()(order[i]);
            Vec v = isq.cast<Scalar>().asDiagonal() * es.eigenvectors().col(order[i]);
            const Vec r = A * v - Scalar(lam) * (mass.cast<Scalar>().asDiagonal() * v);
            res.eigenvalues.push_back(lam);
            res.residuals.push_back((isq.cast<Scalar>().asDiagonal() * r).norm());
            if (opt.keep_vectors) res.vectors.push_back(v);
        }
        res.shift = opt.shift;
        res.converged = true;
        return res;
    }

    const int m = std::max({opt.basis, 2 * k + 8 * b, 40});
    if (m + b > N) throw std::invalid_argument("smallest_eigs: Krylov basis larger than the problem");

    const Eigen::VectorXd sq = mass.cwiseSqrt();
    detail::ShiftedSolver<Scalar> solver(opt.backend);
    double shift = opt.shift;
    bool ok = false;
    for (int attempt = 0; attempt < 4 && !ok; ++attempt) {
        SpM shifted = A;
        if (shift != 0.0) shifted -= SpM(mass.cast<Scalar>().asDiagonal()) * Scalar(shift);
        shifted.makeCompressed();
        ok = solver.factor(shifted);
        if (!ok) {
            shift += 1e-8 * std::max(1.0, std::abs(shift));
            res.shift_perturbed = true;
        }
    }
    if (!ok) throw std::runtime_error("smallest_eigs: factorization failed after shift perturbation");
    res.shift = shift;

    auto apply = [&](const Vec& x) -> Vec {
        ++res.solves;
        Vec y = sq.cast<Scalar>().asDiagonal() * x;
        y = solver.solve(y);
        return sq.cast<Scalar>().asDiagonal() * y;
    };

    DMat V = DMat::Zero(N, m + b);
    DMat H = DMat::Zero(m + b, m + b);
    {
        DMat start(N, b);
        start.col(0) = sq.cast<Scalar>();
        std::mt19937_64 gen(20240607);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        for (int j = 1; j < b; ++j)
            for (long i = 0; i < N; ++i) {
                if constexpr (std::is_same_v<Scalar, double>)
                    start(i, j) = uni(gen);
                else
                    start(i, j) = Scalar(uni(gen), uni(gen));
            }
        Eigen::HouseholderQR<DMat> qr(start);
        V.leftCols(b) = qr.householderQ() * DMat::Identity(N, b);
    }

    int active = 0;  // columns whose images are folded into H
    int cols = b;    // orthonormal columns in V
    Eigen::VectorXd theta;
    DMat S;
    std::vector<int> order;
    for (int cycle = 0; cycle < opt.max_restarts; ++cycle) {
        res.iterations = cycle + 1;
        while (active < m) {
            DMat W(N, b);
            for (int j = 0; j < b; ++j) W.col(j) = apply(V.col(active + j));
            for (int pass = 0; pass < 2; ++pass) {
                const DMat C = V.leftCols(cols).adjoint() * W;
                W.noalias() -= V.leftCols(cols) * C;
                H.block(0, active, cols, b) += C;
            }
            Eigen::HouseholderQR<DMat> qr(W);
            const DMat Q = qr.householderQ() * DMat::Identity(N, b);
            const DMat R = DMat(qr.matrixQR().topRows(b).template triangularView<Eigen::Upper>());
            V.middleCols(cols, b) = Q;
            H.block(cols, active, b, b) = R;
            active += b;
            cols += b;
        }
        DMat Hm = H.topLeftCorner(m, m);
        Hm = 0.5 * (Hm + Hm.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<DMat> es(Hm);
        theta = es.eigenvalues();
        S = es.eigenvectors();
        order.assign(m, 0);
        for (int i = 0; i < m; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](int x, int y) { return std::abs(theta(x)) > std::abs(theta(y)); });
        const DMat B = H.block(m, 0, b, m);
        bool all = true;
        for (int i = 0; i < k; ++i) {
            const double rn = (B * S.col(order[i])).norm();
            if (rn > opt.tol * std::abs(theta(order[i]))) all = false;
        }
        if (all) {
            res.converged = true;
            break;
        }
        if (cycle + 1 == opt.max_restarts) break;
        // thick restart on the p dominant Ritz vectors plus the residual block
        const int p = std::min(m - b, std::max(k + b, m / 2));
        DMat sel(m, p);
        for (int i = 0; i < p; ++i) sel.col(i) = S.col(order[i]);
        const DMat kept = V.leftCols(m) * sel;
        const DMat resid = V.middleCols(m, b);
        V.setZero();
        V.leftCols(p) = kept;
        V.middleCols(p, b) = resid;
        const DMat coupling = B * sel;
        H.setZero();
        for (int i = 0; i < p; ++i) H(i, i) = theta(order[i]);
        H.block(p, 0, b, p) = coupling;
        H.block(0, p, p, b) = coupling.adjoint();
        // the residual-block column of H is recomputed when that block is expanded
        H.block(0, p, p, b).setZero();
        active = p;
        cols = p + b;
    }

    for (int i = 0; i < k; ++i) {
        const double th = theta(order[i]);
        const double lam = shift + 1.0 / th;
        Vec y = V.leftCols(m) * S.col(order[i]);
        Vec v = sq.cwiseInverse().cast<Scalar>().asDiagonal() * y;
        const double mnorm = std::sqrt(std::real((v.adjoint() * (mass.cast<Scalar>().asDiagonal() * v))(0, 0)));
        v /= Scalar(mnorm);
        const Vec r = A * v - Scalar(lam) * (mass.cast<Scalar>().asDiagonal() * v);
        res.eigenvalues.push_back(lam);
        res.residuals.push_back((sq.cwiseInverse().cast<Scalar>().asDiagonal() * r).norm());
        if (opt.keep_vectors) res.vectors.push_back(v);
    }
    // sort by distance to the shift (solver order is by Ritz magnitude; keep ties stable)
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) {
        return std::abs(res.eigenvalues[x] - opt.shift) < std::abs(res.eigenvalues[y] - opt.shift);
    });
    auto permute = [&](auto& vec) {
        if (vec.empty()) return;
        auto copy = vec;
        for (int i = 0; i < k; ++i) vec[i] = copy[idx[i]];
    };
    permute(res.eigenvalues);
    permute(res.residuals);
    permute(res.vectors);
    return res;
}

struct Cluster {
    double value = 0;
    int multiplicity = 0;
};

// eigenvalues within 1e-6 max(1,|lambda|) of the running cluster head are merged
inline std::vector<Cluster> cluster_eigenvalues(std::vector<double> ev, double rel = 1e-6)
{
    std::sort(ev.begin(), ev.end());
    std::vector<Cluster> out;
    for (double v : ev) {
        if (!out.empty() && std::abs(v - out.back().value) <= rel * std::max(1.0, std::abs(out.back().value)))
            ++out.back().multiplicity;
        else
            out.push_back({v, 1});
    }
    return out;
}

} // namespace chibag
