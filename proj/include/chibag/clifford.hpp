#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace chibag {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Spinor = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

struct CliffordRep {
    int n = 0;
    int d = 0;
    std::vector<Mat> gamma;
    Mat chirality;
};

namespace detail {

inline Mat kron(const Mat& a, const Mat& b)
{
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// even-dimensional rep: gammas of dim 2m extended by Gamma (x) i*sigma_{1,2}
inline CliffordRep even_rep(int n)
{
    const cplx I(0, 1);
    Mat s1(2, 2), s2(2, 2), s3(2, 2);
    s1 << 0, 1, 1, 0;
    s2 << 0, -I, I, 0;
    s3 << 1, 0, 0, -1;

    CliffordRep rep;
    rep.n = 2;
    rep.d = 2;
    rep.gamma = {I * s1, I * s2};
    rep.chirality = s3;
    while (rep.n < n) {
        const Mat id2 = Mat::Identity(2, 2);
        std::vector<Mat> g;
        for (const auto& gj : rep.gamma) g.push_back(kron(gj, id2));
        g.push_back(kron(rep.chirality, I * s1));
        g.push_back(kron(rep.chirality, I * s2));
        rep.n += 2;
        rep.d *= 2;
        rep.gamma = std::move(g);
        Mat prod = Mat::Identity(rep.d, rep.d);
        for (const auto& gj : rep.gamma) prod = prod * gj;
        rep.chirality = std::pow(I, rep.n / 2) * prod;
    }
    return rep;
}

} // namespace detail

inline CliffordRep build_rep(int n)
{
    if (n < 2) throw std::invalid_argument("build_rep: n must be >= 2, got " + std::to_string(n));
    if (n % 2 == 0) return detail::even_rep(n);
    CliffordRep big = detail::even_rep(n + 1);
    CliffordRep rep;
    rep.n = n;
    rep.d = big.d;
    rep.gamma.assign(big.gamma.begin(), big.gamma.begin() + n);
    rep.chirality = cplx(0, 1) * big.gamma[n];
    return rep;
}

// gamma(v) = sum v_i gamma_i
inline Mat clifford_matrix(const CliffordRep& rep, const RVec& v)
{
    if (v.size() != rep.n) throw std::invalid_argument("clifford_matrix: vector has wrong dimension");
    Mat out = Mat::Zero(rep.d, rep.d);
    for (int i = 0; i < rep.n; ++i)
        if (v[i] != 0.0) out += v[i] * rep.gamma[i];
    return out;
}

inline Spinor clifford_mul(const CliffordRep& rep, const RVec& v, const Spinor& s)
{
    if (s.size() != rep.d) throw std::invalid_argument("clifford_mul: spinor has wrong dimension");
    return clifford_matrix(rep, v) * s;
}

enum class Sign { plus, minus };

inline int sign_value(Sign s) { return s == Sign::plus ? 1 : -1; }
inline std::string to_string(Sign s) { return s == Sign::plus ? "plus" : "minus"; }

struct ChiralProjector {
    Sign sign = Sign::minus;
    Mat matrix;
};

// B(+-) = (Id +- nu.Gamma)/2
inline ChiralProjector chiral_projector(const CliffordRep& rep, const RVec& nu, Sign sign)
{
    if (nu.size() != rep.n) throw std::invalid_argument("chiral_projector: normal has wrong dimension");
    if (std::abs(nu.norm() - 1.0) > 1e-12) throw std::invalid_argument("chiral_projector: normal is not a unit vector");
    const Mat nuG = clifford_matrix(rep, nu) * rep.chirality;
    const Mat id = Mat::Identity(rep.d, rep.d);
    return {sign, 0.5 * (id + double(sign_value(sign)) * nuG)};
}

// Orthonormal basis (d x d/2) of the boundary values admitted by B(sign)phi = 0,
// i.e. the (-sign)-eigenspace of nu.Gamma.
inline Mat admissible_basis(const CliffordRep& rep, const RVec& nu, Sign sign)
{
    const Mat kernel_proj = chiral_projector(rep, nu, sign == Sign::plus ? Sign::minus : Sign::plus).matrix;
    Eigen::SelfAdjointEigenSolver<Mat> es(kernel_proj);
    // eigenvalues ascending: the last d/2 are the unit ones
    return es.eigenvectors().rightCols(rep.d / 2);
}

struct CliffordReport {
    double clifford_relation = 0;  // max ||g_i g_j + g_j g_i + 2 delta_ij||
    double skew_hermitian = 0;     // max ||g_i^* + g_i||
    double unitary = 0;            // max ||g_i^* g_i - Id||
    double chirality_square = 0;   // ||Gamma^2 - Id||
    double chirality_hermitian = 0;
    double chirality_anticommute = 0;
    double dimension_ok = 0;  // 0 if d matches the expected value, else 1
    bool pass = false;

    double max_residual() const
    {
        return std::max({clifford_relation, skew_hermitian, unitary, chirality_square, chirality_hermitian,
                          chirality_anticommute, dimension_ok});
    }
};

inline int expected_spinor_dim(int n) { return n % 2 == 0 ? 1 << (n / 2) : 1 << ((n + 1) / 2); }

inline double op_norm(const Mat& m)
{
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

inline CliffordReport verify_relations(const CliffordRep& rep, double tol = 1e-12)
{
    CliffordReport r;
    const Mat id = Mat::Identity(rep.d, rep.d);
    for (int i = 0; i < rep.n; ++i) {
        const Mat& gi = rep.gamma[i];
        r.skew_hermitian = std::max(r.skew_hermitian, op_norm(gi.adjoint() + gi));
        r.unitary = std::max(r.unitary, op_norm(gi.adjoint() * gi - id));
        r.chirality_anticommute =
            std::max(r.chirality_anticommute, op_norm(rep.chirality * gi + gi * rep.chirality));
        for (int j = 0; j < rep.n; ++j) {
            Mat ac = gi * rep.gamma[j] + rep.gamma[j] * gi;
            if (i == j) ac += 2.0 * id;
            r.clifford_relation = std::max(r.clifford_relation, op_norm(ac));
        }
    }
    r.chirality_square = op_norm(rep.chirality * rep.chirality - id);
    r.chirality_hermitian = op_norm(rep.chirality.adjoint() - rep.chirality);
    r.dimension_ok = rep.d == expected_spinor_dim(rep.n) ? 0.0 : 1.0;
    r.pass = r.max_residual() < tol;
    return r;
}

} // namespace chibag
