// One line per acceptance criterion.  Tolerances are fixed here; exit status is nonzero when a
// criterion fails unless --report-only is given.

#include "chibag/constants.hpp"
#include "chibag/functionals.hpp"
#include "chibag/geometry.hpp"
#include "chibag/spectral.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

using namespace chibag;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// 1: Killing identities on 41x21 (n=2) and 21^3 (n=3)
Verdict killing()
{
    Verdict v{true, ""};
    for (int n : {2, 3}) {
        const CliffordRep rep = build_rep(n);
        SampleGrid g;
        g.n = n;
        g.points = 21;
        for (Sign s : {Sign::plus, Sign::minus}) {
            const KillingReport k = verify_killing(rep, s, g, 1e-3);
            v.pass = v.pass && k.pass;
            v.detail += fmt("n=%d%s |psi|2 %.1e |Dpsi|2 %.1e order %.2f; ", n, s == Sign::plus ? "+" : "-",
                            k.residual_norm, k.residual_dnorm, k.observed_order);
        }
    }
    v.detail += "(tol 1e-10, order >= 1.8)";
    return v;
}

// 2: B- annihilates psi+-, psi_eps and the transferred phi+ on boundary nodes
Verdict bag_exactness()
{
    const double tol = 1e-12;
    double worst = 0;
    for (int n : {2, 3}) {
        const CliffordRep rep = build_rep(n);
        const Mat bm = chiral_projector(rep, inner_normal(n), Sign::minus).matrix;
        const Grid g = Grid::half_space(n, n == 2 ? 0.05 : 0.1, 2.0, 2.0);
        for (long node = 0; node < g.nodes(); ++node) {
            const Point p = g.coord(node);
            if (normal_coord(p) != 0.0) continue;
            const double f = conformal_factor(p);
            const Spinor plus = killing_test_spinor(rep, Sign::plus, p);
            worst = std::max(worst, (bm * plus).norm());
            worst = std::max(worst, (bm * killing_test_spinor(rep, Sign::minus, p)).norm());
            for (double eps : {0.2, 0.05}) worst = std::max(worst, (bm * test_spinor_family(rep, eps, 0.5, p)).norm());
            worst = std::max(worst, (bm * (std::pow(f, -0.5 * (n - 1)) * plus)).norm());
        }
    }
    return {worst < tol, fmt("max |B- psi| = %.2e over n=2,3 boundary nodes (tol %.0e)", worst, tol)};
}

// 3: hemisphere spectrum
Verdict hemisphere()
{
    PencilOptions o;
    o.n = 2;
    o.h = 0.05;
    o.R_max = 6;
    // k = 8 covers both signs of the four taste copies, needed for the profile overlap
    const HemisphereReport a = hemisphere_spectrum(o, 8, 1e-10);
    o.R_max = 10;
    const HemisphereReport b = hemisphere_spectrum(o, 4, 1e-10);
    PencilOptions o3;
    o3.n = 3;
    o3.h = 0.1;
    o3.R_max = 2;
    const HemisphereReport c = hemisphere_spectrum(o3, 2, 1e-6);
    const double e_l = rel(a.lambda1, 1.0), e_p = rel(a.product, a.target_product), shift = rel(b.lambda1, a.lambda1);
    const double e3 = rel(c.lambda1, 1.5);
    Verdict v;
    v.pass = e_l < 0.03 && e_p < 0.03 && shift < 0.005 && e3 < 0.05 && a.profile_overlap > 0.95;
    v.detail = fmt("n=2 lambda1 %.5f (%.2f%%/3%%) product %.5f (%.2f%%/3%%) Killing profile overlap %.4f "
                   "(> 0.95, cluster of %d) R 6->10 shift %.2f%%/0.5%%; n=3 h=0.1 R=2 lambda1 %.5f (%.2f%%/5%%)",
                   a.lambda1, 100 * e_l, a.product, 100 * e_p, a.profile_overlap, a.cluster_size, 100 * shift,
                   c.lambda1, 100 * e3);
    return v;
}

// 4: Spec+ = -Spec-
Verdict symmetry()
{
    const CliffordRep rep2 = build_rep(2), rep3 = build_rep(3);
    PencilOptions o;
    o.n = 2;
    o.h = 0.05;
    o.R_max = 6;
    o.model = Model::flat;
    const SymmetryReport f = spectral_symmetry_check(rep2, o, 4);
    o.model = Model::hemisphere;
    const SymmetryReport h = spectral_symmetry_check(rep2, o, 4);
    PencilOptions o3;
    o3.n = 3;
    o3.h = 0.2;
    o3.R_max = 2;
    const SymmetryReport h3 = spectral_symmetry_check(rep3, o3, 4);
    return {f.pass && h.pass && h3.pass,
            fmt("max pairing defect flat %.1e, hemisphere %.1e, hemisphere n=3 %.1e (tol 1e-8)", f.max_pair_defect,
                h.max_pair_defect, h3.max_pair_defect)};
}

// smooth positive f and a polynomial spinor with fixed pseudo-random coefficients
ScalarField smooth_factor(int n)
{
    return [n](const Point& p) {
        double s = 1.2;
        for (int k = 0; k < n; ++k) s += 0.3 * std::sin(0.7 * (k + 1) * p(k) + 0.2 * k);
        return s;
    };
}

SpinorField polynomial_spinor(const CliffordRep& rep, unsigned seed)
{
    std::mt19937 gen(seed);
    std::normal_distribution<double> nd;
    const int n = rep.n, d = rep.d;
    std::vector<std::vector<cplx>> c(n + 1 + n * n, std::vector<cplx>(d));
    for (auto& row : c)
        for (auto& z : row) z = cplx(nd(gen), nd(gen));
    return [=](const Point& p) {
        Spinor s(d);
        for (int a = 0; a < d; ++a) {
            cplx v = c[0][a];
            for (int k = 0; k < n; ++k) v += c[1 + k][a] * p(k);
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) v += c[1 + n + k * n + l][a] * p(k) * p(l) * p(l);
            s(a) = v;
        }
        return s;
    };
}

// 5: conformal covariance
Verdict covariance()
{
    bool ok = true;
    std::string d;
    for (int n : {2, 3}) {
        const CliffordRep rep = build_rep(n);
        const SpinorField psi = polynomial_spinor(rep, 11 + n);
        const ScalarField f = smooth_factor(n);
        // the cubic terms keep coarser pairs pre-asymptotic (n=3: 1.29, 1.73, ...)
        const double h = 0.025;
        auto box = [n](double step) { return Grid::box(n, step, std::vector<double>(n, -0.5), std::vector<double>(n, 0.5)); };
        const double r1 = covariance_residual(rep, box(h), f, psi);
        const double r2 = covariance_residual(rep, box(h / 2), f, psi);
        const double order = std::log2(r1 / r2);
        const double zero = covariance_residual(rep, box(h), constant_factor(1.0), psi);
        ok = ok && order >= 1.8 && zero == 0.0;
        d += fmt("n=%d order %.2f, f=1 residual %.1e; ", n, order, zero);
    }
    // constant factor c: eigenvalues scale by 1/c
    const CliffordRep rep = build_rep(2);
    const Grid g = Grid::half_space(2, 0.1, 2.0, 2.0);
    const double c = 1.7;
    const DiracMatrix flat = apply_bc(assemble_conformal(rep, g, constant_factor(1.0), "flat"), rep, Sign::minus, BoundaryScheme::weak);
    const DiracMatrix scaled = apply_bc(assemble_conformal(rep, g, constant_factor(c), "const"), rep, Sign::minus, BoundaryScheme::weak);
    auto a = solve_pencil(flat, 4, 1e-12).eigenvalues, b = solve_pencil(scaled, 4, 1e-12).eigenvalues;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double worst = 0;
    for (int i = 0; i < 4; ++i) worst = std::max(worst, rel(c * b[i], a[i]));
    ok = ok && worst < 1e-10;
    d += fmt("constant c=%.1f scaling defect %.1e (tol 1e-10)", c, worst);
    return {ok, d};
}

// 6: disk oracle
Verdict disk()
{
    const double root = disk_bessel_root();
    PencilOptions o;
    o.n = 2;
    o.h = 0.02;
    o.R_max = 6;
    o.model = Model::disk;
    const CliffordRep rep = build_rep(2);
    const double l1 = lambda_one(solve_pencil(build_pencil(rep, o), 2, 1e-8));
    const double e = rel(l1, root);
    return {e < 0.02, fmt("lambda1 %.6f vs Bessel root %.6f (%.2f%%/2%%)", l1, root, 100 * e)};
}

// 7: eps-scan and moment identity
Verdict scan()
{
    const std::vector<double> eps{0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125};
    const RayleighReport a = epsilon_scan(2, 0.5, eps);
    const RayleighReport b = epsilon_scan(3, 0.5, eps);
    double moment = 0;
    for (int n = 2; n <= 6; ++n) moment = std::max(moment, moment_integral(n).residual);
    Verdict v;
    v.pass = a.pass && b.pass && moment < 1e-8;
    v.detail = fmt("J_inf n=2 %.5f (%.3f%%/2%%, p=%.2f) n=3 %.5f (%.3f%%/2%%, p=%.2f); moment residual %.1e (tol 1e-8)",
                   a.J_inf, 100 * a.relative_error, a.fit_p, b.J_inf, 100 * b.relative_error, b.fit_p, moment);
    return v;
}

// 8: expansion orders, coefficients and the Dirac identity
Verdict expansion()
{
    bool ok = true;
    std::string d;
    for (const MetricChart& c : {fermi_chart_hemisphere(3), synthetic_chart(), synthetic_generic_chart()}) {
        const OrderScanReport s = order_estimate_scan(c, default_scan_radii());
        auto show = [](const SlopeEntry& e) { return e.vanishes ? std::string("0") : fmt("%.2f", e.slope); };
        ok = ok && s.pass;
        d += c.name + " slopes W " + show(s.W) + " Z " + show(s.Z) + " T " + show(s.T) + "; ";
    }
    double coeff = 0;
    for (const MetricChart& c : {fermi_chart_hemisphere(2), fermi_chart_hemisphere(3), graph_chart(0.7)}) {
        const ExpansionReport e = metric_expansion_coeffs(c, 1e-2, 5, 1e-6);
        const BExpansionReport b = b_expansion_check(c, 1e-2, 5, 1e-6);
        ok = ok && e.pass && b.pass;
        coeff = std::max({coeff, e.max_difference, b.max_difference});
    }
    d += fmt("coefficient defect %.1e (tol 1e-6); ", coeff);
    double codazzi = 0, tdev = 0;
    for (const MetricChart& c : {fermi_chart_hemisphere(3), fermi_chart_hemisphere(4), synthetic_chart(),
                                 synthetic_generic_chart()}) {
        const CodazziReport z = codazzi_check(c, 1e-6);
        const TDevelopmentReport t = t_development_check(c, 1e-3, 1e-5);
        ok = ok && z.pass && t.pass;
        codazzi = std::max(codazzi, z.max_defect);
        tdev = std::max(tdev, t.max_defect);
    }
    d += fmt("Codazzi %.1e (tol 1e-6) T development %.1e (tol 1e-5); ", codazzi, tdev);
    double dev = 0;
    for (const MetricChart& c : {flat_chart(3), fermi_chart_hemisphere(3), graph_chart(0.7), synthetic_chart(),
                                 synthetic_generic_chart()}) {
        const CliffordRep rep = build_rep(c.n);
        const SpinorField psi = killing_field(rep, Sign::plus);
        const Spinor phi0 = boundary_compatible_parallel(rep);
        const SpinorField constant = [phi0](const Point&) { return phi0; };
        for (const Point& p : random_chart_points(c.n, 10, 0.3)) {
            dev = std::max(dev, dirac_identity_check(c, rep, psi, p, 1e-3).residual);
            dev = std::max(dev, dirac_identity_check(c, rep, constant, p, 1e-3).residual);
        }
    }
    ok = ok && dev < 1e-4;
    d += fmt("Dirac identity residual %.1e (tol 1e-4)", dev);
    return {ok, d};
}

// 9: Hijazi
Verdict hijazi()
{
    PencilOptions o;
    o.n = 3;
    o.h = 0.2;
    o.R_max = 3;
    const HijaziReport a = hijazi_check(o, 0.05, 1e-8);
    o.model = Model::perturbed;
    const HijaziReport b = hijazi_check(o, 0.05, 1e-8);
    const bool eq = std::abs(a.relative_gap) < 0.05;
    const bool strict = b.relative_gap > 0;
    // the equality case measures the discretization error of the gap itself
    return {eq && strict,
            fmt("hemisphere lambda1^2 %.4f vs 3/8 mu1 %.4f (gap %+.2f%%/5%%); perturbed gap %+.2f%% (must be > 0; "
                "equality-case error %.2f%%)",
                a.lambda1_sq, a.bound, 100 * a.relative_gap, 100 * b.relative_gap, 100 * std::abs(a.relative_gap))};
}

// 10: surface case
Verdict surface()
{
    const double bound = std::sqrt(2 * std::numbers::pi) * 1.10;
    std::string d;
    double last = std::numeric_limits<double>::infinity();
    bool monotone = true;
    SurfaceReport s;
    for (double eps : {0.2, 0.1, 0.05}) {
        s = surface_family(eps, 0.3);
        monotone = monotone && s.product < last;
        last = s.product;
        d += fmt("eps %.2f product %.4f; ", eps, s.product);
    }
    const bool vol = s.volume_rel_error < 0.05, prod = s.product <= bound;
    d += fmt("Vol error %.2f%%/5%%, product bound %.4f, monotone %s", 100 * s.volume_rel_error, bound,
             monotone ? "yes" : "no");
    return {vol && prod && monotone, d};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance criteria"};
    bool report_only = false;
    std::vector<int> only;
    app.add_flag("--report-only", report_only, "always exit 0 unless a check throws");
    app.add_option("--only", only, "criterion numbers to run");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"Killing identities", killing},        {"chiral bag exactness", bag_exactness},
        {"hemisphere spectrum", hemisphere},     {"spectral symmetry", symmetry},
        {"conformal covariance", covariance},   {"disk oracle", disk},
        {"eps-scan and moment identity", scan}, {"expansion orders and Dirac identity", expansion},
        {"Hijazi inequality", hijazi},          {"surface case", surface},
    };
    const std::set<int> wanted(only.begin(), only.end());
    int failed = 0, errors = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        const int id = int(i) + 1;
        if (!wanted.empty() && !wanted.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
            ++errors;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!v.pass) ++failed;
        std::printf("[%s] %2d %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), v.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    std::printf("%d failed\n", failed);
    if (errors > 0) return 2;
    return report_only ? 0 : (failed > 0 ? 1 : 0);
}
