#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace chibag {

// omega_n: area of the unit n-sphere in R^{n+1}
inline double sphere_area(int n)
{
    if (n < 0) throw std::invalid_argument("sphere_area: n must be >= 0");
    return 2.0 * std::pow(std::numbers::pi, 0.5 * (n + 1)) / boost::math::tgamma(0.5 * (n + 1));
}

// (n/2) (omega_n / 2)^{1/n}
inline double sphere_constant(int n)
{
    if (n < 2) throw std::invalid_argument("sphere_constant: n must be >= 2");
    return 0.5 * n * std::pow(0.5 * sphere_area(n), 1.0 / n);
}

struct MomentReport {
    double I = 0;        // int_0^inf r^{n-1} f^n dr, f = 2/(1+r^2)
    double lhs = 0;      // omega_{n-1} I
    double omega_n = 0;
    double residual = 0;
    double quad_error = 0;
};

inline MomentReport moment_integral(int n)
{
    if (n < 2) throw std::invalid_argument("moment_integral: n must be >= 2");
    // r = tan(theta) turns the integrand into 2^n (sin theta cos theta)^{n-1} on [0, pi/2]
    auto integrand = [n](double th) { return std::pow(2.0, n) * std::pow(std::sin(th) * std::cos(th), n - 1); };
    MomentReport m;
    m.I = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 0.5 * std::numbers::pi, 15,
                                                                          1e-14, &m.quad_error);
    m.lhs = sphere_area(n - 1) * m.I;
    m.omega_n = sphere_area(n);
    m.residual = std::abs(m.lhs - m.omega_n);
    return m;
}

} // namespace chibag
