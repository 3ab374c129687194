#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "granbath/errors.hpp"

namespace granbath {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule
{
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const noexcept { return nodes.size(); }
};

/// n-point rule; nodes by Newton iteration on P_n, accurate to ~1e-15.
GaussLegendreRule gauss_legendre(std::size_t n);

/// Shared cached rule (thread-safe, built once per n).
const GaussLegendreRule& cached_gauss_legendre(std::size_t n);

template <class F>
double integrate(const GaussLegendreRule& rule, double a, double b, F&& f)
{
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
        sum += rule.weights[k] * f(mid + half * rule.nodes[k]);
    }
    return half * sum;
}

struct QuadratureResult
{
    double value = 0.0;
    double error = 0.0;  // estimated absolute error
    bool converged = false;
};

namespace detail {

template <class F>
void adaptive_step(F& f, double a, double b, double tol, int depth, const GaussLegendreRule& coarse,
                   const GaussLegendreRule& fine, QuadratureResult& acc)
{
    const double i_coarse = integrate(coarse, a, b, f);
    const double i_fine = integrate(fine, a, b, f);
    const double err = std::abs(i_fine - i_coarse);
    if (err <= tol || depth == 0) {
        acc.value += i_fine;
        acc.error += err;
        if (err > tol) {
            acc.converged = false;
        }
        return;
    }
    const double m = 0.5 * (a + b);
    adaptive_step(f, a, m, 0.5 * tol, depth - 1, coarse, fine, acc);
    adaptive_step(f, m, b, 0.5 * tol, depth - 1, coarse, fine, acc);
}

}  // namespace detail

/// Globally adaptive bisection driven by the difference between a 16- and a
/// 32-point Gauss-Legendre rule on each panel.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double abs_tol, int max_depth = 40)
{
    const auto& coarse = cached_gauss_legendre(16);
    const auto& fine = cached_gauss_legendre(32);
    QuadratureResult acc;
    acc.converged = true;
    detail::adaptive_step(f, a, b, abs_tol, max_depth, coarse, fine, acc);
    return acc;
}

/// As integrate_adaptive, but throws NumericFailure when the tolerance is
/// not met.
template <class F>
double integrate_or_throw(F&& f, double a, double b, double abs_tol, const char* what)
{
    const auto r = integrate_adaptive(std::forward<F>(f), a, b, abs_tol);
    if (!r.converged || !std::isfinite(r.value)) {
        throw NumericFailure(std::string("quadrature did not converge: ") + what, r.error);
    }
    return r.value;
}

/// Surface area of the unit sphere S^{n-1} in R^n.
double unit_sphere_area(int n);

}  // namespace granbath
