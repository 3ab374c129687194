#include <doctest.h>

#include <cmath>
#include <numbers>

#include "granbath/analytics.hpp"
#include "granbath/quadrature.hpp"

using namespace granbath;

namespace {

constexpr double pi = std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_SUITE("analytics")
{
    TEST_CASE("maxwellian density")
    {
        const MaxwellianParams m{1.0, {}, 1.0};
        const double zero[3] = {0, 0, 0};
        CHECK(rel(maxwellian_pdf(m, zero), std::pow(2.0 * pi, -1.5)) < 1e-15);
        CHECK(rel(maxwellian_pdf(m, zero), 0.06349363593424097) < 1e-14);

        const MaxwellianParams shifted{2.0, {0.5, -1.0, 0.0}, 0.7};
        double prev = maxwellian_pdf(shifted, std::vector<double>{0.5, -1.0, 0.0});
        for (double r = 0.25; r < 12.0; r += 0.25) {
            const double p = maxwellian_pdf(shifted, std::vector<double>{0.5 + r, -1.0, 0.0});
            CHECK(p < prev);
            prev = p;
        }
        const double mass = radial_integral(3, 0.7, [](double r) { return maxwellian_radial_pdf(2.0, 0.7, 3, r); });
        CHECK(rel(mass, 2.0) < 1e-10);
        CHECK(rel(maxwellian_shell_mass(2.0, 0.7, 3, 0.0, INFINITY), 2.0) < 1e-14);
    }

    TEST_CASE("gaussian moments")
    {
        CHECK(rel(gaussian_moment(3, 2.0), 3.0) < 1e-14);
        CHECK(rel(gaussian_moment(3, 4.0), 15.0) < 1e-14);
        CHECK(rel(gaussian_moment(3, 3.0), 8.0 * std::sqrt(2.0) / std::sqrt(pi)) < 1e-14);
        CHECK(rel(gaussian_moment_quadrature(3, 3.0), 6.383076486422924) < 1e-10);
        for (int n : {2, 3, 4}) {
            CHECK(rel(relative_speed_cubed(n) / gaussian_moment(n, 3.0), std::pow(2.0, 1.5)) < 1e-14);
        }
        CHECK(rel(relative_speed_cubed(3), 32.0 / std::sqrt(pi)) < 1e-14);
        CHECK(rel(relative_speed_cubed_energy_weighted(3), std::sqrt(2.0) * 9.0 * gaussian_moment(3, 3.0)) < 1e-14);
    }

    TEST_CASE("theta_bar1 closed forms")
    {
        CHECK(rel(theta_bar1(1.0, 3), 0.30224849137808807) < 1e-12);
        CHECK(rel(theta_bar1(1.0, 3), theta_bar1_dim3(1.0)) < 1e-12);
        CHECK(rel(theta_bar1(pi / 2.0, 3), 0.2236750572349124) < 1e-12);
        const double lambda = 3.7;
        CHECK(rel(theta_bar1(lambda * 1.3, 3), std::pow(lambda, -2.0 / 3.0) * theta_bar1(1.3, 3)) < 1e-12);
    }

    TEST_CASE("theta_pred")
    {
        const double b1 = pi / 2.0;
        CHECK(rel(theta_pred(1.0, 1.0, b1, 3), theta_bar1(b1, 3)) < 1e-14);
        CHECK(rel(theta_pred(0.9, 1.0, b1, 3) / theta_pred(1.0, 1.0, b1, 3), 1.0347869184121667) < 1e-12);
        CHECK(theta_pred(0.9, 1.0, b1, 3) == theta_pred(0.9, 5.0, b1, 3));
        double prev = theta_pred(0.05, 1.0, b1, 3);
        for (double a = 0.1; a <= 1.0; a += 0.05) {
            const double t = theta_pred(a, 1.0, b1, 3);
            CHECK(t < prev);
            prev = t;
        }
    }

    TEST_CASE("psi and its root")
    {
        for (double b1 : {1.0, pi / 2.0}) {
            const double rho = 1.3;
            const double root = psi_root(rho, 3, b1);
            const double k1 = 2.0 * rho * rho * 3.0;
            CHECK(std::abs(psi(root, rho, 3, b1)) <= 1e-10 * k1);
            CHECK(rel(root, psi_root_closed_form(rho, 3, b1)) < 1e-10);
            CHECK(rel(root, std::cbrt(4.0) * theta_bar1(b1, 3)) < 1e-10);
            for (double t = 0.1; t < 3.0; t += 0.1) {
                CHECK(psi(t - 0.05, rho, 3, b1) - 2.0 * psi(t, rho, 3, b1) + psi(t + 0.05, rho, 3, b1) < 0.0);
            }
        }
    }

    TEST_CASE("energy bounds")
    {
        KernelConstants kc{4.0 * pi, 1.0, 4.0 * pi};
        const auto b = energy_bounds(1.0, 1.0, kc, 3);
        CHECK(rel(b.upper, 3.3019272488946263) < 1e-12);
        CHECK(rel(b.lower, 0.6353481432280645) < 1e-12);
        CHECK(rel(energy_bounds(0.5, 1.0, kc, 3).lower / b.lower, std::pow(0.5, 4.0 / 3.0)) < 1e-12);
        CHECK(energy_bounds(0.6, 1.0, kc, 3).lower < energy_bounds(0.7, 1.0, kc, 3).lower);
    }

    TEST_CASE("energy eigenvalue")
    {
        const double tb = theta_bar1(1.0, 3);
        CHECK(mu_alpha_pred(1.0, 1.0, tb) == 0.0);
        CHECK(rel(mu_alpha_pred(0.98, 1.0, tb) / mu_alpha_pred(0.96, 1.0, tb), 0.5) < 1e-12);
        CHECK(rel(mu_alpha_pred(0.95, 1.0, tb), -0.49628039271952007) < 1e-12);
        CHECK(rel(mu_alpha_alternative(0.95, 1.0), -0.15) < 1e-12);
    }

    TEST_CASE("phi_1 functionals")
    {
        const double b1 = pi / 2.0;
        const double rho = 1.0;
        const Phi1 phi(rho, theta_bar1(b1, 3), 3);
        CHECK(phi.c0() > 0.0);
        CHECK(rel(phi.c0(), 1.2321426225928030) < 1e-8);
        CHECK(std::abs(phi.weighted_norm() - 1.0) < 1e-8);
        CHECK(std::abs(phi.mass()) < 1e-10);
        CHECK(rel(phi.energy(), phi.energy_closed_form()) < 1e-8);
        CHECK(rel(phi.dissipation_pairing(b1), phi.dissipation_pairing_closed_form()) < 1e-6);
    }

    TEST_CASE("dissipation of a maxwellian")
    {
        const double b1 = pi / 2.0;
        const double tb = theta_bar1(b1, 3);
        CHECK(rel(dissipation_DE_maxwellian(tb, 1.0, b1, 3), 3.0) < 1e-12);
        CHECK(rel(dissipation_DE_maxwellian(tb, 2.0, b1, 3), 12.0) < 1e-12);
        CHECK(rel(dissipation_DE_maxwellian(4.0 * 0.3, 1.0, b1, 3) / dissipation_DE_maxwellian(0.3, 1.0, b1, 3), 8.0) <
              1e-12);
    }

    TEST_CASE("gauss-legendre rule")
    {
        const auto& rule = cached_gauss_legendre(16);
        CHECK(rel(integrate(rule, 0.0, 1.0, [](double x) { return std::pow(x, 20); }), 1.0 / 21.0) < 1e-14);
        CHECK(rel(unit_sphere_area(3), 4.0 * pi) < 1e-15);
        CHECK(rel(unit_sphere_area(2), 2.0 * pi) < 1e-15);
    }
}
