#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "granbath/errors.hpp"
#include "granbath/kinematics.hpp"

using namespace granbath;

namespace {

double norm2(const Velocity& v)
{
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return s;
}

}  // namespace

TEST_SUITE("kinematics")
{
    TEST_CASE("post_collision hand example")
    {
        const Velocity v{1, 0, 0}, vs{-1, 0, 0}, sigma{0, 1, 0};
        const auto [vp, vsp] = post_collision(v, vs, sigma, 0.5);
        CHECK(vp[0] == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(vp[1] == doctest::Approx(0.75).epsilon(1e-15));
        CHECK(vp[2] == 0.0);
        CHECK(vsp[0] == doctest::Approx(-0.25).epsilon(1e-15));
        CHECK(vsp[1] == doctest::Approx(-0.75).epsilon(1e-15));
        CHECK(energy_loss(v, vs, sigma, 0.5) == doctest::Approx(-0.75).epsilon(1e-15));
        const double change = norm2(vp) + norm2(vsp) - norm2(v) - norm2(vs);
        CHECK(change == doctest::Approx(-0.75).epsilon(1e-14));
    }

    TEST_CASE("sigma along u leaves the pair unchanged")
    {
        const Velocity v{0.3, -1.2, 2.0}, vs{-0.7, 0.4, 1.0};
        Velocity u_hat(3);
        const double s = std::sqrt(1.0 + 1.6 * 1.6 + 1.0);
        for (int d = 0; d < 3; ++d) {
            u_hat[d] = (v[d] - vs[d]) / s;
        }
        for (double alpha : {0.0, 0.3, 0.9, 1.0}) {
            const auto [vp, vsp] = post_collision(v, vs, u_hat, alpha);
            for (int d = 0; d < 3; ++d) {
                CHECK(vp[d] == doctest::Approx(v[d]).epsilon(1e-14));
                CHECK(vsp[d] == doctest::Approx(vs[d]).epsilon(1e-14));
            }
            CHECK(std::abs(energy_loss(v, vs, u_hat, alpha)) < 1e-14);
        }
    }

    TEST_CASE("contract violations")
    {
        const Velocity v{1, 0, 0}, vs{0, 0, 0};
        CHECK_THROWS_AS(post_collision(v, vs, Velocity{0, 2, 0}, 0.5), ContractViolation);
        CHECK_THROWS_AS(post_collision(v, Velocity{0, 0}, Velocity{0, 1, 0}, 0.5), ContractViolation);
    }

    TEST_CASE("random collisions conserve momentum and dissipate as predicted")
    {
        RandomStream rng(11);
        Velocity v(3), vs(3), sigma(3);
        for (int k = 0; k < 20000; ++k) {
            for (int d = 0; d < 3; ++d) {
                v[d] = rng.normal();
                vs[d] = rng.normal();
            }
            uniform_direction(rng, sigma);
            const double alpha = rng.uniform();
            const auto [vp, vsp] = post_collision(v, vs, sigma, alpha);
            for (int d = 0; d < 3; ++d) {
                REQUIRE(std::abs(vp[d] + vsp[d] - v[d] - vs[d]) <= 1e-12 * (std::abs(v[d]) + std::abs(vs[d]) + 1.0));
            }
            const double e0 = norm2(v) + norm2(vs);
            const double change = norm2(vp) + norm2(vsp) - e0;
            REQUIRE(change <= 1e-12 * e0);
            REQUIRE(std::abs(change - energy_loss(v, vs, sigma, alpha)) <= 1e-12 * e0);
        }
    }

    TEST_CASE("kernel constants of the constant kernel")
    {
        const auto kc = kernel_constants(CrossSection::constant(1.0), 3);
        CHECK(kc.b0 == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-12));
        CHECK(kc.b1 == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-12));
        CHECK(kc.b2 == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-12));
        const auto k2 = kernel_constants(CrossSection::constant(2.5), 3);
        CHECK(k2.b1 == doctest::Approx(2.5 * std::numbers::pi / 2.0).epsilon(1e-12));
        // Circle in N = 2: b0 = 2 pi, b1 = (1/8) int (1 - cos) = pi / 4.
        const auto k_2d = kernel_constants(CrossSection::constant(1.0), 2);
        CHECK(k_2d.b0 == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-12));
        CHECK(k_2d.b1 == doctest::Approx(std::numbers::pi / 4.0).epsilon(1e-12));
    }

    TEST_CASE("uniform sigma has mean near zero and always accepts")
    {
        RandomStream rng(5);
        const auto cs = CrossSection::constant(1.0);
        CHECK(cs.is_uniform());
        const Velocity u_hat{0, 0, 1};
        Velocity sigma(3), mean(3, 0.0);
        const int n = 1000000;
        std::size_t proposals = 0;
        for (int k = 0; k < n; ++k) {
            proposals += sample_sigma_into(cs, u_hat, rng, sigma);
            for (int d = 0; d < 3; ++d) {
                mean[d] += sigma[d] / n;
            }
        }
        CHECK(proposals == static_cast<std::size_t>(n));
        CHECK(std::sqrt(norm2(mean)) <= 4.0 / std::sqrt(static_cast<double>(n)));
    }

    TEST_CASE("sigma law matches b(x) by Kolmogorov-Smirnov")
    {
        // b(x) = 1 + x / 2 in N = 3: the marginal of x = u_hat . sigma has density
        // (1 + x / 2) / 2 on [-1, 1].
        const auto cs = CrossSection::tabulated({-1.0, 1.0}, {0.5, 1.5});
        RandomStream rng(17);
        const Velocity u_hat{0.6, 0.0, 0.8};
        Velocity sigma(3);
        const int n = 1000000;
        std::vector<double> x(n);
        for (int k = 0; k < n; ++k) {
            sample_sigma_into(cs, u_hat, rng, sigma);
            x[k] = u_hat[0] * sigma[0] + u_hat[1] * sigma[1] + u_hat[2] * sigma[2];
        }
        std::sort(x.begin(), x.end());
        auto cdf = [](double t) { return 0.5 * ((t + 1.0) + 0.25 * (t * t - 1.0)); };
        double d = 0.0;
        for (int k = 0; k < n; ++k) {
            const double f = cdf(x[k]);
            d = std::max({d, std::abs(f - static_cast<double>(k) / n), std::abs(f - static_cast<double>(k + 1) / n)});
        }
        CHECK(d * std::sqrt(static_cast<double>(n)) < 1.628);
    }

    TEST_CASE("cross-section validation")
    {
        CHECK(validate_cross_section(CrossSection::constant(1.0), 101).passed());
        CHECK(validate_cross_section(CrossSection::hard_sphere(1.0, 3), 101).passed());

        const auto bad = CrossSection::tabulated({-1.0, -0.5, 0.0, 0.5, 1.0}, {1.0, 1.2, 1.1, 1.4, 1.6});
        const auto report = validate_cross_section(bad, 5);
        CHECK_FALSE(report.passed());
        bool flagged = false;
        for (const auto& v : report.violations) {
            flagged = flagged || (v.kind == "monotonicity" && v.source == "table" && v.index == 1);
        }
        CHECK(flagged);

        const auto hs4 = CrossSection::hard_sphere(1.0, 4);
        CHECK_FALSE(validate_cross_section(hs4, 101).passed());
    }
}
