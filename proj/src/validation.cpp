#include "granbath/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "granbath/analytics.hpp"
#include "granbath/format.hpp"
#include "granbath/random.hpp"

namespace granbath {

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

CheckResult make(std::string name, double measured, double tolerance, std::string detail = {})
{
    CheckResult c;
    c.name = std::move(name);
    c.measured = measured;
    c.tolerance = tolerance;
    c.passed = measured <= tolerance;
    c.detail = std::move(detail);
    return c;
}

double dot(const Velocity& a, const Velocity& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

}  // namespace

nlohmann::json CheckResult::to_json() const
{
    return {{"name", name}, {"passed", passed}, {"measured", measured}, {"tolerance", tolerance}, {"detail", detail}};
}

std::vector<CheckResult> check_collision_kinematics(std::size_t samples, int dimension, std::uint64_t seed)
{
    RandomStream rng(seed);
    const auto n = static_cast<std::size_t>(dimension);
    Velocity v(n), vs(n), sigma(n);
    double momentum = 0.0, energy = 0.0, elastic = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double scale = std::exp(4.0 * rng.uniform() - 2.0);
        for (std::size_t d = 0; d < n; ++d) {
            v[d] = scale * rng.normal();
            vs[d] = scale * rng.normal();
        }
        uniform_direction(rng, sigma);
        const bool is_elastic = k % 4 == 0;
        const double alpha = is_elastic ? 1.0 : rng.uniform();
        const auto [vp, vsp] = post_collision(v, vs, sigma, alpha);

        double p_err = 0.0, p_scale = 0.0, u2 = 0.0, u_sigma = 0.0;
        for (std::size_t d = 0; d < n; ++d) {
            p_err = std::max(p_err, std::abs(vp[d] + vsp[d] - v[d] - vs[d]));
            p_scale = std::max(p_scale, std::abs(v[d]) + std::abs(vs[d]));
            const double u = v[d] - vs[d];
            u2 += u * u;
            u_sigma += u * sigma[d];
        }
        momentum = std::max(momentum, p_err / p_scale);

        const double e_before = dot(v, v) + dot(vs, vs);
        const double change = dot(vp, vp) + dot(vsp, vsp) - e_before;
        const double cos_angle = u2 > 0.0 ? u_sigma / std::sqrt(u2) : 1.0;
        const double expected = -0.25 * (1.0 - alpha * alpha) * (1.0 - cos_angle) * u2;
        energy = std::max(energy, std::abs(change - expected) / e_before);
        if (is_elastic) {
            elastic = std::max(elastic, std::abs(change) / e_before);
        }
    }
    const std::string size = std::to_string(samples) + " collisions";
    return {make("momentum conservation", momentum, 1e-12, size),
            make("energy change formula", energy, 1e-12, size),
            make("elastic energy conservation", elastic, 1e-12, size)};
}

std::vector<CheckResult> check_gaussian_identities(int dimension, std::size_t pairs, std::uint64_t seed)
{
    const double n = dimension;
    const double mv2 = n;
    const double mv4 = n * (n + 2.0);
    const double mmu3 = relative_speed_cubed(dimension);
    const double mmv2u3 = relative_speed_cubed_energy_weighted(dimension);

    auto density = [dimension](double r) { return maxwellian_radial_pdf(1.0, 1.0, dimension, r); };
    auto weighted = [dimension](double r) { return r * r * maxwellian_radial_pdf(1.0, 1.0, dimension, r); };
    const double q_mv2 = gaussian_moment_quadrature(dimension, 2.0);
    const double q_mv4 = gaussian_moment_quadrature(dimension, 4.0);
    const double q_mmu3 = pair_integral(dimension, 1.0, density, density, [](double, double, double u) { return u * u * u; });
    const double q_mmv2u3 = pair_integral(dimension, 1.0, weighted, density, [](double, double, double u) { return u * u * u; });

    std::vector<CheckResult> out;
    out.push_back(make("quadrature M|v|^2", rel(q_mv2, mv2), 1e-8, "closed form " + format_real(mv2)));
    out.push_back(make("quadrature M|v|^4", rel(q_mv4, mv4), 1e-8, "closed form " + format_real(mv4)));
    out.push_back(make("quadrature MM|u|^3", rel(q_mmu3, mmu3), 1e-8, "closed form " + format_real(mmu3)));
    out.push_back(make("quadrature MM|v|^2|u|^3", rel(q_mmv2u3, mmv2u3), 1e-8, "closed form " + format_real(mmv2u3)));

    RandomStream rng(seed);
    const auto d = static_cast<std::size_t>(dimension);
    double s[4] = {}, s2[4] = {};
    for (std::size_t k = 0; k < pairs; ++k) {
        double v2 = 0.0, u2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double a = rng.normal();
            const double b = rng.normal();
            v2 += a * a;
            u2 += (a - b) * (a - b);
        }
        const double u3 = u2 * std::sqrt(u2);
        const double x[4] = {v2, v2 * v2, u3, v2 * u3};
        for (int j = 0; j < 4; ++j) {
            s[j] += x[j];
            s2[j] += x[j] * x[j];
        }
    }
    const double m = static_cast<double>(pairs);
    const double exact[4] = {mv2, mv4, mmu3, mmv2u3};
    const char* names[4] = {"Monte Carlo M|v|^2", "Monte Carlo M|v|^4", "Monte Carlo MM|u|^3",
                            "Monte Carlo MM|v|^2|u|^3"};
    for (int j = 0; j < 4; ++j) {
        const double mean = s[j] / m;
        const double se = std::sqrt(std::max(0.0, s2[j] / m - mean * mean) / (m - 1.0));
        out.push_back(make(names[j], std::abs(mean - exact[j]) / se, 3.0,
                           "mean " + format_real(mean) + " over " + std::to_string(pairs) + " pairs; z-score"));
    }
    return out;
}

std::vector<CheckResult> check_steady_closed_forms(double rho, double b1, int dimension)
{
    std::vector<CheckResult> out;
    const double tb = theta_bar1(b1, dimension);
    if (dimension == 3) {
        out.push_back(make("theta_bar1 general vs dimension-3 form", rel(tb, theta_bar1_dim3(b1)), 1e-12,
                           "theta_bar1 = " + format_real(tb)));
    }
    const double de = dissipation_DE_maxwellian(tb, rho, b1, dimension);
    out.push_back(make("D_E(M_theta_bar1) = N rho^2", rel(de, dimension * rho * rho), 1e-12,
                       "D_E = " + format_real(de)));
    const double root = psi_root(rho, dimension, b1);
    out.push_back(make("Psi root bisection vs closed form", rel(root, psi_root_closed_form(rho, dimension, b1)), 1e-10,
                       "root = " + format_real(root) + " = 2^(2/3) theta_bar1"));
    out.push_back(make("Psi root = 2^(2/3) theta_bar1", rel(root, std::cbrt(4.0) * tb), 1e-10));

    const Phi1 phi(rho, tb, dimension);
    out.push_back(make("phi_1 weighted norm = 1", std::abs(phi.weighted_norm() - 1.0), 1e-6,
                       "c0 = " + format_real(phi.c0())));
    out.push_back(make("phi_1 mass = 0", std::abs(phi.mass()), 1e-6));
    out.push_back(make("E(phi_1) = 2 N c0 rho theta^2", rel(phi.energy(), phi.energy_closed_form()), 1e-6,
                       "E = " + format_real(phi.energy())));
    out.push_back(make("b1 <<F_1 phi_1 |u|^3>> = (3/2) N c0 rho^2 theta",
                       rel(phi.dissipation_pairing(b1), phi.dissipation_pairing_closed_form()), 1e-6,
                       "pairing = " + format_real(phi.dissipation_pairing(b1))));
    return out;
}

std::vector<CheckResult> check_cross_section(const CrossSection& cs, int dimension)
{
    std::vector<CheckResult> out;
    const auto report = validate_cross_section(cs, 201);
    out.push_back(make("cross-section " + report.id + " positivity, bounds, monotonicity, convexity",
                       static_cast<double>(report.violations.size()), 0.0,
                       "b in [" + format_real(report.lower_bound) + ", " + format_real(report.upper_bound) + "]"));
    const auto kc = kernel_constants(cs, dimension);
    const bool finite = std::isfinite(kc.b0) && std::isfinite(kc.b1) && std::isfinite(kc.b2) && kc.b0 > 0.0 &&
                        kc.b1 > 0.0 && kc.b2 >= kc.b0 * (1.0 - 1e-9);
    CheckResult k = make("kernel constants finite and positive", finite ? 0.0 : 1.0, 0.0,
                         "b0 = " + format_real(kc.b0) + ", b1 = " + format_real(kc.b1) + ", b2 = " + format_real(kc.b2));
    out.push_back(k);
    if (std::holds_alternative<CrossSection::Constant>(cs.kind()) && dimension == 3) {
        const double s = cs(0.0);
        out.push_back(make("constant kernel b0 = 4 pi b", rel(kc.b0, 4.0 * std::numbers::pi * s), 1e-10));
        out.push_back(make("constant kernel b1 = (pi / 2) b", rel(kc.b1, 0.5 * std::numbers::pi * s), 1e-10));
    }
    return out;
}

std::vector<CheckResult> invariant_suite(const CrossSection& cs, int dimension, double rho, std::uint64_t seed)
{
    std::vector<CheckResult> all;
    auto append = [&](std::vector<CheckResult> part) {
        for (auto& c : part) {
            all.push_back(std::move(c));
        }
    };
    append(check_cross_section(cs, dimension));
    append(check_collision_kinematics(100000, dimension, derive_seed(seed, 1)));
    append(check_gaussian_identities(dimension, 200000, derive_seed(seed, 2)));
    const auto kc = kernel_constants(cs, dimension);
    if (std::isfinite(kc.b1) && kc.b1 > 0.0) {
        append(check_steady_closed_forms(rho, kc.b1, dimension));
    }
    return all;
}

}  // namespace granbath
