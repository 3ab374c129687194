#include "granbath/analytics.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "granbath/errors.hpp"
#include "granbath/quadrature.hpp"

namespace granbath {

namespace {

constexpr double pi = std::numbers::pi;

double norm2_shifted(std::span<const double> v, const Velocity& u)
{
    double s = 0.0;
    for (std::size_t d = 0; d < v.size(); ++d) {
        const double x = v[d] - (u.empty() ? 0.0 : u[d]);
        s += x * x;
    }
    return s;
}

// |S^{N-1}| int_a^b r^{N-1} f(r) dr with one Gauss-Legendre panel.
template <class F>
double radial_panel(int dimension, double a, double b, F&& f, std::size_t nodes)
{
    const auto& rule = cached_gauss_legendre(nodes);
    const double area = unit_sphere_area(dimension);
    return area * integrate(rule, a, b, [&](double r) { return std::pow(r, dimension - 1) * f(r); });
}

}  // namespace

double maxwellian_pdf(const MaxwellianParams& p, std::span<const double> v)
{
    require(p.rho > 0.0 && p.theta > 0.0, "Maxwellian needs positive mass and temperature");
    require(p.u.empty() || p.u.size() == v.size(), "Maxwellian mean has the wrong dimension");
    const double n = static_cast<double>(v.size());
    return p.rho * std::pow(2.0 * pi * p.theta, -0.5 * n) * std::exp(-norm2_shifted(v, p.u) / (2.0 * p.theta));
}

double maxwellian_radial_pdf(double rho, double theta, int dimension, double r)
{
    return rho * std::pow(2.0 * pi * theta, -0.5 * dimension) * std::exp(-r * r / (2.0 * theta));
}

double maxwellian_shell_mass(double rho, double theta, int dimension, double r0, double r1)
{
    require(r0 >= 0.0 && r1 >= r0, "shell radii must satisfy 0 <= r0 <= r1");
    const double a = 0.5 * dimension;
    const double x0 = r0 * r0 / (2.0 * theta);
    if (std::isinf(r1)) {
        return rho * boost::math::gamma_q(a, x0);
    }
    const double x1 = r1 * r1 / (2.0 * theta);
    if (x0 > a) {
        return rho * (boost::math::gamma_q(a, x0) - boost::math::gamma_q(a, x1));
    }
    return rho * (boost::math::gamma_p(a, x1) - boost::math::gamma_p(a, x0));
}

double gaussian_moment(int dimension, double k)
{
    require(dimension >= 1 && std::isfinite(k), "gaussian_moment: invalid arguments");
    const double n = dimension;
    return std::exp(0.5 * k * std::log(2.0) + std::lgamma(0.5 * (n + k)) - std::lgamma(0.5 * n));
}

double relative_speed_cubed(int dimension)
{
    require(dimension >= 2, "dimension must be at least 2");
    return std::pow(2.0, 1.5) * gaussian_moment(dimension, 3.0);
}

double relative_speed_cubed_energy_weighted(int dimension)
{
    require(dimension >= 2, "dimension must be at least 2");
    return std::sqrt(2.0) * (2.0 * dimension + 3.0) * gaussian_moment(dimension, 3.0);
}

double radial_integral(int dimension, double theta, const std::function<double(double)>& f, std::size_t nodes)
{
    return radial_panel(dimension, 0.0, radial_extent * std::sqrt(theta), f, nodes);
}

double gaussian_moment_quadrature(int dimension, double k)
{
    return radial_integral(dimension, 1.0,
                           [&](double r) { return maxwellian_radial_pdf(1.0, 1.0, dimension, r) * std::pow(r, k); });
}

double pair_integral(int dimension, double theta, const std::function<double(double)>& f,
                     const std::function<double(double)>& g, const std::function<double(double, double, double)>& h,
                     std::size_t nodes)
{
    require(dimension >= 2, "dimension must be at least 2");
    const auto& rule = cached_gauss_legendre(nodes);
    const double extent = radial_extent * std::sqrt(theta);
    const double prefactor = unit_sphere_area(dimension) * unit_sphere_area(dimension - 1);

    auto angular = [&](double r, double s) {
        return integrate(rule, 0.0, pi, [&](double phi) {
            const double half = std::sin(0.5 * phi);
            const double u = std::sqrt((r - s) * (r - s) + 4.0 * r * s * half * half);
            return std::pow(std::sin(phi), dimension - 2) * h(r, s, u);
        });
    };
    auto inner = [&](double r) {
        auto integrand = [&](double s) { return std::pow(s, dimension - 1) * g(s) * angular(r, s); };
        return integrate(rule, 0.0, r, integrand) + integrate(rule, r, extent, integrand);
    };
    return prefactor * integrate(rule, 0.0, extent, [&](double r) { return std::pow(r, dimension - 1) * f(r) * inner(r); });
}

double theta_bar1(double b1, int dimension)
{
    require(b1 > 0.0, "b1 must be positive");
    const double n = dimension;
    return 0.5 * std::pow(n, 2.0 / 3.0) * std::pow(b1, -2.0 / 3.0) * std::pow(gaussian_moment(dimension, 3.0), -2.0 / 3.0);
}

double theta_bar1_dim3(double b1)
{
    require(b1 > 0.0, "b1 must be positive");
    return std::cbrt(9.0 * pi) / std::cbrt(1024.0 * b1 * b1);
}

double theta_pred(double alpha, double /*rho*/, double b1, int dimension)
{
    require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
    require(b1 > 0.0, "b1 must be positive");
    const double n = dimension;
    const double base = 2.0 * n / ((1.0 + alpha) * std::pow(2.0, 1.5) * b1 * gaussian_moment(dimension, 3.0));
    return std::pow(base, 2.0 / 3.0);
}

double dissipation_DE_maxwellian(double theta, double rho, double b1, int dimension)
{
    require(theta > 0.0, "theta must be positive");
    return b1 * rho * rho * std::pow(theta, 1.5) * relative_speed_cubed(dimension);
}

double psi(double theta, double rho, int dimension, double b1)
{
    require(theta > 0.0, "theta must be positive");
    const double k1 = 2.0 * rho * rho * dimension;
    const double k2 = std::pow(2.0, 1.5) * rho * rho * b1 * gaussian_moment(dimension, 3.0);
    return k1 - k2 * std::pow(theta, 1.5);
}

double psi_root(double rho, int dimension, double b1)
{
    double lo = 0.0;
    double hi = 1.0;
    int grow = 0;
    while (psi(hi, rho, dimension, b1) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++grow > 2000 || !std::isfinite(hi)) {
            throw NumericFailure("psi_root: no sign change found", hi);
        }
    }
    for (int iter = 0; iter < 300 && hi - lo > 1e-16 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (psi(mid, rho, dimension, b1) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double psi_root_closed_form(double rho, int dimension, double b1)
{
    const double k1 = 2.0 * rho * rho * dimension;
    const double k2 = std::pow(2.0, 1.5) * rho * rho * b1 * gaussian_moment(dimension, 3.0);
    return std::pow(k1 / k2, 2.0 / 3.0);
}

EnergyBounds energy_bounds(double alpha, double rho, const KernelConstants& kc, int dimension)
{
    require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
    require(rho > 0.0, "rho must be positive");
    const double n = dimension;
    EnergyBounds b;
    b.upper = rho * std::pow(2.0 * n / kc.b1, 2.0 / 3.0);
    b.lower = rho * std::pow(alpha * alpha * n * n / (std::sqrt(2.0) * kc.b2), 2.0 / 3.0);
    return b;
}

double mu_alpha_pred(double alpha, double rho, double theta_bar1)
{
    require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
    return -3.0 * rho * (1.0 - alpha) / theta_bar1;
}

double mu_alpha_alternative(double alpha, double rho) { return -3.0 * rho * (1.0 - alpha); }

// ---------------------------------------------------------------------------

Phi1::Phi1(double rho, double theta_bar1, int dimension) : rho_(rho), theta_(theta_bar1), dimension_(dimension), c0_(1.0)
{
    require(rho > 0.0 && theta_bar1 > 0.0 && dimension >= 2, "Phi1: invalid parameters");
    c0_ = 1.0 / weighted_norm();
}

double Phi1::radial(double r) const
{
    return c0_ * (r * r - dimension_ * theta_) * maxwellian_radial_pdf(rho_, theta_, dimension_, r);
}

double Phi1::operator()(std::span<const double> v) const
{
    double r2 = 0.0;
    for (double c : v) {
        r2 += c * c;
    }
    return radial(std::sqrt(r2));
}

namespace {

// Two panels split at the sign change |v|^2 = N theta.
template <class F>
double split_radial(int dimension, double theta, F&& f)
{
    const double knee = std::sqrt(dimension * theta);
    const double extent = radial_extent * std::sqrt(theta);
    return radial_panel(dimension, 0.0, knee, f, radial_nodes) + radial_panel(dimension, knee, extent, f, radial_nodes);
}

}  // namespace

double Phi1::mass() const
{
    return split_radial(dimension_, theta_, [&](double r) { return radial(r); });
}

double Phi1::weighted_norm() const
{
    return split_radial(dimension_, theta_, [&](double r) { return std::abs(radial(r)) * (1.0 + r * r); });
}

double Phi1::energy() const
{
    return split_radial(dimension_, theta_, [&](double r) { return radial(r) * r * r; });
}

double Phi1::dissipation_pairing(double b1) const
{
    const double n_theta = theta_;
    return b1 * pair_integral(
                    dimension_, n_theta, [&](double r) { return maxwellian_radial_pdf(rho_, theta_, dimension_, r); },
                    [&](double s) { return radial(s); }, [](double, double, double u) { return u * u * u; });
}

double Phi1::energy_closed_form() const { return 2.0 * dimension_ * c0_ * rho_ * theta_ * theta_; }

double Phi1::dissipation_pairing_closed_form() const { return 1.5 * dimension_ * c0_ * rho_ * rho_ * theta_; }

// ---------------------------------------------------------------------------

SteadyPrediction SteadyPrediction::make(double rho, const KernelConstants& kc, int dimension)
{
    SteadyPrediction p;
    p.rho = rho;
    p.dimension = dimension;
    p.kc = kc;
    p.theta_bar1 = granbath::theta_bar1(kc.b1, dimension);
    p.c0 = Phi1(rho, p.theta_bar1, dimension).c0();
    return p;
}

double SteadyPrediction::theta_pred(double alpha) const { return granbath::theta_pred(alpha, rho, kc.b1, dimension); }

double SteadyPrediction::mu_alpha(double alpha) const { return mu_alpha_pred(alpha, rho, theta_bar1); }

double SteadyPrediction::mu_alpha_alternative(double alpha) const { return granbath::mu_alpha_alternative(alpha, rho); }

double SteadyPrediction::energy_pred(double alpha) const { return rho * dimension * theta_pred(alpha); }

EnergyBounds SteadyPrediction::energy_bounds(double alpha) const
{
    return granbath::energy_bounds(alpha, rho, kc, dimension);
}

nlohmann::json predictions_json(const std::vector<double>& alphas, double rho, int dimension, const CrossSection& cs)
{
    const auto kc = kernel_constants(cs, dimension);
    const auto pred = SteadyPrediction::make(rho, kc, dimension);
    nlohmann::json rows = nlohmann::json::array();
    for (double alpha : alphas) {
        const auto bounds = pred.energy_bounds(alpha);
        rows.push_back({{"alpha", alpha},
                        {"rho", rho},
                        {"N", dimension},
                        {"cross_section", cs.id()},
                        {"b0", kc.b0},
                        {"b1", kc.b1},
                        {"b2", kc.b2},
                        {"theta_bar1", pred.theta_bar1},
                        {"theta_pred", pred.theta_pred(alpha)},
                        {"psi_root", psi_root_closed_form(rho, dimension, kc.b1)},
                        {"mu_alpha", pred.mu_alpha(alpha)},
                        {"mu_alpha_alternative", pred.mu_alpha_alternative(alpha)},
                        {"energy_pred", pred.energy_pred(alpha)},
                        {"energy_lower", bounds.lower},
                        {"energy_upper", bounds.upper},
                        {"c0", pred.c0}});
    }
    return rows;
}

}  // namespace granbath
