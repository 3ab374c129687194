#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "granbath/random.hpp"

namespace granbath {

/// A point in velocity space R^N.
using Velocity = std::vector<double>;

/// Tolerance on |sigma| - 1 accepted by the collision rules.
inline constexpr double unit_tolerance = 1e-12;

/**
 * Angular cross-section b(x), x = cos of the deflection angle in [-1, 1].
 *
 * Three families are supported: a constant b'_0, the hard-sphere power law
 * b'_0 (1 - x)^{-(N-3)/2}, and a table interpolated piecewise-linearly. The
 * bounds b_m <= b <= b_M are computed at construction and drive rejection
 * sampling; they may be 0 or infinite for a power law outside N = 3, which
 * validation reports and sampling refuses.
 */
class CrossSection
{
public:
    struct Constant
    {
        double scale;
    };
    struct PowerLaw
    {
        double scale;
        int dimension;
    };
    struct Tabulated
    {
        std::vector<double> x;
        std::vector<double> values;
    };

    static CrossSection constant(double scale = 1.0);
    static CrossSection hard_sphere(double scale, int dimension);
    static CrossSection tabulated(std::vector<double> x, std::vector<double> values);

    /// Reads "x value" lines, x ascending over exactly [-1, 1]. Blank lines and
    /// lines starting with '#' are skipped.
    static CrossSection load_table(const std::filesystem::path& path);

    double operator()(double x) const;

    double lower_bound() const noexcept { return b_min_; }
    double upper_bound() const noexcept { return b_max_; }

    /// True when b_min == b_max, i.e. rejection always accepts.
    bool is_uniform() const noexcept { return b_min_ == b_max_; }

    /// Short identifier used in prediction tables ("const:1", "hs3:1", ...).
    std::string id() const;

    const std::variant<Constant, PowerLaw, Tabulated>& kind() const noexcept { return kind_; }

private:
    explicit CrossSection(std::variant<Constant, PowerLaw, Tabulated> kind);

    std::variant<Constant, PowerLaw, Tabulated> kind_;
    double b_min_ = 0.0;
    double b_max_ = 0.0;
};

/// Sphere integrals of the cross-section entering the loss rate (b0), the
/// energy dissipation (b1) and the entropy bound (b2).
struct KernelConstants
{
    double b0 = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;
};

/// Absolute tolerance of the kernel-constant quadrature.
inline constexpr double kernel_quadrature_tolerance = 1e-10;

/// Computes b0 = int b dsigma, b1 = (1/8) int (1 - x) b dsigma and
/// b2 = int |b| dsigma over S^{N-1} by adaptive quadrature in the polar
/// angle. Throws NumericFailure if the tolerance is not reached.
KernelConstants kernel_constants(const CrossSection& cs, int dimension);

/// Post-collisional pair for restitution coefficient alpha.
/// Throws ContractViolation on dimension mismatch or |sigma| != 1.
std::pair<Velocity, Velocity> post_collision(std::span<const double> v, std::span<const double> v_star,
                                             std::span<const double> sigma, double alpha);

/// In-place variant used by the particle engine; no contract checks.
/// `speed` is |v - v_star|, already known to the caller.
inline void collide_in_place(double* v, double* v_star, const double* sigma, double alpha, double speed,
                             int dimension) noexcept
{
    const double a = 0.5 * (1.0 - alpha);
    const double c = 0.5 * (1.0 + alpha) * speed;
    for (int d = 0; d < dimension; ++d) {
        const double w = v[d] + v_star[d];
        const double u = v[d] - v_star[d];
        const double u_new = a * u + c * sigma[d];
        v[d] = 0.5 * (w + u_new);
        v_star[d] = 0.5 * (w - u_new);
    }
}

/// Closed-form kinetic-energy change -(1 - alpha^2)/4 (1 - u_hat.sigma)|u|^2.
/// Returns 0 for coincident velocities (u = 0).
double energy_loss(std::span<const double> v, std::span<const double> v_star, std::span<const double> sigma,
                   double alpha);

/// Draws a unit vector sigma with density proportional to b(u_hat . sigma)
/// on S^{N-1}: uniform proposals accepted with probability b / b_M. Writes
/// into `out` and returns the number of proposals used.
std::size_t sample_sigma_into(const CrossSection& cs, std::span<const double> u_hat, RandomStream& rng,
                              std::span<double> out);

Velocity sample_sigma(const CrossSection& cs, std::span<const double> u_hat, RandomStream& rng);

/// Uniform direction on S^{N-1}.
void uniform_direction(RandomStream& rng, std::span<double> out);

struct CrossSectionViolation
{
    std::string kind;    // "positivity", "upper_bound", "monotonicity", "convexity"
    std::string source;  // "grid" or "table"
    std::size_t index = 0;
    double x = 0.0;
    double value = 0.0;
};

struct CrossSectionReport
{
    std::string id;
    std::size_t grid_size = 0;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
    std::vector<CrossSectionViolation> violations;

    bool passed() const noexcept { return violations.empty(); }
    nlohmann::json to_json() const;
};

/// Checks 0 < b_m <= b <= b_M < inf, monotonicity and discrete convexity of
/// b on a uniform grid over [-1, 1]; tables are also checked at their nodes.
CrossSectionReport validate_cross_section(const CrossSection& cs, std::size_t grid_size);

}  // namespace granbath
