#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "granbath/kinematics.hpp"

namespace granbath {

/// Mass, mean velocity and temperature of a Maxwellian M_{rho,u,theta}.
struct MaxwellianParams
{
    double rho = 1.0;
    Velocity u;  // empty means the zero vector of the query dimension
    double theta = 1.0;
};

/// rho (2 pi theta)^{-N/2} exp(-|v - u|^2 / (2 theta)).
double maxwellian_pdf(const MaxwellianParams& p, std::span<const double> v);

/// Density of a centred Maxwellian at speed r (same value as maxwellian_pdf
/// at any v with |v| = r).
double maxwellian_radial_pdf(double rho, double theta, int dimension, double r);

/// Mass of a centred Maxwellian inside the shell r0 <= |v| < r1; r1 may be
/// +infinity.
double maxwellian_shell_mass(double rho, double theta, int dimension, double r0, double r1);

/// E|V|^k for V ~ N(0, I_N): 2^{k/2} Gamma((N + k)/2) / Gamma(N/2).
double gaussian_moment(int dimension, double k);

/// E|V - V_*|^3 for independent standard Gaussians: 2^{3/2} gaussian_moment(N, 3).
double relative_speed_cubed(int dimension);

/// E|V|^2 |V - V_*|^3: sqrt(2) (2N + 3) gaussian_moment(N, 3).
double relative_speed_cubed_energy_weighted(int dimension);

// ---------------------------------------------------------------------------
// Quadrature routes, independent of the closed forms above.

/// Default radial quadrature: Gauss-Legendre on [0, 12 sqrt(theta)].
inline constexpr std::size_t radial_nodes = 256;
inline constexpr double radial_extent = 12.0;

/// |S^{N-1}| int_0^R r^{N-1} f(r) dr for a radial function f.
double radial_integral(int dimension, double theta, const std::function<double(double)>& f,
                       std::size_t nodes = radial_nodes);

/// int M_{1,0,1} |v|^k dv by radial quadrature.
double gaussian_moment_quadrature(int dimension, double k);

/**
 * Nested quadrature of int int F(|v|) G(|v_*|) h(|v|, |v_*|, |v - v_*|) dv dv_*
 * for radial F and G, in (|v|, |v_*|, angle between v and v_*). The inner
 * speed integral is split at |v_*| = |v| to keep the |u| kink on a panel edge.
 */
double pair_integral(int dimension, double theta, const std::function<double(double)>& f,
                     const std::function<double(double)>& g,
                     const std::function<double(double, double, double)>& h, std::size_t nodes = 64);

// ---------------------------------------------------------------------------
// Steady-state predictions.

/// Temperature balancing heat-bath input and dissipation in the elastic limit:
/// (1/2) N^{2/3} b1^{-2/3} gaussian_moment(N, 3)^{-2/3}.
double theta_bar1(double b1, int dimension);

/// The dimension-3 closed form (9 pi)^{1/3} / (2^10 b1^2)^{1/3}.
double theta_bar1_dim3(double b1);

/// Maxwellian-closure steady temperature at restitution alpha with the bath
/// strength tau = rho (1 - alpha): the root of
/// (1 + alpha) b1 rho^2 theta^{3/2} 2^{3/2} m3 = 2 N rho^2. Independent of rho.
double theta_pred(double alpha, double rho, double b1, int dimension);

/// D_E(M_{rho,0,theta}) = b1 rho^2 theta^{3/2} 2^{3/2} gaussian_moment(N, 3).
double dissipation_DE_maxwellian(double theta, double rho, double b1, int dimension);

/// Psi(theta) = k1 - k2 theta^{3/2}, k1 = 2 rho^2 N, k2 = 2^{3/2} rho^2 b1 m3.
double psi(double theta, double rho, int dimension, double b1);

/// Positive root of psi found by bisection; throws NumericFailure if the
/// bracket cannot be established.
double psi_root(double rho, int dimension, double b1);

/// The closed-form root (k1 / k2)^{2/3}.
double psi_root_closed_form(double rho, int dimension, double b1);

struct EnergyBounds
{
    double lower = 0.0;
    double upper = 0.0;
};

/// Steady-energy bounds: upper = rho (2N / b1)^{2/3},
/// lower = rho (alpha^2 N^2 / (sqrt(2) b2))^{2/3}.
EnergyBounds energy_bounds(double alpha, double rho, const KernelConstants& kc, int dimension);

/// First-order energy eigenvalue -3 rho (1 - alpha) / theta_bar1.
double mu_alpha_pred(double alpha, double rho, double theta_bar1);

/// The alternative constant -3 rho (1 - alpha), kept for arbitration against
/// simulation data.
double mu_alpha_alternative(double alpha, double rho);

/**
 * Limit eigenfunction phi_1(v) = c0 (|v|^2 - N theta) M_{rho,0,theta}(v) with
 * c0 > 0 normalising int |phi_1| <v>^2 dv = 1, <v>^2 = 1 + |v|^2.
 */
class Phi1
{
public:
    Phi1(double rho, double theta_bar1, int dimension);

    double c0() const noexcept { return c0_; }
    double rho() const noexcept { return rho_; }
    double theta() const noexcept { return theta_; }
    int dimension() const noexcept { return dimension_; }

    double operator()(std::span<const double> v) const;
    double radial(double r) const;

    /// int phi_1 dv by quadrature.
    double mass() const;
    /// int |phi_1| <v>^2 dv by quadrature.
    double weighted_norm() const;
    /// E(phi_1) = int phi_1 |v|^2 dv by quadrature.
    double energy() const;
    /// b1 int int F_1 (phi_1)_* |u|^3 by nested quadrature, F_1 = M_{rho,0,theta}.
    double dissipation_pairing(double b1) const;

    /// Closed forms 2 N c0 rho theta^2 and (3/2) N c0 rho^2 theta.
    double energy_closed_form() const;
    double dissipation_pairing_closed_form() const;

private:
    double rho_;
    double theta_;
    int dimension_;
    double c0_;
};

/// Bundle of closed-form predictions for one (rho, cross-section, N).
struct SteadyPrediction
{
    double rho = 1.0;
    int dimension = 3;
    KernelConstants kc;
    double theta_bar1 = 0.0;
    double c0 = 0.0;

    static SteadyPrediction make(double rho, const KernelConstants& kc, int dimension);

    double theta_pred(double alpha) const;
    double mu_alpha(double alpha) const;
    double mu_alpha_alternative(double alpha) const;
    /// rho N theta_pred(alpha): the Maxwellian-closure steady energy.
    double energy_pred(double alpha) const;
    EnergyBounds energy_bounds(double alpha) const;
};

/// Prediction table keyed by (alpha, rho, N, cross-section id).
nlohmann::json predictions_json(const std::vector<double>& alphas, double rho, int dimension,
                                const CrossSection& cs);

}  // namespace granbath
