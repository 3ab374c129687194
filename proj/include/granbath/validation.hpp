#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "granbath/kinematics.hpp"

namespace granbath {

struct CheckResult
{
    std::string name;
    bool passed = false;
    double measured = 0.0;   // worst error or test statistic
    double tolerance = 0.0;
    std::string detail;

    nlohmann::json to_json() const;
};

/**
 * Random collisions in dimension N with v, v_* Gaussian of random scale,
 * uniform sigma and alpha in [0, 1]: worst relative momentum defect, worst
 * relative mismatch of the energy change against
 * -(1 - alpha^2)/4 (1 - u_hat.sigma)|u|^2, and worst relative energy change at
 * alpha = 1. All three are held to 1e-12.
 */
std::vector<CheckResult> check_collision_kinematics(std::size_t samples, int dimension, std::uint64_t seed);

/**
 * Gaussian integrals int M|v|^2, int M|v|^4, int int M M_* |u|^3 and
 * int int M M_* |v|^2 |u|^3 (M the standard Gaussian): quadrature against
 * closed form to 1e-8 relative, and a Monte Carlo mean over `pairs` Gaussian
 * pairs within 3 standard errors.
 */
std::vector<CheckResult> check_gaussian_identities(int dimension, std::size_t pairs, std::uint64_t seed);

/// Closed forms of the elastic-limit state: the two theta_bar1 expressions,
/// D_E(M_{theta_bar1}) = N rho^2, the Psi root, and the phi_1 functionals.
std::vector<CheckResult> check_steady_closed_forms(double rho, double b1, int dimension);

/// Kernel constants and the cross-section report.
std::vector<CheckResult> check_cross_section(const CrossSection& cs, int dimension);

/// Everything above at moderate sizes.
std::vector<CheckResult> invariant_suite(const CrossSection& cs, int dimension, double rho, std::uint64_t seed);

}  // namespace granbath
