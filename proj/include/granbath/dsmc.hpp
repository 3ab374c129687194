#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "granbath/kinematics.hpp"
#include "granbath/random.hpp"

namespace granbath {

/**
 * Equal-weight particle approximation of a velocity distribution of mass
 * rho in R^N. Velocities are stored particle-major in one flat buffer.
 */
struct VelocityEnsemble
{
    int dimension = 3;
    double rho = 1.0;
    std::vector<double> velocities;

    std::size_t size() const noexcept { return velocities.size() / static_cast<std::size_t>(dimension); }
    double weight() const noexcept { return rho / static_cast<double>(size()); }

    std::span<double> particle(std::size_t i) noexcept
    {
        return {velocities.data() + i * static_cast<std::size_t>(dimension), static_cast<std::size_t>(dimension)};
    }
    std::span<const double> particle(std::size_t i) const noexcept
    {
        return {velocities.data() + i * static_cast<std::size_t>(dimension), static_cast<std::size_t>(dimension)};
    }

    /// weight * sum_i v_i
    std::vector<double> momentum() const;
    /// weight * sum_i |v_i|^2
    double energy() const;
};

/// Initial velocity law. Bimodal is a mixture of two centred isotropic
/// Gaussians; `fraction` of the particles come from the first one.
struct InitSpec
{
    enum class Kind { maxwellian, uniform_ball, bimodal };

    Kind kind = Kind::maxwellian;
    double theta0 = 1.0;
    double radius = 1.0;
    double theta_a = 0.05;
    double theta_b = 1.0;
    double fraction = 0.5;

    static InitSpec maxwellian(double theta0) { return {Kind::maxwellian, theta0}; }
    static InitSpec uniform_ball(double radius) { return {Kind::uniform_ball, 1.0, radius}; }
    static InitSpec bimodal(double theta_a, double theta_b, double fraction)
    {
        return {Kind::bimodal, 1.0, 1.0, theta_a, theta_b, fraction};
    }

    /// Temperature of the law before any energy rescaling.
    double nominal_temperature(int dimension) const;
    std::string describe() const;
};

/// Samples np velocities, shifts them to exactly zero mean and, when a target
/// energy is given, rescales to exactly that energy.
VelocityEnsemble init_ensemble(const InitSpec& spec, int dimension, double rho, std::optional<double> target_energy,
                               std::size_t np, std::uint64_t seed);

/// Heat-bath strength: explicit value or the rescaled choice tau = rho (1 - alpha).
struct TauMode
{
    bool rescaled = true;
    double value = 0.0;

    double tau(double alpha, double rho) const { return rescaled ? rho * (1.0 - alpha) : value; }
};

/// Per-pair collision probability bound dt * b0 * rho * umax must not exceed this.
inline constexpr double max_collision_probability = 0.2;

/// Initial relative-speed majorant 8 sqrt(2 theta0 N).
double default_umax(double theta0, int dimension);

struct SimConfig
{
    int dimension = 3;
    double rho = 1.0;
    double alpha = 1.0;
    TauMode tau_mode;
    double dt = 1e-3;
    std::size_t np = 1000;
    std::uint64_t seed = 1;
    bool momentum_projection = true;
    double umax_initial = 10.0;
    std::size_t snapshot_interval = 100;
    CrossSection cross_section = CrossSection::constant(1.0);
    KernelConstants kernel{};  // must be kernel_constants(cross_section, dimension)

    double tau() const { return tau_mode.tau(alpha, rho); }
    /// Throws ContractViolation naming the offending field.
    void validate() const;
};

struct CollisionCounters
{
    std::uint64_t candidates = 0;
    std::uint64_t accepted = 0;
    std::uint64_t umax_violations = 0;
};

struct SimState
{
    double time = 0.0;
    std::uint64_t steps = 0;
    VelocityEnsemble ensemble;
    double umax = 0.0;
    double max_accepted_speed = 0.0;
    double candidate_carry = 0.0;  // fractional NTC candidates carried to the next step
    CollisionCounters counters;
    RandomStream collision_rng;
    RandomStream diffusion_rng;
    std::vector<double> scratch;  // 2N doubles: u_hat, sigma

    /// Fresh state; streams are split from `stream_seed`.
    static SimState start(VelocityEnsemble ensemble, const SimConfig& config, std::uint64_t stream_seed);
};

/// Thrown when a velocity becomes non-finite. Carries the offending state.
class NumericFault : public std::runtime_error
{
public:
    NumericFault(const std::string& what, double time, std::uint64_t steps, VelocityEnsemble snapshot)
        : std::runtime_error(what), time_(time), steps_(steps), snapshot_(std::move(snapshot))
    {
    }

    double time() const noexcept { return time_; }
    std::uint64_t steps() const noexcept { return steps_; }
    const VelocityEnsemble& snapshot() const noexcept { return snapshot_; }

private:
    double time_;
    std::uint64_t steps_;
    VelocityEnsemble snapshot_;
};

/// NTC acceptance for a candidate with relative speed `speed` and uniform
/// draw `u01`. A speed above the majorant is accepted, the majorant raised to
/// 1.05 * speed and the violation counted.
bool ntc_accept(SimState& state, double speed, double u01);

/// One candidate with explicit randomness: pair (i, j), acceptance draw and
/// scattering direction. Returns whether the pair collided.
bool apply_candidate(SimState& state, const SimConfig& config, std::size_t i, std::size_t j, double u01,
                     std::span<const double> sigma);

/// Bird no-time-counter collisions over one time step.
void collision_substep(SimState& state, const SimConfig& config);

/// Gaussian velocity kicks of per-component variance 2 tau dt. With
/// projection the kicks are recentred so total momentum is unchanged.
void diffusion_substep(SimState& state, double tau, double dt, bool projection);

/// Collisions, then heat bath, then time advance; the majorant decays by
/// 0.1% every 1000 steps but never below the largest accepted speed.
void step(SimState& state, const SimConfig& config);

using Recorder = std::function<void(const SimState&)>;

/// Number of steps covering [0, t_end].
std::uint64_t steps_for(double t_end, double dt);

/// Iterates step until t_end, calling `recorder` on the initial state, every
/// snapshot_interval steps and on the final state.
void run(SimState& state, const SimConfig& config, double t_end, const Recorder& recorder);

}  // namespace granbath
