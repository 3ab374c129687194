#include "granbath/dsmc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "granbath/errors.hpp"
#include "granbath/format.hpp"

namespace granbath {

std::vector<double> VelocityEnsemble::momentum() const
{
    std::vector<double> p(static_cast<std::size_t>(dimension), 0.0);
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        for (int d = 0; d < dimension; ++d) {
            p[static_cast<std::size_t>(d)] += velocities[i * static_cast<std::size_t>(dimension) + static_cast<std::size_t>(d)];
        }
    }
    const double w = weight();
    for (double& c : p) {
        c *= w;
    }
    return p;
}

double VelocityEnsemble::energy() const
{
    double s = 0.0;
    for (double c : velocities) {
        s += c * c;
    }
    return weight() * s;
}

double InitSpec::nominal_temperature(int dimension) const
{
    switch (kind) {
    case Kind::maxwellian:
        return theta0;
    case Kind::uniform_ball:
        // E|V|^2 = N R^2 / (N + 2) for the uniform ball.
        return radius * radius / (dimension + 2.0);
    case Kind::bimodal:
        return fraction * theta_a + (1.0 - fraction) * theta_b;
    }
    return theta0;
}

std::string InitSpec::describe() const
{
    switch (kind) {
    case Kind::maxwellian:
        return "maxwellian(theta0=" + format_real(theta0) + ")";
    case Kind::uniform_ball:
        return "uniform_ball(R=" + format_real(radius) + ")";
    case Kind::bimodal:
        return "bimodal(theta_a=" + format_real(theta_a) + ",theta_b=" + format_real(theta_b) +
               ",fraction=" + format_real(fraction) + ")";
    }
    return "unknown";
}

VelocityEnsemble init_ensemble(const InitSpec& spec, int dimension, double rho, std::optional<double> target_energy,
                               std::size_t np, std::uint64_t seed)
{
    require(np >= 2, "init_ensemble: need at least two particles");
    require(dimension >= 2, "init_ensemble: dimension must be at least 2");
    require(rho > 0.0, "init_ensemble: mass must be positive");
    switch (spec.kind) {
    case InitSpec::Kind::maxwellian:
        require(spec.theta0 > 0.0, "init_ensemble: maxwellian temperature must be positive");
        break;
    case InitSpec::Kind::uniform_ball:
        require(spec.radius > 0.0, "init_ensemble: ball radius must be positive");
        break;
    case InitSpec::Kind::bimodal:
        require(spec.theta_a >= 0.0 && spec.theta_b >= 0.0 && spec.theta_a + spec.theta_b > 0.0,
                "init_ensemble: bimodal temperatures must be non-negative and not both zero");
        require(spec.fraction >= 0.0 && spec.fraction <= 1.0, "init_ensemble: bimodal fraction must lie in [0, 1]");
        break;
    }
    if (target_energy) {
        require(*target_energy > 0.0, "init_ensemble: target energy must be positive");
    }

    RandomStream rng = RandomStream(seed).split(stream_tag::init);
    VelocityEnsemble e;
    e.dimension = dimension;
    e.rho = rho;
    e.velocities.resize(np * static_cast<std::size_t>(dimension));
    const auto first_count = static_cast<std::size_t>(std::llround(spec.fraction * static_cast<double>(np)));

    for (std::size_t i = 0; i < np; ++i) {
        auto v = e.particle(i);
        switch (spec.kind) {
        case InitSpec::Kind::maxwellian: {
            const double s = std::sqrt(spec.theta0);
            for (double& c : v) {
                c = s * rng.normal();
            }
            break;
        }
        case InitSpec::Kind::uniform_ball: {
            uniform_direction(rng, v);
            const double r = spec.radius * std::pow(rng.uniform(), 1.0 / dimension);
            for (double& c : v) {
                c *= r;
            }
            break;
        }
        case InitSpec::Kind::bimodal: {
            const double s = std::sqrt(i < first_count ? spec.theta_a : spec.theta_b);
            for (double& c : v) {
                c = s * rng.normal();
            }
            break;
        }
        }
    }

    // Exact zero mean.
    std::vector<double> mean(static_cast<std::size_t>(dimension), 0.0);
    for (std::size_t i = 0; i < np; ++i) {
        for (int d = 0; d < dimension; ++d) {
            mean[static_cast<std::size_t>(d)] += e.particle(i)[static_cast<std::size_t>(d)];
        }
    }
    for (double& m : mean) {
        m /= static_cast<double>(np);
    }
    for (std::size_t i = 0; i < np; ++i) {
        auto v = e.particle(i);
        for (int d = 0; d < dimension; ++d) {
            v[static_cast<std::size_t>(d)] -= mean[static_cast<std::size_t>(d)];
        }
    }

    const double energy = e.energy();
    require(energy > 0.0, "init_ensemble: degenerate sample (zero variance)");
    if (target_energy) {
        const double scale = std::sqrt(*target_energy / energy);
        for (double& c : e.velocities) {
            c *= scale;
        }
    }
    return e;
}

double default_umax(double theta0, int dimension) { return 8.0 * std::sqrt(2.0 * theta0 * dimension); }

void SimConfig::validate() const
{
    auto fail = [](const std::string& key, const std::string& why) { throw ContractViolation(key + ": " + why); };
    if (dimension < 2) {
        fail("dim", "dimension must be at least 2");
    }
    if (!(rho > 0.0 && std::isfinite(rho))) {
        fail("rho", "mass must be positive");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        fail("alpha", "restitution coefficient must lie in (0, 1]");
    }
    if (!tau_mode.rescaled && !(tau_mode.value >= 0.0 && std::isfinite(tau_mode.value))) {
        fail("tau", "heat-bath strength must be non-negative");
    }
    if (!(dt > 0.0 && std::isfinite(dt))) {
        fail("dt", "time step must be positive");
    }
    if (np < 2) {
        fail("Np", "need at least two particles");
    }
    if (!(umax_initial > 0.0 && std::isfinite(umax_initial))) {
        fail("umax_initial", "majorant must be positive");
    }
    if (snapshot_interval < 1) {
        fail("snapshot_interval", "must be at least 1");
    }
    if (!(kernel.b0 > 0.0 && kernel.b1 > 0.0)) {
        fail("cross_section", "kernel constants not computed");
    }
    const double p = dt * kernel.b0 * rho * umax_initial;
    if (p > max_collision_probability) {
        fail("dt", "dt * b0 * rho * umax = " + format_real(p) + " exceeds " + format_real(max_collision_probability));
    }
}

SimState SimState::start(VelocityEnsemble ensemble, const SimConfig& config, std::uint64_t stream_seed)
{
    require(ensemble.dimension == config.dimension, "ensemble dimension does not match config");
    require(ensemble.size() >= 2, "ensemble needs at least two particles");
    const RandomStream root(stream_seed);
    SimState s{
        .time = 0.0,
        .steps = 0,
        .ensemble = std::move(ensemble),
        .umax = config.umax_initial,
        .max_accepted_speed = 0.0,
        .candidate_carry = 0.0,
        .counters = {},
        .collision_rng = root.split(stream_tag::collision),
        .diffusion_rng = root.split(stream_tag::diffusion),
        .scratch = std::vector<double>(2 * static_cast<std::size_t>(config.dimension)),
    };
    return s;
}

namespace {

inline double pair_speed(const double* a, const double* b, int n) noexcept
{
    double s = 0.0;
    for (int d = 0; d < n; ++d) {
        const double u = a[d] - b[d];
        s += u * u;
    }
    return std::sqrt(s);
}

void check_finite(const SimState& state)
{
    for (double c : state.ensemble.velocities) {
        if (!std::isfinite(c)) {
            throw NumericFault("non-finite velocity", state.time, state.steps, state.ensemble);
        }
    }
}

}  // namespace

bool ntc_accept(SimState& state, double speed, double u01)
{
    ++state.counters.candidates;
    if (speed > state.umax) {
        ++state.counters.umax_violations;
        state.umax = 1.05 * speed;
    } else if (u01 * state.umax >= speed) {
        return false;
    }
    ++state.counters.accepted;
    state.max_accepted_speed = std::max(state.max_accepted_speed, speed);
    return true;
}

bool apply_candidate(SimState& state, const SimConfig& config, std::size_t i, std::size_t j, double u01,
                     std::span<const double> sigma)
{
    const int n = config.dimension;
    require(i != j && i < state.ensemble.size() && j < state.ensemble.size(), "apply_candidate: invalid pair");
    require(sigma.size() == static_cast<std::size_t>(n), "apply_candidate: sigma has the wrong dimension");
    double* vi = state.ensemble.particle(i).data();
    double* vj = state.ensemble.particle(j).data();
    const double speed = pair_speed(vi, vj, n);
    if (!ntc_accept(state, speed, u01)) {
        return false;
    }
    if (speed > 0.0) {
        collide_in_place(vi, vj, sigma.data(), config.alpha, speed, n);
    }
    return true;
}

void collision_substep(SimState& state, const SimConfig& config)
{
    const int n = config.dimension;
    const std::size_t np = state.ensemble.size();
    const double npd = static_cast<double>(np);
    // Unordered pairs times the per-pair rate bound (rho / Np) b0 umax.
    const double expected =
        0.5 * npd * (npd - 1.0) * (config.rho / npd) * config.kernel.b0 * state.umax * config.dt + state.candidate_carry;
    const double whole = std::floor(expected);
    state.candidate_carry = expected - whole;
    const auto candidates = static_cast<std::uint64_t>(whole);

    auto& rng = state.collision_rng;
    std::span<double> u_hat(state.scratch.data(), static_cast<std::size_t>(n));
    std::span<double> sigma(state.scratch.data() + n, static_cast<std::size_t>(n));
    const bool uniform = config.cross_section.is_uniform();

    for (std::uint64_t c = 0; c < candidates; ++c) {
        const std::size_t i = rng.index(np);
        std::size_t j = rng.index(np - 1);
        if (j >= i) {
            ++j;
        }
        double* vi = state.ensemble.particle(i).data();
        double* vj = state.ensemble.particle(j).data();
        const double speed = pair_speed(vi, vj, n);
        if (!ntc_accept(state, speed, rng.uniform())) {
            continue;
        }
        if (speed == 0.0) {
            continue;
        }
        if (uniform) {
            uniform_direction(rng, sigma);
        } else {
            for (int d = 0; d < n; ++d) {
                u_hat[static_cast<std::size_t>(d)] = (vi[d] - vj[d]) / speed;
            }
            sample_sigma_into(config.cross_section, u_hat, rng, sigma);
        }
        collide_in_place(vi, vj, sigma.data(), config.alpha, speed, n);
    }
}

void diffusion_substep(SimState& state, double tau, double dt, bool projection)
{
    require(tau >= 0.0, "diffusion_substep: tau must be non-negative");
    if (tau == 0.0) {
        return;
    }
    auto& e = state.ensemble;
    const auto n = static_cast<std::size_t>(e.dimension);
    const std::size_t np = e.size();
    const double scale = std::sqrt(2.0 * tau * dt);
    auto& rng = state.diffusion_rng;

    // Kicks of equal variance per component, summed per component to recentre.
    double shift[16] = {};
    std::vector<double> shift_heap;
    double* sum = shift;
    if (n > 16) {
        shift_heap.assign(n, 0.0);
        sum = shift_heap.data();
    }
    double* v = e.velocities.data();
    for (std::size_t i = 0; i < np; ++i) {
        for (std::size_t d = 0; d < n; ++d) {
            const double kick = scale * rng.normal();
            v[i * n + d] += kick;
            sum[d] += kick;
        }
    }
    double energy = 0.0;
    if (projection) {
        for (std::size_t d = 0; d < n; ++d) {
            sum[d] /= static_cast<double>(np);
        }
        for (std::size_t i = 0; i < np; ++i) {
            for (std::size_t d = 0; d < n; ++d) {
                double& c = v[i * n + d];
                c -= sum[d];
                energy += c * c;
            }
        }
    } else {
        for (double c : e.velocities) {
            energy += c * c;
        }
    }
    if (!std::isfinite(energy)) {
        throw NumericFault("non-finite velocity after heat-bath kick", state.time, state.steps, e);
    }
}

void step(SimState& state, const SimConfig& config)
{
    collision_substep(state, config);
    const double tau = config.tau();
    diffusion_substep(state, tau, config.dt, config.momentum_projection);
    if (tau == 0.0) {
        check_finite(state);
    }
    ++state.steps;
    state.time = static_cast<double>(state.steps) * config.dt;
    if (state.steps % 1000 == 0) {
        state.umax = std::max(0.999 * state.umax, state.max_accepted_speed);
    }
}

std::uint64_t steps_for(double t_end, double dt)
{
    require(t_end > 0.0 && dt > 0.0, "t_end and dt must be positive");
    return static_cast<std::uint64_t>(std::ceil(t_end / dt - 1e-9));
}

void run(SimState& state, const SimConfig& config, double t_end, const Recorder& recorder)
{
    const std::uint64_t total = steps_for(t_end, config.dt);
    if (recorder) {
        recorder(state);
    }
    for (std::uint64_t s = 1; s <= total; ++s) {
        step(state, config);
        if (recorder && (s % config.snapshot_interval == 0 || s == total)) {
            recorder(state);
        }
    }
}

}  // namespace granbath
