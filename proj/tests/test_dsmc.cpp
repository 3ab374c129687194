#include <doctest.h>

#include <cmath>
#include <numbers>

#include "granbath/analytics.hpp"
#include "granbath/dsmc.hpp"
#include "granbath/errors.hpp"
#include "granbath/observables.hpp"

using namespace granbath;

namespace {

SimConfig config(double alpha, std::size_t np, double theta0 = 1.0)
{
    SimConfig c;
    c.alpha = alpha;
    c.np = np;
    c.kernel = kernel_constants(c.cross_section, c.dimension);
    c.umax_initial = default_umax(theta0, c.dimension);
    c.dt = 0.9 * max_collision_probability / (c.kernel.b0 * c.rho * c.umax_initial);
    c.snapshot_interval = 50;
    return c;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_SUITE("dsmc")
{
    TEST_CASE("init_ensemble hits mean and energy exactly")
    {
        const auto e = init_ensemble(InitSpec::maxwellian(1.0), 3, 1.0, 3.0, 5000, 42);
        CHECK(e.size() == 5000);
        for (double p : e.momentum()) {
            CHECK(std::abs(p) < 1e-14);
        }
        CHECK(rel(e.energy(), 3.0) < 1e-13);
        const auto again = init_ensemble(InitSpec::maxwellian(1.0), 3, 1.0, 3.0, 5000, 42);
        CHECK(again.velocities == e.velocities);
        const auto other = init_ensemble(InitSpec::maxwellian(1.0), 3, 1.0, 3.0, 5000, 43);
        CHECK(other.velocities != e.velocities);
    }

    TEST_CASE("uniform ball and bimodal initial data")
    {
        const auto ball = init_ensemble(InitSpec::uniform_ball(2.0), 3, 1.0, std::nullopt, 20000, 3);
        CHECK(rel(moments(ball).theta, InitSpec::uniform_ball(2.0).nominal_temperature(3)) < 0.03);

        const auto bimodal = InitSpec::bimodal(0.05, 1.0, 0.5);
        const auto e = init_ensemble(bimodal, 3, 1.0, std::nullopt, 20000, 3);
        const auto ms = moments(e);
        CHECK(rel(ms.theta, bimodal.nominal_temperature(3)) < 0.03);
        const auto h = radial_histogram(e);
        CHECK(relative_entropy(h, matched_maxwellian(ms)).value > 0.1);
    }

    TEST_CASE("configuration validation names the key")
    {
        auto c = config(0.9, 1000);
        CHECK_NOTHROW(c.validate());
        c.dt *= 2.0;
        CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("dt"), ContractViolation);
        c = config(1.2, 1000);
        CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("alpha"), ContractViolation);
        c = config(0.9, 1);
        CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("Np"), ContractViolation);
    }

    TEST_CASE("single forced candidate matches post_collision")
    {
        const auto c = config(0.7, 10);
        auto state = SimState::start(init_ensemble(InitSpec::maxwellian(1.0), 3, 1.0, 3.0, 10, 9), c, 1);
        const auto before = state.ensemble;
        const std::vector<double> sigma{0.0, 0.6, 0.8};
        CHECK(apply_candidate(state, c, 2, 7, 0.0, sigma));
        const auto [vp, vsp] = post_collision(before.particle(2), before.particle(7), sigma, 0.7);
        for (int d = 0; d < 3; ++d) {
            CHECK(state.ensemble.particle(2)[d] == doctest::Approx(vp[d]).epsilon(1e-15));
            CHECK(state.ensemble.particle(7)[d] == doctest::Approx(vsp[d]).epsilon(1e-15));
        }
        for (std::size_t i = 0; i < 10; ++i) {
            if (i != 2 && i != 7) {
                for (int d = 0; d < 3; ++d) {
                    CHECK(state.ensemble.particle(i)[d] == before.particle(i)[d]);
                }
            }
        }
        CHECK_FALSE(apply_candidate(state, c, 2, 7, 1.0, sigma));
    }

    TEST_CASE("majorant violation raises umax")
    {
        const auto c = config(0.9, 10);
        auto state = SimState::start(init_ensemble(InitSpec::maxwellian(1.0), 3, 1.0, 3.0, 10, 9), c, 1);
        const double umax = state.umax;
        CHECK(ntc_accept(state, 2.0 * umax, 0.99));
        CHECK(state.umax == doctest::Approx(2.1 * umax));
        CHECK(state.counters.umax_violations == 1);
    }

    TEST_CASE("elastic collisions conserve energy and momentum")
    {
        auto c = config(1.0, 2000);
        c.tau_mode = TauMode{true, 0.0};
        auto state = SimState::start(init_ensemble(InitSpec::maxwellian(1.0), 3, 1.0, 3.0, 2000, 4), c, 5);
        const double e0 = state.ensemble.energy();
        for (int k = 0; k < 2000; ++k) {
            step(state, c);
        }
        CHECK(state.counters.accepted > 10000);
        CHECK(rel(state.ensemble.energy(), e0) < 1e-10);
        for (double p : state.ensemble.momentum()) {
            CHECK(std::abs(p) < 1e-12);
        }
    }

    TEST_CASE("momentum conserved over a million collisions")
    {
        auto c = config(0.9, 2000);
        auto state = SimState::start(init_ensemble(InitSpec::maxwellian(1.0), 3, 1.0, 3.0, 2000, 8), c, 8);
        // The gas is reheated by rescaling now and then; drift is summed over
        // the segments between rescalings so rounding is not amplified.
        auto momentum = [&] { return state.ensemble.momentum(); };
        auto reference = momentum();
        double drift = 0.0;
        auto accumulate = [&] {
            const auto p = momentum();
            for (int d = 0; d < 3; ++d) {
                drift = std::max(drift, std::abs(p[d] - reference[d]));
            }
        };
        while (state.counters.accepted < 1000000) {
            collision_substep(state, c);
            const double e = state.ensemble.energy();
            if (e < 1.5) {
                accumulate();
                const double f = std::sqrt(3.0 / e);
                for (double& v : state.ensemble.velocities) {
                    v *= f;
                }
                reference = momentum();
            }
        }
        accumulate();
        double scale = 0.0;
        for (double v : state.ensemble.velocities) {
            scale += std::abs(v) * state.ensemble.weight();
        }
        CHECK(drift < 1e-12 * scale);
    }

    TEST_CASE("accepted collision rate matches the Maxwellian mean relative speed")
    {
        auto c = config(1.0, 2000);
        auto state = SimState::start(init_ensemble(InitSpec::maxwellian(1.0), 3, 1.0, 3.0, 2000, 21), c, 22);
        const double t = 2.0;
        run(state, c, t, {});
        const double rate = static_cast<double>(state.counters.accepted) / (2000.0 * state.time);
        const double expected = 0.5 * c.rho * c.kernel.b0 * std::sqrt(2.0) * gaussian_moment(3, 1.0);
        CHECK(rel(rate, expected) < 0.02);
    }

    TEST_CASE("heat bath")
    {
        auto e = init_ensemble(InitSpec::maxwellian(1.0), 3, 1.0, 3.0, 20000, 2);
        auto c = config(0.9, 20000);
        auto state = SimState::start(e, c, 3);
        diffusion_substep(state, 0.0, 0.01, true);
        CHECK(state.ensemble.velocities == e.velocities);

        const auto p0 = state.ensemble.momentum();
        const double e0 = state.ensemble.energy();
        const double tau = 0.3, dt = 0.01;
        const int steps = 200;
        for (int k = 0; k < steps; ++k) {
            diffusion_substep(state, tau, dt, true);
        }
        const auto p1 = state.ensemble.momentum();
        for (int d = 0; d < 3; ++d) {
            CHECK(std::abs(p1[d] - p0[d]) < 1e-12);
        }
        // Gain 2 N tau rho per unit time, less the share removed by recentring.
        const double gain = (state.ensemble.energy() - e0) / (steps * dt);
        CHECK(rel(gain, 2.0 * 3.0 * tau * (1.0 - 1.0 / 20000.0)) < 0.05);
    }

    TEST_CASE("cooling without a bath")
    {
        auto c = config(0.8, 2000);
        c.tau_mode = TauMode{false, 0.0};
        auto state = SimState::start(init_ensemble(InitSpec::maxwellian(1.0), 3, 1.0, 3.0, 2000, 6), c, 7);
        double prev = state.ensemble.energy();
        for (int block = 0; block < 5; ++block) {
            for (int k = 0; k < 100; ++k) {
                step(state, c);
            }
            CHECK(state.ensemble.energy() < prev);
            prev = state.ensemble.energy();
        }
    }

    TEST_CASE("recorder sees initial and final states")
    {
        auto c = config(0.9, 500);
        c.snapshot_interval = 1000000;
        auto state = SimState::start(init_ensemble(InitSpec::maxwellian(1.0), 3, 1.0, 3.0, 500, 1), c, 1);
        std::vector<double> times;
        run(state, c, 0.05, [&](const SimState& s) { times.push_back(s.time); });
        REQUIRE(times.size() == 2);
        CHECK(times[0] == 0.0);
        CHECK(times[1] == doctest::Approx(steps_for(0.05, c.dt) * c.dt));
    }

    TEST_CASE("runs are deterministic")
    {
        auto c = config(0.9, 1000);
        auto a = SimState::start(init_ensemble(InitSpec::maxwellian(1.0), 3, 1.0, 3.0, 1000, 1), c, 77);
        auto b = SimState::start(init_ensemble(InitSpec::maxwellian(1.0), 3, 1.0, 3.0, 1000, 1), c, 77);
        run(a, c, 0.2, {});
        run(b, c, 0.2, {});
        CHECK(a.ensemble.velocities == b.ensemble.velocities);
        CHECK(a.counters.accepted == b.counters.accepted);
    }

    TEST_CASE("non-finite velocities raise a numeric fault")
    {
        auto c = config(0.9, 100);
        auto e = init_ensemble(InitSpec::maxwellian(1.0), 3, 1.0, 3.0, 100, 1);
        e.velocities[5] = std::numeric_limits<double>::quiet_NaN();
        auto state = SimState::start(e, c, 1);
        CHECK_THROWS_AS(run(state, c, 0.05, {}), NumericFault);
    }
}
