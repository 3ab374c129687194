#include <doctest.h>

#include <cmath>

#include "granbath/errors.hpp"
#include "granbath/experiments.hpp"
#include "granbath/stats.hpp"

using namespace granbath;

TEST_SUITE("experiments")
{
    TEST_CASE("statistics helpers")
    {
        const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
        const auto m = mean_stderr(x);
        CHECK(m.mean == doctest::Approx(2.5));
        CHECK(m.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
        const std::vector<double> y{3.0, 5.0, 7.0, 9.0};
        const auto fit = least_squares(x, y);
        CHECK(fit.slope == doctest::Approx(2.0));
        CHECK(fit.intercept == doctest::Approx(1.0));
        CHECK(fit.r_squared == doctest::Approx(1.0));
    }

    TEST_CASE("log-linear fit recovers a decay rate")
    {
        std::vector<double> t, y, noise;
        std::vector<std::vector<double>> reps(4);
        for (int k = 0; k < 60; ++k) {
            const double tk = 0.05 * k;
            t.push_back(tk);
            noise.push_back(1e-3);
            double mean = 0.0;
            for (int r = 0; r < 4; ++r) {
                const double v = (1.0 + 0.01 * r) * std::exp(-0.8 * tk);
                reps[r].push_back(v);
                mean += v / 4.0;
            }
            y.push_back(mean);
        }
        const auto f = fit_log_linear(t, y, noise, reps);
        REQUIRE(f.valid);
        CHECK(f.estimate == doctest::Approx(-0.8).epsilon(1e-6));
        CHECK(f.std_error >= 0.0);
        CHECK(f.points >= min_fit_points);

        // The window ends once the signal drops under 5x the noise.
        std::vector<double> loud(noise.size(), 0.2);
        const auto refused = fit_log_linear(t, y, loud, reps);
        CHECK_FALSE(refused.valid);
        CHECK_FALSE(refused.reason.empty());
    }

    TEST_CASE("spec validation")
    {
        auto s = ExperimentSpec::defaults_for(ExperimentKind::steady);
        CHECK_NOTHROW(s.validate());
        s.replicas = 0;
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("replicas"), ContractViolation);

        s = ExperimentSpec::defaults_for(ExperimentKind::steady);
        s.burn_in = 20.0;
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("burn_in"), ContractViolation);

        s = ExperimentSpec::defaults_for(ExperimentKind::sweep);
        s.alphas = {0.9, 0.95};
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("alphas"), ContractViolation);

        s = ExperimentSpec::defaults_for(ExperimentKind::relax);
        s.delta = 0.5;
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("delta"), ContractViolation);

        s = ExperimentSpec::defaults_for(ExperimentKind::scaling);
        s.lambda = 3.0;
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("lambda"), ContractViolation);

        s = ExperimentSpec::defaults_for(ExperimentKind::lyapunov);
        s.base.alpha = 0.9;
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("alpha"), ContractViolation);

        s = ExperimentSpec::defaults_for(ExperimentKind::steady);
        s.base.tau_mode = TauMode{false, 0.1};
        CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("tau"), ContractViolation);
    }

    TEST_CASE("replica pool preserves order and determinism")
    {
        const auto a = run_replicas(16, 4, [](std::size_t r) { return replica_seed(7, r); });
        const auto b = run_replicas(16, 1, [](std::size_t r) { return replica_seed(7, r); });
        CHECK(a == b);
        CHECK(a[0] != a[1]);
        CHECK(replica_seed(7, 0, 0) != replica_seed(7, 0, 1));
        CHECK_THROWS(run_replicas(4, 2, [](std::size_t r) -> int {
            if (r == 2) {
                throw std::runtime_error("boom");
            }
            return 0;
        }));
    }

    TEST_CASE("small steady run is deterministic and near the prediction")
    {
        auto s = ExperimentSpec::defaults_for(ExperimentKind::steady);
        s.base.np = 2000;
        s.replicas = 2;
        s.base.alpha = 0.9;
        s.burn_in = 0.5;
        s.t_end = 1.5;
        const auto a = steady_state(s, 0.9);
        const auto b = steady_state(s, 0.9);
        CHECK(a.to_json().dump() == b.to_json().dump());
        CHECK(std::abs(a.residual.mean) < 0.1);
        CHECK(std::abs(a.theta_ss.mean / a.theta_pred - 1.0) < 0.1);
        CHECK(a.replicas == 2);
        CHECK(a.first_replica_tail.final_ensemble.size() == 2000);
    }

    TEST_CASE("scaling with lambda 1 and shared seeds is exact")
    {
        auto s = ExperimentSpec::defaults_for(ExperimentKind::scaling);
        s.base.np = 1000;
        s.replicas = 2;
        s.t_end = 0.3;
        s.lambda = 1.0;
        s.coupled = true;
        const auto r = scaling_check(s);
        CHECK(r.max_deviation == 0.0);
        CHECK(r.passed());
    }

    TEST_CASE("elastic scaling conserves energy in both arms")
    {
        auto s = ExperimentSpec::defaults_for(ExperimentKind::scaling);
        s.base.np = 1000;
        s.replicas = 2;
        s.t_end = 0.3;
        s.lambda = 2.0;
        s.base.alpha = 1.0;
        const auto r = scaling_check(s);
        CHECK(r.max_deviation < 1e-10);
        CHECK(r.passed());
    }
}
