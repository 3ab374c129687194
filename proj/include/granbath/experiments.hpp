#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "granbath/analytics.hpp"
#include "granbath/dsmc.hpp"
#include "granbath/observables.hpp"
#include "granbath/stats.hpp"

namespace granbath {

enum class ExperimentKind { steady, relax, sweep, lyapunov, scaling };

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(const std::string& name);

/**
 * Everything needed to reproduce one study. Unset optionals are resolved
 * per restitution coefficient: umax from the initial temperature, dt at 90%
 * of the collision-probability bound, t_end and the initial energy offset
 * from the kind.
 */
struct ExperimentSpec
{
    ExperimentKind kind = ExperimentKind::steady;
    SimConfig base;
    std::optional<double> dt;
    std::optional<double> umax_initial;
    InitSpec init;
    std::optional<double> delta;  // initial energy = E_bar (1 + delta)
    std::size_t replicas = 8;
    double burn_in = 2.0;
    std::optional<double> t_end;
    double sample_interval = 0.05;  // time between recorded snapshots
    std::vector<double> alphas;     // sweep; relax fits each when non-empty
    double lambda = 1.5;
    bool coupled = false;  // scaling: both arms share replica seeds
    std::size_t bins = default_bins;
    bool empirical_energy_bar = false;
    std::size_t pair_budget = 20000;
    unsigned threads = 0;  // 0: hardware concurrency

    /// Kind-specific defaults (init law, replicas, t_end, sizes).
    static ExperimentSpec defaults_for(ExperimentKind kind);

    /// Throws ContractViolation naming the offending key.
    void validate() const;

    std::vector<double> alpha_list() const;
    double resolved_delta() const;
    double resolved_t_end(double alpha) const;
    /// Simulation config for one coefficient and initial temperature.
    SimConfig resolve_config(double alpha, double theta0) const;

    nlohmann::json to_json() const;
};

struct FitResult
{
    bool valid = false;
    std::string reason;  // why the fit was refused
    double estimate = 0.0;
    double std_error = 0.0;
    double window_start = 0.0;
    double window_end = 0.0;
    std::size_t points = 0;
    double r_squared = 0.0;

    nlohmann::json to_json() const;
};

/// Minimum snapshots in a fit window.
inline constexpr std::size_t min_fit_points = 10;

/**
 * Log-linear fit of a positive decaying signal: y ~ A exp(slope t) on the
 * leading window where y >= 5 noise. `replica_signals` (one row per
 * replica, same length as t) gives a jackknife standard error; `y` is their
 * mean after any offset subtraction.
 */
FitResult fit_log_linear(const std::vector<double>& t, const std::vector<double>& y, const std::vector<double>& noise,
                         const std::vector<std::vector<double>>& replica_signals);

/// Counts of CKP checks on recorded snapshots whose entropy exceeds 10x the bias floor.
struct CkpTally
{
    std::size_t checked = 0;
    std::size_t violations = 0;
    std::size_t below_floor = 0;
    double min_slack = 0.0;

    void add(const ObservableRecord& r);
    void merge(const CkpTally& other);
    nlohmann::json to_json() const;
};

inline constexpr double ckp_floor_factor = 10.0;
/// Round-off allowance on the slack.
inline constexpr double ckp_tolerance = 1e-12;

/// Seed of replica r (arm distinguishes independent groups).
std::uint64_t replica_seed(std::uint64_t root, std::size_t replica, std::uint64_t arm = 0);

/**
 * Runs fn(r) for r in [0, count) on up to `threads` workers and returns the
 * results in index order. The first exception (by index) is rethrown after
 * all workers finish.
 */
template <class F>
auto run_replicas(std::size_t count, unsigned threads, F fn) -> std::vector<decltype(fn(std::size_t{}))>
{
    using Result = decltype(fn(std::size_t{}));
    std::vector<std::optional<Result>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < count; r = next++) {
            try {
                slots[r].emplace(fn(r));
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    unsigned n = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::size_t>(n, count));
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < n; ++k) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    std::vector<Result> out;
    out.reserve(count);
    for (auto& s : slots) {
        out.push_back(std::move(*s));
    }
    return out;
}

/// One replica's recorded snapshots plus a histogram pooled after burn-in.
struct ReplicaResult
{
    std::vector<ObservableRecord> records;
    RadialHistogram pooled;
    std::size_t pooled_snapshots = 0;
    CollisionCounters counters;
    double final_umax = 0.0;
    VelocityEnsemble final_ensemble;
    double final_time = 0.0;
    CkpTally ckp;
};

struct ReplicaPlan
{
    SimConfig config;  // seed is the replica seed
    InitSpec init;
    std::optional<double> target_energy;
    double t_end = 1.0;
    double burn_in = 0.0;
    double init_scale = 1.0;  // velocities multiplied after init_ensemble
    std::optional<double> pool_r_max;
    ObserverSettings observer;
};

ReplicaResult run_replica(const ReplicaPlan& plan);

/// Replica-mean series; records must share times across replicas.
ObservableSeries mean_series(const std::vector<ReplicaResult>& replicas);

struct SteadyResult
{
    double alpha = 1.0;
    double tau = 0.0;
    double theta_pred = 0.0;
    double theta_bar1 = 0.0;
    MeanError theta_ss;
    MeanError energy;
    MeanError residual;  // NaN when tau = 0
    double drift = 0.0;  // relative change of theta across the window
    double drift_z = 0.0;
    bool stationary = true;
    double l1_bar1[4] = {};  // distance to M_{theta_bar1}, q = 0..3
    double l1_pred[4] = {};  // distance to M_{theta_pred}
    double l1_matched[4] = {};  // distance to M with the measured temperature
    double l1_floor[4] = {};
    double h_rel = 0.0;
    double h_floor = 0.0;
    std::size_t empty_interior_shells = 0;
    std::size_t replicas = 0;
    std::size_t samples = 0;  // snapshots per replica in the window
    double acceptance_ratio = 0.0;
    double violation_rate = 0.0;
    CkpTally ckp;
    ObservableSeries series;
    ReplicaResult first_replica_tail;  // final ensemble of replica 0 (records cleared)

    nlohmann::json to_json() const;
};

SteadyResult steady_state(const ExperimentSpec& spec, double alpha);

struct SweepResult
{
    std::vector<SteadyResult> points;
    LinearFit slope_fit;  // log L1_2 against log(1 - alpha)
    std::vector<double> fit_alphas;
    bool distances_decreasing = false;
    bool theta_monotone = false;
    double slope_threshold = 0.4;
    CkpTally ckp;

    bool passed() const;
    nlohmann::json to_json() const;
    void write_csv(std::ostream& out) const;
};

SweepResult alpha_sweep(const ExperimentSpec& spec);

struct RelaxationPoint
{
    double alpha = 1.0;
    double energy_bar = 0.0;
    double delta = 0.0;
    FitResult mu;
    double mu_pred = 0.0;
    double mu_alternative = 0.0;
    std::string supported;  // "theta_bar1" or "unit"
    double supported_deviation = 0.0;
    std::vector<double> times;
    std::vector<double> offset;      // replica-mean E(t) - E_bar
    std::vector<double> offset_err;  // replica stderr
    CkpTally ckp;

    nlohmann::json to_json() const;
};

struct RelaxationResult
{
    std::vector<RelaxationPoint> points;
    std::optional<MeanError> ratio;  // mu(0.98) / mu(0.96) when both were fitted
    CkpTally ckp;

    bool passed() const;
    nlohmann::json to_json() const;
    void write_csv(std::ostream& out) const;
};

RelaxationResult relaxation_fit(const ExperimentSpec& spec);

struct LyapunovResult
{
    double alpha = 1.0;
    double energy_bar = 0.0;
    std::size_t window = 20;
    std::vector<double> times;
    std::vector<double> h1, h1_err;
    std::vector<double> entropy, energy_term;
    std::vector<double> block_times, block_h1, block_err;
    bool monotone = false;
    double worst_excess = 0.0;  // largest increase in units of its 2-sigma tolerance
    FitResult entropy_fold;     // e-folding time of H(f|M[f])
    FitResult energy_fold;      // e-folding time of (E - E_bar)^2
    std::optional<double> timescale_ratio;
    CkpTally ckp;
    ObservableSeries series;
    ReplicaResult first_replica_tail;

    /// Monotone, entropy e-fold at least 5x faster than the energy e-fold, no CKP violation.
    bool passed() const;
    nlohmann::json to_json() const;
    void write_csv(std::ostream& out) const;
};

inline constexpr double timescale_ratio_threshold = 5.0;

LyapunovResult lyapunov_trace(const ExperimentSpec& spec);

struct ScalingResult
{
    double lambda = 1.0;
    double alpha = 1.0;
    double tau_f = 0.0;
    double tau_g = 0.0;
    std::vector<double> times;
    std::vector<double> theta_f, theta_g_scaled, deviation;
    double max_deviation = 0.0;
    double tolerance = 0.03;
    CkpTally ckp;

    bool passed() const { return max_deviation <= tolerance; }
    nlohmann::json to_json() const;
    void write_csv(std::ostream& out) const;
};

ScalingResult scaling_check(const ExperimentSpec& spec);

}  // namespace granbath
