#include "granbath/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "granbath/errors.hpp"
#include "granbath/format.hpp"
#include "granbath/stats.hpp"

namespace granbath {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void reject(const std::string& key, const std::string& why) { throw ContractViolation(key + ": " + why); }

double relative(double a, double b) { return std::abs(a - b) / std::abs(b); }

nlohmann::json json_array(const double (&v)[4]) { return nlohmann::json::array({v[0], v[1], v[2], v[3]}); }

nlohmann::json json_mean(const MeanError& m) { return {{"mean", m.mean}, {"stderr", m.std_error}}; }

}  // namespace

std::string to_string(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::steady:
        return "steady";
    case ExperimentKind::relax:
        return "relax";
    case ExperimentKind::sweep:
        return "sweep";
    case ExperimentKind::lyapunov:
        return "lyapunov";
    case ExperimentKind::scaling:
        return "scaling";
    }
    return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(const std::string& name)
{
    for (auto k : {ExperimentKind::steady, ExperimentKind::relax, ExperimentKind::sweep, ExperimentKind::lyapunov,
                   ExperimentKind::scaling}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    return std::nullopt;
}

ExperimentSpec ExperimentSpec::defaults_for(ExperimentKind kind)
{
    ExperimentSpec s;
    s.kind = kind;
    s.base.np = 20000;
    s.base.alpha = 0.95;
    s.base.seed = 1;
    s.init = InitSpec::maxwellian(1.0);
    switch (kind) {
    case ExperimentKind::steady:
        break;
    case ExperimentKind::sweep:
        s.alphas = {0.90, 0.93, 0.96, 0.98, 0.99};
        break;
    case ExperimentKind::relax:
        s.replicas = 20;
        s.burn_in = 0.0;
        break;
    case ExperimentKind::lyapunov:
        s.base.alpha = 0.99;
        s.init = InitSpec::bimodal(0.05, 1.0, 0.5);
        s.burn_in = 0.0;
        s.t_end = 12.0;
        s.sample_interval = 0.02;
        break;
    case ExperimentKind::scaling:
        s.base.np = 50000;
        s.replicas = 20;
        s.burn_in = 0.0;
        s.t_end = 2.0;
        break;
    }
    return s;
}

std::vector<double> ExperimentSpec::alpha_list() const
{
    if ((kind == ExperimentKind::sweep || kind == ExperimentKind::relax) && !alphas.empty()) {
        return alphas;
    }
    return {base.alpha};
}

double ExperimentSpec::resolved_delta() const
{
    if (delta) {
        return *delta;
    }
    switch (kind) {
    case ExperimentKind::relax:
        return 0.2;
    case ExperimentKind::lyapunov:
        return 0.3;
    default:
        return 0.0;
    }
}

double ExperimentSpec::resolved_t_end(double alpha) const
{
    if (t_end) {
        return *t_end;
    }
    switch (kind) {
    case ExperimentKind::relax: {
        const auto kc = kernel_constants(base.cross_section, base.dimension);
        const auto pred = SteadyPrediction::make(base.rho, kc, base.dimension);
        const double mu = std::abs(pred.mu_alpha(alpha));
        return mu > 0.0 ? 4.5 / mu : 10.0;
    }
    case ExperimentKind::lyapunov:
        return 12.0;
    case ExperimentKind::scaling:
        return 2.0;
    default:
        return 10.0;
    }
}

SimConfig ExperimentSpec::resolve_config(double alpha, double theta0) const
{
    SimConfig c = base;
    c.alpha = alpha;
    c.kernel = kernel_constants(c.cross_section, c.dimension);
    c.umax_initial = umax_initial.value_or(default_umax(theta0, c.dimension));
    c.dt = dt.value_or(0.9 * max_collision_probability / (c.kernel.b0 * c.rho * c.umax_initial));
    c.snapshot_interval = static_cast<std::size_t>(std::max(1.0, std::round(sample_interval / c.dt)));
    c.validate();
    return c;
}

void ExperimentSpec::validate() const
{
    if (replicas < 1) {
        reject("replicas", "need at least one replica");
    }
    if (!(base.alpha > 0.0 && base.alpha <= 1.0)) {
        reject("alpha", "restitution coefficient must lie in (0, 1]");
    }
    for (double a : alphas) {
        if (!(a > 0.0 && a <= 1.0)) {
            reject("alphas", "every coefficient must lie in (0, 1]");
        }
    }
    if (kind == ExperimentKind::sweep && alphas.size() < 3) {
        reject("alphas", "a sweep needs at least three coefficients");
    }
    if (!(sample_interval > 0.0)) {
        reject("sample_interval", "must be positive");
    }
    if (!(burn_in >= 0.0)) {
        reject("burn_in", "must be non-negative");
    }
    if (t_end && !(*t_end > 0.0)) {
        reject("t_end", "must be positive");
    }
    if (dt && !(*dt > 0.0)) {
        reject("dt", "time step must be positive");
    }
    if (umax_initial && !(*umax_initial > 0.0)) {
        reject("umax_initial", "majorant must be positive");
    }
    if (bins < 8) {
        reject("bins", "need at least 8 bins");
    }
    if (pair_budget < 1) {
        reject("pair_budget", "must be positive");
    }
    const bool needs_rescaled =
        kind == ExperimentKind::steady || kind == ExperimentKind::sweep || kind == ExperimentKind::relax ||
        kind == ExperimentKind::lyapunov;
    if (needs_rescaled && !base.tau_mode.rescaled) {
        reject("tau", to_string(kind) + " requires the rescaled heat bath");
    }
    if (kind == ExperimentKind::relax && std::abs(resolved_delta()) > 0.2) {
        reject("delta", "relaxation offset must satisfy |delta| <= 0.2");
    }
    if (kind == ExperimentKind::relax && resolved_delta() == 0.0) {
        reject("delta", "relaxation offset must be non-zero");
    }
    if (delta && !(*delta > -1.0)) {
        reject("delta", "initial energy must stay positive");
    }
    if (kind == ExperimentKind::lyapunov && base.alpha < 0.98) {
        reject("alpha", "the Liapunov trace requires alpha >= 0.98");
    }
    if (kind == ExperimentKind::scaling && !(lambda >= 0.5 && lambda <= 2.0)) {
        reject("lambda", "must lie in [0.5, 2]");
    }
    const auto kc = kernel_constants(base.cross_section, base.dimension);
    const auto pred = SteadyPrediction::make(base.rho, kc, base.dimension);
    for (double a : alpha_list()) {
        const double t = resolved_t_end(a);
        if (!(burn_in < t)) {
            reject("burn_in", "must be shorter than t_end");
        }
        double theta0 = init.nominal_temperature(base.dimension);
        if (kind != ExperimentKind::scaling) {
            theta0 = pred.theta_pred(a) * (1.0 + resolved_delta());
        }
        (void)resolve_config(a, theta0);
        if (kind == ExperimentKind::scaling) {
            SimConfig g = resolve_config(a, theta0);
            g.dt *= lambda;
            g.umax_initial /= lambda;
            g.validate();
        }
    }
}

nlohmann::json ExperimentSpec::to_json() const
{
    nlohmann::json j;
    j["kind"] = to_string(kind);
    j["alpha"] = base.alpha;
    j["alphas"] = alphas;
    j["rho"] = base.rho;
    j["dim"] = base.dimension;
    j["Np"] = base.np;
    j["seed"] = base.seed;
    j["tau"] = base.tau_mode.rescaled ? nlohmann::json("rescaled") : nlohmann::json(base.tau_mode.value);
    j["projection"] = base.momentum_projection;
    j["cross_section"] = base.cross_section.id();
    j["dt"] = dt ? nlohmann::json(*dt) : nlohmann::json("auto");
    j["umax_initial"] = umax_initial ? nlohmann::json(*umax_initial) : nlohmann::json("auto");
    j["init"] = init.describe();
    j["delta"] = resolved_delta();
    j["replicas"] = replicas;
    j["burn_in"] = burn_in;
    j["t_end"] = t_end ? nlohmann::json(*t_end) : nlohmann::json("auto");
    j["sample_interval"] = sample_interval;
    j["lambda"] = lambda;
    j["coupled"] = coupled;
    j["bins"] = bins;
    j["energy_bar"] = empirical_energy_bar ? "empirical" : "closure";
    j["pair_budget"] = pair_budget;
    return j;
}

nlohmann::json FitResult::to_json() const
{
    nlohmann::json j{{"valid", valid},
                     {"estimate", estimate},
                     {"stderr", std_error},
                     {"window", {window_start, window_end}},
                     {"points", points},
                     {"r_squared", r_squared}};
    if (!valid) {
        j["reason"] = reason;
    }
    return j;
}

FitResult fit_log_linear(const std::vector<double>& t, const std::vector<double>& y, const std::vector<double>& noise,
                         const std::vector<std::vector<double>>& replica_signals)
{
    require(t.size() == y.size() && t.size() == noise.size(), "fit_log_linear: size mismatch");
    FitResult fit;
    std::size_t end = 0;
    while (end < y.size() && y[end] > 0.0 && y[end] >= 5.0 * noise[end]) {
        ++end;
    }
    fit.points = end;
    if (end > 0) {
        fit.window_start = t.front();
        fit.window_end = t[end - 1];
    }
    if (end < min_fit_points) {
        fit.reason = "window of " + std::to_string(end) + " snapshots is shorter than " +
                     std::to_string(min_fit_points);
        return fit;
    }
    std::vector<double> x(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<double> ly(end);
    for (std::size_t k = 0; k < end; ++k) {
        ly[k] = std::log(y[k]);
    }
    const auto ls = least_squares(x, ly);
    fit.valid = true;
    fit.estimate = ls.slope;
    fit.r_squared = ls.r_squared;
    fit.std_error = ls.slope_se;

    const std::size_t r = replica_signals.size();
    if (r >= 2) {
        std::vector<double> loo;
        for (std::size_t leave = 0; leave < r; ++leave) {
            std::vector<double> xs, ys;
            for (std::size_t k = 0; k < end; ++k) {
                double s = 0.0;
                for (std::size_t i = 0; i < r; ++i) {
                    if (i != leave) {
                        s += replica_signals[i][k];
                    }
                }
                s /= static_cast<double>(r - 1);
                if (s > 0.0) {
                    xs.push_back(t[k]);
                    ys.push_back(std::log(s));
                }
            }
            if (xs.size() >= 2) {
                loo.push_back(least_squares(xs, ys).slope);
            }
        }
        fit.std_error = jackknife_se(loo);
    }
    return fit;
}

void CkpTally::add(const ObservableRecord& r)
{
    if (!(r.h_floor > 0.0) || !(r.h_rel > ckp_floor_factor * r.h_floor)) {
        ++below_floor;
        return;
    }
    min_slack = checked == 0 ? r.ckp_slack : std::min(min_slack, r.ckp_slack);
    ++checked;
    if (!(r.ckp_slack >= -ckp_tolerance)) {
        ++violations;
    }
}

void CkpTally::merge(const CkpTally& other)
{
    if (other.checked > 0) {
        min_slack = checked == 0 ? other.min_slack : std::min(min_slack, other.min_slack);
    }
    checked += other.checked;
    violations += other.violations;
    below_floor += other.below_floor;
}

nlohmann::json CkpTally::to_json() const
{
    return {{"checked", checked},
            {"violations", violations},
            {"below_floor", below_floor},
            {"min_slack", checked ? nlohmann::json(min_slack) : nlohmann::json(nullptr)}};
}

std::uint64_t replica_seed(std::uint64_t root, std::size_t replica, std::uint64_t arm)
{
    return derive_seed(derive_seed(root, 0x7265706cULL + arm), replica);
}

ReplicaResult run_replica(const ReplicaPlan& plan)
{
    const auto& cfg = plan.config;
    auto e = init_ensemble(plan.init, cfg.dimension, cfg.rho, plan.target_energy, cfg.np, cfg.seed);
    if (plan.init_scale != 1.0) {
        for (double& c : e.velocities) {
            c *= plan.init_scale;
        }
    }
    auto state = SimState::start(std::move(e), cfg, cfg.seed);

    ReplicaResult out;
    if (plan.pool_r_max) {
        out.pooled.dimension = cfg.dimension;
        out.pooled.rho = cfg.rho;
        out.pooled.r_max = *plan.pool_r_max;
        out.pooled.counts.assign(plan.observer.bins, 0.0);
    }
    const double pool_from = plan.burn_in * (1.0 - 1e-12);
    run(state, cfg, plan.t_end, [&](const SimState& s) {
        auto rec = observe(s, plan.observer, cfg.seed);
        out.ckp.add(rec);
        out.records.push_back(rec);
        if (plan.pool_r_max && s.time >= pool_from) {
            out.pooled.accumulate(radial_histogram(s.ensemble, plan.observer.bins, *plan.pool_r_max));
            ++out.pooled_snapshots;
        }
    });
    out.counters = state.counters;
    out.final_umax = state.umax;
    out.final_time = state.time;
    out.final_ensemble = std::move(state.ensemble);
    return out;
}

ObservableSeries mean_series(const std::vector<ReplicaResult>& replicas)
{
    ObservableSeries series;
    if (replicas.empty()) {
        return series;
    }
    std::size_t n = replicas.front().records.size();
    for (const auto& r : replicas) {
        n = std::min(n, r.records.size());
    }
    const double inv = 1.0 / static_cast<double>(replicas.size());
    for (std::size_t k = 0; k < n; ++k) {
        ObservableRecord m;
        m.time = replicas.front().records[k].time;
        for (const auto& rep : replicas) {
            const auto& r = rep.records[k];
            m.rho += r.rho * inv;
            m.theta += r.theta * inv;
            m.energy += r.energy * inv;
            m.m2 += r.m2 * inv;
            m.m3 += r.m3 * inv;
            m.de_hat += r.de_hat * inv;
            m.residual += r.residual * inv;
            m.h_rel += r.h_rel * inv;
            m.h_floor += r.h_floor * inv;
            m.ckp_slack += r.ckp_slack * inv;
            m.h1 += r.h1 * inv;
            for (int q = 0; q < 4; ++q) {
                m.l1[q] += r.l1[q] * inv;
            }
        }
        series.push(m);
    }
    return series;
}

namespace {

double energy_bar_for(const ExperimentSpec& spec, const SteadyPrediction& pred, double alpha)
{
    if (!spec.empirical_energy_bar) {
        return pred.energy_pred(alpha);
    }
    ExperimentSpec s = spec;
    s.kind = ExperimentKind::steady;
    s.delta.reset();
    s.t_end.reset();
    s.burn_in = 2.0;
    s.init = InitSpec::maxwellian(1.0);
    s.sample_interval = 0.05;
    return steady_state(s, alpha).energy.mean;
}

ObserverSettings observer_for(const ExperimentSpec& spec, const SimConfig& cfg, double energy_bar)
{
    ObserverSettings o;
    o.alpha = cfg.alpha;
    o.tau = cfg.tau();
    o.b1 = cfg.kernel.b1;
    o.energy_bar = energy_bar;
    o.bins = spec.bins;
    o.pair_budget = spec.pair_budget;
    return o;
}

struct Column
{
    std::vector<double> mean;
    std::vector<double> err;
};

template <class Get>
Column column(const std::vector<ReplicaResult>& reps, std::size_t n, Get get)
{
    Column c;
    std::vector<double> x(reps.size());
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t r = 0; r < reps.size(); ++r) {
            x[r] = get(reps[r].records[k]);
        }
        const auto m = mean_stderr(x);
        c.mean.push_back(m.mean);
        c.err.push_back(m.std_error);
    }
    return c;
}

std::size_t common_length(const std::vector<ReplicaResult>& reps)
{
    std::size_t n = std::numeric_limits<std::size_t>::max();
    for (const auto& r : reps) {
        n = std::min(n, r.records.size());
    }
    return reps.empty() ? 0 : n;
}

void add_counters(CollisionCounters& into, const CollisionCounters& c)
{
    into.candidates += c.candidates;
    into.accepted += c.accepted;
    into.umax_violations += c.umax_violations;
}

ReplicaResult tail_of(ReplicaResult r)
{
    r.records.clear();
    r.pooled = {};
    return r;
}

/// Log-linear fit of x - tail level, the tail being the last quarter of the run.
FitResult fit_decay_to_tail(const std::vector<double>& t, const Column& c,
                            const std::vector<std::vector<double>>& per_replica)
{
    const std::size_t n = t.size();
    const std::size_t tail = std::max<std::size_t>(n - n / 4, 1) - 1;
    std::vector<double> tail_values(c.mean.begin() + static_cast<std::ptrdiff_t>(tail), c.mean.end());
    const auto level = mean_stderr(tail_values);
    const double tail_sd = level.std_error * std::sqrt(static_cast<double>(tail_values.size()));
    std::vector<double> y(n), noise(n);
    for (std::size_t k = 0; k < n; ++k) {
        y[k] = c.mean[k] - level.mean;
        noise[k] = std::max(c.err[k], tail_sd);
    }
    auto shifted = per_replica;
    for (auto& row : shifted) {
        for (double& v : row) {
            v -= level.mean;
        }
    }
    auto fit = fit_log_linear(t, y, noise, shifted);
    if (fit.valid) {
        // Report the e-folding time -1 / slope.
        const double slope = fit.estimate;
        fit.estimate = slope < 0.0 ? -1.0 / slope : std::numeric_limits<double>::infinity();
        fit.std_error = slope < 0.0 ? fit.std_error / (slope * slope) : nan;
        if (!(slope < 0.0)) {
            fit.valid = false;
            fit.reason = "signal does not decay";
        }
    }
    return fit;
}

}  // namespace

SteadyResult steady_state(const ExperimentSpec& spec, double alpha)
{
    if (!spec.base.tau_mode.rescaled) {
        reject("tau", "steady state requires the rescaled heat bath");
    }
    const int n = spec.base.dimension;
    const double rho = spec.base.rho;
    const auto kc = kernel_constants(spec.base.cross_section, n);
    const auto pred = SteadyPrediction::make(rho, kc, n);

    SteadyResult res;
    res.alpha = alpha;
    res.theta_pred = pred.theta_pred(alpha);
    res.theta_bar1 = pred.theta_bar1;
    const double energy0 = pred.energy_pred(alpha) * (1.0 + spec.resolved_delta());
    const SimConfig cfg = spec.resolve_config(alpha, energy0 / (rho * n));
    res.tau = cfg.tau();
    const double t_end = spec.resolved_t_end(alpha);
    const double r_max = default_r_max_factor * std::sqrt(res.theta_pred);

    auto reps = run_replicas(spec.replicas, spec.threads, [&](std::size_t r) {
        ReplicaPlan plan;
        plan.config = cfg;
        plan.config.seed = replica_seed(spec.base.seed, r);
        plan.init = spec.init;
        plan.target_energy = energy0;
        plan.t_end = t_end;
        plan.burn_in = spec.burn_in;
        plan.pool_r_max = r_max;
        plan.observer = observer_for(spec, cfg, pred.energy_pred(alpha));
        return run_replica(plan);
    });

    const std::size_t nrep = reps.size();
    res.replicas = nrep;
    std::vector<double> theta(nrep), energy(nrep), residual(nrep), slope(nrep);
    CollisionCounters counters;
    const double from = spec.burn_in * (1.0 - 1e-12);
    for (std::size_t r = 0; r < nrep; ++r) {
        std::vector<double> ts, th;
        double e = 0.0, q = 0.0;
        for (const auto& rec : reps[r].records) {
            if (rec.time < from) {
                continue;
            }
            ts.push_back(rec.time);
            th.push_back(rec.theta);
            e += rec.energy;
            q += rec.residual;
        }
        const double m = static_cast<double>(ts.size());
        theta[r] = mean_stderr(th).mean;
        energy[r] = e / m;
        residual[r] = q / m;
        slope[r] = ts.size() >= 2 ? least_squares(ts, th).slope : 0.0;
        res.samples = ts.size();
        res.ckp.merge(reps[r].ckp);
        add_counters(counters, reps[r].counters);
    }
    res.theta_ss = mean_stderr(theta);
    res.energy = mean_stderr(energy);
    res.residual = res.tau > 0.0 ? mean_stderr(residual) : MeanError{nan, nan};
    const auto drift = mean_stderr(slope);
    res.drift = drift.mean * (t_end - spec.burn_in) / res.theta_ss.mean;
    res.drift_z = drift.std_error > 0.0 ? drift.mean / drift.std_error : 0.0;
    res.stationary = !(std::abs(res.drift_z) > 2.0 && std::abs(res.drift) > 0.01);
    res.acceptance_ratio =
        counters.candidates ? static_cast<double>(counters.accepted) / static_cast<double>(counters.candidates) : 0.0;
    res.violation_rate = counters.candidates
                             ? static_cast<double>(counters.umax_violations) / static_cast<double>(counters.candidates)
                             : 0.0;

    RadialHistogram pooled = reps.front().pooled;
    for (std::size_t r = 1; r < nrep; ++r) {
        pooled.accumulate(reps[r].pooled);
    }
    const MaxwellianParams m_bar1{rho, {}, res.theta_bar1};
    const MaxwellianParams m_pred{rho, {}, res.theta_pred};
    const MaxwellianParams m_meas{rho, {}, res.theta_ss.mean};
    for (int q = 0; q < 4; ++q) {
        res.l1_bar1[q] = weighted_L1_distance(pooled, m_bar1, q).value;
        res.l1_pred[q] = weighted_L1_distance(pooled, m_pred, q).value;
        res.l1_matched[q] = weighted_L1_distance(pooled, m_meas, q).value;
    }
    const auto h = relative_entropy(pooled, m_meas);
    res.h_rel = h.value;
    res.h_floor = h.bias_floor;

    // Expected L1 of the pooled noise alone, from the replica spread of each bin mass.
    if (nrep >= 2) {
        const std::size_t bins = pooled.bins();
        std::vector<double> mass(nrep);
        for (std::size_t b = 0; b <= bins; ++b) {
            for (std::size_t r = 0; r < nrep; ++r) {
                const auto& p = reps[r].pooled;
                mass[r] = b < bins ? p.bin_mass(b) : p.overflow_mass();
            }
            const double se = mean_stderr(mass).std_error;
            const double c = b < bins ? pooled.center(b) : pooled.r_max;
            for (int q = 0; q < 4; ++q) {
                res.l1_floor[q] += std::sqrt(2.0 / std::numbers::pi) * se * std::pow(1.0 + c * c, 0.5 * q);
            }
        }
    }
    const double interior = 4.0 * std::sqrt(res.theta_ss.mean);
    for (std::size_t b = 0; b < pooled.bins(); ++b) {
        if (pooled.center(b) < interior && pooled.counts[b] == 0.0) {
            ++res.empty_interior_shells;
        }
    }
    res.series = mean_series(reps);
    res.first_replica_tail = tail_of(std::move(reps.front()));
    return res;
}

nlohmann::json SteadyResult::to_json() const
{
    return {{"alpha", alpha},
            {"tau", tau},
            {"theta_pred", theta_pred},
            {"theta_bar1", theta_bar1},
            {"theta_ss", json_mean(theta_ss)},
            {"theta_rel_error", relative(theta_ss.mean, theta_pred)},
            {"energy", json_mean(energy)},
            {"residual", json_mean(residual)},
            {"drift", drift},
            {"drift_z", drift_z},
            {"stationary", stationary},
            {"L1_to_theta_bar1", json_array(l1_bar1)},
            {"L1_to_theta_pred", json_array(l1_pred)},
            {"L1_to_matched", json_array(l1_matched)},
            {"L1_noise_floor", json_array(l1_floor)},
            {"H_rel_pooled", h_rel},
            {"H_bias_floor", h_floor},
            {"empty_interior_shells", empty_interior_shells},
            {"replicas", replicas},
            {"snapshots_per_replica", samples},
            {"acceptance_ratio", acceptance_ratio},
            {"umax_violation_rate", violation_rate},
            {"ckp", ckp.to_json()}};
}

SweepResult alpha_sweep(const ExperimentSpec& spec)
{
    SweepResult res;
    auto alphas = spec.alpha_list();
    std::sort(alphas.begin(), alphas.end());
    for (double a : alphas) {
        res.points.push_back(steady_state(spec, a));
        res.ckp.merge(res.points.back().ckp);
    }
    std::vector<double> x, y;
    std::vector<const SteadyResult*> inelastic;
    for (const auto& p : res.points) {
        if (p.alpha < 1.0) {
            inelastic.push_back(&p);
            if (p.l1_bar1[2] > p.l1_floor[2]) {
                x.push_back(std::log(1.0 - p.alpha));
                y.push_back(std::log(p.l1_bar1[2]));
                res.fit_alphas.push_back(p.alpha);
            }
        }
    }
    if (x.size() >= 2) {
        res.slope_fit = least_squares(x, y);
    }
    res.distances_decreasing = inelastic.size() >= 2;
    res.theta_monotone = inelastic.size() >= 2;
    for (std::size_t k = 0; k + 1 < inelastic.size(); ++k) {
        const auto& lo = *inelastic[k];
        const auto& hi = *inelastic[k + 1];
        if (!(hi.l1_bar1[2] < lo.l1_bar1[2])) {
            res.distances_decreasing = false;
        }
        if (!(std::abs(hi.theta_ss.mean - hi.theta_bar1) < std::abs(lo.theta_ss.mean - lo.theta_bar1))) {
            res.theta_monotone = false;
        }
    }
    return res;
}

bool SweepResult::passed() const
{
    return distances_decreasing && theta_monotone && fit_alphas.size() >= 3 && slope_fit.slope >= slope_threshold &&
           ckp.violations == 0;
}

nlohmann::json SweepResult::to_json() const
{
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points) {
        pts.push_back(p.to_json());
    }
    return {{"points", pts},
            {"slope", slope_fit.slope},
            {"slope_stderr", slope_fit.slope_se},
            {"slope_r_squared", slope_fit.r_squared},
            {"slope_threshold", slope_threshold},
            {"fit_alphas", fit_alphas},
            {"distances_decreasing", distances_decreasing},
            {"theta_monotone", theta_monotone},
            {"ckp", ckp.to_json()},
            {"verdict", passed() ? "PASS" : "FAIL"}};
}

void SweepResult::write_csv(std::ostream& out) const
{
    out << "alpha,tau,theta_ss,theta_ss_err,theta_pred,theta_bar1,residual,residual_err,L1q2_bar1,L1q2_pred,"
           "L1q2_floor,stationary\n";
    for (const auto& p : points) {
        out << format_real(p.alpha) << ',' << format_real(p.tau) << ',' << format_real(p.theta_ss.mean) << ','
            << format_real(p.theta_ss.std_error) << ',' << format_real(p.theta_pred) << ','
            << format_real(p.theta_bar1) << ',' << format_real(p.residual.mean) << ','
            << format_real(p.residual.std_error) << ',' << format_real(p.l1_bar1[2]) << ','
            << format_real(p.l1_pred[2]) << ',' << format_real(p.l1_floor[2]) << ',' << (p.stationary ? 1 : 0)
            << '\n';
    }
}

RelaxationResult relaxation_fit(const ExperimentSpec& spec)
{
    if (!spec.base.tau_mode.rescaled) {
        reject("tau", "relaxation requires the rescaled heat bath");
    }
    const int n = spec.base.dimension;
    const double rho = spec.base.rho;
    const auto kc = kernel_constants(spec.base.cross_section, n);
    const auto pred = SteadyPrediction::make(rho, kc, n);
    const double delta = spec.resolved_delta();
    const double sign = delta > 0.0 ? 1.0 : -1.0;

    RelaxationResult res;
    for (double alpha : spec.alpha_list()) {
        RelaxationPoint pt;
        pt.alpha = alpha;
        pt.delta = delta;
        pt.energy_bar = energy_bar_for(spec, pred, alpha);
        pt.mu_pred = pred.mu_alpha(alpha);
        pt.mu_alternative = pred.mu_alpha_alternative(alpha);
        const double energy0 = pt.energy_bar * (1.0 + delta);
        const SimConfig cfg = spec.resolve_config(alpha, energy0 / (rho * n));
        const double t_end = spec.resolved_t_end(alpha);

        auto reps = run_replicas(spec.replicas, spec.threads, [&](std::size_t r) {
            ReplicaPlan plan;
            plan.config = cfg;
            plan.config.seed = replica_seed(spec.base.seed, r);
            plan.init = spec.init;
            plan.target_energy = energy0;
            plan.t_end = t_end;
            plan.observer = observer_for(spec, cfg, pt.energy_bar);
            return run_replica(plan);
        });
        const std::size_t len = common_length(reps);
        const double ebar = pt.energy_bar;
        auto col = column(reps, len, [&](const ObservableRecord& r) { return sign * (r.energy - ebar); });
        std::vector<std::vector<double>> per(reps.size(), std::vector<double>(len));
        for (std::size_t r = 0; r < reps.size(); ++r) {
            for (std::size_t k = 0; k < len; ++k) {
                per[r][k] = sign * (reps[r].records[k].energy - ebar);
            }
            pt.ckp.merge(reps[r].ckp);
        }
        for (std::size_t k = 0; k < len; ++k) {
            pt.times.push_back(reps.front().records[k].time);
        }
        pt.offset = col.mean;
        pt.offset_err = col.err;
        pt.mu = fit_log_linear(pt.times, col.mean, col.err, per);
        if (pt.mu.valid) {
            const double dev_pred = relative(pt.mu.estimate, pt.mu_pred);
            const double dev_alt = relative(pt.mu.estimate, pt.mu_alternative);
            pt.supported = dev_pred <= dev_alt ? "theta_bar1" : "unit";
            pt.supported_deviation = std::min(dev_pred, dev_alt);
        }
        for (auto& v : pt.offset) {
            v *= sign;
        }
        res.ckp.merge(pt.ckp);
        res.points.push_back(std::move(pt));
    }

    const RelaxationPoint* p98 = nullptr;
    const RelaxationPoint* p96 = nullptr;
    for (const auto& p : res.points) {
        if (std::abs(p.alpha - 0.98) < 1e-12) {
            p98 = &p;
        }
        if (std::abs(p.alpha - 0.96) < 1e-12) {
            p96 = &p;
        }
    }
    if (p98 && p96 && p98->mu.valid && p96->mu.valid) {
        const double a = p98->mu.estimate;
        const double b = p96->mu.estimate;
        const double ratio = a / b;
        const double se = std::abs(ratio) * std::hypot(p98->mu.std_error / a, p96->mu.std_error / b);
        res.ratio = MeanError{ratio, se};
    }
    return res;
}

bool RelaxationResult::passed() const
{
    for (const auto& p : points) {
        if (!p.mu.valid || !(p.mu.estimate < 0.0) || p.supported_deviation > 0.4) {
            return false;
        }
    }
    if (ratio && std::abs(ratio->mean - 0.5) > 0.15) {
        return false;
    }
    return !points.empty() && ckp.violations == 0;
}

nlohmann::json RelaxationPoint::to_json() const
{
    return {{"alpha", alpha},
            {"energy_bar", energy_bar},
            {"delta", delta},
            {"mu_hat", mu.to_json()},
            {"mu_pred", mu_pred},
            {"mu_alternative", mu_alternative},
            {"supported_constant", supported},
            {"supported_deviation", supported_deviation},
            {"ckp", ckp.to_json()}};
}

nlohmann::json RelaxationResult::to_json() const
{
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points) {
        pts.push_back(p.to_json());
    }
    nlohmann::json j{{"points", pts}, {"ckp", ckp.to_json()}, {"verdict", passed() ? "PASS" : "FAIL"}};
    if (ratio) {
        j["ratio_098_096"] = json_mean(*ratio);
    }
    return j;
}

void RelaxationResult::write_csv(std::ostream& out) const
{
    out << "alpha,time,energy_offset,energy_offset_err\n";
    for (const auto& p : points) {
        for (std::size_t k = 0; k < p.times.size(); ++k) {
            out << format_real(p.alpha) << ',' << format_real(p.times[k]) << ',' << format_real(p.offset[k]) << ','
                << format_real(p.offset_err[k]) << '\n';
        }
    }
}

LyapunovResult lyapunov_trace(const ExperimentSpec& spec)
{
    if (!spec.base.tau_mode.rescaled) {
        reject("tau", "the Liapunov trace requires the rescaled heat bath");
    }
    const int n = spec.base.dimension;
    const double rho = spec.base.rho;
    const auto kc = kernel_constants(spec.base.cross_section, n);
    const auto pred = SteadyPrediction::make(rho, kc, n);

    LyapunovResult res;
    res.alpha = spec.base.alpha;
    res.energy_bar = energy_bar_for(spec, pred, res.alpha);
    const double energy0 = res.energy_bar * (1.0 + spec.resolved_delta());
    const SimConfig cfg = spec.resolve_config(res.alpha, energy0 / (rho * n));
    const double t_end = spec.resolved_t_end(res.alpha);

    auto reps = run_replicas(spec.replicas, spec.threads, [&](std::size_t r) {
        ReplicaPlan plan;
        plan.config = cfg;
        plan.config.seed = replica_seed(spec.base.seed, r);
        plan.init = spec.init;
        plan.target_energy = energy0;
        plan.t_end = t_end;
        plan.observer = observer_for(spec, cfg, res.energy_bar);
        return run_replica(plan);
    });
    for (const auto& r : reps) {
        res.ckp.merge(r.ckp);
    }
    const std::size_t len = common_length(reps);
    const double ebar = res.energy_bar;
    for (std::size_t k = 0; k < len; ++k) {
        res.times.push_back(reps.front().records[k].time);
    }
    auto h1 = column(reps, len, [](const ObservableRecord& r) { return r.h1; });
    auto ent = column(reps, len, [](const ObservableRecord& r) { return r.h_rel; });
    auto eng = column(reps, len, [&](const ObservableRecord& r) { return (r.energy - ebar) * (r.energy - ebar); });
    res.h1 = h1.mean;
    res.h1_err = h1.err;
    res.entropy = ent.mean;
    res.energy_term = eng.mean;

    // Smoothed series: means over consecutive blocks of `window` snapshots.
    const std::size_t blocks = len / res.window;
    std::vector<std::vector<double>> block_rep(reps.size(), std::vector<double>(blocks, 0.0));
    for (std::size_t r = 0; r < reps.size(); ++r) {
        for (std::size_t b = 0; b < blocks; ++b) {
            double s = 0.0;
            for (std::size_t k = b * res.window; k < (b + 1) * res.window; ++k) {
                s += reps[r].records[k].h1;
            }
            block_rep[r][b] = s / static_cast<double>(res.window);
        }
    }
    std::vector<double> x(reps.size());
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t r = 0; r < reps.size(); ++r) {
            x[r] = block_rep[r][b];
        }
        const auto m = mean_stderr(x);
        res.block_h1.push_back(m.mean);
        res.block_err.push_back(m.std_error);
        res.block_times.push_back(0.5 * (res.times[b * res.window] + res.times[(b + 1) * res.window - 1]));
    }
    res.monotone = blocks >= 2;
    for (std::size_t b = 0; b + 1 < blocks; ++b) {
        const double rise = res.block_h1[b + 1] - res.block_h1[b];
        const double tol = 2.0 * std::hypot(res.block_err[b], res.block_err[b + 1]);
        const double excess = tol > 0.0 ? rise / tol : (rise > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        res.worst_excess = b == 0 ? excess : std::max(res.worst_excess, excess);
        if (rise > tol) {
            res.monotone = false;
        }
    }

    std::vector<std::vector<double>> per_ent(reps.size(), std::vector<double>(len));
    std::vector<std::vector<double>> per_eng(reps.size(), std::vector<double>(len));
    for (std::size_t r = 0; r < reps.size(); ++r) {
        for (std::size_t k = 0; k < len; ++k) {
            const auto& rec = reps[r].records[k];
            per_ent[r][k] = rec.h_rel;
            per_eng[r][k] = (rec.energy - ebar) * (rec.energy - ebar);
        }
    }
    res.entropy_fold = fit_decay_to_tail(res.times, ent, per_ent);
    res.energy_fold = fit_decay_to_tail(res.times, eng, per_eng);
    if (res.entropy_fold.valid && res.energy_fold.valid) {
        res.timescale_ratio = res.energy_fold.estimate / res.entropy_fold.estimate;
    }
    res.series = mean_series(reps);
    res.first_replica_tail = tail_of(std::move(reps.front()));
    return res;
}

bool LyapunovResult::passed() const
{
    return monotone && timescale_ratio && *timescale_ratio >= timescale_ratio_threshold && ckp.violations == 0;
}

nlohmann::json LyapunovResult::to_json() const
{
    nlohmann::json j{{"alpha", alpha},
                     {"energy_bar", energy_bar},
                     {"smoothing_window", window},
                     {"blocks", block_h1.size()},
                     {"monotone", monotone},
                     {"worst_excess", worst_excess},
                     {"entropy_efold", entropy_fold.to_json()},
                     {"energy_efold", energy_fold.to_json()},
                     {"ckp", ckp.to_json()},
                     {"verdict", passed() ? "PASS" : "FAIL"}};
    j["timescale_ratio"] = timescale_ratio ? nlohmann::json(*timescale_ratio) : nlohmann::json(nullptr);
    return j;
}

void LyapunovResult::write_csv(std::ostream& out) const
{
    out << "time,H1,H1_err,H_rel,energy_term\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        out << format_real(times[k]) << ',' << format_real(h1[k]) << ',' << format_real(h1_err[k]) << ','
            << format_real(entropy[k]) << ',' << format_real(energy_term[k]) << '\n';
    }
}

ScalingResult scaling_check(const ExperimentSpec& spec)
{
    if (!(spec.lambda >= 0.5 && spec.lambda <= 2.0)) {
        reject("lambda", "must lie in [0.5, 2]");
    }
    const double lambda = spec.lambda;
    ScalingResult res;
    res.lambda = lambda;
    res.alpha = spec.base.alpha;
    const double theta0 = spec.init.nominal_temperature(spec.base.dimension);
    SimConfig f = spec.resolve_config(res.alpha, theta0);
    res.tau_f = f.tau();
    res.tau_g = res.tau_f / (lambda * lambda * lambda);
    f.tau_mode = TauMode{false, res.tau_f};
    SimConfig g = f;
    g.tau_mode = TauMode{false, res.tau_g};
    g.dt = lambda * f.dt;
    g.umax_initial = f.umax_initial / lambda;
    g.validate();
    const double t_end = spec.resolved_t_end(res.alpha);

    auto plan_for = [&](const SimConfig& c, std::size_t r, std::uint64_t arm, double scale, double t) {
        ReplicaPlan plan;
        plan.config = c;
        plan.config.seed = replica_seed(spec.base.seed, r, arm);
        plan.init = spec.init;
        plan.target_energy = c.rho * c.dimension * theta0;
        plan.t_end = t;
        plan.init_scale = scale;
        plan.observer = observer_for(spec, c, c.rho * c.dimension * theta0);
        return plan;
    };
    const std::uint64_t arm_g = spec.coupled ? 0 : 1;
    auto reps_f = run_replicas(spec.replicas, spec.threads,
                               [&](std::size_t r) { return run_replica(plan_for(f, r, 0, 1.0, t_end)); });
    auto reps_g = run_replicas(spec.replicas, spec.threads, [&](std::size_t r) {
        return run_replica(plan_for(g, r, arm_g, 1.0 / lambda, lambda * t_end));
    });
    for (const auto& r : reps_f) {
        res.ckp.merge(r.ckp);
    }
    for (const auto& r : reps_g) {
        res.ckp.merge(r.ckp);
    }
    const std::size_t len = std::min(common_length(reps_f), common_length(reps_g));
    auto th_f = column(reps_f, len, [](const ObservableRecord& r) { return r.theta; });
    auto th_g = column(reps_g, len, [](const ObservableRecord& r) { return r.theta; });
    for (std::size_t k = 0; k < len; ++k) {
        res.times.push_back(reps_f.front().records[k].time);
        res.theta_f.push_back(th_f.mean[k]);
        res.theta_g_scaled.push_back(lambda * lambda * th_g.mean[k]);
        res.deviation.push_back(relative(res.theta_g_scaled.back(), res.theta_f.back()));
        res.max_deviation = std::max(res.max_deviation, res.deviation.back());
    }
    return res;
}

nlohmann::json ScalingResult::to_json() const
{
    return {{"lambda", lambda},
            {"alpha", alpha},
            {"tau_f", tau_f},
            {"tau_g", tau_g},
            {"snapshots", times.size()},
            {"max_relative_deviation", max_deviation},
            {"tolerance", tolerance},
            {"ckp", ckp.to_json()},
            {"verdict", passed() ? "PASS" : "FAIL"}};
}

void ScalingResult::write_csv(std::ostream& out) const
{
    out << "time,theta_f,theta_g_scaled,relative_deviation\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        out << format_real(times[k]) << ',' << format_real(theta_f[k]) << ',' << format_real(theta_g_scaled[k])
            << ',' << format_real(deviation[k]) << '\n';
    }
}

}  // namespace granbath
