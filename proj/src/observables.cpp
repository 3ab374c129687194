#include "granbath/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "granbath/errors.hpp"
#include "granbath/format.hpp"
#include "granbath/quadrature.hpp"

namespace granbath {

MomentSet moments(const VelocityEnsemble& e)
{
    require(e.size() >= 1, "moments: empty ensemble");
    const auto n = static_cast<std::size_t>(e.dimension);
    const std::size_t np = e.size();
    MomentSet ms;
    ms.mass = e.rho;
    ms.momentum = e.momentum();
    double s2 = 0.0, s3 = 0.0, s4 = 0.0, s6 = 0.0, s8 = 0.0;
    for (std::size_t i = 0; i < np; ++i) {
        double r2 = 0.0;
        for (std::size_t d = 0; d < n; ++d) {
            const double c = e.velocities[i * n + d];
            r2 += c * c;
        }
        const double r4 = r2 * r2;
        s2 += r2;
        s3 += r2 * std::sqrt(r2);
        s4 += r4;
        s6 += r4 * r2;
        s8 += r4 * r4;
    }
    const double w = e.weight();
    ms.m1 = w * s2;
    ms.m1_5 = w * s3;
    ms.m2 = w * s4;
    ms.m3 = w * s6;
    ms.m4 = w * s8;
    ms.theta = ms.m1 / (e.rho * e.dimension);

    // Degenerate when all particles share one velocity.
    double spread = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
        const double mean = ms.momentum[d] / e.rho;
        for (std::size_t i = 0; i < np; ++i) {
            const double x = e.velocities[i * n + d] - mean;
            spread += x * x;
        }
    }
    ms.degenerate = spread == 0.0;
    return ms;
}

Estimate dissipation_DE_hat(const VelocityEnsemble& e, double b1, std::size_t pair_budget, RandomStream& rng)
{
    require(e.size() >= 2, "dissipation_DE_hat: need at least two particles");
    require(pair_budget >= 1, "dissipation_DE_hat: pair budget must be positive");
    const int n = e.dimension;
    const std::size_t np = e.size();
    const double scale = b1 * e.rho * e.rho;
    auto cube_speed = [&](std::size_t i, std::size_t j) {
        const double* a = e.velocities.data() + i * static_cast<std::size_t>(n);
        const double* b = e.velocities.data() + j * static_cast<std::size_t>(n);
        double s = 0.0;
        for (int d = 0; d < n; ++d) {
            const double u = a[d] - b[d];
            s += u * u;
        }
        return s * std::sqrt(s);
    };

    Estimate est;
    if (np <= exhaustive_pair_limit) {
        // Row means h_i = mean_j |u_ij|^3; the U-statistic variance is ~ 4 Var(h_i) / Np.
        std::vector<double> row(np, 0.0);
        for (std::size_t i = 0; i < np; ++i) {
            for (std::size_t j = i + 1; j < np; ++j) {
                const double c = cube_speed(i, j);
                row[i] += c;
                row[j] += c;
            }
        }
        double total = 0.0;
        for (double& r : row) {
            total += r;
            r /= static_cast<double>(np - 1);
        }
        const double mean = total / (static_cast<double>(np) * static_cast<double>(np - 1));
        double var = 0.0;
        for (double r : row) {
            var += (r - mean) * (r - mean);
        }
        var /= static_cast<double>(np > 1 ? np - 1 : 1);
        est.value = scale * mean;
        est.std_error = scale * 2.0 * std::sqrt(var / static_cast<double>(np));
        return est;
    }

    double sum = 0.0;
    double sum2 = 0.0;
    for (std::size_t k = 0; k < pair_budget; ++k) {
        const std::size_t i = rng.index(np);
        std::size_t j = rng.index(np - 1);
        if (j >= i) {
            ++j;
        }
        const double c = cube_speed(i, j);
        sum += c;
        sum2 += c * c;
    }
    const double m = static_cast<double>(pair_budget);
    const double mean = sum / m;
    const double var = pair_budget > 1 ? std::max(0.0, (sum2 - m * mean * mean) / (m - 1.0)) : 0.0;
    est.value = scale * mean;
    est.std_error = scale * std::sqrt(var / m);
    return est;
}

double stationarity_residual(double de_hat, double alpha, double tau, double rho, int dimension)
{
    require(tau > 0.0, "stationarity_residual: tau must be positive");
    return (1.0 - alpha * alpha) * de_hat / (2.0 * dimension * rho * tau) - 1.0;
}

double stationarity_residual(const VelocityEnsemble& e, double alpha, double tau, const KernelConstants& kc,
                             std::size_t pair_budget, RandomStream& rng)
{
    const auto de = dissipation_DE_hat(e, kc.b1, pair_budget, rng);
    return stationarity_residual(de.value, alpha, tau, e.rho, e.dimension);
}

double quadrupole(const VelocityEnsemble& e)
{
    const auto n = static_cast<std::size_t>(e.dimension);
    double s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double x = e.velocities[i * n];
        const double y = e.velocities[i * n + 1];
        s += x * x - y * y;
    }
    return e.weight() * s;
}

double RadialHistogram::shell_volume(std::size_t b) const
{
    const double a = lower_edge(b);
    const double c = upper_edge(b);
    return unit_sphere_area(dimension) * (std::pow(c, dimension) - std::pow(a, dimension)) / dimension;
}

void RadialHistogram::accumulate(const RadialHistogram& other)
{
    require(other.dimension == dimension && other.bins() == bins() && other.r_max == r_max,
            "RadialHistogram::accumulate: binning mismatch");
    for (std::size_t b = 0; b < bins(); ++b) {
        counts[b] += other.counts[b];
    }
    overflow += other.overflow;
    samples += other.samples;
}

RadialHistogram radial_histogram(const VelocityEnsemble& e, std::size_t bins, std::optional<double> r_max)
{
    require(bins >= 8, "radial_histogram: need at least 8 bins");
    RadialHistogram h;
    h.dimension = e.dimension;
    h.rho = e.rho;
    if (r_max) {
        require(*r_max > 0.0, "radial_histogram: r_max must be positive");
        h.r_max = *r_max;
    } else {
        const double theta = e.energy() / (e.rho * e.dimension);
        h.r_max = theta > 0.0 ? default_r_max_factor * std::sqrt(theta) : 1.0;
    }
    h.counts.assign(bins, 0.0);
    const auto n = static_cast<std::size_t>(e.dimension);
    const double inv_width = static_cast<double>(bins) / h.r_max;
    for (std::size_t i = 0; i < e.size(); ++i) {
        double r2 = 0.0;
        for (std::size_t d = 0; d < n; ++d) {
            const double c = e.velocities[i * n + d];
            r2 += c * c;
        }
        const double r = std::sqrt(r2);
        if (r >= h.r_max) {
            h.overflow += 1.0;
            continue;
        }
        const auto b = std::min(bins - 1, static_cast<std::size_t>(r * inv_width));
        h.counts[b] += 1.0;
    }
    h.samples = static_cast<double>(e.size());
    return h;
}

RadialHistogram radial_histogram_of(const MaxwellianParams& m, int dimension, std::size_t bins, double r_max,
                                    double samples)
{
    require(bins >= 8 && r_max > 0.0 && samples > 0.0, "radial_histogram_of: invalid binning");
    RadialHistogram h;
    h.dimension = dimension;
    h.rho = m.rho;
    h.r_max = r_max;
    h.counts.assign(bins, 0.0);
    h.samples = samples;
    for (std::size_t b = 0; b < bins; ++b) {
        h.counts[b] = samples * maxwellian_shell_mass(1.0, m.theta, dimension, h.lower_edge(b), h.upper_edge(b));
    }
    h.overflow = samples * maxwellian_shell_mass(1.0, m.theta, dimension, r_max, std::numeric_limits<double>::infinity());
    return h;
}

namespace {

double maxwellian_bin_mass(const RadialHistogram& h, const MaxwellianParams& m, std::size_t b)
{
    return maxwellian_shell_mass(m.rho, m.theta, h.dimension, h.lower_edge(b), h.upper_edge(b));
}

double maxwellian_overflow_mass(const RadialHistogram& h, const MaxwellianParams& m)
{
    return maxwellian_shell_mass(m.rho, m.theta, h.dimension, h.r_max, std::numeric_limits<double>::infinity());
}

}  // namespace

EntropyEstimate relative_entropy(const RadialHistogram& h, const MaxwellianParams& m)
{
    require(h.samples > 0.0, "relative_entropy: empty histogram");
    require(m.theta > 0.0 && m.rho > 0.0, "relative_entropy: invalid Maxwellian");
    EntropyEstimate est;
    est.bias_floor = h.rho * static_cast<double>(h.bins()) / h.samples;
    auto term = [&](double mf, double mm) {
        if (mf <= 0.0) {
            return 0.0;
        }
        if (!(mm > 0.0)) {
            ++est.excluded_bins;
            return 0.0;
        }
        return mf * std::log(mf / mm);
    };
    for (std::size_t b = 0; b < h.bins(); ++b) {
        est.value += term(h.bin_mass(b), maxwellian_bin_mass(h, m, b));
    }
    est.value += term(h.overflow_mass(), maxwellian_overflow_mass(h, m));
    return est;
}

DistanceEstimate weighted_L1_distance(const RadialHistogram& h, const MaxwellianParams& m, int q)
{
    require(q >= 0 && q <= 3, "weighted_L1_distance: q must be 0, 1, 2 or 3");
    require(h.samples > 0.0, "weighted_L1_distance: empty histogram");
    DistanceEstimate est;
    for (std::size_t b = 0; b < h.bins(); ++b) {
        const double c = h.center(b);
        const double weight = std::pow(1.0 + c * c, 0.5 * q);
        est.value += std::abs(h.bin_mass(b) - maxwellian_bin_mass(h, m, b)) * weight;
    }
    const double tail = std::abs(h.overflow_mass() - maxwellian_overflow_mass(h, m));
    est.overflow_term = tail * std::pow(1.0 + h.r_max * h.r_max, 0.5 * q);
    est.overflow_lower_bound = q > 0 && tail > 0.0;
    est.value += est.overflow_term;
    return est;
}

MaxwellianParams matched_maxwellian(const MomentSet& ms)
{
    MaxwellianParams m;
    m.rho = ms.mass;
    m.theta = ms.theta;
    return m;
}

double ckp_slack(const RadialHistogram& h, const MomentSet& ms)
{
    const auto m = matched_maxwellian(ms);
    const double entropy = relative_entropy(h, m).value;
    const double l1 = weighted_L1_distance(h, m, 0).value;
    return 2.0 * ms.mass * entropy - l1 * l1;
}

double lyapunov_H1(const MomentSet& ms, const RadialHistogram& h, double energy_bar)
{
    const double entropy = relative_entropy(h, matched_maxwellian(ms)).value;
    const double de = ms.m1 - energy_bar;
    return entropy + de * de;
}

double closure_energy(const SteadyPrediction& prediction, double alpha) { return prediction.energy_pred(alpha); }

void ObservableSeries::push(const ObservableRecord& r)
{
    if (!records_.empty() && !(r.time > records_.back().time)) {
        throw ContractViolation("ObservableSeries: time must be strictly increasing");
    }
    records_.push_back(r);
}

const char* ObservableSeries::csv_header()
{
    return "time,rho,theta,m2,m3,DE_hat,residual,H_rel,CKP_slack,H1,L1q0,L1q1,L1q2,L1q3";
}

void ObservableSeries::write_csv(std::ostream& out) const
{
    out << csv_header() << '\n';
    for (const auto& r : records_) {
        out << format_real(r.time) << ',' << format_real(r.rho) << ',' << format_real(r.theta) << ','
            << format_real(r.m2) << ',' << format_real(r.m3) << ',' << format_real(r.de_hat) << ','
            << format_real(r.residual) << ',' << format_real(r.h_rel) << ',' << format_real(r.ckp_slack) << ','
            << format_real(r.h1);
        for (double d : r.l1) {
            out << ',' << format_real(d);
        }
        out << '\n';
    }
}

ObservableRecord observe(const SimState& state, const ObserverSettings& settings, std::uint64_t seed)
{
    const auto& e = state.ensemble;
    const auto ms = moments(e);
    const auto h = radial_histogram(e, settings.bins);
    RandomStream rng(derive_seed(derive_seed(seed, stream_tag::observe), state.steps));

    ObservableRecord r;
    r.time = state.time;
    r.rho = e.rho;
    r.theta = ms.theta;
    r.energy = ms.m1;
    r.m2 = ms.m2;
    r.m3 = ms.m3;
    r.de_hat = dissipation_DE_hat(e, settings.b1, settings.pair_budget, rng).value;
    r.residual = settings.tau > 0.0 ? stationarity_residual(r.de_hat, settings.alpha, settings.tau, e.rho, e.dimension)
                                    : std::numeric_limits<double>::quiet_NaN();
    if (ms.theta > 0.0) {
        const auto m = matched_maxwellian(ms);
        const auto entropy = relative_entropy(h, m);
        r.h_rel = entropy.value;
        r.h_floor = entropy.bias_floor;
        for (int q = 0; q <= 3; ++q) {
            r.l1[q] = weighted_L1_distance(h, m, q).value;
        }
        r.ckp_slack = 2.0 * ms.mass * r.h_rel - r.l1[0] * r.l1[0];
        const double de = ms.m1 - settings.energy_bar;
        r.h1 = r.h_rel + de * de;
    }
    return r;
}

}  // namespace granbath
