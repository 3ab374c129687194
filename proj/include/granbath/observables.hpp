#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "granbath/analytics.hpp"
#include "granbath/dsmc.hpp"

namespace granbath {

/// Homogeneous moments m_k = int f |v|^{2k} for 2k in {2, 3, 4, 6, 8}.
struct MomentSet
{
    double mass = 0.0;
    std::vector<double> momentum;
    double m1 = 0.0;    // energy
    double m1_5 = 0.0;  // int f |v|^3
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    double theta = 0.0;  // m1 / (rho N)
    bool degenerate = false;
};

MomentSet moments(const VelocityEnsemble& e);

struct Estimate
{
    double value = 0.0;
    double std_error = 0.0;
};

/// Ensembles up to this size are evaluated over all pairs.
inline constexpr std::size_t exhaustive_pair_limit = 4096;

/**
 * Estimator of D_E(f) = b1 int int f f_* |u|^3: b1 rho^2 times the mean of
 * |v_i - v_j|^3 over pairs i != j. Exhaustive (with a U-statistic standard
 * error) when Np <= 4096, otherwise over `pair_budget` uniform random pairs
 * drawn from `rng`.
 */
Estimate dissipation_DE_hat(const VelocityEnsemble& e, double b1, std::size_t pair_budget, RandomStream& rng);

/// (1 - alpha^2) D_E / (2 N rho tau) - 1.
double stationarity_residual(double de_hat, double alpha, double tau, double rho, int dimension);

double stationarity_residual(const VelocityEnsemble& e, double alpha, double tau, const KernelConstants& kc,
                             std::size_t pair_budget, RandomStream& rng);

/// sum_i w (v_x^2 - v_y^2): vanishes for isotropic laws.
double quadrupole(const VelocityEnsemble& e);

/**
 * Speed histogram of an isotropic distribution. Bin b covers
 * [b h, (b + 1) h), h = r_max / bins; speeds >= r_max go to the overflow.
 * Counts may be accumulated over several ensembles of equal mass.
 */
struct RadialHistogram
{
    int dimension = 3;
    double rho = 1.0;
    double r_max = 1.0;
    std::vector<double> counts;
    double overflow = 0.0;
    double samples = 0.0;

    std::size_t bins() const noexcept { return counts.size(); }
    double width() const noexcept { return r_max / static_cast<double>(bins()); }
    double lower_edge(std::size_t b) const noexcept { return width() * static_cast<double>(b); }
    double upper_edge(std::size_t b) const noexcept { return width() * static_cast<double>(b + 1); }
    double center(std::size_t b) const noexcept { return width() * (static_cast<double>(b) + 0.5); }
    double shell_volume(std::size_t b) const;

    double bin_mass(std::size_t b) const noexcept { return rho * counts[b] / samples; }
    double overflow_mass() const noexcept { return rho * overflow / samples; }
    /// Estimated density of f on the shell.
    double density(std::size_t b) const { return bin_mass(b) / shell_volume(b); }

    /// Adds counts from a histogram with identical binning.
    void accumulate(const RadialHistogram& other);
};

inline constexpr std::size_t default_bins = 64;
inline constexpr double default_r_max_factor = 8.0;

/// Histogram of |v| over the ensemble; r_max = 8 sqrt(theta) when not given.
RadialHistogram radial_histogram(const VelocityEnsemble& e, std::size_t bins = default_bins,
                                 std::optional<double> r_max = std::nullopt);

/// Exact bin masses of a centred Maxwellian (counts normalised to `samples`).
RadialHistogram radial_histogram_of(const MaxwellianParams& m, int dimension, std::size_t bins, double r_max,
                                    double samples = 1.0);

struct EntropyEstimate
{
    double value = 0.0;
    double bias_floor = 0.0;        // rho * bins / samples
    std::size_t excluded_bins = 0;  // nonempty bins where the Maxwellian underflows
};

/// sum_b f_b ln(f_b / M_b) vol_b with M_b the shell-averaged Maxwellian; the
/// overflow region is treated as one more bin. 0 ln 0 = 0.
EntropyEstimate relative_entropy(const RadialHistogram& h, const MaxwellianParams& m);

struct DistanceEstimate
{
    double value = 0.0;
    double overflow_term = 0.0;  // |f - M| mass beyond r_max times <r_max>^q
    bool overflow_lower_bound = false;
};

/// sum_b |f_b - M_b| <r_b>^q vol_b plus the overflow contribution, q in {0,1,2,3}.
DistanceEstimate weighted_L1_distance(const RadialHistogram& h, const MaxwellianParams& m, int q);

/// Maxwellian with the ensemble's mass, zero mean and its temperature.
MaxwellianParams matched_maxwellian(const MomentSet& ms);

/// 2 rho H(f|M[f]) - ||f - M[f]||_1^2; non-negative by the Csiszar-Kullback-Pinsker inequality.
double ckp_slack(const RadialHistogram& h, const MomentSet& ms);

/// H(f | M[f]) + (E - E_bar)^2.
double lyapunov_H1(const MomentSet& ms, const RadialHistogram& h, double energy_bar);

/// Steady energy used by lyapunov_H1: the closure value rho N theta_pred(alpha).
double closure_energy(const SteadyPrediction& prediction, double alpha);

/// One row of an observable time series.
struct ObservableRecord
{
    double time = 0.0;
    double rho = 0.0;
    double theta = 0.0;
    double energy = 0.0;
    double m2 = 0.0;
    double m3 = 0.0;
    double de_hat = 0.0;
    double residual = 0.0;
    double h_rel = 0.0;
    double h_floor = 0.0;
    double ckp_slack = 0.0;
    double h1 = 0.0;
    double l1[4] = {0.0, 0.0, 0.0, 0.0};
};

/// Time-ordered records of one run.
class ObservableSeries
{
public:
    /// Appends a record; throws ContractViolation unless time strictly increases.
    void push(const ObservableRecord& r);

    const std::vector<ObservableRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    /// CSV columns: time,rho,theta,m2,m3,DE_hat,residual,H_rel,CKP_slack,H1,L1q0,L1q1,L1q2,L1q3
    void write_csv(std::ostream& out) const;

    static const char* csv_header();

private:
    std::vector<ObservableRecord> records_;
};

struct ObserverSettings
{
    double alpha = 1.0;
    double tau = 0.0;
    double b1 = 0.0;
    double energy_bar = 0.0;
    std::size_t bins = default_bins;
    std::size_t pair_budget = 20000;
};

/// Evaluates every series column on the current state. Pair sampling uses a
/// stream derived from (seed, step) so records are reproducible.
ObservableRecord observe(const SimState& state, const ObserverSettings& settings, std::uint64_t seed);

}  // namespace granbath
