#include "granbath/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>

#include "granbath/errors.hpp"
#include "granbath/format.hpp"
#include "granbath/io.hpp"
#include "granbath/validation.hpp"

#ifndef GRANBATH_VERSION
#define GRANBATH_VERSION "0.0.0"
#endif

namespace granbath {

namespace {

std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) {
        return {};
    }
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_real(const std::string& key, const std::string& value)
{
    double x = 0.0;
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, x);
    if (ec != std::errc() || ptr != end || !std::isfinite(x)) {
        throw ConfigError(key, "expected a real number, got '" + value + "'");
    }
    return x;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value)
{
    std::uint64_t x = 0;
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, x);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
    }
    return x;
}

bool to_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "on" || value == "yes" || value == "1") {
        return true;
    }
    if (value == "false" || value == "off" || value == "no" || value == "0") {
        return false;
    }
    throw ConfigError(key, "expected true or false, got '" + value + "'");
}

std::vector<double> to_reals(const std::string& key, const std::string& value)
{
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(to_real(key, trim(item)));
    }
    if (out.empty()) {
        throw ConfigError(key, "expected a comma-separated list of reals");
    }
    return out;
}

CrossSection to_cross_section(const std::string& key, const std::string& value, int dimension)
{
    const auto colon = value.find(':');
    const std::string family = value.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string() : value.substr(colon + 1);
    try {
        if (family == "constant") {
            return CrossSection::constant(arg.empty() ? 1.0 : to_real(key, arg));
        }
        if (family == "hard_sphere") {
            return CrossSection::hard_sphere(arg.empty() ? 1.0 : to_real(key, arg), dimension);
        }
        if (family == "table" && !arg.empty()) {
            return CrossSection::load_table(arg);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
    }
    throw ConfigError(key, "expected constant[:b], hard_sphere[:b] or table:<path>, got '" + value + "'");
}

std::string key_of(const std::string& message)
{
    const auto colon = message.find(':');
    return colon == std::string::npos ? std::string("config") : message.substr(0, colon);
}

std::string strip_key(const std::string& message)
{
    const auto colon = message.find(": ");
    return colon == std::string::npos ? message : message.substr(colon + 2);
}

}  // namespace

Settings parse_settings(std::istream& in, const std::string& source)
{
    Settings s;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(number), "expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError(source + ":" + std::to_string(number), "expected 'key = value'");
        }
        s[key] = value;
    }
    return s;
}

Settings read_settings(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config", "cannot read " + path.string());
    }
    return parse_settings(in, path.string());
}

const std::vector<std::pair<std::string, std::string>>& known_settings()
{
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"alpha", "0.95 (lyapunov: 0.99)"},
        {"alphas", "sweep: 0.90,0.93,0.96,0.98,0.99; relax: unset"},
        {"rho", "1"},
        {"dim", "3"},
        {"Np", "20000 (scaling: 50000)"},
        {"seed", "1"},
        {"tau", "rescaled"},
        {"projection", "true"},
        {"dt", "auto: 90% of the collision-probability bound"},
        {"umax_initial", "auto: 8 sqrt(2 theta0 N)"},
        {"cross_section", "constant:1"},
        {"replicas", "8 (relax, scaling: 20)"},
        {"burn_in", "2 (relax, lyapunov, scaling: 0)"},
        {"t_end", "auto: 10; relax 4.5/|mu_pred|; lyapunov 12; scaling 2"},
        {"sample_interval", "0.05 (lyapunov: 0.02)"},
        {"init", "maxwellian (lyapunov: bimodal)"},
        {"theta0", "1"},
        {"radius", "1"},
        {"theta_a", "0.05"},
        {"theta_b", "1"},
        {"fraction", "0.5"},
        {"delta", "0 (relax: 0.2, lyapunov: 0.3)"},
        {"lambda", "1.5"},
        {"coupled", "false"},
        {"bins", "64"},
        {"energy_bar", "closure"},
        {"pair_budget", "20000"},
        {"threads", "0 (all hardware threads)"},
        {"snapshot", "none"},
    };
    return keys;
}

RunConfig build_config(ExperimentKind kind, const Settings& settings)
{
    for (const auto& [key, value] : settings) {
        bool known = false;
        for (const auto& k : known_settings()) {
            known = known || k.first == key;
        }
        if (!known) {
            throw ConfigError(key, "unknown key");
        }
    }
    auto get = [&](const std::string& key) -> const std::string* {
        const auto it = settings.find(key);
        return it == settings.end() ? nullptr : &it->second;
    };

    RunConfig rc;
    auto& s = rc.spec;
    s = ExperimentSpec::defaults_for(kind);
    auto& b = s.base;
    if (auto v = get("dim")) {
        b.dimension = static_cast<int>(to_unsigned("dim", *v));
        if (b.dimension < 2 || b.dimension > 16) {
            throw ConfigError("dim", "dimension must lie in [2, 16]");
        }
    }
    if (auto v = get("alpha")) {
        b.alpha = to_real("alpha", *v);
    }
    if (auto v = get("alphas")) {
        s.alphas = to_reals("alphas", *v);
    }
    if (auto v = get("rho")) {
        b.rho = to_real("rho", *v);
        if (!(b.rho > 0.0)) {
            throw ConfigError("rho", "mass must be positive");
        }
    }
    if (auto v = get("Np")) {
        b.np = to_unsigned("Np", *v);
    }
    if (auto v = get("seed")) {
        b.seed = to_unsigned("seed", *v);
    }
    if (auto v = get("tau")) {
        if (*v == "rescaled") {
            b.tau_mode = TauMode{true, 0.0};
        } else {
            b.tau_mode = TauMode{false, to_real("tau", *v)};
        }
    }
    if (auto v = get("projection")) {
        b.momentum_projection = to_bool("projection", *v);
    }
    if (auto v = get("dt")) {
        s.dt = to_real("dt", *v);
    }
    if (auto v = get("umax_initial")) {
        s.umax_initial = to_real("umax_initial", *v);
    }
    b.cross_section = to_cross_section("cross_section", get("cross_section") ? *get("cross_section") : "constant",
                                       b.dimension);
    if (auto v = get("replicas")) {
        s.replicas = to_unsigned("replicas", *v);
    }
    if (auto v = get("burn_in")) {
        s.burn_in = to_real("burn_in", *v);
    }
    if (auto v = get("t_end")) {
        s.t_end = to_real("t_end", *v);
    }
    if (auto v = get("sample_interval")) {
        s.sample_interval = to_real("sample_interval", *v);
    }
    if (auto v = get("init")) {
        if (*v == "maxwellian") {
            s.init = InitSpec::maxwellian(1.0);
        } else if (*v == "uniform_ball") {
            s.init = InitSpec::uniform_ball(1.0);
        } else if (*v == "bimodal") {
            s.init = InitSpec::bimodal(0.05, 1.0, 0.5);
        } else {
            throw ConfigError("init", "expected maxwellian, uniform_ball or bimodal, got '" + *v + "'");
        }
    }
    if (auto v = get("theta0")) {
        s.init.theta0 = to_real("theta0", *v);
    }
    if (auto v = get("radius")) {
        s.init.radius = to_real("radius", *v);
    }
    if (auto v = get("theta_a")) {
        s.init.theta_a = to_real("theta_a", *v);
    }
    if (auto v = get("theta_b")) {
        s.init.theta_b = to_real("theta_b", *v);
    }
    if (auto v = get("fraction")) {
        s.init.fraction = to_real("fraction", *v);
    }
    if (!(s.init.theta0 > 0.0)) {
        throw ConfigError("theta0", "must be positive");
    }
    if (!(s.init.radius > 0.0)) {
        throw ConfigError("radius", "must be positive");
    }
    if (!(s.init.theta_a >= 0.0 && s.init.theta_b >= 0.0 && s.init.theta_a + s.init.theta_b > 0.0)) {
        throw ConfigError("theta_a", "bimodal temperatures must be non-negative and not both zero");
    }
    if (!(s.init.fraction >= 0.0 && s.init.fraction <= 1.0)) {
        throw ConfigError("fraction", "must lie in [0, 1]");
    }
    if (auto v = get("delta")) {
        s.delta = to_real("delta", *v);
    }
    if (auto v = get("lambda")) {
        s.lambda = to_real("lambda", *v);
    }
    if (auto v = get("coupled")) {
        s.coupled = to_bool("coupled", *v);
    }
    if (auto v = get("bins")) {
        s.bins = to_unsigned("bins", *v);
    }
    if (auto v = get("energy_bar")) {
        if (*v != "closure" && *v != "empirical") {
            throw ConfigError("energy_bar", "expected closure or empirical, got '" + *v + "'");
        }
        s.empirical_energy_bar = *v == "empirical";
    }
    if (auto v = get("pair_budget")) {
        s.pair_budget = to_unsigned("pair_budget", *v);
    }
    if (auto v = get("threads")) {
        s.threads = static_cast<unsigned>(to_unsigned("threads", *v));
    }
    if (auto v = get("snapshot")) {
        if (*v == "none") {
            rc.snapshot = SnapshotFormat::none;
        } else if (*v == "csv") {
            rc.snapshot = SnapshotFormat::csv;
        } else if (*v == "binary") {
            rc.snapshot = SnapshotFormat::binary;
        } else {
            throw ConfigError("snapshot", "expected none, csv or binary, got '" + *v + "'");
        }
    }
    try {
        s.validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(key_of(e.what()), strip_key(e.what()));
    }
    return rc;
}

namespace {

/// Collects output files in memory, then writes them and the manifest.
class OutputSet
{
public:
    void add(std::string name, std::string content) { files_.emplace_back(std::move(name), std::move(content)); }

    void commit(const std::filesystem::path& dir, const nlohmann::json& manifest_base, std::ostream& out)
    {
        std::filesystem::create_directories(dir);
        nlohmann::json digests = nlohmann::json::object();
        for (const auto& [name, content] : files_) {
            write_file_atomic(dir / name, content);
            digests[name] = sha256_hex(content);
        }
        nlohmann::json manifest = manifest_base;
        manifest["outputs"] = digests;
        write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
        out << "outputs written to " << dir.string() << "\n";
    }

private:
    std::vector<std::pair<std::string, std::string>> files_;
};

std::string utc_stamp(std::chrono::system_clock::time_point t, const char* format)
{
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, format);
    return ss.str();
}

// Six significant digits for console tables; files keep full precision.
std::string brief(double x)
{
    std::ostringstream ss;
    ss.precision(6);
    ss << x;
    return ss.str();
}

std::string pass_fail(bool ok) { return ok ? "PASS" : "FAIL"; }

std::string series_csv(const ObservableSeries& series)
{
    std::ostringstream ss;
    series.write_csv(ss);
    return ss.str();
}

std::string snapshot_bytes(const ReplicaResult& r, const SimConfig& cfg, SnapshotFormat format)
{
    SnapshotHeader h;
    h.dimension = r.final_ensemble.dimension;
    h.np = r.final_ensemble.size();
    h.time = r.final_time;
    h.rho = r.final_ensemble.rho;
    h.alpha = cfg.alpha;
    h.tau = cfg.tau();
    std::ostringstream ss;
    if (format == SnapshotFormat::csv) {
        write_snapshot_csv(ss, h, r.final_ensemble);
    } else {
        write_snapshot_binary(ss, h, r.final_ensemble);
    }
    return ss.str();
}

const char* snapshot_name(SnapshotFormat f) { return f == SnapshotFormat::csv ? "snapshot.csv" : "snapshot.bin"; }

struct CommandResult
{
    bool passed = true;
};

CommandResult run_validate(const RunConfig& rc, OutputSet& files, std::ostream& out)
{
    const auto& b = rc.spec.base;
    const auto checks = invariant_suite(b.cross_section, b.dimension, b.rho, b.seed);
    nlohmann::json j = nlohmann::json::array();
    CommandResult res;
    for (const auto& c : checks) {
        out << pass_fail(c.passed) << "  " << c.name << "  (" << format_real(c.measured) << " <= "
            << format_real(c.tolerance) << ")";
        if (!c.detail.empty()) {
            out << "  " << c.detail;
        }
        out << "\n";
        res.passed = res.passed && c.passed;
        j.push_back(c.to_json());
    }
    const auto kc = kernel_constants(b.cross_section, b.dimension);
    nlohmann::json doc{{"checks", j},
                       {"kernel", {{"b0", kc.b0}, {"b1", kc.b1}, {"b2", kc.b2}}},
                       {"predictions",
                        predictions_json({0.8, 0.9, 0.95, 0.96, 0.98, 0.99, 1.0}, b.rho, b.dimension, b.cross_section)},
                       {"verdict", pass_fail(res.passed)}};
    files.add("validation.json", doc.dump(2) + "\n");
    return res;
}

CommandResult run_moments(int dimension, OutputSet& files, std::ostream& out)
{
    if (dimension < 2 || dimension > 16) {
        throw ConfigError("N", "dimension must lie in [2, 16]");
    }
    auto density = [dimension](double r) { return maxwellian_radial_pdf(1.0, 1.0, dimension, r); };
    auto weighted = [dimension](double r) { return r * r * maxwellian_radial_pdf(1.0, 1.0, dimension, r); };
    auto cube = [](double, double, double u) { return u * u * u; };
    struct Row
    {
        std::string name;
        double closed;
        double quadrature;
    };
    const double n = dimension;
    const std::vector<Row> rows = {
        {"int M |v|^2", n, gaussian_moment_quadrature(dimension, 2.0)},
        {"int M |v|^3", gaussian_moment(dimension, 3.0), gaussian_moment_quadrature(dimension, 3.0)},
        {"int M |v|^4", n * (n + 2.0), gaussian_moment_quadrature(dimension, 4.0)},
        {"int M |v|^6", n * (n + 2.0) * (n + 4.0), gaussian_moment_quadrature(dimension, 6.0)},
        {"int M |v|^8", n * (n + 2.0) * (n + 4.0) * (n + 6.0), gaussian_moment_quadrature(dimension, 8.0)},
        {"int int M M_* |u|^3", relative_speed_cubed(dimension), pair_integral(dimension, 1.0, density, density, cube)},
        {"int int M M_* |v|^2 |u|^3", relative_speed_cubed_energy_weighted(dimension),
         pair_integral(dimension, 1.0, weighted, density, cube)},
    };
    CommandResult res;
    std::ostringstream csv;
    csv << "quantity,closed_form,quadrature,relative_error\n";
    out << "Gaussian moments, M = standard Gaussian in dimension " << dimension << "\n";
    for (const auto& r : rows) {
        const double err = std::abs(r.quadrature - r.closed) / std::abs(r.closed);
        res.passed = res.passed && err <= 1e-8;
        out << std::left << std::setw(28) << r.name << std::setw(24) << format_real(r.closed)
            << std::setw(24) << format_real(r.quadrature) << format_real(err) << "\n";
        csv << r.name << ',' << format_real(r.closed) << ',' << format_real(r.quadrature) << ',' << format_real(err)
            << '\n';
    }
    files.add("moments.csv", csv.str());
    return res;
}

CommandResult run_steady(const RunConfig& rc, OutputSet& files, std::ostream& out)
{
    const auto& s = rc.spec;
    const auto r = steady_state(s, s.base.alpha);
    const bool residual_ok = !(r.tau > 0.0) || std::abs(r.residual.mean) <= 0.05;
    const double theta_err = std::abs(r.theta_ss.mean - r.theta_pred) / r.theta_pred;
    const bool theta_ok = r.alpha < 0.95 || theta_err <= 0.05;
    CommandResult res{residual_ok && theta_ok && r.ckp.violations == 0};
    out << "alpha " << format_real(r.alpha) << "  tau " << format_real(r.tau) << "\n"
        << "theta_ss " << format_real(r.theta_ss.mean) << " +- " << format_real(2.0 * r.theta_ss.std_error)
        << "  theta_pred " << format_real(r.theta_pred) << "  relative error " << format_real(theta_err) << "\n"
        << "residual " << format_real(r.residual.mean) << " +- " << format_real(2.0 * r.residual.std_error) << "\n"
        << "L1_2 to M_theta_bar1 " << format_real(r.l1_bar1[2]) << "  to M_theta_pred " << format_real(r.l1_pred[2])
        << "  noise floor " << format_real(r.l1_floor[2]) << "\n"
        << (r.stationary ? "stationary" : "NON-STATIONARY (trend detected)") << "\n"
        << "verdict " << pass_fail(res.passed) << "\n";
    auto j = r.to_json();
    j["verdict"] = pass_fail(res.passed);
    files.add("result.json", j.dump(2) + "\n");
    files.add("series.csv", series_csv(r.series));
    files.add("series.json",
              nlohmann::json{{"config", s.to_json()}, {"seed", s.base.seed}, {"columns", ObservableSeries::csv_header()}}
                      .dump(2) +
                  "\n");
    if (rc.snapshot != SnapshotFormat::none) {
        const auto kc = kernel_constants(s.base.cross_section, s.base.dimension);
        SimConfig cfg = s.base;
        cfg.kernel = kc;
        files.add(snapshot_name(rc.snapshot), snapshot_bytes(r.first_replica_tail, cfg, rc.snapshot));
    }
    return res;
}

CommandResult run_sweep(const RunConfig& rc, OutputSet& files, std::ostream& out)
{
    const auto r = alpha_sweep(rc.spec);
    out << std::left << std::setw(8) << "alpha" << std::setw(14) << "theta_ss" << std::setw(14) << "theta_pred"
        << std::setw(14) << "residual" << std::setw(14) << "L1_2" << "floor\n";
    for (const auto& p : r.points) {
        out << std::setw(8) << brief(p.alpha) << std::setw(14) << brief(p.theta_ss.mean) << std::setw(14)
            << brief(p.theta_pred) << std::setw(14) << brief(p.residual.mean) << std::setw(14) << brief(p.l1_bar1[2])
            << brief(p.l1_floor[2]) << "\n";
        std::ostringstream name;
        name << "series_alpha" << format_real(p.alpha) << ".csv";
        files.add(name.str(), series_csv(p.series));
    }
    out << "log-log slope " << format_real(r.slope_fit.slope) << " +- " << format_real(2.0 * r.slope_fit.slope_se)
        << " (threshold " << format_real(r.slope_threshold) << ")\n"
        << "distances decreasing: " << (r.distances_decreasing ? "yes" : "no")
        << "  theta monotone: " << (r.theta_monotone ? "yes" : "no") << "\n"
        << "verdict " << pass_fail(r.passed()) << "\n";
    files.add("result.json", r.to_json().dump(2) + "\n");
    std::ostringstream csv;
    r.write_csv(csv);
    files.add("sweep.csv", csv.str());
    return {r.passed()};
}

CommandResult run_relax(const RunConfig& rc, OutputSet& files, std::ostream& out)
{
    const auto r = relaxation_fit(rc.spec);
    for (const auto& p : r.points) {
        out << "alpha " << format_real(p.alpha) << "  mu_hat ";
        if (p.mu.valid) {
            out << format_real(p.mu.estimate) << " +- " << format_real(2.0 * p.mu.std_error);
        } else {
            out << "refused (" << p.mu.reason << ")";
        }
        out << "  -3rho(1-alpha)/theta_bar1 " << format_real(p.mu_pred) << "  -3rho(1-alpha) "
            << format_real(p.mu_alternative) << "  supports " << p.supported << "\n";
    }
    if (r.ratio) {
        out << "mu(0.98)/mu(0.96) " << format_real(r.ratio->mean) << " +- " << format_real(2.0 * r.ratio->std_error)
            << "\n";
    }
    out << "verdict " << pass_fail(r.passed()) << "\n";
    files.add("result.json", r.to_json().dump(2) + "\n");
    std::ostringstream csv;
    r.write_csv(csv);
    files.add("relax.csv", csv.str());
    return {r.passed()};
}

CommandResult run_lyapunov(const RunConfig& rc, OutputSet& files, std::ostream& out)
{
    const auto& s = rc.spec;
    const auto r = lyapunov_trace(s);
    out << "H1 blocks " << r.block_h1.size() << "  monotone " << (r.monotone ? "yes" : "no") << "  worst excess "
        << format_real(r.worst_excess) << "\n";
    if (r.timescale_ratio) {
        out << "entropy e-fold " << format_real(r.entropy_fold.estimate) << "  energy e-fold "
            << format_real(r.energy_fold.estimate) << "  ratio " << format_real(*r.timescale_ratio) << "\n";
    }
    const bool passed = r.passed();
    out << "verdict " << pass_fail(passed) << "\n";
    files.add("result.json", r.to_json().dump(2) + "\n");
    std::ostringstream csv;
    r.write_csv(csv);
    files.add("lyapunov.csv", csv.str());
    files.add("series.csv", series_csv(r.series));
    if (rc.snapshot != SnapshotFormat::none) {
        SimConfig cfg = s.base;
        files.add(snapshot_name(rc.snapshot), snapshot_bytes(r.first_replica_tail, cfg, rc.snapshot));
    }
    return {passed};
}

CommandResult run_scaling(const RunConfig& rc, OutputSet& files, std::ostream& out)
{
    const auto r = scaling_check(rc.spec);
    out << "lambda " << format_real(r.lambda) << "  max relative deviation " << format_real(r.max_deviation)
        << " (tolerance " << format_real(r.tolerance) << ")\n"
        << "verdict " << pass_fail(r.passed()) << "\n";
    files.add("result.json", r.to_json().dump(2) + "\n");
    std::ostringstream csv;
    r.write_csv(csv);
    files.add("scaling.csv", csv.str());
    return {r.passed()};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"granbath: DSMC for granular gases in a thermal bath", "granbath"};
    app.require_subcommand(1);
    std::string config_path, out_dir, tau, alpha;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicas, np;
    std::optional<double> dt, t_end;
    bool no_projection = false;
    int moments_dim = 3;

    std::vector<CLI::App*> subs;
    const std::pair<const char*, const char*> commands[] = {
        {"validate", "kinematics and closed-form invariant suite"},
        {"moments", "Gaussian moment and relative-speed identities"},
        {"steady", "steady state at one restitution coefficient"},
        {"relax", "energy relaxation rate fit"},
        {"sweep", "steady states across restitution coefficients"},
        {"lyapunov", "Liapunov functional trace from a bimodal start"},
        {"scaling", "scaling invariance check"},
    };
    for (const auto& [name, description] : commands) {
        auto* sub = app.add_subcommand(name, description);
        sub->add_option("--config", config_path, "key = value configuration file");
        sub->add_option("--out", out_dir, "output directory (default runs/<timestamp>_seed<seed>)");
        sub->add_option("--seed", seed, "root seed");
        if (std::string(name) == "moments") {
            sub->add_option("--N", moments_dim, "dimension");
        } else {
            sub->add_option("--replicas", replicas, "number of replicas");
            sub->add_option("--alpha", alpha, "restitution coefficient, or a comma list for sweep/relax");
            sub->add_option("--np", np, "particles per replica");
            sub->add_option("--dt", dt, "time step");
            sub->add_option("--t-end", t_end, "final time");
            sub->add_option("--tau", tau, "rescaled or an explicit heat-bath strength");
            sub->add_flag("--no-projection", no_projection, "do not recentre heat-bath kicks");
        }
        subs.push_back(sub);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_code::success;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::config_error;
    }
    std::string command;
    for (auto* sub : subs) {
        if (sub->parsed()) {
            command = sub->get_name();
        }
    }

    const auto start = std::chrono::system_clock::now();
    const auto wall0 = std::chrono::steady_clock::now();
    std::filesystem::path dir;
    try {
        Settings settings;
        if (!config_path.empty()) {
            settings = read_settings(config_path);
        }
        if (seed) {
            settings["seed"] = std::to_string(*seed);
        }
        if (replicas) {
            settings["replicas"] = std::to_string(*replicas);
        }
        if (!alpha.empty()) {
            settings[alpha.find(',') == std::string::npos ? "alpha" : "alphas"] = alpha;
        }
        if (np) {
            settings["Np"] = std::to_string(*np);
        }
        if (dt) {
            settings["dt"] = format_real(*dt);
        }
        if (t_end) {
            settings["t_end"] = format_real(*t_end);
        }
        if (!tau.empty()) {
            settings["tau"] = tau;
        }
        if (no_projection) {
            settings["projection"] = "false";
        }
        const auto kind = parse_experiment_kind(command).value_or(ExperimentKind::steady);
        const RunConfig rc = build_config(kind, settings);

        dir = out_dir.empty() ? std::filesystem::path("runs") / (utc_stamp(start, "%Y%m%dT%H%M%SZ") + "_seed" +
                                                                  std::to_string(rc.spec.base.seed))
                              : std::filesystem::path(out_dir);
        OutputSet files;
        CommandResult result;
        if (command == "validate") {
            result = run_validate(rc, files, out);
        } else if (command == "moments") {
            result = run_moments(moments_dim, files, out);
        } else if (command == "steady") {
            result = run_steady(rc, files, out);
        } else if (command == "sweep") {
            result = run_sweep(rc, files, out);
        } else if (command == "relax") {
            result = run_relax(rc, files, out);
        } else if (command == "lyapunov") {
            result = run_lyapunov(rc, files, out);
        } else {
            result = run_scaling(rc, files, out);
        }

        nlohmann::json manifest{{"tool", "granbath"},
                                {"version", GRANBATH_VERSION},
                                {"command", command},
                                {"seed", rc.spec.base.seed},
                                {"config", command == "moments" ? nlohmann::json{{"N", moments_dim}}
                                                                : rc.spec.to_json()},
                                {"verdict", pass_fail(result.passed)}};
        files.commit(dir, manifest, out);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
        write_file_atomic(dir / "timing.txt", "start " + utc_stamp(start, "%Y-%m-%dT%H:%M:%SZ") + "\nend " +
                                                  utc_stamp(std::chrono::system_clock::now(), "%Y-%m-%dT%H:%M:%SZ") +
                                                  "\nwall_seconds " + format_real(wall) + "\n");
        return result.passed ? exit_code::success : exit_code::verdict_fail;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_code::config_error;
    } catch (const ContractViolation& e) {
        err << "config error: " << e.what() << "\n";
        return exit_code::config_error;
    } catch (const NumericFault& e) {
        err << "numeric fault at t=" << format_real(e.time()) << " (step " << e.steps() << "): " << e.what() << "\n";
        try {
            if (!dir.empty()) {
                std::filesystem::create_directories(dir);
                std::ostringstream ss;
                SnapshotHeader h;
                h.dimension = e.snapshot().dimension;
                h.np = e.snapshot().size();
                h.time = e.time();
                h.rho = e.snapshot().rho;
                write_snapshot_csv(ss, h, e.snapshot());
                write_file_atomic(dir / "fault_snapshot.csv", ss.str());
                err << "diagnostic snapshot written to " << (dir / "fault_snapshot.csv").string() << "\n";
            }
        } catch (const std::exception&) {
        }
        return exit_code::numeric_fault;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::verdict_fail;
    }
}

}  // namespace granbath
