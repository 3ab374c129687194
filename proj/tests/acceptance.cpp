// Acceptance suite: one PASS/FAIL line per criterion, full problem sizes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "granbath/analytics.hpp"
#include "granbath/experiments.hpp"
#include "granbath/format.hpp"
#include "granbath/io.hpp"
#include "granbath/validation.hpp"

#ifndef GRANBATH_CLI
#define GRANBATH_CLI "granbath"
#endif

using namespace granbath;
namespace fs = std::filesystem;

namespace {

struct Verdict
{
    int id = 0;
    bool passed = false;
    std::string summary;
    nlohmann::json detail;
};

class Timer
{
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string f(double x, int digits = 4)
{
    std::ostringstream ss;
    ss.precision(digits);
    ss << x;
    return ss.str();
}

void report(std::vector<Verdict>& all, Verdict v)
{
    std::cout << (v.passed ? "PASS" : "FAIL") << "  criterion " << v.id << ": " << v.summary << std::endl;
    all.push_back(std::move(v));
}

Verdict from_checks(int id, const std::string& what, const std::vector<CheckResult>& checks, double seconds,
                    double budget)
{
    Verdict v{id, seconds < budget, {}, nlohmann::json::object()};
    std::string worst;
    for (const auto& c : checks) {
        v.passed = v.passed && c.passed;
        v.detail["checks"].push_back(c.to_json());
        if (!c.passed) {
            worst += "; failed " + c.name + " (" + f(c.measured) + " > " + f(c.tolerance) + ")";
        }
    }
    v.detail["seconds"] = seconds;
    v.summary = what + ", " + std::to_string(checks.size()) + " checks in " + f(seconds, 3) + " s (budget " +
                f(budget, 3) + " s)" + worst;
    return v;
}

const SteadyResult* find_point(const std::vector<SteadyResult>& points, double alpha)
{
    for (const auto& p : points) {
        if (std::abs(p.alpha - alpha) < 1e-12) {
            return &p;
        }
    }
    return nullptr;
}

// Runs the command-line tool; returns its exit status.
int run_tool(const std::vector<std::string>& args, const fs::path& log)
{
    std::string cmd = std::string("\"") + GRANBATH_CLI + "\"";
    for (const auto& a : args) {
        cmd += " \"" + a + "\"";
    }
    cmd += " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string compare_dirs(const fs::path& a, const fs::path& b)
{
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(a)) {
        names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    std::size_t compared = 0;
    for (const auto& n : names) {
        if (n == "timing.txt") {
            continue;
        }
        if (!fs::exists(b / n)) {
            return "missing " + n + " in second run";
        }
        if (read_file(a / n) != read_file(b / n)) {
            return n + " differs";
        }
        ++compared;
    }
    if (compared == 0) {
        return "no outputs";
    }
    return {};
}

}  // namespace

int main()
{
    std::vector<Verdict> verdicts;
    CkpTally ckp_all;
    const std::uint64_t seed = 20261018;
    const CrossSection cs = CrossSection::constant(1.0);
    const double b1 = kernel_constants(cs, 3).b1;
    Timer total;

    {
        Timer t;
        const auto checks = check_collision_kinematics(1000000, 3, seed);
        report(verdicts, from_checks(1, "kinematics over 1e6 random collisions", checks, t.seconds(), 10.0));
    }
    {
        Timer t;
        const auto checks = check_gaussian_identities(3, 1000000, seed + 1);
        report(verdicts, from_checks(2, "Gaussian identities by quadrature and 1e6 Monte Carlo pairs", checks,
                                     t.seconds(), 30.0));
    }
    {
        Timer t;
        const auto checks = check_steady_closed_forms(1.0, b1, 3);
        report(verdicts, from_checks(3, "theta_bar1, D_E(M_theta_bar1) and phi_1 functionals", checks, t.seconds(),
                                     5.0));
    }

    // Steady states: the sweep set plus the extra coefficients of the stationarity check.
    auto sweep_spec = ExperimentSpec::defaults_for(ExperimentKind::sweep);
    sweep_spec.base.seed = seed;
    sweep_spec.alphas = {0.90, 0.93, 0.96, 0.98, 0.99};
    Timer t_sweep;
    const auto sweep = alpha_sweep(sweep_spec);
    std::vector<SteadyResult> steady = sweep.points;
    for (double alpha : {0.8, 0.95}) {
        steady.push_back(steady_state(sweep_spec, alpha));
    }
    ckp_all.merge(sweep.ckp);
    for (std::size_t k = sweep.points.size(); k < steady.size(); ++k) {
        ckp_all.merge(steady[k].ckp);
    }
    const double sweep_seconds = t_sweep.seconds();

    {
        Verdict v{4, true, {}, nlohmann::json::object()};
        std::string parts;
        for (double alpha : {0.8, 0.9, 0.95, 0.99}) {
            const auto* p = find_point(steady, alpha);
            const bool ok = p && std::abs(p->residual.mean) <= 0.05;
            v.passed = v.passed && ok;
            parts += (parts.empty() ? "" : ", ") + ("alpha " + f(alpha) + ": " + f(p->residual.mean, 3) + " +- " +
                                                    f(2.0 * p->residual.std_error, 2));
            v.detail["points"].push_back(p->to_json());
        }
        v.summary = "stationarity residual |r| <= 0.05 (" + parts + "), Np 2e4, 8 replicas";
        report(verdicts, std::move(v));
    }
    {
        Verdict v{5, true, {}, nlohmann::json::object()};
        std::string parts;
        for (double alpha : {0.95, 0.96, 0.98, 0.99}) {
            const auto* p = find_point(steady, alpha);
            const double err = std::abs(p->theta_ss.mean - p->theta_pred) / p->theta_pred;
            v.passed = v.passed && err <= 0.05;
            parts += (parts.empty() ? "" : ", ") + f(err, 2);
        }
        const bool slope_ok = sweep.slope_fit.points >= 3 && sweep.slope_fit.slope >= 0.4;
        v.passed = v.passed && sweep.theta_monotone && sweep.distances_decreasing && slope_ok;
        v.summary = "theta_ss vs theta_pred relative errors " + parts + " (<= 0.05); theta monotone " +
                    (sweep.theta_monotone ? "yes" : "no") + "; L1_2 to M_theta_bar1 decreasing " +
                    (sweep.distances_decreasing ? "yes" : "no") + "; log-log slope " + f(sweep.slope_fit.slope, 3) +
                    " +- " + f(2.0 * sweep.slope_fit.slope_se, 2) + " over " +
                    std::to_string(sweep.slope_fit.points) + " points (>= 0.4); " + f(sweep_seconds, 3) + " s";
        v.detail = sweep.to_json();
        report(verdicts, std::move(v));
    }

    {
        auto spec = ExperimentSpec::defaults_for(ExperimentKind::relax);
        spec.base.seed = seed;
        spec.alphas = {0.95, 0.96, 0.98};
        Timer t;
        const auto r = relaxation_fit(spec);
        ckp_all.merge(r.ckp);
        Verdict v{6, true, {}, r.to_json()};
        std::string parts;
        for (const auto& p : r.points) {
            v.passed = v.passed && p.mu.valid && p.mu.estimate < 0.0 && p.supported_deviation <= 0.4;
            parts += (parts.empty() ? "" : "; ") + ("alpha " + f(p.alpha) + " mu " +
                                                    (p.mu.valid ? f(p.mu.estimate, 4) + " +- " +
                                                                      f(2.0 * p.mu.std_error, 2)
                                                                : "refused") +
                                                    " supports " + p.supported + " (off by " +
                                                    f(100.0 * p.supported_deviation, 3) + "%)");
        }
        const bool ratio_ok = r.ratio && std::abs(r.ratio->mean - 0.5) <= 0.15;
        v.passed = v.passed && ratio_ok;
        v.summary = parts + "; mu(0.98)/mu(0.96) = " +
                    (r.ratio ? f(r.ratio->mean, 3) + " +- " + f(2.0 * r.ratio->std_error, 2) : "n/a") +
                    " (0.5 +- 0.15); 20 replicas, Np 2e4, " + f(t.seconds(), 3) + " s";
        report(verdicts, std::move(v));
    }

    LyapunovResult lyap;
    {
        auto spec = ExperimentSpec::defaults_for(ExperimentKind::lyapunov);
        spec.base.seed = seed;
        Timer t;
        lyap = lyapunov_trace(spec);
        ckp_all.merge(lyap.ckp);
    }

    ScalingResult scaling;
    double scaling_seconds = 0.0;
    {
        auto spec = ExperimentSpec::defaults_for(ExperimentKind::scaling);
        spec.base.seed = seed;
        spec.lambda = 1.5;
        Timer t;
        scaling = scaling_check(spec);
        scaling_seconds = t.seconds();
        ckp_all.merge(scaling.ckp);
    }

    {
        Verdict v{7, ckp_all.violations == 0 && ckp_all.checked > 0, {}, ckp_all.to_json()};
        v.summary = std::to_string(ckp_all.checked) + " snapshots above 10x the entropy bias floor checked, " +
                    std::to_string(ckp_all.violations) + " violations, minimum slack " + f(ckp_all.min_slack, 3) +
                    " (" + std::to_string(ckp_all.below_floor) + " snapshots below the floor skipped)";
        report(verdicts, std::move(v));
    }
    {
        const bool ratio_ok = lyap.timescale_ratio && *lyap.timescale_ratio >= 5.0;
        Verdict v{8, lyap.monotone && ratio_ok, {}, lyap.to_json()};
        v.summary = "H1 over " + std::to_string(lyap.block_h1.size()) + " smoothed blocks non-increasing " +
                    (lyap.monotone ? "yes" : "no") + " (worst rise " + f(lyap.worst_excess, 3) +
                    " x 2-sigma); e-folding entropy " +
                    (lyap.entropy_fold.valid ? f(lyap.entropy_fold.estimate, 3) : "n/a") + ", energy term " +
                    (lyap.energy_fold.valid ? f(lyap.energy_fold.estimate, 3) : "n/a") + ", ratio " +
                    (lyap.timescale_ratio ? f(*lyap.timescale_ratio, 3) : "n/a") + " (>= 5), alpha 0.99 bimodal";
        report(verdicts, std::move(v));
    }
    {
        Verdict v{9, scaling.passed(), {}, scaling.to_json()};
        v.summary = "lambda 1.5 max relative deviation " + f(scaling.max_deviation, 3) + " (<= 0.03) over " +
                    std::to_string(scaling.times.size()) + " times, Np 5e4, 20 replicas, " + f(scaling_seconds, 3) +
                    " s";
        report(verdicts, std::move(v));
    }

    {
        const fs::path root = fs::temp_directory_path() / "granbath_acceptance_determinism";
        fs::remove_all(root);
        fs::create_directories(root);
        write_file_atomic(root / "small.cfg", "Np = 1000\nreplicas = 2\nburn_in = 0.5\nseed = 7\n");
        const std::string cfg = (root / "small.cfg").string();
        const std::vector<std::pair<std::string, std::vector<std::string>>> runs = {
            {"validate", {"validate", "--seed", "7"}},
            {"moments", {"moments", "--N", "3"}},
            {"steady", {"steady", "--config", cfg, "--alpha", "0.99", "--t-end", "2"}},
            {"sweep", {"sweep", "--config", cfg, "--alpha", "0.9,0.95,0.99", "--t-end", "1.5"}},
            {"relax", {"relax", "--config", cfg, "--alpha", "0.95", "--t-end", "1.5"}},
            {"lyapunov", {"lyapunov", "--np", "1000", "--replicas", "2", "--t-end", "1", "--seed", "7"}},
            {"scaling", {"scaling", "--np", "1000", "--replicas", "2", "--t-end", "0.4", "--seed", "7"}},
        };
        Verdict v{10, true, {}, nlohmann::json::object()};
        std::string parts;
        for (const auto& [name, args] : runs) {
            std::string outcome;
            int codes[2] = {0, 0};
            for (int k = 0; k < 2; ++k) {
                auto a = args;
                a.push_back("--out");
                a.push_back((root / (name + std::to_string(k))).string());
                codes[k] = run_tool(a, root / (name + std::to_string(k) + ".log"));
            }
            if (codes[0] != codes[1] || codes[0] >= 2 || codes[0] < 0) {
                outcome = "exit codes " + std::to_string(codes[0]) + "/" + std::to_string(codes[1]);
            } else {
                outcome = compare_dirs(root / (name + "0"), root / (name + "1"));
            }
            v.passed = v.passed && outcome.empty();
            v.detail[name] = outcome.empty() ? "identical" : outcome;
            parts += (parts.empty() ? "" : ", ") + name + (outcome.empty() ? " identical" : " " + outcome);
        }
        v.summary = "CLI re-runs with the same config and seed: " + parts;
        if (v.passed) {
            fs::remove_all(root);
        }
        report(verdicts, std::move(v));
    }

    nlohmann::json doc;
    std::size_t passed = 0;
    for (const auto& v : verdicts) {
        doc["criteria"].push_back(
            {{"id", v.id}, {"passed", v.passed}, {"summary", v.summary}, {"detail", v.detail}});
        passed += v.passed ? 1 : 0;
    }
    doc["seconds"] = total.seconds();
    write_file_atomic("acceptance_report.json", doc.dump(2) + "\n");
    std::cout << passed << "/" << verdicts.size() << " criteria passed in " << f(total.seconds(), 4)
              << " s; details in acceptance_report.json" << std::endl;
    return passed == verdicts.size() ? 0 : 1;
}
