#include "granbath/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "granbath/errors.hpp"
#include "granbath/format.hpp"
#include "granbath/quadrature.hpp"

namespace granbath {

namespace {

template <class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double power_law_exponent(int dimension) { return -0.5 * (dimension - 3); }

// b as a function of (1 - x); keeps the power law accurate near x = 1.
double eval_one_minus_x(const std::variant<CrossSection::Constant, CrossSection::PowerLaw, CrossSection::Tabulated>& kind,
                        double one_minus_x)
{
    return std::visit(
        overloaded{
            [](const CrossSection::Constant& c) { return c.scale; },
            [&](const CrossSection::PowerLaw& p) {
                const double e = power_law_exponent(p.dimension);
                if (e == 0.0) {
                    return p.scale;
                }
                return p.scale * std::pow(one_minus_x, e);
            },
            [&](const CrossSection::Tabulated& t) {
                const double x = std::clamp(1.0 - one_minus_x, -1.0, 1.0);
                auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
                if (it == t.x.end()) {
                    return t.values.back();
                }
                const auto hi = static_cast<std::size_t>(it - t.x.begin());
                const std::size_t lo = hi - 1;
                const double s = (x - t.x[lo]) / (t.x[hi] - t.x[lo]);
                return t.values[lo] + s * (t.values[hi] - t.values[lo]);
            },
        },
        kind);
}

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

void check_pair(std::span<const double> v, std::span<const double> v_star, std::span<const double> sigma)
{
    if (v.size() < 2) {
        throw ContractViolation("velocity dimension must be at least 2");
    }
    if (v.size() != v_star.size() || v.size() != sigma.size()) {
        throw ContractViolation("velocity/sigma dimension mismatch");
    }
    const double norm = std::sqrt(dot(sigma, sigma));
    if (!(std::abs(norm - 1.0) <= unit_tolerance)) {
        throw ContractViolation("sigma is not a unit vector");
    }
}

}  // namespace

CrossSection::CrossSection(std::variant<Constant, PowerLaw, Tabulated> kind) : kind_(std::move(kind))
{
    std::visit(overloaded{
                   [&](const Constant& c) {
                       b_min_ = c.scale;
                       b_max_ = c.scale;
                   },
                   [&](const PowerLaw& p) {
                       const double e = power_law_exponent(p.dimension);
                       const double at_minus_one = p.scale * std::pow(2.0, e);
                       if (e == 0.0) {
                           b_min_ = b_max_ = p.scale;
                       } else if (e < 0.0) {
                           b_min_ = at_minus_one;
                           b_max_ = std::numeric_limits<double>::infinity();
                       } else {
                           b_min_ = 0.0;
                           b_max_ = at_minus_one;
                       }
                   },
                   [&](const Tabulated& t) {
                       const auto [lo, hi] = std::minmax_element(t.values.begin(), t.values.end());
                       b_min_ = *lo;
                       b_max_ = *hi;
                   },
               },
               kind_);
}

CrossSection CrossSection::constant(double scale)
{
    require(std::isfinite(scale) && scale > 0.0, "constant cross-section must be positive");
    return CrossSection(Constant{scale});
}

CrossSection CrossSection::hard_sphere(double scale, int dimension)
{
    require(std::isfinite(scale) && scale > 0.0, "hard-sphere prefactor must be positive");
    require(dimension >= 2, "dimension must be at least 2");
    return CrossSection(PowerLaw{scale, dimension});
}

CrossSection CrossSection::tabulated(std::vector<double> x, std::vector<double> values)
{
    require(x.size() >= 2 && x.size() == values.size(), "table needs at least two (x, value) rows");
    require(x.front() == -1.0 && x.back() == 1.0, "table must span exactly [-1, 1]");
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(std::isfinite(x[i]) && std::isfinite(values[i]), "table entries must be finite");
        if (i > 0) {
            require(x[i] > x[i - 1], "table abscissae must be strictly ascending");
        }
    }
    return CrossSection(Tabulated{std::move(x), std::move(values)});
}

CrossSection CrossSection::load_table(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ContractViolation("cannot open cross-section table: " + path.string());
    }
    std::vector<double> xs;
    std::vector<double> vs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        std::istringstream row(line);
        double x = 0.0;
        double v = 0.0;
        std::string rest;
        if (!(row >> x >> v) || (row >> rest)) {
            throw ContractViolation("malformed cross-section table line " + std::to_string(lineno));
        }
        xs.push_back(x);
        vs.push_back(v);
    }
    return tabulated(std::move(xs), std::move(vs));
}

double CrossSection::operator()(double x) const { return eval_one_minus_x(kind_, 1.0 - x); }

std::string CrossSection::id() const
{
    return std::visit(overloaded{
                          [](const Constant& c) { return "const:" + format_real(c.scale); },
                          [](const PowerLaw& p) {
                              return "hs" + std::to_string(p.dimension) + ":" + format_real(p.scale);
                          },
                          [](const Tabulated& t) { return "table:" + std::to_string(t.x.size()); },
                      },
                      kind_);
}

KernelConstants kernel_constants(const CrossSection& cs, int dimension)
{
    require(dimension >= 2, "dimension must be at least 2");
    // dsigma = |S^{N-2}| sin^{N-2}(t) dt with x = cos t.
    const double ring = unit_sphere_area(dimension - 1);
    const auto& kind = cs.kind();
    auto weight = [&](double t) {
        const double s = std::sin(0.5 * t);
        const double one_minus_x = 2.0 * s * s;
        return std::make_pair(one_minus_x, ring * std::pow(std::sin(t), dimension - 2));
    };
    const double pi = std::numbers::pi;
    KernelConstants kc;
    kc.b0 = integrate_or_throw(
        [&](double t) {
            const auto [omx, w] = weight(t);
            return eval_one_minus_x(kind, omx) * w;
        },
        0.0, pi, kernel_quadrature_tolerance, "b0");
    kc.b1 = integrate_or_throw(
                [&](double t) {
                    const auto [omx, w] = weight(t);
                    return omx * eval_one_minus_x(kind, omx) * w;
                },
                0.0, pi, 8.0 * kernel_quadrature_tolerance, "b1") /
            8.0;
    kc.b2 = integrate_or_throw(
        [&](double t) {
            const auto [omx, w] = weight(t);
            return std::abs(eval_one_minus_x(kind, omx)) * w;
        },
        0.0, pi, kernel_quadrature_tolerance, "b2");
    return kc;
}

std::pair<Velocity, Velocity> post_collision(std::span<const double> v, std::span<const double> v_star,
                                             std::span<const double> sigma, double alpha)
{
    check_pair(v, v_star, sigma);
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ContractViolation("restitution coefficient must lie in [0, 1]");
    }
    Velocity a(v.begin(), v.end());
    Velocity b(v_star.begin(), v_star.end());
    double speed2 = 0.0;
    for (std::size_t d = 0; d < v.size(); ++d) {
        const double u = v[d] - v_star[d];
        speed2 += u * u;
    }
    collide_in_place(a.data(), b.data(), sigma.data(), alpha, std::sqrt(speed2), static_cast<int>(v.size()));
    return {std::move(a), std::move(b)};
}

double energy_loss(std::span<const double> v, std::span<const double> v_star, std::span<const double> sigma,
                   double alpha)
{
    check_pair(v, v_star, sigma);
    double speed2 = 0.0;
    double u_dot_sigma = 0.0;
    for (std::size_t d = 0; d < v.size(); ++d) {
        const double u = v[d] - v_star[d];
        speed2 += u * u;
        u_dot_sigma += u * sigma[d];
    }
    if (speed2 == 0.0) {
        return 0.0;
    }
    const double cos_angle = u_dot_sigma / std::sqrt(speed2);
    return -0.25 * (1.0 - alpha * alpha) * (1.0 - cos_angle) * speed2;
}

void uniform_direction(RandomStream& rng, std::span<double> out)
{
    for (;;) {
        double norm2 = 0.0;
        for (double& c : out) {
            c = rng.normal();
            norm2 += c * c;
        }
        if (norm2 > 1e-24) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (double& c : out) {
                c *= inv;
            }
            return;
        }
    }
}

std::size_t sample_sigma_into(const CrossSection& cs, std::span<const double> u_hat, RandomStream& rng,
                              std::span<double> out)
{
    require(u_hat.size() == out.size(), "sample_sigma: dimension mismatch");
    if (cs.is_uniform()) {
        uniform_direction(rng, out);
        return 1;
    }
    const double b_max = cs.upper_bound();
    if (!(std::isfinite(b_max) && cs.lower_bound() > 0.0)) {
        throw ContractViolation("sample_sigma: cross-section must satisfy 0 < b_m <= b <= b_M < inf");
    }
    std::size_t proposals = 0;
    for (;;) {
        ++proposals;
        uniform_direction(rng, out);
        const double x = std::clamp(dot(u_hat, out), -1.0, 1.0);
        if (rng.uniform() * b_max < cs(x)) {
            return proposals;
        }
    }
}

Velocity sample_sigma(const CrossSection& cs, std::span<const double> u_hat, RandomStream& rng)
{
    Velocity out(u_hat.size());
    sample_sigma_into(cs, u_hat, rng, out);
    return out;
}

nlohmann::json CrossSectionReport::to_json() const
{
    nlohmann::json j;
    j["cross_section"] = id;
    j["grid_size"] = grid_size;
    j["lower_bound"] = lower_bound;
    j["upper_bound"] = std::isfinite(upper_bound) ? nlohmann::json(upper_bound) : nlohmann::json("inf");
    j["passed"] = passed();
    auto& list = j["violations"] = nlohmann::json::array();
    for (const auto& v : violations) {
        list.push_back({{"kind", v.kind},
                        {"source", v.source},
                        {"index", v.index},
                        {"x", v.x},
                        {"value", std::isfinite(v.value) ? nlohmann::json(v.value) : nlohmann::json("inf")}});
    }
    return j;
}

namespace {

// Index i of a monotonicity violation refers to the pair (i, i + 1); index i
// of a convexity violation refers to the middle node of (i - 1, i, i + 1).
void check_samples(const std::vector<double>& xs, const std::vector<double>& bs, const char* source,
                   std::vector<CrossSectionViolation>& out)
{
    const std::size_t n = xs.size();
    auto tol = [](double a, double b) { return 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); };
    for (std::size_t i = 0; i < n; ++i) {
        if (!(bs[i] > 0.0)) {
            out.push_back({"positivity", source, i, xs[i], bs[i]});
        }
        if (!std::isfinite(bs[i])) {
            out.push_back({"upper_bound", source, i, xs[i], bs[i]});
        }
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::isfinite(bs[i]) && std::isfinite(bs[i + 1]) && bs[i + 1] < bs[i] - tol(bs[i], bs[i + 1])) {
            out.push_back({"monotonicity", source, i, xs[i], bs[i]});
        }
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(std::isfinite(bs[i - 1]) && std::isfinite(bs[i]) && std::isfinite(bs[i + 1]))) {
            continue;
        }
        const double left = (bs[i] - bs[i - 1]) / (xs[i] - xs[i - 1]);
        const double right = (bs[i + 1] - bs[i]) / (xs[i + 1] - xs[i]);
        if (right < left - tol(left, right)) {
            out.push_back({"convexity", source, i, xs[i], bs[i]});
        }
    }
}

}  // namespace

CrossSectionReport validate_cross_section(const CrossSection& cs, std::size_t grid_size)
{
    require(grid_size >= 3, "validation grid needs at least 3 points");
    CrossSectionReport report;
    report.id = cs.id();
    report.grid_size = grid_size;
    report.lower_bound = cs.lower_bound();
    report.upper_bound = cs.upper_bound();

    std::vector<double> xs(grid_size);
    std::vector<double> bs(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i) {
        xs[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(grid_size - 1);
        bs[i] = cs(xs[i]);
    }
    check_samples(xs, bs, "grid", report.violations);
    if (const auto* t = std::get_if<CrossSection::Tabulated>(&cs.kind())) {
        check_samples(t->x, t->values, "table", report.violations);
    }
    return report;
}

}  // namespace granbath
