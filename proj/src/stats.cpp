#include "granbath/stats.hpp"

#include <cmath>

#include "granbath/errors.hpp"

namespace granbath {

MeanError mean_stderr(std::span<const double> x)
{
    MeanError r;
    if (x.empty()) {
        return r;
    }
    const double n = static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) {
        s += v;
    }
    r.mean = s / n;
    if (x.size() < 2) {
        return r;
    }
    double ss = 0.0;
    for (double v : x) {
        ss += (v - r.mean) * (v - r.mean);
    }
    r.std_error = std::sqrt(ss / (n - 1.0) / n);
    return r;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y)
{
    require(x.size() == y.size(), "least_squares: size mismatch");
    require(x.size() >= 2, "least_squares: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0.0, "least_squares: abscissae are all equal");
    LinearFit f;
    f.points = x.size();
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - f.intercept - f.slope * x[i];
        rss += e * e;
    }
    f.r_squared = syy > 0.0 ? 1.0 - rss / syy : 1.0;
    f.slope_se = x.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
    return f;
}

double jackknife_se(std::span<const double> leave_one_out)
{
    const auto n = static_cast<double>(leave_one_out.size());
    if (leave_one_out.size() < 2) {
        return 0.0;
    }
    double m = 0.0;
    for (double v : leave_one_out) {
        m += v;
    }
    m /= n;
    double ss = 0.0;
    for (double v : leave_one_out) {
        ss += (v - m) * (v - m);
    }
    return std::sqrt((n - 1.0) / n * ss);
}

}  // namespace granbath
