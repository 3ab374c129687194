#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace granbath {

struct MeanError
{
    double mean = 0.0;
    double std_error = 0.0;  // sample sd / sqrt(n); 0 when n < 2
};

MeanError mean_stderr(std::span<const double> x);

struct LinearFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope x; needs two distinct x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// Jackknife standard error of leave-one-out estimates.
double jackknife_se(std::span<const double> leave_one_out);

}  // namespace granbath
