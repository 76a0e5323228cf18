#pragma once

#include "switchavg/core.hpp"

#include <cstddef>
#include <vector>

namespace switchavg {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double v) const { return lo <= v && v <= hi; }
    bool overlaps(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
};

/// Binomial proportion with a 95% Wilson score interval.
struct ProportionEstimate {
    std::size_t successes = 0;
    std::size_t trials = 0;
    double p = 0.0;
    Interval ci;
};

ProportionEstimate wilson_estimate(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct SampleSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
    Interval ci;  // 95% Student-t interval for the mean
};

SampleSummary summarize(const std::vector<double>& values);

/// Two-sided 95% Student-t critical value.
double t_critical_95(std::size_t dof);

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
};

LinearFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace switchavg
