#include "switchavg/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace switchavg {

ProportionEstimate wilson_estimate(std::size_t successes, std::size_t trials, double z) {
    require(trials > 0 && successes <= trials, "wilson: need 0 <= successes <= trials, trials > 0");
    ProportionEstimate e;
    e.successes = successes;
    e.trials = trials;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    e.p = p;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    e.ci.lo = std::clamp(centre - half, 0.0, 1.0);
    e.ci.hi = std::clamp(centre + half, 0.0, 1.0);
    if (successes == 0) e.ci.lo = 0.0;
    if (successes == trials) e.ci.hi = 1.0;
    return e;
}

double t_critical_95(std::size_t dof) {
    require(dof >= 1, "t quantile: need at least one degree of freedom");
    const boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(boost::math::complement(dist, 0.025));
}

SampleSummary summarize(const std::vector<double>& values) {
    require(!values.empty(), "summary: no values");
    SampleSummary s;
    s.n = values.size();
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
        const double half = t_critical_95(s.n - 1) * s.sd / std::sqrt(static_cast<double>(s.n));
        s.ci = {s.mean - half, s.mean + half};
    } else {
        s.ci = {s.mean, s.mean};
    }
    return s;
}

LinearFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 3, "line fit: need at least three points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    require(sxx > 0.0, "line fit: abscissae are all equal");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double r = y[k] - fit.intercept - fit.slope * x[k];
        rss += r * r;
    }
    fit.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
    return fit;
}

}  // namespace switchavg
