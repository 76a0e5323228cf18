#pragma once

#include "switchavg/averaged.hpp"
#include "switchavg/core.hpp"
#include "switchavg/ctmc.hpp"
#include "switchavg/hybrid_sde.hpp"
#include "switchavg/stats.hpp"

#include <functional>
#include <string>
#include <vector>

namespace switchavg {

/// h(x, y, i) in the predator-prey drift (x phi, y psi).
using FunctionalResponse = std::function<double(double x, double y, int regime)>;

/// General switching predator-prey system
///   dX = X (a - bX - Y h) dt + sqrt(delta) lambda X dW1
///   dY = Y (-c - dY + f X h) dt + sqrt(delta) rho Y dW2
/// with one entry per regime in every coefficient vector.
struct PredatorPreyParams {
    std::vector<double> a, b, c, d, f, lambda, rho;
    FunctionalResponse h;
    double h_bound = 0.0;

    int regimes() const { return static_cast<int>(a.size()); }
    /// Positivity of all scalars, and 0 <= h <= h_bound on a probe_n x probe_n grid over the box.
    void validate(const Box& probe_box, int probe_n = 64) const;

    double phi(double x, double y, int i) const { return a[i] - b[i] * x - y * h(x, y, i); }
    double psi(double x, double y, int i) const { return -c[i] - d[i] * y + f[i] * x * h(x, y, i); }
};

/// m(i) / (a(i) + b(i) x).
FunctionalResponse holling_type2(std::vector<double> m, std::vector<double> a, std::vector<double> b);
/// m1 / (m2(i) + m3 x + m4 y), bounded by m1 / min m2 on the closed quadrant.
FunctionalResponse beddington_deangelis(double m1, std::vector<double> m2, double m3, double m4);

/// Logistic prey, Holling II predator form:
///   dx = [r x (1 - x/K) - m x y / (a + b x)] dt + sqrt(delta) lambda x dW1
///   dy = y [-d + e m x / (a + b x) - f y] dt + sqrt(delta) rho y dW2
struct HollingParams {
    std::vector<double> r, K, m, a, b, d, e, f, lambda, rho;

    int regimes() const { return static_cast<int>(r.size()); }
    void validate() const;
    /// Maps onto the general form: a <- r, b <- r/K, h <- m/(a + b x), c <- d, d <- f, f <- e.
    PredatorPreyParams general() const;
};

HybridModel predator_prey_model(const PredatorPreyParams& p, const Generator& q);

HollingParams paper_example_params();
Generator paper_example_generator();
/// The two-regime Holling instance with symmetric switching Q = [[-1, 1], [1, -1]].
HybridModel paper_example_model();

/// Coefficients of an averaged field of the form
///   x' = r x (1 - x/K) - m x y / (1 + x),  y' = y (-d + em x / (1 + x) - f y),
/// recovered from field evaluations.
struct HollingCoefficients {
    double r = 0.0, K = 0.0, m = 0.0, em = 0.0, f = 0.0, d = 0.0;
};
HollingCoefficients fit_holling_coefficients(const AveragedField& field);

struct AveragedPPQuantities {
    double a_bar = 0.0, b_bar = 0.0, c_bar = 0.0, d_bar = 0.0;
    std::function<double(double, double)> h1;  // sum_i nu_i h(., ., i)
    std::function<double(double, double)> h2;  // sum_i nu_i f(i) h(., ., i)
    double boundary_growth = 0.0;  // -c_bar + (a_bar/b_bar) h2(a_bar/b_bar, 0)
    double gamma0 = 0.0;           // 0.5 min(c_bar, boundary_growth)
    double gamma0_h1 = 0.0;        // same with h1 in place of h2
};

AveragedPPQuantities averaged_quantities(const PredatorPreyParams& p, const Vector& nu);

struct PersistenceFunctional {
    AveragedPPQuantities averages;
    std::function<double(const Eigen::Ref<const Vector>& z, int regime)> upsilon;
    std::function<double(const Eigen::Ref<const Vector>& z)> upsilon_bar;
};

/// Upsilon(z, i) = (2 c_bar / a_bar) phi(z, i) + psi(z, i) and its nu-average.
/// Throws ValidationError when (a_bar/b_bar) h2(a_bar/b_bar, 0) > c_bar fails.
PersistenceFunctional persistence_functional(const PredatorPreyParams& p, const Vector& nu);

struct MomentDiagnostics {
    std::vector<double> times;
    Vector pointwise;
    Vector running_average;
    double sup_mean_sq_norm = 0.0;
    double final_running_average = 0.0;
    double limsup_proxy = 0.0;  // max of mean |Z|^2 over the last quarter
    double final_half_slope = 0.0;
    Interval slope_ci;
    bool slope_from_paths = false;
};

/// Running second-moment diagnostics. With per-path norms retained, the slope CI is
/// the Student interval of per-path running-average slopes over the final half.
MomentDiagnostics moment_diagnostics(const BatchSummary& batch);

/// dx = -theta x dt + sigma dW in d = 1, one regime.
HybridModel ornstein_uhlenbeck_model(double theta = 1.0, double sigma = 1.0);
/// r' = r (1 - r^2), angle' = 1 in Cartesian form, one regime, no noise channel.
HybridModel hopf_normal_form_model();
/// f(x, i) = A_i x, constant diffusion sigma_i, for degenerate audits.
HybridModel linear_switching_model(std::vector<Matrix> a, std::vector<Matrix> sigma, const Generator& q);

}  // namespace switchavg
