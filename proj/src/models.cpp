#include "switchavg/models.hpp"

#include <algorithm>
#include <cmath>

namespace switchavg {

namespace {

void require_positive(const std::vector<double>& v, const char* name, std::size_t m) {
    require(v.size() == m, std::string("predator-prey: '") + name + "' needs one entry per regime");
    for (std::size_t i = 0; i < v.size(); ++i) {
        require(std::isfinite(v[i]) && v[i] > 0.0,
                std::string("predator-prey: '") + name + "' must be positive (regime " + std::to_string(i + 1) + ")");
    }
}

}  // namespace

void PredatorPreyParams::validate(const Box& probe_box, int probe_n) const {
    const std::size_t m = a.size();
    require(m >= 1, "predator-prey: no regimes");
    require_positive(a, "a", m);
    require_positive(b, "b", m);
    require_positive(c, "c", m);
    require_positive(d, "d", m);
    require_positive(f, "f", m);
    require_positive(lambda, "lambda", m);
    require_positive(rho, "rho", m);
    require(static_cast<bool>(h), "predator-prey: missing functional response");
    require(h_bound >= 0.0, "predator-prey: functional response bound must be >= 0");
    require(probe_n >= 2, "predator-prey: probe grid needs >= 2 nodes per axis");
    for (int i = 0; i < static_cast<int>(m); ++i) {
        for (int u = 0; u < probe_n; ++u) {
            for (int v = 0; v < probe_n; ++v) {
                const double x = probe_box.lo(0) + (probe_box.hi(0) - probe_box.lo(0)) * u / (probe_n - 1);
                const double y = probe_box.lo(1) + (probe_box.hi(1) - probe_box.lo(1)) * v / (probe_n - 1);
                const double hv = h(x, y, i);
                require(std::isfinite(hv) && hv >= 0.0 && hv <= h_bound,
                        "predator-prey: functional response not in [0, bound] at (" + std::to_string(x) + ", " +
                            std::to_string(y) + ") regime " + std::to_string(i + 1));
            }
        }
    }
}

FunctionalResponse holling_type2(std::vector<double> m, std::vector<double> a, std::vector<double> b) {
    require(m.size() == a.size() && a.size() == b.size(), "Holling response: coefficient sizes differ");
    return [m = std::move(m), a = std::move(a), b = std::move(b)](double x, double, int i) {
        return m[i] / (a[i] + b[i] * x);
    };
}

FunctionalResponse beddington_deangelis(double m1, std::vector<double> m2, double m3, double m4) {
    require(m1 > 0.0 && m3 >= 0.0 && m4 >= 0.0, "Beddington-DeAngelis: m1 > 0, m3 >= 0, m4 >= 0 required");
    require(!m2.empty() && std::all_of(m2.begin(), m2.end(), [](double v) { return v > 0.0; }),
            "Beddington-DeAngelis: m2(i) must be positive");
    return [m1, m2 = std::move(m2), m3, m4](double x, double y, int i) { return m1 / (m2[i] + m3 * x + m4 * y); };
}

void HollingParams::validate() const {
    const std::size_t m = r.size();
    require(m >= 1, "Holling: no regimes");
    for (const auto* v : {&r, &K, &this->m, &a, &b, &d, &e, &f, &lambda, &rho}) {
        require(v->size() == m, "Holling: every coefficient needs one entry per regime");
        for (double x : *v) require(std::isfinite(x) && x > 0.0, "Holling: coefficients must be positive");
    }
}

PredatorPreyParams HollingParams::general() const {
    validate();
    PredatorPreyParams p;
    const std::size_t n = r.size();
    p.a = r;
    p.b.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.b[i] = r[i] / K[i];
    p.c = d;
    p.d = f;
    p.f = e;
    p.lambda = lambda;
    p.rho = rho;
    p.h = holling_type2(m, a, b);
    double bound = 0.0;
    for (std::size_t i = 0; i < n; ++i) bound = std::max(bound, m[i] / a[i]);
    p.h_bound = bound;
    return p;
}

HybridModel predator_prey_model(const PredatorPreyParams& p, const Generator& q) {
    Box probe{Vector::Zero(2), Vector::Constant(2, 10.0)};
    p.validate(probe);
    require(q.size() == p.regimes(), "predator-prey: generator size must match the number of regimes");
    HybridModel model;
    model.name = "predator_prey";
    model.dim = 2;
    model.noise_dim = 2;
    model.switching = q;
    model.linear_noise = {true, true};
    model.positive_domain = true;
    model.drift = [p](const Eigen::Ref<const Vector>& z, int i, Eigen::Ref<Vector> out) {
        const double x = z(0);
        const double y = z(1);
        out(0) = x * p.phi(x, y, i);
        out(1) = y * p.psi(x, y, i);
    };
    model.diffusion = [p](const Eigen::Ref<const Vector>& z, int i, Eigen::Ref<Matrix> out) {
        out.setZero();
        out(0, 0) = p.lambda[static_cast<std::size_t>(i)] * z(0);
        out(1, 1) = p.rho[static_cast<std::size_t>(i)] * z(1);
    };
    Vector pa(2), pb(2);
    pa << 1.0, 2.0;
    pb << 3.0, 0.5;
    model.validate(pa, pb);
    return model;
}

HollingParams paper_example_params() {
    HollingParams p;
    p.r = {0.9, 1.1};
    p.K = {4.737, 5.238};
    p.m = {1.2, 0.8};
    p.a = {1.0, 1.0};
    p.b = {1.0, 1.0};
    p.d = {0.85, 1.15};
    p.e = {1.0, 2.5};
    p.f = {0.03, 0.01};
    p.lambda = {1.0, 2.0};
    p.rho = {3.0, 1.0};
    return p;
}

Generator paper_example_generator() {
    Matrix q(2, 2);
    q << -1.0, 1.0, 1.0, -1.0;
    return Generator(q);
}

HybridModel paper_example_model() {
    // Predator noise is rho(i) y dW2, matching the general predator-prey form.
    HybridModel model = predator_prey_model(paper_example_params().general(), paper_example_generator());
    model.name = "paper_example";
    return model;
}

HollingCoefficients fit_holling_coefficients(const AveragedField& field) {
    require(field.dim() == 2, "Holling fit: planar field required");
    auto at = [&](double x, double y) {
        Vector z(2);
        z << x, y;
        return field(z);
    };
    HollingCoefficients c;
    const double g1 = at(1.0, 0.0)(0);
    const double g2 = at(2.0, 0.0)(0) / 2.0;
    const double r_over_k = g1 - g2;
    c.r = g1 + r_over_k;
    c.K = c.r / r_over_k;
    c.m = 2.0 * (g1 - at(1.0, 1.0)(0));
    const double p1 = at(0.0, 1.0)(1);
    const double p2 = at(0.0, 2.0)(1) / 2.0;
    c.f = p1 - p2;
    c.d = -p1 - c.f;
    c.em = 2.0 * (at(1.0, 1.0)(1) + c.d + c.f);
    return c;
}

AveragedPPQuantities averaged_quantities(const PredatorPreyParams& p, const Vector& nu) {
    require(nu.size() == p.regimes(), "averages: weight vector size mismatch");
    AveragedPPQuantities q;
    for (int i = 0; i < p.regimes(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        q.a_bar += nu(i) * p.a[k];
        q.b_bar += nu(i) * p.b[k];
        q.c_bar += nu(i) * p.c[k];
        q.d_bar += nu(i) * p.d[k];
    }
    q.h1 = [p, nu](double x, double y) {
        double acc = 0.0;
        for (int i = 0; i < p.regimes(); ++i) acc += nu(i) * p.h(x, y, i);
        return acc;
    };
    q.h2 = [p, nu](double x, double y) {
        double acc = 0.0;
        for (int i = 0; i < p.regimes(); ++i) acc += nu(i) * p.f[static_cast<std::size_t>(i)] * p.h(x, y, i);
        return acc;
    };
    const double x_star = q.a_bar / q.b_bar;
    q.boundary_growth = -q.c_bar + x_star * q.h2(x_star, 0.0);
    q.gamma0 = 0.5 * std::min(q.c_bar, q.boundary_growth);
    q.gamma0_h1 = 0.5 * std::min(q.c_bar, -q.c_bar + x_star * q.h1(x_star, 0.0));
    return q;
}

PersistenceFunctional persistence_functional(const PredatorPreyParams& p, const Vector& nu) {
    PersistenceFunctional out;
    out.averages = averaged_quantities(p, nu);
    const auto& q = out.averages;
    const double lhs = (q.a_bar / q.b_bar) * q.h2(q.a_bar / q.b_bar, 0.0);
    if (!(lhs > q.c_bar)) {
        throw ValidationError("persistence condition fails: (a_bar/b_bar) h2(a_bar/b_bar, 0) = " + std::to_string(lhs) +
                              " is not greater than c_bar = " + std::to_string(q.c_bar));
    }
    const double weight = 2.0 * q.c_bar / q.a_bar;
    out.upsilon = [p, weight](const Eigen::Ref<const Vector>& z, int i) {
        return weight * p.phi(z(0), z(1), i) + p.psi(z(0), z(1), i);
    };
    out.upsilon_bar = [p, nu, weight](const Eigen::Ref<const Vector>& z) {
        double acc = 0.0;
        for (int i = 0; i < p.regimes(); ++i) acc += nu(i) * (weight * p.phi(z(0), z(1), i) + p.psi(z(0), z(1), i));
        return acc;
    };
    return out;
}

MomentDiagnostics moment_diagnostics(const BatchSummary& batch) {
    const MomentCourse course = empirical_second_moment_course(batch);
    MomentDiagnostics out;
    out.times = course.times;
    out.pointwise = course.pointwise;
    out.running_average = course.running_average;
    out.sup_mean_sq_norm = course.pointwise.maxCoeff();
    out.final_running_average = course.running_average(course.running_average.size() - 1);
    const double horizon = course.times.back();
    double limsup = 0.0;
    std::vector<double> half_t;
    std::vector<std::size_t> half_idx;
    for (std::size_t k = 0; k < course.times.size(); ++k) {
        if (course.times[k] >= 0.75 * horizon) limsup = std::max(limsup, course.pointwise(static_cast<Index>(k)));
        if (course.times[k] >= 0.5 * horizon) {
            half_t.push_back(course.times[k]);
            half_idx.push_back(k);
        }
    }
    out.limsup_proxy = limsup;
    require(half_t.size() >= 3, "moment diagnostics: too few grid points in the final half");

    auto slice = [&](const Vector& series) {
        std::vector<double> y;
        y.reserve(half_idx.size());
        for (std::size_t k : half_idx) y.push_back(series(static_cast<Index>(k)));
        return y;
    };
    if (batch.path_sq_norms.rows() == static_cast<Index>(batch.n_paths) && batch.n_paths >= 2) {
        std::vector<double> slopes;
        slopes.reserve(batch.n_paths);
        for (Index p = 0; p < batch.path_sq_norms.rows(); ++p) {
            const Vector run = running_time_average(course.times, batch.path_sq_norms.row(p).transpose());
            slopes.push_back(least_squares_line(half_t, slice(run)).slope);
        }
        const SampleSummary s = summarize(slopes);
        out.final_half_slope = s.mean;
        out.slope_ci = s.ci;
        out.slope_from_paths = true;
    } else {
        const LinearFit fit = least_squares_line(half_t, slice(course.running_average));
        const double half = t_critical_95(half_t.size() - 2) * fit.slope_se;
        out.final_half_slope = fit.slope;
        out.slope_ci = {fit.slope - half, fit.slope + half};
    }
    return out;
}

HybridModel ornstein_uhlenbeck_model(double theta, double sigma) {
    HybridModel model;
    model.name = "ornstein_uhlenbeck";
    model.dim = 1;
    model.noise_dim = 1;
    model.drift = [theta](const Eigen::Ref<const Vector>& x, int, Eigen::Ref<Vector> out) { out(0) = -theta * x(0); };
    model.diffusion = [sigma](const Eigen::Ref<const Vector>&, int, Eigen::Ref<Matrix> out) { out(0, 0) = sigma; };
    return model;
}

HybridModel hopf_normal_form_model() {
    HybridModel model;
    model.name = "hopf_normal_form";
    model.dim = 2;
    model.noise_dim = 0;
    model.drift = [](const Eigen::Ref<const Vector>& z, int, Eigen::Ref<Vector> out) {
        const double r2 = z.squaredNorm();
        out(0) = z(0) * (1.0 - r2) - z(1);
        out(1) = z(1) * (1.0 - r2) + z(0);
    };
    return model;
}

HybridModel linear_switching_model(std::vector<Matrix> a, std::vector<Matrix> sigma, const Generator& q) {
    require(!a.empty() && a.size() == sigma.size() && static_cast<int>(a.size()) == q.size(),
            "linear model: one drift and diffusion matrix per regime");
    const auto d = a.front().rows();
    const auto m = sigma.front().cols();
    for (std::size_t i = 0; i < a.size(); ++i) {
        require(a[i].rows() == d && a[i].cols() == d && sigma[i].rows() == d && sigma[i].cols() == m,
                "linear model: inconsistent matrix shapes");
    }
    HybridModel model;
    model.name = "linear";
    model.dim = static_cast<int>(d);
    model.noise_dim = static_cast<int>(m);
    model.switching = q;
    model.drift = [a](const Eigen::Ref<const Vector>& x, int i, Eigen::Ref<Vector> out) {
        out.noalias() = a[static_cast<std::size_t>(i)] * x;
    };
    model.diffusion = [sigma](const Eigen::Ref<const Vector>&, int i, Eigen::Ref<Matrix> out) {
        out = sigma[static_cast<std::size_t>(i)];
    };
    return model;
}

}  // namespace switchavg
