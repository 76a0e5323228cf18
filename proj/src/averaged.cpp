#include "switchavg/averaged.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace switchavg {

AveragedField::AveragedField(int dim, Function f, Vector weights)
    : dim_(dim), f_(std::move(f)), weights_(std::move(weights)) {
    require(dim_ >= 1, "vector field: dimension must be positive");
    require(static_cast<bool>(f_), "vector field: missing callback");
}

AveragedField AveragedField::scaled(double factor) const {
    Function inner = f_;
    return AveragedField(dim_,
                         [inner, factor](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
                             inner(x, out);
                             out *= factor;
                         },
                         weights_);
}

AveragedField average_field(const HybridModel& model, const Vector& nu) {
    require(nu.size() == model.regimes(), "average_field: weight vector must have one entry per regime");
    require((nu.array() >= 0.0).all() && std::abs(nu.sum() - 1.0) <= 1e-9,
            "average_field: weights must be a probability vector");
    const HybridModel::Drift drift = model.drift;
    const int dim = model.dim;
    return AveragedField(
        dim,
        [drift, nu, dim](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
            Vector fi(dim);
            out.setZero();
            for (Index i = 0; i < nu.size(); ++i) {
                if (nu(i) == 0.0) continue;
                drift(x, static_cast<int>(i), fi);
                out += nu(i) * fi;
            }
        },
        nu);
}

AveragedField average_field(const HybridModel& model) {
    if (std::holds_alternative<Generator>(model.switching)) {
        return average_field(model, stationary_at(model.switching, Vector::Zero(model.dim)));
    }
    const HybridModel::Drift drift = model.drift;
    const Switching switching = model.switching;
    const int dim = model.dim;
    return AveragedField(dim, [drift, switching, dim](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
        const Vector nu = stationary_at(switching, x);
        Vector fi(dim);
        out.setZero();
        for (Index i = 0; i < nu.size(); ++i) {
            drift(x, static_cast<int>(i), fi);
            out += nu(i) * fi;
        }
    });
}

void rk4_step(const AveragedField& field, Eigen::Ref<Vector> x, double h) {
    const int d = field.dim();
    Vector k1(d), k2(d), k3(d), k4(d);
    field.eval(x, k1);
    field.eval(x + 0.5 * h * k1, k2);
    field.eval(x + 0.5 * h * k2, k3);
    field.eval(x + h * k3, k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

void check_state(const Eigen::Ref<const Vector>& x, double t, double guard) {
    if (!x.allFinite()) throw NumericError("ODE: non-finite state at t=" + std::to_string(t));
    if (x.norm() > guard) {
        throw BlowUpError("ODE: state left the guard ball of radius " + std::to_string(guard) +
                              " at t=" + std::to_string(t),
                          t);
    }
}

std::size_t steps_for(double horizon, double step) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(horizon / step - 1e-9)));
}

}  // namespace

OdePath integrate_ode(const AveragedField& field, const Eigen::Ref<const Vector>& x0, double horizon, double step,
                      double guard_radius) {
    require(step > 0.0 && horizon > 0.0, "ODE: step and horizon must be positive");
    require(x0.size() == field.dim(), "ODE: initial state has wrong dimension");
    const std::size_t n = steps_for(horizon, step);
    OdePath path;
    path.times.resize(n + 1);
    path.states.resize(field.dim(), static_cast<Index>(n + 1));
    Vector x = x0;
    path.times[0] = 0.0;
    path.states.col(0) = x;
    for (std::size_t k = 1; k <= n; ++k) {
        const double t_prev = static_cast<double>(k - 1) * step;
        const double t = k == n ? horizon : static_cast<double>(k) * step;
        rk4_step(field, x, t - t_prev);
        check_state(x, t, guard_radius);
        path.times[k] = t;
        path.states.col(static_cast<Index>(k)) = x;
    }
    return path;
}

Vector flow(const AveragedField& field, const Eigen::Ref<const Vector>& x0, double horizon, double step,
            double guard_radius) {
    require(step > 0.0 && horizon >= 0.0, "flow: step must be positive and horizon nonnegative");
    Vector x = x0;
    if (horizon == 0.0) return x;
    const std::size_t n = steps_for(horizon, step);
    for (std::size_t k = 1; k <= n; ++k) {
        const double t_prev = static_cast<double>(k - 1) * step;
        const double t = k == n ? horizon : static_cast<double>(k) * step;
        rk4_step(field, x, t - t_prev);
        check_state(x, t, guard_radius);
    }
    return x;
}

Matrix jacobian(const AveragedField& field, const Eigen::Ref<const Vector>& x) {
    const int d = field.dim();
    const double h = 1e-6 * (1.0 + x.norm());
    Matrix jac(d, d);
    Vector xp = x;
    Vector xm = x;
    Vector fp(d), fm(d);
    for (int j = 0; j < d; ++j) {
        xp(j) = x(j) + h;
        xm(j) = x(j) - h;
        field.eval(xp, fp);
        field.eval(xm, fm);
        jac.col(j) = (fp - fm) / (2.0 * h);
        xp(j) = x(j);
        xm(j) = x(j);
    }
    return jac;
}

std::string to_string(EquilibriumKind kind) {
    switch (kind) {
        case EquilibriumKind::source: return "source";
        case EquilibriumKind::sink: return "sink";
        case EquilibriumKind::saddle: return "saddle";
        case EquilibriumKind::nonhyperbolic: return "nonhyperbolic";
    }
    return "unknown";
}

Equilibrium classify_equilibrium(const AveragedField& field, const Eigen::Ref<const Vector>& x) {
    Equilibrium eq;
    eq.location = x;
    eq.residual = field(x).norm();
    eq.jacobian = jacobian(field, x);
    eq.eigenvalues = Eigen::EigenSolver<Matrix>(eq.jacobian, false).eigenvalues();
    const auto re = eq.eigenvalues.real().array();
    if ((re.abs() <= kHyperbolicityThreshold).any()) {
        eq.kind = EquilibriumKind::nonhyperbolic;
    } else if ((re > 0.0).all()) {
        eq.kind = EquilibriumKind::source;
    } else if ((re < 0.0).all()) {
        eq.kind = EquilibriumKind::sink;
    } else {
        eq.kind = EquilibriumKind::saddle;
    }
    if (eq.kind == EquilibriumKind::saddle && field.dim() == 2) eq.stable_normal = stable_manifold_normal(eq);
    return eq;
}

namespace {

std::optional<Vector> newton(const AveragedField& field, Vector x, double tol) {
    constexpr int kMaxIter = 60;
    for (int it = 0; it < kMaxIter; ++it) {
        const Vector fx = field(x);
        if (!fx.allFinite()) return std::nullopt;
        if (fx.norm() <= tol) return x;
        const auto lu = jacobian(field, x).fullPivLu();
        if (!lu.isInvertible()) return std::nullopt;
        const Vector dx = lu.solve(fx);
        x -= dx;
        if (!x.allFinite() || x.norm() > 1e8) return std::nullopt;
        if (dx.norm() <= 1e-15 * (1.0 + x.norm())) break;
    }
    const Vector fx = field(x);
    if (fx.allFinite() && fx.norm() <= 1e-9) return x;
    return std::nullopt;
}

}  // namespace

std::vector<Equilibrium> find_equilibria(const AveragedField& field, const Box& box, int n_per_axis, double tol) {
    const int d = field.dim();
    require(box.dim() == d && box.hi.size() == d, "equilibria: box dimension mismatch");
    require((box.hi.array() >= box.lo.array()).all(), "equilibria: empty box");
    require(n_per_axis >= 2, "equilibria: need at least 2 grid nodes per axis");
    std::vector<Vector> roots;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    const double slack = 1e-9 * (1.0 + std::max(box.lo.cwiseAbs().maxCoeff(), box.hi.cwiseAbs().maxCoeff()));
    for (;;) {
        Vector seed(d);
        for (int a = 0; a < d; ++a) {
            const double u = static_cast<double>(idx[static_cast<std::size_t>(a)]) / (n_per_axis - 1);
            seed(a) = box.lo(a) + u * (box.hi(a) - box.lo(a));
        }
        if (auto root = newton(field, seed, tol); root && box.contains(*root, slack)) {
            const bool known = std::any_of(roots.begin(), roots.end(),
                                           [&](const Vector& r) { return (r - *root).norm() <= 1e-6; });
            if (!known) roots.push_back(*root);
        }
        int a = 0;
        while (a < d && ++idx[static_cast<std::size_t>(a)] == n_per_axis) idx[static_cast<std::size_t>(a++)] = 0;
        if (a == d) break;
    }
    std::sort(roots.begin(), roots.end(), [](const Vector& l, const Vector& r) {
        return std::lexicographical_compare(l.data(), l.data() + l.size(), r.data(), r.data() + r.size());
    });
    std::vector<Equilibrium> out;
    out.reserve(roots.size());
    for (const auto& r : roots) out.push_back(classify_equilibrium(field, r));
    return out;
}

Vector stable_direction(const Equilibrium& eq) {
    require(eq.kind == EquilibriumKind::saddle, "stable direction: equilibrium is not a saddle");
    require(eq.location.size() == 2, "stable direction: only planar saddles are supported");
    const Eigen::EigenSolver<Matrix> es(eq.jacobian, true);
    const auto& ev = es.eigenvalues();
    Index k = 0;
    for (Index i = 0; i < ev.size(); ++i) {
        if (ev(i).real() < 0.0) k = i;
    }
    if (std::abs(ev(k).imag()) > 0.0 || !(ev(k).real() < 0.0)) {
        throw NumericError("stable direction: planar saddle without a real negative eigenvalue");
    }
    Vector v = es.eigenvectors().col(k).real();
    v /= v.norm();
    return v;
}

Vector stable_manifold_normal(const Equilibrium& eq) {
    const Vector v = stable_direction(eq);
    Vector beta(2);
    beta << -v(1), v(0);
    Index big = 0;
    beta.cwiseAbs().maxCoeff(&big);
    if (beta(big) < 0.0) beta = -beta;
    return beta;
}

double LimitCycle::time_average(const std::function<double(const Eigen::Ref<const Vector>&)>& g) const {
    double acc = 0.0;
    for (Index k = 0; k < orbit.cols(); ++k) acc += g(orbit.col(k));
    return acc / static_cast<double>(orbit.cols());
}

namespace {

// Time tau in [0, h] at which the RK4 step from x hits the section; secant refinement
// seeded by linear interpolation of the section values at both ends of the step.
double crossing_offset(const AveragedField& field, const PoincareSection& sec, const Vector& x, double g0, double g1,
                       double h) {
    auto g_at = [&](double tau) {
        Vector y = x;
        if (tau > 0.0) rk4_step(field, y, tau);
        return sec.value(y);
    };
    double a = 0.0, ga = g0;
    double b = h, gb = g1;
    double tau = h * g0 / (g0 - g1);
    for (int it = 0; it < 50; ++it) {
        const double gt = g_at(tau);
        if (std::abs(gt) <= 1e-15 || b - a <= 1e-15) break;
        if ((gt < 0.0) == (ga < 0.0)) {
            a = tau;
            ga = gt;
        } else {
            b = tau;
            gb = gt;
        }
        double next = a - ga * (b - a) / (gb - ga);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        tau = next;
    }
    return tau;
}

}  // namespace

Matrix sample_cycle(const LimitCycle& cycle, int atoms) {
    require(atoms >= 1, "cycle samples: need at least one atom");
    require(cycle.period > 0.0, "cycle samples: invalid cycle");
    const double dt = cycle.period / atoms;
    const int sub = std::max(1, static_cast<int>(std::ceil(dt / cycle.step - 1e-9)));
    const double h = dt / sub;
    Matrix out(cycle.field.dim(), atoms);
    Vector x = cycle.start();
    for (int k = 0; k < atoms; ++k) {
        out.col(k) = x;
        for (int s = 0; s < sub; ++s) rk4_step(cycle.field, x, h);
    }
    return out;
}

LimitCycle detect_limit_cycle(const AveragedField& field, const Eigen::Ref<const Vector>& seed,
                              const CycleOptions& options, const std::vector<Equilibrium>& equilibria) {
    require(seed.size() == field.dim(), "cycle: seed has wrong dimension");
    for (const auto& eq : equilibria) {
        require((seed - eq.location).norm() >= 1e-3, "cycle: seed lies within 1e-3 of an equilibrium");
    }
    require(field(seed).norm() > 1e-12, "cycle: seed is a rest point");
    require(options.step > 0.0 && options.max_crossings >= 2 && options.samples >= 1, "cycle: invalid options");

    const double h = options.step;
    Vector x = flow(field, seed, options.burn_in, h, options.guard_radius);
    PoincareSection sec;
    if (options.section) {
        sec = *options.section;
        require(sec.anchor.size() == field.dim() && sec.normal.size() == field.dim() && sec.normal.norm() > 0.0,
                "cycle: malformed section");
        sec.normal /= sec.normal.norm();
    } else {
        const Vector fx = field(x);
        require(fx.norm() > 1e-12, "cycle: post-burn state is a rest point");
        sec.anchor = x;
        sec.normal = fx / fx.norm();
    }

    std::vector<Vector> hits;
    std::vector<double> hit_times;
    double t = 0.0;
    double last_hit_time = 0.0;
    double g_prev = sec.value(x);
    int growing = 0;
    double prev_gap = std::numeric_limits<double>::infinity();
    double first_gap = -1.0;
    while (static_cast<int>(hits.size()) < options.max_crossings) {
        Vector next = x;
        rk4_step(field, next, h);
        check_state(next, t + h, options.guard_radius);
        const double g_next = sec.value(next);
        if (g_prev < 0.0 && g_next >= 0.0) {
            const double tau = crossing_offset(field, sec, x, g_prev, g_next, h);
            Vector c = x;
            rk4_step(field, c, tau);
            hits.push_back(c);
            hit_times.push_back(t + tau);
            last_hit_time = t + tau;
            if (hits.size() >= 2) {
                const double gap = (hits.back() - hits[hits.size() - 2]).norm();
                if (first_gap < 0.0) first_gap = gap;
                if (gap < options.closure_tol) break;
                growing = gap > prev_gap ? growing + 1 : 0;
                if (growing >= 5 && gap > 10.0 * first_gap) throw NumericError("cycle: unstable or no cycle (crossings diverge)");
                prev_gap = gap;
            }
        }
        x = next;
        g_prev = g_next;
        t += h;
        if (t - last_hit_time > options.max_gap_time) throw NumericError("cycle: no cycle found (no section crossings)");
    }
    if (hits.size() < 2) throw NumericError("cycle: no cycle found");
    const double gap = (hits.back() - hits[hits.size() - 2]).norm();
    if (!(gap < 1e-6)) {
        throw NumericError("cycle: return map did not close (last gap " + std::to_string(gap) + ")");
    }

    LimitCycle cycle;
    cycle.period = hit_times.back() - hit_times[hit_times.size() - 2];
    cycle.section = sec;
    cycle.crossings = static_cast<int>(hits.size());
    cycle.closure_gap = gap;
    cycle.field = field;
    cycle.step = h;
    cycle.orbit = hits.back();
    cycle.orbit = sample_cycle(cycle, options.samples);
    return cycle;
}

Measure cycle_occupation_measure(const LimitCycle& cycle, int atoms) {
    require(atoms >= 8, "cycle measure: need at least 8 atoms");
    Matrix pts = atoms == cycle.orbit.cols() ? cycle.orbit : sample_cycle(cycle, atoms);
    return Measure::uniform(std::move(pts));
}

}  // namespace switchavg
