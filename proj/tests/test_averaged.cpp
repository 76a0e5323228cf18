#include "switchavg/averaged.hpp"
#include "switchavg/models.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace switchavg;

namespace {

Vector v2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

AveragedField linear_field(double rate) {
    return AveragedField(1, [rate](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) { out = rate * x; });
}

Box square(double lo, double hi) { return Box{Vector::Constant(2, lo), Vector::Constant(2, hi)}; }

const Equilibrium* nearest(const std::vector<Equilibrium>& eqs, const Vector& x) {
    const Equilibrium* best = nullptr;
    for (const auto& e : eqs) {
        if (!best || (e.location - x).norm() < (best->location - x).norm()) best = &e;
    }
    return best;
}

}  // namespace

TEST_CASE("averaged field is the stationary convex combination") {
    const HybridModel model = paper_example_model();
    const AveragedField field = average_field(model);
    REQUIRE(field.weights().size() == 2);
    CHECK(std::abs(field.weights()(0) - 0.5) <= 1e-12);
    RandomStream rng(3);
    for (int k = 0; k < 100; ++k) {
        const Vector x = v2(6.0 * rng.uniform(), 6.0 * rng.uniform());
        const Vector explicit_mix = 0.5 * model.drift_at(x, 0) + 0.5 * model.drift_at(x, 1);
        CHECK((field(x) - explicit_mix).cwiseAbs().maxCoeff() <= 1e-12);
    }

    const HybridModel single = ornstein_uhlenbeck_model(2.0, 1.0);
    const AveragedField same = average_field(single);
    Vector x(1);
    x << 0.7;
    CHECK(same(x)(0) == single.drift_at(x, 0)(0));

    CHECK_THROWS_AS(average_field(model, Vector::Ones(3) / 3.0), ValidationError);
}

TEST_CASE("averaged coefficients of the worked example") {
    const HollingCoefficients c = fit_holling_coefficients(average_field(paper_example_model()));
    CHECK(std::abs(c.r - 1.0) <= 1e-3);
    CHECK(std::abs(c.r / c.K - 0.2) <= 1e-3);
    CHECK(std::abs(c.K - 5.0) <= 1e-3);
    CHECK(std::abs(c.m - 1.0) <= 1e-3);
    CHECK(std::abs(c.em - 1.6) <= 1e-3);
    CHECK(std::abs(c.f - 0.02) <= 1e-3);
    CHECK(std::abs(c.d - 1.0) <= 1e-3);
}

TEST_CASE("RK4 accuracy and order") {
    const AveragedField decay = linear_field(-1.0);
    const OdePath path = integrate_ode(decay, Vector::Ones(1), 1.0, 1e-3);
    CHECK(path.times.back() == 1.0);
    CHECK(std::abs(path.states(0, path.states.cols() - 1) - std::exp(-1.0)) <= 1e-9);

    auto error = [&](double h) { return std::abs(flow(decay, Vector::Ones(1), 1.0, h)(0) - std::exp(-1.0)); };
    const double ratio = error(0.1) / error(0.025);
    CHECK(ratio > 16.0 * 16.0 / 1.5);
    CHECK(ratio < 16.0 * 16.0 * 1.5);

    const OdePath still = integrate_ode(linear_field(0.0), Vector::Constant(1, 2.5), 3.0, 0.7);
    CHECK((still.states.array() == 2.5).all());
    CHECK(still.times.back() == 3.0);
}

TEST_CASE("equilibria of a linear sink") {
    const AveragedField field(2, [](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) { out = -x; });
    const auto eqs = find_equilibria(field, square(-1.0, 1.0), 5);
    REQUIRE(eqs.size() == 1);
    CHECK(eqs[0].location.norm() <= 1e-12);
    CHECK(eqs[0].kind == EquilibriumKind::sink);
}

TEST_CASE("equilibria of the worked example") {
    const AveragedField field = average_field(paper_example_model());
    const auto eqs = find_equilibria(field, square(0.0, 6.0), 13);
    REQUIRE(eqs.size() == 3);
    for (const auto& e : eqs) CHECK(e.residual <= 1e-9);

    const Equilibrium* interior = nearest(eqs, v2(1.836, 1.795));
    CHECK((interior->location - v2(1.836, 1.795)).cwiseAbs().maxCoeff() <= 1e-3);
    CHECK(interior->kind == EquilibriumKind::source);

    const Equilibrium* origin = nearest(eqs, v2(0.0, 0.0));
    CHECK(origin->location.norm() <= 1e-9);
    CHECK(origin->kind == EquilibriumKind::saddle);
    const Vector beta0 = stable_manifold_normal(*origin);
    CHECK(std::abs(std::abs(beta0(0)) - 1.0) <= 1e-8);

    const Equilibrium* axis = nearest(eqs, v2(5.0, 0.0));
    CHECK((axis->location - v2(5.0, 0.0)).norm() <= 1e-3);
    CHECK(axis->kind == EquilibriumKind::saddle);
    std::vector<double> re = {axis->eigenvalues(0).real(), axis->eigenvalues(1).real()};
    std::sort(re.begin(), re.end());
    const double k = axis->location(0);
    CHECK(std::abs(re[0] + 1.0) <= 1e-5);
    CHECK(std::abs(re[1] - (-1.0 + 1.6 * k / (1.0 + k))) <= 1e-5);

    // brute-force eigen-decomposition oracle for the stable direction
    Eigen::EigenSolver<Matrix> es(axis->jacobian);
    Index neg = es.eigenvalues()(0).real() < 0 ? 0 : 1;
    const Vector vs = es.eigenvectors().col(neg).real().normalized();
    const Vector beta = stable_manifold_normal(*axis);
    CHECK(std::abs(beta.norm() - 1.0) <= 1e-12);
    CHECK(std::abs(beta.dot(vs)) <= 1e-8);
    CHECK(std::abs(beta.dot(stable_direction(*axis))) <= 1e-8);
}

TEST_CASE("classification is invariant under field rescaling") {
    const AveragedField field = average_field(paper_example_model());
    const auto a = find_equilibria(field, square(0.0, 6.0), 9);
    const auto b = find_equilibria(field.scaled(2.0), square(0.0, 6.0), 9);
    REQUIRE(a.size() == b.size());
    for (const auto& e : a) {
        const Equilibrium* m = nearest(b, e.location);
        CHECK((m->location - e.location).norm() <= 1e-8);
        CHECK(m->kind == e.kind);
    }
}

TEST_CASE("saddle normal for a diagonal Jacobian") {
    const AveragedField field(2, [](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
        out(0) = -x(0);
        out(1) = x(1);
    });
    const Equilibrium eq = classify_equilibrium(field, Vector::Zero(2));
    CHECK(eq.kind == EquilibriumKind::saddle);
    const Vector beta = stable_manifold_normal(eq);
    CHECK(std::abs(beta(0)) <= 1e-8);
    CHECK(std::abs(std::abs(beta(1)) - 1.0) <= 1e-8);

    const Equilibrium sink = classify_equilibrium(linear_field(-1.0), Vector::Zero(1));
    CHECK_THROWS_AS(stable_manifold_normal(sink), ValidationError);

    const Equilibrium flat = classify_equilibrium(linear_field(0.0), Vector::Zero(1));
    CHECK(flat.kind == EquilibriumKind::nonhyperbolic);
}

TEST_CASE("Hopf normal form cycle") {
    const AveragedField field = average_field(hopf_normal_form_model());
    CycleOptions opt;
    opt.burn_in = 50.0;
    opt.step = 1e-2;
    opt.samples = 360;
    const LimitCycle cycle = detect_limit_cycle(field, v2(0.3, 0.0), opt);
    CHECK(std::abs(cycle.period - 2.0 * std::numbers::pi) <= 1e-6);
    for (Index k = 0; k < cycle.orbit.cols(); ++k) CHECK(std::abs(cycle.orbit.col(k).norm() - 1.0) <= 1e-6);

    const Measure mu0 = cycle_occupation_measure(cycle, 360);
    CHECK(std::abs(mu0.weights().sum() - 1.0) <= 1e-12);
    CHECK(mu0.mean().norm() <= 1e-3);

    const std::vector<Equilibrium> eqs = {classify_equilibrium(field, Vector::Zero(2))};
    CHECK_THROWS_AS(detect_limit_cycle(field, v2(1e-4, 0.0), opt, eqs), ValidationError);
}

TEST_CASE("worked-example cycle is consistent across seeds and sections") {
    const AveragedField field = average_field(paper_example_model());
    const auto eqs = find_equilibria(field, square(0.0, 6.0), 9);
    CycleOptions opt;
    const LimitCycle a = detect_limit_cycle(field, v2(1.0, 1.0), opt, eqs);
    CycleOptions other = opt;
    other.section = PoincareSection{v2(1.836, 1.795), v2(0.0, 1.0)};
    const LimitCycle b = detect_limit_cycle(field, v2(3.0, 0.5), other, eqs);
    CHECK(std::abs(a.period - b.period) <= 1e-3 * a.period);

    const Measure ma = cycle_occupation_measure(a, 1024);
    const Measure mb = cycle_occupation_measure(b, 1024);
    CHECK(sliced_wasserstein(ma, mb, 256, 1) < 1e-3);

    const Measure fine = cycle_occupation_measure(a, 2048);
    CHECK(sliced_wasserstein(fine, ma, 256, 1) < 1e-3);

    // closure: the period map returns every stored sample
    for (Index k = 0; k < a.orbit.cols(); k += 128) {
        CHECK((flow(field, a.orbit.col(k), a.period, a.step) - a.orbit.col(k)).norm() <= 1e-5);
    }
}
