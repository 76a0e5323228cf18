#include "switchavg/averaged.hpp"
#include "switchavg/models.hpp"

#include <doctest.h>

#include <cmath>

using namespace switchavg;

namespace {

Vector v2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

HollingParams single_regime_average() {
    HollingParams p;
    p.r = {1.0};
    p.K = {5.0};
    p.m = {1.0};
    p.a = {1.0};
    p.b = {1.0};
    p.d = {1.0};
    p.e = {1.6};
    p.f = {0.02};
    p.lambda = {1.0};
    p.rho = {1.0};
    return p;
}

}  // namespace

TEST_CASE("worked-example preset") {
    const HollingParams p = paper_example_params();
    CHECK(p.r == std::vector<double>{0.9, 1.1});
    CHECK(p.K == std::vector<double>{4.737, 5.238});
    CHECK(p.m == std::vector<double>{1.2, 0.8});
    CHECK(p.a == std::vector<double>{1.0, 1.0});
    CHECK(p.b == std::vector<double>{1.0, 1.0});
    CHECK(p.d == std::vector<double>{0.85, 1.15});
    CHECK(p.e == std::vector<double>{1.0, 2.5});
    CHECK(p.f == std::vector<double>{0.03, 0.01});
    CHECK(p.lambda == std::vector<double>{1.0, 2.0});
    CHECK(p.rho == std::vector<double>{3.0, 1.0});
    const Vector nu = stationary_distribution(paper_example_generator());
    CHECK(nu(0) == 0.5);
    CHECK(nu(1) == 0.5);

    const HybridModel model = paper_example_model();
    CHECK(model.dim == 2);
    CHECK(model.positive_domain);
    CHECK(model.all_linear_noise());
    CHECK(model.regimes() == 2);
}

TEST_CASE("drift and diffusion by hand") {
    const HybridModel model = paper_example_model();
    const Vector f1 = model.drift_at(v2(1.0, 1.0), 0);
    CHECK(std::abs(f1(0) - (0.9 - 0.9 / 4.737 - 1.2 / 2.0)) <= 1e-15);
    CHECK(std::abs(f1(1) - (-0.85 + 1.2 / 2.0 - 0.03)) <= 1e-15);
    const Vector f2 = model.drift_at(v2(1.0, 1.0), 1);
    CHECK(std::abs(f2(0) - (1.1 - 1.1 / 5.238 - 0.8 / 2.0)) <= 1e-15);
    CHECK(std::abs(f2(1) - (-1.15 + 2.5 * 0.8 / 2.0 - 0.01)) <= 1e-15);

    const Vector f3 = model.drift_at(v2(2.0, 3.0), 1);
    CHECK(std::abs(f3(0) - 2.0 * (1.1 * (1.0 - 2.0 / 5.238) - 3.0 * 0.8 / 3.0)) <= 1e-14);
    CHECK(std::abs(f3(1) - 3.0 * (-1.15 + 2.5 * 2.0 * 0.8 / 3.0 - 0.01 * 3.0)) <= 1e-14);

    const Matrix s1 = model.diffusion_at(v2(1.0, 1.0), 0);
    CHECK(s1(0, 0) == 1.0);
    CHECK(s1(1, 1) == 3.0);
    CHECK(s1(0, 1) == 0.0);
    CHECK(s1(1, 0) == 0.0);
    const Matrix s2 = model.diffusion_at(v2(2.0, 3.0), 1);
    CHECK(s2(0, 0) == 4.0);
    CHECK(s2(1, 1) == 3.0);
}

TEST_CASE("averaged drift equals the averaged predator-prey form") {
    const PredatorPreyParams p = paper_example_params().general();
    const Vector nu = stationary_distribution(paper_example_generator());
    const AveragedPPQuantities q = averaged_quantities(p, nu);
    const AveragedField field = average_field(paper_example_model());
    RandomStream rng(5);
    for (int k = 0; k < 100; ++k) {
        const double x = 8.0 * rng.uniform();
        const double y = 8.0 * rng.uniform();
        const Vector f = field(v2(x, y));
        CHECK(std::abs(f(0) - x * (q.a_bar - q.b_bar * x - y * q.h1(x, y))) <= 1e-12);
        CHECK(std::abs(f(1) - y * (-q.c_bar - q.d_bar * y + x * q.h2(x, y))) <= 1e-12);
    }
}

TEST_CASE("persistence quantities of the worked example") {
    const PredatorPreyParams p = paper_example_params().general();
    const Vector nu = stationary_distribution(paper_example_generator());
    const AveragedPPQuantities q = averaged_quantities(p, nu);
    CHECK(std::abs(q.a_bar - 1.0) <= 1e-12);
    CHECK(std::abs(q.c_bar - 1.0) <= 1e-12);
    CHECK(std::abs(q.a_bar / q.b_bar - 5.0) <= 1e-3);
    const double lhs = (q.a_bar / q.b_bar) * q.h2(q.a_bar / q.b_bar, 0.0);
    CHECK(std::abs(lhs - 1.6 * 5.0 / 6.0) <= 1e-4);
    CHECK(lhs > q.c_bar);
    CHECK(q.gamma0 > 0.0);
    CHECK(std::abs(q.gamma0 - 0.5 * std::min(q.c_bar, lhs - q.c_bar)) <= 1e-15);
    CHECK(std::isfinite(q.gamma0_h1));

    const PersistenceFunctional pf = persistence_functional(p, nu);
    CHECK(std::abs(pf.upsilon_bar(v2(0.0, 0.0)) - q.c_bar) <= 1e-12);
    CHECK(std::abs(pf.upsilon_bar(v2(q.a_bar / q.b_bar, 0.0)) - (lhs - q.c_bar)) <= 1e-12);
    const Vector z = v2(1.3, 0.7);
    const double mix = 0.5 * pf.upsilon(z, 0) + 0.5 * pf.upsilon(z, 1);
    CHECK(std::abs(mix - pf.upsilon_bar(z)) <= 1e-12);
    CHECK(std::abs(pf.upsilon(z, 0) - (2.0 * q.c_bar / q.a_bar * p.phi(1.3, 0.7, 0) + p.psi(1.3, 0.7, 0))) <= 1e-15);
}

TEST_CASE("persistence condition failure reports both sides") {
    HollingParams hp = paper_example_params();
    hp.d = {2.0, 2.0};
    const Vector nu = stationary_distribution(paper_example_generator());
    CHECK_THROWS_WITH_AS(persistence_functional(hp.general(), nu), doctest::Contains("2"), ValidationError);
    try {
        persistence_functional(hp.general(), nu);
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("1.333") != std::string::npos);
    }
}

TEST_CASE("decoupled system without predation") {
    PredatorPreyParams p;
    p.a = {1.0};
    p.b = {0.2};
    p.c = {0.5};
    p.d = {0.1};
    p.f = {1.0};
    p.lambda = {1.0};
    p.rho = {1.0};
    p.h = [](double, double, int) { return 0.0; };
    p.h_bound = 0.0;
    const HybridModel model = predator_prey_model(p, Generator(Matrix::Zero(1, 1)));
    SimParams s;
    s.delta = 0.0;
    s.step = 1e-2;
    s.horizon = 10.0;
    const Trajectory t = simulate_path(model, s, v2(1.0, 2.0), 0);
    for (std::size_t k = 1; k < t.size(); ++k) {
        CHECK(t.state(k)(1) < t.state(k - 1)(1));
        CHECK(t.state(k)(0) > t.state(k - 1)(0));  // logistic growth toward 5
    }
}

TEST_CASE("functional responses") {
    const FunctionalResponse bd = beddington_deangelis(2.0, {1.0, 4.0}, 0.5, 0.25);
    CHECK(bd(0.0, 0.0, 0) == 2.0);
    CHECK(bd(2.0, 4.0, 1) == 2.0 / (4.0 + 1.0 + 1.0));
    PredatorPreyParams p;
    p.a = {1.0, 1.2};
    p.b = {0.2, 0.3};
    p.c = {0.5, 0.4};
    p.d = {0.1, 0.1};
    p.f = {1.0, 0.8};
    p.lambda = {1.0, 0.5};
    p.rho = {1.0, 0.5};
    p.h = bd;
    p.h_bound = 2.0;
    Matrix q(2, 2);
    q << -1, 1, 2, -2;
    CHECK_NOTHROW(predator_prey_model(p, Generator(q)));

    PredatorPreyParams loose = p;
    loose.h_bound = 1.0;
    CHECK_THROWS_AS(predator_prey_model(loose, Generator(q)), ValidationError);
    PredatorPreyParams negative = p;
    negative.c = {0.5, -0.4};
    CHECK_THROWS_AS(predator_prey_model(negative, Generator(q)), ValidationError);
    CHECK_THROWS_AS(predator_prey_model(p, Generator(Matrix::Zero(1, 1))), ValidationError);

    const FunctionalResponse h2 = holling_type2({1.2}, {1.0}, {1.0});
    CHECK(h2(1.0, 9.0, 0) == 0.6);
}

TEST_CASE("coefficient fit recovers a single-regime Holling field") {
    const HollingParams hp = single_regime_average();
    const AveragedField field = average_field(predator_prey_model(hp.general(), Generator(Matrix::Zero(1, 1))));
    const HollingCoefficients c = fit_holling_coefficients(field);
    CHECK(std::abs(c.r - 1.0) <= 1e-12);
    CHECK(std::abs(c.K - 5.0) <= 1e-9);
    CHECK(std::abs(c.m - 1.0) <= 1e-12);
    CHECK(std::abs(c.em - 1.6) <= 1e-12);
    CHECK(std::abs(c.f - 0.02) <= 1e-12);
    CHECK(std::abs(c.d - 1.0) <= 1e-12);
}

TEST_CASE("moment diagnostics at a deterministic equilibrium") {
    const HybridModel model = predator_prey_model(single_regime_average().general(), Generator(Matrix::Zero(1, 1)));
    const AveragedField field = average_field(model);
    const auto eqs = find_equilibria(field, Box{v2(0.5, 0.5), v2(4.0, 4.0)}, 5);
    REQUIRE(eqs.size() == 1);
    const Vector z = eqs[0].location;
    CHECK((z - v2(1.836, 1.795)).cwiseAbs().maxCoeff() <= 1e-3);
    SimParams s;
    s.delta = 0.0;
    s.step = 1e-2;
    s.horizon = 20.0;
    s.record_stride = 10;
    const BatchSummary batch = simulate_batch(model, s, z, 0, 2);
    const MomentDiagnostics d = moment_diagnostics(batch);
    CHECK(std::abs(d.final_running_average - z.squaredNorm()) <= 1e-8);
    CHECK(std::abs(d.limsup_proxy - z.squaredNorm()) <= 1e-8);
    CHECK(std::abs(d.final_half_slope) <= 1e-8);
}

TEST_CASE("Holling parameter validation") {
    HollingParams hp = paper_example_params();
    hp.K = {4.737};
    CHECK_THROWS_AS(hp.validate(), ValidationError);
    hp = paper_example_params();
    hp.m = {1.2, 0.0};
    CHECK_THROWS_AS(hp.validate(), ValidationError);
    CHECK_NOTHROW(paper_example_params().validate());
}
