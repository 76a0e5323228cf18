// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.

#include "switchavg/averaged.hpp"
#include "switchavg/config.hpp"
#include "switchavg/ctmc.hpp"
#include "switchavg/experiments.hpp"
#include "switchavg/hybrid_sde.hpp"
#include "switchavg/measures.hpp"
#include "switchavg/models.hpp"
#include "switchavg/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace switchavg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void need(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Vector v2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

const Box kQuadrant{Vector::Zero(2), Vector::Constant(2, 6.0)};

std::vector<Equilibrium> worked_equilibria() {
    return find_equilibria(average_field(paper_example_model()), kQuadrant, 13);
}

const Equilibrium* nearest(const std::vector<Equilibrium>& eqs, const Vector& x) {
    const Equilibrium* best = nullptr;
    for (const auto& e : eqs) {
        if (!best || (e.location - x).norm() < (best->location - x).norm()) best = &e;
    }
    return best;
}

LimitCycle worked_cycle(const std::vector<Equilibrium>& eqs) {
    return detect_limit_cycle(average_field(paper_example_model()), v2(1.0, 1.0), CycleOptions{}, eqs);
}

Outcome averaging_identity() {
    Outcome o;
    const HollingCoefficients c = fit_holling_coefficients(average_field(paper_example_model()));
    const double tol = 1e-3;
    auto near = [&](const char* name, double got, double want) {
        o.need(std::abs(got - want) <= tol, std::string(name) + "=" + fmt("%.6g", got));
    };
    near("r", c.r, 1.0);
    near("K", c.K, 5.0);
    near("m", c.m, 1.0);
    near("em", c.em, 1.6);
    near("f", c.f, 0.02);
    near("d", c.d, 1.0);
    return o;
}

Outcome equilibria() {
    Outcome o;
    const auto eqs = worked_equilibria();
    o.need(eqs.size() == 3, std::to_string(eqs.size()) + " equilibria in [0,6]^2");
    const struct {
        Vector at;
        EquilibriumKind kind;
        double tol;
    } want[] = {{v2(1.836, 1.795), EquilibriumKind::source, 1e-3},
                {v2(0.0, 0.0), EquilibriumKind::saddle, 1e-3},
                {v2(5.0, 0.0), EquilibriumKind::saddle, 1e-3}};
    for (const auto& w : want) {
        const Equilibrium* e = nearest(eqs, w.at);
        const bool ok = e && (e->location - w.at).cwiseAbs().maxCoeff() <= w.tol && e->kind == w.kind;
        std::ostringstream s;
        if (e) s << "(" << fmt("%.4f", e->location(0)) << ", " << fmt("%.4f", e->location(1)) << ") " << to_string(e->kind);
        o.need(ok, s.str());
    }
    return o;
}

Outcome cycle_consistency() {
    Outcome o;
    const auto eqs = worked_equilibria();
    const AveragedField field = average_field(paper_example_model());
    const LimitCycle a = detect_limit_cycle(field, v2(1.0, 1.0), CycleOptions{}, eqs);
    CycleOptions other;
    other.section = PoincareSection{v2(1.836, 1.795), v2(0.0, 1.0)};
    const LimitCycle b = detect_limit_cycle(field, v2(3.0, 0.5), other, eqs);
    const double rel = std::abs(a.period - b.period) / a.period;
    o.need(rel <= 1e-3, "periods " + fmt("%.6f", a.period) + " vs " + fmt("%.6f", b.period));
    const double sw = sliced_wasserstein(cycle_occupation_measure(a, 1024), cycle_occupation_measure(b, 1024), 256, 1);
    o.need(sw < 1e-3, "SW(mu0 a, mu0 b)=" + fmt("%.2e", sw));
    return o;
}

RegimeSpec regime_pairs(std::vector<NoisePair> pairs, RegimeCase tag) {
    RegimeSpec r;
    r.pairs = std::move(pairs);
    r.tag = tag;
    return r;
}

Outcome weak_convergence() {
    Outcome o;
    const auto eqs = worked_equilibria();
    const LimitCycle cycle = worked_cycle(eqs);
    SweepSpec s;
    s.horizon = 200.0;
    s.burn_fraction = 0.25;
    s.n_seeds = 20;
    s.step = 1e-4;
    s.scheme = Scheme::log_euler;
    const SweepReport rep =
        convergence_sweep(paper_example_model(), cycle, v2(1.0, 1.0), 0, s,
                          regime_pairs({{1e-2, 1e-2}, {1e-3, 1e-3}, {5e-5, 5e-5}}, RegimeCase::case1));
    std::string means;
    for (const auto& c : rep.cells) means += (means.empty() ? "" : " > ") + fmt("%.4f", c.sliced.mean);
    o.need(rep.strictly_decreasing, "mean SW " + means);
    o.need(rep.extremes_separated, "first/last 95% CIs disjoint");
    return o;
}

Outcome closeness_decay() {
    Outcome o;
    ClosenessSpec s;
    s.gamma = 0.5;
    s.horizon = 10.0;
    s.n_paths = 2000;
    s.step = 1e-3;
    s.scheme = Scheme::log_euler;
    const ClosenessReport rep =
        closeness_probability(paper_example_model(), v2(1.0, 1.0), 0, s,
                              regime_pairs({{1e-1, 1e-1}, {1e-2, 1e-2}, {1e-3, 1e-3}}, RegimeCase::case1));
    std::string ps;
    for (const auto& c : rep.cells) ps += (ps.empty() ? "" : ", ") + fmt("%.4f", c.estimate.p);
    o.need(rep.nonincreasing, "p_hat " + ps + " nonincreasing");
    o.need(rep.extremes_separated, "extreme cells CI-separated");
    return o;
}

Outcome exit_positivity() {
    Outcome o;
    const HybridModel model = paper_example_model();
    const auto eqs = worked_equilibria();
    const Equilibrium* axis = nearest(eqs, v2(5.0, 0.0));
    ExitSpec s;
    s.equilibrium = axis->location;
    s.horizon = 20.0;
    s.n_paths = 10000;
    s.Delta = 1.0;
    s.step = 1e-3;
    s.scheme = Scheme::log_euler;
    // run the estimate regardless so the bound itself is reported; the witness is judged separately
    s.enforce_assumption = false;

    const AuditReport audit = assumption_audit(model, kQuadrant);
    const AuditEntry* entry = nullptr;
    for (const auto& e : audit.entries) {
        if ((e.equilibrium.location - axis->location).norm() <= 1e-8) entry = &e;
    }
    o.need(entry != nullptr, "audit covers the axis saddle");
    const bool witness = entry && entry->witness(RegimeCase::case1).has_value();
    std::string values;
    if (entry) {
        for (std::size_t i = 0; i < entry->beta_f.size(); ++i) {
            values += " i=" + std::to_string(i + 1) + " beta'f=" + fmt("%.1e", entry->beta_f[i]) +
                      " |beta'sigma|=" + fmt("%.1e", entry->beta_sigma[i]);
        }
    }
    o.need(witness, "case1 witness at the saddle:" + values);

    const ExitReport rep = exit_time_experiment(model, s, regime_pairs({{1e-2, 1e-2}}, RegimeCase::case1));
    const ExitCell& c = rep.cells.front();
    o.need(c.bound_holds, "P_hat=" + fmt("%.4f", c.estimate.p) + " Wilson lo=" + fmt("%.4f", c.estimate.ci.lo) +
                              " vs exp(-Delta/(eps+delta))=" + fmt("%.3g", c.target));
    return o;
}

Outcome moment_boundedness() {
    Outcome o;
    SimParams p;
    p.eps = 1e-3;
    p.delta = 1e-3;
    p.step = 1e-4;
    p.horizon = 200.0;
    p.scheme = Scheme::log_euler;
    p.record_stride = 1000;
    p.record_switches = false;
    BatchOptions opt;
    opt.retain_path_sq_norms = true;
    const BatchSummary batch = simulate_batch(paper_example_model(), p, v2(1.0, 1.0), 0, 32, opt);
    const MomentDiagnostics m = moment_diagnostics(batch);
    o.need(m.slope_ci.lo <= 0.0, "final-half slope CI [" + fmt("%.2e", m.slope_ci.lo) + ", " + fmt("%.2e", m.slope_ci.hi) + "]");
    double at100 = std::nan("");
    for (std::size_t k = 0; k < m.times.size(); ++k) {
        if (std::abs(m.times[k] - 100.0) <= 1e-9) at100 = m.running_average(static_cast<Index>(k));
    }
    const double at200 = m.final_running_average;
    o.need(std::abs(at100 - at200) <= 0.1 * at200, "running average T=100 " + fmt("%.4f", at100) + " vs T=200 " + fmt("%.4f", at200));
    return o;
}

Outcome oracle_suites() {
    Outcome o;
    // stationary distributions
    Matrix cyc = Matrix::Zero(3, 3);
    cyc(0, 1) = cyc(1, 2) = cyc(2, 0) = 1.0;
    cyc(0, 0) = cyc(1, 1) = cyc(2, 2) = -1.0;
    const struct {
        Matrix q;
        std::vector<double> nu;
    } gens[] = {{mat2(-1, 1, 1, -1), {0.5, 0.5}}, {mat2(-1, 1, 2, -2), {2.0 / 3.0, 1.0 / 3.0}}, {cyc, {1.0 / 3, 1.0 / 3, 1.0 / 3}}};
    double worst = 0.0;
    for (const auto& g : gens) {
        const Vector nu = stationary_distribution(Generator(g.q));
        for (std::size_t i = 0; i < g.nu.size(); ++i) worst = std::max(worst, std::abs(nu(static_cast<Index>(i)) - g.nu[i]));
    }
    o.need(worst <= 1e-12, "stationary max error " + fmt("%.1e", worst));

    // two-state transition probability
    {
        const double a = 1.0, b = 2.0, t = 0.4;
        const Generator q(mat2(-a, a, b, -b));
        const std::size_t n = 100000;
        std::size_t stay = 0;
        for (std::size_t k = 0; k < n; ++k) {
            RandomStream rng(3, k, StreamKind::switching);
            stay += sample_jump_skeleton(q, 1.0, 0, t, rng).state_at(t) == 0;
        }
        const double exact = b / (a + b) + a / (a + b) * std::exp(-(a + b) * t);
        const double phat = static_cast<double>(stay) / static_cast<double>(n);
        const double se = std::sqrt(exact * (1 - exact) / static_cast<double>(n));
        o.need(std::abs(phat - exact) <= 3.0 * se, "p00 " + fmt("%.4f", phat) + " vs " + fmt("%.4f", exact));
    }

    // Ornstein-Uhlenbeck moments at t = 1
    {
        SimParams p;
        p.delta = 1.0;
        p.step = 5e-3;
        p.horizon = 1.0;
        p.record_stride = 200;
        p.seed = 4;
        const std::size_t n = 100000;
        const BatchSummary batch = simulate_batch(ornstein_uhlenbeck_model(1.0, 1.0), p, Vector::Ones(1), 0, n);
        const double mean = batch.mean(0, 1);
        const double var = batch.second_moment(0, 1) - mean * mean;
        const double ev = 0.5 * (1.0 - std::exp(-2.0));
        o.need(std::abs(mean - std::exp(-1.0)) <= 3.0 * std::sqrt(ev / n), "OU mean " + fmt("%.5f", mean));
        o.need(std::abs(var - ev) <= 3.0 * ev * std::sqrt(2.0 / n), "OU variance " + fmt("%.5f", var));
    }

    // RK4 order on x' = -x
    {
        const AveragedField decay(1, [](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) { out = -x; });
        auto err = [&](double h) { return std::abs(flow(decay, Vector::Ones(1), 1.0, h)(0) - std::exp(-1.0)); };
        const double order = std::log2(err(0.1) / err(0.05));
        o.need(std::abs(order - 4.0) <= 0.2, "RK4 order " + fmt("%.3f", order));
    }

    // Euler-Maruyama strong error on additive noise, reference on the finest grid of the same path
    {
        const HybridModel ou = ornstein_uhlenbeck_model(1.0, 1.0);
        const double fine = 1e-4;
        const std::vector<double> steps = {1e-2, 5e-3, 2.5e-3};
        std::vector<double> err(steps.size(), 0.0);
        const int n = 200;
        JumpSkeleton frozen;
        frozen.times = {0.0};
        frozen.states = {0};
        frozen.horizon = 1.0;
        frozen.n_states = 1;
        for (int path = 0; path < n; ++path) {
            RandomStream rng(1000 + path);
            std::vector<double> w(static_cast<std::size_t>(std::llround(1.0 / fine)) + 1, 0.0);
            for (std::size_t k = 1; k < w.size(); ++k) w[k] = w[k - 1] + std::sqrt(fine) * rng.normal();
            const BrownianDriver driver = [&](double t, double dt, Eigen::Ref<Vector> dw) {
                dw(0) = w[static_cast<std::size_t>(std::llround((t + dt) / fine))] -
                        w[static_cast<std::size_t>(std::llround(t / fine))];
            };
            auto endpoint = [&](double h) {
                SimParams p;
                p.delta = 1.0;
                p.step = h;
                p.horizon = 1.0;
                p.record_stride = 1000000;
                const Trajectory t = simulate_with_skeleton(ou, p, Vector::Ones(1), frozen, driver);
                return t.state(t.size() - 1)(0);
            };
            const double ref = endpoint(fine);
            for (std::size_t k = 0; k < steps.size(); ++k) err[k] += std::abs(endpoint(steps[k]) - ref) / n;
        }
        for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
            const double factor = err[k] / err[k + 1];
            o.need(factor >= 1.5 && factor <= 3.0, "EM halving factor " + fmt("%.3f", factor));
        }
    }
    return o;
}

Outcome metric_properties() {
    Outcome o;
    RandomStream rng(42);
    auto random_measure = [&](Index n) {
        Matrix pts(2, n);
        Vector w(n);
        for (Index k = 0; k < n; ++k) {
            pts(0, k) = 4.0 * rng.uniform() - 2.0;
            pts(1, k) = 4.0 * rng.uniform() - 2.0;
            w(k) = 0.1 + rng.uniform();
        }
        return Measure(pts, w / w.sum());
    };
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Measure mu = random_measure(30 + trial);
        const Measure nu = random_measure(17 + 2 * trial);
        const Vector shift = v2(rng.uniform() - 0.5, 2.0 * rng.uniform());
        const double sw = sliced_wasserstein(mu, nu, 64, 9);
        const double ed = energy_distance(mu, nu);
        worst = std::max({worst, sliced_wasserstein(mu, mu, 64, 9), energy_distance(mu, mu),
                          std::abs(sw - sliced_wasserstein(nu, mu, 64, 9)), std::abs(ed - energy_distance(nu, mu)),
                          std::abs(sliced_wasserstein(mu.translated(shift), nu.translated(shift), 64, 9) - sw),
                          std::abs(energy_distance(mu.translated(shift), nu.translated(shift)) - ed)});
    }
    o.need(worst <= 1e-12, "identity/symmetry/translation max defect " + fmt("%.1e", worst));
    Matrix a(2, 1), b(2, 1);
    a << 0.0, 0.0;
    b << 1.0, 0.0;
    const double two = energy_distance(Measure::uniform(a), Measure::uniform(b));
    o.need(two == 2.0, "point-mass energy distance " + fmt("%.17g", two));
    return o;
}

std::string unescape(std::string s) {
    const std::pair<const char*, const char*> table[] = {{"&quot;", "\""}, {"&lt;", "<"}, {"&gt;", ">"}, {"&amp;", "&"}};
    for (const auto& [from, to] : table) {
        for (std::size_t at = s.find(from); at != std::string::npos; at = s.find(from, at + 1)) s.replace(at, std::strlen(from), to);
    }
    return s;
}

Outcome reproduce_fast() {
    Outcome o;
    const fs::path dir = fs::temp_directory_path() / "switchavg_acceptance_reproduce";
    fs::remove_all(dir);
    std::ostringstream log;
    run_experiment(reproduce_paper_config(dir.string(), true), log);
    std::vector<std::string> svgs;
    for (const char* var : {"x", "y"}) {
        for (const char* tag : {"eps0.001", "eps5e-05", "averaged"}) svgs.push_back(std::string("timeseries_") + var + "_" + tag + ".svg");
    }
    for (const char* tag : {"eps0.001", "eps5e-05", "averaged"}) svgs.push_back(std::string("phase_") + tag + ".svg");
    int good = 0;
    for (const auto& name : svgs) {
        std::ifstream in(dir / name);
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string svg = ss.str();
        const auto open = svg.find("<desc>");
        const auto close = svg.find("</desc>");
        bool ok = in.good() || !svg.empty();
        ok = ok && open != std::string::npos && close != std::string::npos;
        if (ok) {
            const std::string desc = unescape(svg.substr(open + 6, close - open - 6));
            const auto eq = desc.find("config=");
            ok = eq != std::string::npos;
            if (ok) {
                try {
                    const ExperimentConfig echo = ExperimentConfig::from_json(Json::parse(desc.substr(eq + 7)));
                    ok = echo.kind == ExperimentKind::reproduce_paper;
                } catch (const std::exception&) {
                    ok = false;
                }
            }
        }
        if (ok) ++good;
        else o.need(false, name + " missing or without a parseable config echo");
    }
    o.need(good == 9, std::to_string(good) + "/9 SVGs with config echo");
    return o;
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "averaging identity", 1.0, averaging_identity},
        {2, "averaged equilibria", 5.0, equilibria},
        {3, "limit cycle self-consistency", 30.0, cycle_consistency},
        {4, "weak-convergence trend", 1200.0, weak_convergence},
        {5, "path-closeness decay", 600.0, closeness_decay},
        {6, "exit-time positivity at the axis saddle", 600.0, exit_positivity},
        {7, "moment boundedness", 300.0, moment_boundedness},
        {8, "oracle suites", 120.0, oracle_suites},
        {9, "metric properties", 10.0, metric_properties},
        {10, "reproduce-paper --fast", 300.0, reproduce_fast},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget_seconds) o.need(false, "runtime " + fmt("%.1f", secs) + "s over budget " + fmt("%.0f", c.budget_seconds) + "s");
        if (!o.pass) ++failed;
        std::cout << "criterion " << c.id << " " << (o.pass ? "PASS" : "FAIL") << " [" << c.name << "] (" << fmt("%.2f", secs)
                  << "s) " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
