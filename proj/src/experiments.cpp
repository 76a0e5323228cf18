#include "switchavg/experiments.hpp"

#include "switchavg/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace switchavg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

std::string point_text(const Eigen::Ref<const Vector>& x) {
    std::string out = "(";
    for (Index k = 0; k < x.size(); ++k) out += (k ? ", " : "") + fmt("%.6g", x(k));
    return out + ")";
}

std::string regime_text(const NoisePair& p) { return "eps=" + fmt("%g", p.eps) + " delta=" + fmt("%g", p.delta); }

const char* case_condition(RegimeCase c) {
    switch (c) {
        case RegimeCase::case1: return "some regime i with beta'f(x*,i) != 0 or beta'sigma(x*,i) != 0";
        case RegimeCase::case2: return "some regime i with beta'f(x*,i) != 0";
        case RegimeCase::case3: return "some regime i with beta'sigma(x*,i) != 0";
    }
    return "";
}

SimParams base_params(const NoisePair& pair, double step, double horizon, std::uint64_t seed, Scheme scheme,
                      double guard) {
    SimParams p;
    p.eps = pair.eps;
    p.delta = pair.delta;
    p.step = step;
    p.horizon = horizon;
    p.seed = seed;
    p.scheme = scheme;
    p.guard_radius = guard;
    return p;
}

}  // namespace

std::string to_string(RegimeCase c) {
    switch (c) {
        case RegimeCase::case1: return "case1";
        case RegimeCase::case2: return "case2";
        case RegimeCase::case3: return "case3";
    }
    return "unknown";
}

RegimeCase regime_case_from_string(std::string_view name) {
    if (name == "case1") return RegimeCase::case1;
    if (name == "case2") return RegimeCase::case2;
    if (name == "case3") return RegimeCase::case3;
    throw ValidationError("unknown regime case '" + std::string(name) + "' (expected case1, case2 or case3)");
}

void RegimeSpec::validate() const {
    require(!pairs.empty(), "regime spec: no (eps, delta) pairs");
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& p = pairs[k];
        require(std::isfinite(p.eps) && p.eps > 0.0, "regime spec: pair " + std::to_string(k + 1) + " needs eps > 0");
        require(std::isfinite(p.delta) && p.delta >= 0.0,
                "regime spec: pair " + std::to_string(k + 1) + " needs delta >= 0");
    }
    if (!tag) return;
    std::vector<double> r;
    for (const auto& p : pairs) r.push_back(p.ratio());
    auto ratios = [&] {
        std::string s;
        for (std::size_t k = 0; k < r.size(); ++k) s += (k ? ", " : "") + fmt("%g", r[k]);
        return s;
    };
    switch (*tag) {
        case RegimeCase::case1:
            for (double v : r) {
                require(r.front() > 0.0 && v >= r.front() / 10.0 && v <= r.front() * 10.0,
                        "regime spec declares case1 (delta/eps -> l in (0, inf)) but ratios [" + ratios() +
                            "] leave a factor-10 band around the first");
            }
            break;
        case RegimeCase::case2:
            for (std::size_t k = 1; k < r.size(); ++k) {
                require(r[k] <= r[k - 1], "regime spec declares case2 (delta/eps -> 0) but ratios [" + ratios() +
                                              "] increase");
            }
            require(r.back() < 1.0, "regime spec declares case2 (delta/eps -> 0) but the last ratio is " +
                                        fmt("%g", r.back()) + " >= 1");
            break;
        case RegimeCase::case3:
            for (std::size_t k = 1; k < r.size(); ++k) {
                require(r[k] >= r[k - 1], "regime spec declares case3 (delta/eps -> inf) but ratios [" + ratios() +
                                              "] decrease");
            }
            require(r.back() > 1.0, "regime spec declares case3 (delta/eps -> inf) but the last ratio is " +
                                        fmt("%g", r.back()) + " <= 1");
            break;
    }
}

Json to_json(const NoisePair& p) { return Json{{"eps", p.eps}, {"delta", p.delta}}; }

Json to_json(const RegimeSpec& r) {
    Json pairs = Json::array();
    for (const auto& p : r.pairs) pairs.push_back(to_json(p));
    Json out{{"pairs", pairs}};
    out["case"] = r.tag ? Json(to_string(*r.tag)) : Json(nullptr);
    return out;
}

// ---------------------------------------------------------------- closeness

void ClosenessSpec::validate() const {
    require(gamma >= 0.0 && !std::isnan(gamma), "closeness: gamma must be >= 0");
    require(std::isfinite(horizon) && horizon > 0.0, "closeness: horizon must be positive");
    require(n_paths >= 1, "closeness: need at least one path");
    require(std::isfinite(step) && step > 0.0 && step <= horizon, "closeness: need 0 < step <= horizon");
    require(guard_radius > 0.0, "closeness: guard radius must be positive");
}

ClosenessReport closeness_probability(const HybridModel& model, const Eigen::Ref<const Vector>& x0, int i0,
                                      const ClosenessSpec& spec, const RegimeSpec& regimes) {
    spec.validate();
    regimes.validate();
    require(x0.size() == model.dim, "closeness: x0 dimension mismatch");
    require(i0 >= 0 && i0 < model.regimes(), "closeness: initial regime out of range");
    const auto t0 = Clock::now();

    ClosenessReport report;
    report.spec = spec;
    report.x0 = x0;
    report.i0 = i0;
    report.regimes = regimes;

    const AveragedField field = average_field(model);
    SimParams grid = base_params(regimes.pairs.front(), spec.step, spec.horizon, spec.seed, spec.scheme,
                                 spec.guard_radius);
    const std::size_t n = grid.grid_steps();
    Matrix reference(model.dim, static_cast<Index>(n + 1));
    Vector x = x0;
    reference.col(0) = x;
    for (std::size_t k = 1; k <= n; ++k) {
        rk4_step(field, x, grid.grid_time(k) - grid.grid_time(k - 1));
        if (!x.allFinite()) throw NumericError("closeness: averaged path is not finite at t=" + fmt("%g", grid.grid_time(k)));
        reference.col(static_cast<Index>(k)) = x;
    }

    for (const auto& pair : regimes.pairs) {
        SimParams p = base_params(pair, spec.step, spec.horizon, spec.seed, spec.scheme, spec.guard_radius);
        p.record_switches = false;
        // 0: stayed within gamma, 1: reached gamma, 2: numeric failure
        std::vector<unsigned char> status(spec.n_paths, 0);
        parallel_for(spec.n_paths, [&](std::size_t path) {
            std::size_t k = 0;
            try {
                simulate_path_observed(model, p, x0, i0, path, [&](double, const Eigen::Ref<const Vector>& z, int, bool on_grid) {
                    if (!on_grid) return true;
                    const double dev = (z - reference.col(static_cast<Index>(std::min(k, n)))).norm();
                    ++k;
                    if (dev >= spec.gamma) {
                        status[path] = 1;
                        return false;
                    }
                    return true;
                });
            } catch (const NumericError&) {
                status[path] = 2;
            }
        });
        ClosenessCell cell;
        cell.pair = pair;
        const auto hits = static_cast<std::size_t>(std::count(status.begin(), status.end(), 1));
        cell.non_finite = static_cast<std::size_t>(std::count(status.begin(), status.end(), 2));
        const std::size_t finite = spec.n_paths - cell.non_finite;
        if (finite > 0) cell.estimate = wilson_estimate(hits, finite);
        else cell.estimate.ci = {0.0, 1.0};
        const double floor = 1.0 / static_cast<double>(std::max<std::size_t>(finite, 1));
        cell.rate = (pair.eps + pair.delta) * -std::log(std::max(cell.estimate.p, floor)) + 0.0;
        report.cells.push_back(cell);
    }
    report.nonincreasing = true;
    for (std::size_t k = 1; k < report.cells.size(); ++k) {
        if (report.cells[k].estimate.p > report.cells[k - 1].estimate.p) report.nonincreasing = false;
    }
    report.extremes_separated = report.cells.size() >= 2 &&
                                report.cells.front().estimate.ci.lo > report.cells.back().estimate.ci.hi;
    report.wall_seconds = seconds_since(t0);
    return report;
}

Json ClosenessReport::to_json() const {
    Json cells_json = Json::array();
    for (const auto& c : cells) {
        cells_json.push_back(Json{{"eps", c.pair.eps},
                                  {"delta", c.pair.delta},
                                  {"estimate", switchavg::to_json(c.estimate)},
                                  {"non_finite_paths", c.non_finite},
                                  {"rate_diagnostic", c.rate}});
    }
    return Json{{"experiment", "closeness"},
                {"seed", spec.seed},
                {"parameters",
                 Json{{"gamma", spec.gamma},
                      {"horizon", spec.horizon},
                      {"n_paths", spec.n_paths},
                      {"step", spec.step},
                      {"scheme", to_string(spec.scheme)},
                      {"guard_radius", spec.guard_radius},
                      {"x0", switchavg::to_json(x0)},
                      {"i0", i0 + 1},
                      {"regimes", switchavg::to_json(regimes)}}},
                {"cells", cells_json},
                {"nonincreasing", nonincreasing},
                {"extremes_ci_separated", extremes_separated},
                {"wall_seconds", wall_seconds}};
}

std::string ClosenessReport::to_text() const {
    std::ostringstream os;
    os << "closeness: P{sup_t |X - Xbar| >= gamma}, gamma=" << fmt("%g", spec.gamma) << " T=" << fmt("%g", spec.horizon)
       << " N=" << spec.n_paths << " h=" << fmt("%g", spec.step) << " seed=" << spec.seed << "\n";
    os << pad("eps", 12) << pad("delta", 12) << pad("p_hat", 12) << pad("ci95", 26) << pad("non_finite", 12) << "rate\n";
    for (const auto& c : cells) {
        os << pad(fmt("%g", c.pair.eps), 12) << pad(fmt("%g", c.pair.delta), 12) << pad(fmt("%.5f", c.estimate.p), 12)
           << pad("[" + fmt("%.5f", c.estimate.ci.lo) + ", " + fmt("%.5f", c.estimate.ci.hi) + "]", 26)
           << pad(std::to_string(c.non_finite), 12) << fmt("%.5g", c.rate) << "\n";
    }
    os << "nonincreasing: " << (nonincreasing ? "yes" : "no")
       << "  extremes CI-separated: " << (extremes_separated ? "yes" : "no") << "\n";
    return os.str();
}

// ---------------------------------------------------------------- exit times

void ExitSpec::validate() const {
    require(equilibrium.size() > 0, "exit: equilibrium location missing");
    require(theta1 > 0.0, "exit: theta1 must be positive");
    require(theta3 > theta1, "exit: need 0 < theta1 < theta3 (got theta1=" + fmt("%g", theta1) +
                                 ", theta3=" + fmt("%g", theta3) + ")");
    require(radius > theta3, "exit: ball radius R must exceed theta3");
    require(std::isfinite(horizon) && horizon > 0.0, "exit: time budget H must be positive");
    require(n_paths >= 1, "exit: need at least one path");
    require(Delta > 0.0, "exit: Delta must be positive");
    require(step > 0.0 && step <= horizon, "exit: need 0 < step <= H");
    require(continuation_steps >= 0, "exit: continuation_steps must be >= 0");
}

double StableSetProxy::segment_distance_sq(const Eigen::Ref<const Vector>& x, Index k) const {
    const auto a = points.col(k);
    const auto ab = points.col(k + 1) - a;
    const double len2 = ab.squaredNorm();
    const double s = len2 > 0.0 ? std::clamp((x - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (x - a - s * ab).squaredNorm();
}

double StableSetProxy::distance(const Eigen::Ref<const Vector>& x) const {
    if (points.cols() == 1) return (x - points.col(0)).norm();
    double best = std::numeric_limits<double>::infinity();
    for (Index k = 0; k + 1 < points.cols(); ++k) best = std::min(best, segment_distance_sq(x, k));
    return std::sqrt(best);
}

bool StableSetProxy::near(const Eigen::Ref<const Vector>& x, double r) const {
    if (points.cols() == 1) return (x - points.col(0)).norm() < r;
    const Index segments = points.cols() - 1;
    const Index mid = segments / 2;
    const double r2 = r * r;
    for (Index off = 0; off <= segments; ++off) {
        for (Index k : {mid - off, mid + off}) {
            if (k >= 0 && k < segments && segment_distance_sq(x, k) < r2) return true;
            if (off == 0) break;
        }
    }
    return false;
}

StableSetProxy stable_set_proxy(const AveragedField& field, const Equilibrium& eq, double half_length, int steps,
                                double reach) {
    StableSetProxy proxy;
    if (eq.kind == EquilibriumKind::source) {
        proxy.points = eq.location;
        return proxy;
    }
    require(eq.kind == EquilibriumKind::saddle && eq.location.size() == 2,
            "stable set proxy: needs a source or a planar saddle");
    const Vector v = stable_direction(eq).normalized();
    const AveragedField backward = field.scaled(-1.0);
    const double arc = steps > 0 ? std::max(reach - half_length, 0.0) / steps : 0.0;
    auto continue_from = [&](Vector x) {
        std::vector<Vector> out;
        for (int k = 0; k < steps && arc > 0.0; ++k) {
            const double speed = field(x).norm();
            if (!(speed > 0.0)) break;
            rk4_step(backward, x, arc / speed);
            if (!x.allFinite()) break;
            out.push_back(x);
            if ((x - eq.location).norm() >= reach) break;
        }
        return out;
    };
    const auto minus = continue_from(eq.location - half_length * v);
    const auto plus = continue_from(eq.location + half_length * v);
    std::vector<Vector> line(minus.rbegin(), minus.rend());
    line.push_back(eq.location - half_length * v);
    line.push_back(eq.location);
    line.push_back(eq.location + half_length * v);
    line.insert(line.end(), plus.begin(), plus.end());
    proxy.points.resize(eq.location.size(), static_cast<Index>(line.size()));
    for (std::size_t k = 0; k < line.size(); ++k) proxy.points.col(static_cast<Index>(k)) = line[k];
    return proxy;
}

double ExitCell::probability_by(double h) const {
    std::size_t finite = 0;
    std::size_t hit = 0;
    for (double t : exit_times) {
        if (std::isnan(t)) continue;
        ++finite;
        if (t <= h) ++hit;
    }
    return finite ? static_cast<double>(hit) / static_cast<double>(finite) : 0.0;
}

namespace {

Vector sample_start(const ExitSpec& spec, bool positive, std::size_t path) {
    RandomStream rng(spec.seed, path, StreamKind::initial);
    const auto d = spec.equilibrium.size();
    for (int attempt = 0; attempt < 10000; ++attempt) {
        Vector u(d);
        rng.fill_normal(u);
        const double norm = u.norm();
        if (norm == 0.0) continue;
        const double r = spec.theta1 * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
        Vector x = spec.equilibrium + (r / norm) * u;
        if (!positive || (x.array() > 0.0).all()) return x;
    }
    throw ValidationError("exit: the theta1-ball around " + point_text(spec.equilibrium) +
                          " does not meet the open positive orthant");
}

}  // namespace

ExitReport exit_time_experiment(const HybridModel& model, const ExitSpec& spec, const RegimeSpec& regimes) {
    spec.validate();
    regimes.validate();
    require(spec.equilibrium.size() == model.dim, "exit: equilibrium dimension mismatch");
    require(spec.i0 >= 0 && spec.i0 < model.regimes(), "exit: initial regime out of range");
    const auto t0 = Clock::now();

    const AveragedField field = average_field(model);
    ExitReport report;
    report.spec = spec;
    report.regimes = regimes;
    report.equilibrium = classify_equilibrium(field, spec.equilibrium);
    const Equilibrium& eq = report.equilibrium;
    require(eq.residual <= 1e-9, "exit: " + point_text(spec.equilibrium) + " is not an equilibrium of the averaged field (|f| = " +
                                     fmt("%.3g", eq.residual) + ")");
    require(eq.kind == EquilibriumKind::source || (eq.kind == EquilibriumKind::saddle && model.dim == 2),
            "exit: equilibrium " + point_text(eq.location) + " is a " + to_string(eq.kind) +
                "; the exit experiment needs a source or a planar saddle");

    const AuditEntry audit = audit_equilibrium(model, eq);
    if (!regimes.tag) {
        report.witness_note = "no regime case declared; witness condition not checked";
    } else if (const auto w = audit.witness(*regimes.tag)) {
        report.witness_ok = true;
        report.witness_note = to_string(*regimes.tag) + " witnessed by regime " + std::to_string(*w + 1);
    } else {
        std::string values;
        for (std::size_t i = 0; i < audit.beta_f.size(); ++i) {
            values += " i=" + std::to_string(i + 1) + ": beta'f=" + fmt("%.3g", audit.beta_f[i]) +
                      " |beta'sigma|=" + fmt("%.3g", audit.beta_sigma[i]) + ";";
        }
        report.witness_note = to_string(*regimes.tag) + " condition fails at " + point_text(eq.location) + " (" +
                              to_string(eq.kind) + "): needs " + case_condition(*regimes.tag) + ", found" + values;
    }
    if (spec.enforce_assumption && !report.witness_ok) throw ValidationError("exit: " + report.witness_note);

    const StableSetProxy proxy =
        stable_set_proxy(field, eq, spec.theta3, spec.continuation_steps, spec.radius);
    std::vector<Vector> starts(spec.n_paths);
    for (std::size_t path = 0; path < spec.n_paths; ++path) starts[path] = sample_start(spec, model.positive_domain, path);

    for (const auto& pair : regimes.pairs) {
        SimParams p = base_params(pair, spec.step, spec.horizon, spec.seed, spec.scheme, spec.guard_radius);
        p.record_switches = false;
        ExitCell cell;
        cell.pair = pair;
        cell.exit_times.assign(spec.n_paths, std::numeric_limits<double>::infinity());
        parallel_for(spec.n_paths, [&](std::size_t path) {
            try {
                simulate_path_observed(model, p, starts[path], spec.i0, path,
                                       [&](double t, const Eigen::Ref<const Vector>& x, int, bool) {
                                           if ((x - eq.location).norm() <= spec.radius && !proxy.near(x, spec.theta3)) {
                                               cell.exit_times[path] = t;
                                               return false;
                                           }
                                           return true;
                                       });
            } catch (const NumericError&) {
                cell.exit_times[path] = std::numeric_limits<double>::quiet_NaN();
            }
        });
        std::size_t finite = 0;
        std::size_t hits = 0;
        for (double t : cell.exit_times) {
            if (std::isnan(t)) continue;
            ++finite;
            if (t <= spec.horizon) ++hits;
        }
        cell.non_finite = spec.n_paths - finite;
        if (finite > 0) cell.estimate = wilson_estimate(hits, finite);
        cell.target = std::exp(-spec.Delta / (pair.eps + pair.delta));
        cell.target_eps = std::exp(-spec.Delta / pair.eps);
        cell.bound_holds = finite > 0 && cell.estimate.ci.lo > cell.target;
        report.cells.push_back(std::move(cell));
    }
    report.wall_seconds = seconds_since(t0);
    return report;
}

Json ExitReport::to_json() const {
    Json cells_json = Json::array();
    for (const auto& c : cells) {
        Json quantiles = Json::object();
        for (double h : {0.25, 0.5, 0.75, 1.0}) quantiles[fmt("%g", h * spec.horizon)] = c.probability_by(h * spec.horizon);
        cells_json.push_back(Json{{"eps", c.pair.eps},
                                  {"delta", c.pair.delta},
                                  {"estimate", switchavg::to_json(c.estimate)},
                                  {"target_exp_minus_Delta_over_eps_plus_delta", c.target},
                                  {"target_exp_minus_Delta_over_eps", c.target_eps},
                                  {"bound_holds", c.bound_holds},
                                  {"non_finite_paths", c.non_finite},
                                  {"probability_by_H", quantiles}});
    }
    return Json{{"experiment", "exit"},
                {"seed", spec.seed},
                {"parameters",
                 Json{{"equilibrium", switchavg::to_json(spec.equilibrium)},
                      {"theta1", spec.theta1},
                      {"theta3", spec.theta3},
                      {"H", spec.horizon},
                      {"R", spec.radius},
                      {"Delta", spec.Delta},
                      {"n_paths", spec.n_paths},
                      {"step", spec.step},
                      {"i0", spec.i0 + 1},
                      {"scheme", to_string(spec.scheme)},
                      {"continuation_steps", spec.continuation_steps},
                      {"enforce_assumption", spec.enforce_assumption},
                      {"regimes", switchavg::to_json(regimes)}}},
                {"equilibrium", switchavg::to_json(equilibrium)},
                {"witness_ok", witness_ok},
                {"witness_note", witness_note},
                {"cells", cells_json},
                {"wall_seconds", wall_seconds}};
}

std::string ExitReport::to_text() const {
    std::ostringstream os;
    os << "exit: equilibrium " << point_text(equilibrium.location) << " (" << to_string(equilibrium.kind)
       << ") theta1=" << fmt("%g", spec.theta1) << " theta3=" << fmt("%g", spec.theta3) << " H=" << fmt("%g", spec.horizon)
       << " N=" << spec.n_paths << " Delta=" << fmt("%g", spec.Delta) << " seed=" << spec.seed << "\n";
    os << "witness: " << witness_note << "\n";
    os << pad("eps", 10) << pad("delta", 10) << pad("P(tau<=H)", 12) << pad("ci95", 26) << pad("exp(-D/(e+d))", 15)
       << pad("exp(-D/e)", 13) << "bound\n";
    for (const auto& c : cells) {
        os << pad(fmt("%g", c.pair.eps), 10) << pad(fmt("%g", c.pair.delta), 10) << pad(fmt("%.5f", c.estimate.p), 12)
           << pad("[" + fmt("%.5f", c.estimate.ci.lo) + ", " + fmt("%.5f", c.estimate.ci.hi) + "]", 26)
           << pad(fmt("%.3e", c.target), 15) << pad(fmt("%.3e", c.target_eps), 13) << (c.bound_holds ? "holds" : "fails")
           << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------- sweep

void SweepSpec::validate() const {
    require(std::isfinite(horizon) && horizon > 0.0, "sweep: horizon must be positive");
    require(burn_fraction >= 0.0 && burn_fraction < 1.0, "sweep: burn fraction must be in [0, 1)");
    require(n_seeds >= 2, "sweep: need at least two seeds per cell");
    require(step > 0.0 && step <= horizon, "sweep: need 0 < step <= horizon");
    require(n_proj >= 1, "sweep: n_proj must be >= 1");
    require(atoms >= 8, "sweep: mu0 needs at least 8 atoms");
    require(sample_spacing >= step, "sweep: sample spacing must be >= step");
    require(energy_atoms >= 2, "sweep: energy_atoms must be >= 2");
}

SweepReport convergence_sweep(const HybridModel& model, const LimitCycle& cycle, const Eigen::Ref<const Vector>& x0,
                              int i0, const SweepSpec& spec, const RegimeSpec& regimes) {
    spec.validate();
    regimes.validate();
    require(x0.size() == model.dim, "sweep: x0 dimension mismatch");
    require(cycle.orbit.rows() == model.dim && cycle.period > 0.0, "sweep: cycle does not match the model");
    const auto t0 = Clock::now();

    const Measure mu0 = cycle_occupation_measure(cycle, spec.atoms);
    using Functional = std::function<double(const Eigen::Ref<const Vector>&)>;
    const std::vector<std::pair<std::string, Functional>> functionals = {
        {"x_1", [](const Eigen::Ref<const Vector>& x) { return x(0); }},
        {"|x|^2", [](const Eigen::Ref<const Vector>& x) { return x.squaredNorm(); }},
    };
    std::vector<double> cycle_values;
    for (const auto& [name, g] : functionals) {
        double acc = 0.0;
        for (Index j = 0; j < mu0.size(); ++j) acc += mu0.weights()(j) * g(mu0.points().col(j));
        cycle_values.push_back(acc);
    }

    const std::size_t cells = regimes.pairs.size();
    const std::size_t seeds = spec.n_seeds;
    std::vector<double> sliced(cells * seeds), energy(cells * seeds);
    std::vector<std::vector<double>> values(cells * seeds);
    const int stride = std::max(1, static_cast<int>(std::lround(spec.sample_spacing / spec.step)));
    parallel_for(cells * seeds, [&](std::size_t task) {
        const std::size_t c = task / seeds;
        const std::size_t s = task % seeds;
        SimParams p = base_params(regimes.pairs[c], spec.step, spec.horizon, spec.seed, spec.scheme, spec.guard_radius);
        p.burn_in = spec.burn_fraction * spec.horizon;
        p.record_stride = stride;
        p.record_switches = false;
        OccupationAccumulator acc(model.dim, p.burn_in, 1);
        try {
            simulate_path_observed(model, p, x0, i0, s, [&](double t, const Eigen::Ref<const Vector>& x, int, bool grid) {
                acc.add(t, x, grid);
                return true;
            });
        } catch (const NumericError& e) {
            throw PathError(s, "sweep cell " + regime_text(regimes.pairs[c]) + ": " + e.what());
        }
        const Measure mu = acc.measure();
        sliced[task] = sliced_wasserstein(mu, mu0, spec.n_proj, spec.seed);
        const Index thin = (mu.size() + spec.energy_atoms - 1) / spec.energy_atoms;
        energy[task] = energy_distance(thin > 1 ? mu.thinned(thin) : mu, mu0);
        for (const auto& [name, g] : functionals) {
            double v = 0.0;
            for (Index j = 0; j < mu.size(); ++j) v += mu.weights()(j) * g(mu.points().col(j));
            values[task].push_back(v);
        }
    });

    SweepReport report;
    report.spec = spec;
    report.x0 = x0;
    report.i0 = i0;
    report.regimes = regimes;
    report.period = cycle.period;
    for (std::size_t c = 0; c < cells; ++c) {
        SweepCell cell;
        cell.pair = regimes.pairs[c];
        cell.distances.assign(sliced.begin() + static_cast<long>(c * seeds), sliced.begin() + static_cast<long>((c + 1) * seeds));
        cell.sliced = summarize(cell.distances);
        cell.energy = summarize(std::vector<double>(energy.begin() + static_cast<long>(c * seeds),
                                                    energy.begin() + static_cast<long>((c + 1) * seeds)));
        for (std::size_t g = 0; g < functionals.size(); ++g) {
            std::vector<double> v;
            for (std::size_t s = 0; s < seeds; ++s) v.push_back(values[c * seeds + s][g]);
            FunctionalCheck check;
            check.name = functionals[g].first;
            check.cycle_value = cycle_values[g];
            check.empirical = summarize(v);
            check.within_3sd = std::abs(check.empirical.mean - check.cycle_value) <= 3.0 * check.empirical.sd;
            cell.functionals.push_back(check);
        }
        report.cells.push_back(std::move(cell));
    }
    report.strictly_decreasing = true;
    for (std::size_t c = 1; c < cells; ++c) {
        if (!(report.cells[c].sliced.mean < report.cells[c - 1].sliced.mean)) report.strictly_decreasing = false;
    }
    report.extremes_separated = cells >= 2 && report.cells.front().sliced.ci.lo > report.cells.back().sliced.ci.hi;
    auto ranking = [&](auto key) {
        std::vector<std::size_t> idx(cells);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
        return idx;
    };
    report.energy_same_ranking = ranking([&](std::size_t c) { return report.cells[c].sliced.mean; }) ==
                                 ranking([&](std::size_t c) { return report.cells[c].energy.mean; });
    report.wall_seconds = seconds_since(t0);
    return report;
}

Json SweepReport::to_json() const {
    Json cells_json = Json::array();
    for (const auto& c : cells) {
        Json f = Json::array();
        for (const auto& check : c.functionals) {
            f.push_back(Json{{"g", check.name},
                             {"cycle_time_average", check.cycle_value},
                             {"empirical", switchavg::to_json(check.empirical)},
                             {"within_3sd", check.within_3sd}});
        }
        cells_json.push_back(Json{{"eps", c.pair.eps},
                                  {"delta", c.pair.delta},
                                  {"sliced_wasserstein", switchavg::to_json(c.sliced)},
                                  {"energy_distance", switchavg::to_json(c.energy)},
                                  {"per_seed_sliced_wasserstein", c.distances},
                                  {"functionals", f}});
    }
    return Json{{"experiment", "sweep"},
                {"seed", spec.seed},
                {"parameters",
                 Json{{"horizon", spec.horizon},
                      {"burn_fraction", spec.burn_fraction},
                      {"n_seeds", spec.n_seeds},
                      {"step", spec.step},
                      {"scheme", to_string(spec.scheme)},
                      {"n_proj", spec.n_proj},
                      {"atoms", spec.atoms},
                      {"sample_spacing", spec.sample_spacing},
                      {"energy_atoms", spec.energy_atoms},
                      {"x0", switchavg::to_json(x0)},
                      {"i0", i0 + 1},
                      {"regimes", switchavg::to_json(regimes)}}},
                {"cycle_period", period},
                {"cells", cells_json},
                {"strictly_decreasing", strictly_decreasing},
                {"extremes_ci_separated", extremes_separated},
                {"energy_same_ranking", energy_same_ranking},
                {"wall_seconds", wall_seconds}};
}

std::string SweepReport::to_text() const {
    std::ostringstream os;
    os << "sweep: sliced W1(mu_hat, mu0), T=" << fmt("%g", spec.horizon) << " burn=" << fmt("%g", spec.burn_fraction)
       << " seeds=" << spec.n_seeds << " h=" << fmt("%g", spec.step) << " period=" << fmt("%.6f", period)
       << " seed=" << spec.seed << "\n";
    os << pad("eps", 10) << pad("delta", 10) << pad("SW mean", 12) << pad("sd", 12) << pad("ci95", 24) << pad("energy", 12)
       << "E[x_1] vs cycle\n";
    for (const auto& c : cells) {
        const auto& f = c.functionals.front();
        os << pad(fmt("%g", c.pair.eps), 10) << pad(fmt("%g", c.pair.delta), 10) << pad(fmt("%.5f", c.sliced.mean), 12)
           << pad(fmt("%.5f", c.sliced.sd), 12)
           << pad("[" + fmt("%.5f", c.sliced.ci.lo) + ", " + fmt("%.5f", c.sliced.ci.hi) + "]", 24)
           << pad(fmt("%.5f", c.energy.mean), 12) << fmt("%.4f", f.empirical.mean) << " vs " << fmt("%.4f", f.cycle_value)
           << "\n";
    }
    os << "strictly decreasing: " << (strictly_decreasing ? "yes" : "no")
       << "  extremes CI-separated: " << (extremes_separated ? "yes" : "no")
       << "  energy ranking agrees: " << (energy_same_ranking ? "yes" : "no") << "\n";
    return os.str();
}

// ---------------------------------------------------------------- audit

std::optional<int> AuditEntry::witness(RegimeCase c) const {
    switch (c) {
        case RegimeCase::case1: return witness_case1;
        case RegimeCase::case2: return witness_case2;
        case RegimeCase::case3: return witness_case3;
    }
    return std::nullopt;
}

AuditEntry audit_equilibrium(const HybridModel& model, const Equilibrium& eq, double tol) {
    AuditEntry entry;
    entry.equilibrium = eq;
    const bool saddle = eq.kind == EquilibriumKind::saddle && model.dim == 2;
    const bool source = eq.kind == EquilibriumKind::source;
    Vector beta;
    if (saddle) beta = eq.stable_normal ? *eq.stable_normal : stable_manifold_normal(eq);
    for (int i = 0; i < model.regimes(); ++i) {
        const Vector f = model.drift_at(eq.location, i);
        const Matrix s = model.noise_dim > 0 ? model.diffusion_at(eq.location, i) : Matrix::Zero(model.dim, 1);
        entry.drifts.push_back(f);
        if (saddle) {
            entry.beta_f.push_back(beta.dot(f));
            entry.beta_sigma.push_back((beta.transpose() * s).norm());
        } else if (source) {
            entry.beta_f.push_back(f.norm());
            entry.beta_sigma.push_back(s.norm());
        }
    }
    if (!saddle && !source) return entry;
    for (std::size_t i = 0; i < entry.beta_f.size(); ++i) {
        const bool drift = std::abs(entry.beta_f[i]) > tol;
        const bool noise = entry.beta_sigma[i] > tol;
        if (drift && !entry.witness_case2) entry.witness_case2 = static_cast<int>(i);
        if (noise && !entry.witness_case3) entry.witness_case3 = static_cast<int>(i);
        if ((drift || noise) && !entry.witness_case1) entry.witness_case1 = static_cast<int>(i);
    }
    return entry;
}

namespace {

LipschitzProbe probe_lipschitz(const Box& box, std::size_t pairs, double radius, std::uint64_t seed,
                               const std::function<double(const Vector&, const Vector&)>& gap) {
    RandomStream rng(seed, 0, StreamKind::probe);
    std::vector<double> ratios;
    ratios.reserve(pairs);
    const Index d = box.dim();
    for (std::size_t k = 0; k < pairs; ++k) {
        Vector x(d), u(d);
        for (Index a = 0; a < d; ++a) x(a) = box.lo(a) + (box.hi(a) - box.lo(a)) * rng.uniform();
        rng.fill_normal(u);
        const Vector y = x + radius * rng.uniform() * u.normalized();
        const double dist = (x - y).norm();
        if (dist <= 0.0) continue;
        ratios.push_back(gap(x, y) / dist);
    }
    LipschitzProbe out;
    out.pairs = ratios.size();
    if (ratios.empty()) return out;
    out.max_ratio = *std::max_element(ratios.begin(), ratios.end());
    std::nth_element(ratios.begin(), ratios.begin() + static_cast<long>(ratios.size() / 2), ratios.end());
    out.median_ratio = ratios[ratios.size() / 2];
    return out;
}

}  // namespace

Json to_json(const LipschitzProbe& p) {
    return Json{{"pairs", p.pairs}, {"max_ratio", p.max_ratio}, {"median_ratio", p.median_ratio}};
}

AuditReport assumption_audit(const HybridModel& model, const Box& box, const AuditOptions& options) {
    require(box.dim() == model.dim, "audit: box dimension mismatch");
    require((box.hi.array() > box.lo.array()).all(), "audit: degenerate box");
    AuditReport report;
    report.box = box;
    report.drift_lipschitz = probe_lipschitz(box, options.lipschitz_pairs, options.lipschitz_radius, options.seed,
                                             [&](const Vector& x, const Vector& y) {
                                                 double worst = 0.0;
                                                 for (int i = 0; i < model.regimes(); ++i) {
                                                     worst = std::max(worst, (model.drift_at(x, i) - model.drift_at(y, i)).norm());
                                                 }
                                                 return worst;
                                             });
    if (model.noise_dim > 0) {
        report.diffusion_lipschitz =
            probe_lipschitz(box, options.lipschitz_pairs, options.lipschitz_radius, options.seed + 1,
                            [&](const Vector& x, const Vector& y) {
                                double worst = 0.0;
                                for (int i = 0; i < model.regimes(); ++i) {
                                    worst = std::max(worst, (model.diffusion_at(x, i) - model.diffusion_at(y, i)).norm());
                                }
                                return worst;
                            });
    }
    const AveragedField field = average_field(model);
    for (const auto& eq : find_equilibria(field, box, options.grid)) {
        report.entries.push_back(audit_equilibrium(model, eq, options.witness_tol));
    }
    return report;
}

Json AuditReport::to_json() const {
    Json eqs = Json::array();
    for (const auto& e : entries) {
        Json drifts = Json::array();
        for (const auto& f : e.drifts) drifts.push_back(switchavg::to_json(f));
        auto w = [](const std::optional<int>& i) { return i ? Json(*i + 1) : Json(nullptr); };
        eqs.push_back(Json{{"equilibrium", switchavg::to_json(e.equilibrium)},
                           {"regime_drifts", drifts},
                           {"beta_f", e.beta_f},
                           {"beta_sigma", e.beta_sigma},
                           {"witness_case1", w(e.witness_case1)},
                           {"witness_case2", w(e.witness_case2)},
                           {"witness_case3", w(e.witness_case3)}});
    }
    return Json{{"experiment", "audit"},
                {"box", Json{{"lo", switchavg::to_json(box.lo)}, {"hi", switchavg::to_json(box.hi)}}},
                {"drift_lipschitz", switchavg::to_json(drift_lipschitz)},
                {"diffusion_lipschitz", switchavg::to_json(diffusion_lipschitz)},
                {"equilibria", eqs}};
}

std::string AuditReport::to_text() const {
    std::ostringstream os;
    os << "audit: box " << point_text(box.lo) << " - " << point_text(box.hi) << "\n";
    os << "drift Lipschitz ratio: max " << fmt("%.4g", drift_lipschitz.max_ratio) << " median "
       << fmt("%.4g", drift_lipschitz.median_ratio) << " over " << drift_lipschitz.pairs << " pairs\n";
    os << "diffusion Lipschitz ratio: max " << fmt("%.4g", diffusion_lipschitz.max_ratio) << " median "
       << fmt("%.4g", diffusion_lipschitz.median_ratio) << "\n";
    os << pad("equilibrium", 26) << pad("kind", 15) << pad("beta'f per regime", 30) << pad("beta'sigma per regime", 30)
       << "witness case1/2/3\n";
    auto list = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt("%.4g", v[i]);
        return s.empty() ? std::string("-") : s;
    };
    auto w = [](const std::optional<int>& i) { return i ? std::to_string(*i + 1) : std::string("none"); };
    for (const auto& e : entries) {
        os << pad(point_text(e.equilibrium.location), 26) << pad(to_string(e.equilibrium.kind), 15)
           << pad(list(e.beta_f), 30) << pad(list(e.beta_sigma), 30) << w(e.witness_case1) << "/" << w(e.witness_case2)
           << "/" << w(e.witness_case3) << "\n";
    }
    return os.str();
}

}  // namespace switchavg
