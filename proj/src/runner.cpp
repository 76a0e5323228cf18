#include "switchavg/runner.hpp"

#include "switchavg/models.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace switchavg {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Rethrows numeric failures with the stage and its parameters attached.
template <typename F>
auto stage(const std::string& what, F&& body) {
    try {
        return body();
    } catch (const ValidationError& e) {
        throw ValidationError(what + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(what + ": " + e.what());
    }
}

std::string pair_label(const NoisePair& p) {
    return "eps=" + format_number(p.eps) + ", delta=" + format_number(p.delta);
}

std::string file_tag(double eps) { return "eps" + format_number(eps); }

std::string axis_name(int k, int dim) {
    if (dim == 2) return k == 0 ? "x" : "y";
    return "x" + std::to_string(k + 1);
}

PlotSeries trajectory_component(const Trajectory& traj, int k, std::string name, std::string source) {
    PlotSeries s{std::move(name), std::move(source), {}, {}};
    for (std::size_t j = 0; j < traj.size(); ++j) {
        s.x.push_back(traj.times[j]);
        s.y.push_back(traj.state(j)(k));
    }
    return s;
}

PlotSeries ode_component(const OdePath& path, int k, std::string name, std::string source) {
    PlotSeries s{std::move(name), std::move(source), path.times, {}};
    for (Index j = 0; j < path.states.cols(); ++j) s.y.push_back(path.states(k, j));
    return s;
}

PlotSeries plane_series(const Matrix& states, std::string name, std::string source, bool close = false) {
    PlotSeries s{std::move(name), std::move(source), {}, {}};
    for (Index j = 0; j < states.cols(); ++j) {
        s.x.push_back(states(0, j));
        s.y.push_back(states(1, j));
    }
    if (close && states.cols() > 0) {
        s.x.push_back(states(0, 0));
        s.y.push_back(states(1, 0));
    }
    return s;
}

template <typename Writer>
std::string csv_text(const ExperimentConfig& c, Writer&& write) {
    std::ostringstream os;
    write(os);
    return with_csv_header(c, os.str());
}

std::string plot_description(const ExperimentConfig& c) {
    return std::string("switchavg ") + kVersion + " config=" + config_echo(c);
}

void write_json(OutputDir& out, const std::string& name, const ExperimentConfig& c, Json result) {
    out.write(name, wrap_result(c, std::move(result)).dump(2) + "\n");
}

void write_plot(OutputDir& out, const std::string& name, const ExperimentConfig& c, PlotSpec plot) {
    if (!c.plots) return;
    plot.description = plot_description(c);
    out.write(name, emit_svg(plot));
}

bool holling_family(const Json& model) {
    const std::string preset = model.at("preset");
    return preset == "paper_example" || preset == "holling";
}

HollingParams holling_params(const Json& model) {
    if (model.at("preset") == "paper_example") return paper_example_params();
    HollingParams p;
    auto list = [&](const char* key) { return model.at(key).get<std::vector<double>>(); };
    p.r = list("r");
    p.K = list("K");
    p.m = list("m");
    p.a = list("a");
    p.b = list("b");
    p.d = list("d");
    p.e = list("e");
    p.f = list("f");
    p.lambda = list("lambda");
    p.rho = list("rho");
    return p;
}

Json holling_json(const HollingCoefficients& h) {
    return Json{{"r", h.r}, {"K", h.K}, {"m", h.m}, {"em", h.em}, {"f", h.f}, {"d", h.d}};
}

Json persistence_json(const HollingParams& hp, const Vector& nu) {
    const PredatorPreyParams p = hp.general();
    const AveragedPPQuantities q = averaged_quantities(p, nu);
    Json out{{"a_bar", q.a_bar},
             {"b_bar", q.b_bar},
             {"c_bar", q.c_bar},
             {"d_bar", q.d_bar},
             {"boundary_growth", q.boundary_growth},
             {"gamma0", q.gamma0},
             {"gamma0_h1", q.gamma0_h1}};
    try {
        const PersistenceFunctional pf = persistence_functional(p, nu);
        out["condition_holds"] = true;
        out["upsilon_bar_origin"] = pf.upsilon_bar(Vector::Zero(2));
    } catch (const ValidationError& e) {
        out["condition_holds"] = false;
        out["condition_failure"] = e.what();
    }
    return out;
}

Json equilibria_json(const std::vector<Equilibrium>& eqs) {
    Json out = Json::array();
    for (const auto& eq : eqs) out.push_back(to_json(eq));
    return out;
}

/// Fast mode divides horizons and path counts by 10.
ExperimentConfig effective_config(ExperimentConfig c) {
    if (!c.fast) return c;
    auto shrink = [](std::size_t n, std::size_t floor) { return std::max(floor, n / 10); };
    c.sim.horizon /= 10.0;
    c.sim.burn_in = std::min(c.sim.burn_in, 0.5 * c.sim.horizon);
    c.n_paths = shrink(c.n_paths, 1);
    c.closeness.horizon /= 10.0;
    c.closeness.n_paths = shrink(c.closeness.n_paths, 10);
    c.exit.horizon /= 10.0;
    c.exit.n_paths = shrink(c.exit.n_paths, 10);
    c.sweep.horizon /= 10.0;
    c.sweep.n_seeds = shrink(c.sweep.n_seeds, 2);
    c.cycle.burn_in /= 10.0;
    c.fast = false;
    return c;
}

std::vector<Equilibrium> equilibria_for(const ExperimentConfig& c, const AveragedField& field) {
    return stage("averaged: equilibrium search (grid=" + std::to_string(c.grid) + ")",
                 [&] { return find_equilibria(field, c.box, c.grid); });
}

LimitCycle cycle_for(const ExperimentConfig& c, const AveragedField& field, const std::vector<Equilibrium>& eqs) {
    return stage("averaged: limit-cycle detection (step=" + format_number(c.cycle.step) +
                     ", burn_in=" + format_number(c.cycle.burn_in) + ")",
                 [&] { return detect_limit_cycle(field, c.cycle_seed, c.cycle, eqs); });
}

void run_simulate(const ExperimentConfig& c, const HybridModel& model, OutputDir& out, RunSummary&) {
    const std::string what = "hybrid_sde: simulate (" + pair_label({c.sim.eps, c.sim.delta}) +
                             ", step=" + format_number(c.sim.step) + ", seed=" + std::to_string(c.sim.seed) + ")";
    const Trajectory traj = stage(what, [&] { return simulate_path(model, c.sim, c.x0, c.i0, 0); });
    out.write("trajectory.csv", csv_text(c, [&](std::ostream& os) { write_trajectory_csv(os, traj); }));
    if (c.n_paths > 1) {
        const BatchSummary batch = stage(what, [&] { return simulate_batch(model, c.sim, c.x0, c.i0, c.n_paths); });
        write_json(out, "batch.json", c, to_json(batch));
    }
    PlotSpec ts{PlotKind::time_series, "Sample path", "t", "state", {}, {}, {}};
    for (int k = 0; k < model.dim; ++k) {
        ts.series.push_back(trajectory_component(traj, k, axis_name(k, model.dim), "trajectory.csv"));
    }
    write_plot(out, "trajectory.svg", c, ts);
    if (model.dim == 2) {
        PlotSpec phase{PlotKind::phase_portrait, "Phase portrait", "x", "y", {}, {}, {}};
        phase.series.push_back(plane_series(traj.states(), "path", "trajectory.csv"));
        write_plot(out, "phase.svg", c, phase);
    }
}

void run_average(const ExperimentConfig& c, const HybridModel& model, OutputDir& out, RunSummary&) {
    const AveragedField field = average_field(model);
    const auto eqs = equilibria_for(c, field);
    const OdePath path = stage("averaged: RK4 (step=" + format_number(c.cycle.step) + ")",
                               [&] { return integrate_ode(field, c.x0, c.sim.horizon, c.cycle.step, c.sim.guard_radius); });
    Json result{{"model", model.name}, {"stationary_distribution", to_json(field.weights())}};
    if (holling_family(c.model)) {
        result["coefficients"] = holling_json(fit_holling_coefficients(field));
        result["persistence"] = persistence_json(holling_params(c.model), field.weights());
    }
    result["equilibria"] = equilibria_json(eqs);
    result["ode"] = Json{{"step", c.cycle.step},
                         {"horizon", c.sim.horizon},
                         {"x0", to_json(c.x0)},
                         {"final_state", to_json(Vector(path.states.col(path.states.cols() - 1)))}};
    write_json(out, "average.json", c, std::move(result));
    out.write("averaged_ode.csv", csv_text(c, [&](std::ostream& os) { write_ode_csv(os, path); }));
    PlotSpec ts{PlotKind::time_series, "Averaged system", "t", "state", {}, {}, {}};
    for (int k = 0; k < model.dim; ++k) {
        ts.series.push_back(ode_component(path, k, axis_name(k, model.dim), "averaged_ode.csv"));
    }
    write_plot(out, "averaged_ode.svg", c, ts);
    if (model.dim == 2) {
        PlotSpec phase{PlotKind::phase_portrait, "Averaged phase portrait", "x", "y", {}, {}, {}};
        phase.series.push_back(plane_series(path.states, "averaged", "averaged_ode.csv"));
        write_plot(out, "averaged_phase.svg", c, phase);
    }
}

void run_cycle(const ExperimentConfig& c, const HybridModel& model, OutputDir& out, RunSummary&) {
    const AveragedField field = average_field(model);
    const auto eqs = equilibria_for(c, field);
    const LimitCycle cycle = cycle_for(c, field, eqs);
    write_json(out, "cycle.json", c, Json{{"cycle", to_json(cycle)}, {"equilibria", equilibria_json(eqs)}});
    out.write("cycle_orbit.csv", csv_text(c, [&](std::ostream& os) { write_orbit_csv(os, cycle); }));
    if (model.dim == 2) {
        PlotSpec phase{PlotKind::phase_portrait, "Limit cycle of the averaged system", "x", "y", {}, {}, {}};
        phase.series.push_back(plane_series(cycle.orbit, "cycle", "cycle_orbit.csv", true));
        write_plot(out, "cycle.svg", c, phase);
    }
}

void run_measure(const ExperimentConfig& c, const HybridModel& model, OutputDir& out, RunSummary& summary) {
    SimParams p = c.sim;
    p.record_switches = false;
    p.record_stride = std::max(1, static_cast<int>(std::lround(c.measure.sample_spacing / p.step)));
    OccupationAccumulator acc(model.dim, c.measure.burn_fraction * p.horizon, 1);
    stage("hybrid_sde: occupation path (" + pair_label({p.eps, p.delta}) + ", step=" + format_number(p.step) + ")", [&] {
        simulate_path_observed(model, p, c.x0, c.i0, 0, [&](double t, const Eigen::Ref<const Vector>& x, int, bool grid) {
            acc.add(t, x, grid);
            return true;
        });
        return 0;
    });
    const Measure mu = stage("measures: occupation", [&] { return acc.measure(); });
    const GridHistogram hist = stage("measures: histogram", [&] { return histogram(mu, c.box, c.measure.bins); });

    Json result{{"atoms", mu.size()},
                {"burn_in", c.measure.burn_fraction * p.horizon},
                {"sample_spacing", p.record_stride * p.step},
                {"mean", to_json(Vector(mu.mean()))},
                {"histogram", to_json(hist)}};
    std::optional<LimitCycle> cycle;
    try {
        const AveragedField field = average_field(model);
        cycle = cycle_for(c, field, equilibria_for(c, field));
    } catch (const NumericError& e) {
        summary.notes.push_back(std::string("no limit cycle, distances to mu0 skipped: ") + e.what());
        result["mu0"] = nullptr;
    }
    if (cycle) {
        const Measure mu0 = cycle_occupation_measure(*cycle, c.sweep.atoms);
        const Index stride = std::max<Index>(1, (mu.size() + c.sweep.energy_atoms - 1) / c.sweep.energy_atoms);
        result["mu0"] = Json{{"period", cycle->period},
                             {"atoms", mu0.size()},
                             {"sliced_wasserstein", sliced_wasserstein(mu, mu0, c.measure.n_proj, c.sim.seed)},
                             {"energy_distance", energy_distance(mu.thinned(stride), mu0)},
                             {"energy_thinning_stride", stride}};
        out.write("cycle_orbit.csv", csv_text(c, [&](std::ostream& os) { write_orbit_csv(os, *cycle); }));
    }
    write_json(out, "measure.json", c, std::move(result));
    out.write("measure.csv", csv_text(c, [&](std::ostream& os) { write_measure_csv(os, mu); }));
    out.write("histogram.csv", csv_text(c, [&](std::ostream& os) { write_histogram_csv(os, hist); }));
    if (model.dim == 2) {
        PlotSpec heat{PlotKind::histogram_heatmap, "Occupation histogram", "x", "y", {}, hist, {}};
        if (cycle) heat.series.push_back(plane_series(cycle->orbit, "limit cycle", "cycle_orbit.csv", true));
        write_plot(out, "histogram.svg", c, heat);
    }
}

void run_closeness(const ExperimentConfig& c, const HybridModel& model, OutputDir& out, RunSummary& summary) {
    const auto t0 = Clock::now();
    const ClosenessReport report = stage("experiments: closeness (gamma=" + format_number(c.closeness.gamma) + ", T=" +
                                             format_number(c.closeness.horizon) + ")",
                                         [&] { return closeness_probability(model, c.x0, c.i0, c.closeness, c.regimes); });
    summary.notes.push_back("closeness wall time " + format_number(std::round(seconds_since(t0) * 100) / 100) + " s");
    write_json(out, "closeness.json", c, report.to_json());
    out.write("closeness.txt", report.to_text());
}

void run_exit(const ExperimentConfig& c, const HybridModel& model, OutputDir& out, RunSummary& summary) {
    const auto t0 = Clock::now();
    const ExitReport report = stage("experiments: exit time (equilibrium=" + to_json(c.exit.equilibrium).dump() +
                                        ", H=" + format_number(c.exit.horizon) + ")",
                                    [&] { return exit_time_experiment(model, c.exit, c.regimes); });
    summary.notes.push_back("exit wall time " + format_number(std::round(seconds_since(t0) * 100) / 100) + " s");
    write_json(out, "exit.json", c, report.to_json());
    out.write("exit.txt", report.to_text());
}

void run_sweep(const ExperimentConfig& c, const HybridModel& model, OutputDir& out, RunSummary& summary) {
    const AveragedField field = average_field(model);
    const LimitCycle cycle = cycle_for(c, field, equilibria_for(c, field));
    const auto t0 = Clock::now();
    const SweepReport report = stage("experiments: sweep (T=" + format_number(c.sweep.horizon) + ", seeds=" +
                                         std::to_string(c.sweep.n_seeds) + ")",
                                     [&] { return convergence_sweep(model, cycle, c.x0, c.i0, c.sweep, c.regimes); });
    summary.notes.push_back("sweep wall time " + format_number(std::round(seconds_since(t0) * 100) / 100) + " s");
    write_json(out, "sweep.json", c, report.to_json());
    out.write("sweep.txt", report.to_text());

    std::ostringstream os;
    os << "eps,delta,log10_eps_plus_delta,sw_mean,sw_ci_lo,sw_ci_hi,energy_mean\n";
    PlotSeries curve{"mean sliced W1", "sweep.csv", {}, {}};
    for (const auto& cell : report.cells) {
        const double lx = std::log10(cell.pair.eps + cell.pair.delta);
        os << format_number(cell.pair.eps) << ',' << format_number(cell.pair.delta) << ',' << format_number(lx) << ','
           << format_number(cell.sliced.mean) << ',' << format_number(cell.sliced.ci.lo) << ','
           << format_number(cell.sliced.ci.hi) << ',' << format_number(cell.energy.mean) << '\n';
        curve.x.push_back(lx);
        curve.y.push_back(cell.sliced.mean);
    }
    out.write("sweep.csv", with_csv_header(c, os.str()));
    PlotSpec plot{PlotKind::convergence_curve, "Distance to the cycle occupation measure", "log10(eps + delta)",
                  "sliced W1", {curve}, {}, {}};
    write_plot(out, "sweep.svg", c, plot);
}

void run_audit(const ExperimentConfig& c, const HybridModel& model, OutputDir& out, RunSummary&) {
    const AuditReport report = stage("experiments: assumption audit (grid=" + std::to_string(c.audit.grid) + ")",
                                     [&] { return assumption_audit(model, c.box, c.audit); });
    write_json(out, "audit.json", c, report.to_json());
    out.write("audit.txt", report.to_text());
}

void run_reproduce(const ExperimentConfig& c, const HybridModel& model, OutputDir& out, RunSummary& summary,
                   std::ostream& log) {
    log << "reproduce-paper defaults (not stated with the source figures):\n"
        << "  initial state x0 = " << to_json(c.x0).dump() << ", initial regime = " << c.i0 + 1 << "\n"
        << "  horizon T = " << format_number(c.sim.horizon) << ", step h = " << format_number(c.sim.step)
        << ", scheme = " << to_string(c.sim.scheme) << ", seed = " << c.sim.seed << "\n";

    const AveragedField field = average_field(model);
    const auto eqs = equilibria_for(c, field);
    std::optional<LimitCycle> cycle;
    try {
        cycle = cycle_for(c, field, eqs);
    } catch (const NumericError& e) {
        summary.notes.push_back(std::string("no limit cycle: ") + e.what());
    }

    SimParams base = c.sim;
    base.record_switches = false;
    const double burn = 0.25 * base.horizon;

    Json cells = Json::array();
    std::vector<std::pair<std::string, Trajectory>> paths;
    for (const auto& pair : c.regimes.pairs) {
        SimParams p = base;
        p.eps = pair.eps;
        p.delta = pair.delta;
        const auto t0 = Clock::now();
        Trajectory traj = stage("hybrid_sde: simulate (" + pair_label(pair) + ", step=" + format_number(p.step) + ")",
                                [&] { return simulate_path(model, p, c.x0, c.i0, 0); });
        log << "  path " << pair_label(pair) << " done in " << format_number(std::round(seconds_since(t0) * 100) / 100)
            << " s\n";
        const std::string name = "path_" + file_tag(pair.eps) + ".csv";
        out.write(name, csv_text(c, [&](std::ostream& os) { write_trajectory_csv(os, traj); }));
        const Matrix states = traj.states();
        Json cell{{"eps", pair.eps},
                  {"delta", pair.delta},
                  {"csv", name},
                  {"records", traj.size()},
                  {"final_state", to_json(Vector(states.col(states.cols() - 1)))},
                  {"min_state", to_json(Vector(states.rowwise().minCoeff()))},
                  {"max_state", to_json(Vector(states.rowwise().maxCoeff()))}};
        if (cycle) {
            const Measure mu = empirical_occupation(traj, burn, 1);
            cell["sliced_wasserstein_to_mu0"] =
                sliced_wasserstein(mu, cycle_occupation_measure(*cycle, c.sweep.atoms), c.sweep.n_proj, c.sim.seed);
        }
        cells.push_back(std::move(cell));
        paths.emplace_back(name, std::move(traj));
    }

    const double ode_step = base.step * base.record_stride;
    const OdePath avg = stage("averaged: RK4 (step=" + format_number(ode_step) + ")",
                              [&] { return integrate_ode(field, c.x0, base.horizon, ode_step, base.guard_radius); });
    out.write("path_averaged.csv", csv_text(c, [&](std::ostream& os) { write_ode_csv(os, avg); }));
    if (cycle) out.write("cycle_orbit.csv", csv_text(c, [&](std::ostream& os) { write_orbit_csv(os, *cycle); }));

    for (int k = 0; k < 2; ++k) {
        const std::string comp = axis_name(k, 2);
        for (std::size_t j = 0; j < paths.size(); ++j) {
            const auto& pair = c.regimes.pairs[j];
            PlotSpec ts{PlotKind::time_series, comp + "(t), " + pair_label(pair), "t", comp, {}, {}, {}};
            ts.series.push_back(trajectory_component(paths[j].second, k, comp, paths[j].first));
            write_plot(out, "timeseries_" + comp + "_" + file_tag(pair.eps) + ".svg", c, ts);
        }
        PlotSpec ts{PlotKind::time_series, comp + "(t), averaged system", "t", comp, {}, {}, {}};
        ts.series.push_back(ode_component(avg, k, comp, "path_averaged.csv"));
        write_plot(out, "timeseries_" + comp + "_averaged.svg", c, ts);
    }
    auto phase = [&](const std::string& title, PlotSeries s, const std::string& file) {
        PlotSpec plot{PlotKind::phase_portrait, title, "x", "y", {std::move(s)}, {}, {}};
        if (cycle) plot.series.push_back(plane_series(cycle->orbit, "limit cycle", "cycle_orbit.csv", true));
        write_plot(out, file, c, plot);
    };
    for (std::size_t j = 0; j < paths.size(); ++j) {
        const auto& pair = c.regimes.pairs[j];
        phase("Phase portrait, " + pair_label(pair), plane_series(paths[j].second.states(), "path", paths[j].first),
              "phase_" + file_tag(pair.eps) + ".svg");
    }
    phase("Phase portrait, averaged system", plane_series(avg.states, "averaged", "path_averaged.csv"),
          "phase_averaged.svg");

    Json result{{"defaults",
                 Json{{"x0", to_json(c.x0)},
                      {"regime", c.i0 + 1},
                      {"horizon", c.sim.horizon},
                      {"step", c.sim.step},
                      {"scheme", to_string(c.sim.scheme)},
                      {"seed", c.sim.seed},
                      {"note", "initial state, regime and horizon are toolkit defaults"}}},
                {"equilibria", equilibria_json(eqs)},
                {"cycle", cycle ? to_json(*cycle, false) : Json(nullptr)},
                {"cells", cells}};
    if (holling_family(c.model)) {
        result["coefficients"] = holling_json(fit_holling_coefficients(field));
        result["persistence"] = persistence_json(holling_params(c.model), field.weights());
    }
    write_json(out, "summary.json", c, std::move(result));
}

}  // namespace

OutputDir::OutputDir(fs::path root) : root_(std::move(root)) {}

fs::path OutputDir::resolve(const std::string& name) const {
    const fs::path rel(name);
    require(!name.empty() && rel.is_relative() && !rel.has_root_name(), "output: '" + name + "' must be a relative name");
    for (const auto& part : rel) require(part != "..", "output: '" + name + "' may not contain '..'");
    return root_ / rel;
}

void OutputDir::write(const std::string& name, const std::string& text) {
    write_text_file(resolve(name), text);
    if (std::find(written_.begin(), written_.end(), name) == written_.end()) written_.push_back(name);
}

std::string config_echo(const ExperimentConfig& config) { return config.to_json().dump(); }

Json wrap_result(const ExperimentConfig& config, Json result) {
    if (result.is_object()) result.erase("wall_seconds");
    return Json{{"toolkit", "switchavg"}, {"version", kVersion}, {"config", config.to_json()}, {"result", std::move(result)}};
}

std::string with_csv_header(const ExperimentConfig& config, const std::string& body) {
    return std::string("# switchavg ") + kVersion + " config=" + config_echo(config) + "\n" + body;
}

RunSummary run_experiment(const ExperimentConfig& requested, std::ostream& log) {
    requested.validate();
    const ExperimentConfig c = effective_config(requested);
    const HybridModel model = build_model(c.model);
    OutputDir out(c.output);
    RunSummary summary;
    log << "switchavg " << kVersion << ": " << to_string(c.kind) << " on " << model.name << " -> " << c.output << "\n";
    switch (c.kind) {
        case ExperimentKind::simulate: run_simulate(c, model, out, summary); break;
        case ExperimentKind::average: run_average(c, model, out, summary); break;
        case ExperimentKind::cycle: run_cycle(c, model, out, summary); break;
        case ExperimentKind::measure: run_measure(c, model, out, summary); break;
        case ExperimentKind::closeness: run_closeness(c, model, out, summary); break;
        case ExperimentKind::exit: run_exit(c, model, out, summary); break;
        case ExperimentKind::sweep: run_sweep(c, model, out, summary); break;
        case ExperimentKind::audit: run_audit(c, model, out, summary); break;
        case ExperimentKind::reproduce_paper: run_reproduce(c, model, out, summary, log); break;
    }
    out.write("config.json", c.to_json().dump(2) + "\n");
    summary.files = out.written();
    for (const auto& note : summary.notes) log << "  note: " << note << "\n";
    for (const auto& f : summary.files) log << "  wrote " << (out.root() / f).string() << "\n";
    return summary;
}

}  // namespace switchavg
