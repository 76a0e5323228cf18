#include "switchavg/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace switchavg {

std::string format_number(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

Json to_json(const Vector& v) {
    Json out = Json::array();
    for (Index k = 0; k < v.size(); ++k) out.push_back(v(k));
    return out;
}

Json points_to_json(const Matrix& m) {
    Json out = Json::array();
    for (Index j = 0; j < m.cols(); ++j) out.push_back(to_json(Vector(m.col(j))));
    return out;
}

Json to_json(const Interval& i) { return Json::array({i.lo, i.hi}); }

Json to_json(const ProportionEstimate& e) {
    return Json{{"p", e.p}, {"successes", e.successes}, {"trials", e.trials}, {"ci95_wilson", to_json(e.ci)}};
}

Json to_json(const SampleSummary& s) {
    return Json{{"n", s.n}, {"mean", s.mean}, {"sd", s.sd}, {"ci95", to_json(s.ci)}};
}

Json to_json(const SimParams& p) {
    return Json{{"eps", p.eps},
                {"delta", p.delta},
                {"step", p.step},
                {"horizon", p.horizon},
                {"seed", p.seed},
                {"scheme", to_string(p.scheme)},
                {"burn_in", p.burn_in},
                {"guard_radius", p.guard_radius},
                {"record_stride", p.record_stride},
                {"record_switches", p.record_switches}};
}

Json to_json(const Equilibrium& eq) {
    Json eig = Json::array();
    for (Index k = 0; k < eq.eigenvalues.size(); ++k) {
        eig.push_back(Json{{"re", eq.eigenvalues(k).real()}, {"im", eq.eigenvalues(k).imag()}});
    }
    Json jac = Json::array();
    for (Index r = 0; r < eq.jacobian.rows(); ++r) jac.push_back(to_json(Vector(eq.jacobian.row(r).transpose())));
    Json out{{"location", to_json(eq.location)},
             {"kind", to_string(eq.kind)},
             {"residual", eq.residual},
             {"eigenvalues", eig},
             {"jacobian", jac}};
    if (eq.stable_normal) out["stable_normal"] = to_json(*eq.stable_normal);
    return out;
}

Json to_json(const LimitCycle& cycle, bool with_orbit) {
    Json out{{"period", cycle.period},
             {"crossings", cycle.crossings},
             {"closure_gap", cycle.closure_gap},
             {"step", cycle.step},
             {"section", Json{{"anchor", to_json(cycle.section.anchor)}, {"normal", to_json(cycle.section.normal)}}},
             {"samples", cycle.orbit.cols()},
             {"start", to_json(cycle.start())}};
    if (with_orbit) out["orbit"] = points_to_json(cycle.orbit);
    return out;
}

Json to_json(const BatchSummary& batch) {
    Json mean = Json::array();
    Json second = Json::array();
    for (Index r = 0; r < batch.mean.rows(); ++r) {
        mean.push_back(to_json(Vector(batch.mean.row(r).transpose())));
        second.push_back(to_json(Vector(batch.second_moment.row(r).transpose())));
    }
    return Json{{"params", to_json(batch.params)},
                {"x0", to_json(batch.x0)},
                {"i0", batch.i0 + 1},
                {"n_paths", batch.n_paths},
                {"times", batch.times},
                {"mean", mean},
                {"second_moment", second},
                {"mean_sq_norm", to_json(batch.mean_sq_norm())}};
}

Json to_json(const GridHistogram& h) {
    return Json{{"lo", to_json(h.box.lo)},
                {"hi", to_json(h.box.hi)},
                {"bins", h.bins},
                {"outside", h.outside},
                {"total_inside", h.total()}};
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t";
    for (int k = 0; k < traj.dim; ++k) os << ",x_" << k + 1;
    os << ",regime\n";
    for (std::size_t r = 0; r < traj.size(); ++r) {
        os << format_number(traj.times[r]);
        const auto x = traj.state(r);
        for (int k = 0; k < traj.dim; ++k) os << ',' << format_number(x(k));
        os << ',' << traj.regimes[r] + 1 << '\n';
    }
}

void write_measure_csv(std::ostream& os, const Measure& mu) {
    for (Index k = 0; k < mu.dim(); ++k) os << "x_" << k + 1 << ',';
    os << "weight\n";
    for (Index j = 0; j < mu.size(); ++j) {
        for (Index k = 0; k < mu.dim(); ++k) os << format_number(mu.points()(k, j)) << ',';
        os << format_number(mu.weights()(j)) << '\n';
    }
}

void write_histogram_csv(std::ostream& os, const GridHistogram& h) {
    const auto d = static_cast<std::size_t>(h.box.dim());
    for (std::size_t k = 0; k < d; ++k) os << "c_" << k + 1 << ',';
    os << "mass\n";
    std::vector<int> cell(d, 0);
    for (std::size_t flat = 0; flat < h.masses.size(); ++flat) {
        std::size_t rest = flat;
        for (std::size_t k = d; k-- > 0;) {
            cell[k] = static_cast<int>(rest % static_cast<std::size_t>(h.bins[k]));
            rest /= static_cast<std::size_t>(h.bins[k]);
        }
        for (std::size_t k = 0; k < d; ++k) {
            const auto a = static_cast<Index>(k);
            const double width = (h.box.hi(a) - h.box.lo(a)) / h.bins[k];
            os << format_number(h.box.lo(a) + (cell[k] + 0.5) * width) << ',';
        }
        os << format_number(h.masses[flat]) << '\n';
    }
}

void write_orbit_csv(std::ostream& os, const LimitCycle& cycle) {
    os << "t";
    for (Index k = 0; k < cycle.orbit.rows(); ++k) os << ",x_" << k + 1;
    os << '\n';
    const double dt = cycle.period / static_cast<double>(cycle.orbit.cols());
    for (Index j = 0; j < cycle.orbit.cols(); ++j) {
        os << format_number(static_cast<double>(j) * dt);
        for (Index k = 0; k < cycle.orbit.rows(); ++k) os << ',' << format_number(cycle.orbit(k, j));
        os << '\n';
    }
}

void write_ode_csv(std::ostream& os, const OdePath& path) {
    os << "t";
    for (Index k = 0; k < path.states.rows(); ++k) os << ",x_" << k + 1;
    os << '\n';
    for (std::size_t j = 0; j < path.times.size(); ++j) {
        os << format_number(path.times[j]);
        for (Index k = 0; k < path.states.rows(); ++k) os << ',' << format_number(path.states(k, static_cast<Index>(j)));
        os << '\n';
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw NumericError("write failed for " + path.string());
}

}  // namespace switchavg
