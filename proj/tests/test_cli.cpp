#include "switchavg/config.hpp"
#include "switchavg/runner.hpp"
#include "switchavg/svg.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>

using namespace switchavg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("switchavg_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

ExperimentConfig parse(const std::string& text) { return ExperimentConfig::from_json(Json::parse(text)); }

std::vector<std::pair<double, double>> polyline_points(const std::string& svg) {
    std::vector<std::pair<double, double>> pts;
    const std::regex poly("<polyline[^>]*points=\"([^\"]*)\"");
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), poly); it != std::sregex_iterator(); ++it) {
        std::istringstream in((*it)[1].str());
        std::string tok;
        while (in >> tok) {
            const auto comma = tok.find(',');
            pts.emplace_back(std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1)));
        }
    }
    return pts;
}

int run_cli(const std::string& args) {
    const char* cli = std::getenv("SWITCHAVG_CLI");
    REQUIRE_MESSAGE(cli != nullptr, "SWITCHAVG_CLI is not set");
    const int status = std::system(("\"" + std::string(cli) + "\" " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config round trip") {
    const char* texts[] = {
        R"({"kind": "simulate"})",
        R"({"kind": "closeness", "regimes": {"pairs": [[0.01, 0.01], [0.001, 0.001]], "case": "case1"},
            "closeness": {"gamma": "inf", "n_paths": 10}})",
        R"({"kind": "exit", "exit": {"equilibrium": [1.836, 1.795], "theta1": 0.02},
            "regimes": {"pairs": [{"eps": 0.01, "delta": 0.001}], "case": "case2"}})",
        R"({"kind": "measure", "model": {"preset": "hopf"}, "x0": [0.5, 0.0]})",
        R"({"kind": "simulate", "model": {"preset": "ornstein_uhlenbeck", "theta": 2.0}, "x0": [0.3]})",
        R"({"kind": "average", "model": {"preset": "predator_prey", "a": [1.0], "b": [0.2], "c": [0.5], "d": [0.1],
            "f": [1.0], "lambda": [1.0], "rho": [1.0], "generator": [[0.0]],
            "response": {"type": "holling_type2", "m": [1.0], "a": [1.0], "b": [1.0]}}})",
    };
    for (const char* text : texts) {
        const ExperimentConfig c = parse(text);
        const Json once = c.to_json();
        CHECK(ExperimentConfig::from_json(once).to_json() == once);
    }
    const ExperimentConfig c = parse(texts[1]);
    CHECK(std::isinf(c.closeness.gamma));
    CHECK(c.to_json()["closeness"]["gamma"] == "inf");
    CHECK(c.regimes.tag == RegimeCase::case1);
}

TEST_CASE("defaults follow the model") {
    const ExperimentConfig pp = parse(R"({"kind": "simulate"})");
    CHECK(pp.sim.scheme == Scheme::log_euler);
    CHECK(pp.box.lo == Vector::Zero(2));
    CHECK(pp.i0 == 0);
    const ExperimentConfig ou = parse(R"({"kind": "simulate", "model": "ornstein_uhlenbeck", "x0": [-1.0]})");
    CHECK(ou.sim.scheme == Scheme::euler_maruyama);
    CHECK(ou.box.lo(0) == -2.0);

    const ExperimentConfig rp = reproduce_paper_config("out", true);
    CHECK(rp.sim.step == 1e-4);
    CHECK(rp.sim.horizon == 200.0);
    CHECK(rp.sim.seed == 1);
    CHECK(rp.x0 == Vector::Ones(2));
    CHECK(rp.regimes.pairs.size() == 2);
}

TEST_CASE("every problem is reported at once") {
    const char* text = R"({"kind": "simulate", "simulation": {"step": -1, "bogus": 3}, "x0": [1, 2, 3], "colour": "red",
                           "regime": 0})";
    try {
        parse(text);
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        const auto& p = e.problems();
        auto has = [&](const std::string& s) {
            return std::any_of(p.begin(), p.end(), [&](const std::string& m) { return m.find(s) != std::string::npos; });
        };
        CHECK(has("simulation.step"));
        CHECK(has("simulation.bogus: unknown field"));
        CHECK(has("colour: unknown field"));
        CHECK(has("x0"));
        CHECK(has("regime"));
        CHECK(p.size() == 5);
    }
    CHECK_THROWS_AS(parse(R"({"kind": "nonsense"})"), ConfigError);
    CHECK_THROWS_AS(parse(R"({"kind": "closeness"})"), ConfigError);  // no regimes
    CHECK_THROWS_AS(parse(R"({"kind": "simulate", "model": {"preset": "hopf", "mu": 1}})"), ConfigError);
    CHECK_THROWS_AS(parse(R"({"kind": "simulate", "model": "hopf", "simulation": {"scheme": "log_euler"}})"), ConfigError);
    CHECK_THROWS_AS(parse(R"({"kind": "simulate", "x0": [-1, 1]})"), ConfigError);
    CHECK_THROWS_AS(parse(R"({"kind": "exit", "regimes": {"pairs": [[0.01, 0.01]]}})"), ConfigError);
}

TEST_CASE("output paths stay inside the output root") {
    OutputDir out(scratch("paths"));
    CHECK_THROWS_AS(out.resolve("/etc/passwd"), ValidationError);
    CHECK_THROWS_AS(out.resolve("../escape.txt"), ValidationError);
    CHECK_THROWS_AS(out.resolve("a/../../b"), ValidationError);
    CHECK(out.resolve("a/b.csv") == out.root() / "a" / "b.csv");
    out.write("x.txt", "hello");
    CHECK(slurp(out.root() / "x.txt") == "hello");
    CHECK(out.written() == std::vector<std::string>{"x.txt"});
}

TEST_CASE("average run reports coefficients and the interior equilibrium") {
    ExperimentConfig c = parse(R"({"kind": "average"})");
    c.output = scratch("average").string();
    std::ostringstream log;
    const RunSummary s = run_experiment(c, log);
    CHECK(std::find(s.files.begin(), s.files.end(), "average.json") != s.files.end());
    const Json j = Json::parse(slurp(fs::path(c.output) / "average.json"));
    CHECK(j["toolkit"] == "switchavg");
    CHECK_FALSE(j["result"].contains("wall_seconds"));
    const Json& coef = j["result"]["coefficients"];
    CHECK(std::abs(coef["K"].get<double>() - 5.0) <= 1e-3);
    CHECK(std::abs(coef["em"].get<double>() - 1.6) <= 1e-3);
    bool found = false;
    for (const auto& e : j["result"]["equilibria"]) {
        const auto x = e["location"];
        if (std::abs(x[0].get<double>() - 1.836) <= 1e-3 && std::abs(x[1].get<double>() - 1.795) <= 1e-3) {
            found = true;
            CHECK(e["kind"] == "source");
        }
    }
    CHECK(found);
    CHECK(fs::exists(fs::path(c.output) / "config.json"));
}

TEST_CASE("deterministic simulation output is reproducible") {
    const char* text = R"({"kind": "simulate", "model": "ornstein_uhlenbeck", "x0": [1.0],
                           "simulation": {"delta": 0.0, "step": 0.01, "horizon": 2.0, "record_stride": 10}})";
    ExperimentConfig a = parse(text);
    ExperimentConfig b = a;
    a.output = scratch("sim_a").string();
    b.output = scratch("sim_b").string();
    std::ostringstream log;
    run_experiment(a, log);
    run_experiment(b, log);
    for (const char* f : {"trajectory.csv", "trajectory.svg", "phase.svg"}) {
        if (!fs::exists(fs::path(a.output) / f)) continue;
        std::string sa = slurp(fs::path(a.output) / f);
        std::string sb = slurp(fs::path(b.output) / f);
        // only the output directory differs in the echo
        sa = std::regex_replace(sa, std::regex("sim_a"), "sim_x");
        sb = std::regex_replace(sb, std::regex("sim_b"), "sim_x");
        CHECK_MESSAGE(sa == sb, f);
    }
    const std::string csv = slurp(fs::path(a.output) / "trajectory.csv");
    CHECK(csv.rfind("# switchavg ", 0) == 0);
    // final row sits at t = 2 close to exp(-2)
    std::istringstream in(csv);
    std::string line, last;
    while (std::getline(in, line)) {
        if (!line.empty()) last = line;
    }
    CHECK(last.rfind("2,", 0) == 0);
}

TEST_CASE("svg emission") {
    PlotSpec p;
    p.kind = PlotKind::time_series;
    p.title = "a < b & c";
    p.description = R"({"k":"v"})";
    p.series.push_back({"x", "t.csv", {0.0, 1.0, 2.0}, {1.0, 0.5, 0.25}});
    const std::string s1 = emit_svg(p);
    CHECK(s1 == emit_svg(p));
    CHECK(s1.find("<desc>{&quot;k&quot;:&quot;v&quot;}</desc>") != std::string::npos);
    CHECK(s1.find("a &lt; b &amp; c") != std::string::npos);
    CHECK(s1.find("data-kind=\"time_series\"") != std::string::npos);

    PlotSpec single = p;
    single.series = {{"pt", "p.csv", {3.0}, {4.0}}};
    const std::string s2 = emit_svg(single);
    CHECK(s2.find("<circle") != std::string::npos);
    CHECK(s2.find("<polyline") == std::string::npos);

    PlotSpec empty = p;
    empty.series = {{"none", "n.csv", {}, {}}};
    CHECK_THROWS_AS(emit_svg(empty), ValidationError);

    CHECK(decimate(10, 4).back() == 9);
    CHECK(decimate(10, 4).size() <= 5);
    CHECK(decimate(3, 100).size() == 3);
}

TEST_CASE("phase portrait of the unit circle fills the padded frame") {
    PlotSpec p;
    p.kind = PlotKind::phase_portrait;
    PlotSeries ring{"cycle", "c.csv", {}, {}};
    for (int k = 0; k <= 720; ++k) {
        const double t = 2.0 * std::numbers::pi * k / 720.0;
        ring.x.push_back(std::cos(t));
        ring.y.push_back(std::sin(t));
    }
    p.series.push_back(ring);
    const auto pts = polyline_points(emit_svg(p));
    REQUIRE(pts.size() == 721);
    double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
    for (const auto& [x, y] : pts) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    // frame 80..776 x 48..536, data [-1, 1] padded by 5% of the span on each side
    const double w = kCanvasWidth - 80.0 - 24.0, h = kCanvasHeight - 48.0 - 64.0;
    CHECK(std::abs(xmin - (80.0 + w * 0.1 / 2.2)) <= 0.02);
    CHECK(std::abs(xmax - (80.0 + w * 2.1 / 2.2)) <= 0.02);
    CHECK(std::abs(ymin - (48.0 + h * 0.1 / 2.2)) <= 0.02);
    CHECK(std::abs(ymax - (48.0 + h * 2.1 / 2.2)) <= 0.02);
}

TEST_CASE("convergence curve is drawn left to right") {
    PlotSpec p;
    p.kind = PlotKind::convergence_curve;
    p.series.push_back({"sliced W1", "sweep.csv", {-1.0, -2.0, -3.0}, {0.3, 0.1, 0.05}});
    const std::string svg = emit_svg(p);
    const auto pts = polyline_points(svg);
    REQUIRE(pts.size() == 3);
    // smaller eps + delta sits further left and lower on the plot
    CHECK(pts[0].first > pts[1].first);
    CHECK(pts[1].first > pts[2].first);
    CHECK(pts[0].second < pts[1].second);
    CHECK(pts[1].second < pts[2].second);
    std::size_t circles = 0;
    for (std::size_t at = svg.find("<circle"); at != std::string::npos; at = svg.find("<circle", at + 1)) ++circles;
    CHECK(circles == 3);
}

TEST_CASE("command-line exit codes") {
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    const fs::path good = dir / "good.json";
    const fs::path bad = dir / "bad.json";
    const fs::path boom = dir / "boom.json";
    const fs::path out = dir / "never";
    spit(good, R"({"kind": "average", "output": ")" + (dir / "avg").string() + "\"}");
    spit(bad, R"({"kind": "simulate", "simulation": {"step": 0}, "output": ")" + out.string() + "\"}");
    spit(boom, R"({"kind": "simulate", "model": {"preset": "linear", "A": [[[5.0]]], "sigma": [[[0.0]]],
                  "generator": [[0.0]]}, "x0": [1.0], "simulation": {"delta": 0.0, "step": 0.001, "horizon": 10.0,
                  "guard_radius": 100.0}, "output": ")" + (dir / "boom").string() + "\"}");

    CHECK(run_cli("validate \"" + good.string() + "\"") == 0);
    CHECK(run_cli("validate \"" + bad.string() + "\"") == 2);
    CHECK(run_cli("run \"" + bad.string() + "\"") == 2);
    CHECK_FALSE(fs::exists(out));
    CHECK(run_cli("run \"" + (dir / "missing.json").string() + "\"") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("run \"" + boom.string() + "\"") == 3);
    CHECK(run_cli("--version") == 0);
}
