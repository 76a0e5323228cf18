#include "switchavg/config.hpp"

#include "switchavg/models.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace switchavg {

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += (out.empty() ? "" : "\n") + l;
    return out;
}

Json number_json(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

enum class Check { any, positive, nonnegative };

/// Reads fields of one JSON object, recording problems under a dotted path.
class Reader {
public:
    Reader(const Json& obj, std::string path, std::vector<std::string>& errors)
        : obj_(obj), path_(std::move(path)), errors_(errors) {
        if (!obj_.is_object()) {
            fail("", "expected an object");
            valid_ = false;
        }
    }

    bool has(const char* key) const { return valid_ && obj_.contains(key); }

    void number(const char* key, double& out, Check check = Check::any) {
        const Json* v = take(key);
        if (!v) return;
        double value = 0.0;
        if (v->is_number()) {
            value = v->get<double>();
        } else if (v->is_string() && (*v == "inf" || *v == "-inf")) {
            value = *v == "inf" ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        } else {
            fail(key, "expected a number");
            return;
        }
        if (check == Check::positive && !(value > 0.0)) return fail(key, "must be positive");
        if (check == Check::nonnegative && !(value >= 0.0)) return fail(key, "must be >= 0");
        out = value;
    }

    template <typename Int>
    void integer(const char* key, Int& out, long long min) {
        const Json* v = take(key);
        if (!v) return;
        if (!v->is_number_integer()) {
            fail(key, "expected an integer");
            return;
        }
        const auto value = v->get<long long>();
        if (value < min) {
            fail(key, "must be >= " + std::to_string(min));
            return;
        }
        out = static_cast<Int>(value);
    }

    void seed(const char* key, std::uint64_t& out) {
        const Json* v = take(key);
        if (!v) return;
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
            fail(key, "expected a nonnegative integer");
            return;
        }
        out = v->get<std::uint64_t>();
    }

    void boolean(const char* key, bool& out) {
        const Json* v = take(key);
        if (!v) return;
        if (!v->is_boolean()) {
            fail(key, "expected true or false");
            return;
        }
        out = v->get<bool>();
    }

    void string(const char* key, std::string& out) {
        const Json* v = take(key);
        if (!v) return;
        if (!v->is_string()) {
            fail(key, "expected a string");
            return;
        }
        out = v->get<std::string>();
    }

    void vector(const char* key, Vector& out) {
        const Json* v = take(key);
        if (!v) return;
        if (!v->is_array() || v->empty()) {
            fail(key, "expected a nonempty list of numbers");
            return;
        }
        Vector x(static_cast<Index>(v->size()));
        for (std::size_t k = 0; k < v->size(); ++k) {
            if (!(*v)[k].is_number()) {
                fail(key, "entry " + std::to_string(k + 1) + " is not a number");
                return;
            }
            x(static_cast<Index>(k)) = (*v)[k].get<double>();
        }
        out = x;
    }

    void int_list(const char* key, std::vector<int>& out) {
        const Json* v = take(key);
        if (!v) return;
        if (!v->is_array() || v->empty()) {
            fail(key, "expected a nonempty list of integers");
            return;
        }
        std::vector<int> values;
        for (const auto& e : *v) {
            if (!e.is_number_integer() || e.get<long long>() < 1) {
                fail(key, "entries must be integers >= 1");
                return;
            }
            values.push_back(e.get<int>());
        }
        out = values;
    }

    const Json* raw(const char* key) { return take(key); }

    Reader child(const char* key) {
        const Json* v = take(key);
        return Reader(v ? *v : empty_, path_.empty() ? key : path_ + "." + key, errors_);
    }

    void fail(const std::string& key, const std::string& message) {
        const std::string where = key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
        errors_.push_back((where.empty() ? std::string("config") : where) + ": " + message);
    }

    /// Flags keys that were never read.
    void finish() {
        if (!valid_) return;
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) fail(it.key(), "unknown field");
        }
    }

private:
    const Json* take(const char* key) {
        if (!valid_) return nullptr;
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    static inline const Json empty_ = Json::object();
    const Json& obj_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::set<std::string> seen_;
    bool valid_ = true;
};

std::vector<double> to_list(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index r = 0; r < m.rows(); ++r) rows.push_back(to_list(m.row(r).transpose()));
    return rows;
}

Matrix parse_matrix(const Json& j, const std::string& what) {
    require(j.is_array() && !j.empty(), what + ": expected a nonempty list of rows");
    const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
    require(cols > 0, what + ": rows must be nonempty lists");
    Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        require(j[r].is_array() && j[r].size() == cols, what + ": row " + std::to_string(r + 1) + " has the wrong length");
        for (std::size_t c = 0; c < cols; ++c) {
            require(j[r][c].is_number(), what + ": row " + std::to_string(r + 1) + " has a non-numeric entry");
            m(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
        }
    }
    return m;
}

std::vector<double> parse_list(const Json& j, const std::string& what) {
    require(j.is_array() && !j.empty(), what + ": expected a nonempty list of numbers");
    std::vector<double> out;
    for (const auto& e : j) {
        require(e.is_number(), what + ": entries must be numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Generator parse_generator(const Json& model) {
    require(model.contains("generator"), "model: missing 'generator' (list of rows)");
    const Matrix q = parse_matrix(model.at("generator"), "model.generator");
    require(q.rows() == q.cols(), "model.generator: matrix must be square");
    try {
        return Generator(q);
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("model.generator: ") + e.what());
    }
}

void check_keys(const Json& model, std::initializer_list<const char*> allowed) {
    for (auto it = model.begin(); it != model.end(); ++it) {
        bool ok = it.key() == "preset";
        for (const char* a : allowed) ok = ok || it.key() == a;
        require(ok, "model: unknown field '" + it.key() + "' for preset '" + model.at("preset").get<std::string>() + "'");
    }
}

Json normalize_model(const Json& in) {
    Json model = in.is_string() ? Json{{"preset", in}} : in;
    require(model.is_object(), "model: expected a preset name or an object with 'preset'");
    require(model.contains("preset") && model.at("preset").is_string(), "model: missing 'preset' name");
    const std::string preset = model.at("preset");
    if (preset == "paper_example") {
        check_keys(model, {});
    } else if (preset == "holling") {
        check_keys(model, {"r", "K", "m", "a", "b", "d", "e", "f", "lambda", "rho", "generator"});
        const HollingParams def = paper_example_params();
        const std::pair<const char*, const std::vector<double>*> fields[] = {
            {"r", &def.r}, {"K", &def.K}, {"m", &def.m}, {"a", &def.a}, {"b", &def.b},
            {"d", &def.d}, {"e", &def.e}, {"f", &def.f}, {"lambda", &def.lambda}, {"rho", &def.rho}};
        for (const auto& [key, value] : fields) {
            if (!model.contains(key)) model[key] = *value;
        }
        if (!model.contains("generator")) model["generator"] = matrix_json(paper_example_generator().rates());
    } else if (preset == "predator_prey") {
        check_keys(model, {"a", "b", "c", "d", "f", "lambda", "rho", "response", "generator"});
    } else if (preset == "ornstein_uhlenbeck") {
        check_keys(model, {"theta", "sigma"});
        if (!model.contains("theta")) model["theta"] = 1.0;
        if (!model.contains("sigma")) model["sigma"] = 1.0;
    } else if (preset == "hopf") {
        check_keys(model, {});
    } else if (preset == "linear") {
        check_keys(model, {"A", "sigma", "generator"});
    } else {
        throw ValidationError("model: unknown preset '" + preset +
                              "' (paper_example, holling, predator_prey, ornstein_uhlenbeck, hopf, linear)");
    }
    return model;
}

FunctionalResponse parse_response(const Json& r, double& bound) {
    require(r.is_object() && r.contains("type") && r.at("type").is_string(),
            "model.response: expected an object with 'type'");
    const std::string type = r.at("type");
    if (type == "holling_type2") {
        auto m = parse_list(r.at("m"), "model.response.m");
        auto a = parse_list(r.at("a"), "model.response.a");
        auto b = parse_list(r.at("b"), "model.response.b");
        require(m.size() == a.size() && a.size() == b.size(), "model.response: m, a, b need equal lengths");
        bound = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            require(m[i] > 0.0 && a[i] > 0.0 && b[i] >= 0.0, "model.response: need m > 0, a > 0, b >= 0");
            bound = std::max(bound, m[i] / a[i]);
        }
        return holling_type2(std::move(m), std::move(a), std::move(b));
    }
    if (type == "beddington_deangelis") {
        require(r.contains("m1") && r.contains("m2") && r.contains("m3") && r.contains("m4"),
                "model.response: beddington_deangelis needs m1, m2, m3, m4");
        const double m1 = r.at("m1").get<double>();
        auto m2 = parse_list(r.at("m2"), "model.response.m2");
        bound = m1 / *std::min_element(m2.begin(), m2.end());
        return beddington_deangelis(m1, std::move(m2), r.at("m3").get<double>(), r.at("m4").get<double>());
    }
    throw ValidationError("model.response: unknown type '" + type + "' (holling_type2, beddington_deangelis)");
}

bool default_log_scheme(const HybridModel& m) { return m.positive_domain && m.all_linear_noise(); }

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : ValidationError(join_lines(problems)), problems_(std::move(problems)) {}

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::simulate: return "simulate";
        case ExperimentKind::average: return "average";
        case ExperimentKind::cycle: return "cycle";
        case ExperimentKind::measure: return "measure";
        case ExperimentKind::closeness: return "closeness";
        case ExperimentKind::exit: return "exit";
        case ExperimentKind::sweep: return "sweep";
        case ExperimentKind::audit: return "audit";
        case ExperimentKind::reproduce_paper: return "reproduce-paper";
    }
    return "unknown";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
    for (auto k : {ExperimentKind::simulate, ExperimentKind::average, ExperimentKind::cycle, ExperimentKind::measure,
                   ExperimentKind::closeness, ExperimentKind::exit, ExperimentKind::sweep, ExperimentKind::audit,
                   ExperimentKind::reproduce_paper}) {
        if (name == to_string(k)) return k;
    }
    throw ValidationError("unknown experiment kind '" + std::string(name) +
                          "' (simulate, average, cycle, measure, closeness, exit, sweep, audit, reproduce-paper)");
}

HybridModel build_model(const Json& in) {
    const Json model = normalize_model(in);
    const std::string preset = model.at("preset");
    if (preset == "paper_example") return paper_example_model();
    if (preset == "holling") {
        HollingParams p;
        p.r = parse_list(model.at("r"), "model.r");
        p.K = parse_list(model.at("K"), "model.K");
        p.m = parse_list(model.at("m"), "model.m");
        p.a = parse_list(model.at("a"), "model.a");
        p.b = parse_list(model.at("b"), "model.b");
        p.d = parse_list(model.at("d"), "model.d");
        p.e = parse_list(model.at("e"), "model.e");
        p.f = parse_list(model.at("f"), "model.f");
        p.lambda = parse_list(model.at("lambda"), "model.lambda");
        p.rho = parse_list(model.at("rho"), "model.rho");
        HybridModel m = predator_prey_model(p.general(), parse_generator(model));
        m.name = "holling";
        return m;
    }
    if (preset == "predator_prey") {
        PredatorPreyParams p;
        for (const char* key : {"a", "b", "c", "d", "f", "lambda", "rho", "response"}) {
            require(model.contains(key), std::string("model: predator_prey needs '") + key + "'");
        }
        p.a = parse_list(model.at("a"), "model.a");
        p.b = parse_list(model.at("b"), "model.b");
        p.c = parse_list(model.at("c"), "model.c");
        p.d = parse_list(model.at("d"), "model.d");
        p.f = parse_list(model.at("f"), "model.f");
        p.lambda = parse_list(model.at("lambda"), "model.lambda");
        p.rho = parse_list(model.at("rho"), "model.rho");
        p.h = parse_response(model.at("response"), p.h_bound);
        return predator_prey_model(p, parse_generator(model));
    }
    if (preset == "ornstein_uhlenbeck") {
        require(model.at("theta").is_number() && model.at("sigma").is_number(), "model: theta and sigma must be numbers");
        return ornstein_uhlenbeck_model(model.at("theta").get<double>(), model.at("sigma").get<double>());
    }
    if (preset == "hopf") return hopf_normal_form_model();
    // linear
    require(model.contains("A") && model.at("A").is_array(), "model: linear needs 'A' (one matrix per regime)");
    require(model.contains("sigma") && model.at("sigma").is_array(), "model: linear needs 'sigma' (one matrix per regime)");
    std::vector<Matrix> a, s;
    for (const auto& m : model.at("A")) a.push_back(parse_matrix(m, "model.A"));
    for (const auto& m : model.at("sigma")) s.push_back(parse_matrix(m, "model.sigma"));
    return linear_switching_model(std::move(a), std::move(s), parse_generator(model));
}

Json ExperimentConfig::to_json() const {
    Json pairs = Json::array();
    for (const auto& p : regimes.pairs) pairs.push_back(Json{{"eps", p.eps}, {"delta", p.delta}});
    Json regimes_json{{"pairs", pairs}};
    if (regimes.tag) regimes_json["case"] = to_string(*regimes.tag);

    Json exit_json{{"theta1", exit.theta1},
                   {"theta3", exit.theta3},
                   {"H", exit.horizon},
                   {"n_paths", exit.n_paths},
                   {"R", exit.radius},
                   {"Delta", exit.Delta},
                   {"step", exit.step},
                   {"continuation_steps", exit.continuation_steps},
                   {"enforce_assumption", exit.enforce_assumption}};
    if (exit.equilibrium.size() > 0) exit_json["equilibrium"] = to_list(exit.equilibrium);

    return Json{{"kind", to_string(kind)},
                {"model", model},
                {"simulation",
                 Json{{"eps", sim.eps},
                      {"delta", sim.delta},
                      {"step", sim.step},
                      {"horizon", sim.horizon},
                      {"seed", sim.seed},
                      {"scheme", to_string(sim.scheme)},
                      {"burn_in", sim.burn_in},
                      {"guard_radius", sim.guard_radius},
                      {"record_stride", sim.record_stride},
                      {"record_switches", sim.record_switches}}},
                {"x0", to_list(x0)},
                {"regime", i0 + 1},
                {"n_paths", n_paths},
                {"regimes", regimes_json},
                {"output", output},
                {"plots", plots},
                {"box", Json{{"lo", to_list(box.lo)}, {"hi", to_list(box.hi)}}},
                {"grid", grid},
                {"cycle",
                 Json{{"seed_point", to_list(cycle_seed)},
                      {"burn_in", cycle.burn_in},
                      {"step", cycle.step},
                      {"max_crossings", cycle.max_crossings},
                      {"closure_tol", cycle.closure_tol},
                      {"samples", cycle.samples},
                      {"max_gap_time", cycle.max_gap_time}}},
                {"measure",
                 Json{{"burn_fraction", measure.burn_fraction},
                      {"sample_spacing", measure.sample_spacing},
                      {"bins", measure.bins},
                      {"n_proj", measure.n_proj}}},
                {"closeness",
                 Json{{"gamma", number_json(closeness.gamma)},
                      {"horizon", closeness.horizon},
                      {"n_paths", closeness.n_paths},
                      {"step", closeness.step}}},
                {"exit", exit_json},
                {"sweep",
                 Json{{"horizon", sweep.horizon},
                      {"burn_fraction", sweep.burn_fraction},
                      {"n_seeds", sweep.n_seeds},
                      {"step", sweep.step},
                      {"n_proj", sweep.n_proj},
                      {"atoms", sweep.atoms},
                      {"sample_spacing", sweep.sample_spacing},
                      {"energy_atoms", sweep.energy_atoms}}},
                {"audit",
                 Json{{"lipschitz_pairs", audit.lipschitz_pairs},
                      {"lipschitz_radius", audit.lipschitz_radius},
                      {"witness_tol", audit.witness_tol}}},
                {"fast", fast}};
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
    std::vector<std::string> errors;
    ExperimentConfig c;
    Reader root(j, "", errors);

    std::string kind = to_string(c.kind);
    root.string("kind", kind);
    try {
        c.kind = experiment_kind_from_string(kind);
    } catch (const ValidationError& e) {
        root.fail("kind", e.what());
    }

    std::optional<HybridModel> model;
    if (const Json* m = root.raw("model")) {
        try {
            c.model = normalize_model(*m);
        } catch (const ValidationError& e) {
            errors.push_back(e.what());
        }
    }
    try {
        model = build_model(c.model);
    } catch (const ValidationError& e) {
        errors.push_back(e.what());
    }

    const bool positive = model && model->positive_domain;
    const int dim = model ? model->dim : 2;
    c.box.lo = Vector::Constant(dim, positive ? 0.0 : -2.0);
    c.box.hi = Vector::Constant(dim, positive ? 6.0 : 2.0);
    c.x0 = Vector::Ones(dim);
    c.sim.record_stride = 100;
    c.sim.scheme = model && default_log_scheme(*model) ? Scheme::log_euler : Scheme::euler_maruyama;

    {
        Reader s = root.child("simulation");
        s.number("eps", c.sim.eps, Check::positive);
        s.number("delta", c.sim.delta, Check::nonnegative);
        s.number("step", c.sim.step, Check::positive);
        s.number("horizon", c.sim.horizon, Check::positive);
        s.seed("seed", c.sim.seed);
        std::string scheme = to_string(c.sim.scheme);
        s.string("scheme", scheme);
        try {
            c.sim.scheme = scheme_from_string(scheme);
        } catch (const ValidationError& e) {
            s.fail("scheme", e.what());
        }
        s.number("burn_in", c.sim.burn_in, Check::nonnegative);
        s.number("guard_radius", c.sim.guard_radius, Check::positive);
        s.integer("record_stride", c.sim.record_stride, 1);
        s.boolean("record_switches", c.sim.record_switches);
        s.finish();
    }
    root.vector("x0", c.x0);
    int regime = 1;
    root.integer("regime", regime, 1);
    c.i0 = regime - 1;
    root.integer("n_paths", c.n_paths, 1);
    {
        Reader r = root.child("regimes");
        if (const Json* pairs = r.raw("pairs")) {
            if (!pairs->is_array()) {
                r.fail("pairs", "expected a list of {eps, delta} objects or [eps, delta] pairs");
            } else {
                for (std::size_t k = 0; k < pairs->size(); ++k) {
                    const Json& p = (*pairs)[k];
                    NoisePair np;
                    if (p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number()) {
                        np = {p[0].get<double>(), p[1].get<double>()};
                    } else if (p.is_object()) {
                        Reader pr(p, "regimes.pairs[" + std::to_string(k + 1) + "]", errors);
                        pr.number("eps", np.eps, Check::positive);
                        pr.number("delta", np.delta, Check::nonnegative);
                        pr.finish();
                    } else {
                        r.fail("pairs", "entry " + std::to_string(k + 1) + " is not an {eps, delta} pair");
                    }
                    c.regimes.pairs.push_back(np);
                }
            }
        }
        if (r.has("case")) {
            std::string tag;
            r.string("case", tag);
            try {
                c.regimes.tag = regime_case_from_string(tag);
            } catch (const ValidationError& e) {
                r.fail("case", e.what());
            }
        }
        r.finish();
    }
    root.string("output", c.output);
    root.boolean("plots", c.plots);
    {
        Reader b = root.child("box");
        b.vector("lo", c.box.lo);
        b.vector("hi", c.box.hi);
        b.finish();
    }
    root.integer("grid", c.grid, 2);
    c.cycle_seed = c.x0;
    {
        Reader r = root.child("cycle");
        r.vector("seed_point", c.cycle_seed);
        r.number("burn_in", c.cycle.burn_in, Check::nonnegative);
        r.number("step", c.cycle.step, Check::positive);
        r.integer("max_crossings", c.cycle.max_crossings, 2);
        r.number("closure_tol", c.cycle.closure_tol, Check::positive);
        r.integer("samples", c.cycle.samples, 8);
        r.number("max_gap_time", c.cycle.max_gap_time, Check::positive);
        r.finish();
    }
    {
        Reader r = root.child("measure");
        r.number("burn_fraction", c.measure.burn_fraction, Check::nonnegative);
        r.number("sample_spacing", c.measure.sample_spacing, Check::positive);
        r.int_list("bins", c.measure.bins);
        r.integer("n_proj", c.measure.n_proj, 1);
        r.finish();
    }
    {
        Reader r = root.child("closeness");
        r.number("gamma", c.closeness.gamma, Check::nonnegative);
        r.number("horizon", c.closeness.horizon, Check::positive);
        r.integer("n_paths", c.closeness.n_paths, 1);
        r.number("step", c.closeness.step, Check::positive);
        r.finish();
    }
    {
        Reader r = root.child("exit");
        r.vector("equilibrium", c.exit.equilibrium);
        r.number("theta1", c.exit.theta1, Check::positive);
        r.number("theta3", c.exit.theta3, Check::positive);
        r.number("H", c.exit.horizon, Check::positive);
        r.integer("n_paths", c.exit.n_paths, 1);
        r.number("R", c.exit.radius, Check::positive);
        r.number("Delta", c.exit.Delta, Check::positive);
        r.number("step", c.exit.step, Check::positive);
        r.integer("continuation_steps", c.exit.continuation_steps, 0);
        r.boolean("enforce_assumption", c.exit.enforce_assumption);
        r.finish();
    }
    {
        Reader r = root.child("sweep");
        r.number("horizon", c.sweep.horizon, Check::positive);
        r.number("burn_fraction", c.sweep.burn_fraction, Check::nonnegative);
        r.integer("n_seeds", c.sweep.n_seeds, 2);
        r.number("step", c.sweep.step, Check::positive);
        r.integer("n_proj", c.sweep.n_proj, 1);
        r.integer("atoms", c.sweep.atoms, 8);
        r.number("sample_spacing", c.sweep.sample_spacing, Check::positive);
        r.integer("energy_atoms", c.sweep.energy_atoms, 2);
        r.finish();
    }
    {
        Reader r = root.child("audit");
        r.integer("lipschitz_pairs", c.audit.lipschitz_pairs, 1);
        r.number("lipschitz_radius", c.audit.lipschitz_radius, Check::positive);
        r.number("witness_tol", c.audit.witness_tol, Check::positive);
        r.finish();
    }
    root.boolean("fast", c.fast);
    root.finish();

    c.cycle.samples = std::max(c.cycle.samples, 8);
    c.closeness.seed = c.exit.seed = c.sweep.seed = c.audit.seed = c.sim.seed;
    c.closeness.scheme = c.exit.scheme = c.sweep.scheme = c.sim.scheme;
    c.closeness.guard_radius = c.exit.guard_radius = c.sweep.guard_radius = c.sim.guard_radius;
    c.exit.i0 = c.i0;
    c.audit.grid = c.grid;

    // rejected fields keep their defaults, so the cross-field pass still runs
    if (model) {
        try {
            c.validate();
        } catch (const ConfigError& e) {
            for (const auto& p : e.problems()) {
                if (std::find(errors.begin(), errors.end(), p) == errors.end()) errors.push_back(p);
            }
        }
    }
    if (!errors.empty()) throw ConfigError(errors);
    return c;
}

void ExperimentConfig::validate() const {
    std::vector<std::string> errors;
    auto check = [&](const std::string& where, auto&& fn) {
        try {
            fn();
        } catch (const ValidationError& e) {
            errors.push_back(where + ": " + e.what());
        }
    };
    std::optional<HybridModel> m;
    check("model", [&] { m = build_model(model); });
    check("simulation", [&] { sim.validate(); });
    if (m) {
        check("x0", [&] {
            require(x0.size() == m->dim, "expected " + std::to_string(m->dim) + " entries");
            require(x0.allFinite(), "entries must be finite");
            if (m->positive_domain || sim.scheme == Scheme::log_euler) {
                require((x0.array() > 0.0).all(), "entries must be strictly positive for this model/scheme");
            }
        });
        check("regime", [&] {
            require(i0 >= 0 && i0 < m->regimes(), "must be between 1 and " + std::to_string(m->regimes()));
        });
        check("simulation.scheme", [&] {
            require(sim.scheme != Scheme::log_euler || m->all_linear_noise(),
                    "log_euler needs a model whose noise is linear in every coordinate");
        });
        check("box", [&] {
            require(box.lo.size() == m->dim && box.hi.size() == m->dim, "lo and hi need one entry per dimension");
            require((box.hi.array() > box.lo.array()).all(), "hi must exceed lo on every axis");
        });
        if (x0.size() == m->dim || cycle_seed.size() != x0.size()) {
            check("cycle.seed_point", [&] { require(cycle_seed.size() == m->dim, "dimension mismatch"); });
        }
        if (kind == ExperimentKind::measure) {
            check("measure.bins", [&] {
                require(static_cast<int>(measure.bins.size()) == m->dim, "one bin count per dimension");
            });
        }
        if (kind == ExperimentKind::reproduce_paper) {
            check("model", [&] { require(m->dim == 2, "reproduce-paper needs a planar model"); });
        }
        if (kind == ExperimentKind::exit) {
            check("exit.equilibrium", [&] { require(exit.equilibrium.size() == m->dim, "required, one entry per dimension"); });
        }
    }
    check("measure", [&] {
        require(measure.burn_fraction < 1.0, "burn_fraction must be < 1");
        require(measure.sample_spacing >= sim.step, "sample_spacing must be >= simulation.step");
    });
    const bool needs_regimes = kind == ExperimentKind::closeness || kind == ExperimentKind::exit ||
                               kind == ExperimentKind::sweep || kind == ExperimentKind::reproduce_paper;
    if (needs_regimes) {
        check("regimes", [&] {
            require(!regimes.pairs.empty(), "this experiment needs at least one (eps, delta) pair");
            regimes.validate();
        });
    } else if (!regimes.pairs.empty()) {
        check("regimes", [&] { regimes.validate(); });
    }
    if (kind == ExperimentKind::closeness) check("closeness", [&] { closeness.validate(); });
    if (kind == ExperimentKind::exit && exit.equilibrium.size() > 0) check("exit", [&] { exit.validate(); });
    if (kind == ExperimentKind::sweep) check("sweep", [&] { sweep.validate(); });
    if (!errors.empty()) throw ConfigError(errors);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file " + path.string());
    Json j;
    try {
        j = Json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return ExperimentConfig::from_json(j);
}

ExperimentConfig reproduce_paper_config(const std::string& output, bool fast) {
    Json j{{"kind", "reproduce-paper"},
           {"model", "paper_example"},
           {"simulation", Json{{"step", 1e-4}, {"horizon", 200.0}, {"seed", 1}, {"record_stride", 100}, {"record_switches", false}}},
           {"x0", {1.0, 1.0}},
           {"regime", 1},
           {"regimes", Json{{"pairs", Json::array({Json{{"eps", 1e-3}, {"delta", 1e-3}}, Json{{"eps", 5e-5}, {"delta", 5e-5}}})}}},
           {"output", output},
           {"fast", fast}};
    return ExperimentConfig::from_json(j);
}

}  // namespace switchavg
