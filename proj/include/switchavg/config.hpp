#pragma once

#include "switchavg/averaged.hpp"
#include "switchavg/experiments.hpp"
#include "switchavg/hybrid_sde.hpp"
#include "switchavg/io.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace switchavg {

enum class ExperimentKind { simulate, average, cycle, measure, closeness, exit, sweep, audit, reproduce_paper };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

/// Thrown with every problem found, one per line.
class ConfigError : public ValidationError {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Presets: paper_example, holling, predator_prey, ornstein_uhlenbeck, hopf, linear.
/// A bare string names a preset with default parameters.
HybridModel build_model(const Json& model);

struct MeasureSettings {
    double burn_fraction = 0.25;
    double sample_spacing = 1e-2;
    std::vector<int> bins = {60, 60};
    int n_proj = 256;
};

/// One experiment, fully resolved: defaults are filled in so the JSON echo is complete.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::simulate;
    Json model = Json{{"preset", "paper_example"}};
    SimParams sim;
    Vector x0;
    int i0 = 0;
    std::size_t n_paths = 1;
    RegimeSpec regimes;
    std::string output = "out";
    bool plots = true;
    Box box;
    int grid = 13;
    CycleOptions cycle;
    Vector cycle_seed;
    MeasureSettings measure;
    ClosenessSpec closeness;
    ExitSpec exit;
    SweepSpec sweep;
    AuditOptions audit;
    bool fast = false;

    Json to_json() const;
    /// Parses and validates; throws ConfigError listing every failing field.
    static ExperimentConfig from_json(const Json& j);
    /// Cross-field checks that need the model; throws ConfigError.
    void validate() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// Defaults used by `reproduce-paper`: paper_example from (1, 1) in regime 1, T = 200, h = 1e-4.
/// With `fast` set the runner divides horizons and path counts by 10.
ExperimentConfig reproduce_paper_config(const std::string& output, bool fast);

}  // namespace switchavg
