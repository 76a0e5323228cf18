#include "switchavg/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

int report_validation(const switchavg::ValidationError& e) {
    std::cerr << "validation failed:\n";
    if (const auto* ce = dynamic_cast<const switchavg::ConfigError*>(&e)) {
        for (const auto& p : ce->problems()) std::cerr << "  - " << p << "\n";
    } else {
        std::cerr << "  - " << e.what() << "\n";
    }
    return kExitValidation;
}

template <typename F>
int guarded(F&& body) {
    try {
        body();
        return 0;
    } catch (const switchavg::ValidationError& e) {
        return report_validation(e);
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"switchavg: fast-switching, slow-diffusion simulation and averaging toolkit"};
    app.set_version_flag("--version", std::string("switchavg ") + switchavg::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
    run->add_option("config", config_path, "Config file")->required();

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a config and print the resolved form");
    validate->add_option("config", validate_path, "Config file")->required();

    std::string out_dir = "paper_out";
    bool fast = false;
    auto* reproduce = app.add_subcommand("reproduce-paper", "Time series and phase portraits of the worked example");
    reproduce->add_option("--out", out_dir, "Output directory")->capture_default_str();
    reproduce->add_flag("--fast", fast, "Divide horizons and path counts by 10");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    std::cout << std::unitbuf;
    if (*run) {
        return guarded([&] {
            const auto config = switchavg::load_config(config_path);
            switchavg::run_experiment(config, std::cout);
        });
    }
    if (*validate) {
        return guarded([&] {
            const auto config = switchavg::load_config(validate_path);
            std::cout << "ok: " << switchavg::to_string(config.kind) << "\n" << config.to_json().dump(2) << "\n";
        });
    }
    return guarded([&] {
        const auto config = switchavg::reproduce_paper_config(out_dir, fast);
        switchavg::run_experiment(config, std::cout);
    });
}
