#pragma once

#include "switchavg/config.hpp"
#include "switchavg/svg.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace switchavg {

/// Output root; every file name is resolved under it and may not escape it.
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    /// Rejects absolute names and any ".." component.
    std::filesystem::path resolve(const std::string& name) const;
    void write(const std::string& name, const std::string& text);
    const std::vector<std::string>& written() const { return written_; }

private:
    std::filesystem::path root_;
    std::vector<std::string> written_;
};

/// Compact JSON of the resolved config, as embedded in every output.
std::string config_echo(const ExperimentConfig& config);

/// {"toolkit", "version", "config", "result"}; timing fields are dropped from the result.
Json wrap_result(const ExperimentConfig& config, Json result);

/// Leading "# switchavg <version> config=<json>" line followed by the CSV body.
std::string with_csv_header(const ExperimentConfig& config, const std::string& body);

struct RunSummary {
    std::vector<std::string> files;
    std::vector<std::string> notes;
};

/// Runs a validated config, writing into config.output. Progress lines go to `log`.
RunSummary run_experiment(const ExperimentConfig& config, std::ostream& log);

}  // namespace switchavg
