#pragma once

#include "switchavg/averaged.hpp"
#include "switchavg/core.hpp"
#include "switchavg/hybrid_sde.hpp"
#include "switchavg/measures.hpp"
#include "switchavg/stats.hpp"

#include <json.hpp>

#include <filesystem>
#include <ostream>
#include <string>

namespace switchavg {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal ("%.17g" trimmed), stable across runs.
std::string format_number(double v);

Json to_json(const Vector& v);
/// One inner array per column (point).
Json points_to_json(const Matrix& m);
Json to_json(const Interval& i);
Json to_json(const ProportionEstimate& e);
Json to_json(const SampleSummary& s);
Json to_json(const SimParams& p);
Json to_json(const Equilibrium& eq);
Json to_json(const LimitCycle& cycle, bool with_orbit = true);
Json to_json(const BatchSummary& batch);
Json to_json(const GridHistogram& h);

/// t, x_1..x_d, regime
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
/// x_1..x_d, weight
void write_measure_csv(std::ostream& os, const Measure& mu);
/// One row per cell: cell centre coordinates then mass.
void write_histogram_csv(std::ostream& os, const GridHistogram& h);
/// t, x_1..x_d for one period of the orbit.
void write_orbit_csv(std::ostream& os, const LimitCycle& cycle);
/// t, x_1..x_d
void write_ode_csv(std::ostream& os, const OdePath& path);

/// Writes text to a file, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace switchavg
