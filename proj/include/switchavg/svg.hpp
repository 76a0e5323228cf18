#pragma once

#include "switchavg/core.hpp"
#include "switchavg/measures.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace switchavg {

enum class PlotKind { time_series, phase_portrait, histogram_heatmap, convergence_curve };

std::string to_string(PlotKind kind);

struct PlotSeries {
    std::string name;
    std::string source;  // CSV the values came from
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    PlotKind kind = PlotKind::time_series;
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
    std::optional<GridHistogram> heatmap;  // histogram_heatmap only
    std::string description;               // goes into <desc>, e.g. a config echo
    std::size_t max_points = 4000;         // per series, after decimation
};

inline constexpr int kCanvasWidth = 800;
inline constexpr int kCanvasHeight = 600;

/// Self-contained SVG; byte-identical output for identical input.
std::string emit_svg(const PlotSpec& plot);

/// Keeps every k-th point plus the last so that at most max_points remain.
std::vector<std::size_t> decimate(std::size_t n, std::size_t max_points);

}  // namespace switchavg
