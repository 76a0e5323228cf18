#include "switchavg/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace switchavg {

namespace {

constexpr double kLeft = 80.0;
constexpr double kRight = 24.0;
constexpr double kTop = 48.0;
constexpr double kBottom = 64.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    // 5% margin on both sides; a flat range is widened around its value.
    void pad() {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        double span = hi - lo;
        if (span <= 0.0) {
            span = std::max(std::abs(lo), 1.0);
            lo -= 0.5 * span;
            hi += 0.5 * span;
            span = hi - lo;
        }
        lo -= 0.05 * span;
        hi += 0.05 * span;
    }
};

}  // namespace

std::string to_string(PlotKind kind) {
    switch (kind) {
        case PlotKind::time_series: return "time_series";
        case PlotKind::phase_portrait: return "phase_portrait";
        case PlotKind::histogram_heatmap: return "histogram_heatmap";
        case PlotKind::convergence_curve: return "convergence_curve";
    }
    return "unknown";
}

std::vector<std::size_t> decimate(std::size_t n, std::size_t max_points) {
    std::vector<std::size_t> idx;
    if (n == 0) return idx;
    const std::size_t stride = max_points < 2 ? n : std::max<std::size_t>(1, (n + max_points - 2) / (max_points - 1));
    for (std::size_t k = 0; k < n; k += stride) idx.push_back(k);
    if (idx.back() != n - 1) idx.push_back(n - 1);
    return idx;
}

std::string emit_svg(const PlotSpec& plot) {
    const bool heat = plot.kind == PlotKind::histogram_heatmap;
    if (heat) {
        require(plot.heatmap.has_value() && plot.heatmap->box.dim() == 2, "plot: heatmap needs a planar histogram");
    } else {
        require(!plot.series.empty(), "plot: no series");
        for (const auto& s : plot.series) {
            require(!s.x.empty() && s.x.size() == s.y.size(), "plot: empty or ragged series '" + s.name + "'");
        }
    }

    Range rx, ry;
    if (heat) {
        rx.add(plot.heatmap->box.lo(0));
        rx.add(plot.heatmap->box.hi(0));
        ry.add(plot.heatmap->box.lo(1));
        ry.add(plot.heatmap->box.hi(1));
    }
    for (const auto& s : plot.series) {
        for (double v : s.x) rx.add(v);
        for (double v : s.y) ry.add(v);
    }
    rx.pad();
    ry.pad();
    const double w = kCanvasWidth - kLeft - kRight;
    const double h = kCanvasHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + (v - rx.lo) / (rx.hi - rx.lo) * w; };
    auto py = [&](double v) { return kTop + h - (v - ry.lo) / (ry.hi - ry.lo) * h; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCanvasWidth << "\" height=\"" << kCanvasHeight
       << "\" viewBox=\"0 0 " << kCanvasWidth << ' ' << kCanvasHeight << "\" data-kind=\"" << to_string(plot.kind)
       << "\">\n";
    os << "<title>" << escape(plot.title) << "</title>\n";
    os << "<desc>" << escape(plot.description) << "</desc>\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << kCanvasWidth << "\" height=\"" << kCanvasHeight << "\" fill=\"#ffffff\"/>\n";

    if (heat) {
        const auto& g = *plot.heatmap;
        const double peak = *std::max_element(g.masses.begin(), g.masses.end());
        const double cw = (g.box.hi(0) - g.box.lo(0)) / g.bins[0];
        const double ch = (g.box.hi(1) - g.box.lo(1)) / g.bins[1];
        os << "<g id=\"cells\">\n";
        for (int i = 0; i < g.bins[0]; ++i) {
            for (int j = 0; j < g.bins[1]; ++j) {
                const double m = g.mass({i, j});
                if (m <= 0.0 || peak <= 0.0) continue;
                const int shade = 255 - static_cast<int>(std::lround(225.0 * m / peak));
                const double x0 = px(g.box.lo(0) + i * cw);
                const double x1 = px(g.box.lo(0) + (i + 1) * cw);
                const double y0 = py(g.box.lo(1) + (j + 1) * ch);
                const double y1 = py(g.box.lo(1) + j * ch);
                os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(x1 - x0) << "\" height=\""
                   << num(y1 - y0) << "\" fill=\"rgb(" << shade << ',' << shade << ",255)\"/>\n";
            }
        }
        os << "</g>\n";
    }

    // axes and ticks
    os << "<g id=\"axes\" stroke=\"#000000\" stroke-width=\"1\" fill=\"none\">\n";
    os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
       << "\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double fx = kLeft + w * k / 5.0;
        const double fy = kTop + h - h * k / 5.0;
        os << "<line x1=\"" << num(fx) << "\" y1=\"" << num(kTop + h) << "\" x2=\"" << num(fx) << "\" y2=\""
           << num(kTop + h + 6) << "\"/>\n";
        os << "<line x1=\"" << num(kLeft - 6) << "\" y1=\"" << num(fy) << "\" x2=\"" << num(kLeft) << "\" y2=\"" << num(fy)
           << "\"/>\n";
    }
    os << "</g>\n";
    os << "<g id=\"labels\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#000000\">\n";
    for (int k = 0; k <= 5; ++k) {
        const double vx = rx.lo + (rx.hi - rx.lo) * k / 5.0;
        const double vy = ry.lo + (ry.hi - ry.lo) * k / 5.0;
        os << "<text x=\"" << num(kLeft + w * k / 5.0) << "\" y=\"" << num(kTop + h + 20)
           << "\" text-anchor=\"middle\">" << label(vx) << "</text>\n";
        os << "<text x=\"" << num(kLeft - 10) << "\" y=\"" << num(kTop + h - h * k / 5.0 + 4)
           << "\" text-anchor=\"end\">" << label(vy) << "</text>\n";
    }
    os << "<text x=\"" << num(kLeft + w / 2) << "\" y=\"" << num(kCanvasHeight - 16.0)
       << "\" text-anchor=\"middle\" font-size=\"14\">" << escape(plot.x_label) << "</text>\n";
    os << "<text x=\"18\" y=\"" << num(kTop + h / 2) << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
       << num(kTop + h / 2) << ")\">" << escape(plot.y_label) << "</text>\n";
    os << "<text x=\"" << num(kCanvasWidth / 2.0) << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">"
       << escape(plot.title) << "</text>\n";
    os << "</g>\n";

    std::size_t colour = 0;
    for (const auto& s : plot.series) {
        const char* stroke = kPalette[colour++ % std::size(kPalette)];
        const auto idx = decimate(s.x.size(), plot.max_points);
        os << "<g class=\"series\" data-name=\"" << escape(s.name) << "\" data-source=\"" << escape(s.source) << "\">\n";
        if (idx.size() > 1) {
            os << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.2\" points=\"";
            bool first = true;
            for (std::size_t k : idx) {
                if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
                os << (first ? "" : " ") << num(px(s.x[k])) << ',' << num(py(s.y[k]));
                first = false;
            }
            os << "\"/>\n";
        }
        if (idx.size() == 1 || plot.kind == PlotKind::convergence_curve) {
            for (std::size_t k : idx) {
                if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
                os << "<circle cx=\"" << num(px(s.x[k])) << "\" cy=\"" << num(py(s.y[k])) << "\" r=\"4\" fill=\"" << stroke
                   << "\"/>\n";
            }
        }
        os << "</g>\n";
    }

    if (plot.series.size() > 1) {
        os << "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
        for (std::size_t k = 0; k < plot.series.size(); ++k) {
            const double y = kTop + 16.0 + 18.0 * static_cast<double>(k);
            os << "<rect x=\"" << num(kLeft + w - 170) << "\" y=\"" << num(y - 9) << "\" width=\"12\" height=\"12\" fill=\""
               << kPalette[k % std::size(kPalette)] << "\"/>\n";
            os << "<text x=\"" << num(kLeft + w - 152) << "\" y=\"" << num(y + 1) << "\">" << escape(plot.series[k].name)
               << "</text>\n";
        }
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace switchavg
