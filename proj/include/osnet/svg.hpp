#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "osnet/ode.hpp"

/// \file svg.hpp
/// Static SVG rendering of trajectories: component-vs-time overlays of two
/// runs, or a planar projection of a single orbit. Output bytes are
/// deterministic for identical inputs.

namespace osnet {

/// Axis selector: -1 is time, 0..n-1 are state components.
struct PlotAxis {
    int index = -1;
    std::string label;
};

inline PlotAxis parse_plot_axis(const std::string& name) {
    if (name == "t") return {-1, "t"};
    if (name.size() >= 2 && name[0] == 'x') {
        const int idx = std::atoi(name.c_str() + 1);
        if (idx >= 0 && std::to_string(idx) == name.substr(1)) return {idx, name};
    }
    throw std::invalid_argument("unknown plot axis: " + name + " (expected t, x0, x1, ...)");
}

namespace detail {

inline double axis_value(const Trajectory& traj, std::size_t k, const PlotAxis& axis) {
    if (axis.index < 0) return traj.times()[k];
    return traj.states()[k][axis.index];
}

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

}  // namespace detail

/// Render one or two trajectories against the chosen axes. With two series
/// the first is drawn black (reference data) and the second red (learned
/// rollout). Long series are decimated to at most max_points samples.
inline std::string render_plot_svg(const std::vector<const Trajectory*>& series,
                                   const PlotAxis& x_axis, const PlotAxis& y_axis,
                                   std::size_t max_points = 20000) {
    require(!series.empty() && series.size() <= 2, "render_plot_svg: need 1 or 2 trajectories");
    for (const Trajectory* t : series) {
        require(t != nullptr, "render_plot_svg: null trajectory");
        if (x_axis.index >= t->dim() || y_axis.index >= t->dim())
            throw std::invalid_argument("plot axis out of range for trajectory dimension " +
                                        std::to_string(t->dim()));
    }

    const double width = 900.0, height = 600.0, margin = 60.0;

    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const Trajectory* t : series) {
        for (std::size_t k = 0; k < t->size(); ++k) {
            const double x = detail::axis_value(*t, k, x_axis);
            const double y = detail::axis_value(*t, k, y_axis);
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    auto pad = [](double& lo, double& hi) {
        const double span = hi - lo;
        if (span <= 0.0) {
            lo -= 1.0;
            hi += 1.0;
        } else {
            lo -= 0.05 * span;
            hi += 0.05 * span;
        }
    };
    pad(x_min, x_max);
    pad(y_min, y_max);

    auto px = [&](double x) {
        return margin + (x - x_min) / (x_max - x_min) * (width - 2.0 * margin);
    };
    auto py = [&](double y) {
        return height - margin - (y - y_min) / (y_max - y_min) * (height - 2.0 * margin);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"600\" "
           "viewBox=\"0 0 900 600\">\n";
    svg += "<rect width=\"900\" height=\"600\" fill=\"#ffffff\"/>\n";

    // axes with min/max tick labels
    svg += "<g stroke=\"#444444\" stroke-width=\"1\">\n";
    svg += "<line x1=\"" + detail::fmt2(margin) + "\" y1=\"" + detail::fmt2(height - margin) +
           "\" x2=\"" + detail::fmt2(width - margin) + "\" y2=\"" +
           detail::fmt2(height - margin) + "\"/>\n";
    svg += "<line x1=\"" + detail::fmt2(margin) + "\" y1=\"" + detail::fmt2(margin) +
           "\" x2=\"" + detail::fmt2(margin) + "\" y2=\"" + detail::fmt2(height - margin) +
           "\"/>\n";
    svg += "</g>\n";
    svg += "<g font-family=\"sans-serif\" font-size=\"13\" fill=\"#222222\">\n";
    svg += "<text x=\"" + detail::fmt2(width / 2.0) + "\" y=\"592\">" + x_axis.label +
           "</text>\n";
    svg += "<text x=\"8\" y=\"" + detail::fmt2(height / 2.0) + "\">" + y_axis.label +
           "</text>\n";
    svg += "<text x=\"" + detail::fmt2(margin) + "\" y=\"592\">" + detail::fmt_tick(x_min) +
           "</text>\n";
    svg += "<text x=\"" + detail::fmt2(width - margin - 40.0) + "\" y=\"592\">" +
           detail::fmt_tick(x_max) + "</text>\n";
    svg += "<text x=\"8\" y=\"" + detail::fmt2(height - margin) + "\">" +
           detail::fmt_tick(y_min) + "</text>\n";
    svg += "<text x=\"8\" y=\"" + detail::fmt2(margin) + "\">" + detail::fmt_tick(y_max) +
           "</text>\n";
    svg += "</g>\n";

    const char* colors[2] = {"#000000", "#cc0000"};
    for (std::size_t s = 0; s < series.size(); ++s) {
        const Trajectory& t = *series[s];
        const std::size_t stride = std::max<std::size_t>(1, (t.size() + max_points - 1) / max_points);
        svg += "<polyline fill=\"none\" stroke=\"";
        svg += colors[s];
        svg += "\" stroke-width=\"1\" points=\"";
        for (std::size_t k = 0; k < t.size(); k += stride) {
            svg += detail::fmt2(px(detail::axis_value(t, k, x_axis)));
            svg += ",";
            svg += detail::fmt2(py(detail::axis_value(t, k, y_axis)));
            svg += " ";
        }
        svg += "\"/>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace osnet
