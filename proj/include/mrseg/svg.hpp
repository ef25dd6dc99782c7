// Minimal hand-rolled SVG output: box plots and loss curves. Figures are
// artifacts of the experiment driver, not a plotting framework.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace mrseg::svg {

struct BoxGroup {
    std::string label;
    std::vector<double> values;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    double pos = q * (v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - lo;
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace detail

// Quartile boxes with min/max whiskers on a fixed [lo, hi] value axis.
inline std::string box_plot(const std::vector<BoxGroup>& groups, const std::string& title, double lo = 0.0,
                            double hi = 1.0) {
    const int width = 120 * static_cast<int>(groups.size()) + 80;
    const int height = 360;
    const double plot_top = 40, plot_bottom = height - 60;
    auto y_of = [&](double v) { return plot_bottom - (v - lo) / (hi - lo) * (plot_bottom - plot_top); };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
           std::to_string(height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + std::to_string(width / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + title +
           "</text>\n";
    for (int tick = 0; tick <= 5; ++tick) {
        double v = lo + (hi - lo) * tick / 5.0;
        double y = y_of(v);
        out += "<line x1=\"50\" y1=\"" + detail::fmt(y) + "\" x2=\"" + std::to_string(width - 20) + "\" y2=\"" +
               detail::fmt(y) + "\" stroke=\"#ddd\"/>\n";
        out += "<text x=\"44\" y=\"" + detail::fmt(y + 4) + "\" text-anchor=\"end\" font-size=\"10\">" +
               detail::fmt(v) + "</text>\n";
    }
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto& g = groups[i];
        if (g.values.empty()) continue;
        double cx = 110.0 + 120.0 * static_cast<double>(i);
        double q1 = detail::quantile(g.values, 0.25);
        double q2 = detail::quantile(g.values, 0.5);
        double q3 = detail::quantile(g.values, 0.75);
        double vmin = *std::min_element(g.values.begin(), g.values.end());
        double vmax = *std::max_element(g.values.begin(), g.values.end());
        out += "<line x1=\"" + detail::fmt(cx) + "\" y1=\"" + detail::fmt(y_of(vmin)) + "\" x2=\"" + detail::fmt(cx) +
               "\" y2=\"" + detail::fmt(y_of(vmax)) + "\" stroke=\"black\"/>\n";
        out += "<rect x=\"" + detail::fmt(cx - 30) + "\" y=\"" + detail::fmt(y_of(q3)) + "\" width=\"60\" height=\"" +
               detail::fmt(std::max(1.0, y_of(q1) - y_of(q3))) + "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
        out += "<line x1=\"" + detail::fmt(cx - 30) + "\" y1=\"" + detail::fmt(y_of(q2)) + "\" x2=\"" +
               detail::fmt(cx + 30) + "\" y2=\"" + detail::fmt(y_of(q2)) + "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + detail::fmt(cx) + "\" y=\"" + std::to_string(height - 36) +
               "\" text-anchor=\"middle\" font-size=\"10\">" + g.label + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

// Train (red) and validation (blue) loss against epoch index.
inline std::string loss_curves(const std::vector<double>& train_loss, const std::vector<double>& val_loss,
                               const std::string& title) {
    const int width = 480, height = 320;
    const double plot_top = 40, plot_bottom = height - 40, plot_left = 60, plot_right = width - 20;
    double hi = 0.0;
    for (double v : train_loss) hi = std::max(hi, v);
    for (double v : val_loss) hi = std::max(hi, v);
    if (hi <= 0.0) hi = 1.0;
    std::size_t n = std::max(train_loss.size(), val_loss.size());
    auto x_of = [&](std::size_t i) {
        return n > 1 ? plot_left + (plot_right - plot_left) * static_cast<double>(i) / static_cast<double>(n - 1)
                     : (plot_left + plot_right) / 2;
    };
    auto y_of = [&](double v) { return plot_bottom - v / hi * (plot_bottom - plot_top); };
    auto polyline = [&](const std::vector<double>& ys, const char* color) {
        std::string s = "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < ys.size(); ++i) {
            s += detail::fmt(x_of(i)) + "," + detail::fmt(y_of(ys[i])) + " ";
        }
        s += "\"/>\n";
        return s;
    };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
           std::to_string(height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + std::to_string(width / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + title +
           "</text>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        double v = hi * tick / 4.0;
        out += "<line x1=\"" + detail::fmt(plot_left) + "\" y1=\"" + detail::fmt(y_of(v)) + "\" x2=\"" +
               detail::fmt(plot_right) + "\" y2=\"" + detail::fmt(y_of(v)) + "\" stroke=\"#ddd\"/>\n";
        out += "<text x=\"" + detail::fmt(plot_left - 6) + "\" y=\"" + detail::fmt(y_of(v) + 4) +
               "\" text-anchor=\"end\" font-size=\"10\">" + detail::fmt(v) + "</text>\n";
    }
    if (!train_loss.empty()) out += polyline(train_loss, "#d62728");
    if (!val_loss.empty()) out += polyline(val_loss, "#1f77b4");
    out += "<text x=\"" + detail::fmt(plot_right - 100) + "\" y=\"" + detail::fmt(plot_top + 10) +
           "\" font-size=\"10\" fill=\"#d62728\">train</text>\n";
    out += "<text x=\"" + detail::fmt(plot_right - 60) + "\" y=\"" + detail::fmt(plot_top + 10) +
           "\" font-size=\"10\" fill=\"#1f77b4\">val</text>\n";
    out += "</svg>\n";
    return out;
}

}  // namespace mrseg::svg
