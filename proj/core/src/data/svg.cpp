#include "flowdiff/data/svg.hpp"

#include <algorithm>
#include <cstdio>

namespace flowdiff::data {
namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string flow_curve_svg(const std::string& title, const std::vector<CurveSeries>& series, int width,
                           int height) {
    const double left = 48, right = 12, top = 28, bottom = 28;
    const double plot_w = width - left - right, plot_h = height - top - bottom;
    double ymax = 0.0;
    std::size_t points = 0;
    for (const auto& s : series) {
        for (double v : s.values) ymax = std::max(ymax, v);
        points = std::max(points, s.values.size());
    }
    if (ymax <= 0.0) ymax = 1.0;
    char buf[256];
    std::string svg;
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" font-family=\"sans-serif\" "
                  "font-size=\"11\">\n",
                  width, height);
    svg += buf;
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf), "<text x=\"%g\" y=\"16\">", left);
    svg += buf + escape(title) + "</text>\n";
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n"
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                  left, top, left, top + plot_h, left, top + plot_h, left + plot_w, top + plot_h);
    svg += buf;
    std::snprintf(buf, sizeof(buf), "<text x=\"4\" y=\"%g\">%.4g</text>\n<text x=\"4\" y=\"%g\">0</text>\n", top + 4,
                  ymax, top + plot_h);
    svg += buf;
    const double step = points > 1 ? plot_w / static_cast<double>(points - 1) : 0.0;
    double legend_y = top + 12;
    for (const auto& s : series) {
        svg += "<polyline fill=\"none\" stroke=\"" + escape(s.color) + "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s%.2f,%.2f", i ? " " : "", left + step * static_cast<double>(i),
                          top + plot_h * (1.0 - s.values[i] / ymax));
            svg += buf;
        }
        svg += "\"/>\n";
        std::snprintf(buf, sizeof(buf), "<text x=\"%g\" y=\"%g\" fill=\"", left + plot_w - 110, legend_y);
        svg += buf + escape(s.color) + "\">" + escape(s.label) + "</text>\n";
        legend_y += 14;
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace flowdiff::data
