#pragma once

#include <string>
#include <vector>

namespace flowdiff::data {

struct CurveSeries {
    std::string label;
    std::vector<double> values;
    std::string color = "#1f77b4";
};

/// Minimal line chart with a shared y axis starting at zero.
std::string flow_curve_svg(const std::string& title, const std::vector<CurveSeries>& series,
                           int width = 480, int height = 240);

}  // namespace flowdiff::data
