#pragma once

#include <string>
#include <vector>

namespace diffserve {

struct ChartSeries {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
    std::string color; // empty: pick from the default palette
};

// Renders a simple line chart (axes, gridlines, legend) as a standalone SVG
// file. Series may have different lengths; xs and ys must match per series.
void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<ChartSeries>& series, int width = 960, int height = 420);

} // namespace diffserve
