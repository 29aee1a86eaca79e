#pragma once

#include <string>
#include <vector>

namespace remask::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Self-contained SVG line chart (fixed 640x420 canvas, axes, ticks, legend).
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series);

// Plain columnar twin of the same data: one x column, one column per series.
// All series must share the same x grid.
std::string columns_text(const std::vector<Series>& series);

}  // namespace remask::plot
