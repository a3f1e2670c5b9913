#pragma once

#include <string>
#include <utility>
#include <vector>

namespace sdht_lab {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Renders a self-contained SVG line plot. The output is a pure function of
// the inputs (fixed canvas, fixed precision), so identical calls produce
// byte-identical files. When log_y is set the y axis uses a log10 scale;
// if any y value is not strictly positive the plot falls back to a linear
// axis instead of failing.
std::string render_line_plot(const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label, bool log_y,
                             const std::vector<PlotSeries>& series);

}  // namespace sdht_lab
