#pragma once

#include <string>
#include <vector>

namespace spline_koopman {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct PlotPanel {
  std::string y_label;
  std::vector<PlotSeries> series;
};

/// Panels stacked vertically, shared x axis label, one legend per panel.
/// Non-finite samples break the polyline.
std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::vector<PlotPanel>& panels);

}  // namespace spline_koopman
