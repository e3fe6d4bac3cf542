#include "spline_koopman/svg.hpp"

#include "spline_koopman/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace spline_koopman {

namespace {

constexpr double kWidth = 720.0;
constexpr double kPanelHeight = 240.0;
constexpr double kTop = 40.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 160.0;
constexpr double kGap = 50.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
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
  void finish() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::vector<PlotPanel>& panels) {
  if (panels.empty()) throw InvalidArgument("plot needs at least one panel");
  const double plot_w = kWidth - kLeft - kRight;
  const double height = kTop + static_cast<double>(panels.size()) * (kPanelHeight + kGap) + 10.0;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(kWidth / 2) +
         "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         escape(title) + "</text>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const PlotPanel& panel = panels[p];
    const double y0 = kTop + static_cast<double>(p) * (kPanelHeight + kGap);
    Range xr;
    Range yr;
    for (const auto& s : panel.series) {
      if (s.x.size() != s.y.size()) throw DimensionMismatch("series x and y lengths differ");
      for (double v : s.x) xr.add(v);
      for (double v : s.y) yr.add(v);
    }
    xr.finish();
    yr.finish();
    if (!panel.series.empty()) {
      // Keep the first (reference) series readable when another one diverges.
      Range ref;
      for (double v : panel.series.front().y) ref.add(v);
      ref.finish();
      const double span = ref.hi - ref.lo;
      yr.lo = std::max(yr.lo, ref.lo - span);
      yr.hi = std::min(yr.hi, ref.hi + span);
    }
    const double pad = 0.05 * (yr.hi - yr.lo);
    yr.lo -= pad;
    yr.hi += pad;
    auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
    auto py = [&](double y) { return y0 + (yr.hi - y) / (yr.hi - yr.lo) * kPanelHeight; };

    out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(y0) + "\" width=\"" + num(plot_w) +
           "\" height=\"" + num(kPanelHeight) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double fx = xr.lo + (xr.hi - xr.lo) * k / 4.0;
      const double fy = yr.lo + (yr.hi - yr.lo) * k / 4.0;
      out += "<text x=\"" + num(px(fx)) + "\" y=\"" + num(y0 + kPanelHeight + 14) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + tick(fx) +
             "</text>\n";
      out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(fy) + 3) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + tick(fy) +
             "</text>\n";
    }
    out += "<text x=\"18\" y=\"" + num(y0 + kPanelHeight / 2) +
           "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 18 " +
           num(y0 + kPanelHeight / 2) + ")\" text-anchor=\"middle\">" + escape(panel.y_label) +
           "</text>\n";
    out += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(y0 + kPanelHeight + 30) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           escape(x_label) + "</text>\n";

    for (std::size_t s = 0; s < panel.series.size(); ++s) {
      const PlotSeries& series = panel.series[s];
      const std::string style = "fill=\"none\" stroke=\"" + series.color +
                                "\" stroke-width=\"1.5\"" +
                                (series.dashed ? " stroke-dasharray=\"6 4\"" : "");
      std::string points;
      auto flush = [&] {
        if (!points.empty()) out += "<polyline " + style + " points=\"" + points + "\"/>\n";
        points.clear();
      };
      for (std::size_t i = 0; i < series.x.size(); ++i) {
        if (!std::isfinite(series.x[i]) || !std::isfinite(series.y[i])) {
          flush();
          continue;
        }
        const double y = std::clamp(series.y[i], yr.lo, yr.hi);
        if (!points.empty()) points += ' ';
        points += num(px(series.x[i])) + "," + num(py(y));
      }
      flush();

      const double ly = y0 + 14.0 + 18.0 * static_cast<double>(s);
      const double lx = kLeft + plot_w + 12.0;
      out += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 24) +
             "\" y2=\"" + num(ly) + "\" " + style + "/>\n";
      out += "<text x=\"" + num(lx + 30) + "\" y=\"" + num(ly + 4) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(series.label) +
             "</text>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace spline_koopman
