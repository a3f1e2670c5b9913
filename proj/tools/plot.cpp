#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "sdht/errors.hpp"

namespace sdht_lab {

namespace {

// Canvas geometry. Fixed so that identical data renders identically.
constexpr double kWidth = 800.0;
constexpr double kHeight = 560.0;
constexpr double kLeft = 78.0;
constexpr double kRight = 770.0;
constexpr double kTop = 54.0;
constexpr double kBottom = 492.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                "#9467bd", "#ff7f0e", "#8c564b"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return std::string(buf);
}

std::string fmt_tick(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return std::string(buf);
}

std::string escape_xml(const std::string& s) {
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
  double lo = 0.0;
  double hi = 1.0;
};

Range pad_range(double lo, double hi) {
  if (lo == hi) {
    // Degenerate span (e.g. a single data point): widen by a fixed margin.
    double pad = (lo == 0.0) ? 1.0 : std::abs(lo) * 0.1;
    return {lo - pad, hi + pad};
  }
  double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
}

}  // namespace

std::string render_line_plot(const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label, bool log_y,
                             const std::vector<PlotSeries>& series) {
  if (series.empty()) {
    throw sdht::precondition_error("render_line_plot: no series to plot");
  }
  for (const auto& s : series) {
    if (s.points.empty()) {
      throw sdht::precondition_error("render_line_plot: series '" + s.label +
                                     "' has no points");
    }
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) {
        throw sdht::precondition_error("render_line_plot: series '" + s.label +
                                       "' contains a non-finite value");
      }
    }
  }

  bool use_log = log_y;
  if (use_log) {
    for (const auto& s : series) {
      for (const auto& [x, y] : s.points) {
        if (y <= 0.0) {
          use_log = false;
          break;
        }
      }
      if (!use_log) break;
    }
  }

  auto y_coord = [use_log](double y) {
    return use_log ? std::log10(y) : y;
  };

  double x_min = series[0].points[0].first;
  double x_max = x_min;
  double y_min = y_coord(series[0].points[0].second);
  double y_max = y_min;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y_coord(y));
      y_max = std::max(y_max, y_coord(y));
    }
  }
  const Range xr = pad_range(x_min, x_max);
  const Range yr = pad_range(y_min, y_max);

  auto px = [&](double x) {
    return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * (kRight - kLeft);
  };
  auto py = [&](double y) {
    return kBottom - (y_coord(y) - yr.lo) / (yr.hi - yr.lo) * (kBottom - kTop);
  };

  std::string svg;
  svg.reserve(1 << 14);
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) +
         "\" height=\"" + fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) +
         " " + fmt(kHeight) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + fmt(kWidth) + "\" height=\"" +
         fmt(kHeight) + "\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"" + fmt(kWidth / 2) +
         "\" y=\"28.00\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"18\">" +
         escape_xml(title) + "</text>\n";

  // Axes box and grid lines with tick labels.
  svg += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" +
         fmt(kRight - kLeft) + "\" height=\"" + fmt(kBottom - kTop) +
         "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  constexpr int kTicks = 5;
  for (int i = 0; i < kTicks; ++i) {
    const double t = static_cast<double>(i) / (kTicks - 1);
    const double xv = xr.lo + t * (xr.hi - xr.lo);
    const double yv = yr.lo + t * (yr.hi - yr.lo);
    const double xp = kLeft + t * (kRight - kLeft);
    const double yp = kBottom - t * (kBottom - kTop);
    if (i > 0 && i < kTicks - 1) {
      svg += "<line x1=\"" + fmt(xp) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" +
             fmt(xp) + "\" y2=\"" + fmt(kBottom) +
             "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
      svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(yp) + "\" x2=\"" +
             fmt(kRight) + "\" y2=\"" + fmt(yp) +
             "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    }
    svg += "<text x=\"" + fmt(xp) + "\" y=\"" + fmt(kBottom + 20.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">" +
           fmt_tick(xv) + "</text>\n";
    const double y_value = use_log ? std::pow(10.0, yv) : yv;
    svg += "<text x=\"" + fmt(kLeft - 8.0) + "\" y=\"" + fmt(yp + 4.0) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"12\">" +
           fmt_tick(y_value) + "</text>\n";
  }

  svg += "<text x=\"" + fmt((kLeft + kRight) / 2) + "\" y=\"" +
         fmt(kHeight - 14.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">" +
         escape_xml(x_label) + "</text>\n";
  std::string y_text = escape_xml(y_label);
  if (use_log) y_text += " (log scale)";
  svg += "<text x=\"20.00\" y=\"" + fmt((kTop + kBottom) / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\" transform=\"rotate(-90 20.00 " +
         fmt((kTop + kBottom) / 2) + ")\">" + y_text + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % kPaletteSize];
    const auto& pts = series[si].points;
    if (pts.size() > 1) {
      std::string poly = "<polyline fill=\"none\" stroke=\"";
      poly += color;
      poly += "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i > 0) poly += " ";
        poly += fmt(px(pts[i].first)) + "," + fmt(py(pts[i].second));
      }
      poly += "\"/>\n";
      svg += poly;
    }
    // Point markers; kept small so dense curves stay readable.
    if (pts.size() <= 64) {
      for (const auto& [x, y] : pts) {
        svg += "<circle cx=\"" + fmt(px(x)) + "\" cy=\"" + fmt(py(y)) +
               "\" r=\"3.00\" fill=\"" + color + "\"/>\n";
      }
    }
  }

  // Legend, top-right inside the plot area.
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % kPaletteSize];
    const double ly = kTop + 16.0 + 18.0 * static_cast<double>(si);
    svg += "<line x1=\"" + fmt(kRight - 150.0) + "\" y1=\"" + fmt(ly) +
           "\" x2=\"" + fmt(kRight - 126.0) + "\" y2=\"" + fmt(ly) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt(kRight - 120.0) + "\" y=\"" + fmt(ly + 4.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" +
           escape_xml(series[si].label) + "</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace sdht_lab
