#include "remask/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "remask/errors.hpp"

namespace remask::plot {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 24.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 48.0;
constexpr int kTicks = 5;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range data_range(const std::vector<Series>& series, bool use_y) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const Series& s : series)
    for (const double v : use_y ? s.y : s.x) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
  if (lo == hi) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series) {
  if (series.empty()) throw ParamError("no series to plot");
  for (const Series& s : series)
    if (s.x.size() != s.y.size())
      throw DimensionError("series '" + s.label + "' has mismatched x/y lengths");
  const Range rx = data_range(series, false);
  const Range ry = data_range(series, true);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const auto px = [&](double v) { return kLeft + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
  const auto py = [&](double v) { return kTop + ph - (v - ry.lo) / (ry.hi - ry.lo) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" " +
         "font-family=\"sans-serif\" font-size=\"15\">" + title + "</text>\n";
  for (int i = 0; i <= kTicks; ++i) {
    const double f = static_cast<double>(i) / kTicks;
    const double xv = rx.lo + f * (rx.hi - rx.lo);
    const double yv = ry.lo + f * (ry.hi - ry.lo);
    const double gx = px(xv);
    const double gy = py(yv);
    svg += "<line x1=\"" + num(gx) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(gx) +
           "\" y2=\"" + num(kTop + ph) + "\" stroke=\"#e0e0e0\"/>\n";
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(gy) + "\" x2=\"" + num(kLeft + pw) +
           "\" y2=\"" + num(gy) + "\" stroke=\"#e0e0e0\"/>\n";
    svg += "<text x=\"" + num(gx) + "\" y=\"" + num(kTop + ph + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + num(xv) +
           "</text>\n";
    svg += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(gy + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + num(yv) +
           "</text>\n";
  }
  svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) +
         "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"#404040\"/>\n";
  svg += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 10) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + x_label +
         "</text>\n";
  svg += "<text x=\"16\" y=\"" + num(kTop + ph / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" " +
         "transform=\"rotate(-90 16 " + num(kTop + ph / 2) + ")\">" + y_label + "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (!s.x.empty()) {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size(); ++i)
        pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
      svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"2\"/>\n";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        svg += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(s.y[i])) +
               "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    const double ly = kTop + 14 + 16 * static_cast<double>(si);
    svg += "<line x1=\"" + num(kLeft + pw - 130) + "\" y1=\"" + num(ly) + "\" x2=\"" +
           num(kLeft + pw - 110) + "\" y2=\"" + num(ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(kLeft + pw - 104) + "\" y=\"" + num(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + s.label + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string columns_text(const std::vector<Series>& series) {
  if (series.empty()) throw ParamError("no series to write");
  const std::vector<double>& x = series.front().x;
  for (const Series& s : series) {
    if (s.x != x) throw DimensionError("series do not share an x grid");
    if (s.y.size() != x.size())
      throw DimensionError("series '" + s.label + "' has mismatched x/y lengths");
  }
  std::string out = "# x";
  for (const Series& s : series) out += " " + s.label;
  out += "\n";
  char buf[48];
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.10g", x[i]);
    out += buf;
    for (const Series& s : series) {
      std::snprintf(buf, sizeof(buf), " %.10g", s.y[i]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace remask::plot
