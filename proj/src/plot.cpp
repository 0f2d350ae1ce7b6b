#include "teachsim/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>

namespace teachsim {

namespace {

constexpr double kPanelW = 340.0;
constexpr double kPanelH = 260.0;
constexpr double kLeft = 70.0;
constexpr double kTop = 50.0;
constexpr double kGap = 60.0;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

std::string label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
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

struct Chart {
  std::string id;
  std::string title;
  bool log_y;
  std::function<std::optional<double>(const TraceRow&)> value;
};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double x) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  bool empty() const { return !(lo <= hi); }
  void widen() {
    if (empty()) {
      lo = 0.0;
      hi = 1.0;
    } else if (hi == lo) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

void axes(std::string& svg, double x0, const Range& xr, const Range& yr, bool log_y) {
  const double y0 = kTop;
  svg += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(kPanelW) +
         "\" height=\"" + num(kPanelH) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xr.lo + (xr.hi - xr.lo) * k / 4.0;
    const double px = x0 + kPanelW * k / 4.0;
    svg += "<text x=\"" + num(px) + "\" y=\"" + num(y0 + kPanelH + 16) +
           "\" font-size=\"10\" text-anchor=\"middle\">" + label(fx) + "</text>\n";
  }
  if (log_y) {
    for (double e = std::ceil(yr.lo); e <= std::floor(yr.hi); e += 1.0) {
      const double py = y0 + kPanelH - (e - yr.lo) / (yr.hi - yr.lo) * kPanelH;
      svg += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(py + 3) +
             "\" font-size=\"10\" text-anchor=\"end\">1e" + label(e) + "</text>\n";
    }
  } else {
    for (int k = 0; k <= 4; ++k) {
      const double fy = yr.lo + (yr.hi - yr.lo) * k / 4.0;
      const double py = y0 + kPanelH - kPanelH * k / 4.0;
      svg += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(py + 3) +
             "\" font-size=\"10\" text-anchor=\"end\">" + label(fy) + "</text>\n";
    }
  }
  svg += "<text x=\"" + num(x0 + kPanelW / 2) + "\" y=\"" + num(y0 + kPanelH + 34) +
         "\" font-size=\"11\" text-anchor=\"middle\">teaching samples</text>\n";
}

}  // namespace

std::string trace_color(const std::string& teacher, std::size_t index) {
  if (teacher == "random") return "#d62728";
  if (teacher == "omniscient") return "#1f77b4";
  if (teacher == "lazy") return "#ff7f0e";
  if (teacher == "active") return "#2ca02c";
  static const char* palette[] = {"#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return palette[index % 6];
}

std::string render_svg(const std::vector<Trace>& traces) {
  const std::vector<Chart> charts = {
      {"param_dist", "parameter distance (log10)", true,
       [](const TraceRow& r) -> std::optional<double> {
         if (!(r.param_dist > 0.0) || !std::isfinite(r.param_dist)) return std::nullopt;
         return std::log10(r.param_dist);
       }},
      {"objective", "training objective", false,
       [](const TraceRow& r) -> std::optional<double> {
         if (!std::isfinite(r.objective)) return std::nullopt;
         return r.objective;
       }},
      {"test_accuracy", "test accuracy", false,
       [](const TraceRow& r) { return r.test_accuracy; }},
  };

  Range xr;
  for (const Trace& t : traces)
    for (const TraceRow& r : t.rows) xr.add(static_cast<double>(r.teaching_samples));
  xr.widen();

  const double width = kLeft + 3 * kPanelW + 2 * kGap + 30;
  const double legend_y = kTop + kPanelH + 60;
  const double height = legend_y + 20.0 * static_cast<double>(traces.size()) + 20;
  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (size_t c = 0; c < charts.size(); ++c) {
    const Chart& chart = charts[c];
    const double x0 = kLeft + static_cast<double>(c) * (kPanelW + kGap);
    Range yr;
    for (const Trace& t : traces)
      for (const TraceRow& r : t.rows)
        if (auto v = chart.value(r)) yr.add(*v);
    const bool has_data = !yr.empty();
    yr.widen();

    svg += "<g class=\"chart\" id=\"" + chart.id + "\" data-x0=\"" + num(x0) + "\" data-y0=\"" +
           num(kTop) + "\" data-width=\"" + num(kPanelW) + "\" data-height=\"" + num(kPanelH) +
           "\" data-xmin=\"" + full(xr.lo) + "\" data-xmax=\"" + full(xr.hi) + "\" data-ymin=\"" +
           full(yr.lo) + "\" data-ymax=\"" + full(yr.hi) + "\">\n";
    svg += "<text x=\"" + num(x0 + kPanelW / 2) + "\" y=\"" + num(kTop - 12) +
           "\" font-size=\"13\" text-anchor=\"middle\">" + chart.title + "</text>\n";
    axes(svg, x0, xr, yr, chart.log_y);
    if (!has_data) {
      svg += "<text x=\"" + num(x0 + kPanelW / 2) + "\" y=\"" + num(kTop + kPanelH / 2) +
             "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#888\">no data</text>\n";
    }
    for (size_t i = 0; i < traces.size(); ++i) {
      std::string points;
      for (const TraceRow& r : traces[i].rows) {
        const auto v = chart.value(r);
        if (!v) continue;
        const double px =
            x0 + (static_cast<double>(r.teaching_samples) - xr.lo) / (xr.hi - xr.lo) * kPanelW;
        const double py = kTop + kPanelH - (*v - yr.lo) / (yr.hi - yr.lo) * kPanelH;
        if (!points.empty()) points += ' ';
        points += num(px) + "," + num(py);
      }
      if (points.empty()) continue;
      svg += "<polyline class=\"curve\" data-chart=\"" + chart.id + "\" data-teacher=\"" +
             escape(traces[i].teacher) + "\" fill=\"none\" stroke-width=\"1.5\" stroke=\"" +
             trace_color(traces[i].teacher, i) + "\" points=\"" + points + "\"/>\n";
    }
    svg += "</g>\n";
  }

  svg += "<g id=\"legend\">\n";
  for (size_t i = 0; i < traces.size(); ++i) {
    const double y = legend_y + 20.0 * static_cast<double>(i);
    const std::string color = trace_color(traces[i].teacher, i);
    svg += "<g class=\"legend-entry\" data-teacher=\"" + escape(traces[i].teacher) + "\">";
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft + 30) +
           "\" y2=\"" + num(y) + "\" stroke-width=\"2\" stroke=\"" + color + "\"/>";
    svg += "<text x=\"" + num(kLeft + 38) + "\" y=\"" + num(y + 4) + "\" font-size=\"12\">" +
           escape(traces[i].teacher) + "</text></g>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace teachsim
