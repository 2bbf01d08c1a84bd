// Copyright 2026 The VISA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VISA_EXPERIMENT_PLOT_HPP
#define VISA_EXPERIMENT_PLOT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "visa/error.hpp"
#include "visa/experiment/csv.hpp"

namespace visa {

struct PlotOptions {
  bool log_x = false;
  int width = 900;
  int height = 540;
};

/// One curve: (model_evals, test_metric) points plus its legend label.
struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// Extracts the metric curve of a trace; rejects traces whose model_evals decrease.
inline PlotSeries series_from_trace(const std::vector<csv::TraceRow>& rows, const std::string& source) {
  if (rows.empty()) {
    throw Error("plot: " + source + " has no rows");
  }
  PlotSeries s;
  const auto& first = rows.front();
  char buf[128];
  if (first.alpha) {
    std::snprintf(buf, sizeof(buf), "%s lr=%g alpha=%g seed=%llu", first.method.c_str(), first.lr, *first.alpha,
                  static_cast<unsigned long long>(first.seed));
  } else {
    std::snprintf(buf, sizeof(buf), "%s lr=%g seed=%llu", first.method.c_str(), first.lr,
                  static_cast<unsigned long long>(first.seed));
  }
  s.label = buf;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].model_evals < rows[i - 1].model_evals) {
      throw Error("plot: model_evals decreases at row " + std::to_string(i + 1) + " of " + source);
    }
    if (rows[i].test_metric && std::isfinite(*rows[i].test_metric)) {
      s.points.emplace_back(static_cast<double>(rows[i].model_evals), *rows[i].test_metric);
    }
  }
  return s;
}

namespace detail {

inline std::string xml_escape(const std::string& in) {
  std::string out;
  for (char c : in) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

inline std::string tick_label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

}  // namespace detail

/// Renders a self-contained SVG line chart, one polyline and one legend entry per series.
inline std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& options = {}) {
  if (series.empty()) {
    throw Error("plot: no input traces");
  }
  auto tx = [&](double x) { return options.log_x ? std::log10(x) : x; };
  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (options.log_x && !(x > 0.0)) {
        throw Error("plot: log-scale x axis needs positive model_evals");
      }
      x_lo = std::min(x_lo, tx(x));
      x_hi = std::max(x_hi, tx(x));
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (!std::isfinite(x_lo)) {
    throw Error("plot: no finite test_metric values in the input traces");
  }
  if (x_hi == x_lo) {
    x_hi = x_lo + 1.0;
  }
  if (y_hi == y_lo) {
    y_hi = y_lo + 1.0;
  }
  const double left = 80, right = 260, top = 30, bottom = 60;
  const double pw = options.width - left - right;
  const double ph = options.height - top - bottom;
  auto px = [&](double x) { return left + (tx(x) - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph; };

  static constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\"" << options.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << detail::fmt(pw) << "\" height=\""
      << detail::fmt(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x_lo + (x_hi - x_lo) * k / 4.0;
    const double fy = y_lo + (y_hi - y_lo) * k / 4.0;
    const double xv = options.log_x ? std::pow(10.0, fx) : fx;
    svg << "<text x=\"" << detail::fmt(left + pw * k / 4.0) << "\" y=\"" << detail::fmt(top + ph + 18)
        << "\" text-anchor=\"middle\">" << detail::tick_label(xv) << "</text>\n";
    svg << "<text x=\"" << detail::fmt(left - 6) << "\" y=\"" << detail::fmt(py(fy) + 4)
        << "\" text-anchor=\"end\">" << detail::tick_label(fy) << "</text>\n";
  }
  svg << "<text x=\"" << detail::fmt(left + pw / 2) << "\" y=\"" << options.height - 15
      << "\" text-anchor=\"middle\">model evaluations" << (options.log_x ? " (log scale)" : "") << "</text>\n";
  svg << "<text x=\"20\" y=\"" << detail::fmt(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << detail::fmt(top + ph / 2) << ")\">test metric</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* colour = kPalette[i % kPalette.size()];
    svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < series[i].points.size(); ++k) {
      const auto& [x, y] = series[i].points[k];
      svg << (k ? " " : "") << detail::fmt(px(x)) << ',' << detail::fmt(py(y));
    }
    svg << "\"/>\n";
  }
  svg << "<g class=\"legend\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = top + 10 + 18.0 * static_cast<double>(i);
    const double x = left + pw + 15;
    svg << "<line x1=\"" << detail::fmt(x) << "\" y1=\"" << detail::fmt(y) << "\" x2=\"" << detail::fmt(x + 20)
        << "\" y2=\"" << detail::fmt(y) << "\" stroke=\"" << kPalette[i % kPalette.size()]
        << "\" stroke-width=\"2\"/>";
    svg << "<text x=\"" << detail::fmt(x + 26) << "\" y=\"" << detail::fmt(y + 4) << "\">"
        << detail::xml_escape(series[i].label) << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

/// Reads each trace CSV and writes the chart to `svg_path`.
inline void plot_traces(const std::vector<std::string>& csv_paths, const std::string& svg_path,
                        const PlotOptions& options = {}) {
  if (csv_paths.empty()) {
    throw Error("plot: no input traces");
  }
  std::vector<PlotSeries> series;
  series.reserve(csv_paths.size());
  for (const auto& p : csv_paths) {
    series.push_back(series_from_trace(csv::read_trace(p), p));
  }
  const std::string svg = render_svg(series, options);
  std::ofstream out(svg_path);
  if (!out) {
    throw Error("plot: cannot write " + svg_path);
  }
  out << svg;
}

}  // namespace visa

#endif  // VISA_EXPERIMENT_PLOT_HPP
