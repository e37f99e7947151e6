/*
 * Copyright 2026 The embsense Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "embsense/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>

namespace embsense::svg {

namespace {

constexpr std::array<const char*, 10> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string Escape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void Add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void Finish() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    } else if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

}  // namespace

std::string Render(const Plot& plot, int width, int height) {
  const double left = 70, right = 170, top = 40, bottom = 55;
  const double pw = width - left - right;
  const double ph = height - top - bottom;

  auto xt = [&](double x) { return plot.log_x ? std::log10(x) : x; };
  Range xr, yr;
  for (const Series& s : plot.series) {
    for (const auto& [x, y] : s.points) {
      if (plot.log_x && !(x > 0.0)) continue;
      xr.Add(xt(x));
      yr.Add(y);
    }
  }
  if (plot.y_range) {
    yr.lo = plot.y_range->first;
    yr.hi = plot.y_range->second;
  }
  xr.Finish();
  yr.Finish();
  auto px = [&](double x) { return left + (xt(x) - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"11\">\n",
      width, height, width, height);

  nlohmann::json data = nlohmann::json::array();
  for (const Series& s : plot.series) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [x, y] : s.points) pts.push_back({x, y});
    data.push_back({{"name", s.name}, {"points", pts}});
  }
  out += "<metadata id=\"embsense-data\"><![CDATA[" + data.dump() +
         "]]></metadata>\n";
  out += fmt::format("<title>{}</title>\n", Escape(plot.title));
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += fmt::format(
      "<text x=\"{:.1f}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}"
      "</text>\n",
      left + pw / 2, Escape(plot.title));
  out += fmt::format(
      "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" "
      "fill=\"none\" stroke=\"black\"/>\n",
      left, top, pw, ph);

  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double sx = left + pw * i / 4.0;
    const double label = plot.log_x ? std::pow(10.0, fx) : fx;
    out += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" "
        "stroke=\"black\"/><text x=\"{0:.1f}\" y=\"{3:.1f}\" "
        "text-anchor=\"middle\">{4:.4g}</text>\n",
        sx, top + ph, top + ph + 5, top + ph + 18, label);
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    const double sy = top + ph - ph * i / 4.0;
    out += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" "
        "stroke=\"black\"/><text x=\"{3:.1f}\" y=\"{4:.1f}\" "
        "text-anchor=\"end\">{5:.4g}</text>\n",
        left - 5, sy, left, left - 8, sy + 4, fy);
  }
  out += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
      left + pw / 2, height - 15.0, Escape(plot.x_label));
  out += fmt::format(
      "<text x=\"18\" y=\"{0:.1f}\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 18 {0:.1f})\">{1}</text>\n",
      top + ph / 2, Escape(plot.y_label));

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const Series& s = plot.series[k];
    const char* color = kPalette[k % kPalette.size()];
    std::string coords;
    for (const auto& [x, y] : s.points) {
      if ((plot.log_x && !(x > 0.0)) || !std::isfinite(y)) continue;
      coords += fmt::format("{:.2f},{:.2f} ", px(x), py(y));
    }
    if (s.style != Style::kMarkers && !coords.empty()) {
      coords.pop_back();
      out += fmt::format(
          "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" "
          "stroke-width=\"1.5\"{}/>\n",
          coords, color, s.dashed ? " stroke-dasharray=\"5,3\"" : "");
    }
    if (s.style != Style::kLine) {
      for (const auto& [x, y] : s.points) {
        if ((plot.log_x && !(x > 0.0)) || !std::isfinite(y)) continue;
        out += fmt::format(
            "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\"/>\n",
            px(x), py(y), color);
      }
    }
    const double ly = top + 12.0 + 16.0 * static_cast<double>(k);
    out += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" "
        "stroke=\"{3}\" stroke-width=\"2\"{4}/><text x=\"{5:.1f}\" "
        "y=\"{6:.1f}\">{7}</text>\n",
        left + pw + 10, ly, left + pw + 30, color,
        s.dashed ? " stroke-dasharray=\"5,3\"" : "", left + pw + 35, ly + 4,
        Escape(s.name));
  }
  if (!plot.annotation.empty()) {
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n",
                       left + 8, top + 16, Escape(plot.annotation));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace embsense::svg
