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

// Minimal deterministic SVG charts. Each figure carries its plotted data as
// JSON inside <metadata>, so it can be re-read without the pipeline.

#ifndef EMBSENSE_SVG_HPP_
#define EMBSENSE_SVG_HPP_

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace embsense::svg {

enum class Style { kLine, kMarkers, kLineMarkers };

struct Series {
  std::string name;
  std::vector<std::array<double, 2>> points;
  Style style = Style::kLineMarkers;
  bool dashed = false;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::string annotation;  // drawn in the upper-left corner of the panel
  bool log_x = false;
  std::optional<std::pair<double, double>> y_range;
};

std::string Render(const Plot& plot, int width = 640, int height = 420);

}  // namespace embsense::svg

#endif  // EMBSENSE_SVG_HPP_
