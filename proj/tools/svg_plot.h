// Copyright 2026 The rbpk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal self-contained SVG line plots. Presentation only: every number
// drawn here is also written to a table by the caller.

#ifndef RBPK_TOOLS_SVG_PLOT_H_
#define RBPK_TOOLS_SVG_PLOT_H_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace rbpk::cli {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool markers = true;  // false: line only
  bool dashed = false;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = true;
  bool log_y = true;
  std::vector<PlotSeries> series;
  std::vector<std::string> notes;  // printed under the title
};

// Non-finite points, and non-positive ones on a log axis, are skipped.
std::string RenderSvg(const Plot& plot);
void WriteSvg(const Plot& plot, const std::filesystem::path& path);

}  // namespace rbpk::cli

#endif  // RBPK_TOOLS_SVG_PLOT_H_
