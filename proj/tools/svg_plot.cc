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

#include "svg_plot.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "rbpk/error.h"

namespace rbpk::cli {
namespace {

constexpr double kWidth = 720, kHeight = 480;
constexpr double kLeft = 80, kRight = 200, kTop = 60, kBottom = 60;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

std::string Escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Axis {
  bool log = true;
  double lo = 0, hi = 1;  // in transformed units

  double T(double v) const { return log ? std::log10(v) : v; }
  bool Usable(double v) const { return std::isfinite(v) && (!log || v > 0); }

  std::vector<double> Ticks() const {
    std::vector<double> t;
    if (log) {
      const int a = static_cast<int>(std::floor(lo)), b = static_cast<int>(std::ceil(hi));
      const int step = std::max(1, (b - a) / 8);
      for (int e = a; e <= b; e += step) {
        if (e >= lo - 1e-9 && e <= hi + 1e-9) t.push_back(e);
      }
    } else {
      const double span = hi - lo;
      const double raw = span / 6;
      const double mag = std::pow(10.0, std::floor(std::log10(raw)));
      const double step = raw / mag < 2 ? 2 * mag : raw / mag < 5 ? 5 * mag : 10 * mag;
      for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12; v += step) t.push_back(v);
    }
    return t;
  }

  std::string Label(double t) const {
    std::ostringstream os;
    if (log) {
      os << "1e" << static_cast<int>(std::lround(t));
    } else {
      os << t;
    }
    return os.str();
  }
};

void FitRange(Axis& axis, const std::vector<double>& values) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) {
    lo = 0;
    hi = 1;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  axis.lo = lo - pad;
  axis.hi = hi + pad;
}

}  // namespace

std::string RenderSvg(const Plot& plot) {
  Axis ax{plot.log_x}, ay{plot.log_y};
  std::vector<double> xs, ys;
  for (const auto& s : plot.series) {
    for (const auto& [x, y] : s.points) {
      if (ax.Usable(x) && ay.Usable(y)) {
        xs.push_back(ax.T(x));
        ys.push_back(ay.T(y));
      }
    }
  }
  FitRange(ax, xs);
  FitRange(ay, ys);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double t) { return kLeft + (t - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto py = [&](double t) { return kTop + ph - (t - ay.lo) / (ay.hi - ay.lo) * ph; };

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kLeft << "\" y=\"22\" font-size=\"15\">" << Escape(plot.title)
     << "</text>\n";
  for (std::size_t i = 0; i < plot.notes.size(); ++i) {
    os << "<text x=\"" << kLeft << "\" y=\"" << 38 + 13 * i << "\" font-size=\"11\" fill=\"#444\">"
       << Escape(plot.notes[i]) << "</text>\n";
  }
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
     << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ax.Ticks()) {
    os << "<line x1=\"" << px(t) << "\" x2=\"" << px(t) << "\" y1=\"" << kTop << "\" y2=\""
       << kTop + ph << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << px(t) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">"
       << ax.Label(t) << "</text>\n";
  }
  for (double t : ay.Ticks()) {
    os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << py(t) << "\" y2=\""
       << py(t) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(t) + 4 << "\" text-anchor=\"end\">"
       << ay.Label(t) << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 18
     << "\" text-anchor=\"middle\">" << Escape(plot.x_label) << "</text>\n";
  os << "<text transform=\"translate(18," << kTop + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << Escape(plot.y_label) << "</text>\n";

  for (std::size_t i = 0; i < plot.series.size(); ++i) {
    const PlotSeries& s = plot.series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    std::ostringstream path;
    bool first = true;
    for (const auto& [x, y] : s.points) {
      if (!ax.Usable(x) || !ay.Usable(y)) continue;
      path << (first ? "M" : " L") << px(ax.T(x)) << "," << py(ay.T(y));
      first = false;
    }
    if (!first) {
      os << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << color
         << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"5,4\"" : "")
         << "/>\n";
    }
    if (s.markers) {
      for (const auto& [x, y] : s.points) {
        if (!ax.Usable(x) || !ay.Usable(y)) continue;
        os << "<circle cx=\"" << px(ax.T(x)) << "\" cy=\"" << py(ay.T(y)) << "\" r=\"3\" fill=\""
           << color << "\"/>\n";
      }
    }
    const double ly = kTop + 10 + 16 * i;
    os << "<line x1=\"" << kLeft + pw + 12 << "\" x2=\"" << kLeft + pw + 32 << "\" y1=\"" << ly
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\""
       << (s.dashed ? " stroke-dasharray=\"5,4\"" : "") << "/>\n";
    os << "<text x=\"" << kLeft + pw + 38 << "\" y=\"" << ly + 4 << "\">" << Escape(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void WriteSvg(const Plot& plot, const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot open " + tmp.string());
    out << RenderSvg(plot);
    if (!out) throw Error(ErrorKind::kIo, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot rename onto " + path.string());
}

}  // namespace rbpk::cli
