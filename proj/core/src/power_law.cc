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

#include "rbpk/power_law.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "rbpk/error.h"

namespace rbpk {
namespace {

std::string DescribePoint(const ScalingPoint& p) {
  std::ostringstream os;
  os.precision(17);
  os << "(S=" << p.model_size << ", value=" << p.value << ")";
  return os.str();
}

}  // namespace

PowerLawFit FitPowerLaw(std::span<const ScalingPoint> points) {
  for (const ScalingPoint& p : points) {
    if (!(p.value > 0.0) || !std::isfinite(p.value)) {
      throw Error(ErrorKind::kDomain,
                  "power-law fit needs positive finite values; offending point " +
                      DescribePoint(p));
    }
    if (!(p.model_size >= 1.0) || !std::isfinite(p.model_size)) {
      throw Error(ErrorKind::kDomain,
                  "model size must be >= 1; offending point " + DescribePoint(p));
    }
  }
  std::set<double> sizes;
  for (const ScalingPoint& p : points) sizes.insert(p.model_size);
  if (sizes.size() < 2) {
    throw Error(ErrorKind::kUnderdetermined,
                "power-law fit needs at least 2 distinct model sizes, got " +
                    std::to_string(sizes.size()));
  }

  const double n = static_cast<double>(points.size());
  std::vector<double> xs, ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  double x_mean = 0.0, y_mean = 0.0;
  for (const ScalingPoint& p : points) {
    xs.push_back(std::log(p.model_size));
    ys.push_back(std::log(p.value));
    x_mean += xs.back();
    y_mean += ys.back();
  }
  x_mean /= n;
  y_mean /= n;

  double sxx = 0.0, sxy = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - x_mean;
    const double dy = ys[i] - y_mean;
    sxx += dx * dx;
    sxy += dx * dy;
    ss_tot += dy * dy;
  }
  const double slope = sxy / sxx;
  const double intercept = y_mean - slope * x_mean;

  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    ss_res += r * r;
  }

  PowerLawFit fit;
  fit.slope = slope == 0.0 ? 0.0 : slope;
  fit.alpha = -fit.slope;
  fit.log_prefactor = intercept;
  fit.n_points = static_cast<int>(points.size());
  fit.r2 = ss_tot == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  return fit;
}

double Predict(const PowerLawFit& fit, double model_size) {
  return std::exp(fit.log_prefactor - fit.alpha * std::log(model_size));
}

SweepResult SweepFit(std::span<const RbpCurve> curves) {
  SweepResult result;
  if (curves.empty()) {
    throw Error(ErrorKind::kUnderdetermined, "sweep needs at least one curve");
  }

  // k values present in every curve.
  std::vector<std::uint64_t> ks;
  for (const auto& [k, unused] : curves.front().points) {
    const bool shared = std::all_of(curves.begin(), curves.end(),
                                    [k = k](const RbpCurve& c) {
                                      return c.points.count(k) > 0;
                                    });
    if (shared) {
      ks.push_back(k);
    } else {
      result.warnings.push_back("k=" + std::to_string(k) +
                                " missing from some curves; skipped");
    }
  }

  auto fit_row = [&](SweepRow row, const std::vector<ScalingPoint>& pts) {
    try {
      row.fit = FitPowerLaw(pts);
    } catch (const Error& e) {
      row.error = e.what();
      result.warnings.push_back(row.label + ": " + e.what());
    }
    result.rows.push_back(std::move(row));
  };

  const bool have_ce = std::all_of(curves.begin(), curves.end(),
                                   [](const RbpCurve& c) { return c.ce.has_value(); });
  if (have_ce) {
    SweepRow row;
    row.label = "CE";
    std::vector<ScalingPoint> pts;
    for (const RbpCurve& c : curves) {
      if (*c.ce > 0.0) {
        pts.push_back({static_cast<double>(c.meta.model_size), *c.ce});
      } else {
        row.excluded_sizes.push_back(c.meta.model_size);
      }
    }
    fit_row(std::move(row), pts);
  }

  for (std::uint64_t k : ks) {
    SweepRow row;
    row.label = std::to_string(k);
    row.k = k;
    std::vector<ScalingPoint> pts;
    for (const RbpCurve& c : curves) {
      const double rbp = c.points.at(k);
      if (rbp >= 1.0 || rbp <= 0.0) {
        row.excluded_sizes.push_back(c.meta.model_size);
        result.warnings.push_back(
            "k=" + std::to_string(k) + ": excluded S=" +
            std::to_string(c.meta.model_size) +
            (rbp >= 1.0 ? " (RBP_k = 1, -log is 0)" : " (RBP_k = 0)"));
        continue;
      }
      pts.push_back({static_cast<double>(c.meta.model_size), -std::log(rbp)});
    }
    fit_row(std::move(row), pts);
  }
  return result;
}

}  // namespace rbpk
