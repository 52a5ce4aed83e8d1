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

// Single-term power laws y = A * S^(-alpha), fitted by unweighted least
// squares on (ln S, ln y).

#ifndef RBPK_POWER_LAW_H_
#define RBPK_POWER_LAW_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbpk/rbp_metrics.h"

namespace rbpk {

struct ScalingPoint {
  double model_size = 1.0;  // S
  double value = 1.0;       // e.g. -ln RBP_k or CE; must be > 0
};

struct PowerLawFit {
  double alpha = 0.0;          // positive when the metric decays with S
  double log_prefactor = 0.0;  // ln A
  double r2 = 0.0;
  int n_points = 0;
  double slope = 0.0;  // log-log slope, always == -alpha
};

// Throws kDomain naming the first point with value <= 0 (or non-finite),
// kUnderdetermined with fewer than two distinct model sizes.
PowerLawFit FitPowerLaw(std::span<const ScalingPoint> points);

double Predict(const PowerLawFit& fit, double model_size);

// One row of a k-sweep. label is "CE" for the cross-entropy row, else the
// decimal k. A row whose fit failed carries the error text instead.
struct SweepRow {
  std::string label;
  std::optional<std::uint64_t> k;
  std::optional<PowerLawFit> fit;
  std::vector<std::uint64_t> excluded_sizes;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // CE row (if any) first, then ascending k
  std::vector<std::string> warnings;
};

// Fits -ln RBP_k against model size for every k shared by all curves.
// Sizes where RBP_k is exactly 1 (or 0) are dropped for that k with a
// warning; a k that cannot be fitted yields a row with error set rather
// than aborting the sweep.
SweepResult SweepFit(std::span<const RbpCurve> curves);

}  // namespace rbpk

#endif  // RBPK_POWER_LAW_H_
