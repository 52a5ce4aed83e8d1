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

#include "rbpk/normal.h"

#include <cmath>
#include <numbers>

namespace rbpk {

double NormalPdf(double t) { return std::exp(-0.5 * t * t) / kSqrt2Pi; }

double LogNormalPdf(double t) { return -0.5 * t * t - kLogSqrt2Pi; }

double NormalCdf(double t) {
  return 0.5 * std::erfc(-t / std::numbers::sqrt2);
}

double NormalSf(double t) { return 0.5 * std::erfc(t / std::numbers::sqrt2); }

double LogNormalSf(double t) {
  if (t < 30.0) return std::log(NormalSf(t));
  // Laplace continued fraction for the Mills ratio, evaluated bottom-up:
  // Q(t) = phi(t) / (t + 1/(t + 2/(t + 3/(t + ...)))).
  double frac = t;
  for (int n = 60; n >= 1; --n) frac = t + n / frac;
  return LogNormalPdf(t) - std::log(frac);
}

}  // namespace rbpk
