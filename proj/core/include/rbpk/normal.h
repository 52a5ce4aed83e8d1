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

#ifndef RBPK_NORMAL_H_
#define RBPK_NORMAL_H_

namespace rbpk {

inline constexpr double kSqrt2Pi = 2.50662827463100050241576528481;
inline constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;

// Standard normal density.
double NormalPdf(double t);
double LogNormalPdf(double t);
// Standard normal CDF, via erfc so both tails keep full relative accuracy.
double NormalCdf(double t);
// Upper tail 1 - Phi(t).
double NormalSf(double t);
// ln(1 - Phi(t)); finite for all finite t (continued fraction far out).
double LogNormalSf(double t);

}  // namespace rbpk

#endif  // RBPK_NORMAL_H_
