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

// Sequence-level success from token-level RBP_k. A task succeeds when N
// consecutive ground-truth tokens all rank within the top k; with
// independent positions p_{N,k} = RBP_k^N, and substituting the token-level
// power law gives the sigmoid-in-ln-S family p = exp(-C N S^-alpha).

#ifndef RBPK_EMERGENCE_H_
#define RBPK_EMERGENCE_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rbpk/rank_stream.h"

namespace rbpk {

struct EmergenceSpec {
  std::uint64_t n_tokens = 1;  // N
  std::uint64_t k = 1;
  double c_const = 1.0;  // C
  double alpha = 0.1;
};

// rbp_k^N. Throws kDomain unless 0 < rbp_k <= 1.
double SequenceSuccess(double rbp_k, std::uint64_t n_tokens);

// (S, exp(-C N S^-alpha)) for each size.
std::vector<std::pair<double, double>> EmergenceCurve(
    const EmergenceSpec& spec, std::span<const double> sizes);

// Size at which the curve crosses 1/2: (C N / ln 2)^(1/alpha).
double HalfPoint(const EmergenceSpec& spec);

struct EmergenceObservation {
  std::uint64_t n_tokens = 1;
  double model_size = 1.0;
  double p = 0.5;
};

struct EmergenceFit {
  double c_const = 0.0;
  double alpha = 0.0;
  double r2 = 0.0;
  int n_points = 0;
};

// Pooled least squares of ln(-ln p) - ln N on ln S. Throws kDomain for
// p outside (0, 1), kUnderdetermined with < 3 observations or < 2 sizes.
EmergenceFit FitEmergence(std::span<const EmergenceObservation> observations);

// Fraction of length-N windows whose records all have rank <= k. Windows
// never straddle a document start. Returns hits and window count.
struct WindowCount {
  std::uint64_t hits = 0;
  std::uint64_t windows = 0;
  double fraction() const {
    return windows == 0 ? 0.0
                        : static_cast<double>(hits) / static_cast<double>(windows);
  }
};

WindowCount CountSuccessWindows(std::span<const std::uint32_t> ranks,
                                std::uint64_t n_tokens, std::uint64_t k,
                                std::span<const std::uint64_t> doc_starts = {});

// Streams a rank file once and counts windows for every (N, k) pair.
// Result is indexed [n_index][k_index]. Uses the "<path>.docs" sidecar
// when present.
std::vector<std::vector<WindowCount>> CountSuccessWindows(
    const std::filesystem::path& stream_path,
    std::span<const std::uint64_t> n_grid, std::span<const std::uint64_t> k_grid);

}  // namespace rbpk

#endif  // RBPK_EMERGENCE_H_
