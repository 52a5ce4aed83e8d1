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

#ifndef RBPK_RBP_METRICS_H_
#define RBPK_RBP_METRICS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "rbpk/rank_stream.h"

namespace rbpk {

// Empirical RBP_k for a grid of k, plus cross-entropy when available.
struct RbpCurve {
  StreamMeta meta;
  std::map<std::uint64_t, double> points;  // k -> RBP_k
  std::optional<double> ce;                // nats
};

// Fraction of records with rank <= k. Exactly 0 when none qualify.
double RbpAtK(const RankHistogram& hist, std::uint64_t k);

// One pass over the histogram for a strictly ascending k grid.
RbpCurve RbpSweep(const RankHistogram& hist, std::span<const std::uint64_t> ks);

// Mean negative ground-truth log-probability, in nats.
double CrossEntropy(const RankHistogram& hist);

// {1, 10, 50, 100, 500, 2500, 10000, 20000, 30000}
std::span<const std::uint64_t> DefaultKGrid();

// Grid entries that fit within vocab_size, in order.
std::vector<std::uint64_t> ClipKGrid(std::span<const std::uint64_t> ks,
                                     std::uint32_t vocab_size);

}  // namespace rbpk

#endif  // RBPK_RBP_METRICS_H_
