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

#include "rbpk/rbp_metrics.h"

#include <array>
#include <string>

#include "rbpk/error.h"

namespace rbpk {
namespace {

constexpr std::array<std::uint64_t, 9> kDefaultGrid = {
    1, 10, 50, 100, 500, 2500, 10000, 20000, 30000};

void RequireNonEmpty(const RankHistogram& hist) {
  if (hist.total == 0) {
    throw Error(ErrorKind::kDegenerateInput,
                "metric undefined on an empty histogram (" + hist.meta.model_id +
                    ")");
  }
}

void RequireK(std::uint64_t k, const StreamMeta& meta) {
  if (k < 1 || k > meta.vocab_size) {
    throw Error(ErrorKind::kValidation, "k=" + std::to_string(k) +
                                            " outside [1, " +
                                            std::to_string(meta.vocab_size) + "]");
  }
}

}  // namespace

double RbpAtK(const RankHistogram& hist, std::uint64_t k) {
  RequireNonEmpty(hist);
  RequireK(k, hist.meta);
  std::uint64_t hits = 0;
  for (const auto& [rank, count] : hist.counts) {
    if (rank > k) break;
    hits += count;
  }
  if (hits == hist.total) return 1.0;
  return static_cast<double>(hits) / static_cast<double>(hist.total);
}

RbpCurve RbpSweep(const RankHistogram& hist, std::span<const std::uint64_t> ks) {
  RequireNonEmpty(hist);
  if (ks.empty()) throw Error(ErrorKind::kValidation, "empty k grid");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    RequireK(ks[i], hist.meta);
    if (i > 0 && ks[i] <= ks[i - 1]) {
      throw Error(ErrorKind::kValidation, "k grid must be strictly ascending");
    }
  }

  RbpCurve curve;
  curve.meta = hist.meta;
  const double total = static_cast<double>(hist.total);
  std::uint64_t hits = 0;
  auto it = hist.counts.begin();
  for (std::uint64_t k : ks) {
    while (it != hist.counts.end() && it->first <= k) {
      hits += it->second;
      ++it;
    }
    curve.points[k] = hits == hist.total ? 1.0 : static_cast<double>(hits) / total;
  }
  if (hist.logprob_sum) curve.ce = CrossEntropy(hist);
  return curve;
}

double CrossEntropy(const RankHistogram& hist) {
  if (!hist.meta.has_logprob || !hist.logprob_sum) {
    throw Error(ErrorKind::kCapability,
                "cross-entropy needs gt_logprob; stream " + hist.meta.model_id +
                    " has none");
  }
  RequireNonEmpty(hist);
  const double ce = -*hist.logprob_sum / static_cast<double>(hist.total);
  return ce == 0.0 ? 0.0 : ce;  // no -0.0
}

std::span<const std::uint64_t> DefaultKGrid() { return kDefaultGrid; }

std::vector<std::uint64_t> ClipKGrid(std::span<const std::uint64_t> ks,
                                     std::uint32_t vocab_size) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t k : ks) {
    if (k >= 1 && k <= vocab_size) out.push_back(k);
  }
  return out;
}

}  // namespace rbpk
