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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rbpk/error.h"

namespace rbpk {
namespace {

StreamMeta Meta(std::uint32_t vocab, bool logprob = false) {
  StreamMeta m;
  m.model_id = "toy";
  m.model_size = 1;
  m.vocab_size = vocab;
  m.corpus_id = "toy";
  m.has_logprob = logprob;
  return m;
}

RankHistogram FromCounts(const std::map<std::uint32_t, std::uint64_t>& counts,
                         std::uint32_t vocab) {
  RankHistogram h = RankHistogram::Empty(Meta(vocab));
  for (const auto& [r, n] : counts) {
    for (std::uint64_t i = 0; i < n; ++i) h.Add({r, {}});
  }
  return h;
}

TEST(RbpAtKTest, ToyExampleTopTwo) {
  // Three instances; ground truth lands in the top two once.
  const RankHistogram h = FromCounts({{2, 1}, {3, 1}, {5, 1}}, 10);
  EXPECT_DOUBLE_EQ(RbpAtK(h, 2), 1.0 / 3.0);
}

TEST(RbpAtKTest, HandCountedExample) {
  const RankHistogram h = FromCounts({{1, 7}, {5, 2}, {40, 1}}, 100);
  EXPECT_DOUBLE_EQ(RbpAtK(h, 10), 0.9);
}

TEST(RbpAtKTest, VocabEndpointIsExactlyOne) {
  const RankHistogram h = FromCounts({{1, 3}, {17, 2}, {50, 5}}, 50);
  EXPECT_EQ(RbpAtK(h, 50), 1.0);
}

TEST(RbpAtKTest, ZeroQualifyingIsZero) {
  const RankHistogram h = FromCounts({{5, 3}}, 10);
  EXPECT_EQ(RbpAtK(h, 4), 0.0);
}

TEST(RbpAtKTest, Errors) {
  const RankHistogram empty = RankHistogram::Empty(Meta(10));
  try {
    RbpAtK(empty, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateInput);
  }
  const RankHistogram h = FromCounts({{1, 1}}, 10);
  EXPECT_THROW(RbpAtK(h, 0), Error);
  EXPECT_THROW(RbpAtK(h, 11), Error);
}

TEST(RbpSweepTest, DefaultGridMatchesPointwise) {
  std::mt19937_64 rng(5);
  RankHistogram h = RankHistogram::Empty(Meta(50257));
  std::vector<std::uint32_t> ranks;
  for (int i = 0; i < 100'000; ++i) {
    // Heavy-ish tail: exponentiate a uniform.
    const double u = std::uniform_real_distribution<double>(0.0, 10.8)(rng);
    const auto r = std::min<std::uint32_t>(50257, 1 + static_cast<std::uint32_t>(std::exp(u) - 1));
    ranks.push_back(r);
    h.Add({r, {}});
  }
  const RbpCurve curve = RbpSweep(h, DefaultKGrid());
  ASSERT_EQ(curve.points.size(), DefaultKGrid().size());

  // Oracle: sort ranks, count with upper_bound.
  std::sort(ranks.begin(), ranks.end());
  double prev = 0.0;
  for (const auto& [k, rbp] : curve.points) {
    EXPECT_EQ(rbp, RbpAtK(h, k));
    const auto hits = std::upper_bound(ranks.begin(), ranks.end(), k) - ranks.begin();
    EXPECT_DOUBLE_EQ(rbp, static_cast<double>(hits) / ranks.size());
    EXPECT_GE(rbp, prev);
    EXPECT_LE(rbp, 1.0);
    prev = rbp;
  }
}

TEST(RbpSweepTest, RejectsUnsortedOrOversizedGrid) {
  const RankHistogram h = FromCounts({{1, 1}}, 100);
  const std::vector<std::uint64_t> unsorted = {10, 1};
  const std::vector<std::uint64_t> dup = {1, 1};
  const std::vector<std::uint64_t> big = {1, 101};
  EXPECT_THROW(RbpSweep(h, unsorted), Error);
  EXPECT_THROW(RbpSweep(h, dup), Error);
  EXPECT_THROW(RbpSweep(h, big), Error);
  EXPECT_THROW(RbpSweep(h, std::span<const std::uint64_t>{}), Error);
}

TEST(RbpSweepTest, ClipKGridDropsEntriesAboveVocab) {
  EXPECT_EQ(ClipKGrid(DefaultKGrid(), 1000),
            (std::vector<std::uint64_t>{1, 10, 50, 100, 500}));
}

TEST(CrossEntropyTest, ToyProbabilities) {
  RankHistogram h = RankHistogram::Empty(Meta(10, true));
  const double ps[] = {0.21, 0.28, 0.19};
  double expected = 0.0;
  for (double p : ps) {
    h.Add({1, static_cast<float>(std::log(p))});
    expected -= std::log(p) / 3.0;
  }
  // f32 storage limits agreement to ~1e-7 relative.
  EXPECT_NEAR(CrossEntropy(h), expected, 1e-6);
  EXPECT_NEAR(expected, 1.498, 5e-4);
}

TEST(CrossEntropyTest, CertainModelIsZero) {
  RankHistogram h = RankHistogram::Empty(Meta(10, true));
  for (int i = 0; i < 5; ++i) h.Add({1, 0.0f});
  EXPECT_EQ(CrossEntropy(h), 0.0);
}

TEST(CrossEntropyTest, UniformModelIsLogVocab) {
  RankHistogram h = RankHistogram::Empty(Meta(50257, true));
  for (std::uint32_t r = 1; r <= 1000; ++r) {
    h.Add({r, static_cast<float>(-std::log(50257.0))});
  }
  EXPECT_NEAR(CrossEntropy(h), std::log(50257.0), 1e-6 * std::log(50257.0));
}

TEST(CrossEntropyTest, MissingLogprobIsCapabilityError) {
  const RankHistogram h = FromCounts({{1, 3}}, 10);
  try {
    CrossEntropy(h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCapability);
  }
}

TEST(CrossEntropyTest, HistogramMatchesRecordByRecord) {
  std::mt19937_64 rng(9);
  RankHistogram h = RankHistogram::Empty(Meta(1000, true));
  double direct = 0.0;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) {
    const float lp = -std::uniform_real_distribution<float>(0.0f, 12.0f)(rng);
    h.Add({1 + static_cast<std::uint32_t>(rng() % 1000), lp});
    direct += -static_cast<double>(lp);
  }
  direct /= n;
  EXPECT_NEAR(CrossEntropy(h), direct, 1e-6 * direct);
}

}  // namespace
}  // namespace rbpk
