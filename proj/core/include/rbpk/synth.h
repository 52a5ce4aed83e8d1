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

#ifndef RBPK_SYNTH_H_
#define RBPK_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rbpk/lognormal.h"

namespace rbpk {

using Rng = std::mt19937_64;

// Uniform double in the open interval (0, 1) from 53 random bits.
double UniformOpen01(Rng& rng);

// Deterministic per-stream seed derived from a master seed and an index.
std::uint64_t DeriveSeed(std::uint64_t master_seed, std::uint64_t index);

// Inversion sampler for the discrete lognormal rank model, truncated at
// vocab_size: every rank beyond the vocabulary is reported as vocab_size.
class RankSampler {
 public:
  RankSampler(const LognormalParams& params, std::uint32_t vocab_size);

  std::uint32_t Sample(Rng& rng) const;

  // Probability of rank r under the truncated model (rank vocab_size
  // includes the overflow tail).
  double Pmf(std::uint32_t rank) const;
  double LogPmf(std::uint32_t rank) const;
  // Model mass beyond vocab_size that was folded into the last rank.
  double clamped_mass() const { return clamped_mass_; }
  const NormalizerResult& normalizer() const { return normalizer_; }
  const LognormalParams& params() const { return params_; }
  std::uint32_t vocab_size() const { return vocab_size_; }

 private:
  LognormalParams params_;
  std::uint32_t vocab_size_;
  NormalizerResult normalizer_;
  std::vector<double> cdf_;  // cdf_[r-1] = P(R <= r), last entry is 1
  double clamped_mass_ = 0.0;
};

struct Trajectory {
  ParameterTrend trend;
  std::vector<std::uint64_t> sizes;  // ascending

  // Throws kValidation when sigma(S) <= 0 at a listed size or sizes are
  // not strictly ascending.
  void Validate() const;
};

struct SynthOptions {
  std::uint64_t tokens_per_size = 500'000;
  std::uint32_t vocab_size = 50257;
  std::uint64_t seed = 0;
  bool with_logprob = true;
  std::string corpus_id = "synthetic";
};

struct SynthEntry {
  std::filesystem::path path;
  std::uint64_t model_size = 0;
  std::uint64_t seed = 0;
  LognormalParams params;
  double clamped_mass = 0.0;
};

// One stream file per size ("synth_S<size>.rbpk") plus "manifest.txt".
std::vector<SynthEntry> GenerateStreams(const Trajectory& trajectory,
                                        const SynthOptions& options,
                                        const std::filesystem::path& out_dir);

}  // namespace rbpk

#endif  // RBPK_SYNTH_H_
