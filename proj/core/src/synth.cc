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

#include "rbpk/synth.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "rbpk/error.h"
#include "rbpk/rank_stream.h"

namespace rbpk {
namespace {

// Ranks beyond this share the overflow bucket even if the vocabulary is
// larger; keeps the CDF table bounded.
constexpr std::uint32_t kMaxTableRanks = 1u << 26;

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

double UniformOpen01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t DeriveSeed(std::uint64_t master_seed, std::uint64_t index) {
  return SplitMix64(SplitMix64(master_seed) ^ (index + 1));
}

RankSampler::RankSampler(const LognormalParams& params, std::uint32_t vocab_size)
    : params_(params),
      vocab_size_(vocab_size),
      normalizer_(NormalizerExact(params, 1e-13)) {
  if (vocab_size < 2) {
    throw Error(ErrorKind::kValidation, "sampler needs vocab_size >= 2");
  }
  const std::uint32_t table = std::min(vocab_size, kMaxTableRanks);
  cdf_.reserve(table);
  // Compensated prefix sums over ranks 1..table-1; the last rank takes
  // whatever mass remains.
  double sum = 0.0, comp = 0.0;
  for (std::uint32_t r = 1; r < table; ++r) {
    const double p =
        std::exp(LogLognormalPdf(static_cast<double>(r), params) - normalizer_.log_c);
    const double y = p - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    cdf_.push_back(std::min(sum, 1.0));
    if (p == 0.0 && static_cast<double>(r) > std::exp(params.mu)) {
      // Remaining in-table ranks have zero mass.
      cdf_.resize(table - 1, cdf_.back());
      break;
    }
  }
  cdf_.push_back(1.0);
  const double last =
      std::exp(LogLognormalPdf(static_cast<double>(table), params) - normalizer_.log_c);
  clamped_mass_ = std::max(0.0, 1.0 - cdf_[table - 2] - last);
}

std::uint32_t RankSampler::Sample(Rng& rng) const {
  const double u = UniformOpen01(rng);
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  const auto idx = static_cast<std::uint32_t>(it - cdf_.begin());
  // The overflow bucket stands for every rank >= table size.
  return idx + 1 == cdf_.size() ? vocab_size_ : idx + 1;
}

double RankSampler::Pmf(std::uint32_t rank) const {
  if (rank < 1 || rank > vocab_size_) return 0.0;
  const std::size_t table = cdf_.size();
  if (rank >= table) {
    if (rank < vocab_size_) return 0.0;
    return cdf_[table - 1] - cdf_[table - 2];
  }
  return std::exp(LogLognormalPdf(static_cast<double>(rank), params_) - normalizer_.log_c);
}

double RankSampler::LogPmf(std::uint32_t rank) const {
  const std::size_t table = cdf_.size();
  if (rank >= 1 && rank < table) {
    return LogLognormalPdf(static_cast<double>(rank), params_) - normalizer_.log_c;
  }
  const double p = Pmf(rank);
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

void Trajectory::Validate() const {
  if (sizes.empty()) throw Error(ErrorKind::kValidation, "trajectory has no sizes");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw Error(ErrorKind::kValidation, "model size must be >= 1");
    if (i > 0 && sizes[i] <= sizes[i - 1]) {
      throw Error(ErrorKind::kValidation, "trajectory sizes must be strictly ascending");
    }
    const LognormalParams p = trend.At(static_cast<double>(sizes[i]));
    if (!(p.sigma > 0.0)) {
      throw Error(ErrorKind::kValidation,
                  "sigma(S) <= 0 at S=" + std::to_string(sizes[i]));
    }
  }
}

std::vector<SynthEntry> GenerateStreams(const Trajectory& trajectory,
                                        const SynthOptions& options,
                                        const std::filesystem::path& out_dir) {
  trajectory.Validate();
  if (options.tokens_per_size == 0) {
    throw Error(ErrorKind::kValidation, "tokens_per_size must be >= 1");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + out_dir.string());

  std::vector<SynthEntry> entries;
  for (std::size_t i = 0; i < trajectory.sizes.size(); ++i) {
    SynthEntry e;
    e.model_size = trajectory.sizes[i];
    e.seed = DeriveSeed(options.seed, i);
    e.params = trajectory.trend.At(static_cast<double>(e.model_size));
    e.path = out_dir / ("synth_S" + std::to_string(e.model_size) + ".rbpk");

    const RankSampler sampler(e.params, options.vocab_size);
    e.clamped_mass = sampler.clamped_mass();

    StreamMeta meta;
    meta.model_id = "synth-S" + std::to_string(e.model_size);
    meta.model_size = e.model_size;
    meta.vocab_size = options.vocab_size;
    meta.corpus_id = options.corpus_id;
    meta.token_count = options.tokens_per_size;
    meta.has_logprob = options.with_logprob;

    Rng rng(e.seed);
    RankStreamWriter writer(e.path, meta);
    for (std::uint64_t t = 0; t < options.tokens_per_size; ++t) {
      RankRecord r;
      r.rank = sampler.Sample(rng);
      if (options.with_logprob) {
        r.gt_logprob = std::min(0.0f, static_cast<float>(sampler.LogPmf(r.rank)));
      }
      writer.Append(r);
    }
    writer.Close();
    entries.push_back(std::move(e));
  }

  const auto manifest = out_dir / "manifest.txt";
  std::ofstream m(manifest, std::ios::trunc);
  if (!m) throw Error(ErrorKind::kIo, "cannot open " + manifest.string());
  m.precision(17);
  m << "# synthetic rank streams\n"
    << "# mu(S) = " << trajectory.trend.mu0 << " + " << trajectory.trend.mu_slope
    << " ln S; sigma(S) = " << trajectory.trend.sigma0 << " + "
    << trajectory.trend.sigma_slope << " ln S\n"
    << "# master_seed=" << options.seed << " tokens_per_size=" << options.tokens_per_size
    << " vocab_size=" << options.vocab_size << "\n"
    << "file,model_size,seed,mu,sigma,clamped_mass\n";
  for (const SynthEntry& e : entries) {
    m << e.path.filename().string() << ',' << e.model_size << ',' << e.seed << ','
      << e.params.mu << ',' << e.params.sigma << ',' << e.clamped_mass << '\n';
  }
  if (!m) throw Error(ErrorKind::kIo, "write failed: " + manifest.string());
  return entries;
}

}  // namespace rbpk
