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

#include "rbpk/emergence.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "rbpk/error.h"

namespace rbpk {
namespace {

void ValidateSpec(const EmergenceSpec& spec) {
  if (spec.n_tokens == 0 || spec.k == 0 || !(spec.c_const > 0.0) ||
      !(spec.alpha > 0.0)) {
    throw Error(ErrorKind::kValidation,
                "emergence spec needs positive N, k, C and alpha");
  }
}

// Per-(N, k) running state for a single pass over ranks.
class WindowCounter {
 public:
  WindowCounter(std::span<const std::uint64_t> n_grid,
                std::span<const std::uint64_t> k_grid)
      : n_grid_(n_grid.begin(), n_grid.end()),
        k_grid_(k_grid.begin(), k_grid.end()),
        runs_(k_grid.size(), 0),
        counts_(n_grid.size(), std::vector<WindowCount>(k_grid.size())) {
    for (std::uint64_t n : n_grid_) {
      if (n == 0) throw Error(ErrorKind::kValidation, "window length N must be >= 1");
    }
  }

  void StartDocument() {
    pos_in_doc_ = 0;
    std::fill(runs_.begin(), runs_.end(), 0);
  }

  void Push(std::uint32_t rank) {
    ++pos_in_doc_;
    for (std::size_t j = 0; j < k_grid_.size(); ++j) {
      runs_[j] = rank <= k_grid_[j] ? runs_[j] + 1 : 0;
    }
    for (std::size_t i = 0; i < n_grid_.size(); ++i) {
      if (pos_in_doc_ < n_grid_[i]) continue;
      for (std::size_t j = 0; j < k_grid_.size(); ++j) {
        ++counts_[i][j].windows;
        if (runs_[j] >= n_grid_[i]) ++counts_[i][j].hits;
      }
    }
  }

  std::vector<std::vector<WindowCount>> Take() { return std::move(counts_); }

 private:
  std::vector<std::uint64_t> n_grid_;
  std::vector<std::uint64_t> k_grid_;
  std::vector<std::uint64_t> runs_;
  std::vector<std::vector<WindowCount>> counts_;
  std::uint64_t pos_in_doc_ = 0;
};

}  // namespace

double SequenceSuccess(double rbp_k, std::uint64_t n_tokens) {
  if (!(rbp_k > 0.0 && rbp_k <= 1.0)) {
    throw Error(ErrorKind::kDomain, "sequence success needs 0 < RBP_k <= 1");
  }
  if (n_tokens == 0) throw Error(ErrorKind::kValidation, "N must be >= 1");
  return std::exp(static_cast<double>(n_tokens) * std::log(rbp_k));
}

std::vector<std::pair<double, double>> EmergenceCurve(
    const EmergenceSpec& spec, std::span<const double> sizes) {
  ValidateSpec(spec);
  if (sizes.empty()) throw Error(ErrorKind::kValidation, "no model sizes given");
  std::vector<std::pair<double, double>> out;
  out.reserve(sizes.size());
  const double cn = spec.c_const * static_cast<double>(spec.n_tokens);
  for (double s : sizes) {
    if (!(s > 0.0)) throw Error(ErrorKind::kValidation, "model size must be > 0");
    out.emplace_back(s, std::exp(-cn * std::pow(s, -spec.alpha)));
  }
  return out;
}

double HalfPoint(const EmergenceSpec& spec) {
  ValidateSpec(spec);
  return std::pow(
      spec.c_const * static_cast<double>(spec.n_tokens) / std::numbers::ln2,
      1.0 / spec.alpha);
}

EmergenceFit FitEmergence(std::span<const EmergenceObservation> observations) {
  if (observations.size() < 3) {
    throw Error(ErrorKind::kUnderdetermined,
                "emergence fit needs at least 3 observations");
  }
  std::set<double> sizes;
  for (const EmergenceObservation& o : observations) {
    if (!(o.p > 0.0 && o.p < 1.0)) {
      throw Error(ErrorKind::kDomain, "emergence fit needs 0 < p < 1 (N=" +
                                          std::to_string(o.n_tokens) + ", S=" +
                                          std::to_string(o.model_size) + ")");
    }
    if (o.n_tokens == 0 || !(o.model_size > 0.0)) {
      throw Error(ErrorKind::kValidation, "observation needs N >= 1 and S > 0");
    }
    sizes.insert(o.model_size);
  }
  if (sizes.size() < 2) {
    throw Error(ErrorKind::kUnderdetermined,
                "emergence fit needs at least 2 distinct model sizes");
  }

  // y = ln(-ln p) - ln N = ln C - alpha ln S
  const double n = static_cast<double>(observations.size());
  std::vector<double> xs, ys;
  double xm = 0.0, ym = 0.0;
  for (const EmergenceObservation& o : observations) {
    xs.push_back(std::log(o.model_size));
    ys.push_back(std::log(-std::log(o.p)) - std::log(static_cast<double>(o.n_tokens)));
    xm += xs.back();
    ym += ys.back();
  }
  xm /= n;
  ym /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - xm) * (xs[i] - xm);
    sxy += (xs[i] - xm) * (ys[i] - ym);
    syy += (ys[i] - ym) * (ys[i] - ym);
  }
  const double slope = sxy / sxx;
  const double intercept = ym - slope * xm;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    ss_res += r * r;
  }
  EmergenceFit fit;
  fit.alpha = -slope;
  fit.c_const = std::exp(intercept);
  fit.r2 = syy == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  fit.n_points = static_cast<int>(observations.size());
  return fit;
}

WindowCount CountSuccessWindows(std::span<const std::uint32_t> ranks,
                                std::uint64_t n_tokens, std::uint64_t k,
                                std::span<const std::uint64_t> doc_starts) {
  const std::uint64_t n_grid[] = {n_tokens};
  const std::uint64_t k_grid[] = {k};
  WindowCounter counter(n_grid, k_grid);
  std::size_t next_doc = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    while (next_doc < doc_starts.size() && doc_starts[next_doc] <= i) {
      if (doc_starts[next_doc] == i) counter.StartDocument();
      ++next_doc;
    }
    counter.Push(ranks[i]);
  }
  return counter.Take()[0][0];
}

std::vector<std::vector<WindowCount>> CountSuccessWindows(
    const std::filesystem::path& stream_path,
    std::span<const std::uint64_t> n_grid, std::span<const std::uint64_t> k_grid) {
  std::vector<std::uint64_t> starts = ReadDocumentStarts(stream_path);
  std::sort(starts.begin(), starts.end());
  WindowCounter counter(n_grid, k_grid);
  RankStreamReader reader(stream_path);
  RankRecord r;
  std::uint64_t index = 0;
  std::size_t next_doc = 0;
  while (reader.Next(&r)) {
    while (next_doc < starts.size() && starts[next_doc] <= index) {
      if (starts[next_doc] == index) counter.StartDocument();
      ++next_doc;
    }
    counter.Push(r.rank);
    ++index;
  }
  return counter.Take();
}

}  // namespace rbpk
