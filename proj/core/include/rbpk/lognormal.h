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

// Discrete lognormal rank model.
//
// The ground-truth rank r >= 1 is modeled as p_r = psi(r) / c(mu, sigma),
// where psi is the continuous lognormal density
//
//   psi(x) = exp(-(ln x - mu)^2 / (2 sigma^2)) / (sqrt(2 pi) sigma x)
//
// and c(mu, sigma) = sum_{r >= 1} psi(r). Series quantities (c, the exact
// cross-entropy) are summed term by term until an integral bracket on the
// remaining tail certifies the requested relative tolerance. Everything is
// carried in the log domain so that parameters with astronomically small
// c (very negative mu, small sigma) still produce finite answers.

#ifndef RBPK_LOGNORMAL_H_
#define RBPK_LOGNORMAL_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rbpk/power_law.h"
#include "rbpk/rank_stream.h"

namespace rbpk {

struct LognormalParams {
  double mu = 0.0;
  double sigma = 1.0;  // > 0
};

void ValidateParams(const LognormalParams& params);

// psi(x; mu, sigma). Throws kDomain for x <= 0.
double LognormalPdf(double x, const LognormalParams& params);
double LogLognormalPdf(double x, const LognormalParams& params);

// Closed forms of the integrals of psi over [1, inf):
//   p_tail = int psi            = Phi(mu / sigma)
//   i1     = int psi * ln x     = mu * P + sigma * phi(a)
//   i2     = int psi * ln^2 x   = (mu^2 + sigma^2) * P + mu * sigma * phi(a)
// with a = -mu / sigma and psi1 = psi(1) = phi(a) / sigma.
struct TruncatedMoments {
  double a = 0.0;
  double p_tail = 0.0;
  double i1 = 0.0;
  double i2 = 0.0;
  double psi1 = 0.0;
};

TruncatedMoments ComputeTruncatedMoments(const LognormalParams& params);

struct NormalizerResult {
  double c = 0.0;      // may underflow to 0; log_c is always finite
  double log_c = 0.0;
  std::int64_t terms_used = 0;
  double tail_bound = 0.0;      // absolute bound on |c - true c|
  double rel_tail_bound = 0.0;  // tail_bound / c
};

inline constexpr std::int64_t kMaxSeriesTerms = 100'000'000;

// c(mu, sigma) to relative tolerance rel_tol in (0, 1e-3]. Throws
// kConvergence if kMaxSeriesTerms terms do not suffice.
NormalizerResult NormalizerExact(const LognormalParams& params,
                                 double rel_tol = 1e-12);

// c ~ psi(1)/2 + Phi(mu/sigma).
double NormalizerApprox(const LognormalParams& params);

// -ln p_1 = ln c + ln(sqrt(2 pi) sigma) + mu^2 / (2 sigma^2).
double NegLogP1(const LognormalParams& params, double c);
double NegLogP1(const LognormalParams& params, const NormalizerResult& c);

struct CeResult {
  double ce = 0.0;
  double mass = 0.0;  // summed p_r plus the integrated tail; ~1 as a sanity check
  std::int64_t terms_used = 0;
  double tail_bound = 0.0;
  NormalizerResult normalizer;
};

// Entropy of the discrete model, -sum p_r ln p_r, with exact c.
CeResult CeExact(const LognormalParams& params, double rel_tol = 1e-10);

// Closed-form approximation using NormalizerApprox for c.
double CeApprox(const LognormalParams& params);

// sum_{j <= k} psi(j) / c.
double RbpKModel(const LognormalParams& params, std::uint64_t k, double c);
double RbpKModel(const LognormalParams& params, std::uint64_t k,
                 const NormalizerResult& c);

// Discrete log-likelihood sum_r n_r ln(psi(r) / c).
double LogLikelihood(const RankHistogram& hist, const LognormalParams& params,
                     double rel_tol = 1e-12);

struct LognormalFitOptions {
  double mu_min = -10.0;
  double mu_max = 10.0;
  double sigma_min = 0.1;
  double sigma_max = 8.0;
  int mu_grid = 41;
  int sigma_grid = 32;
  double rel_tol = 1e-11;
};

struct LognormalFit {
  LognormalParams params;
  double log_likelihood = 0.0;
  double tv_distance = 0.0;  // over observed support
  bool at_boundary = false;
  int evaluations = 0;
  std::vector<std::string> warnings;
};

// Maximum-likelihood (mu, sigma): coarse grid then Nelder-Mead refinement.
// Throws kValidation when total < 1000, kDegeneracy on a single rank.
LognormalFit FitLognormal(const RankHistogram& hist,
                          const LognormalFitOptions& options = {});

// mu(S) = mu0 + mu_slope ln S, sigma(S) = sigma0 + sigma_slope ln S.
struct ParameterTrend {
  double mu0 = 0.0;
  double mu_slope = 0.0;
  double sigma0 = 1.0;
  double sigma_slope = 0.0;

  LognormalParams At(double model_size) const;
};

// Least-squares line through per-size (ln S, mu) and (ln S, sigma).
ParameterTrend FitParameterTrend(
    std::span<const std::pair<double, LognormalParams>> trajectory);

struct PredictedPoint {
  double model_size = 0.0;
  LognormalParams params;
  double log_c = 0.0;
  double ce = 0.0;
  double neg_log_rbp = 0.0;
};

struct PredictedScaling {
  std::uint64_t k = 1;
  std::vector<PredictedPoint> points;
  PowerLawFit ce_fit;
  PowerLawFit rbp_fit;
  double slope_difference = 0.0;  // |slope_CE - slope_RBP_k|
};

// Model-implied CE and -ln RBP_k per size (exact normalizer), each fitted
// with FitPowerLaw. Needs at least 3 sizes.
PredictedScaling PredictScaling(
    std::span<const std::pair<double, LognormalParams>> trajectory,
    std::uint64_t k, double rel_tol = 1e-10);

}  // namespace rbpk

#endif  // RBPK_LOGNORMAL_H_
