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

#include "rbpk/lognormal.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "rbpk/error.h"
#include "rbpk/normal.h"

namespace rbpk {
namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void Add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

void RequireTolerance(double rel_tol) {
  if (!(rel_tol > 0.0 && rel_tol <= 1e-3)) {
    throw Error(ErrorKind::kValidation, "rel_tol must lie in (0, 1e-3]");
  }
}

std::string Describe(const LognormalParams& p) {
  std::ostringstream os;
  os.precision(10);
  os << "(mu=" << p.mu << ", sigma=" << p.sigma << ")";
  return os.str();
}

// First integer at or above e^t, or 1. Throws if beyond the term cap.
std::int64_t CeilExp(double t, const LognormalParams& p) {
  if (t <= 0.0) return 1;
  if (t > std::log(static_cast<double>(kMaxSeriesTerms))) {
    throw Error(ErrorKind::kConvergence,
                "series for " + Describe(p) + " peaks beyond the term cap");
  }
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(std::exp(t))));
}

// ln of int_x^inf psi.
double LogUpperIntegral(double x, const LognormalParams& p) {
  return LogNormalSf((std::log(x) - p.mu) / p.sigma);
}

bool CheckpointDue(std::int64_t k, std::int64_t first) {
  return k >= first && (k - first < 64 || (k & 31) == 0);
}

}  // namespace

void ValidateParams(const LognormalParams& params) {
  if (!(params.sigma > 0.0) || !std::isfinite(params.sigma) ||
      !std::isfinite(params.mu)) {
    throw Error(ErrorKind::kValidation,
                "lognormal params need finite mu and sigma > 0, got " +
                    Describe(params));
  }
}

double LogLognormalPdf(double x, const LognormalParams& params) {
  if (!(x > 0.0)) {
    throw Error(ErrorKind::kDomain, "lognormal density needs x > 0");
  }
  const double lx = std::log(x);
  const double z = (lx - params.mu) / params.sigma;
  return -0.5 * z * z - lx - std::log(params.sigma) - kLogSqrt2Pi;
}

double LognormalPdf(double x, const LognormalParams& params) {
  return std::exp(LogLognormalPdf(x, params));
}

TruncatedMoments ComputeTruncatedMoments(const LognormalParams& params) {
  ValidateParams(params);
  const double mu = params.mu;
  const double sigma = params.sigma;
  TruncatedMoments m;
  m.a = -mu / sigma;
  m.p_tail = NormalCdf(mu / sigma);
  const double phi_a = NormalPdf(m.a);
  m.psi1 = phi_a / sigma;
  m.i1 = mu * m.p_tail + sigma * phi_a;
  m.i2 = (mu * mu + sigma * sigma) * m.p_tail + mu * sigma * phi_a;
  return m;
}

NormalizerResult NormalizerExact(const LognormalParams& params, double rel_tol) {
  ValidateParams(params);
  RequireTolerance(rel_tol);
  const double mu = params.mu;
  const double s2 = params.sigma * params.sigma;

  // psi is unimodal in ln x with peak at ln x = mu - sigma^2; it decreases
  // from there on and is convex once ln x >= mu + sigma^2 (sqrt(1/4 +
  // 1/sigma^2) - 3/2).
  const std::int64_t k_dec = CeilExp(mu - s2, params);
  const std::int64_t k_convex =
      CeilExp(mu + s2 * (std::sqrt(0.25 + 1.0 / s2) - 1.5), params);

  double shift = LogLognormalPdf(1.0, params);
  for (double cand : {std::floor(std::exp(std::max(0.0, mu - s2))),
                      static_cast<double>(k_dec)}) {
    if (cand >= 1.0) shift = std::max(shift, LogLognormalPdf(cand, params));
  }

  CompensatedSum sum;
  for (std::int64_t k = 1; k <= kMaxSeriesTerms; ++k) {
    const double x = static_cast<double>(k);
    const double term = std::exp(LogLognormalPdf(x, params) - shift);
    sum.Add(term);
    if (!CheckpointDue(k, k_dec)) continue;

    // Sum over j > k, scaled by e^-shift. Decreasing summand:
    //   int_{k+1}^inf psi <= tail <= int_k^inf psi.
    // Convex summand (trapezoid / midpoint comparison):
    //   int_k^inf psi - psi(k)/2 <= tail <= int_{k+1/2}^inf psi.
    const double upper_k = std::exp(LogUpperIntegral(x, params) - shift);
    double lower = std::exp(LogUpperIntegral(x + 1.0, params) - shift);
    double upper = upper_k;
    if (k >= k_convex) {
      lower = std::max(lower, upper_k - 0.5 * term);
      upper = std::min(upper, std::exp(LogUpperIntegral(x + 0.5, params) - shift));
    }
    const double partial = sum.value();
    const double width = upper - lower;
    if (width <= rel_tol * (partial + lower)) {
      const double scaled = partial + 0.5 * (lower + upper);
      NormalizerResult r;
      r.log_c = shift + std::log(scaled);
      r.c = std::exp(r.log_c);
      r.terms_used = k;
      r.rel_tail_bound = 0.5 * width / scaled;
      r.tail_bound = r.rel_tail_bound * r.c;
      return r;
    }
  }
  throw Error(ErrorKind::kConvergence,
              "normalizer for " + Describe(params) + " did not reach rel_tol " +
                  std::to_string(rel_tol) + " within the term cap");
}

double NormalizerApprox(const LognormalParams& params) {
  const TruncatedMoments m = ComputeTruncatedMoments(params);
  return 0.5 * m.psi1 + m.p_tail;
}

double NegLogP1(const LognormalParams& params, double c) {
  ValidateParams(params);
  if (!(c > 0.0)) throw Error(ErrorKind::kDomain, "normalizer must be positive");
  return std::log(c) + std::log(kSqrt2Pi * params.sigma) +
         params.mu * params.mu / (2.0 * params.sigma * params.sigma);
}

double NegLogP1(const LognormalParams& params, const NormalizerResult& c) {
  ValidateParams(params);
  return c.log_c + std::log(kSqrt2Pi * params.sigma) +
         params.mu * params.mu / (2.0 * params.sigma * params.sigma);
}

CeResult CeExact(const LognormalParams& params, double rel_tol) {
  ValidateParams(params);
  RequireTolerance(rel_tol);
  CeResult out;
  out.normalizer = NormalizerExact(params, std::max(rel_tol * 1e-3, 1e-15));
  const double log_c = out.normalizer.log_c;
  const double mu = params.mu;
  const double sigma = params.sigma;
  const std::int64_t k_peak = CeilExp(mu - sigma * sigma, params);

  // Tail of sum_j psi(j) (ln c - ln psi(j)) / c from x onward, integrated in
  // closed form via the truncated normal moments at z = (ln x - mu)/sigma.
  const double level = log_c + kLogSqrt2Pi + std::log(sigma) + mu + 0.5;
  auto tail_integral = [&](double x) {
    const double z = (std::log(x) - mu) / sigma;
    const double q = std::exp(LogNormalSf(z) - log_c);
    const double phi = std::exp(LogNormalPdf(z) - log_c);
    return level * q + (sigma + 0.5 * z) * phi;
  };

  CompensatedSum ce, mass;
  for (std::int64_t k = 1; k <= kMaxSeriesTerms; ++k) {
    const double x = static_cast<double>(k);
    const double log_p = LogLognormalPdf(x, params) - log_c;
    const double p = std::exp(log_p);
    if (p > 0.0) {
      ce.Add(-p * log_p);
      mass.Add(p);
    }
    // The summand psi (ln c - ln psi) decreases past the mode once
    // psi < c / e, i.e. ln p < -1.
    if (!CheckpointDue(k, k_peak) || log_p >= -1.0) continue;
    const double upper = tail_integral(x);
    const double lower = tail_integral(x + 1.0);
    const double partial = ce.value();
    if (upper - lower <= rel_tol * partial || upper - lower <= 1e-300) {
      out.ce = std::max(0.0, partial + 0.5 * (upper + lower));
      const double q_hi = std::exp(LogNormalSf((std::log(x) - mu) / sigma) - log_c);
      const double q_lo = std::exp(LogNormalSf((std::log(x + 1.0) - mu) / sigma) - log_c);
      out.mass = mass.value() + 0.5 * (q_hi + q_lo);
      out.terms_used = k;
      out.tail_bound = 0.5 * (upper - lower);
      return out;
    }
  }
  throw Error(ErrorKind::kConvergence,
              "cross-entropy series for " + Describe(params) +
                  " did not converge within the term cap");
}

double CeApprox(const LognormalParams& params) {
  const TruncatedMoments m = ComputeTruncatedMoments(params);
  const double mu = params.mu;
  const double sigma = params.sigma;
  const double s2 = sigma * sigma;
  const double c = 0.5 * m.psi1 + m.p_tail;
  const double phi_a = NormalPdf(m.a);
  const double bracket = m.p_tail * ((s2 - mu * mu) / (2.0 * s2) + mu) +
                         phi_a * (sigma - mu / (2.0 * sigma));
  return std::log(kSqrt2Pi * sigma) + std::log(c) + mu * mu / (2.0 * s2) +
         bracket / c;
}

double RbpKModel(const LognormalParams& params, std::uint64_t k, double c) {
  if (!(c > 0.0)) throw Error(ErrorKind::kDomain, "normalizer must be positive");
  NormalizerResult n;
  n.c = c;
  n.log_c = std::log(c);
  return RbpKModel(params, k, n);
}

double RbpKModel(const LognormalParams& params, std::uint64_t k,
                 const NormalizerResult& c) {
  ValidateParams(params);
  if (k < 1) throw Error(ErrorKind::kValidation, "k must be >= 1");
  CompensatedSum s;
  for (std::uint64_t j = 1; j <= k; ++j) {
    const double v = std::exp(LogLognormalPdf(static_cast<double>(j), params) - c.log_c);
    s.Add(v);
    // Past the peak the remaining terms cannot move the sum.
    if (v == 0.0 && static_cast<double>(j) > std::exp(params.mu)) break;
  }
  return std::min(1.0, s.value());
}

namespace {

struct LogMoments {
  double n = 0.0;   // sum n_r
  double s1 = 0.0;  // sum n_r ln r
  double s2 = 0.0;  // sum n_r ln^2 r
};

LogMoments ComputeLogMoments(const RankHistogram& hist) {
  LogMoments m;
  for (const auto& [rank, count] : hist.counts) {
    const double w = static_cast<double>(count);
    const double lr = std::log(static_cast<double>(rank));
    m.n += w;
    m.s1 += w * lr;
    m.s2 += w * lr * lr;
  }
  return m;
}

double LogLikelihoodFromMoments(const LogMoments& m, const LognormalParams& p,
                                double log_c) {
  const double s2 = p.sigma * p.sigma;
  const double quad = m.s2 - 2.0 * p.mu * m.s1 + p.mu * p.mu * m.n;
  return -m.s1 - m.n * (std::log(p.sigma) + kLogSqrt2Pi) - quad / (2.0 * s2) -
         m.n * log_c;
}

double TotalVariation(const RankHistogram& hist, const LognormalParams& p,
                      double log_c) {
  const double total = static_cast<double>(hist.total);
  double tv = 0.0;
  for (const auto& [rank, count] : hist.counts) {
    const double model =
        std::exp(LogLognormalPdf(static_cast<double>(rank), p) - log_c);
    tv += std::abs(static_cast<double>(count) / total - model);
  }
  return 0.5 * tv;
}

}  // namespace

double LogLikelihood(const RankHistogram& hist, const LognormalParams& params,
                     double rel_tol) {
  const NormalizerResult c = NormalizerExact(params, rel_tol);
  return LogLikelihoodFromMoments(ComputeLogMoments(hist), params, c.log_c);
}

LognormalFit FitLognormal(const RankHistogram& hist,
                          const LognormalFitOptions& options) {
  if (hist.total < 1000) {
    throw Error(ErrorKind::kValidation,
                "lognormal fit needs at least 1000 records, got " +
                    std::to_string(hist.total));
  }
  if (hist.counts.size() < 2) {
    throw Error(ErrorKind::kDegeneracy,
                "lognormal fit is degenerate: every record has rank " +
                    std::to_string(hist.counts.begin()->first));
  }
  const LogMoments moments = ComputeLogMoments(hist);
  LognormalFit fit;

  const double log_sigma_min = std::log(options.sigma_min);
  const double log_sigma_max = std::log(options.sigma_max);
  auto objective = [&](double mu, double log_sigma) {
    if (mu < options.mu_min || mu > options.mu_max || log_sigma < log_sigma_min ||
        log_sigma > log_sigma_max) {
      return -std::numeric_limits<double>::infinity();
    }
    ++fit.evaluations;
    const LognormalParams p{mu, std::exp(log_sigma)};
    const double log_c = NormalizerExact(p, options.rel_tol).log_c;
    return LogLikelihoodFromMoments(moments, p, log_c);
  };

  // Coarse grid. Ascending mu, then ascending sigma; a cell replaces the
  // incumbent only when strictly better.
  double best_mu = options.mu_min, best_ls = log_sigma_min;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < options.mu_grid; ++i) {
    const double mu = options.mu_min + (options.mu_max - options.mu_min) * i /
                                           std::max(1, options.mu_grid - 1);
    for (int j = 0; j < options.sigma_grid; ++j) {
      const double ls = log_sigma_min + (log_sigma_max - log_sigma_min) * j /
                                            std::max(1, options.sigma_grid - 1);
      const double v = objective(mu, ls);
      if (v > best) {
        best = v;
        best_mu = mu;
        best_ls = ls;
      }
    }
  }

  // Nelder-Mead on (mu, ln sigma).
  struct Vertex {
    double x[2];
    double f;  // negated log-likelihood
  };
  const double step_mu = (options.mu_max - options.mu_min) /
                         std::max(1, options.mu_grid - 1);
  const double step_ls = (log_sigma_max - log_sigma_min) /
                         std::max(1, options.sigma_grid - 1);
  auto eval = [&](const double x[2]) { return -objective(x[0], x[1]); };
  std::array<Vertex, 3> simplex;
  const double starts[3][2] = {{best_mu, best_ls},
                               {best_mu + 0.5 * step_mu, best_ls},
                               {best_mu, best_ls + 0.5 * step_ls}};
  for (int v = 0; v < 3; ++v) {
    simplex[v].x[0] = starts[v][0];
    simplex[v].x[1] = starts[v][1];
    simplex[v].f = eval(simplex[v].x);
    if (!std::isfinite(simplex[v].f)) {
      simplex[v].x[0] = best_mu - 0.5 * step_mu * (v == 1);
      simplex[v].x[1] = best_ls - 0.5 * step_ls * (v == 2);
      simplex[v].f = eval(simplex[v].x);
    }
  }
  for (int iter = 0; iter < 2000; ++iter) {
    std::sort(simplex.begin(), simplex.end(),
              [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    const double size = std::max(
        {std::abs(simplex[1].x[0] - simplex[0].x[0]),
         std::abs(simplex[2].x[0] - simplex[0].x[0]),
         std::abs(simplex[1].x[1] - simplex[0].x[1]),
         std::abs(simplex[2].x[1] - simplex[0].x[1])});
    if (size < 1e-10) break;
    double centroid[2], trial[2];
    for (int d = 0; d < 2; ++d) centroid[d] = 0.5 * (simplex[0].x[d] + simplex[1].x[d]);
    auto along = [&](double t, double out[2]) {
      for (int d = 0; d < 2; ++d) out[d] = centroid[d] + t * (simplex[2].x[d] - centroid[d]);
    };
    along(-1.0, trial);
    const double f_r = eval(trial);
    if (f_r < simplex[0].f) {
      double expanded[2];
      along(-2.0, expanded);
      const double f_e = eval(expanded);
      if (f_e < f_r) {
        simplex[2] = {{expanded[0], expanded[1]}, f_e};
      } else {
        simplex[2] = {{trial[0], trial[1]}, f_r};
      }
      continue;
    }
    if (f_r < simplex[1].f) {
      simplex[2] = {{trial[0], trial[1]}, f_r};
      continue;
    }
    double contracted[2];
    along(f_r < simplex[2].f ? -0.5 : 0.5, contracted);
    const double f_c = eval(contracted);
    if (f_c < std::min(f_r, simplex[2].f)) {
      simplex[2] = {{contracted[0], contracted[1]}, f_c};
      continue;
    }
    for (int v = 1; v < 3; ++v) {
      for (int d = 0; d < 2; ++d) {
        simplex[v].x[d] = simplex[0].x[d] + 0.5 * (simplex[v].x[d] - simplex[0].x[d]);
      }
      simplex[v].f = eval(simplex[v].x);
    }
  }
  const Vertex& top = *std::min_element(
      simplex.begin(), simplex.end(),
      [](const Vertex& a, const Vertex& b) { return a.f < b.f; });

  fit.params = {top.x[0], std::exp(top.x[1])};
  fit.log_likelihood = -top.f;
  const double log_c = NormalizerExact(fit.params, options.rel_tol).log_c;
  fit.tv_distance = TotalVariation(hist, fit.params, log_c);

  constexpr double kEdge = 1e-6;
  if (fit.params.mu - options.mu_min < kEdge || options.mu_max - fit.params.mu < kEdge ||
      top.x[1] - log_sigma_min < kEdge || log_sigma_max - top.x[1] < kEdge) {
    fit.at_boundary = true;
    fit.warnings.push_back("optimum " + Describe(fit.params) +
                           " lies on the search box boundary");
  }
  return fit;
}

LognormalParams ParameterTrend::At(double model_size) const {
  const double ls = std::log(model_size);
  return {mu0 + mu_slope * ls, sigma0 + sigma_slope * ls};
}

ParameterTrend FitParameterTrend(
    std::span<const std::pair<double, LognormalParams>> trajectory) {
  if (trajectory.size() < 2) {
    throw Error(ErrorKind::kUnderdetermined,
                "parameter trend needs at least 2 sizes");
  }
  const double n = static_cast<double>(trajectory.size());
  double xm = 0.0, mm = 0.0, sm = 0.0;
  for (const auto& [size, p] : trajectory) {
    xm += std::log(size);
    mm += p.mu;
    sm += p.sigma;
  }
  xm /= n;
  mm /= n;
  sm /= n;
  double sxx = 0.0, sxm = 0.0, sxs = 0.0;
  for (const auto& [size, p] : trajectory) {
    const double dx = std::log(size) - xm;
    sxx += dx * dx;
    sxm += dx * (p.mu - mm);
    sxs += dx * (p.sigma - sm);
  }
  if (sxx == 0.0) {
    throw Error(ErrorKind::kUnderdetermined,
                "parameter trend needs at least 2 distinct sizes");
  }
  ParameterTrend t;
  t.mu_slope = sxm / sxx;
  t.mu0 = mm - t.mu_slope * xm;
  t.sigma_slope = sxs / sxx;
  t.sigma0 = sm - t.sigma_slope * xm;
  return t;
}

PredictedScaling PredictScaling(
    std::span<const std::pair<double, LognormalParams>> trajectory,
    std::uint64_t k, double rel_tol) {
  if (trajectory.size() < 3) {
    throw Error(ErrorKind::kUnderdetermined,
                "predicted scaling needs at least 3 model sizes");
  }
  PredictedScaling out;
  out.k = k;
  std::vector<ScalingPoint> ce_pts, rbp_pts;
  for (const auto& [size, params] : trajectory) {
    const CeResult ce = CeExact(params, rel_tol);
    PredictedPoint pt;
    pt.model_size = size;
    pt.params = params;
    pt.log_c = ce.normalizer.log_c;
    pt.ce = ce.ce;
    pt.neg_log_rbp = -std::log(RbpKModel(params, k, ce.normalizer));
    out.points.push_back(pt);
    ce_pts.push_back({size, pt.ce});
    rbp_pts.push_back({size, pt.neg_log_rbp});
  }
  out.ce_fit = FitPowerLaw(ce_pts);
  out.rbp_fit = FitPowerLaw(rbp_pts);
  out.slope_difference = std::abs(out.ce_fit.slope - out.rbp_fit.slope);
  return out;
}

}  // namespace rbpk
