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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Each criterion also has a wall-clock budget that counts toward
// its verdict.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"
#include "rbpk/emergence.h"
#include "rbpk/lognormal.h"
#include "rbpk/normal.h"
#include "rbpk/power_law.h"
#include "rbpk/rank_stream.h"
#include "rbpk/rbp_metrics.h"
#include "rbpk/synth.h"

namespace rbpk {
namespace {

namespace fs = std::filesystem;

// Collects sub-checks of one criterion.
class Check {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok) {
      ok_ = false;
      if (failures_.size() < 8) failures_.push_back(what);
    }
  }
  void Note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return ok_; }
  std::string Detail() const {
    std::string d;
    for (const auto& n : notes_) d += (d.empty() ? "" : "; ") + n;
    for (const auto& f : failures_) d += (d.empty() ? "" : "; ") + ("FAILED: " + f);
    return d;
  }

 private:
  bool ok_ = true;
  std::vector<std::string> notes_, failures_;
};

std::string F(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

fs::path WorkDir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "rbpk_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// The documented trajectory used for the synthetic law, the slope-matching
// check and windowed emergence.
Trajectory DocumentedTrajectory() {
  Trajectory t;
  t.trend = {.mu0 = 7.0, .mu_slope = -0.3, .sigma0 = 3.0, .sigma_slope = 0.0};
  for (int i = 0; i < 6; ++i) {
    t.sizes.push_back(static_cast<std::uint64_t>(std::llround(1e7 * std::pow(10.0, 0.6 * i))));
  }
  return t;
}

constexpr std::uint64_t kTokensPerSize = 500'000;

const std::vector<SynthEntry>& DocumentedStreams() {
  static const std::vector<SynthEntry> entries = [] {
    SynthOptions opts;
    opts.tokens_per_size = kTokensPerSize;
    opts.seed = 0;
    return GenerateStreams(DocumentedTrajectory(), opts, WorkDir() / "documented");
  }();
  return entries;
}

// ------------------------------------------------------------------ 1

void WorkedExamples(Check& c) {
  StreamMeta meta;
  meta.model_id = "toy";
  meta.corpus_id = "toy";
  meta.model_size = 1;
  meta.vocab_size = 10;
  meta.token_count = 3;
  const std::vector<RankRecord> recs = {{2, {}}, {3, {}}, {5, {}}};
  const fs::path p = WorkDir() / "toy.rbpk";
  WriteRankStream(meta, recs, p);
  const double rbp2 = RbpAtK(AccumulateHistogram(p), 2);
  c.Expect(rbp2 == 1.0 / 3.0, "RBP_2 = " + F(rbp2, 17) + " != 1/3");
  c.Note("RBP_2 = " + F(rbp2, 17));

  // Histogram of three instances whose log-probability sum is accumulated
  // in double precision.
  const double probs[] = {0.21, 0.28, 0.19};
  meta.has_logprob = true;
  RankHistogram h = RankHistogram::Empty(meta);
  h.counts = {{1, 1}, {2, 1}, {4, 1}};
  h.total = 3;
  double sum = 0;
  for (double q : probs) sum += std::log(q);
  h.logprob_sum = sum;
  const double ce = CrossEntropy(h);
  const double direct = -(std::log(0.21) + std::log(0.28) + std::log(0.19)) / 3;
  c.Expect(std::abs(ce - direct) <= 1e-9, "CE error " + F(std::abs(ce - direct)));
  c.Note("CE = " + F(ce, 10) + " (|err| = " + F(std::abs(ce - direct), 3) + ")");
}

// ------------------------------------------------------------------ 2

void PowerLawRecovery(Check& c) {
  const double alpha = 0.076, log_a = std::log(12.5);
  std::vector<ScalingPoint> exact;
  for (int i = 0; i < 8; ++i) {
    const double s = 1e7 * std::pow(10.0, 3.0 * i / 7.0);
    exact.push_back({s, std::exp(log_a) * std::pow(s, -alpha)});
  }
  const PowerLawFit f = FitPowerLaw(exact);
  c.Expect(std::abs(f.alpha - alpha) <= 1e-12, "alpha error " + F(f.alpha - alpha));
  c.Expect(std::abs(f.log_prefactor - log_a) <= 1e-12,
           "ln A error " + F(f.log_prefactor - log_a));
  c.Expect(std::abs(f.r2 - 1.0) <= 1e-12, "r2 = " + F(f.r2, 17));
  c.Note("noiseless |d alpha| = " + F(std::abs(f.alpha - alpha), 3));

  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<ScalingPoint> noisy;
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : exact) {
    const double y = p.value * (1.0 + noise(rng));
    noisy.push_back({p.model_size, y});
    xy.emplace_back(std::log(p.model_size), std::log(y));
  }
  const PowerLawFit g = FitPowerLaw(noisy);
  const oracle::Line line = oracle::OlsNormalEquations(xy);
  c.Expect(std::abs(g.slope - line.slope) <= 1e-12, "noisy slope vs oracle");
  c.Expect(std::abs(g.log_prefactor - line.intercept) <= 1e-12, "noisy intercept vs oracle");
  c.Note("1% noise: |d slope| vs oracle = " + F(std::abs(g.slope - line.slope), 3));
}

// ------------------------------------------------------------------ 3

void LognormalNumerics(Check& c) {
  double worst_quad = 0;
  for (double mu : {-4.0, -2.0, 0.0}) {
    for (double sigma : {0.5, 1.0, 2.0, 4.0}) {
      const TruncatedMoments m = ComputeTruncatedMoments({mu, sigma});
      for (int k = 0; k < 3; ++k) {
        const double got = k == 0 ? m.p_tail : k == 1 ? m.i1 : m.i2;
        const double err = std::abs(got - oracle::TruncatedMomentQuadrature(mu, sigma, k));
        worst_quad = std::max(worst_quad, err);
      }
    }
  }
  c.Expect(worst_quad <= 1e-8, "truncated moments vs quadrature " + F(worst_quad));
  c.Note("moments vs quadrature max err " + F(worst_quad, 3));

  // Self-bracketing and the [P, P + psi(1)] enclosure.
  bool bracket_ok = true, tol_ok = true, ce_ok = true;
  double worst_identity = 0;
  for (double mu : {-6.0, -3.0, -1.0, 0.0, 0.5, 2.0}) {
    for (double sigma : {0.5, 1.0, 1.5, 2.5, 4.0}) {
      if (mu > sigma * sigma) continue;
      const LognormalParams p{mu, sigma};
      const double tol = 1e-10;
      const NormalizerResult n = NormalizerExact(p, tol);
      const TruncatedMoments m = ComputeTruncatedMoments(p);
      tol_ok = tol_ok && n.tail_bound <= tol * n.c;
      bracket_ok = bracket_ok && n.c >= m.p_tail * (1 - 1e-12) &&
                   n.c <= (m.p_tail + m.psi1) * (1 + 1e-12);
      const double lhs = NegLogP1(p, n.c);
      const double rhs = std::log(n.c) - LogLognormalPdf(1.0, p);
      worst_identity = std::max(worst_identity, std::abs(lhs - rhs));
      const CeResult ce = CeExact(p, 1e-9);
      ce_ok = ce_ok && ce.ce >= NegLogP1(p, ce.normalizer);
    }
  }
  c.Expect(tol_ok, "normalizer tail bound exceeds requested tolerance");
  c.Expect(bracket_ok, "normalizer outside [P, P + psi(1)]");
  c.Expect(worst_identity <= 1e-12, "neg_log_p1 identity " + F(worst_identity));
  c.Expect(ce_ok, "ce_exact < neg_log_p1 somewhere with mu <= sigma^2");

  // Exact normalizer and CE at (0, 1) against brute-force summation.
  const oracle::Bracketed brute = oracle::BruteForceNormalizer(0.0, 1.0, 10'000'000);
  const double c01 = NormalizerExact({0.0, 1.0}, 1e-12).c;
  c.Expect(std::abs(c01 - brute.mid()) <= 1e-9 * brute.mid(), "c(0,1) vs brute force");
  const double ce01 = CeExact({0.0, 1.0}, 1e-10).ce;
  const double ce_brute = oracle::BruteForceEntropy(0.0, 1.0, brute.mid(), 10'000'000);
  c.Expect(std::abs(ce01 - ce_brute) <= 1e-8, "CE(0,1) vs brute force");
  c.Note("c(0,1) = " + F(c01, 15) + ", CE(0,1) = " + F(ce01, 15));

  std::string errs;
  double worst_approx = 0;
  for (double mu : {0.0, -1.0, -2.0}) {
    for (double sigma : {1.0, 2.0, 3.0}) {
      const double exact = CeExact({mu, sigma}, 1e-10).ce;
      const double rel = std::abs(CeApprox({mu, sigma}) - exact) / exact;
      worst_approx = std::max(worst_approx, rel);
      errs += (errs.empty() ? "" : " ") + F(rel, 3);
    }
  }
  c.Expect(worst_approx <= 0.10, "ce_approx relative error " + F(worst_approx));
  c.Note("ce_approx rel errors [mu 0,-1,-2 x sigma 1,2,3]: " + errs);
}

// ------------------------------------------------------------------ 4

void SyntheticLaw(Check& c) {
  const auto& entries = DocumentedStreams();
  const std::vector<std::uint64_t> ks = {1, 10, 100};
  std::vector<std::vector<ScalingPoint>> pts(ks.size());
  double worst_z = 0;
  for (const auto& e : entries) {
    const RankHistogram h = AccumulateHistogram(e.path);
    const NormalizerResult n = NormalizerExact(e.params, 1e-12);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const double emp = RbpAtK(h, ks[i]);
      const double model = RbpKModel(e.params, ks[i], n);
      const double sd = std::sqrt(model * (1 - model) / static_cast<double>(h.total));
      const double z = std::abs(emp - model) / sd;
      worst_z = std::max(worst_z, z);
      c.Expect(z <= 4.0, "S=" + std::to_string(e.model_size) + " k=" + std::to_string(ks[i]) +
                             " |z| = " + F(z, 3));
      pts[i].push_back({static_cast<double>(e.model_size), -std::log(emp)});
    }
  }
  std::string r2s;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const PowerLawFit f = FitPowerLaw(pts[i]);
    c.Expect(f.r2 >= 0.95, "k=" + std::to_string(ks[i]) + " r2 = " + F(f.r2));
    r2s += " k" + std::to_string(ks[i]) + ":" + F(f.r2, 5);
  }
  c.Note("trajectory mu = 7 - 0.3 ln S, sigma = 3; 6 sizes 1e7..1e10 x 5e5 tokens");
  c.Note("r2" + r2s);
  c.Note("max |empirical - model| / binomial sd = " + F(worst_z, 3));
}

// ------------------------------------------------------------------ 5

std::vector<std::pair<double, LognormalParams>> Sampled(const ParameterTrend& t) {
  std::vector<std::pair<double, LognormalParams>> out;
  for (int i = 0; i < 6; ++i) {
    const double s = 1e7 * std::pow(10.0, 0.6 * i);
    out.push_back({s, t.At(s)});
  }
  return out;
}

void SlopeMatching(Check& c) {
  const PredictedScaling ps = PredictScaling(Sampled(DocumentedTrajectory().trend), 1);
  c.Expect(ps.ce_fit.r2 > 0.99, "CE r2 = " + F(ps.ce_fit.r2));
  c.Expect(ps.rbp_fit.r2 > 0.99, "-ln RBP_1 r2 = " + F(ps.rbp_fit.r2));
  c.Expect(ps.slope_difference < 0.02, "slope difference " + F(ps.slope_difference));
  c.Note("documented trajectory: slope_CE = " + F(ps.ce_fit.slope, 4) + ", slope_RBP1 = " +
         F(ps.rbp_fit.slope, 4) + ", |diff| = " + F(ps.slope_difference, 3) + ", r2 = " +
         F(ps.ce_fit.r2, 5) + "/" + F(ps.rbp_fit.r2, 5));
  // Reported only: two other trajectories for context.
  const PredictedScaling b = PredictScaling(Sampled({3.0, -0.25, 1.5, 0.05}), 1);
  c.Note("[info] mu = 3 - 0.25 ln S, sigma = 1.5 + 0.05 ln S: |diff| = " +
         F(b.slope_difference, 3) + ", r2 = " + F(b.ce_fit.r2, 4) + "/" + F(b.rbp_fit.r2, 4));
  const PredictedScaling d = PredictScaling(Sampled({3.0, -0.25, 1.5, 0.0}), 1);
  c.Note("[info] mu = 3 - 0.25 ln S, sigma = 1.5: |diff| = " + F(d.slope_difference, 3));
}

// ------------------------------------------------------------------ 6

void Emergence(Check& c) {
  double worst = 0;
  for (double r : {0.3, 0.77, 0.999}) {
    for (std::uint64_t n : {1u, 3u, 16u, 100u}) {
      const double lhs = -std::log(SequenceSuccess(r, n));
      const double rhs = static_cast<double>(n) * -std::log(r);
      worst = std::max(worst, std::abs(lhs - rhs) / rhs);
    }
  }
  c.Expect(worst <= 1e-12, "-ln p vs N(-ln RBP) " + F(worst));

  double worst_half = 0;
  for (std::uint64_t n : {1u, 4u, 16u, 64u}) {
    const EmergenceSpec spec{n, 10, 3.7, 0.11};
    const double s = HalfPoint(spec);
    const double closed = std::pow(3.7 * n / std::log(2.0), 1 / 0.11);
    worst_half = std::max(worst_half, std::abs(s - closed) / closed);
    const double p = EmergenceCurve(spec, std::vector<double>{s})[0].second;
    worst_half = std::max(worst_half, std::abs(p - 0.5));
  }
  c.Expect(worst_half <= 1e-12, "half point " + F(worst_half));

  std::vector<EmergenceObservation> obs;
  for (std::uint64_t n : {1u, 4u, 16u, 64u}) {
    const EmergenceSpec spec{n, 10, 3.7, 0.11};
    const std::vector<double> sizes = {1e8, 1e9, 1e10, 1e11};
    for (const auto& [s, p] : EmergenceCurve(spec, sizes)) obs.push_back({n, s, p});
  }
  const EmergenceFit f = FitEmergence(obs);
  c.Expect(std::abs(f.alpha - 0.11) <= 1e-10 && std::abs(f.c_const - 3.7) <= 1e-8 * 3.7,
           "noiseless round trip alpha = " + F(f.alpha, 15) + " C = " + F(f.c_const, 15));

  // Windows on the synthetic streams.
  const std::vector<std::uint64_t> ns = {1, 2, 4, 8};
  const std::vector<std::uint64_t> kk = {10};
  std::vector<EmergenceObservation> measured;
  std::vector<ScalingPoint> token;
  for (const auto& e : DocumentedStreams()) {
    const auto grid = CountSuccessWindows(e.path, ns, kk);
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const double p = grid[i][0].fraction();
      if (p > 0 && p < 1) measured.push_back({ns[i], static_cast<double>(e.model_size), p});
    }
    token.push_back({static_cast<double>(e.model_size),
                     -std::log(RbpAtK(AccumulateHistogram(e.path), 10))});
  }
  const EmergenceFit w = FitEmergence(measured);
  const double token_alpha = FitPowerLaw(token).alpha;
  const double rel = std::abs(w.alpha - token_alpha) / token_alpha;
  c.Expect(rel <= 0.10, "window alpha " + F(w.alpha) + " vs token alpha " + F(token_alpha));
  c.Note("k=10, N in {1,2,4,8}: window alpha = " + F(w.alpha, 4) + ", token alpha = " +
         F(token_alpha, 4) + " (rel diff " + F(rel, 3) + ", r2 " + F(w.r2, 4) + ")");
}

// ------------------------------------------------------------------ 7

void SamplerFidelity(Check& c) {
  const LognormalParams p{2.0, 1.5};
  const std::uint32_t vocab = 50257;
  const RankSampler sampler(p, vocab);
  const double log_c = NormalizerExact(p, 1e-12).log_c;
  Rng rng(0);
  std::vector<std::uint32_t> counts(vocab + 1, 0);
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) ++counts[sampler.Sample(rng)];
  double tv = 0;
  for (std::uint32_t r = 1; r <= vocab; ++r) {
    if (counts[r] == 0) continue;
    tv += std::abs(static_cast<double>(counts[r]) / n - std::exp(LogLognormalPdf(r, p) - log_c));
  }
  tv *= 0.5;
  c.Expect(tv < 0.005, "TV = " + F(tv));
  c.Note("TV over observed support = " + F(tv, 4) + " (seed 0, 1e6 draws)");

  Trajectory t;
  t.trend = {.mu0 = 2.0, .mu_slope = -0.1, .sigma0 = 1.5, .sigma_slope = 0.0};
  t.sizes = {1000, 100000};
  SynthOptions opts;
  opts.tokens_per_size = 100'000;
  opts.seed = 42;
  const auto a = GenerateStreams(t, opts, WorkDir() / "det_a");
  const auto b = GenerateStreams(t, opts, WorkDir() / "det_b");
  auto slurp = [](const fs::path& f) {
    std::ifstream in(f, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  bool same = slurp(WorkDir() / "det_a" / "manifest.txt") ==
              slurp(WorkDir() / "det_b" / "manifest.txt");
  for (std::size_t i = 0; i < a.size(); ++i) same = same && slurp(a[i].path) == slurp(b[i].path);
  c.Expect(same, "regenerated streams differ");
  c.Note(same ? "same seed -> byte-identical streams and manifest" : "");
}

struct Criterion {
  const char* name;
  double budget_s;
  std::function<void(Check&)> run;
};

}  // namespace
}  // namespace rbpk

int main() {
  using namespace rbpk;
  const std::vector<Criterion> criteria = {
      {"worked-examples", 1, WorkedExamples},
      {"power-law-recovery", 1, PowerLawRecovery},
      {"lognormal-numerics", 60, LognormalNumerics},
      {"synthetic-end-to-end-law", 300, SyntheticLaw},
      {"slope-matching-mechanism", 60, SlopeMatching},
      {"emergence", 120, Emergence},
      {"sampler-fidelity", 60, SamplerFidelity},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.Expect(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    check.Expect(secs <= cr.budget_s, "runtime " + F(secs, 3) + " s over budget");
    failed += !check.ok();
    std::printf("%s  %-26s (%.2f s / %.0f s)  %s\n", check.ok() ? "PASS" : "FAIL", cr.name, secs,
                cr.budget_s, check.Detail().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu acceptance criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  std::error_code ec;
  fs::remove_all(fs::temp_directory_path() / "rbpk_acceptance", ec);
  return failed == 0 ? 0 : 1;
}
