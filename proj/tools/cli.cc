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

#include "cli.h"

#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "digest.h"
#include "rbpk/emergence.h"
#include "rbpk/lognormal.h"
#include "rbpk/power_law.h"
#include "rbpk/rank_stream.h"
#include "rbpk/rbp_metrics.h"
#include "rbpk/synth.h"
#include "rbpk/table.h"
#include "svg_plot.h"

namespace rbpk::cli {
namespace {

namespace fs = std::filesystem;

// Slope-matching threshold drawn on predicted-scaling output.
constexpr double kSlopeThreshold = 0.02;

// Collects every problem in a config before anything runs.
class Validator {
 public:
  void Require(bool ok, std::string message) {
    if (!ok) problems_.push_back(std::move(message));
  }
  void Ascending(const std::vector<std::uint64_t>& v, const std::string& name) {
    Require(!v.empty(), name + " is empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
      Require(v[i] >= 1, name + " entries must be >= 1");
      if (i > 0) Require(v[i] > v[i - 1], name + " must be strictly ascending");
    }
  }
  void Done() const {
    if (problems_.empty()) return;
    std::string msg = "invalid configuration:";
    for (const auto& p : problems_) msg += "\n  - " + p;
    throw Error(ErrorKind::kValidation, msg);
  }

 private:
  std::vector<std::string> problems_;
};

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

std::string ConfigHash(const CLI::App* sub) {
  return Sha256Hex(std::string(sub->get_name()) + "\n" + sub->config_to_str(true, false));
}

Provenance MakeProvenance(const CLI::App* sub, const std::vector<fs::path>& inputs) {
  Provenance p;
  p.config_hash = ConfigHash(sub);
  for (const auto& in : inputs) {
    p.input_digests.emplace_back(in.filename().string(), Sha256File(in));
  }
  return p;
}

std::string Stem(const fs::path& p) { return p.stem().string(); }

std::string Fmt(double v) { return FormatDouble(v); }

// ---------------------------------------------------------------- rbp

struct RbpArgs {
  std::vector<std::string> inputs;
  std::vector<std::uint64_t> k_grid{DefaultKGrid().begin(), DefaultKGrid().end()};
  std::string out_dir = ".";
};

int CmdRbp(const RbpArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  Validator v;
  v.Ascending(a.k_grid, "--k-grid");
  v.Done();
  EnsureDir(a.out_dir);
  int status = kExitOk;
  for (const auto& in : a.inputs) {
    try {
      const RankHistogram hist = AccumulateHistogram(fs::path(in));
      const std::vector<std::uint64_t> ks = ClipKGrid(a.k_grid, hist.meta.vocab_size);
      if (ks.size() < a.k_grid.size()) {
        err << "warning: " << in << ": k values above vocab_size "
            << hist.meta.vocab_size << " dropped\n";
      }
      if (ks.empty()) throw Error(ErrorKind::kValidation, "no k value <= vocab_size");
      const RbpCurve curve = RbpSweep(hist, ks);
      const fs::path dest = fs::path(a.out_dir) / (Stem(in) + ".rbp.csv");
      WriteTable(CurveToTable(curve, MakeProvenance(sub, {in})), dest);
      out << in << ": " << hist.total << " tokens";
      for (const auto& [k, r] : curve.points) out << "  RBP_" << k << "=" << Fmt(r);
      if (curve.ce) out << "  CE=" << Fmt(*curve.ce);
      out << "\n  -> " << dest.string() << "\n";
    } catch (const Error& e) {
      err << "error: " << in << ": " << e.what() << "\n";
      if (status == kExitOk) status = ExitCodeFor(e.kind());
    }
  }
  return status;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::vector<std::string> inputs;
  std::string metric = "all";
  std::string out_dir = ".";
};

int CmdFit(const FitArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  Validator v;
  std::optional<std::uint64_t> only_k;
  const bool only_ce = a.metric == "ce";
  if (a.metric.rfind("rbp@", 0) == 0) {
    try {
      only_k = ParseUint(a.metric.substr(4));
    } catch (const Error&) {
      v.Require(false, "--metric rbp@K needs an integer K, got '" + a.metric + "'");
    }
  } else {
    v.Require(a.metric == "all" || only_ce, "--metric must be all, ce or rbp@K");
  }
  v.Done();

  std::vector<RbpCurve> curves;
  std::vector<fs::path> paths;
  for (const auto& in : a.inputs) {
    curves.push_back(CurveFromTable(ReadTable(in)));
    paths.emplace_back(in);
  }
  std::set<std::uint64_t> sizes;
  for (const auto& c : curves) sizes.insert(c.meta.model_size);
  if (sizes.size() < 2) {
    throw Error(ErrorKind::kUnderdetermined,
                "power-law fit needs curves from at least 2 model sizes, got " +
                    std::to_string(sizes.size()));
  }
  std::sort(curves.begin(), curves.end(), [](const RbpCurve& x, const RbpCurve& y) {
    return x.meta.model_size < y.meta.model_size;
  });

  SweepResult sweep = SweepFit(curves);
  for (const auto& w : sweep.warnings) err << "warning: " << w << "\n";
  std::erase_if(sweep.rows, [&](const SweepRow& r) {
    if (only_ce) return r.k.has_value();
    if (only_k) return r.k != only_k;
    return false;
  });
  if (sweep.rows.empty()) {
    throw Error(ErrorKind::kValidation, "metric '" + a.metric + "' not present in the curves");
  }

  EnsureDir(a.out_dir);
  const Provenance prov = MakeProvenance(sub, paths);
  const fs::path table_path = fs::path(a.out_dir) / "sweep.csv";
  WriteTable(SweepToTable(sweep, prov), table_path);

  Plot all;
  all.title = "Scaling of -ln RBP_k and CE with model size";
  all.x_label = "model size S (non-embedding parameters)";
  all.y_label = "-ln RBP_k  /  CE (nats)";
  out << "label,alpha,slope,r2,n_points\n";
  for (const SweepRow& row : sweep.rows) {
    PlotSeries data{row.label == "CE" ? "CE" : "k=" + row.label, {}, true, false};
    for (const auto& c : curves) {
      double value;
      if (!row.k) {
        if (!c.ce) continue;
        value = *c.ce;
      } else {
        const auto it = c.points.find(*row.k);
        if (it == c.points.end() || it->second <= 0.0 || it->second >= 1.0) continue;
        value = -std::log(it->second);
      }
      data.points.emplace_back(static_cast<double>(c.meta.model_size), value);
    }
    if (!row.fit) {
      out << row.label << ",nan,nan,nan,0\n";
      err << "warning: row " << row.label << ": " << row.error << "\n";
      continue;
    }
    out << row.label << "," << Fmt(row.fit->alpha) << "," << Fmt(row.fit->slope) << ","
        << Fmt(row.fit->r2) << "," << row.fit->n_points << "\n";
    PlotSeries line{"fit " + data.label, {}, false, true};
    for (const auto& [s, _] : data.points) line.points.emplace_back(s, Predict(*row.fit, s));

    Plot one;
    one.title = (row.k ? "-ln RBP_" + row.label : std::string("CE")) + " vs model size";
    one.x_label = all.x_label;
    one.y_label = row.k ? "-ln RBP_k" : "CE (nats)";
    one.notes = {"alpha = " + Fmt(row.fit->alpha) + ", r2 = " + Fmt(row.fit->r2)};
    one.series = {data, line};
    WriteSvg(one, fs::path(a.out_dir) / ("sweep_" + row.label + ".svg"));
    all.series.push_back(std::move(data));
  }
  WriteSvg(all, fs::path(a.out_dir) / "sweep.svg");
  out << "-> " << table_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------- lognormal

struct LognormalFitArgs {
  std::vector<std::string> inputs;
  std::string out_dir = ".";
  double rel_tol = 1e-11;
};

Table RankFrequencyTable(const RankHistogram& h, const LognormalFit& fit, double log_c,
                         const Provenance& prov) {
  Table t;
  t.kind = "rank_frequency";
  AddProvenance(t, prov);
  t.header.emplace_back("model_id", h.meta.model_id);
  t.header.emplace_back("mu", Fmt(fit.params.mu));
  t.header.emplace_back("sigma", Fmt(fit.params.sigma));
  t.columns = {"rank", "count", "empirical", "model"};
  const double n = static_cast<double>(h.total);
  for (const auto& [r, count] : h.counts) {
    const double model = std::exp(LogLognormalPdf(r, fit.params) - log_c);
    t.rows.push_back({std::to_string(r), std::to_string(count),
                      Fmt(static_cast<double>(count) / n), Fmt(model)});
  }
  return t;
}

// Log2-width bins [2^j, 2^(j+1)); masses are per bin, densities per rank.
Table BinnedFrequencyTable(const RankHistogram& h, const LognormalFit& fit, double log_c,
                           const Provenance& prov) {
  Table t;
  t.kind = "rank_frequency_binned";
  AddProvenance(t, prov);
  t.header.emplace_back("model_id", h.meta.model_id);
  t.header.emplace_back("binning", "log2: [2^j, 2^(j+1)) clipped to vocab_size");
  t.columns = {"bin_lo", "bin_hi", "count", "empirical_mass", "model_mass",
               "empirical_density", "model_density"};
  const double n = static_cast<double>(h.total);
  const std::uint64_t vocab = h.meta.vocab_size;
  for (std::uint64_t lo = 1; lo <= vocab; lo *= 2) {
    const std::uint64_t hi = std::min<std::uint64_t>(2 * lo - 1, vocab);
    std::uint64_t count = 0;
    for (auto it = h.counts.lower_bound(static_cast<std::uint32_t>(lo));
         it != h.counts.end() && it->first <= hi; ++it) {
      count += it->second;
    }
    double model = 0.0;
    for (std::uint64_t r = lo; r <= hi; ++r) {
      model += std::exp(LogLognormalPdf(static_cast<double>(r), fit.params) - log_c);
    }
    const double width = static_cast<double>(hi - lo + 1);
    const double emp = static_cast<double>(count) / n;
    t.rows.push_back({std::to_string(lo), std::to_string(hi), std::to_string(count), Fmt(emp),
                      Fmt(model), Fmt(emp / width), Fmt(model / width)});
  }
  return t;
}

int CmdLognormalFit(const LognormalFitArgs& a, const CLI::App* sub, std::ostream& out,
                    std::ostream& err) {
  Validator v;
  v.Require(a.rel_tol > 0 && a.rel_tol <= 1e-3, "--rel-tol must be in (0, 1e-3]");
  v.Done();
  EnsureDir(a.out_dir);

  Table params;
  params.kind = "lognormal_params";
  std::vector<fs::path> paths(a.inputs.begin(), a.inputs.end());
  AddProvenance(params, MakeProvenance(sub, paths));
  params.header.emplace_back("normalizer", "exact (certified series)");
  params.columns = {"model_id", "model_size", "tokens",      "mu",         "sigma",
                    "log_likelihood", "tv_distance", "at_boundary", "evaluations"};
  LognormalFitOptions opts;
  opts.rel_tol = a.rel_tol;
  out << "model_id,model_size,mu,sigma,tv_distance\n";
  for (const auto& in : a.inputs) {
    const RankHistogram h = AccumulateHistogram(fs::path(in));
    const LognormalFit fit = FitLognormal(h, opts);
    for (const auto& w : fit.warnings) err << "warning: " << in << ": " << w << "\n";
    params.rows.push_back({h.meta.model_id, std::to_string(h.meta.model_size),
                           std::to_string(h.total), Fmt(fit.params.mu), Fmt(fit.params.sigma),
                           Fmt(fit.log_likelihood), Fmt(fit.tv_distance),
                           fit.at_boundary ? "1" : "0", std::to_string(fit.evaluations)});
    out << h.meta.model_id << "," << h.meta.model_size << "," << Fmt(fit.params.mu) << ","
        << Fmt(fit.params.sigma) << "," << Fmt(fit.tv_distance) << "\n";

    const double log_c = NormalizerExact(fit.params, a.rel_tol).log_c;
    const Provenance prov = MakeProvenance(sub, {in});
    const fs::path base = fs::path(a.out_dir) / Stem(in);
    WriteTable(RankFrequencyTable(h, fit, log_c, prov), base.string() + ".rankfreq.csv");
    const Table binned = BinnedFrequencyTable(h, fit, log_c, prov);
    WriteTable(binned, base.string() + ".rankfreq_binned.csv");

    Plot plot;
    plot.title = "Rank frequency, " + h.meta.model_id;
    plot.x_label = "rank";
    plot.y_label = "probability per rank (log2-binned)";
    plot.notes = {"lognormal fit: mu = " + Fmt(fit.params.mu) +
                  ", sigma = " + Fmt(fit.params.sigma)};
    PlotSeries emp{"empirical", {}, true, false}, mod{"model", {}, false, true};
    const std::size_t d_emp = binned.Column("empirical_density");
    const std::size_t d_mod = binned.Column("model_density");
    for (const auto& row : binned.rows) {
      const double mid = std::sqrt(ParseDouble(row[0]) * ParseDouble(row[1]));
      emp.points.emplace_back(mid, ParseDouble(row[d_emp]));
      mod.points.emplace_back(mid, ParseDouble(row[d_mod]));
    }
    plot.series = {emp, mod};
    WriteSvg(plot, base.string() + ".rankfreq.svg");
  }
  const fs::path dest = fs::path(a.out_dir) / "lognormal_params.csv";
  WriteTable(params, dest);
  out << "-> " << dest.string() << "\n";
  return kExitOk;
}

struct LognormalPredictArgs {
  std::string params_table;
  std::vector<double> trend;  // mu0, mu_slope, sigma0, sigma_slope
  std::vector<double> sizes;
  bool smooth = false;
  std::uint64_t k = 1;
  std::string out_dir = ".";
  double rel_tol = 1e-10;
};

int CmdLognormalPredict(const LognormalPredictArgs& a, const CLI::App* sub, std::ostream& out,
                        std::ostream& err) {
  Validator v;
  v.Require(a.params_table.empty() != a.trend.empty(),
            "give exactly one of --params or --trend");
  v.Require(a.trend.empty() || a.trend.size() == 4,
            "--trend takes mu0,mu_slope,sigma0,sigma_slope");
  v.Require(a.trend.empty() || a.sizes.size() >= 3, "--trend needs --sizes with >= 3 sizes");
  v.Require(a.k >= 1, "--k must be >= 1");
  v.Require(a.rel_tol > 0 && a.rel_tol <= 1e-3, "--rel-tol must be in (0, 1e-3]");
  for (double s : a.sizes) v.Require(s >= 1, "--sizes entries must be >= 1");
  v.Done();

  std::vector<std::pair<double, LognormalParams>> traj;
  std::vector<fs::path> inputs;
  if (!a.params_table.empty()) {
    inputs.emplace_back(a.params_table);
    const Table t = ReadTable(a.params_table);
    if (t.kind != "lognormal_params") {
      throw Error(ErrorKind::kFormat, "expected a lognormal_params table, got '" + t.kind + "'");
    }
    const std::size_t cs = t.Column("model_size"), cm = t.Column("mu"), cg = t.Column("sigma");
    for (const auto& row : t.rows) {
      traj.push_back({ParseDouble(row[cs]), {ParseDouble(row[cm]), ParseDouble(row[cg])}});
    }
    std::sort(traj.begin(), traj.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    if (a.smooth) {
      const ParameterTrend trend = FitParameterTrend(traj);
      for (auto& [s, p] : traj) p = trend.At(s);
      err << "note: parameters smoothed to mu = " << Fmt(trend.mu0) << " + "
          << Fmt(trend.mu_slope) << " ln S, sigma = " << Fmt(trend.sigma0) << " + "
          << Fmt(trend.sigma_slope) << " ln S\n";
    }
  } else {
    const ParameterTrend trend{a.trend[0], a.trend[1], a.trend[2], a.trend[3]};
    for (double s : a.sizes) traj.push_back({s, trend.At(s)});
  }

  const PredictedScaling ps = PredictScaling(traj, a.k, a.rel_tol);
  const std::string kname = std::to_string(a.k);
  Table t;
  t.kind = "predicted_scaling";
  AddProvenance(t, MakeProvenance(sub, inputs));
  t.header.emplace_back("k", kname);
  t.header.emplace_back("normalizer", "exact (certified series)");
  t.header.emplace_back("ce_slope", Fmt(ps.ce_fit.slope));
  t.header.emplace_back("ce_r2", Fmt(ps.ce_fit.r2));
  t.header.emplace_back("rbp_slope", Fmt(ps.rbp_fit.slope));
  t.header.emplace_back("rbp_r2", Fmt(ps.rbp_fit.r2));
  t.header.emplace_back("slope_difference", Fmt(ps.slope_difference));
  t.header.emplace_back("slope_threshold", Fmt(kSlopeThreshold));
  t.columns = {"model_size", "mu", "sigma", "log_c", "ce", "neg_log_rbp"};
  for (const auto& p : ps.points) {
    t.rows.push_back({Fmt(p.model_size), Fmt(p.params.mu), Fmt(p.params.sigma), Fmt(p.log_c),
                      Fmt(p.ce), Fmt(p.neg_log_rbp)});
  }
  EnsureDir(a.out_dir);
  const fs::path dest = fs::path(a.out_dir) / ("predicted_scaling_k" + kname + ".csv");
  WriteTable(t, dest);

  const bool within = ps.slope_difference < kSlopeThreshold;
  const std::string line = "slope difference |slope_CE - slope_RBP_" + kname +
                           "| = " + Fmt(ps.slope_difference) + "  (threshold " +
                           Fmt(kSlopeThreshold) + ": " + (within ? "within" : "exceeded") + ")";
  Plot plot;
  plot.title = "Lognormal-model predicted scaling";
  plot.x_label = "model size S";
  plot.y_label = "nats";
  plot.notes = {line, "CE: slope " + Fmt(ps.ce_fit.slope) + ", r2 " + Fmt(ps.ce_fit.r2) +
                          ";  -ln RBP_" + kname + ": slope " + Fmt(ps.rbp_fit.slope) + ", r2 " +
                          Fmt(ps.rbp_fit.r2)};
  PlotSeries ce{"CE (model)", {}, true, false}, rbp{"-ln RBP_" + kname + " (model)", {}, true, false};
  for (const auto& p : ps.points) {
    ce.points.emplace_back(p.model_size, p.ce);
    rbp.points.emplace_back(p.model_size, p.neg_log_rbp);
  }
  plot.series = {ce, rbp};
  WriteSvg(plot, fs::path(a.out_dir) / ("predicted_scaling_k" + kname + ".svg"));

  out << "model_size,mu,sigma,ce,neg_log_rbp\n";
  for (const auto& p : ps.points) {
    out << Fmt(p.model_size) << "," << Fmt(p.params.mu) << "," << Fmt(p.params.sigma) << ","
        << Fmt(p.ce) << "," << Fmt(p.neg_log_rbp) << "\n";
  }
  out << line << "\n-> " << dest.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------- emergence

struct EmergenceArgs {
  std::vector<std::string> inputs;  // empirical mode when non-empty
  std::vector<std::uint64_t> n_grid{1, 4, 16, 64};
  std::vector<std::uint64_t> k_grid{1, 10, 100};
  std::optional<double> c_const;
  std::optional<double> alpha;
  std::vector<double> sizes;
  std::string out_dir = ".";
};

std::vector<double> DefaultEmergenceSizes() {
  std::vector<double> s;
  for (int i = 0; i <= 48; ++i) s.push_back(std::pow(10.0, 6.0 + i * 0.125));
  return s;
}

void EmergencePlot(const std::string& title, std::uint64_t k,
                   const std::map<std::uint64_t, std::vector<std::pair<double, double>>>& by_n,
                   const fs::path& path) {
  Plot plot;
  plot.title = title;
  plot.x_label = "model size S";
  plot.y_label = "sequence success p";
  plot.log_y = false;
  plot.notes = {"k = " + std::to_string(k)};
  for (const auto& [n, pts] : by_n) plot.series.push_back({"N=" + std::to_string(n), pts, true, false});
  WriteSvg(plot, path);
}

int CmdEmergence(const EmergenceArgs& a, const CLI::App* sub, std::ostream& out,
                 std::ostream& err) {
  const bool empirical = !a.inputs.empty();
  Validator v;
  v.Ascending(a.n_grid, "--n-grid");
  if (empirical) {
    v.Ascending(a.k_grid, "--k-grid");
    v.Require(!a.c_const && !a.alpha, "--c/--alpha are for model mode (no inputs)");
  } else {
    v.Require(a.c_const.has_value(), "model mode needs --c");
    v.Require(a.alpha.has_value(), "model mode needs --alpha");
    v.Require(!a.c_const || *a.c_const > 0, "--c must be > 0");
    v.Require(!a.alpha || *a.alpha > 0, "--alpha must be > 0");
  }
  for (double s : a.sizes) v.Require(s > 0, "--sizes entries must be > 0");
  v.Done();
  EnsureDir(a.out_dir);

  std::vector<fs::path> paths(a.inputs.begin(), a.inputs.end());
  const Provenance prov = MakeProvenance(sub, paths);
  Table t;
  t.kind = "emergence";
  AddProvenance(t, prov);
  t.columns = {"N", "k", "S", "p", "source", "hits", "windows"};
  const fs::path table_path = fs::path(a.out_dir) / "emergence.csv";

  if (!empirical) {
    // The model curve does not depend on k beyond C and alpha; k labels it.
    const std::uint64_t k = a.k_grid.empty() ? 1 : a.k_grid.front();
    const std::vector<double> sizes = a.sizes.empty() ? DefaultEmergenceSizes() : a.sizes;
    std::map<std::uint64_t, std::vector<std::pair<double, double>>> by_n;
    t.header.emplace_back("c_const", Fmt(*a.c_const));
    t.header.emplace_back("alpha", Fmt(*a.alpha));
    out << "N,half_point\n";
    for (std::uint64_t n : a.n_grid) {
      const EmergenceSpec spec{n, k, *a.c_const, *a.alpha};
      by_n[n] = EmergenceCurve(spec, sizes);
      for (const auto& [s, p] : by_n[n]) {
        t.rows.push_back({std::to_string(n), std::to_string(k), Fmt(s), Fmt(p), "p_model", "", ""});
      }
      out << n << "," << Fmt(HalfPoint(spec)) << "\n";
    }
    WriteTable(t, table_path);
    EmergencePlot("Sequence success p = exp(-C N S^-alpha)", k, by_n,
                  fs::path(a.out_dir) / ("emergence_k" + std::to_string(k) + ".svg"));
    out << "-> " << table_path.string() << "\n";
    return kExitOk;
  }

  // Empirical mode: one pass per stream for the whole (N, k) grid.
  struct Measured {
    double size;
    std::vector<std::vector<WindowCount>> grid;
  };
  std::vector<Measured> measured;
  for (const auto& in : a.inputs) {
    const RankStreamReader reader{fs::path(in)};
    measured.push_back({static_cast<double>(reader.meta().model_size),
                        CountSuccessWindows(fs::path(in), a.n_grid, a.k_grid)});
  }
  std::sort(measured.begin(), measured.end(),
            [](const Measured& x, const Measured& y) { return x.size < y.size; });

  Table fits;
  fits.kind = "emergence_fit";
  AddProvenance(fits, prov);
  fits.columns = {"k", "c_const", "alpha", "r2", "n_points", "token_alpha", "token_r2"};
  out << "k,c_const,alpha,r2,token_alpha\n";
  for (std::size_t ki = 0; ki < a.k_grid.size(); ++ki) {
    const std::uint64_t k = a.k_grid[ki];
    std::vector<EmergenceObservation> obs;
    std::map<std::uint64_t, std::vector<std::pair<double, double>>> by_n;
    std::vector<ScalingPoint> token_pts;
    for (const auto& m : measured) {
      for (std::size_t ni = 0; ni < a.n_grid.size(); ++ni) {
        const std::uint64_t n = a.n_grid[ni];
        const WindowCount& wc = m.grid[ni][ki];
        const double p = wc.fraction();
        t.rows.push_back({std::to_string(n), std::to_string(k), Fmt(m.size), Fmt(p),
                          "p_empirical", std::to_string(wc.hits), std::to_string(wc.windows)});
        by_n[n].emplace_back(m.size, p);
        if (n == 1 && p > 0 && p < 1) token_pts.push_back({m.size, -std::log(p)});
        if (wc.windows == 0 || p <= 0.0 || p >= 1.0) {
          err << "warning: N=" << n << " k=" << k << " S=" << Fmt(m.size) << ": p = " << Fmt(p)
              << " excluded from the fit\n";
          continue;
        }
        obs.push_back({n, m.size, p});
      }
    }
    EmergencePlot("Measured sequence success", k, by_n,
                  fs::path(a.out_dir) / ("emergence_k" + std::to_string(k) + ".svg"));
    std::string token_alpha = "nan", token_r2 = "nan";
    try {
      const PowerLawFit tf = FitPowerLaw(token_pts);
      token_alpha = Fmt(tf.alpha);
      token_r2 = Fmt(tf.r2);
    } catch (const Error& e) {
      if (std::find(a.n_grid.begin(), a.n_grid.end(), 1u) != a.n_grid.end()) {
        err << "warning: k=" << k << ": token-level fit unavailable: " << e.what() << "\n";
      }
    }
    try {
      const EmergenceFit f = FitEmergence(obs);
      fits.rows.push_back({std::to_string(k), Fmt(f.c_const), Fmt(f.alpha), Fmt(f.r2),
                           std::to_string(f.n_points), token_alpha, token_r2});
      out << k << "," << Fmt(f.c_const) << "," << Fmt(f.alpha) << "," << Fmt(f.r2) << ","
          << token_alpha << "\n";
    } catch (const Error& e) {
      err << "warning: k=" << k << ": joint fit failed: " << e.what() << "\n";
      fits.rows.push_back({std::to_string(k), "nan", "nan", "nan", "0", token_alpha, token_r2});
    }
  }
  WriteTable(t, table_path);
  const fs::path fit_path = fs::path(a.out_dir) / "emergence_fit.csv";
  WriteTable(fits, fit_path);
  out << "-> " << table_path.string() << "\n-> " << fit_path.string() << "\n";
  return kExitOk;
}

// -------------------------------------------------------------- synth

struct SynthArgs {
  double mu0 = 3.0, mu_slope = -0.25, sigma0 = 1.5, sigma_slope = 0.0;
  std::vector<std::uint64_t> sizes;
  SynthOptions options;
  bool no_logprob = false;
  std::string out_dir = ".";
};

int CmdSynth(SynthArgs a, std::ostream& out) {
  Validator v;
  v.Require(!a.sizes.empty(), "--sizes is required");
  v.Require(a.options.tokens_per_size >= 1, "--tokens must be >= 1");
  v.Require(a.options.vocab_size >= 2, "--vocab must be >= 2");
  v.Done();
  Trajectory traj;
  traj.trend = {a.mu0, a.mu_slope, a.sigma0, a.sigma_slope};
  traj.sizes = a.sizes;
  traj.Validate();
  a.options.with_logprob = !a.no_logprob;
  const auto entries = GenerateStreams(traj, a.options, a.out_dir);
  out << "file,model_size,seed,mu,sigma,clamped_mass\n";
  for (const auto& e : entries) {
    out << e.path.string() << "," << e.model_size << "," << e.seed << "," << Fmt(e.params.mu)
        << "," << Fmt(e.params.sigma) << "," << Fmt(e.clamped_mass) << "\n";
  }
  out << "-> " << (fs::path(a.out_dir) / "manifest.txt").string() << "\n";
  return kExitOk;
}

// ------------------------------------------------------------ extract

constexpr const char* kExtractor = "rbpk-extract";

std::optional<fs::path> FindOnPath(const std::string& name) {
  const char* path = std::getenv("PATH");
  if (path == nullptr) return std::nullopt;
  std::string_view rest(path);
  while (!rest.empty()) {
    const auto colon = rest.find(':');
    const std::string dir(rest.substr(0, colon));
    rest = colon == std::string_view::npos ? std::string_view{} : rest.substr(colon + 1);
    if (dir.empty()) continue;
    const fs::path cand = fs::path(dir) / name;
    if (::access(cand.c_str(), X_OK) == 0) return cand;
  }
  return std::nullopt;
}

int CmdExtract(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto exe = FindOnPath(kExtractor);
  if (!exe) {
    err << "rank extraction runs language models and lives in the separate Python\n"
           "package 'model-rank-extractor', which provides the '"
        << kExtractor
        << "' command.\n"
           "Install it into the active environment, then rerun, e.g.:\n\n"
           "  pip install model-rank-extractor\n"
           "  rbpk extract --model EleutherAI/pythia-70m --corpus corpus.txt \\\n"
           "      --context-len 1024 --max-tokens 500000 --out pythia-70m.rbpk \\\n"
           "      --precision float32\n\n"
           "The extractor writes the same binary rank-stream format read by\n"
           "'rbpk rbp', plus a '<out>.docs' document-start sidecar.\n";
    return kExitOther;
  }
  out.flush();
  std::vector<std::string> argv_s = {exe->string()};
  argv_s.insert(argv_s.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_s) argv.push_back(s.data());
  argv.push_back(nullptr);
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorKind::kIo, "fork failed");
  if (pid == 0) {
    ::execv(argv[0], argv.data());
    std::_Exit(127);
  }
  int status = 0;
  if (::waitpid(pid, &status, 0) < 0) throw Error(ErrorKind::kIo, "waitpid failed");
  return WIFEXITED(status) ? WEXITSTATUS(status) : kExitOther;
}

}  // namespace

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
      return kExitUsage;
    case ErrorKind::kValidation:
    case ErrorKind::kDomain:
    case ErrorKind::kDegenerateInput:
    case ErrorKind::kUnderdetermined:
    case ErrorKind::kDegeneracy:
    case ErrorKind::kMerge:
    case ErrorKind::kCapability:
      return kExitValidation;
    case ErrorKind::kConvergence:
      return kExitConvergence;
    case ErrorKind::kIo:
      return kExitIo;
    case ErrorKind::kFormat:
    case ErrorKind::kCorruption:
      return kExitFormat;
  }
  return kExitOther;
}

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{
      "rbpk: rank-based probability (RBP_k) scaling toolkit.\n\n"
      "Inputs are rank streams: binary files (magic 'RBPK') or their text twin\n"
      "(one 'rank' or 'rank,logprob' per line with a '<path>.meta' key=value\n"
      "sidecar). An optional '<path>.docs' sidecar lists document start indices.\n"
      "Tables are comma-separated text with '# key: value' provenance lines\n"
      "(tool_version, config_hash, input_digest); plots are SVG.\n\n"
      "Exit status: 0 ok, 1 other, 2 usage, 3 invalid input, 4 no convergence,\n"
      "5 I/O, 6 malformed or corrupt file.",
      "rbpk"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.set_config("--config", "",
                 "TOML/INI file of option values ([rbp], [fit], [lognormal.fit], ...); "
                 "command-line flags override it");
  app.require_subcommand(1);

  RbpArgs rbp_a;
  auto* rbp = app.add_subcommand(
      "rbp", "RBP_k curve per rank stream -> <out-dir>/<stem>.rbp.csv (k, rbp, neg_log_rbp; "
             "CE in the header when log-probs are present)");
  rbp->add_option("inputs", rbp_a.inputs, "rank-stream files")->required();
  rbp->add_option("-k,--k-grid", rbp_a.k_grid, "ascending k values")
      ->delimiter(',')
      ->capture_default_str();
  rbp->add_option("-o,--out-dir", rbp_a.out_dir, "output directory")->capture_default_str();

  FitArgs fit_a;
  auto* fit = app.add_subcommand(
      "fit", "power-law fits over rbp curve tables -> sweep.csv (k, alpha, slope, r2, "
             "n_points, excluded_sizes), sweep.svg and sweep_<label>.svg");
  fit->add_option("inputs", fit_a.inputs, "curve tables written by 'rbpk rbp'")->required();
  fit->add_option("-m,--metric", fit_a.metric, "all | ce | rbp@K")->capture_default_str();
  fit->add_option("-o,--out-dir", fit_a.out_dir, "output directory")->capture_default_str();

  auto* lognormal = app.add_subcommand("lognormal", "discrete lognormal rank model");
  lognormal->require_subcommand(1);
  LognormalFitArgs lf_a;
  auto* lfit = lognormal->add_subcommand(
      "fit", "maximum-likelihood (mu, sigma) per stream -> lognormal_params.csv, plus "
             "<stem>.rankfreq.csv, <stem>.rankfreq_binned.csv (log2 bins) and <stem>.rankfreq.svg");
  lfit->add_option("inputs", lf_a.inputs, "rank-stream files")->required();
  lfit->add_option("--rel-tol", lf_a.rel_tol, "normalizer tolerance")->capture_default_str();
  lfit->add_option("-o,--out-dir", lf_a.out_dir, "output directory")->capture_default_str();

  LognormalPredictArgs lp_a;
  auto* lpred = lognormal->add_subcommand(
      "predict", "model-implied CE and -ln RBP_k scaling -> predicted_scaling_k<K>.csv/.svg; "
                 "prints |slope_CE - slope_RBP_k| against the 0.02 threshold");
  lpred->add_option("--params", lp_a.params_table, "lognormal_params.csv from 'lognormal fit'");
  lpred->add_option("--trend", lp_a.trend, "mu0,mu_slope,sigma0,sigma_slope")->delimiter(',');
  lpred->add_option("--sizes", lp_a.sizes, "model sizes for --trend")->delimiter(',');
  lpred->add_flag("--smooth", lp_a.smooth, "replace fitted params by their linear trend in ln S");
  lpred->add_option("-k,--k", lp_a.k, "k for RBP_k")->capture_default_str();
  lpred->add_option("--rel-tol", lp_a.rel_tol, "series tolerance")->capture_default_str();
  lpred->add_option("-o,--out-dir", lp_a.out_dir, "output directory")->capture_default_str();

  EmergenceArgs em_a;
  auto* em = app.add_subcommand(
      "emergence",
      "sequence success p = RBP_k^N. Model mode (--c, --alpha): curves exp(-C N S^-alpha). "
      "Empirical mode (stream inputs): length-N windows within documents -> emergence.csv "
      "(N, k, S, p, source, hits, windows), emergence_fit.csv, emergence_k<K>.svg");
  em->add_option("inputs", em_a.inputs, "rank-stream files (empirical mode)");
  em->add_option("-n,--n-grid", em_a.n_grid, "sequence lengths N")
      ->delimiter(',')
      ->capture_default_str();
  em->add_option("-k,--k-grid", em_a.k_grid, "k values")->delimiter(',')->capture_default_str();
  em->add_option("--c", em_a.c_const, "C (model mode)");
  em->add_option("--alpha", em_a.alpha, "alpha (model mode)");
  em->add_option("--sizes", em_a.sizes, "model sizes (model mode; default 1e6..1e12)")
      ->delimiter(',');
  em->add_option("-o,--out-dir", em_a.out_dir, "output directory")->capture_default_str();

  SynthArgs sy_a;
  auto* sy = app.add_subcommand(
      "synth", "synthetic rank streams from mu(S) = mu0 + mu_slope ln S, "
               "sigma(S) = sigma0 + sigma_slope ln S -> synth_S<size>.rbpk + manifest.txt");
  sy->add_option("--mu0", sy_a.mu0)->capture_default_str();
  sy->add_option("--mu-slope", sy_a.mu_slope)->capture_default_str();
  sy->add_option("--sigma0", sy_a.sigma0)->capture_default_str();
  sy->add_option("--sigma-slope", sy_a.sigma_slope)->capture_default_str();
  sy->add_option("--sizes", sy_a.sizes, "ascending model sizes")->delimiter(',')->required();
  sy->add_option("--tokens", sy_a.options.tokens_per_size, "records per size")
      ->capture_default_str();
  sy->add_option("--vocab", sy_a.options.vocab_size, "vocabulary size")->capture_default_str();
  sy->add_option("--seed", sy_a.options.seed, "master seed")->capture_default_str();
  sy->add_option("--corpus-id", sy_a.options.corpus_id)->capture_default_str();
  sy->add_flag("--no-logprob", sy_a.no_logprob, "omit the log-probability column");
  sy->add_option("-o,--out-dir", sy_a.out_dir, "output directory")->capture_default_str();

  auto* ex = app.add_subcommand(
      "extract", "run the separate model-rank-extractor if installed (arguments are passed "
                 "through: --model --corpus --context-len --max-tokens --out --precision)");
  ex->allow_extras();
  ex->prefix_command();
  ex->set_help_flag();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*rbp) return CmdRbp(rbp_a, rbp, out, err);
    if (*fit) return CmdFit(fit_a, fit, out, err);
    if (*lfit) return CmdLognormalFit(lf_a, lfit, out, err);
    if (*lpred) return CmdLognormalPredict(lp_a, lpred, out, err);
    if (*em) return CmdEmergence(em_a, em, out, err);
    if (*sy) return CmdSynth(sy_a, out);
    if (*ex) return CmdExtract(ex->remaining(), out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitUsage;
}

}  // namespace rbpk::cli
