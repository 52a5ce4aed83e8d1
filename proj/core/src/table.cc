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

#include "rbpk/table.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "rbpk/error.h"

namespace rbpk {
namespace {

constexpr std::string_view kKindKey = "rbpk-table";

std::vector<std::string> SplitCsv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view StripCr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<std::string> Table::Header(std::string_view key) const {
  for (const auto& [k, v] : header) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::size_t Table::Column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw Error(ErrorKind::kFormat, "table has no column '" + std::string(name) + "'");
}

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double ParseDouble(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::kFormat, "not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t ParseUint(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::kFormat, "not an unsigned integer: '" + std::string(s) + "'");
  }
  return v;
}

void AddProvenance(Table& table, const Provenance& provenance) {
  table.header.emplace_back("tool_version", std::string(kToolVersion));
  table.header.emplace_back("config_hash", provenance.config_hash);
  for (const auto& [name, digest] : provenance.input_digests) {
    table.header.emplace_back("input_digest", name + "=" + digest);
  }
}

void WriteTable(const Table& table, const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot open " + tmp.string());
    out << "# " << kKindKey << ": " << table.kind << '\n';
    for (const auto& [k, v] : table.header) out << "# " << k << ": " << v << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      out << (i ? "," : "") << table.columns[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << '\n';
    }
    if (!out) throw Error(ErrorKind::kIo, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot rename onto " + path.string());
}

Table ReadTable(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  Table t;
  std::string line;
  bool have_columns = false;
  while (std::getline(in, line)) {
    std::string_view v = StripCr(line);
    if (v.empty()) continue;
    if (v.front() == '#') {
      v.remove_prefix(1);
      while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
      const std::size_t colon = v.find(": ");
      if (colon == std::string_view::npos) continue;
      std::string key(v.substr(0, colon));
      std::string value(v.substr(colon + 2));
      if (key == kKindKey) {
        t.kind = std::move(value);
      } else {
        t.header.emplace_back(std::move(key), std::move(value));
      }
      continue;
    }
    if (!have_columns) {
      t.columns = SplitCsv(v);
      have_columns = true;
      continue;
    }
    auto row = SplitCsv(v);
    if (row.size() != t.columns.size()) {
      throw Error(ErrorKind::kFormat, path.string() + ": row has " +
                                          std::to_string(row.size()) + " fields, expected " +
                                          std::to_string(t.columns.size()));
    }
    t.rows.push_back(std::move(row));
  }
  if (!have_columns) throw Error(ErrorKind::kFormat, path.string() + ": no column header");
  return t;
}

Table CurveToTable(const RbpCurve& curve, const Provenance& provenance) {
  Table t;
  t.kind = "rbp_curve";
  AddProvenance(t, provenance);
  t.header.emplace_back("model_id", curve.meta.model_id);
  t.header.emplace_back("model_size", std::to_string(curve.meta.model_size));
  t.header.emplace_back("corpus_id", curve.meta.corpus_id);
  t.header.emplace_back("vocab_size", std::to_string(curve.meta.vocab_size));
  t.header.emplace_back("token_count", std::to_string(curve.meta.token_count));
  t.header.emplace_back("ce", curve.ce ? FormatDouble(*curve.ce) : "NA");
  t.columns = {"k", "rbp", "neg_log_rbp"};
  for (const auto& [k, rbp] : curve.points) {
    const double nl = rbp > 0.0 ? -std::log(rbp) : std::numeric_limits<double>::infinity();
    t.rows.push_back({std::to_string(k), FormatDouble(rbp), FormatDouble(nl == 0.0 ? 0.0 : nl)});
  }
  return t;
}

RbpCurve CurveFromTable(const Table& table) {
  if (table.kind != "rbp_curve") {
    throw Error(ErrorKind::kFormat, "expected an rbp_curve table, got '" + table.kind + "'");
  }
  auto need = [&](std::string_view key) {
    auto v = table.Header(key);
    if (!v) throw Error(ErrorKind::kFormat, "curve table lacks '" + std::string(key) + "'");
    return *v;
  };
  RbpCurve c;
  c.meta.model_id = need("model_id");
  c.meta.model_size = ParseUint(need("model_size"));
  c.meta.corpus_id = need("corpus_id");
  c.meta.vocab_size = static_cast<std::uint32_t>(ParseUint(need("vocab_size")));
  c.meta.token_count = ParseUint(need("token_count"));
  const std::string ce = need("ce");
  if (ce != "NA") {
    c.ce = ParseDouble(ce);
    c.meta.has_logprob = true;
  }
  const std::size_t kc = table.Column("k");
  const std::size_t rc = table.Column("rbp");
  for (const auto& row : table.rows) {
    c.points[ParseUint(row[kc])] = ParseDouble(row[rc]);
  }
  return c;
}

Table SweepToTable(const SweepResult& sweep, const Provenance& provenance,
                   std::optional<std::string> normalizer) {
  Table t;
  t.kind = "power_law_sweep";
  AddProvenance(t, provenance);
  t.header.emplace_back("fit", "OLS of ln(value) on ln(S), natural logs");
  t.columns = {"k", "alpha", "slope", "r2", "n_points", "excluded_sizes"};
  if (normalizer) t.columns.push_back("normalizer");
  for (const SweepRow& row : sweep.rows) {
    std::string excluded;
    for (std::size_t i = 0; i < row.excluded_sizes.size(); ++i) {
      excluded += (i ? ";" : "") + std::to_string(row.excluded_sizes[i]);
    }
    std::vector<std::string> cells;
    if (row.fit) {
      cells = {row.label, FormatDouble(row.fit->alpha), FormatDouble(row.fit->slope),
               FormatDouble(row.fit->r2), std::to_string(row.fit->n_points), excluded};
    } else {
      cells = {row.label, "nan", "nan", "nan", "0", excluded};
    }
    if (normalizer) cells.push_back(*normalizer);
    t.rows.push_back(std::move(cells));
  }
  return t;
}

}  // namespace rbpk
