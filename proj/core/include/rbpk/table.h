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

// Comma-delimited report tables with a "# key: value" metadata block.
//
//   # rbpk-table: rbp_curve
//   # tool_version: 0.1.0
//   # config_hash: 3f2a...
//   # input_digest: a.rbpk=9c1e...
//   # model_id: pythia-70m
//   k,rbp,neg_log_rbp
//   1,0.31,1.171...
//
// Numbers are written in shortest round-trip form, so reading a table back
// reproduces every double exactly.

#ifndef RBPK_TABLE_H_
#define RBPK_TABLE_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rbpk/lognormal.h"
#include "rbpk/power_law.h"
#include "rbpk/rbp_metrics.h"

namespace rbpk {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct Provenance {
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> input_digests;  // name, hex
};

struct Table {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  // First header value for key, if present.
  std::optional<std::string> Header(std::string_view key) const;
  // Index of a column; throws kFormat if missing.
  std::size_t Column(std::string_view name) const;
};

std::string FormatDouble(double v);
double ParseDouble(std::string_view s);
std::uint64_t ParseUint(std::string_view s);

void AddProvenance(Table& table, const Provenance& provenance);

// Written via temp file + rename.
void WriteTable(const Table& table, const std::filesystem::path& path);
Table ReadTable(const std::filesystem::path& path);

Table CurveToTable(const RbpCurve& curve, const Provenance& provenance);
RbpCurve CurveFromTable(const Table& table);

// Columns: k, alpha, slope, r2, n_points, excluded_sizes[, normalizer].
Table SweepToTable(const SweepResult& sweep, const Provenance& provenance,
                   std::optional<std::string> normalizer = std::nullopt);

}  // namespace rbpk

#endif  // RBPK_TABLE_H_
