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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "rbpk/error.h"

namespace rbpk {
namespace {

namespace fs = std::filesystem;

class TableTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rbpk_table_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST(FormatDoubleTest, RoundTripsExactly) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 10000; ++i) {
    double v;
    const std::uint64_t bits = rng();
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) continue;
    EXPECT_EQ(ParseDouble(FormatDouble(v)), v);
  }
  EXPECT_EQ(FormatDouble(0.1), "0.1");
  EXPECT_EQ(FormatDouble(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_TRUE(std::isnan(ParseDouble(FormatDouble(std::nan("")))));
}

TEST(ParseTest, RejectsGarbage) {
  EXPECT_THROW(ParseDouble("1.5x"), Error);
  EXPECT_THROW(ParseDouble(""), Error);
  EXPECT_THROW(ParseUint("-1"), Error);
  EXPECT_EQ(ParseUint("18446744073709551615"), std::numeric_limits<std::uint64_t>::max());
}

TEST_F(TableTest, WriteReadRoundTrip) {
  Table t;
  t.kind = "demo";
  t.header = {{"a", "1"}, {"b", "two words"}};
  t.columns = {"x", "y"};
  t.rows = {{"1", "0.5"}, {"2", "nan"}};
  const fs::path p = dir_ / "t.csv";
  WriteTable(t, p);
  EXPECT_FALSE(fs::exists(dir_ / "t.csv.tmp"));
  const Table r = ReadTable(p);
  EXPECT_EQ(r.kind, "demo");
  EXPECT_EQ(r.header, t.header);
  EXPECT_EQ(r.columns, t.columns);
  EXPECT_EQ(r.rows, t.rows);
  EXPECT_EQ(r.Header("b"), "two words");
  EXPECT_FALSE(r.Header("missing").has_value());
  EXPECT_EQ(r.Column("y"), 1u);
  EXPECT_THROW(r.Column("z"), Error);
}

TEST_F(TableTest, RaggedRowIsFormatError) {
  const fs::path p = dir_ / "bad.csv";
  std::ofstream(p) << "# rbpk-table: demo\nx,y\n1,2\n3\n";
  try {
    ReadTable(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }
  EXPECT_THROW(ReadTable(dir_ / "absent.csv"), Error);
}

TEST_F(TableTest, CurveRoundTripWithProvenance) {
  RbpCurve c;
  c.meta.model_id = "m-1";
  c.meta.model_size = 125000000;
  c.meta.corpus_id = "wiki";
  c.meta.vocab_size = 50257;
  c.meta.token_count = 999;
  c.points = {{1, 0.4123456789012345}, {10, 0.7}, {100, 1.0}};
  c.ce = 2.718281828459045;
  Provenance prov{"abc123", {{"in.rbpk", "deadbeef"}}};
  const Table t = CurveToTable(c, prov);
  EXPECT_EQ(t.Header("tool_version"), std::string(kToolVersion));
  EXPECT_EQ(t.Header("config_hash"), "abc123");
  EXPECT_EQ(t.Header("input_digest"), "in.rbpk=deadbeef");

  const fs::path p = dir_ / "curve.csv";
  WriteTable(t, p);
  const RbpCurve back = CurveFromTable(ReadTable(p));
  EXPECT_EQ(back.meta.model_id, "m-1");
  EXPECT_EQ(back.meta.model_size, 125000000u);
  EXPECT_EQ(back.meta.vocab_size, 50257u);
  EXPECT_EQ(back.points, c.points);
  EXPECT_EQ(back.ce, c.ce);

  // neg_log_rbp column is -ln(rbp) and exactly 0 at rbp = 1.
  const Table r = ReadTable(p);
  const std::size_t nl = r.Column("neg_log_rbp");
  EXPECT_EQ(ParseDouble(r.rows[0][nl]), -std::log(0.4123456789012345));
  EXPECT_EQ(r.rows[2][nl], "0");
}

TEST_F(TableTest, CurveWithoutCeAndWrongKind) {
  RbpCurve c;
  c.meta.model_id = "m";
  c.meta.vocab_size = 10;
  c.points = {{1, 0.5}};
  const Table t = CurveToTable(c, {});
  EXPECT_EQ(t.Header("ce"), "NA");
  EXPECT_FALSE(CurveFromTable(t).ce.has_value());
  Table other = t;
  other.kind = "power_law_sweep";
  EXPECT_THROW(CurveFromTable(other), Error);
}

TEST(SweepToTableTest, ColumnsAndFailedRows) {
  SweepResult s;
  SweepRow ok;
  ok.label = "CE";
  ok.fit = PowerLawFit{.alpha = 0.05, .log_prefactor = 1.0, .r2 = 0.99, .n_points = 5, .slope = -0.05};
  SweepRow bad;
  bad.label = "30000";
  bad.k = 30000;
  bad.excluded_sizes = {1000, 100000};
  bad.error = "need >= 2 sizes";
  s.rows = {ok, bad};
  const Table t = SweepToTable(s, {}, std::string("exact"));
  EXPECT_EQ(t.columns, (std::vector<std::string>{"k", "alpha", "slope", "r2", "n_points",
                                                 "excluded_sizes", "normalizer"}));
  EXPECT_EQ(t.rows[0][0], "CE");
  EXPECT_EQ(t.rows[0][1], "0.05");
  EXPECT_EQ(t.rows[1][1], "nan");
  EXPECT_EQ(t.rows[1][5], "1000;100000");
  EXPECT_EQ(t.rows[1][6], "exact");
  EXPECT_EQ(SweepToTable(s, {}).columns.size(), 6u);
}

}  // namespace
}  // namespace rbpk
