// Licensed to the Apache Software Foundation (ASF) under one
// or more contributor license agreements.  See the NOTICE file
// distributed with this work for additional information
// regarding copyright ownership.  The ASF licenses this file
// to you under the Apache License, Version 2.0 (the
// "License"); you may not use this file except in compliance
// with the License.  You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing,
// software distributed under the License is distributed on an
// "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, either express or implied.  See the License for the
// specific language governing permissions and limitations
// under the License.

#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace prunedb;
using testkit::Rng;

namespace {

Catalog small_catalog() {
  Catalog c;
  TableSchema s({{"a", Type::Int64}, {"g", Type::Utf8}});
  std::vector<Row> rows;
  for (std::int64_t i = 0; i < 40; ++i) rows.push_back({Value(i), Value(i % 2 ? "odd" : "even")});
  c.add(build_table("n", s, std::move(rows), 8));
  return c;
}

std::vector<Attribution> outcomes(const ScanStats& s) {
  std::vector<Attribution> out;
  for (const auto& [id, a] : s.attribution) out.push_back(a);
  return out;
}

}  // namespace

TEST(Executor, TrackingLimitQueryReadsOnePartition) {
  Catalog c = testkit::tracking_catalog();
  QueryResult r = execute(sql_to_plan("SELECT * FROM tracking_data WHERE species LIKE 'Alpine%' LIMIT 3", c), c);
  ASSERT_EQ(r.result.rows.size(), 3u);
  for (const auto& row : r.result.rows) EXPECT_TRUE(row[0].as_string().starts_with("Alpine"));
  const ScanStats& s = r.stats.scans.at(0);
  using A = Attribution;
  EXPECT_EQ(outcomes(s), (std::vector<A>{A::Filter, A::Limit, A::Scanned, A::Limit}));
  EXPECT_EQ(s.scanned, 1u);
  EXPECT_TRUE(s.limit.applied);
}

TEST(Executor, ExplainShowsCompileTimeDecisions) {
  Catalog c = testkit::tracking_catalog();
  PreparedQuery q = prepare(sql_to_plan("SELECT * FROM tracking_data WHERE species LIKE 'Alpine%' LIMIT 3", c), c, {});
  std::string text = explain(q);
  EXPECT_NE(text.find("limit pruning"), std::string::npos) << text;
  EXPECT_NE(text.find("{3}"), std::string::npos) << text;
}

TEST(Executor, LimitZeroScansNothing) {
  Catalog c = testkit::tracking_catalog();
  QueryResult r = execute(sql_to_plan("SELECT * FROM tracking_data LIMIT 0", c), c);
  EXPECT_TRUE(r.result.rows.empty());
  EXPECT_EQ(r.stats.scans.at(0).scanned, 0u);
  EXPECT_EQ(r.stats.scans.at(0).pruned_by_limit, 4u);
}

TEST(Executor, DisabledTechniquesScanEverything) {
  Catalog c = testkit::tracking_catalog();
  QueryResult r = execute(sql_to_plan("SELECT * FROM tracking_data WHERE species LIKE 'Alpine%' LIMIT 3", c), c,
                          ExecConfig::none());
  EXPECT_EQ(r.stats.scans.at(0).scanned, 4u);
  EXPECT_EQ(r.stats.scans.at(0).pruned(), 0u);
}

TEST(Executor, OverflowIsAnError) {
  Catalog c;
  TableSchema s({{"a", Type::Int64}});
  Value max(std::numeric_limits<std::int64_t>::max());
  c.add(build_table("big", s, {{max}, {max}}, 4));
  EXPECT_THROW(execute(sql_to_plan("SELECT a + 1 FROM big", c), c), ExecutionError);
  EXPECT_THROW(execute(sql_to_plan("SELECT SUM(a) FROM big", c), c), ExecutionError);
}

TEST(Executor, EmptyTableAndEmptyResult) {
  Catalog c;
  c.add(Table("e", TableSchema({{"a", Type::Int64}}), {}));
  QueryResult r = execute(sql_to_plan("SELECT COUNT(*), SUM(a) FROM e", c), c);
  ASSERT_EQ(r.result.rows.size(), 1u);
  EXPECT_EQ(r.result.rows[0][0].as_int(), 0);
  EXPECT_TRUE(r.result.rows[0][1].is_null());
  EXPECT_TRUE(execute(sql_to_plan("SELECT * FROM e ORDER BY a LIMIT 5", c), c).result.rows.empty());
}

TEST(Executor, GroupByTopKOnGroupKey) {
  Catalog c = small_catalog();
  PlanPtr p = sql_to_plan("SELECT a, COUNT(*) AS n FROM n GROUP BY a ORDER BY a DESC LIMIT 3", c);
  QueryResult r = execute(p, c);
  ASSERT_EQ(r.result.rows.size(), 3u);
  EXPECT_EQ(r.result.rows[0][0].as_int(), 39);
  EXPECT_EQ(r.result.rows[2][0].as_int(), 37);
  EXPECT_EQ(r.stats.scans.at(0).topk.plan_shape, "aggregation");
  EXPECT_GT(r.stats.scans.at(0).pruned_by_topk, 0u);
  auto v = testkit::equivalent(p, c, r.result);
  EXPECT_TRUE(v.ok) << v.why;
}

TEST(Executor, OrderByAggregateIsNotPruned) {
  Catalog c = small_catalog();
  PlanPtr p = sql_to_plan("SELECT g, COUNT(*) AS n FROM n GROUP BY g ORDER BY n DESC LIMIT 1", c);
  QueryResult r = execute(p, c);
  EXPECT_EQ(r.stats.scans.at(0).pruned_by_topk, 0u);
  EXPECT_EQ(r.stats.scans.at(0).scanned, 5u);
}

TEST(Executor, LeftJoinKeepsUnmatchedRows) {
  Catalog c = small_catalog();
  TableSchema d({{"k", Type::Int64}, {"label", Type::Utf8}});
  c.add(build_table("d", d, {{Value(1), Value("one")}, {Value(100), Value("hundred")}, {Value::null(), Value("none")}}, 2));
  PlanPtr p = sql_to_plan("SELECT d.label, n.a FROM d LEFT JOIN n ON d.k = n.a", c);
  QueryResult r = execute(p, c);
  ASSERT_EQ(r.result.rows.size(), 3u);
  auto v = testkit::equivalent(p, c, r.result);
  EXPECT_TRUE(v.ok) << v.why;
  PlanPtr inner = sql_to_plan("SELECT d.label, n.a FROM d JOIN n ON d.k = n.a", c);
  QueryResult ri = execute(inner, c);
  ASSERT_EQ(ri.result.rows.size(), 1u);
  // Build side is the smaller table d; n is probed and pruned down to partition 1.
  const ScanStats& probe = ri.stats.scans.at(1);
  EXPECT_EQ(probe.table, "n");
  EXPECT_EQ(probe.scanned, 1u);
  EXPECT_EQ(probe.pruned_by_join, 4u);
}

// The pruning executor agrees with the oracle on random data and queries,
// under every technique setting, and its statistics are conserved.
TEST(ExecutorProperty, AgreesWithOracle) {
  std::vector<ExecConfig> configs = {ExecConfig{}, ExecConfig::none()};
  for (Technique t : kTechniques) configs.push_back(testkit::only(t));
  ExecConfig threaded;
  threaded.workers = 4;
  configs.push_back(threaded);
  std::size_t runs = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng(seed);
    Catalog c = testkit::random_catalog(rng);
    std::string sql = testkit::random_query(rng);
    PlanPtr p = sql_to_plan(sql, c);
    for (const auto& cfg : configs) {
      QueryResult r = execute(p, c, cfg);
      auto v = testkit::equivalent(p, c, r.result);
      ASSERT_TRUE(v.ok) << sql << ": " << v.why;
      auto k = testkit::conserved(r.stats, c);
      ASSERT_TRUE(k.ok) << sql << ": " << k.why;
      ++runs;
    }
  }
  EXPECT_EQ(runs, 300u * 7u);
}

// Worker count changes neither the rows nor their order.
TEST(ExecutorProperty, ResultsIndependentOfWorkerCount) {
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    Rng rng(seed + 5000);
    Catalog c = testkit::random_catalog(rng, {30, 20, 10});
    std::string sql = testkit::random_query(rng);
    PlanPtr p = sql_to_plan(sql, c);
    ExecConfig one;
    QueryResult base = execute(p, c, one);
    for (std::size_t w : {2u, 3u, 8u}) {
      ExecConfig cfg;
      cfg.workers = w;
      QueryResult r = execute(p, c, cfg);
      ASSERT_EQ(r.result.rows.size(), base.result.rows.size()) << sql;
      for (std::size_t i = 0; i < r.result.rows.size(); ++i)
        ASSERT_TRUE(testkit::rows_equal(r.result.rows[i], base.result.rows[i])) << sql << " workers=" << w << " row " << i;
    }
  }
}
