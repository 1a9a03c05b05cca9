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

#include <algorithm>
#include <set>

#include "fixtures.hpp"

using namespace prunedb;
using testkit::Rng;

namespace {

ColumnStats stats_of(const std::vector<std::int64_t>& values) {
  std::vector<Value> col(values.begin(), values.end());
  return compute_stats(col);
}

/// Independent ordering for the oracle: NULLs last, then by value in the
/// requested direction, then by origin.
bool oracle_before(const TopKEntry& a, const TopKEntry& b, Direction dir) {
  if (a.order_value.is_null() != b.order_value.is_null()) return b.order_value.is_null();
  if (!a.order_value.is_null()) {
    if (less(a.order_value, b.order_value)) return dir == Direction::Asc;
    if (less(b.order_value, a.order_value)) return dir == Direction::Desc;
  }
  return a.origin < b.origin;
}

Catalog clustered(std::size_t partitions, std::size_t rows) {
  std::vector<Row> data;
  for (std::size_t i = 0; i < partitions * rows; ++i) data.push_back({Value(static_cast<std::int64_t>(i))});
  Catalog c;
  c.add(build_table("t", TableSchema({{"x", Type::Int64}}), std::move(data), rows));
  return c;
}

}  // namespace

TEST(TopKState, KeepsBestAndTightensBoundary) {
  TopKState s(2, Direction::Desc);
  EXPECT_FALSE(s.boundary());
  s.insert(Value(5), {1, 0});
  s.insert(Value(9), {1, 1});
  EXPECT_EQ(s.boundary()->as_int(), 5);
  EXPECT_FALSE(s.insert(Value(5), {2, 0}));  // a tie with a later origin never displaces
  EXPECT_TRUE(s.insert(Value(5), {0, 0}));   // an earlier origin does
  EXPECT_TRUE(s.insert(Value(7), {3, 0}));
  auto out = s.sorted();
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].order_value.as_int(), 9);
  EXPECT_EQ(out[1].order_value.as_int(), 7);
  EXPECT_FALSE(TopKState(0, Direction::Asc).insert(Value(1), {0, 0}));
}

TEST(TopKStateProperty, MatchesFullSort) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng(seed);
    Direction dir = testkit::chance(rng, 50) ? Direction::Desc : Direction::Asc;
    std::size_t n = testkit::pick(rng, 40);
    std::uint64_t k = testkit::pick(rng, 45);
    std::vector<TopKEntry> all;
    TopKState s(k, dir);
    for (std::uint32_t i = 0; i < n; ++i) {
      Value v = testkit::chance(rng, 15) ? Value::null() : Value(testkit::between(rng, -5, 5));
      if (testkit::chance(rng, 5)) v = Value(std::nan(""));
      Origin o = {static_cast<std::uint32_t>(testkit::pick(rng, 4)), i};
      all.push_back({v, o, {}});
      s.insert(v, o);
    }
    std::sort(all.begin(), all.end(), [&](const TopKEntry& a, const TopKEntry& b) { return oracle_before(a, b, dir); });
    all.resize(std::min<std::size_t>(all.size(), k));
    auto got = s.sorted();
    ASSERT_EQ(got.size(), all.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      ASSERT_TRUE(got[i].order_value == all[i].order_value) << "seed " << seed << " at " << i;
      ASSERT_EQ(got[i].origin, all[i].origin);
    }
  }
}

TEST(TopKPrune, BoundaryComparisons) {
  ColumnStats p = stats_of({10, 20});
  EXPECT_TRUE(should_prune(p, Value(20), Direction::Desc));  // a tie cannot displace
  EXPECT_FALSE(should_prune(p, Value(19), Direction::Desc));
  EXPECT_TRUE(should_prune(p, Value(10), Direction::Asc));
  EXPECT_FALSE(should_prune(p, Value(11), Direction::Asc));
  EXPECT_FALSE(strictly_below(Interval::of(Value(10), Value(20)), Value(20), Direction::Desc));
  EXPECT_TRUE(strictly_below(Interval::of(Value(10), Value(20)), Value(21), Direction::Desc));
  ColumnStats nulls;
  nulls.row_count = nulls.null_count = 3;
  EXPECT_TRUE(should_prune(nulls, Value(0), Direction::Desc));
  EXPECT_FALSE(should_prune(p, Value::null(), Direction::Desc));
}

TEST(TopKOrder, FullSortAndSeededShuffle) {
  std::vector<std::pair<PartitionId, ColumnStats>> parts = {
      {1, stats_of({1, 5})}, {2, stats_of({3, 9})}, {3, stats_of({0, 2})}, {4, stats_of({4, 9})}};
  EXPECT_EQ(order_scan_set(parts, Direction::Desc, ScanOrderStrategy::FullSort), (std::vector<PartitionId>{2, 4, 1, 3}));
  EXPECT_EQ(order_scan_set(parts, Direction::Asc, ScanOrderStrategy::FullSort), (std::vector<PartitionId>{3, 1, 2, 4}));
  auto a = order_scan_set(parts, Direction::Desc, ScanOrderStrategy::NoneRandom, 7);
  auto b = order_scan_set(parts, Direction::Desc, ScanOrderStrategy::NoneRandom, 7);
  EXPECT_EQ(a, b);
  std::sort(a.begin(), a.end());
  EXPECT_EQ(a, (std::vector<PartitionId>{1, 2, 3, 4}));
}

TEST(TopKInit, TrackingExampleBoundary) {
  Catalog c = testkit::tracking_catalog();
  QueryResult r = execute(
      sql_to_plan("SELECT * FROM tracking_data WHERE species LIKE 'Alpine%' AND s >= 50 ORDER BY s DESC LIMIT 3", c), c,
      ExecConfig{});
  const ScanStats& s = r.stats.scans.at(0);
  ASSERT_TRUE(s.topk.initial_boundary);
  EXPECT_EQ(s.topk.initial_boundary->as_int(), 76);
  EXPECT_EQ(s.pruned_by_filter, 1u);
  EXPECT_EQ(s.pruned_by_topk, 1u);  // P2 tops out at 71
  ASSERT_EQ(r.result.rows.size(), 3u);
  EXPECT_EQ(r.result.rows[0][1].as_int(), 101);
  EXPECT_EQ(r.result.rows[1][1].as_int(), 97);
  EXPECT_EQ(r.result.rows[2][1].as_int(), 83);
}

TEST(TopKInit, CandidatesOnSmallExample) {
  std::vector<FullMatchStats> fm = {{1, stats_of({10, 20, 30})}, {2, stats_of({25, 26})}, {3, stats_of({1, 40})}};
  auto c = init_boundary_candidates(fm, 2, Direction::Desc);
  EXPECT_EQ(c.kth_extreme->as_int(), 30);  // maxes 40, 30, 26
  EXPECT_EQ(c.cumulative->as_int(), 25);   // min 25 covers 2 rows
  EXPECT_EQ(init_boundary(fm, 2, Direction::Desc)->as_int(), 30);
  EXPECT_EQ(init_boundary(fm, 2, Direction::Asc)->as_int(), 10);
  EXPECT_FALSE(init_boundary(fm, 8, Direction::Desc));
}

// Brute force: the boundary is the best value v (among partition extremes)
// such that enough partitions or rows certainly reach v, and at least k actual
// rows rank at or before it.
TEST(TopKInitProperty, MatchesBruteForceAndIsSound) {
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    Rng rng(seed);
    Direction dir = testkit::chance(rng, 50) ? Direction::Desc : Direction::Asc;
    bool desc = dir == Direction::Desc;
    std::size_t n = testkit::pick(rng, 8);
    std::vector<FullMatchStats> fm;
    std::vector<std::int64_t> every;
    for (PartitionId id = 1; id <= n; ++id) {
      std::vector<std::int64_t> vals;
      std::size_t rows = 1 + testkit::pick(rng, 5);
      for (std::size_t r = 0; r < rows; ++r) vals.push_back(testkit::between(rng, -10, 10));
      every.insert(every.end(), vals.begin(), vals.end());
      fm.push_back({id, stats_of(vals)});
    }
    std::uint64_t k = 1 + testkit::pick(rng, 12);
    auto reaches = [&](std::int64_t v, std::int64_t x) { return desc ? x >= v : x <= v; };
    std::optional<std::int64_t> want;
    auto consider = [&](std::int64_t v) {
      if (!want || (desc ? v > *want : v < *want)) want = v;
    };
    for (const auto& p : fm) {
      for (std::int64_t v : {p.stats.min->as_int(), p.stats.max->as_int()}) {
        std::uint64_t parts = 0, rows = 0;
        for (const auto& q : fm) {
          if (reaches(v, (desc ? q.stats.max : q.stats.min)->as_int())) ++parts;
          if (reaches(v, (desc ? q.stats.min : q.stats.max)->as_int())) rows += q.stats.row_count;
        }
        if (v == (desc ? p.stats.max : p.stats.min)->as_int() && parts >= k) consider(v);
        if (v == (desc ? p.stats.min : p.stats.max)->as_int() && rows >= k) consider(v);
      }
    }
    auto got = init_boundary(fm, k, dir);
    ASSERT_EQ(got.has_value(), want.has_value()) << "seed " << seed;
    if (!got) continue;
    ASSERT_EQ(got->as_int(), *want) << "seed " << seed;
    auto at_or_before = std::count_if(every.begin(), every.end(), [&](std::int64_t x) { return reaches(*want, x); });
    ASSERT_GE(static_cast<std::uint64_t>(at_or_before), k);
  }
}

TEST(TopKShape, GroupByEligibility) {
  std::vector<std::string> keys = {"a", "b"};
  std::vector<std::string> by_a = {"a"}, by_c = {"c"};
  EXPECT_TRUE(groupby_topk_eligible(by_a, keys));
  EXPECT_FALSE(groupby_topk_eligible(by_c, keys));
}

// On perfectly clustered data a full-sort top-k scan reads exactly
// ceil(k / rows_per_partition) partitions.
TEST(TopKOptimal, ClusteredDataReadsMinimalPrefix) {
  struct Case {
    std::size_t partitions, rows;
  };
  int combos = 0;
  for (Case c : {Case{10, 10}, Case{25, 4}, Case{7, 13}, Case{40, 5}}) {
    Catalog cat = clustered(c.partitions, c.rows);
    for (std::uint64_t k : {1ul, 3ul, c.rows, c.rows + 1, 2 * c.rows + 1}) {
      for (std::string dir : {"DESC", "ASC"}) {
        for (bool init : {false, true}) {
          ExecConfig cfg = testkit::only(Technique::TopK);
          cfg.topk_init_boundary = init;
          std::string sql = "SELECT x FROM t ORDER BY x " + dir + " LIMIT " + std::to_string(k);
          QueryResult r = execute(sql_to_plan(sql, cat), cat, cfg);
          std::uint64_t want = (k + c.rows - 1) / c.rows;
          EXPECT_EQ(r.stats.scans.at(0).scanned, want) << sql << " init=" << init;
          EXPECT_EQ(r.stats.scans.at(0).pruned_by_topk, c.partitions - want) << sql;
          EXPECT_EQ(r.result.rows.size(), k);
        }
      }
      ++combos;
    }
  }
  EXPECT_EQ(combos, 20);
}

TEST(TopKOptimal, RandomOrderStillCorrect) {
  Catalog cat = clustered(20, 5);
  ExecConfig cfg;
  cfg.topk_strategy = ScanOrderStrategy::NoneRandom;
  cfg.topk_init_boundary = false;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.seed = seed;
    PlanPtr p = sql_to_plan("SELECT x FROM t ORDER BY x DESC LIMIT 7", cat);
    QueryResult r = execute(p, cat, cfg);
    auto v = testkit::equivalent(p, cat, r.result);
    EXPECT_TRUE(v.ok) << v.why;
    EXPECT_GE(r.stats.scans.at(0).scanned, 2u);
  }
}
