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

std::vector<PartitionId> all_ids(const Table& t) {
  std::vector<PartitionId> ids;
  for (const auto& p : t.partitions()) ids.push_back(p.id());
  return ids;
}

NodeTelemetry tel(std::uint64_t evals, std::uint64_t passes, double cost_each) {
  NodeTelemetry t;
  t.eval_count = evals;
  t.pass_count = passes;
  t.total_eval_cost = cost_each * static_cast<double>(evals);
  return t;
}

bool subset(const std::vector<PartitionId>& a, const std::vector<PartitionId>& b) {
  std::set<PartitionId> s(b.begin(), b.end());
  return std::all_of(a.begin(), a.end(), [&](PartitionId id) { return s.count(id) > 0; });
}

}  // namespace

TEST(PruningTree, TrackingExampleScanAndFullMatchSets) {
  Table t = testkit::tracking_table();
  PruningTree tree = PruningTree::build(testkit::tracking_predicate());
  auto ids = all_ids(t);
  PruningConfig cfg;
  cfg.adapt = false;
  FilterPruneResult r = prune_scan_set(tree, t, ids, cfg);
  EXPECT_EQ(r.scan_set, (std::vector<PartitionId>{2, 3, 4}));
  EXPECT_EQ(r.full_match_set, (std::vector<PartitionId>{3}));
}

TEST(PruningTree, FlattensNestedJunctionsInPreOrder) {
  auto a = ex::gt(ex::col("a"), ex::lit(Value(1)));
  auto b = ex::lt(ex::col("b"), ex::lit(Value(2)));
  auto c = ex::eq(ex::col("a"), ex::lit(Value(3)));
  auto d = ex::is_null(ex::col("b"));
  PruningTree t = PruningTree::build(ex::and_({ex::and_({a, b}), ex::or_({c, d})}));
  ASSERT_EQ(t.size(), 6u);
  EXPECT_EQ(t.node(0).kind, PruningTree::Kind::And);
  EXPECT_EQ(t.node(0).children, (std::vector<NodeId>{1, 2, 3}));
  EXPECT_EQ(t.node(3).kind, PruningTree::Kind::Or);
  EXPECT_EQ(t.node(3).children, (std::vector<NodeId>{4, 5}));
  EXPECT_EQ(*t.node(4).parent, 3u);
}

TEST(PruningTree, AndStopsAtFirstAlwaysFalseChild) {
  Table t = testkit::tracking_table();
  // species LIKE 'Z%' is false everywhere, so the second conjunct is never evaluated.
  auto never = ex::like(ex::col("species"), "Z%");
  auto other = ex::gt(ex::col("altit"), ex::lit(Value(0)));
  PruningTree tree = PruningTree::build(ex::and_({never, other}));
  PruningConfig cfg;
  cfg.adapt = false;
  auto ids = all_ids(t);
  FilterPruneResult r = prune_scan_set(tree, t, ids, cfg);
  EXPECT_TRUE(r.scan_set.empty());
  EXPECT_EQ(tree.telemetry()[1].eval_count, 4u);
  EXPECT_EQ(tree.telemetry()[1].pass_count, 0u);
  EXPECT_EQ(tree.telemetry()[2].eval_count, 0u);
}

TEST(Reorder, AndPutsCheapSelectiveChildrenFirst) {
  PruningTree::Node n;
  n.kind = PruningTree::Kind::And;
  n.children = {1, 2, 3};
  std::vector<NodeTelemetry> tm(4);
  tm[1] = tel(100, 90, 1.0);  // prunes 10%
  tm[2] = tel(100, 10, 1.0);  // prunes 90%
  tm[3] = tel(100, 10, 9.0);  // prunes 90% but expensive
  EXPECT_EQ(reorder_children(n, tm, 32), (std::vector<NodeId>{2, 3, 1}));
}

TEST(Reorder, OrPutsPermissiveChildrenFirst) {
  PruningTree::Node n;
  n.kind = PruningTree::Kind::Or;
  n.children = {1, 2};
  std::vector<NodeTelemetry> tm(3);
  tm[1] = tel(50, 5, 1.0);
  tm[2] = tel(50, 45, 1.0);
  EXPECT_EQ(reorder_children(n, tm, 32), (std::vector<NodeId>{2, 1}));
}

TEST(Reorder, WarmingUpChildrenKeepTheirSlot) {
  PruningTree::Node n;
  n.kind = PruningTree::Kind::And;
  n.children = {1, 2, 3};
  std::vector<NodeTelemetry> tm(4);
  tm[1] = tel(100, 100, 1.0);
  tm[2] = tel(3, 0, 1.0);  // too few evaluations to be trusted
  tm[3] = tel(100, 0, 1.0);
  EXPECT_EQ(reorder_children(n, tm, 32), (std::vector<NodeId>{3, 2, 1}));
}

TEST(Cutoff, DisablesUselessConjunctOnly) {
  auto a = ex::gt(ex::col("a"), ex::lit(Value(1)));
  auto b = ex::lt(ex::col("b"), ex::lit(Value(2)));
  PruningTree t = PruningTree::build(ex::and_({a, b}));
  CostModel cm;
  // Never prunes: any evaluation cost outweighs the zero benefit.
  EXPECT_EQ(cutoff_check(t, 1, tel(100, 100, 1.0), 1000, cm), CutoffDecision::Disable);
  // Prunes half the partitions: worth 50 scan units per evaluation unit.
  EXPECT_EQ(cutoff_check(t, 2, tel(100, 50, 1.0), 1000, cm), CutoffDecision::Keep);
  // Rarely prunes and costs more than it saves.
  EXPECT_EQ(cutoff_check(t, 2, tel(100, 99, 5.0), 1000, cm), CutoffDecision::Disable);
  // The root is never cut.
  EXPECT_EQ(cutoff_check(t, 0, tel(100, 100, 1.0), 1000, cm), CutoffDecision::Keep);
}

TEST(Cutoff, NeverUnderOr) {
  auto a = ex::gt(ex::col("a"), ex::lit(Value(1)));
  auto b = ex::lt(ex::col("b"), ex::lit(Value(2)));
  PruningTree t = PruningTree::build(ex::or_({a, b}));
  EXPECT_EQ(cutoff_check(t, 1, tel(100, 100, 50.0), 1000, CostModel{}), CutoffDecision::Keep);
  EXPECT_FALSE(t.can_disable(1));
  EXPECT_FALSE(t.disable(1));
  EXPECT_TRUE(t.node(1).enabled);
}

TEST(Cutoff, WarmupDefersDecision) {
  PruningTree t = PruningTree::build(
      ex::and_({ex::gt(ex::col("a"), ex::lit(Value(1))), ex::lt(ex::col("b"), ex::lit(Value(2)))}));
  EXPECT_EQ(cutoff_check(t, 1, tel(5, 5, 1.0), 1000, CostModel{}, 32), CutoffDecision::Keep);
}

// Disabling any legal set of nodes, or letting the tree adapt, can only keep
// more partitions: the scan set grows and the full-match set shrinks.
TEST(PruningTreeProperty, DisabledAndAdaptedTreesAreSupersets) {
  int nontrivial = 0;
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    Rng rng(seed * 7919 + 1);
    Table t = testkit::random_table(rng, "t1", testkit::schema_t1(), {40, 8, 10});
    ExprPtr p = parse_expr(testkit::random_predicate(rng, testkit::cols_t1(""), 3));
    auto ids = all_ids(t);
    PruningConfig fixed;
    fixed.adapt = false;
    PruningTree base = PruningTree::build(p);
    FilterPruneResult exact = prune_scan_set(base, t, ids, fixed);

    PruningTree cut = PruningTree::build(p);
    for (NodeId id = 1; id < cut.size(); ++id) {
      if (testkit::chance(rng, 40)) cut.disable(id);
    }
    FilterPruneResult loose = prune_scan_set(cut, t, ids, fixed);
    ASSERT_TRUE(subset(exact.scan_set, loose.scan_set)) << to_string(*p);
    ASSERT_TRUE(subset(loose.full_match_set, exact.full_match_set)) << to_string(*p);
    if (loose.scan_set.size() > exact.scan_set.size()) ++nontrivial;

    PruningConfig adaptive;
    adaptive.warmup = 2;
    adaptive.adapt_interval = 4;
    PruningTree ad = PruningTree::build(p);
    FilterPruneResult adapted = prune_scan_set(ad, t, ids, adaptive);
    ASSERT_TRUE(subset(exact.scan_set, adapted.scan_set)) << to_string(*p);
    ASSERT_TRUE(subset(adapted.full_match_set, exact.full_match_set)) << to_string(*p);
    for (NodeId id : ad.disabled_nodes()) ASSERT_TRUE(ad.can_disable(id));
  }
  EXPECT_GT(nontrivial, 0);
}

// Reordering alone never changes any partition's classification.
TEST(PruningTreeProperty, ReorderPreservesClassification) {
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    Rng rng(seed + 424242);
    Table t = testkit::random_table(rng, "t1", testkit::schema_t1(), {30, 8, 10});
    ExprPtr p = parse_expr(testkit::random_predicate(rng, testkit::cols_t1(""), 3));
    auto ids = all_ids(t);
    PruningConfig fixed;
    fixed.adapt = false;
    PruningTree base = PruningTree::build(p);
    FilterPruneResult want = prune_scan_set(base, t, ids, fixed);
    PruningTree shuffled = PruningTree::build(p);
    for (NodeId id = 0; id < shuffled.size(); ++id) {
      auto order = shuffled.node(id).children;
      std::shuffle(order.begin(), order.end(), rng);
      shuffled.set_child_order(id, order);
    }
    FilterPruneResult got = prune_scan_set(shuffled, t, ids, fixed);
    ASSERT_EQ(got.classification, want.classification) << to_string(*p);
  }
}
