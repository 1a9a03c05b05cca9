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

// Filter pruning. A predicate is split at its AND/OR structure into a tree of
// pruner leaves; each partition is classified by walking the tree over its
// zone maps. Per-node telemetry (evaluations, partitions passed, cost) drives
// two local adaptations at fixed intervals:
//  - reordering the children of AND/OR nodes so that cheap, decisive children
//    run first and short-circuit the rest;
//  - cutoff: a child of an AND that costs more than it saves stops being
//    evaluated and is treated as Maybe from then on. The row filter itself is
//    unaffected.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "prunedb/expr.hpp"
#include "prunedb/meta_eval.hpp"
#include "prunedb/partition_store.hpp"

namespace prunedb {

using NodeId = std::uint32_t;

struct NodeTelemetry {
  std::uint64_t eval_count = 0;
  std::uint64_t pass_count = 0;  // evaluations that were not AlwaysFalse
  double total_eval_cost = 0;

  double pass_rate() const { return eval_count ? static_cast<double>(pass_count) / eval_count : 1.0; }
  double prune_rate() const { return 1.0 - pass_rate(); }
  double avg_cost() const { return eval_count ? total_eval_cost / eval_count : 0.0; }

  void merge(const NodeTelemetry& other) {
    eval_count += other.eval_count;
    pass_count += other.pass_count;
    total_eval_cost += other.total_eval_cost;
  }
};

enum class CostMode : std::uint8_t { Abstract, WallClock };

struct CostModel {
  double scan_cost = 100.0;  // cost units to scan one partition
};

struct PruningConfig {
  bool adapt = true;
  std::uint32_t warmup = 32;          // evaluations before a node's telemetry is trusted
  std::uint32_t adapt_interval = 64;  // partitions between adaptation points
  CostModel cost_model;
  CostMode cost_mode = CostMode::Abstract;
};

enum class CutoffDecision : std::uint8_t { Keep, Disable };

class PruningTree {
 public:
  enum class Kind : std::uint8_t { Leaf, And, Or };

  struct Node {
    NodeId id = 0;
    Kind kind = Kind::Leaf;
    ExprPtr predicate;  // leaves only
    std::vector<NodeId> children;
    std::optional<NodeId> parent;
    bool enabled = true;
    double leaf_cost = 0;  // abstract cost of one leaf evaluation
  };

  /// Splits `predicate` at AND/OR nodes. Nested junctions of the same kind are
  /// flattened; node ids follow pre-order, the root is 0.
  static PruningTree build(const ExprPtr& predicate) {
    PruningTree t;
    t.add(predicate, std::nullopt);
    t.telemetry_.resize(t.nodes_.size());
    return t;
  }

  NodeId root() const { return 0; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<Node>& nodes() const { return nodes_; }

  const std::vector<NodeTelemetry>& telemetry() const { return telemetry_; }
  std::vector<NodeTelemetry>& telemetry() { return telemetry_; }

  /// Folds per-worker counters into this tree's telemetry.
  void merge_telemetry(std::span<const NodeTelemetry> other) {
    for (std::size_t i = 0; i < telemetry_.size() && i < other.size(); ++i) telemetry_[i].merge(other[i]);
  }

  void set_child_order(NodeId id, std::vector<NodeId> order) {
    Node& n = nodes_.at(id);
    auto sorted_old = n.children, sorted_new = order;
    std::sort(sorted_old.begin(), sorted_old.end());
    std::sort(sorted_new.begin(), sorted_new.end());
    if (sorted_old != sorted_new) throw std::invalid_argument("child order is not a permutation");
    n.children = std::move(order);
  }

  /// Cutoff is legal only for a direct child of an AND node.
  bool can_disable(NodeId id) const {
    const Node& n = nodes_.at(id);
    return n.parent && nodes_[*n.parent].kind == Kind::And;
  }

  /// Returns false (and does nothing) when cutoff is illegal for this node.
  bool disable(NodeId id) {
    if (!can_disable(id)) return false;
    nodes_[id].enabled = false;
    return true;
  }

  std::vector<NodeId> disabled_nodes() const {
    std::vector<NodeId> out;
    for (const auto& n : nodes_) {
      if (!n.enabled) out.push_back(n.id);
    }
    return out;
  }

  /// Classifies one partition. AND stops at the first AlwaysFalse child, OR
  /// at the first AlwaysTrue child; disabled nodes count as Maybe and are not
  /// evaluated. Telemetry is recorded for every node actually evaluated.
  template <class StatsLookup>
  TriState classify(const StatsLookup& stats, CostMode mode = CostMode::Abstract) {
    double cost = 0;
    return eval(root(), stats, mode, cost);
  }

  nlohmann::json telemetry_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& n : nodes_) {
      const auto& t = telemetry_[n.id];
      out.push_back({{"node_id", n.id},
                     {"kind", n.kind == Kind::Leaf ? "leaf" : (n.kind == Kind::And ? "and" : "or")},
                     {"predicate", n.predicate ? to_string(*n.predicate) : ""},
                     {"eval_count", t.eval_count},
                     {"pass_count", t.pass_count},
                     {"total_eval_cost", t.total_eval_cost},
                     {"disabled", !n.enabled}});
    }
    return out;
  }

 private:
  NodeId add(const ExprPtr& e, std::optional<NodeId> parent) {
    NodeId id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back({});
    nodes_[id].id = id;
    nodes_[id].parent = parent;
    if ((e->kind == ExprKind::And || e->kind == ExprKind::Or) && e->children.size() == 1) {
      nodes_.pop_back();
      return add(e->children[0], parent);
    }
    if (e->kind == ExprKind::And || e->kind == ExprKind::Or) {
      nodes_[id].kind = e->kind == ExprKind::And ? Kind::And : Kind::Or;
      std::vector<ExprPtr> flat;
      flatten(e, e->kind, flat);
      for (const auto& c : flat) {
        NodeId cid = add(c, id);
        nodes_[id].children.push_back(cid);
      }
    } else {
      nodes_[id].kind = Kind::Leaf;
      nodes_[id].predicate = e;
      nodes_[id].leaf_cost = 1.0 + static_cast<double>(node_count(*e));
    }
    return id;
  }

  static void flatten(const ExprPtr& e, ExprKind kind, std::vector<ExprPtr>& out) {
    for (const auto& c : e->children) {
      if (c->kind == kind) flatten(c, kind, out);
      else out.push_back(c);
    }
  }

  template <class StatsLookup>
  TriState eval(NodeId id, const StatsLookup& stats, CostMode mode, double& cost) {
    Node& n = nodes_[id];
    TriState result;
    double own = 0;
    if (n.kind == Kind::Leaf) {
      if (mode == CostMode::WallClock) {
        auto t0 = std::chrono::steady_clock::now();
        result = eval_meta(*n.predicate, stats);
        own = std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count();
      } else {
        result = eval_meta(*n.predicate, stats);
        own = n.leaf_cost;
      }
    } else {
      bool is_and = n.kind == Kind::And;
      result = is_and ? TriState::AlwaysTrue : TriState::AlwaysFalse;
      for (NodeId c : n.children) {
        TriState t = nodes_[c].enabled ? eval(c, stats, mode, own) : TriState::Maybe;
        result = is_and ? tri_and(result, t) : tri_or(result, t);
        if (is_and && result == TriState::AlwaysFalse) break;
        if (!is_and && result == TriState::AlwaysTrue) break;
      }
    }
    NodeTelemetry& t = telemetry_[id];
    ++t.eval_count;
    if (result != TriState::AlwaysFalse) ++t.pass_count;
    t.total_eval_cost += own;
    cost += own;
    return result;
  }

  std::vector<Node> nodes_;
  std::vector<NodeTelemetry> telemetry_;
};

/// New child order for an AND/OR node. Children with at least `warmup`
/// evaluations are ranked and placed back into the slots they occupied;
/// children still warming up keep their position.
///   AND: descending (1 - pass_rate) / avg_cost  (cheap and selective first)
///   OR:  descending pass_rate / avg_cost        (cheap and permissive first)
/// Ties go to the lower node id.
inline std::vector<NodeId> reorder_children(const PruningTree::Node& node,
                                            std::span<const NodeTelemetry> telemetry,
                                            std::uint32_t warmup) {
  std::vector<NodeId> order = node.children;
  if (node.kind == PruningTree::Kind::Leaf) return order;
  bool is_and = node.kind == PruningTree::Kind::And;
  auto rank = [&](NodeId id) {
    const NodeTelemetry& t = telemetry[id];
    double cost = std::max(t.avg_cost(), 1e-12);
    return (is_and ? t.prune_rate() : t.pass_rate()) / cost;
  };
  std::vector<std::size_t> slots;
  std::vector<NodeId> ranked;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (telemetry[order[i]].eval_count >= warmup) {
      slots.push_back(i);
      ranked.push_back(order[i]);
    }
  }
  std::sort(ranked.begin(), ranked.end(), [&](NodeId a, NodeId b) {
    double ra = rank(a), rb = rank(b);
    if (ra != rb) return ra > rb;
    return a < b;
  });
  for (std::size_t i = 0; i < slots.size(); ++i) order[slots[i]] = ranked[i];
  return order;
}

/// Decides whether to stop evaluating a pruner. Compares the extrapolated
/// benefit of keeping it, prune_rate * remaining * scan_cost, with the cost of
/// evaluating it on the remaining partitions. Only direct children of an AND
/// may be disabled; the root and children of an OR are always kept.
inline CutoffDecision cutoff_check(const PruningTree& tree, NodeId id, const NodeTelemetry& telemetry,
                                   std::uint64_t remaining_partitions, const CostModel& cost_model,
                                   std::uint32_t warmup = 0) {
  if (!tree.can_disable(id)) return CutoffDecision::Keep;
  if (telemetry.eval_count < warmup || telemetry.eval_count == 0) return CutoffDecision::Keep;
  double remaining = static_cast<double>(remaining_partitions);
  double benefit = telemetry.prune_rate() * remaining * cost_model.scan_cost -
                   remaining * telemetry.avg_cost();
  return benefit <= 0 ? CutoffDecision::Disable : CutoffDecision::Keep;
}

struct FilterPruneResult {
  std::vector<PartitionId> scan_set;        // Maybe or AlwaysTrue, input order kept
  std::vector<PartitionId> full_match_set;  // AlwaysTrue
  std::vector<std::pair<PartitionId, TriState>> classification;
  std::uint32_t reorder_events = 0;
  std::uint32_t cutoff_events = 0;
};

/// Runs one reorder + cutoff round over every internal node.
inline void adapt_tree(PruningTree& tree, std::uint64_t remaining, const PruningConfig& config,
                       std::uint32_t* reorders = nullptr, std::uint32_t* cutoffs = nullptr) {
  for (NodeId id = 0; id < tree.size(); ++id) {
    const auto& n = tree.node(id);
    if (n.kind == PruningTree::Kind::Leaf || !n.enabled) continue;
    auto order = reorder_children(n, tree.telemetry(), config.warmup);
    if (order != n.children) {
      tree.set_child_order(id, order);
      if (reorders) ++*reorders;
    }
    if (n.kind != PruningTree::Kind::And) continue;
    for (NodeId c : tree.node(id).children) {
      if (!tree.node(c).enabled) continue;
      if (cutoff_check(tree, c, tree.telemetry()[c], remaining, config.cost_model, config.warmup) ==
          CutoffDecision::Disable) {
        tree.disable(c);
        if (cutoffs) ++*cutoffs;
      }
    }
  }
}

/// Classifies the candidate partitions of `table` (in order) with the tree.
/// `qualifier` lets predicates use "alias.column" names.
inline FilterPruneResult prune_scan_set(PruningTree& tree, const Table& table,
                                        std::span<const PartitionId> candidates,
                                        const PruningConfig& config, const std::string& qualifier = {}) {
  FilterPruneResult out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const MicroPartition& part = table.partition(candidates[i]);
    TriState t = tree.classify(PartitionStats(table, part, qualifier), config.cost_mode);
    out.classification.emplace_back(part.id(), t);
    if (t != TriState::AlwaysFalse) out.scan_set.push_back(part.id());
    if (t == TriState::AlwaysTrue) out.full_match_set.push_back(part.id());
    if (config.adapt && config.adapt_interval > 0 && (i + 1) % config.adapt_interval == 0) {
      adapt_tree(tree, candidates.size() - (i + 1), config, &out.reorder_events, &out.cutoff_events);
    }
  }
  return out;
}

}  // namespace prunedb
