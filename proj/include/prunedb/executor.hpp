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

// Pruning-aware execution.
//
// prepare() runs the compile-time techniques: filter pruning over each
// scan's directly attached Filter chain, LIMIT pushdown and pruning, top-k
// hook placement with scan ordering and boundary initialization. execute()
// then runs push-based pipelines (scan -> filter/project/join probe -> sink)
// and applies the runtime techniques: join pruning once a build side is
// complete, top-k skipping before each partition load, and LIMIT halting.
//
// Determinism: every row carries its Origin. Sinks order their output by scan
// position or origin, never by arrival, so any worker count gives the same
// result.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "prunedb/join_pruning.hpp"
#include "prunedb/limit_planner.hpp"
#include "prunedb/meta_eval.hpp"
#include "prunedb/plan.hpp"
#include "prunedb/pruning_tree.hpp"
#include "prunedb/query_stats.hpp"
#include "prunedb/topk.hpp"

namespace prunedb {

struct ExecConfig {
  bool filter_pruning = true;
  bool limit_pruning = true;
  bool join_pruning = true;
  bool topk_pruning = true;
  bool topk_init_boundary = true;
  std::size_t workers = 1;
  ScanOrderStrategy topk_strategy = ScanOrderStrategy::FullSort;
  std::uint64_t seed = 0;
  PruningConfig pruning;
  SummaryConfig summary;

  static ExecConfig none() {
    ExecConfig c;
    c.filter_pruning = c.limit_pruning = c.join_pruning = c.topk_pruning = false;
    return c;
  }

  bool enabled(Technique t) const {
    switch (t) {
      case Technique::Filter: return filter_pruning;
      case Technique::Limit: return limit_pruning;
      case Technique::Join: return join_pruning;
      case Technique::TopK: return topk_pruning;
    }
    return false;
  }
};

/// Materialized rows with their origins.
struct ResultSet {
  std::vector<ColumnDef> schema;
  std::vector<Row> rows;
  std::vector<Origin> origins;
};

struct QueryResult {
  ResultSet result;
  QueryStats stats;
};

enum class TopKShape : std::uint8_t { Scan, JoinProbe, OuterJoinBuild, Aggregation };

inline std::string_view topk_shape_name(TopKShape s) {
  switch (s) {
    case TopKShape::Scan: return "scan";
    case TopKShape::JoinProbe: return "join_probe";
    case TopKShape::OuterJoinBuild: return "outer_join_build";
    case TopKShape::Aggregation: return "aggregation";
  }
  return "?";
}

/// Top-k pruning attached to one scan.
struct TopKHook {
  TopKShape shape = TopKShape::Scan;
  ExprPtr scan_expr;  // order expression over the scan's columns
  Direction direction = Direction::Desc;
  std::uint64_t k = 0;
  const Plan* owner = nullptr;  // operator whose heap supplies the boundary
  /// The scan's (partition, row) is the leading part of the heap's origins,
  /// so a tie with the boundary can be settled by partition id.
  bool origin_leading = false;
  /// Only prune values strictly worse than the boundary (aggregation shape).
  bool strict = false;
  bool enabled = false;
  std::optional<Value> initial_boundary;
  std::vector<ExprPtr> init_predicates;  // filters between the heap and the scan
};

struct ScanPlan {
  const Plan* node = nullptr;
  const Table* table = nullptr;
  ExprPtr pruning_predicate;
  std::optional<PruningTree> tree;
  std::vector<PartitionId> scan_set;
  std::vector<PartitionId> full_match;
  std::vector<Attribution> attribution;  // by partition index in the table
  std::unordered_map<PartitionId, std::size_t> index;
  std::optional<LimitAnnotation> limit;
  std::optional<TopKHook> topk;
  std::vector<PartitionId> limit_scan_set;  // for explain
  ScanStats stats;

  void attribute(PartitionId id, Attribution a) {
    Attribution& slot = attribution[index.at(id)];
    if (slot == Attribution::Unset) slot = a;
  }
};

struct GroupTopK {
  std::size_t key_index = 0;
  Direction direction = Direction::Desc;
  std::uint64_t k = 0;
};

struct ReplicatedTopK {
  ExprPtr order;  // over the build input's columns
  Direction direction = Direction::Desc;
  std::uint64_t k = 0;
};

struct JoinTarget {
  const Plan* scan = nullptr;
  ExprPtr key_at_scan;
};

struct PreparedQuery {
  PlanPtr root;
  const Catalog* catalog = nullptr;
  ExecConfig config;
  std::vector<const Plan*> nodes;
  std::map<const Plan*, std::uint32_t> ids;
  std::map<const Plan*, const Plan*> parent;
  std::map<const Plan*, std::vector<ColumnDef>> schemas;
  std::map<const Plan*, ScanPlan> scans;  // in pre-order of the scan nodes
  std::map<const Plan*, GroupTopK> group_topk;
  std::map<const Plan*, ReplicatedTopK> replicated_topk;
  std::map<const Plan*, std::uint64_t> build_limit;
  std::map<const Plan*, JoinTarget> join_targets;
};

namespace detail {

inline std::string id_set(std::span<const PartitionId> ids) {
  std::string s = "{";
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? ", " : "") + std::to_string(ids[i]);
  return s + "}";
}

/// Expressions derive_interval understands.
inline bool interval_derivable(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Column:
    case ExprKind::Literal: return true;
    case ExprKind::Arith: return interval_derivable(*e.children[0]) && interval_derivable(*e.children[1]);
    case ExprKind::If: return interval_derivable(*e.children[1]) && interval_derivable(*e.children[2]);
    default: return false;
  }
}

inline ExprPtr through_project(const ExprPtr& e, const Plan& project) {
  return substitute_columns(e, [&project](const std::string& name) -> ExprPtr {
    for (const auto& item : project.items) {
      if (item.name == name) return item.expr;
    }
    return nullptr;
  });
}

inline bool columns_within(const Expr& e, const std::vector<ColumnDef>& schema) {
  for (const auto& c : referenced_columns(e)) {
    bool found = std::any_of(schema.begin(), schema.end(), [&](const ColumnDef& d) { return d.name == c; });
    if (!found) return false;
  }
  return true;
}

inline ExprPtr conjunction(const std::vector<ExprPtr>& preds) {
  if (preds.empty()) return nullptr;
  if (preds.size() == 1) return preds[0];
  return ex::and_(preds);
}

}  // namespace detail

/// Compile-time phase: validation, filter and LIMIT pruning, top-k and join
/// hook placement.
inline PreparedQuery prepare(PlanPtr root, const Catalog& catalog, const ExecConfig& config) {
  PreparedQuery q;
  q.root = std::move(root);
  q.catalog = &catalog;
  q.config = config;
  validate(*q.root, catalog);
  q.nodes = preorder(*q.root);
  for (std::uint32_t i = 0; i < q.nodes.size(); ++i) {
    const Plan* n = q.nodes[i];
    q.ids[n] = i;
    q.schemas[n] = output_schema(*n, catalog);
    for (const auto& c : n->children) q.parent[c.get()] = n;
  }
  auto parent_of = [&](const Plan* n) -> const Plan* {
    auto it = q.parent.find(n);
    return it == q.parent.end() ? nullptr : it->second;
  };

  // Filter pruning over the Filter chain sitting directly on each scan.
  for (const Plan* n : q.nodes) {
    if (n->kind != PlanKind::Scan) continue;
    ScanPlan sp;
    sp.node = n;
    sp.table = &catalog.at(n->table);
    std::vector<ExprPtr> preds;
    for (const Plan* p = parent_of(n); p && p->kind == PlanKind::Filter; p = parent_of(p)) preds.push_back(p->predicate);
    sp.pruning_predicate = detail::conjunction(preds);
    auto ids = sp.table->partition_ids();
    sp.attribution.assign(ids.size(), Attribution::Unset);
    for (std::size_t i = 0; i < ids.size(); ++i) sp.index[ids[i]] = i;
    sp.stats.node_id = q.ids[n];
    sp.stats.table = n->table;
    sp.stats.alias = n->alias;
    sp.stats.partitions_total = ids.size();
    sp.stats.filter.eligible = sp.pruning_predicate != nullptr;
    sp.stats.filter.partitions_before = ids.size();
    sp.scan_set = ids;
    if (sp.pruning_predicate && config.filter_pruning) {
      sp.tree = PruningTree::build(sp.pruning_predicate);
      FilterPruneResult r = prune_scan_set(*sp.tree, *sp.table, ids, config.pruning, n->alias);
      for (const auto& [id, t] : r.classification) {
        if (t == TriState::AlwaysFalse) sp.attribute(id, Attribution::Filter);
      }
      sp.scan_set = r.scan_set;
      sp.full_match = r.full_match_set;
      sp.stats.filter.full_match = r.full_match_set.size();
      sp.stats.filter.reorder_events = r.reorder_events;
      sp.stats.filter.cutoff_events = r.cutoff_events;
      sp.stats.filter.tree = sp.tree->telemetry_json();
    } else if (!sp.pruning_predicate) {
      sp.full_match = ids;
    }
    sp.stats.filter.partitions_after = sp.scan_set.size();
    q.scans.emplace(n, std::move(sp));
  }

  auto full_match_under = [&](const ScanPlan& sp, const std::vector<ExprPtr>& preds) {
    std::vector<PartitionId> out;
    ExprPtr pred = detail::conjunction(preds);
    bool usable = !pred || detail::columns_within(*pred, q.schemas[sp.node]);
    if (!usable) return out;
    for (PartitionId id : sp.scan_set) {
      if (!pred || eval_meta(*pred, PartitionStats(*sp.table, sp.table->partition(id), sp.node->alias)) ==
                       TriState::AlwaysTrue)
        out.push_back(id);
    }
    return out;
  };

  // LIMIT pushdown and pruning.
  for (auto& [node, ann] : limit_pushdown(*q.root)) {
    if (node->kind == PlanKind::HashJoin) {
      if (ann.reachable && ann.row_preserving) q.build_limit[node] = ann.effective_k;
      continue;
    }
    ScanPlan& sp = q.scans.at(node);
    sp.limit = ann;
    LimitTelemetry& lt = sp.stats.limit;
    lt.partitions_before = lt.partitions_after = sp.scan_set.size();
    if (!ann.reachable) {
      lt.reason = LimitReason::UnsupportedShape;
      continue;
    }
    lt.eligible = true;
    lt.effective_k = ann.effective_k;
    lt.reason = LimitReason::MinimalAlready;
    if (!config.limit_pruning) continue;
    auto fm = full_match_under(sp, ann.full_match_predicates);
    const Table& t = *sp.table;
    LimitPruneResult r = prune_for_limit(
        sp.scan_set, fm, [&t](PartitionId id) { return static_cast<std::uint64_t>(t.partition(id).row_count()); },
        ann.effective_k);
    std::set<PartitionId> kept(r.scan_set.begin(), r.scan_set.end());
    for (PartitionId id : sp.scan_set) {
      if (!kept.count(id)) sp.attribute(id, Attribution::Limit);
    }
    sp.scan_set = r.scan_set;
    sp.limit_scan_set = r.scan_set;
    lt.applied = r.applied;
    lt.reason = r.reason;
    lt.partitions_after = sp.scan_set.size();
  }

  // Join pruning targets: the probe input's scan, reached through Filter and
  // Project, keyed on an expression metadata can bound.
  for (const Plan* n : q.nodes) {
    if (n->kind != PlanKind::HashJoin) continue;
    ExprPtr key = n->keys.front().probe;
    const Plan* cur = n->children[1].get();
    while (cur->kind == PlanKind::Filter || cur->kind == PlanKind::Project) {
      if (cur->kind == PlanKind::Project) key = detail::through_project(key, *cur);
      cur = cur->children[0].get();
    }
    if (cur->kind != PlanKind::Scan || !detail::interval_derivable(*key)) continue;
    q.join_targets[n] = {cur, key};
    q.scans.at(cur).stats.join.eligible = true;
  }

  // Top-k hooks.
  for (const Plan* t : q.nodes) {
    if (t->kind != PlanKind::TopK || t->k == kNoLimit) continue;
    ExprPtr expr = t->order;
    std::vector<ExprPtr> preds;
    bool saw_filter = false;
    std::optional<TopKShape> shape;
    const Plan* owner = t;
    const Plan* cur = t->children[0].get();
    bool ok = true;
    while (ok && cur->kind != PlanKind::Scan) {
      switch (cur->kind) {
        case PlanKind::Project:
          expr = detail::through_project(expr, *cur);
          for (auto& p : preds) p = detail::through_project(p, *cur);
          cur = cur->children[0].get();
          break;
        case PlanKind::Filter:
          preds.push_back(cur->predicate);
          saw_filter = true;
          cur = cur->children[0].get();
          break;
        case PlanKind::HashJoin: {
          if (shape) {
            ok = false;
            break;
          }
          const auto& build = q.schemas[cur->children[0].get()];
          const auto& probe = q.schemas[cur->children[1].get()];
          if (cur->join_kind == JoinKind::Inner && detail::columns_within(*expr, probe)) {
            shape = TopKShape::JoinProbe;
            preds.clear();
            cur = cur->children[1].get();
          } else if (cur->join_kind == JoinKind::LeftOuter && !saw_filter && detail::columns_within(*expr, build)) {
            shape = TopKShape::OuterJoinBuild;
            owner = cur;
            if (config.topk_pruning) q.replicated_topk[cur] = {expr, t->direction, t->k};
            preds.clear();
            cur = cur->children[0].get();
          } else {
            ok = false;
          }
          break;
        }
        case PlanKind::GroupBy: {
          if (shape || saw_filter || expr->kind != ExprKind::Column) {
            ok = false;
            break;
          }
          std::optional<std::size_t> key_index;
          for (std::size_t i = 0; i < cur->group_keys.size(); ++i) {
            if (cur->group_keys[i]->text == expr->text) key_index = i;
          }
          if (!key_index) {
            ok = false;
            break;
          }
          shape = TopKShape::Aggregation;
          owner = cur;
          if (config.topk_pruning) q.group_topk[cur] = {*key_index, t->direction, t->k};
          expr = cur->group_keys[*key_index];
          preds.clear();
          cur = cur->children[0].get();
          break;
        }
        default: ok = false; break;
      }
    }
    if (!ok || !detail::interval_derivable(*expr)) continue;
    ScanPlan& sp = q.scans.at(cur);
    if (sp.topk) continue;
    TopKHook hook;
    hook.shape = shape.value_or(TopKShape::Scan);
    hook.scan_expr = expr;
    hook.direction = t->direction;
    hook.k = t->k;
    hook.owner = owner;
    hook.origin_leading = hook.shape == TopKShape::Scan || hook.shape == TopKShape::OuterJoinBuild;
    hook.strict = hook.shape == TopKShape::Aggregation;
    hook.enabled = config.topk_pruning;
    hook.init_predicates = preds;
    sp.stats.topk.eligible = true;
    sp.stats.topk.plan_shape = std::string(topk_shape_name(hook.shape));
    sp.stats.topk.strategy = config.topk_strategy;
    if (hook.enabled) {
      std::vector<PartitionRange> ranges;
      for (PartitionId id : sp.scan_set)
        ranges.push_back({id, derive_interval(*expr, PartitionStats(*sp.table, sp.table->partition(id), cur->alias))});
      sp.scan_set = order_scan_set(ranges, hook.direction, config.topk_strategy, config.seed);
      bool init_shape = hook.shape == TopKShape::Scan || hook.shape == TopKShape::OuterJoinBuild;
      if (config.topk_init_boundary && init_shape && expr->kind == ExprKind::Column) {
        std::vector<FullMatchStats> fm;
        for (PartitionId id : full_match_under(sp, preds)) {
          PartitionStats ps(*sp.table, sp.table->partition(id), cur->alias);
          fm.push_back({id, *ps(expr->text)});
        }
        hook.initial_boundary = init_boundary(fm, hook.k, hook.direction);
        sp.stats.topk.initialized_boundary = hook.initial_boundary.has_value();
        sp.stats.topk.initial_boundary = hook.initial_boundary;
      }
    }
    sp.topk = std::move(hook);
  }
  return q;
}

// ---------------------------------------------------------------------------
// Runtime

namespace detail {

struct Batch {
  std::vector<Row> rows;
  std::vector<Origin> origins;
};

class ColumnIndex {
 public:
  explicit ColumnIndex(const std::vector<ColumnDef>& schema) {
    for (std::size_t i = 0; i < schema.size(); ++i) idx_[schema[i].name] = i;
  }
  std::size_t at(const std::string& name) const {
    auto it = idx_.find(name);
    if (it == idx_.end()) throw BindError("unknown column '" + name + "'");
    return it->second;
  }

 private:
  std::unordered_map<std::string, std::size_t> idx_;
};

inline Value eval_on(const Expr& e, const ColumnIndex& ci, const Row& row) {
  return eval_row(e, [&](const std::string& n) -> const Value& { return row[ci.at(n)]; });
}

/// Hash-join key form: integral doubles become integers so 3 and 3.0 meet.
inline Value normalize_key(const Value& v) {
  if (v.type() == Type::Float64) {
    double d = v.as_double();
    if (d == std::trunc(d) && d >= -9.2233720368547748e18 && d < 9.2233720368547748e18)
      return Value(static_cast<std::int64_t>(d));
  }
  return v;
}

struct RowHash {
  std::size_t operator()(const Row& r) const {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (const auto& v : r) h = h * 1099511628211ULL ^ ValueHash{}(v);
    return h;
  }
};

class Transform {
 public:
  virtual ~Transform() = default;
  virtual void apply(Batch& b) const = 0;
  /// Rows produced once the input is exhausted.
  virtual std::optional<Batch> finish() { return std::nullopt; }
};

class FilterTransform : public Transform {
 public:
  FilterTransform(ExprPtr pred, const std::vector<ColumnDef>& schema) : pred_(std::move(pred)), ci_(schema) {}
  void apply(Batch& b) const override {
    Batch out;
    for (std::size_t i = 0; i < b.rows.size(); ++i) {
      const Row& row = b.rows[i];
      if (passes(*pred_, [&](const std::string& n) -> const Value& { return row[ci_.at(n)]; })) {
        out.rows.push_back(std::move(b.rows[i]));
        out.origins.push_back(std::move(b.origins[i]));
      }
    }
    b = std::move(out);
  }

 private:
  ExprPtr pred_;
  ColumnIndex ci_;
};

class ProjectTransform : public Transform {
 public:
  ProjectTransform(const Plan& p, const std::vector<ColumnDef>& schema) : items_(p.items), ci_(schema) {}
  void apply(Batch& b) const override {
    for (auto& row : b.rows) {
      Row out;
      out.reserve(items_.size());
      for (const auto& item : items_) out.push_back(eval_on(*item.expr, ci_, row));
      row = std::move(out);
    }
  }

 private:
  std::vector<ProjectItem> items_;
  ColumnIndex ci_;
};

class ProbeTransform : public Transform {
 public:
  ProbeTransform(const Plan& join, ResultSet build, const std::vector<ColumnDef>& probe_schema)
      : kind_(join.join_kind), build_(std::move(build)), probe_ci_(probe_schema), probe_width_(probe_schema.size()),
        matched_(build_.rows.size()) {
    ColumnIndex bci(build_.schema);
    for (const auto& k : join.keys) probe_keys_.push_back(k.probe);
    for (std::size_t i = 0; i < build_.rows.size(); ++i) {
      Row key;
      bool has_null = false;
      for (const auto& k : join.keys) {
        Value v = eval_on(*k.build, bci, build_.rows[i]);
        has_null |= v.is_null();
        key.push_back(normalize_key(v));
      }
      if (!has_null) table_[std::move(key)].push_back(i);
    }
  }

  void apply(Batch& b) const override {
    Batch out;
    for (std::size_t i = 0; i < b.rows.size(); ++i) {
      Row key;
      bool has_null = false;
      for (const auto& k : probe_keys_) {
        Value v = eval_on(*k, probe_ci_, b.rows[i]);
        has_null |= v.is_null();
        key.push_back(normalize_key(v));
      }
      if (has_null) continue;
      auto it = table_.find(key);
      if (it == table_.end()) continue;
      for (std::size_t bi : it->second) {
        matched_[bi].store(true, std::memory_order_relaxed);
        Row row = build_.rows[bi];
        row.insert(row.end(), b.rows[i].begin(), b.rows[i].end());
        Origin origin = build_.origins[bi];
        origin.insert(origin.end(), b.origins[i].begin(), b.origins[i].end());
        out.rows.push_back(std::move(row));
        out.origins.push_back(std::move(origin));
      }
    }
    b = std::move(out);
  }

  std::optional<Batch> finish() override {
    if (kind_ != JoinKind::LeftOuter) return std::nullopt;
    Batch out;
    for (std::size_t bi = 0; bi < build_.rows.size(); ++bi) {
      if (matched_[bi].load()) continue;
      Row row = build_.rows[bi];
      row.resize(row.size() + probe_width_);
      out.rows.push_back(std::move(row));
      out.origins.push_back(build_.origins[bi]);
    }
    return out;
  }

 private:
  JoinKind kind_;
  ResultSet build_;
  ColumnIndex probe_ci_;
  std::size_t probe_width_;
  std::vector<ExprPtr> probe_keys_;
  std::unordered_map<Row, std::vector<std::size_t>, RowHash> table_;
  mutable std::vector<std::atomic<bool>> matched_;
};

/// Source of a pruning boundary for top-k hooks.
class BoundarySource {
 public:
  virtual ~BoundarySource() = default;
  virtual std::optional<std::pair<Value, Origin>> boundary() const = 0;
};

class Sink {
 public:
  virtual ~Sink() = default;
  /// Thread-safe. `position` orders batches: scan positions first, then
  /// end-of-input batches.
  virtual void consume(Batch&& b, std::size_t position) = 0;
  virtual bool done() const { return false; }
  virtual ResultSet finish(std::vector<ColumnDef> schema) = 0;
};

class CollectSink : public Sink {
 public:
  void consume(Batch&& b, std::size_t position) override {
    std::lock_guard<std::mutex> lock(mu_);
    auto& slot = batches_[position];
    for (std::size_t i = 0; i < b.rows.size(); ++i) {
      slot.rows.push_back(std::move(b.rows[i]));
      slot.origins.push_back(std::move(b.origins[i]));
    }
  }
  ResultSet finish(std::vector<ColumnDef> schema) override {
    ResultSet r;
    r.schema = std::move(schema);
    for (auto& [pos, b] : batches_) {
      for (std::size_t i = 0; i < b.rows.size(); ++i) {
        r.rows.push_back(std::move(b.rows[i]));
        r.origins.push_back(std::move(b.origins[i]));
      }
    }
    return r;
  }

 private:
  std::mutex mu_;
  std::map<std::size_t, Batch> batches_;
};

/// Keeps batches by position and reports done once a contiguous prefix of
/// positions holds limit + offset rows.
class LimitSink : public Sink {
 public:
  LimitSink(std::uint64_t limit, std::uint64_t offset, bool halting)
      : limit_(limit), needed_(add_saturating(limit, offset)), offset_(offset), halting_(halting) {}

  void consume(Batch&& b, std::size_t position) override {
    std::lock_guard<std::mutex> lock(mu_);
    batches_[position] = std::move(b);
    while (true) {
      auto it = batches_.find(prefix_end_);
      if (it == batches_.end()) break;
      prefix_rows_ += it->second.rows.size();
      ++prefix_end_;
      if (!satisfied_at_ && prefix_rows_ >= needed_) satisfied_at_ = prefix_end_;
    }
    if (satisfied_at_) done_.store(halting_);
  }
  bool done() const override { return done_.load(); }
  /// Scan positions needed to satisfy the limit, once it is satisfied.
  std::optional<std::size_t> satisfied_at() const { return satisfied_at_; }

  ResultSet finish(std::vector<ColumnDef> schema) override {
    ResultSet r;
    r.schema = std::move(schema);
    std::uint64_t skipped = 0;
    for (auto& [pos, b] : batches_) {
      for (std::size_t i = 0; i < b.rows.size(); ++i) {
        if (r.rows.size() >= limit_) return r;
        if (skipped < offset_) {
          ++skipped;
          continue;
        }
        r.rows.push_back(std::move(b.rows[i]));
        r.origins.push_back(std::move(b.origins[i]));
      }
    }
    return r;
  }

 private:
  std::uint64_t limit_, needed_, offset_;
  bool halting_;
  std::mutex mu_;
  std::map<std::size_t, Batch> batches_;
  std::size_t prefix_end_ = 0;
  std::uint64_t prefix_rows_ = 0;
  std::optional<std::size_t> satisfied_at_;
  std::atomic<bool> done_{false};
};

class TopKSink : public Sink, public BoundarySource {
 public:
  TopKSink(ExprPtr order, Direction dir, std::uint64_t k, const std::vector<ColumnDef>& schema)
      : order_(std::move(order)), ci_(schema), state_(k, dir) {}

  void consume(Batch&& b, std::size_t) override {
    std::vector<Value> keys;
    keys.reserve(b.rows.size());
    for (const auto& row : b.rows) keys.push_back(eval_on(*order_, ci_, row));
    std::lock_guard<std::mutex> lock(mu_);
    for (std::size_t i = 0; i < b.rows.size(); ++i)
      state_.insert(std::move(keys[i]), std::move(b.origins[i]), std::move(b.rows[i]));
  }

  std::optional<std::pair<Value, Origin>> boundary() const override {
    std::lock_guard<std::mutex> lock(mu_);
    const TopKEntry* e = state_.boundary_entry();
    if (!e || e->order_value.is_null()) return std::nullopt;
    return std::make_pair(e->order_value, e->origin);
  }

  ResultSet finish(std::vector<ColumnDef> schema) override {
    ResultSet r;
    r.schema = std::move(schema);
    for (auto& e : state_.sorted()) {
      r.rows.push_back(std::move(e.payload));
      r.origins.push_back(std::move(e.origin));
    }
    return r;
  }

 private:
  ExprPtr order_;
  ColumnIndex ci_;
  mutable std::mutex mu_;
  TopKState state_;
};

/// Running state of one aggregate.
struct AggState {
  std::int64_t count = 0;
  __int128 int_sum = 0;
  bool any_float = false;
  std::vector<std::pair<Origin, double>> float_terms;  // summed in origin order
  std::optional<Value> min, max;

  void add(AggFunc f, const Value& v, const Origin& origin) {
    if (f == AggFunc::CountStar) {
      ++count;
      return;
    }
    if (v.is_null()) return;
    ++count;
    switch (f) {
      case AggFunc::Sum:
        if (v.type() == Type::Int64) {
          int_sum += v.as_int();
          float_terms.emplace_back(origin, static_cast<double>(v.as_int()));
        } else {
          any_float = true;
          float_terms.emplace_back(origin, v.to_double());
        }
        break;
      case AggFunc::Min:
        if (!min || less(v, *min)) min = v;
        break;
      case AggFunc::Max:
        if (!max || less(*max, v)) max = v;
        break;
      default: break;
    }
  }

  Value result(AggFunc f, Type out_type) {
    switch (f) {
      case AggFunc::Count:
      case AggFunc::CountStar: return Value(count);
      case AggFunc::Sum: {
        if (count == 0) return Value::null();
        if (out_type == Type::Float64 || any_float) {
          std::sort(float_terms.begin(), float_terms.end(),
                    [](const auto& a, const auto& b) { return a.first < b.first; });
          double s = 0;
          for (const auto& [o, d] : float_terms) s += d;
          return Value(s);
        }
        if (int_sum > std::numeric_limits<std::int64_t>::max() || int_sum < std::numeric_limits<std::int64_t>::min())
          throw ExecutionError("integer overflow in sum");
        return Value(static_cast<std::int64_t>(int_sum));
      }
      case AggFunc::Min: return min.value_or(Value::null());
      case AggFunc::Max: return max.value_or(Value::null());
    }
    return Value::null();
  }
};

struct RowLess {
  bool operator()(const Row& a, const Row& b) const {
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
      auto o = storage_order(a[i], b[i]);
      if (o != 0) return o < 0;
    }
    return a.size() < b.size();
  }
};

class GroupBySink : public Sink, public BoundarySource {
 public:
  GroupBySink(const Plan& p, const std::vector<ColumnDef>& in_schema, std::optional<GroupTopK> topk)
      : keys_(p.group_keys), aggs_(p.aggregates), ci_(in_schema), topk_(topk) {}

  void consume(Batch&& b, std::size_t) override {
    std::vector<Row> keys(b.rows.size());
    std::vector<std::vector<Value>> args(b.rows.size());
    for (std::size_t i = 0; i < b.rows.size(); ++i) {
      for (const auto& k : keys_) keys[i].push_back(eval_on(*k, ci_, b.rows[i]));
      for (const auto& a : aggs_) args[i].push_back(a.arg ? eval_on(*a.arg, ci_, b.rows[i]) : Value::null());
    }
    std::lock_guard<std::mutex> lock(mu_);
    for (std::size_t i = 0; i < b.rows.size(); ++i) {
      auto it = groups_.find(keys[i]);
      if (it == groups_.end()) {
        if (!admit(keys[i])) continue;
        Group g;
        g.min_origin = b.origins[i];
        g.aggs.resize(aggs_.size());
        it = groups_.emplace(keys[i], std::move(g)).first;
        if (topk_) evict();
      }
      Group& g = it->second;
      if (b.origins[i] < g.min_origin) g.min_origin = b.origins[i];
      for (std::size_t a = 0; a < aggs_.size(); ++a) g.aggs[a].add(aggs_[a].func, args[i][a], b.origins[i]);
    }
  }

  /// k-th best admitted order key; only values strictly worse may be pruned.
  std::optional<std::pair<Value, Origin>> boundary() const override {
    std::lock_guard<std::mutex> lock(mu_);
    auto v = kth();
    if (!v || v->is_null()) return std::nullopt;
    return std::make_pair(*v, Origin{});
  }

  ResultSet finish(std::vector<ColumnDef> schema) override {
    ResultSet r;
    std::vector<std::pair<Origin, Row>> out;
    for (auto& [key, g] : groups_) {
      Row row = key;
      for (std::size_t a = 0; a < aggs_.size(); ++a) row.push_back(g.aggs[a].result(aggs_[a].func, schema[keys_.size() + a].type));
      out.emplace_back(g.min_origin, std::move(row));
    }
    if (keys_.empty() && groups_.empty()) {
      Row row;
      for (std::size_t a = 0; a < aggs_.size(); ++a) row.push_back(AggState{}.result(aggs_[a].func, schema[a].type));
      out.emplace_back(Origin{}, std::move(row));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    r.schema = std::move(schema);
    for (auto& [o, row] : out) {
      r.rows.push_back(std::move(row));
      r.origins.push_back(std::move(o));
    }
    return r;
  }

 private:
  struct Group {
    Origin min_origin;
    std::vector<AggState> aggs;
  };

  std::optional<Value> kth() const {
    if (!topk_ || groups_.size() < topk_->k || topk_->k == 0) return std::nullopt;
    std::vector<Value> vals;
    for (const auto& [key, g] : groups_) vals.push_back(key[topk_->key_index]);
    auto better = [this](const Value& a, const Value& b) { return rank_values(a, b, topk_->direction) < 0; };
    std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(topk_->k - 1), vals.end(), better);
    return vals[topk_->k - 1];
  }

  bool admit(const Row& key) const {
    if (!topk_) return true;
    if (topk_->k == 0) return false;
    auto b = kth();
    return !b || rank_values(key[topk_->key_index], *b, topk_->direction) <= 0;
  }

  void evict() {
    auto b = kth();
    if (!b) return;
    for (auto it = groups_.begin(); it != groups_.end();) {
      if (rank_values(it->first[topk_->key_index], *b, topk_->direction) > 0) it = groups_.erase(it);
      else ++it;
    }
  }

  std::vector<ExprPtr> keys_;
  std::vector<Aggregate> aggs_;
  ColumnIndex ci_;
  std::optional<GroupTopK> topk_;
  mutable std::mutex mu_;
  std::map<Row, Group, RowLess> groups_;
};

class Runner {
 public:
  explicit Runner(PreparedQuery& q) : q_(q), cfg_(q.config) {}

  ResultSet run(const Plan* node) {
    const auto& schema = q_.schemas.at(node);
    switch (node->kind) {
      case PlanKind::Limit: {
        if (node->limit == 0 && cfg_.limit_pruning) return ResultSet{schema, {}, {}};
        LimitSink sink(node->limit, node->offset, cfg_.limit_pruning);
        const Plan* source = run_pipeline(node->children[0].get(), sink);
        if (source && sink.satisfied_at()) record_minimal(source, *sink.satisfied_at());
        return sink.finish(schema);
      }
      case PlanKind::TopK: {
        TopKSink sink(node->order, node->direction, node->k, q_.schemas.at(node->children[0].get()));
        providers_[node] = &sink;
        run_pipeline(node->children[0].get(), sink);
        providers_.erase(node);
        return sink.finish(schema);
      }
      case PlanKind::GroupBy: {
        std::optional<GroupTopK> gt;
        if (auto it = q_.group_topk.find(node); it != q_.group_topk.end()) gt = it->second;
        GroupBySink sink(*node, q_.schemas.at(node->children[0].get()), gt);
        providers_[node] = &sink;
        run_pipeline(node->children[0].get(), sink);
        providers_.erase(node);
        return sink.finish(schema);
      }
      default: {
        CollectSink sink;
        run_pipeline(node, sink);
        return sink.finish(schema);
      }
    }
  }

 private:
  /// Builds the transform chain from `node` down to its source and drives it.
  /// Returns the source scan, if the pipeline starts at one.
  const Plan* run_pipeline(const Plan* node, Sink& sink) {
    std::vector<std::unique_ptr<Transform>> chain;  // top-down
    const Plan* cur = node;
    while (true) {
      if (cur->kind == PlanKind::Filter) {
        chain.push_back(std::make_unique<FilterTransform>(cur->predicate, q_.schemas.at(cur->children[0].get())));
      } else if (cur->kind == PlanKind::Project) {
        chain.push_back(std::make_unique<ProjectTransform>(*cur, q_.schemas.at(cur->children[0].get())));
      } else if (cur->kind == PlanKind::HashJoin) {
        ResultSet build = run_build(cur);
        join_prune(cur, build);
        chain.push_back(std::make_unique<ProbeTransform>(*cur, std::move(build), q_.schemas.at(cur->children[1].get())));
        cur = cur->children[1].get();
        continue;
      } else {
        break;
      }
      cur = cur->children[0].get();
    }
    std::reverse(chain.begin(), chain.end());
    auto push = [&](Batch b, std::size_t from, std::size_t position) {
      for (std::size_t i = from; i < chain.size(); ++i) chain[i]->apply(b);
      sink.consume(std::move(b), position);
    };

    std::size_t positions = 1;
    const Plan* source_scan = nullptr;
    if (cur->kind == PlanKind::Scan) {
      source_scan = cur;
      positions = run_scan(q_.scans.at(cur), [&](Batch b, std::size_t pos) { push(std::move(b), 0, pos); }, sink);
    } else {
      ResultSet in = run(cur);
      push(Batch{std::move(in.rows), std::move(in.origins)}, 0, 0);
    }
    for (std::size_t i = 0; i < chain.size(); ++i) {
      if (sink.done()) break;
      if (auto b = chain[i]->finish()) push(std::move(*b), i + 1, positions + i);
    }
    return source_scan;
  }

  ResultSet run_build(const Plan* join) {
    const Plan* build = join->children[0].get();
    const auto& schema = q_.schemas.at(build);
    if (auto it = q_.replicated_topk.find(join); it != q_.replicated_topk.end()) {
      TopKSink sink(it->second.order, it->second.direction, it->second.k, schema);
      providers_[join] = &sink;
      run_pipeline(build, sink);
      providers_.erase(join);
      return sink.finish(schema);
    }
    if (auto it = q_.build_limit.find(join); it != q_.build_limit.end() && cfg_.limit_pruning) {
      if (it->second == 0) return ResultSet{schema, {}, {}};
      LimitSink sink(it->second, 0, true);
      run_pipeline(build, sink);
      return sink.finish(schema);
    }
    return run(build);
  }

  void join_prune(const Plan* join, const ResultSet& build) {
    auto it = q_.join_targets.find(join);
    if (it == q_.join_targets.end()) return;
    ScanPlan& sp = q_.scans.at(it->second.scan);
    JoinTelemetry& jt = sp.stats.join;
    jt.partitions_before = jt.partitions_after = sp.scan_set.size();
    if (!cfg_.join_pruning) return;
    ColumnIndex ci(build.schema);
    std::vector<Value> keys;
    keys.reserve(build.rows.size());
    for (const auto& row : build.rows) keys.push_back(eval_on(*join->keys.front().build, ci, row));
    BuildSummary summary = summarize_build(keys, cfg_.summary.budget, cfg_.summary.exact_threshold);
    jt.summary_mode = summary.mode;
    jt.summary_size = summary.size();
    std::vector<PartitionId> kept;
    for (PartitionId id : sp.scan_set) {
      Interval iv = derive_interval(*it->second.key_at_scan,
                                    PartitionStats(*sp.table, sp.table->partition(id), sp.node->alias));
      if (summary.intersects(iv)) kept.push_back(id);
      else sp.attribute(id, Attribution::Join);
    }
    sp.scan_set = std::move(kept);
    jt.partitions_after = sp.scan_set.size();
  }

  bool topk_skip(const ScanPlan& sp, PartitionId id) {
    const TopKHook& h = *sp.topk;
    Interval iv = derive_interval(*h.scan_expr, PartitionStats(*sp.table, sp.table->partition(id), sp.node->alias));
    if (h.initial_boundary && strictly_below(iv, *h.initial_boundary, h.direction)) return true;
    BoundarySource* src = nullptr;
    {
      std::lock_guard<std::mutex> lock(providers_mu_);
      auto it = providers_.find(h.owner);
      if (it != providers_.end()) src = it->second;
    }
    if (!src) return false;
    auto b = src->boundary();
    if (!b) return false;
    if (h.strict) return strictly_below(iv, b->first, h.direction);
    if (!should_prune(iv, b->first, h.direction)) return false;
    if (iv.only_null) return true;
    const Value& edge = h.direction == Direction::Desc ? *iv.hi : *iv.lo;
    if (compare(edge, b->first) != 0) return true;
    // A row tied with the boundary still displaces it if its origin is smaller.
    return h.origin_leading && !b->second.empty() && id > b->second.front();
  }

  template <class Push>
  std::size_t run_scan(ScanPlan& sp, Push push, Sink& sink) {
    const std::vector<PartitionId> order = sp.scan_set;
    const bool hook = sp.topk && sp.topk->enabled;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::uint64_t> rows_read(order.size(), 0);
    auto worker = [&] {
      try {
        while (!failed.load()) {
          std::size_t i = next.fetch_add(1);
          if (i >= order.size()) break;
          PartitionId id = order[i];
          if (sink.done()) {
            sp.attribute(id, Attribution::Limit);
            continue;
          }
          if (hook && topk_skip(sp, id)) {
            sp.attribute(id, Attribution::TopK);
            push(Batch{}, i);
            continue;
          }
          sp.attribute(id, Attribution::Scanned);
          const MicroPartition& part = sp.table->partition(id);
          Batch b;
          b.rows.reserve(part.row_count());
          for (std::size_t r = 0; r < part.row_count(); ++r) {
            b.rows.push_back(part.row(r));
            b.origins.push_back({id, static_cast<std::uint32_t>(r)});
          }
          rows_read[i] = part.row_count();
          push(std::move(b), i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    };
    std::size_t n = std::max<std::size_t>(1, std::min(cfg_.workers, order.size()));
    if (n == 1) {
      worker();
    } else {
      std::vector<std::thread> threads;
      for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
      for (auto& t : threads) t.join();
    }
    if (error) std::rethrow_exception(error);
    for (auto r : rows_read) sp.stats.rows_scanned += r;
    scan_orders_[sp.node] = order;
    return order.size();
  }

  void record_minimal(const Plan* scan, std::size_t positions) {
    auto it = scan_orders_.find(scan);
    if (it == scan_orders_.end()) return;
    ScanPlan& sp = q_.scans.at(scan);
    if (!sp.stats.limit.eligible) return;
    std::uint64_t needed = 0;
    for (std::size_t i = 0; i < positions && i < it->second.size(); ++i) {
      if (sp.attribution[sp.index.at(it->second[i])] == Attribution::Scanned) ++needed;
    }
    sp.stats.limit.minimal_needed = needed;
  }

  PreparedQuery& q_;
  const ExecConfig& cfg_;
  std::mutex providers_mu_;
  std::map<const Plan*, BoundarySource*> providers_;
  std::map<const Plan*, std::vector<PartitionId>> scan_orders_;
};

}  // namespace detail

/// Runs a prepared query. `q` is consumed: its scan sets and attributions are
/// updated by the runtime techniques.
inline QueryResult execute(PreparedQuery& q) {
  auto start = std::chrono::steady_clock::now();
  detail::Runner runner(q);
  QueryResult out;
  out.result = runner.run(q.root.get());
  for (auto& [node, sp] : q.scans) {
    ScanStats s = sp.stats;
    s.attribution.clear();
    auto ids = sp.table->partition_ids();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      // Never reached: the pipeline was cut short by a LIMIT above it.
      Attribution a = sp.attribution[i] == Attribution::Unset ? Attribution::Limit : sp.attribution[i];
      s.attribution.emplace_back(ids[i], a);
    }
    s.recount();
    if (sp.topk) {
      s.topk.partitions_pruned = s.pruned_by_topk;
      s.topk.partitions_scanned = s.scanned;
    }
    if (sp.tree) s.filter.tree = sp.tree->telemetry_json();
    out.stats.scans.push_back(std::move(s));
  }
  std::sort(out.stats.scans.begin(), out.stats.scans.end(),
            [](const ScanStats& a, const ScanStats& b) { return a.node_id < b.node_id; });
  out.stats.rows_out = out.result.rows.size();
  out.stats.workers = q.config.workers;
  out.stats.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline QueryResult execute(const PlanPtr& plan, const Catalog& catalog, const ExecConfig& config = {}) {
  PreparedQuery q = prepare(plan, catalog, config);
  return execute(q);
}

/// Plan tree annotated with the compile-time pruning decisions.
inline std::string explain(const PreparedQuery& q) {
  return render_plan(*q.root, [&q](const Plan& p) {
    std::vector<std::string> lines;
    if (p.kind == PlanKind::HashJoin) {
      if (auto it = q.join_targets.find(&p); it != q.join_targets.end()) {
        lines.push_back(std::string("join pruning: ") + (q.config.join_pruning ? "enabled" : "disabled") +
                        ", probe key " + to_string(*it->second.key_at_scan) + " on scan #" +
                        std::to_string(q.ids.at(it->second.scan)));
      }
      if (q.replicated_topk.count(&p)) lines.push_back("top-k replicated onto build input");
      if (auto it = q.build_limit.find(&p); it != q.build_limit.end())
        lines.push_back("build input limited to " + std::to_string(it->second) + " rows");
    }
    if (p.kind == PlanKind::GroupBy) {
      if (auto it = q.group_topk.find(&p); it != q.group_topk.end())
        lines.push_back("top-k over group key " + to_string(*p.group_keys[it->second.key_index]) +
                        " k=" + std::to_string(it->second.k));
    }
    if (p.kind != PlanKind::Scan) return lines;
    const ScanPlan& sp = q.scans.at(&p);
    auto all = sp.table->partition_ids();
    lines.push_back("scan #" + std::to_string(q.ids.at(&p)) + ", partitions " + std::to_string(all.size()));
    if (sp.pruning_predicate) {
      std::vector<PartitionId> kept;
      for (std::size_t i = 0; i < all.size(); ++i) {
        if (sp.attribution[i] != Attribution::Filter) kept.push_back(all[i]);
      }
      lines.push_back("filter pruning: " + to_string(*sp.pruning_predicate) + " -> scan set " +
                      detail::id_set(kept) + ", fully matching " + detail::id_set(sp.full_match));
    }
    if (sp.limit) {
      const auto& lt = sp.stats.limit;
      std::string line = "limit pruning: k=" + std::to_string(lt.effective_k) + ", " +
                         std::string(limit_reason_name(lt.reason));
      if (lt.eligible && q.config.limit_pruning) line += " -> scan set " + detail::id_set(sp.limit_scan_set);
      lines.push_back(line);
    }
    if (sp.stats.join.eligible) lines.push_back("join pruning: probe side, applied at runtime");
    if (sp.topk) {
      std::string line = "topk pruning: shape " + std::string(topk_shape_name(sp.topk->shape)) + ", " +
                         to_string(*sp.topk->scan_expr) + " " + std::string(direction_name(sp.topk->direction)) +
                         " k=" + std::to_string(sp.topk->k);
      if (sp.topk->initial_boundary) line += ", initial boundary " + sp.topk->initial_boundary->to_string();
      lines.push_back(line);
    }
    lines.push_back("planned scan order " + detail::id_set(sp.scan_set));
    return lines;
  });
}

}  // namespace prunedb
