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

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prunedb/plan.hpp"

namespace prunedb {

struct LimitSpec {
  std::uint64_t limit = 0;
  std::uint64_t offset = 0;

  /// Rows a scan has to deliver: limit + offset, saturating.
  std::uint64_t effective_k() const { return limit > kNoLimit - offset ? kNoLimit : limit + offset; }
};

enum class LimitReason : std::uint8_t { MinimalAlready, UnsupportedShape, InsufficientFullMatch, Applied };

inline std::string_view limit_reason_name(LimitReason r) {
  switch (r) {
    case LimitReason::MinimalAlready: return "minimal_already";
    case LimitReason::UnsupportedShape: return "unsupported_shape";
    case LimitReason::InsufficientFullMatch: return "insufficient_full_match";
    case LimitReason::Applied: return "applied";
  }
  return "?";
}

/// What a LIMIT above a scan means for that scan.
struct LimitAnnotation {
  /// False when the scan sits below a LIMIT that cannot be pushed to it.
  bool reachable = false;
  std::uint64_t effective_k = 0;
  /// Predicates (over the scan's output names) every row must satisfy for a
  /// partition to count as fully matching. Includes filters directly above the
  /// scan and any filter between the LIMIT and the scan.
  std::vector<ExprPtr> full_match_predicates;
  /// No row-dropping operator sits between the LIMIT and the scan, so the scan
  /// itself may stop after effective_k rows.
  bool row_preserving = true;
};

namespace detail {

inline std::uint64_t add_saturating(std::uint64_t a, std::uint64_t b) { return a > kNoLimit - b ? kNoLimit : a + b; }

inline void limit_walk(const Plan& p, std::optional<LimitAnnotation> ann, bool under_limit,
                       std::map<const Plan*, LimitAnnotation>& out) {
  auto blocked = [&]() -> std::optional<LimitAnnotation> { return std::nullopt; };
  switch (p.kind) {
    case PlanKind::Scan:
      if (ann) out[&p] = *ann;
      else if (under_limit) out[&p] = LimitAnnotation{};
      return;
    case PlanKind::Limit: {
      LimitAnnotation next;
      if (ann) {
        next = *ann;
        next.effective_k = add_saturating(std::min(ann->effective_k, p.limit), p.offset);
      } else {
        next.reachable = true;
        next.effective_k = LimitSpec{p.limit, p.offset}.effective_k();
      }
      limit_walk(*p.children[0], next, true, out);
      return;
    }
    case PlanKind::Project: {
      if (ann) {
        auto fn = [&p](const std::string& name) -> ExprPtr {
          for (const auto& item : p.items) {
            if (item.name == name) return item.expr;
          }
          return nullptr;
        };
        for (auto& pred : ann->full_match_predicates) pred = substitute_columns(pred, fn);
      }
      limit_walk(*p.children[0], ann, under_limit, out);
      return;
    }
    case PlanKind::Filter:
      if (ann) {
        ann->full_match_predicates.push_back(p.predicate);
        ann->row_preserving = false;
      }
      limit_walk(*p.children[0], ann, under_limit, out);
      return;
    case PlanKind::HashJoin:
      // Every build row of a left outer join yields at least one output row,
      // so the build (preserved) side may be limited. Inner joins block.
      if (p.join_kind == JoinKind::LeftOuter) {
        if (ann) out[&p] = *ann;
        limit_walk(*p.children[0], ann, under_limit, out);
      } else {
        limit_walk(*p.children[0], blocked(), under_limit, out);
      }
      limit_walk(*p.children[1], blocked(), under_limit, out);
      return;
    case PlanKind::GroupBy:
    case PlanKind::TopK:
      limit_walk(*p.children[0], blocked(), under_limit, out);
      return;
  }
}

}  // namespace detail

/// Pushes LIMIT information down to table scans. Projections are transparent,
/// filters add a full-match requirement, aggregations, top-k and inner joins
/// block, and a left outer join passes it to its preserved (build) input.
/// Scans below a LIMIT that cannot be reached get `reachable == false`; scans
/// with no LIMIT above them are absent from the map. Left outer joins reached
/// by a LIMIT are recorded as well, for limiting their build input.
inline std::map<const Plan*, LimitAnnotation> limit_pushdown(const Plan& root) {
  std::map<const Plan*, LimitAnnotation> out;
  detail::limit_walk(root, std::nullopt, false, out);
  return out;
}

struct LimitPruneResult {
  std::vector<PartitionId> scan_set;
  bool applied = false;
  LimitReason reason = LimitReason::MinimalAlready;
};

/// Reduces `scan_set` to the fewest fully-matching partitions that together
/// hold at least `effective_k` rows (largest first, ties by id). If the
/// fully-matching partitions are too small, the scan set is kept but
/// reordered so they are read first.
inline LimitPruneResult prune_for_limit(std::span<const PartitionId> scan_set,
                                        std::span<const PartitionId> full_match_set,
                                        const std::function<std::uint64_t(PartitionId)>& row_count,
                                        std::uint64_t effective_k) {
  LimitPruneResult out;
  if (effective_k == 0) {
    out.applied = !scan_set.empty();
    out.reason = scan_set.empty() ? LimitReason::MinimalAlready : LimitReason::Applied;
    return out;
  }
  std::uint64_t total = 0;
  for (PartitionId id : full_match_set) total = detail::add_saturating(total, row_count(id));

  if (total < effective_k) {
    std::vector<PartitionId> rest;
    for (PartitionId id : scan_set) {
      if (std::find(full_match_set.begin(), full_match_set.end(), id) != full_match_set.end())
        out.scan_set.push_back(id);
      else
        rest.push_back(id);
    }
    out.scan_set.insert(out.scan_set.end(), rest.begin(), rest.end());
    out.reason = LimitReason::InsufficientFullMatch;
    return out;
  }

  std::vector<PartitionId> ranked(full_match_set.begin(), full_match_set.end());
  std::stable_sort(ranked.begin(), ranked.end(), [&](PartitionId a, PartitionId b) {
    std::uint64_t ra = row_count(a), rb = row_count(b);
    return ra != rb ? ra > rb : a < b;
  });
  std::uint64_t rows = 0;
  for (PartitionId id : ranked) {
    out.scan_set.push_back(id);
    rows += row_count(id);
    if (rows >= effective_k) break;
  }
  out.applied = out.scan_set.size() < scan_set.size();
  out.reason = out.applied ? LimitReason::Applied : LimitReason::MinimalAlready;
  return out;
}

}  // namespace prunedb
