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
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "prunedb/meta_eval.hpp"
#include "prunedb/partition_store.hpp"

namespace prunedb {

enum class Direction : std::uint8_t { Desc, Asc };
enum class ScanOrderStrategy : std::uint8_t { NoneRandom, FullSort };

inline std::string_view direction_name(Direction d) { return d == Direction::Desc ? "desc" : "asc"; }
inline std::string_view strategy_name(ScanOrderStrategy s) {
  return s == ScanOrderStrategy::FullSort ? "full_sort" : "none_random";
}

/// Identity of a result row: (partition id, row index) pairs of the base
/// rows it was built from, outermost join input first. Used as the final
/// tie-break so that results do not depend on visit order.
using Origin = std::vector<std::uint32_t>;

/// Orders two order-by values for `dir`, NULLs last in both directions.
/// Negative: `a` ranks before `b`.
inline std::weak_ordering rank_values(const Value& a, const Value& b, Direction dir) {
  if (a.is_null() || b.is_null()) return compare_nulls_last(a, b);
  auto o = compare(a, b);
  return dir == Direction::Desc ? detail::reverse(o) : o;
}

struct TopKEntry {
  Value order_value;
  Origin origin;
  Row payload;
};

/// True if `a` ranks strictly before `b`: better order value, or equal value
/// and smaller origin.
inline bool ranks_before(const TopKEntry& a, const TopKEntry& b, Direction dir) {
  auto o = rank_values(a.order_value, b.order_value, dir);
  if (o != 0) return o < 0;
  return a.origin < b.origin;
}

/// Bounded heap of the k best rows seen so far. Its worst entry is the
/// boundary: it exists once k rows are held and only ever tightens.
class TopKState {
 public:
  TopKState(std::uint64_t k, Direction dir) : k_(k), dir_(dir) {}

  std::uint64_t k() const { return k_; }
  Direction direction() const { return dir_; }
  std::size_t size() const { return heap_.size(); }
  bool full() const { return k_ > 0 && heap_.size() >= k_; }

  /// Inserts if the heap is not full, otherwise replaces the boundary entry
  /// iff the candidate ranks strictly before it. Returns true if admitted.
  bool insert(Value order_value, Origin origin, Row payload = {}) {
    if (k_ == 0) return false;
    TopKEntry e{std::move(order_value), std::move(origin), std::move(payload)};
    auto worse = [this](const TopKEntry& a, const TopKEntry& b) { return ranks_before(a, b, dir_); };
    if (heap_.size() < k_) {
      heap_.push_back(std::move(e));
      std::push_heap(heap_.begin(), heap_.end(), worse);
      return true;
    }
    if (!ranks_before(e, heap_.front(), dir_)) return false;
    std::pop_heap(heap_.begin(), heap_.end(), worse);
    heap_.back() = std::move(e);
    std::push_heap(heap_.begin(), heap_.end(), worse);
    return true;
  }

  /// Worst held entry, present iff the heap holds k entries.
  const TopKEntry* boundary_entry() const { return full() ? &heap_.front() : nullptr; }

  std::optional<Value> boundary() const {
    if (const TopKEntry* e = boundary_entry()) return e->order_value;
    return std::nullopt;
  }

  /// Entries best first.
  std::vector<TopKEntry> sorted() const {
    std::vector<TopKEntry> out = heap_;
    std::sort(out.begin(), out.end(), [this](const TopKEntry& a, const TopKEntry& b) { return ranks_before(a, b, dir_); });
    return out;
  }

 private:
  std::uint64_t k_;
  Direction dir_;
  std::vector<TopKEntry> heap_;  // max-heap on "ranks later": front is the worst
};

/// Boundary value shared between a top-k operator and concurrent scan
/// workers. Writers only ever tighten it; readers may see a stale (looser)
/// value, which is safe.
class SharedBoundary {
 public:
  explicit SharedBoundary(Direction dir) : dir_(dir) {}

  /// Replaces the boundary iff `candidate` is strictly tighter.
  bool tighten(const Value& candidate, const Origin& origin) {
    std::lock_guard<std::mutex> lock(mu_);
    if (value_) {
      auto o = rank_values(candidate, *value_, dir_);
      if (o > 0 || (o == 0 && !(origin < origin_))) return false;
    }
    value_ = candidate;
    origin_ = origin;
    return true;
  }

  std::optional<std::pair<Value, Origin>> load() const {
    std::lock_guard<std::mutex> lock(mu_);
    if (!value_) return std::nullopt;
    return std::make_pair(*value_, origin_);
  }

 private:
  Direction dir_;
  mutable std::mutex mu_;
  std::optional<Value> value_;
  Origin origin_;
};

/// Can the partition be skipped because none of its rows can displace the
/// boundary? Desc: max <= boundary; Asc: min >= boundary. Equality is safe
/// because a tie never displaces the boundary entry. Partitions whose order
/// column is entirely NULL are skipped (NULLs rank last).
inline bool should_prune(const Interval& order_range, const Value& boundary, Direction dir) {
  if (boundary.is_null()) return false;
  if (order_range.only_null) return true;
  if (dir == Direction::Desc) return order_range.hi && compare(*order_range.hi, boundary) <= 0;
  return order_range.lo && compare(*order_range.lo, boundary) >= 0;
}

inline bool should_prune(const ColumnStats& stats, const Value& boundary, Direction dir) {
  Interval i = stats.all_null() ? Interval::nulls() : Interval::of(*stats.min, *stats.max, stats.has_nulls());
  return should_prune(i, boundary, dir);
}

/// Strict variant: prune only if every value ranks strictly after `threshold`.
/// Used with boundaries that rows tied with the threshold may still beat.
inline bool strictly_below(const Interval& order_range, const Value& threshold, Direction dir) {
  if (threshold.is_null()) return false;
  if (order_range.only_null) return true;
  if (dir == Direction::Desc) return order_range.hi && compare(*order_range.hi, threshold) < 0;
  return order_range.lo && compare(*order_range.lo, threshold) > 0;
}

/// Unbiased bounded random integer in [0, n).
inline std::uint64_t bounded_random(std::mt19937_64& rng, std::uint64_t n) {
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Fisher-Yates shuffle with a portable draw, so a seed gives the same
/// permutation everywhere.
template <class T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded_random(rng, i)]);
}

struct PartitionRange {
  PartitionId id = 0;
  Interval range;  // order-column range of the partition
};

/// Visit order for a top-k scan. FullSort: Desc by max descending, Asc by
/// min ascending, ties by id; partitions without any non-null order value go
/// last and unbounded ones first. NoneRandom: seeded shuffle.
inline std::vector<PartitionId> order_scan_set(std::span<const PartitionRange> parts, Direction dir,
                                               ScanOrderStrategy strategy, std::uint64_t seed = 0) {
  std::vector<PartitionRange> v(parts.begin(), parts.end());
  if (strategy == ScanOrderStrategy::NoneRandom) {
    seeded_shuffle(v, seed);
  } else {
    auto bucket = [&](const PartitionRange& p) {
      if (p.range.only_null) return 2;
      bool bounded = dir == Direction::Desc ? p.range.hi.has_value() : p.range.lo.has_value();
      return bounded ? 1 : 0;
    };
    std::stable_sort(v.begin(), v.end(), [&](const PartitionRange& a, const PartitionRange& b) {
      int ba = bucket(a), bb = bucket(b);
      if (ba != bb) return ba < bb;
      if (ba == 1) {
        auto o = dir == Direction::Desc ? compare(*b.range.hi, *a.range.hi) : compare(*a.range.lo, *b.range.lo);
        if (o != 0) return o < 0;
      }
      return a.id < b.id;
    });
  }
  std::vector<PartitionId> out;
  out.reserve(v.size());
  for (const auto& p : v) out.push_back(p.id);
  return out;
}

inline std::vector<PartitionId> order_scan_set(std::span<const std::pair<PartitionId, ColumnStats>> parts,
                                               Direction dir, ScanOrderStrategy strategy, std::uint64_t seed = 0) {
  std::vector<PartitionRange> ranges;
  for (const auto& [id, s] : parts) {
    ranges.push_back({id, s.all_null() ? Interval::nulls() : Interval::of(*s.min, *s.max, s.has_nulls())});
  }
  return order_scan_set(ranges, dir, strategy, seed);
}

/// Order-column metadata of one fully-matching partition.
struct FullMatchStats {
  PartitionId id = 0;
  ColumnStats stats;
};

struct BoundaryCandidates {
  std::optional<Value> kth_extreme;   // candidate A: k-th largest max (Desc)
  std::optional<Value> cumulative;    // candidate B: min at which the row count reaches k (Desc)
};

/// The two compile-time boundary candidates over null-free fully-matching
/// partitions (Desc shown; Asc mirrors min/max and the direction):
///  A: the k-th largest max. Each partition contributes at least one row
///     equal to its max, so k rows are >= A.
///  B: sort by min descending and take the min of the first partition at
///     which the cumulative row count reaches k; every row up to there is >= B.
/// A is absent with fewer than k partitions, B when the total is below k.
inline BoundaryCandidates init_boundary_candidates(std::span<const FullMatchStats> full_match, std::uint64_t k,
                                                   Direction dir) {
  BoundaryCandidates out;
  if (k == 0) return out;
  std::vector<const ColumnStats*> eligible;
  for (const auto& p : full_match) {
    if (p.stats.null_count == 0 && p.stats.row_count > 0 && p.stats.min && p.stats.max) eligible.push_back(&p.stats);
  }
  bool desc = dir == Direction::Desc;
  auto better = [&](const Value& a, const Value& b) { return desc ? less(b, a) : less(a, b); };

  if (eligible.size() >= k) {
    std::vector<Value> extremes;
    for (const auto* s : eligible) extremes.push_back(desc ? *s->max : *s->min);
    std::nth_element(extremes.begin(), extremes.begin() + static_cast<std::ptrdiff_t>(k - 1), extremes.end(), better);
    out.kth_extreme = extremes[k - 1];
  }

  std::vector<const ColumnStats*> by_inner = eligible;
  std::stable_sort(by_inner.begin(), by_inner.end(), [&](const ColumnStats* a, const ColumnStats* b) {
    return desc ? better(*a->min, *b->min) : better(*a->max, *b->max);
  });
  std::uint64_t rows = 0;
  for (const auto* s : by_inner) {
    rows += s->row_count;
    if (rows >= k) {
      out.cumulative = desc ? *s->min : *s->max;
      break;
    }
  }
  return out;
}

/// The stricter of the two candidates (larger for Desc, smaller for Asc).
inline std::optional<Value> init_boundary(std::span<const FullMatchStats> full_match, std::uint64_t k, Direction dir) {
  BoundaryCandidates c = init_boundary_candidates(full_match, k, dir);
  if (!c.kth_extreme) return c.cumulative;
  if (!c.cumulative) return c.kth_extreme;
  return rank_values(*c.kth_extreme, *c.cumulative, dir) <= 0 ? c.kth_extreme : c.cumulative;
}

/// Top-k pruning below an aggregation is legal only when every ORDER BY key
/// is a GROUP BY key (ordering by an aggregate is not).
inline bool groupby_topk_eligible(std::span<const std::string> order_keys, std::span<const std::string> group_keys) {
  return std::all_of(order_keys.begin(), order_keys.end(), [&](const std::string& k) {
    return std::find(group_keys.begin(), group_keys.end(), k) != group_keys.end();
  });
}

}  // namespace prunedb
