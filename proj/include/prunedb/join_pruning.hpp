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
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prunedb/meta_eval.hpp"
#include "prunedb/partition_store.hpp"

namespace prunedb {

enum class SummaryMode : std::uint8_t { Empty, ExactSet, RangeSet, GlobalMinMax };

inline std::string_view summary_mode_name(SummaryMode m) {
  switch (m) {
    case SummaryMode::Empty: return "empty";
    case SummaryMode::ExactSet: return "exact_set";
    case SummaryMode::RangeSet: return "range_set";
    case SummaryMode::GlobalMinMax: return "global_min_max";
  }
  return "?";
}

struct KeyRange {
  Value lo, hi;  // closed
};

struct SummaryConfig {
  std::size_t budget = 64;            // maximum number of ranges
  std::size_t exact_threshold = 1024;  // maximum distinct keys kept exactly
};

/// Compact over-approximation of the non-null build-side join keys.
struct BuildSummary {
  SummaryMode mode = SummaryMode::Empty;
  std::optional<Type> key_type;
  std::vector<Value> values;    // ExactSet: sorted, distinct
  std::vector<KeyRange> ranges;  // RangeSet / GlobalMinMax: sorted, disjoint

  std::size_t size() const { return mode == SummaryMode::ExactSet ? values.size() : ranges.size(); }

  bool contains(const Value& v) const {
    if (v.is_null()) return false;
    return intersects(v, v);
  }

  /// True if some summarized key lies in [lo, hi].
  bool intersects(const Value& lo, const Value& hi) const {
    switch (mode) {
      case SummaryMode::Empty: return false;
      case SummaryMode::ExactSet: {
        auto it = std::lower_bound(values.begin(), values.end(), lo, [](const Value& a, const Value& b) { return less(a, b); });
        return it != values.end() && compare(*it, hi) <= 0;
      }
      case SummaryMode::RangeSet:
      case SummaryMode::GlobalMinMax: {
        auto it = std::lower_bound(ranges.begin(), ranges.end(), lo,
                                   [](const KeyRange& r, const Value& v) { return less(r.hi, v); });
        return it != ranges.end() && compare(it->lo, hi) <= 0;
      }
    }
    return true;
  }

  /// Interval form, used when the probe key is an expression. Unbounded ends
  /// are treated as the extreme summarized keys.
  bool intersects(const Interval& i) const {
    if (mode == SummaryMode::Empty || i.only_null) return false;
    const Value* first = nullptr;
    const Value* last = nullptr;
    if (mode == SummaryMode::ExactSet) {
      first = &values.front();
      last = &values.back();
    } else {
      first = &ranges.front().lo;
      last = &ranges.back().hi;
    }
    const Value& lo = i.lo ? *i.lo : *first;
    const Value& hi = i.hi ? *i.hi : *last;
    if (compare(lo, hi) > 0) return false;
    return intersects(lo, hi);
  }
};

namespace detail {

/// Distance between adjacent keys; smaller merges first. Numbers use their
/// difference. Strings are closer the longer their common prefix, then the
/// smaller the first differing byte gap.
struct KeyGap {
  double primary = 0;
  double secondary = 0;
  friend bool operator<(const KeyGap& a, const KeyGap& b) {
    if (a.primary != b.primary) return a.primary < b.primary;
    return a.secondary < b.secondary;
  }
};

inline KeyGap key_gap(const Value& a, const Value& b) {
  if (a.is_numeric() && b.is_numeric()) {
    if (a.type() == Type::Int64 && b.type() == Type::Int64) {
      // Exact in 128 bits, then rounded.
      __int128 d = static_cast<__int128>(b.as_int()) - static_cast<__int128>(a.as_int());
      return {static_cast<double>(d), 0};
    }
    double d = b.to_double() - a.to_double();
    if (std::isnan(d)) d = std::numeric_limits<double>::infinity();
    return {d, 0};
  }
  if (a.type() == Type::Utf8 && b.type() == Type::Utf8) {
    const std::string& x = a.as_string();
    const std::string& y = b.as_string();
    std::size_t n = 0;
    while (n < x.size() && n < y.size() && x[n] == y[n]) ++n;
    int cx = n < x.size() ? static_cast<unsigned char>(x[n]) : -1;
    int cy = n < y.size() ? static_cast<unsigned char>(y[n]) : -1;
    return {-static_cast<double>(n), static_cast<double>(cy - cx)};
  }
  return {1, 0};
}

inline bool int_adjacent(const Value& a, const Value& b) {
  return a.type() == Type::Int64 && b.type() == Type::Int64 && a.as_int() != std::numeric_limits<std::int64_t>::max() &&
         a.as_int() + 1 == b.as_int();
}

inline std::optional<Type> summary_type(std::span<const Value> keys) {
  std::optional<Type> t;
  for (const auto& v : keys) {
    if (v.is_null()) continue;
    if (!t) t = v.type();
    else if (*t != v.type() && !(is_numeric(*t) && v.is_numeric()))
      throw TypeError("mixed join key types " + std::string(type_name(*t)) + " and " + std::string(type_name(v.type())));
    else if (*t != v.type()) t = Type::Float64;
  }
  return t;
}

/// Merges sorted, non-overlapping ranges down to `budget` by closing the
/// smallest gaps (lower index first on ties).
inline std::vector<KeyRange> merge_to_budget(std::vector<KeyRange> ranges, std::size_t budget) {
  // Integer runs merge for free: no value is added.
  std::vector<KeyRange> runs;
  for (auto& r : ranges) {
    if (!runs.empty() && (int_adjacent(runs.back().hi, r.lo) || compare(runs.back().hi, r.lo) >= 0)) {
      if (less(runs.back().hi, r.hi)) runs.back().hi = r.hi;
    } else {
      runs.push_back(std::move(r));
    }
  }
  if (runs.size() <= budget) return runs;
  std::size_t m = runs.size();
  std::vector<std::pair<KeyGap, std::size_t>> gaps;
  for (std::size_t i = 0; i + 1 < m; ++i) gaps.push_back({key_gap(runs[i].hi, runs[i + 1].lo), i});
  std::sort(gaps.begin(), gaps.end(), [](const auto& a, const auto& b) {
    if (a.first < b.first) return true;
    if (b.first < a.first) return false;
    return a.second < b.second;
  });
  std::vector<bool> close(m, false);
  for (std::size_t i = 0; i < m - budget; ++i) close[gaps[i].second] = true;
  std::vector<KeyRange> out;
  out.push_back(runs[0]);
  for (std::size_t i = 1; i < m; ++i) {
    if (close[i - 1]) out.back().hi = runs[i].hi;
    else out.push_back(runs[i]);
  }
  return out;
}

inline std::vector<Value> sorted_distinct(std::span<const Value> keys) {
  std::vector<Value> v;
  for (const auto& k : keys) {
    if (!k.is_null()) v.push_back(k);
  }
  std::sort(v.begin(), v.end(), [](const Value& a, const Value& b) { return less(a, b); });
  v.erase(std::unique(v.begin(), v.end(), [](const Value& a, const Value& b) { return equivalent(a, b); }), v.end());
  return v;
}

inline BuildSummary summary_from_distinct(std::vector<Value> distinct, std::optional<Type> type, std::size_t budget,
                                          std::size_t exact_threshold) {
  if (budget == 0) throw std::invalid_argument("summary budget must be >= 1");
  BuildSummary s;
  s.key_type = type;
  if (distinct.empty()) return s;
  if (distinct.size() <= exact_threshold) {
    s.mode = SummaryMode::ExactSet;
    s.values = std::move(distinct);
    return s;
  }
  if (budget == 1) {
    s.mode = SummaryMode::GlobalMinMax;
    s.ranges.push_back({distinct.front(), distinct.back()});
    return s;
  }
  std::vector<KeyRange> points;
  points.reserve(distinct.size());
  for (auto& v : distinct) points.push_back({v, v});
  s.mode = SummaryMode::RangeSet;
  s.ranges = merge_to_budget(std::move(points), budget);
  return s;
}

}  // namespace detail

/// Summarizes the build keys (NULLs are ignored, they never join). Zero keys
/// give Empty; at most `exact_threshold` distinct keys give ExactSet;
/// otherwise at most `budget` ranges, where budget 1 is GlobalMinMax.
inline BuildSummary summarize_build(std::span<const Value> keys, std::size_t budget = 64,
                                    std::size_t exact_threshold = 1024) {
  auto type = detail::summary_type(keys);
  return detail::summary_from_distinct(detail::sorted_distinct(keys), type, budget, exact_threshold);
}

/// Keys the summary stands for, as ranges (an ExactSet becomes points).
inline std::vector<KeyRange> summary_ranges(const BuildSummary& s) {
  if (s.mode != SummaryMode::ExactSet) return s.ranges;
  std::vector<KeyRange> out;
  for (const auto& v : s.values) out.push_back({v, v});
  return out;
}

/// Combines partial summaries built by separate workers. Exact sets union
/// exactly; anything involving ranges unions the ranges and re-merges them to
/// the budget. The result covers every key of both inputs.
inline BuildSummary merge_summaries(const BuildSummary& a, const BuildSummary& b, std::size_t budget = 64,
                                    std::size_t exact_threshold = 1024) {
  if (a.mode == SummaryMode::Empty) return b;
  if (b.mode == SummaryMode::Empty) return a;
  std::vector<Value> types;
  if (a.key_type) types.push_back(a.values.empty() ? a.ranges.front().lo : a.values.front());
  if (b.key_type) types.push_back(b.values.empty() ? b.ranges.front().lo : b.values.front());
  auto type = detail::summary_type(types);
  if (a.mode == SummaryMode::ExactSet && b.mode == SummaryMode::ExactSet) {
    std::vector<Value> all = a.values;
    all.insert(all.end(), b.values.begin(), b.values.end());
    return detail::summary_from_distinct(detail::sorted_distinct(all), type, budget, exact_threshold);
  }
  std::vector<KeyRange> all = summary_ranges(a);
  auto rb = summary_ranges(b);
  all.insert(all.end(), rb.begin(), rb.end());
  std::sort(all.begin(), all.end(), [](const KeyRange& x, const KeyRange& y) { return less(x.lo, y.lo); });
  // Overlapping inputs fuse first, then the budget applies.
  std::vector<KeyRange> fused;
  for (auto& r : all) {
    if (!fused.empty() && compare(fused.back().hi, r.lo) >= 0) {
      if (less(fused.back().hi, r.hi)) fused.back().hi = r.hi;
    } else {
      fused.push_back(std::move(r));
    }
  }
  BuildSummary s;
  s.key_type = type;
  if (budget == 1) {
    s.mode = SummaryMode::GlobalMinMax;
    s.ranges.push_back({fused.front().lo, fused.back().hi});
  } else {
    s.mode = SummaryMode::RangeSet;
    s.ranges = detail::merge_to_budget(std::move(fused), budget);
  }
  return s;
}

/// Drops probe partitions whose key range misses the summary. A partition
/// whose key column is entirely NULL can only match as an unmatched preserved
/// row, so it is kept only when the probe side is preserved; with a preserved
/// probe side no partition may be dropped at all.
inline std::vector<PartitionId> prune_probe(std::span<const PartitionId> scan_set,
                                            const std::function<const ColumnStats*(PartitionId)>& key_stats,
                                            const BuildSummary& summary, bool probe_preserved = false) {
  if (probe_preserved) return {scan_set.begin(), scan_set.end()};
  std::vector<PartitionId> out;
  for (PartitionId id : scan_set) {
    const ColumnStats* s = key_stats(id);
    if (!s) {
      out.push_back(id);
      continue;
    }
    if (s->all_null()) continue;
    if (summary.intersects(*s->min, *s->max)) out.push_back(id);
  }
  return out;
}

}  // namespace prunedb
