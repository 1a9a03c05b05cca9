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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prunedb/expr_json.hpp"
#include "prunedb/join_pruning.hpp"
#include "prunedb/limit_planner.hpp"
#include "prunedb/topk.hpp"

namespace prunedb {

inline constexpr int kStatsVersion = 1;

/// Pruning techniques in the order they run.
enum class Technique : std::uint8_t { Filter, Limit, Join, TopK };
inline constexpr std::array<Technique, 4> kTechniques = {Technique::Filter, Technique::Limit, Technique::Join,
                                                         Technique::TopK};

inline std::string_view technique_name(Technique t) {
  switch (t) {
    case Technique::Filter: return "filter";
    case Technique::Limit: return "limit";
    case Technique::Join: return "join";
    case Technique::TopK: return "topk";
  }
  return "?";
}

/// What happened to one partition of a scan. Each partition gets exactly one.
enum class Attribution : std::uint8_t { Unset, Filter, Limit, Join, TopK, Scanned };

inline std::string_view attribution_name(Attribution a) {
  switch (a) {
    case Attribution::Unset: return "unset";
    case Attribution::Filter: return "filter";
    case Attribution::Limit: return "limit";
    case Attribution::Join: return "join";
    case Attribution::TopK: return "topk";
    case Attribution::Scanned: return "scanned";
  }
  return "?";
}

inline Attribution parse_attribution(std::string_view s) {
  for (auto a : {Attribution::Filter, Attribution::Limit, Attribution::Join, Attribution::TopK, Attribution::Scanned}) {
    if (attribution_name(a) == s) return a;
  }
  return Attribution::Unset;
}

struct FilterTelemetry {
  bool eligible = false;
  std::uint64_t partitions_before = 0, partitions_after = 0, full_match = 0;
  std::uint32_t reorder_events = 0, cutoff_events = 0;
  nlohmann::json tree = nlohmann::json::array();
};

struct LimitTelemetry {
  bool eligible = false;
  bool applied = false;
  LimitReason reason = LimitReason::UnsupportedShape;
  std::uint64_t effective_k = 0;
  std::uint64_t partitions_before = 0, partitions_after = 0;
  std::optional<std::uint64_t> minimal_needed;
};

struct JoinTelemetry {
  bool eligible = false;
  SummaryMode summary_mode = SummaryMode::Empty;
  std::size_t summary_size = 0;
  std::uint64_t partitions_before = 0, partitions_after = 0;
};

struct TopKTelemetry {
  bool eligible = false;
  std::string plan_shape;
  bool initialized_boundary = false;
  std::optional<Value> initial_boundary;
  std::uint64_t partitions_pruned = 0, partitions_scanned = 0;
  ScanOrderStrategy strategy = ScanOrderStrategy::FullSort;
};

struct ScanStats {
  std::uint32_t node_id = 0;
  std::string table, alias;
  std::uint64_t partitions_total = 0;
  std::uint64_t pruned_by_filter = 0, pruned_by_limit = 0, pruned_by_join = 0, pruned_by_topk = 0;
  std::uint64_t scanned = 0;
  std::uint64_t rows_scanned = 0;
  std::vector<std::pair<PartitionId, Attribution>> attribution;  // table order
  FilterTelemetry filter;
  LimitTelemetry limit;
  JoinTelemetry join;
  TopKTelemetry topk;

  std::uint64_t pruned() const { return pruned_by_filter + pruned_by_limit + pruned_by_join + pruned_by_topk; }

  std::uint64_t pruned_by(Technique t) const {
    switch (t) {
      case Technique::Filter: return pruned_by_filter;
      case Technique::Limit: return pruned_by_limit;
      case Technique::Join: return pruned_by_join;
      case Technique::TopK: return pruned_by_topk;
    }
    return 0;
  }

  bool eligible(Technique t) const {
    switch (t) {
      case Technique::Filter: return filter.eligible;
      case Technique::Limit: return limit.eligible;
      case Technique::Join: return join.eligible;
      case Technique::TopK: return topk.eligible;
    }
    return false;
  }

  /// Recounts the per-technique totals from `attribution`.
  void recount() {
    pruned_by_filter = pruned_by_limit = pruned_by_join = pruned_by_topk = scanned = 0;
    for (const auto& [id, a] : attribution) {
      switch (a) {
        case Attribution::Filter: ++pruned_by_filter; break;
        case Attribution::Limit: ++pruned_by_limit; break;
        case Attribution::Join: ++pruned_by_join; break;
        case Attribution::TopK: ++pruned_by_topk; break;
        case Attribution::Scanned: ++scanned; break;
        case Attribution::Unset: break;
      }
    }
    partitions_total = attribution.size();
  }
};

struct QueryStats {
  std::string query;  // optional label (SQL text or plan file)
  std::vector<ScanStats> scans;
  std::uint64_t rows_out = 0;
  double wall_time_ms = 0;
  std::size_t workers = 1;

  std::uint64_t partitions_total() const {
    std::uint64_t n = 0;
    for (const auto& s : scans) n += s.partitions_total;
    return n;
  }
  std::uint64_t pruned_by(Technique t) const {
    std::uint64_t n = 0;
    for (const auto& s : scans) n += s.pruned_by(t);
    return n;
  }
  std::uint64_t pruned() const {
    std::uint64_t n = 0;
    for (const auto& s : scans) n += s.pruned();
    return n;
  }
  std::uint64_t scanned() const {
    std::uint64_t n = 0;
    for (const auto& s : scans) n += s.scanned;
    return n;
  }
  bool eligible(Technique t) const {
    for (const auto& s : scans) {
      if (s.eligible(t)) return true;
    }
    return false;
  }
  /// A technique "applied" when it pruned at least one partition.
  bool applied(Technique t) const { return pruned_by(t) > 0; }
};

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json scan_stats_to_json(const ScanStats& s) {
  using nlohmann::json;
  json attribution = json::array();
  for (const auto& [id, a] : s.attribution) attribution.push_back({{"partition", id}, {"outcome", attribution_name(a)}});
  json limit = {{"eligible", s.limit.eligible},
                {"applied", s.limit.applied},
                {"reason", limit_reason_name(s.limit.reason)},
                {"effective_k", s.limit.effective_k},
                {"partitions_before", s.limit.partitions_before},
                {"partitions_after", s.limit.partitions_after},
                {"minimal_needed", s.limit.minimal_needed ? json(*s.limit.minimal_needed) : json(nullptr)}};
  json topk = {{"eligible", s.topk.eligible},
               {"plan_shape", s.topk.plan_shape.empty() ? json(nullptr) : json(s.topk.plan_shape)},
               {"initialized_boundary", s.topk.initialized_boundary},
               {"initial_boundary", s.topk.initial_boundary ? value_to_json(*s.topk.initial_boundary) : json(nullptr)},
               {"partitions_pruned", s.topk.partitions_pruned},
               {"partitions_scanned", s.topk.partitions_scanned},
               {"strategy", strategy_name(s.topk.strategy)}};
  return {{"node_id", s.node_id},
          {"table", s.table},
          {"alias", s.alias},
          {"partitions_total", s.partitions_total},
          {"pruned_by_filter", s.pruned_by_filter},
          {"pruned_by_limit", s.pruned_by_limit},
          {"pruned_by_join", s.pruned_by_join},
          {"pruned_by_topk", s.pruned_by_topk},
          {"scanned", s.scanned},
          {"rows_scanned", s.rows_scanned},
          {"attribution", attribution},
          {"filter_pruning",
           {{"eligible", s.filter.eligible},
            {"partitions_before", s.filter.partitions_before},
            {"partitions_after", s.filter.partitions_after},
            {"full_match", s.filter.full_match},
            {"reorder_events", s.filter.reorder_events},
            {"cutoff_events", s.filter.cutoff_events},
            {"tree", s.filter.tree}}},
          {"limit_pruning", limit},
          {"join_pruning",
           {{"eligible", s.join.eligible},
            {"summary_mode", s.join.eligible ? json(summary_mode_name(s.join.summary_mode)) : json(nullptr)},
            {"summary_size", s.join.summary_size},
            {"probe_partitions_before", s.join.partitions_before},
            {"probe_partitions_after", s.join.partitions_after}}},
          {"topk_pruning", topk}};
}

inline nlohmann::json query_stats_to_json(const QueryStats& q) {
  nlohmann::json scans = nlohmann::json::array();
  for (const auto& s : q.scans) scans.push_back(scan_stats_to_json(s));
  return {{"version", kStatsVersion},
          {"query", q.query},
          {"rows_out", q.rows_out},
          {"wall_time_ms", q.wall_time_ms},
          {"workers", q.workers},
          {"scans", scans}};
}

/// Reads the counters and eligibility flags back (telemetry trees are kept
/// only as opaque JSON). Throws InputError on a missing or newer version.
inline LimitReason parse_limit_reason(std::string_view s) {
  for (auto r : {LimitReason::MinimalAlready, LimitReason::UnsupportedShape, LimitReason::InsufficientFullMatch,
                 LimitReason::Applied}) {
    if (limit_reason_name(r) == s) return r;
  }
  throw InputError("unknown limit reason '" + std::string(s) + "'");
}

inline SummaryMode parse_summary_mode(std::string_view s) {
  for (auto m : {SummaryMode::Empty, SummaryMode::ExactSet, SummaryMode::RangeSet, SummaryMode::GlobalMinMax}) {
    if (summary_mode_name(m) == s) return m;
  }
  throw InputError("unknown summary mode '" + std::string(s) + "'");
}

inline QueryStats query_stats_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("version")) throw InputError("stats file has no \"version\"");
  if (j["version"].get<int>() > kStatsVersion) throw InputError("unsupported stats version");
  QueryStats q;
  try {
    q.query = j.value("query", std::string());
    q.rows_out = j.value("rows_out", std::uint64_t{0});
    q.wall_time_ms = j.value("wall_time_ms", 0.0);
    q.workers = j.value("workers", std::size_t{1});
    for (const auto& sj : j.at("scans")) {
      ScanStats s;
      s.node_id = sj.value("node_id", 0u);
      s.table = sj.value("table", std::string());
      s.alias = sj.value("alias", std::string());
      s.partitions_total = sj.at("partitions_total").get<std::uint64_t>();
      s.pruned_by_filter = sj.at("pruned_by_filter").get<std::uint64_t>();
      s.pruned_by_limit = sj.at("pruned_by_limit").get<std::uint64_t>();
      s.pruned_by_join = sj.at("pruned_by_join").get<std::uint64_t>();
      s.pruned_by_topk = sj.at("pruned_by_topk").get<std::uint64_t>();
      s.scanned = sj.at("scanned").get<std::uint64_t>();
      s.rows_scanned = sj.value("rows_scanned", std::uint64_t{0});
      if (sj.contains("attribution")) {
        for (const auto& a : sj["attribution"])
          s.attribution.emplace_back(a.at("partition").get<PartitionId>(),
                                     parse_attribution(a.at("outcome").get<std::string>()));
      }
      const auto& fj = sj.at("filter_pruning");
      s.filter.eligible = fj.value("eligible", false);
      s.filter.partitions_before = fj.value("partitions_before", std::uint64_t{0});
      s.filter.partitions_after = fj.value("partitions_after", std::uint64_t{0});
      s.filter.full_match = fj.value("full_match", std::uint64_t{0});
      s.filter.reorder_events = fj.value("reorder_events", 0u);
      s.filter.cutoff_events = fj.value("cutoff_events", 0u);
      s.filter.tree = fj.value("tree", nlohmann::json::array());

      const auto& lj = sj.at("limit_pruning");
      s.limit.eligible = lj.value("eligible", false);
      s.limit.applied = lj.value("applied", false);
      s.limit.reason = parse_limit_reason(lj.value("reason", std::string("unsupported_shape")));
      s.limit.effective_k = lj.value("effective_k", std::uint64_t{0});
      s.limit.partitions_before = lj.value("partitions_before", std::uint64_t{0});
      s.limit.partitions_after = lj.value("partitions_after", std::uint64_t{0});
      if (lj.contains("minimal_needed") && !lj["minimal_needed"].is_null())
        s.limit.minimal_needed = lj["minimal_needed"].get<std::uint64_t>();

      const auto& jj = sj.at("join_pruning");
      s.join.eligible = jj.value("eligible", false);
      if (jj.contains("summary_mode") && jj["summary_mode"].is_string())
        s.join.summary_mode = parse_summary_mode(jj["summary_mode"].get<std::string>());
      s.join.summary_size = jj.value("summary_size", std::size_t{0});
      s.join.partitions_before = jj.value("probe_partitions_before", std::uint64_t{0});
      s.join.partitions_after = jj.value("probe_partitions_after", std::uint64_t{0});

      const auto& tj = sj.at("topk_pruning");
      s.topk.eligible = tj.value("eligible", false);
      if (tj.contains("plan_shape") && tj["plan_shape"].is_string()) s.topk.plan_shape = tj["plan_shape"].get<std::string>();
      s.topk.initialized_boundary = tj.value("initialized_boundary", false);
      if (tj.contains("initial_boundary") && !tj["initial_boundary"].is_null())
        s.topk.initial_boundary = value_from_json(tj["initial_boundary"]);
      s.topk.partitions_pruned = tj.value("partitions_pruned", std::uint64_t{0});
      s.topk.partitions_scanned = tj.value("partitions_scanned", std::uint64_t{0});
      s.topk.strategy = tj.value("strategy", std::string("full_sort")) == "none_random" ? ScanOrderStrategy::NoneRandom
                                                                                         : ScanOrderStrategy::FullSort;
      q.scans.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed stats file: ") + e.what());
  }
  return q;
}

}  // namespace prunedb
