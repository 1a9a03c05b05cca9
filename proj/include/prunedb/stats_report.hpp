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
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prunedb/query_stats.hpp"

namespace prunedb {

struct PruningRatios {
  std::optional<double> overall;
  std::array<std::optional<double>, 4> by_technique;  // indexed like kTechniques

  std::optional<double> of(Technique t) const { return by_technique[static_cast<std::size_t>(t)]; }
};

/// Pruned partitions over all partitions the query's scans would otherwise
/// read. Absent for a query that touches no partitions.
inline PruningRatios pruning_ratio(const QueryStats& q) {
  PruningRatios r;
  std::uint64_t total = q.partitions_total();
  if (total == 0) return r;
  r.overall = static_cast<double>(q.pruned()) / static_cast<double>(total);
  for (Technique t : kTechniques)
    r.by_technique[static_cast<std::size_t>(t)] = static_cast<double>(q.pruned_by(t)) / static_cast<double>(total);
  return r;
}

/// Nearest-rank percentile of sorted values: the smallest value with at least
/// p% of the values at or below it.
inline double nearest_rank(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("percentile of an empty set");
  double rank = std::ceil(p / 100.0 * static_cast<double>(sorted.size()));
  std::size_t idx = rank < 1 ? 0 : static_cast<std::size_t>(rank) - 1;
  return sorted[std::min(idx, sorted.size() - 1)];
}

inline constexpr std::array<int, 7> kPercentiles = {5, 10, 25, 50, 75, 90, 99};

struct Distribution {
  std::vector<double> values;  // sorted
  double min = 0, median = 0, mean = 0, max = 0;
  std::array<double, kPercentiles.size()> percentiles{};

  static Distribution of(std::vector<double> v) {
    Distribution d;
    std::sort(v.begin(), v.end());
    d.values = std::move(v);
    if (d.values.empty()) return d;
    d.min = d.values.front();
    d.max = d.values.back();
    double sum = 0;
    for (double x : d.values) sum += x;
    d.mean = sum / static_cast<double>(d.values.size());
    d.median = nearest_rank(d.values, 50);
    for (std::size_t i = 0; i < kPercentiles.size(); ++i) d.percentiles[i] = nearest_rank(d.values, kPercentiles[i]);
    return d;
  }
};

struct TechniqueReport {
  Technique technique = Technique::Filter;
  std::size_t eligible = 0;  // queries where the technique could run
  std::size_t applied = 0;   // queries where it pruned at least one partition
  Distribution ratios;       // over applied queries only
};

struct WorkloadReport {
  std::size_t queries = 0;
  std::uint64_t partitions_total = 0;
  std::uint64_t partitions_pruned = 0;
  std::optional<double> aggregate_ratio;
  Distribution overall_ratios;  // over queries with at least one partition
  std::array<TechniqueReport, 4> techniques;
  /// flow[i][j], i < j in pruning order: queries where both pruned.
  std::array<std::array<std::size_t, 4>, 4> flow{};
  /// Queries per exact set of applied techniques, e.g. "filter+join" or "none".
  std::map<std::string, std::size_t> combinations;
};

inline std::string technique_combination(const QueryStats& q) {
  std::string s;
  for (Technique t : kTechniques) {
    if (!q.applied(t)) continue;
    if (!s.empty()) s += "+";
    s += technique_name(t);
  }
  return s.empty() ? "none" : s;
}

inline WorkloadReport flow_report(std::span<const QueryStats> workload) {
  if (workload.empty()) throw InputError("flow report needs at least one query");
  WorkloadReport r;
  r.queries = workload.size();
  std::array<std::vector<double>, 4> ratios;
  std::vector<double> overall;
  for (const auto& q : workload) {
    r.partitions_total += q.partitions_total();
    r.partitions_pruned += q.pruned();
    PruningRatios pr = pruning_ratio(q);
    if (pr.overall) overall.push_back(*pr.overall);
    for (std::size_t i = 0; i < kTechniques.size(); ++i) {
      Technique t = kTechniques[i];
      if (q.eligible(t)) ++r.techniques[i].eligible;
      if (q.applied(t)) {
        ++r.techniques[i].applied;
        ratios[i].push_back(*pr.by_technique[i]);
      }
      for (std::size_t j = i + 1; j < kTechniques.size(); ++j) {
        if (q.applied(t) && q.applied(kTechniques[j])) ++r.flow[i][j];
      }
    }
    ++r.combinations[technique_combination(q)];
  }
  if (r.partitions_total > 0)
    r.aggregate_ratio = static_cast<double>(r.partitions_pruned) / static_cast<double>(r.partitions_total);
  r.overall_ratios = Distribution::of(std::move(overall));
  for (std::size_t i = 0; i < kTechniques.size(); ++i) {
    r.techniques[i].technique = kTechniques[i];
    r.techniques[i].ratios = Distribution::of(std::move(ratios[i]));
  }
  return r;
}

inline nlohmann::json distribution_to_json(const Distribution& d) {
  if (d.values.empty()) return nullptr;
  nlohmann::json p = nlohmann::json::object();
  for (std::size_t i = 0; i < kPercentiles.size(); ++i) p["p" + std::to_string(kPercentiles[i])] = d.percentiles[i];
  return {{"count", d.values.size()}, {"min", d.min},   {"median", d.median},
          {"mean", d.mean},           {"max", d.max},   {"percentiles", p}};
}

inline nlohmann::json report_to_json(const WorkloadReport& r) {
  using nlohmann::json;
  json techniques = json::object();
  for (const auto& t : r.techniques) {
    techniques[std::string(technique_name(t.technique))] = {
        {"eligible", t.eligible}, {"applied", t.applied}, {"ratio", distribution_to_json(t.ratios)}};
  }
  json flow = json::array();
  for (std::size_t i = 0; i < kTechniques.size(); ++i) {
    for (std::size_t j = i + 1; j < kTechniques.size(); ++j) {
      flow.push_back({{"from", technique_name(kTechniques[i])},
                      {"to", technique_name(kTechniques[j])},
                      {"queries", r.flow[i][j]}});
    }
  }
  return {{"version", kStatsVersion},
          {"queries", r.queries},
          {"partitions_total", r.partitions_total},
          {"partitions_pruned", r.partitions_pruned},
          {"aggregate_ratio", r.aggregate_ratio ? json(*r.aggregate_ratio) : json(nullptr)},
          {"overall_ratio", distribution_to_json(r.overall_ratios)},
          {"techniques", techniques},
          {"flow", flow},
          {"combinations", r.combinations}};
}

/// One line per (technique, query ratio) for external plotting.
inline std::string distribution_csv(const WorkloadReport& r) {
  std::ostringstream out;
  out << "technique,ratio\n";
  for (const auto& t : r.techniques) {
    for (double v : t.ratios.values) out << technique_name(t.technique) << ',' << v << '\n';
  }
  return out.str();
}

}  // namespace prunedb
