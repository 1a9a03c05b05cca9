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

// Synthetic benchmark data with a clustering knob and a matching query
// manifest (range scans of chosen selectivity, LIMIT, top-k, small-build
// joins).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "prunedb/catalog_io.hpp"
#include "prunedb/partition_store.hpp"
#include "prunedb/topk.hpp"

namespace prunedb {

struct ColumnSpec {
  std::string name;
  Type type = Type::Int64;
  std::string distribution = "uniform";  // "uniform" | "zipf" | "sequential"
  std::uint64_t cardinality = 1000;
  double null_fraction = 0;
};

struct GeneratorSpec {
  std::string table = "fact";
  std::uint64_t rows = 10000;
  std::uint64_t partition_rows = 100;
  double clustering = 1.0;
  std::string cluster_column;  // defaults to the first column
  std::vector<ColumnSpec> columns;
  std::uint64_t seed = 1;
  std::vector<double> selectivities = {0.001, 0.01, 0.1, 0.5};
  std::uint64_t queries_per_selectivity = 3;
  std::uint64_t limit = 10;
  std::uint64_t dim_rows = 0;  // rows of the small join build table; 0 = no joins

  static GeneratorSpec from_json(const nlohmann::json& j);
  void validate() const;
};

inline void GeneratorSpec::validate() const {
  if (rows == 0 || partition_rows == 0) throw InputError("rows and partition_rows must be >= 1");
  if (!(clustering >= 0 && clustering <= 1)) throw InputError("clustering must lie in [0, 1]");
  if (columns.empty()) throw InputError("generator needs at least one column");
  bool found = cluster_column.empty();
  for (const auto& c : columns) {
    if (c.cardinality == 0) throw InputError("column '" + c.name + "' needs cardinality >= 1");
    if (c.type == Type::Bool || c.type == Type::Null) throw InputError("generator supports int64, float64 and utf8");
    if (c.distribution != "uniform" && c.distribution != "zipf" && c.distribution != "sequential")
      throw InputError("unknown distribution '" + c.distribution + "'");
    if (!(c.null_fraction >= 0 && c.null_fraction < 1)) throw InputError("null_fraction must lie in [0, 1)");
    found = found || c.name == cluster_column;
  }
  if (!found) throw InputError("unknown cluster column '" + cluster_column + "'");
  for (double s : selectivities) {
    if (!(s > 0 && s <= 1)) throw InputError("selectivities must lie in (0, 1]");
  }
}

inline GeneratorSpec GeneratorSpec::from_json(const nlohmann::json& j) {
  GeneratorSpec s;
  try {
    s.table = j.value("table", s.table);
    s.rows = j.value("rows", s.rows);
    s.partition_rows = j.value("partition_rows", s.partition_rows);
    if (j.contains("partitions")) {
      auto parts = j["partitions"].get<std::uint64_t>();
      if (parts == 0) throw InputError("partitions must be >= 1");
      s.partition_rows = (s.rows + parts - 1) / parts;
    }
    s.clustering = j.value("clustering", s.clustering);
    s.cluster_column = j.value("cluster_column", s.cluster_column);
    s.seed = j.value("seed", s.seed);
    s.selectivities = j.value("selectivities", s.selectivities);
    s.queries_per_selectivity = j.value("queries_per_selectivity", s.queries_per_selectivity);
    s.limit = j.value("limit", s.limit);
    s.dim_rows = j.value("dim_rows", s.dim_rows);
    for (const auto& c : j.at("columns")) {
      ColumnSpec cs;
      cs.name = c.at("name").get<std::string>();
      cs.type = parse_type(c.value("type", std::string("int64")));
      cs.distribution = c.value("distribution", cs.distribution);
      cs.cardinality = c.value("cardinality", cs.cardinality);
      cs.null_fraction = c.value("null_fraction", cs.null_fraction);
      s.columns.push_back(cs);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed generator spec: ") + e.what());
  }
  if (s.cluster_column.empty() && !s.columns.empty()) s.cluster_column = s.columns[0].name;
  s.validate();
  return s;
}

namespace gen_detail {

inline std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) { return bounded_random(rng, n); }

inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Cumulative Zipf(s = 1.1) weights over ranks 0..n-1.
inline std::vector<double> zipf_cdf(std::uint64_t n) {
  std::vector<double> cdf(n);
  double acc = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    acc += 1.0 / std::pow(static_cast<double>(i + 1), 1.1);
    cdf[i] = acc;
  }
  for (double& c : cdf) c /= acc;
  return cdf;
}

inline Value make_value(const ColumnSpec& c, std::uint64_t rank) {
  switch (c.type) {
    case Type::Int64: return Value(static_cast<std::int64_t>(rank));
    case Type::Float64: return Value(static_cast<double>(rank) + 0.5);
    default: {
      std::string digits = std::to_string(rank);
      std::string width = std::to_string(c.cardinality - 1);
      return Value("v" + std::string(width.size() - std::min(width.size(), digits.size()), '0') + digits);
    }
  }
}

inline std::string sql_literal(const Value& v) {
  if (v.type() != Type::Utf8) return v.to_string();
  std::string out = "'";
  for (char ch : v.as_string()) out += ch == '\'' ? std::string("''") : std::string(1, ch);
  return out + "'";
}

}  // namespace gen_detail

/// Rows of the main table, clustered: sorted on the cluster column, then
/// round((1 - clustering) * rows) seeded random swaps.
inline std::vector<Row> generate_rows(const GeneratorSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::vector<std::vector<double>> cdfs;
  for (const auto& c : spec.columns) cdfs.push_back(c.distribution == "zipf" ? gen_detail::zipf_cdf(c.cardinality) : std::vector<double>{});
  std::vector<Row> rows(spec.rows);
  for (std::uint64_t r = 0; r < spec.rows; ++r) {
    for (std::size_t c = 0; c < spec.columns.size(); ++c) {
      const ColumnSpec& cs = spec.columns[c];
      double null_draw = gen_detail::unit(rng);
      std::uint64_t rank;
      if (cs.distribution == "sequential") {
        rank = r % cs.cardinality;
      } else if (cs.distribution == "zipf") {
        double u = gen_detail::unit(rng);
        rank = static_cast<std::uint64_t>(std::lower_bound(cdfs[c].begin(), cdfs[c].end(), u) - cdfs[c].begin());
        rank = std::min(rank, cs.cardinality - 1);
      } else {
        rank = gen_detail::below(rng, cs.cardinality);
      }
      rows[r].push_back(null_draw < cs.null_fraction ? Value::null() : gen_detail::make_value(cs, rank));
    }
  }
  std::size_t key = 0;
  for (std::size_t c = 0; c < spec.columns.size(); ++c) {
    if (spec.columns[c].name == spec.cluster_column) key = c;
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [key](const Row& a, const Row& b) { return compare_nulls_last(a[key], b[key]) < 0; });
  auto swaps = static_cast<std::uint64_t>(std::llround((1.0 - spec.clustering) * static_cast<double>(spec.rows)));
  for (std::uint64_t s = 0; s < swaps; ++s) {
    std::uint64_t i = gen_detail::below(rng, spec.rows), j = gen_detail::below(rng, spec.rows);
    std::swap(rows[i], rows[j]);
  }
  return rows;
}

inline TableSchema generator_schema(const GeneratorSpec& spec) {
  std::vector<ColumnDef> cols;
  for (const auto& c : spec.columns) cols.push_back({c.name, c.type});
  return TableSchema(std::move(cols));
}

struct GeneratedQuery {
  std::string kind;  // "range" | "limit" | "topk" | "join"
  std::string sql;
  double selectivity = 0;  // exact fraction of main-table rows the range predicate keeps
};

struct Benchmark {
  Catalog catalog;
  std::vector<GeneratedQuery> queries;
};

/// Deterministic dataset plus query manifest for `spec`.
inline Benchmark generate_benchmark(const GeneratorSpec& spec) {
  Benchmark b;
  std::vector<Row> rows = generate_rows(spec);
  std::size_t key = 0;
  for (std::size_t c = 0; c < spec.columns.size(); ++c) {
    if (spec.columns[c].name == spec.cluster_column) key = c;
  }
  std::vector<Value> sorted;
  for (const auto& r : rows) {
    if (!r[key].is_null()) sorted.push_back(r[key]);
  }
  std::sort(sorted.begin(), sorted.end(), [](const Value& a, const Value& b) { return less(a, b); });
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::string& kc = spec.cluster_column;

  auto range_of = [&](double s) {
    std::uint64_t width = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(s * static_cast<double>(sorted.size()))));
    width = std::min<std::uint64_t>(width, sorted.size());
    std::uint64_t start = gen_detail::below(rng, sorted.size() - width + 1);
    Value lo = sorted[start], hi = sorted[start + width - 1];
    std::uint64_t hits = 0;
    for (const auto& r : rows) {
      if (!r[key].is_null() && !less(r[key], lo) && !less(hi, r[key])) ++hits;
    }
    std::string pred = kc + " >= " + gen_detail::sql_literal(lo) + " AND " + kc + " <= " + gen_detail::sql_literal(hi);
    return std::make_pair(pred, static_cast<double>(hits) / static_cast<double>(rows.size()));
  };

  if (!sorted.empty()) {
    for (double s : spec.selectivities) {
      for (std::uint64_t q = 0; q < spec.queries_per_selectivity; ++q) {
        auto [pred, sel] = range_of(s);
        b.queries.push_back({"range", "SELECT * FROM " + spec.table + " WHERE " + pred, sel});
        b.queries.push_back({"limit", "SELECT * FROM " + spec.table + " WHERE " + pred + " LIMIT " + std::to_string(spec.limit), sel});
      }
    }
    // Top-k on the cluster column, optionally filtered on another column.
    std::string other = spec.columns.size() > 1 ? spec.columns[1].name : "";
    for (std::uint64_t q = 0; q < spec.queries_per_selectivity; ++q) {
      std::string where;
      if (!other.empty() && q % 2 == 1) where = " WHERE " + other + " IS NOT NULL";
      b.queries.push_back({"topk", "SELECT * FROM " + spec.table + where + " ORDER BY " + kc + (q % 3 == 2 ? " ASC" : " DESC") + " LIMIT " + std::to_string(spec.limit), 1.0});
    }
  }

  if (spec.dim_rows > 0 && !sorted.empty()) {
    std::vector<Row> dim;
    for (std::uint64_t i = 0; i < spec.dim_rows; ++i) {
      dim.push_back({sorted[gen_detail::below(rng, sorted.size())], Value("L" + std::to_string(i % 4))});
    }
    const ColumnDef& kdef = generator_schema(spec)[key];
    TableSchema ds({{"key", kdef.type}, {"label", Type::Utf8}});
    b.catalog.add(build_table("dim", ds, std::move(dim), std::max<std::uint64_t>(1, spec.dim_rows)));
    for (int label = 0; label < 4; ++label) {
      std::string l = "'L" + std::to_string(label) + "'";
      b.queries.push_back({"join", "SELECT * FROM dim JOIN " + spec.table + " ON dim.key = " + spec.table + "." + kc + " WHERE dim.label = " + l, 1.0});
    }
  }
  b.catalog.add(build_table(spec.table, generator_schema(spec), std::move(rows), spec.partition_rows));
  return b;
}

inline nlohmann::json manifest_to_json(const GeneratorSpec& spec, const Benchmark& b) {
  nlohmann::json qs = nlohmann::json::array();
  for (std::size_t i = 0; i < b.queries.size(); ++i) {
    qs.push_back({{"id", i}, {"kind", b.queries[i].kind}, {"sql", b.queries[i].sql}, {"selectivity", b.queries[i].selectivity}});
  }
  return {{"seed", spec.seed}, {"clustering", spec.clustering}, {"cluster_column", spec.cluster_column},
          {"tables", b.catalog.names()}, {"queries", qs}};
}

/// Writes the tables (catalog layout) and `manifest.json` into `dir`.
inline void write_benchmark(const GeneratorSpec& spec, const Benchmark& b, const std::filesystem::path& dir) {
  for (const auto& name : b.catalog.names()) save_table(b.catalog.at(name), dir);
  std::ofstream m(dir / "manifest.json", std::ios::binary);
  m << manifest_to_json(spec, b).dump(2) << "\n";
  if (!m) throw InputError("cannot write manifest into '" + dir.string() + "'");
}

/// Fraction of partition pairs whose [min, max] ranges on `column` overlap.
inline double range_overlap_fraction(const Table& t, const std::string& column) {
  std::vector<const ColumnStats*> st;
  for (PartitionId id : t.partition_ids()) {
    const ColumnStats* s = t.stats(id, column);
    if (s && s->min && s->max) st.push_back(s);
  }
  if (st.size() < 2) return 0;
  std::uint64_t pairs = 0, overlapping = 0;
  for (std::size_t i = 0; i < st.size(); ++i) {
    for (std::size_t j = i + 1; j < st.size(); ++j) {
      ++pairs;
      if (!less(*st[i]->max, *st[j]->min) && !less(*st[j]->max, *st[i]->min)) ++overlapping;
    }
  }
  return static_cast<double>(overlapping) / static_cast<double>(pairs);
}

}  // namespace prunedb
